//! Root analysis of the umbilic alignment cubics: the zeros locate the
//! directions where the conjugate distribution aligns with a cone generatrix,
//! one CDC per root.

use crate::error::{CoreError, Result};
use crate::numerics::cubic_real_roots;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UmbilicKind {
    Minus,
    Plus,
}

/// Real roots of the D4 alignment cubic for radial chamber parameters
/// a = r1/r3, b = r2/r3.
///
/// Minus kind: p(x2) = -1/2 (a-1) x2^3 + 1/2 b x2^2 - 1/2 (a+3) x2 + 1/2 b,
/// admissible for a^2 + b^2 < 1; always three roots, one in each interval
/// cut by the A3 directions at +-1/sqrt(3).
///
/// Plus kind: p(x3) = -x3^3 - b x3^2 + a x3 + 1, admissible for a b > 1.
pub fn d4_root_analysis(a: f64, b: f64, kind: UmbilicKind) -> Result<Vec<f64>> {
    match kind {
        UmbilicKind::Minus => {
            if a * a + b * b >= 1.0 {
                return Err(CoreError::OutsideChamber(format!(
                    "minus kind needs a^2 + b^2 < 1, got {}",
                    a * a + b * b
                )));
            }
            let roots =
                cubic_real_roots(-0.5 * (a - 1.0), 0.5 * b, -0.5 * (a + 3.0), 0.5 * b);
            if roots.len() != 3 {
                return Err(CoreError::InvalidArgument(format!(
                    "elliptic umbilic cubic returned {} real roots",
                    roots.len()
                )));
            }
            Ok(roots)
        }
        UmbilicKind::Plus => {
            if a * b <= 1.0 {
                return Err(CoreError::OutsideChamber(format!(
                    "plus kind needs a b > 1, got {}",
                    a * b
                )));
            }
            Ok(cubic_real_roots(-1.0, -b, a, 1.0))
        }
    }
}

/// Sturm-derived boundary between one and three real roots of the plus-kind
/// cubic: p3 = -9 a^2 b^2 - 36 a^3 - 36 b^3 - 162 a b + 243.
pub fn d4_plus_discriminant(a: f64, b: f64) -> f64 {
    -9.0 * a * a * b * b - 36.0 * a * a * a - 36.0 * b * b * b - 162.0 * a * b + 243.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const INV_SQRT3: f64 = 0.577_350_269_189_625_8;

    #[test]
    fn minus_at_origin_gives_symmetric_roots() {
        let r = d4_root_analysis(0.0, 0.0, UmbilicKind::Minus).unwrap();
        assert_eq!(r.len(), 3);
        assert_abs_diff_eq!(r[0], -(3.0f64.sqrt()), epsilon = 1e-12);
        assert_abs_diff_eq!(r[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[2], 3.0f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn minus_roots_sit_one_per_interval() {
        let r = d4_root_analysis(0.3, 0.2, UmbilicKind::Minus).unwrap();
        assert!(r[0] < -INV_SQRT3);
        assert!(r[1] > -INV_SQRT3 && r[1] < INV_SQRT3);
        assert!(r[2] > INV_SQRT3);
        // full admissible grid
        for i in 0..20 {
            for j in 0..20 {
                let a = -0.9 + 1.8 * i as f64 / 19.0;
                let b = -0.9 + 1.8 * j as f64 / 19.0;
                if a * a + b * b >= 1.0 {
                    continue;
                }
                let r = d4_root_analysis(a, b, UmbilicKind::Minus).unwrap();
                assert!(r[0] < -INV_SQRT3, "a={a} b={b} roots {r:?}");
                assert!(r[1].abs() < INV_SQRT3, "a={a} b={b} roots {r:?}");
                assert!(r[2] > INV_SQRT3, "a={a} b={b} roots {r:?}");
            }
        }
    }

    #[test]
    fn minus_rejects_outside_chamber() {
        assert!(d4_root_analysis(0.9, 0.9, UmbilicKind::Minus).is_err());
    }

    #[test]
    fn plus_type_one_chamber() {
        // a, b > 0 with ab > 1: one positive root, two negative straddling -1
        let r = d4_root_analysis(2.0, 2.0, UmbilicKind::Plus).unwrap();
        assert_eq!(r.len(), 3);
        assert!(r[0] < -1.0 && r[1] > -1.0 && r[1] < 0.0, "roots {r:?}");
        assert!(r[2] > 0.0);
        // (2, 2) factors exactly: roots 1 and (-3 +- sqrt 5)/2
        assert_abs_diff_eq!(r[2], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r[0], (-3.0 - 5.0f64.sqrt()) / 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r[1], (-3.0 + 5.0f64.sqrt()) / 2.0, epsilon = 1e-10);
    }

    #[test]
    fn plus_root_count_follows_discriminant() {
        // p3 is -9 times the cubic discriminant: p3 > 0 means one real root
        for (a, b) in [(-2.0, -1.2), (-4.0, -0.5), (-4.0, -4.0), (-5.0, -4.5), (2.0, 2.0)] {
            if a * b <= 1.0 {
                continue;
            }
            let r = d4_root_analysis(a, b, UmbilicKind::Plus).unwrap();
            let p3 = d4_plus_discriminant(a, b);
            if p3 > 1e-9 {
                assert_eq!(r.len(), 1, "a={a} b={b} p3={p3}");
            } else if p3 < -1e-9 {
                assert_eq!(r.len(), 3, "a={a} b={b} p3={p3}");
            }
        }
        // both possibilities genuinely occur in the type II chamber
        assert!(d4_plus_discriminant(-2.0, -1.2) > 0.0);
        assert!(d4_plus_discriminant(-4.0, -4.0) < 0.0);
    }

    #[test]
    fn plus_rejects_outside_chamber() {
        assert!(d4_root_analysis(0.5, 0.5, UmbilicKind::Plus).is_err());
    }
}
