//! Canonical model exponential maps (fold, cusp, swallowtail, umbilics) with
//! analytic Jacobians and an injected constant radial field. These are the
//! fixtures for the singularity classifier and the conjugate-flow tracer.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelClass {
    A2,
    A3,
    A4,
    D4Plus,
    D4Minus,
}

/// A canonical model map together with a constant radial field.
#[derive(Debug, Clone)]
pub struct ModelMap {
    pub class: ModelClass,
    pub dim: usize,
    /// Injected radial field r0 (constant over the neighborhood).
    pub radial: DVector<f64>,
}

impl ModelMap {
    /// The model map for a singularity class, with a default radial field in
    /// the class's admissible chamber.
    pub fn canonical(class: ModelClass) -> ModelMap {
        match class {
            ModelClass::A2 => ModelMap {
                class,
                dim: 2,
                radial: DVector::from_vec(vec![1.0, 0.0]),
            },
            ModelClass::A3 => ModelMap {
                class,
                dim: 2,
                radial: DVector::from_vec(vec![0.0, 1.0]),
            },
            ModelClass::A4 => ModelMap {
                class,
                dim: 3,
                radial: DVector::from_vec(vec![0.0, 0.0, 1.0]),
            },
            ModelClass::D4Plus => ModelMap {
                class,
                dim: 3,
                radial: DVector::from_vec(vec![2.0, 2.0, 1.0]),
            },
            ModelClass::D4Minus => ModelMap {
                class,
                dim: 3,
                radial: DVector::from_vec(vec![0.0, 0.0, 1.0]),
            },
        }
    }

    pub fn with_radial(mut self, radial: Vec<f64>) -> ModelMap {
        self.radial = DVector::from_vec(radial);
        self
    }

    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = x.clone();
        match self.class {
            ModelClass::A2 => {
                y[0] = x[0] * x[0];
            }
            ModelClass::A3 => {
                y[0] = x[0] * x[0] * x[0] - x[0] * x[1];
            }
            ModelClass::A4 => {
                y[0] = x[0].powi(4) + x[0] * x[0] * x[1] + x[0] * x[2];
            }
            ModelClass::D4Minus => {
                y[0] = 0.5 * x[0] * x[0] - 0.5 * x[1] * x[1] + x[0] * x[2];
                y[1] = -x[0] * x[1] + x[1] * x[2];
            }
            ModelClass::D4Plus => {
                y[0] = 0.5 * x[0] * x[0] + x[1] * x[2];
                y[1] = 0.5 * x[1] * x[1] + x[0] * x[2];
            }
        }
        y
    }

    pub fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut j = DMatrix::identity(self.dim, self.dim);
        match self.class {
            ModelClass::A2 => {
                j[(0, 0)] = 2.0 * x[0];
            }
            ModelClass::A3 => {
                j[(0, 0)] = 3.0 * x[0] * x[0] - x[1];
                j[(0, 1)] = -x[0];
            }
            ModelClass::A4 => {
                j[(0, 0)] = 4.0 * x[0].powi(3) + 2.0 * x[0] * x[1] + x[2];
                j[(0, 1)] = x[0] * x[0];
                j[(0, 2)] = x[0];
            }
            ModelClass::D4Minus => {
                j[(0, 0)] = x[0] + x[2];
                j[(0, 1)] = -x[1];
                j[(0, 2)] = x[0];
                j[(1, 0)] = -x[1];
                j[(1, 1)] = -x[0] + x[2];
                j[(1, 2)] = x[1];
            }
            ModelClass::D4Plus => {
                j[(0, 0)] = x[0];
                j[(0, 1)] = x[2];
                j[(0, 2)] = x[1];
                j[(1, 0)] = x[2];
                j[(1, 1)] = x[1];
                j[(1, 2)] = x[0];
            }
        }
        j
    }

    pub fn det(&self, x: &DVector<f64>) -> f64 {
        match self.class {
            ModelClass::A2 => 2.0 * x[0],
            ModelClass::A3 => 3.0 * x[0] * x[0] - x[1],
            ModelClass::A4 => 4.0 * x[0].powi(3) + 2.0 * x[0] * x[1] + x[2],
            ModelClass::D4Minus => x[2] * x[2] - x[0] * x[0] - x[1] * x[1],
            ModelClass::D4Plus => x[0] * x[1] - x[2] * x[2],
        }
    }

    /// Gradient of det; the conjugate set is its zero level.
    pub fn det_grad(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim);
        match self.class {
            ModelClass::A2 => {
                g[0] = 2.0;
            }
            ModelClass::A3 => {
                g[0] = 6.0 * x[0];
                g[1] = -1.0;
            }
            ModelClass::A4 => {
                g[0] = 12.0 * x[0] * x[0] + 2.0 * x[1];
                g[1] = 2.0 * x[0];
                g[2] = 1.0;
            }
            ModelClass::D4Minus => {
                g[0] = -2.0 * x[0];
                g[1] = -2.0 * x[1];
                g[2] = 2.0 * x[2];
            }
            ModelClass::D4Plus => {
                g[0] = x[1];
                g[1] = x[0];
                g[2] = -2.0 * x[2];
            }
        }
        g
    }

    /// Unit kernel direction(s) of the Jacobian at x, by singular value
    /// threshold relative to the largest singular value.
    pub fn kernel(&self, x: &DVector<f64>, rel_tol: f64) -> Vec<DVector<f64>> {
        kernel_of(&self.jacobian(x), rel_tol)
    }
}

/// Null vectors of a small matrix by SVD with a relative threshold.
pub fn kernel_of(j: &DMatrix<f64>, rel_tol: f64) -> Vec<DVector<f64>> {
    let svd = j.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let vt = svd.v_t.as_ref().expect("svd with v_t");
    let mut out = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s <= rel_tol * smax.max(1e-300) {
            out.push(vt.row(i).transpose());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(parts: &[f64]) -> DVector<f64> {
        DVector::from_vec(parts.to_vec())
    }

    #[test]
    fn canonical_values() {
        let a2 = ModelMap::canonical(ModelClass::A2);
        let y = a2.eval(&v(&[0.3, 1.2]));
        assert_abs_diff_eq!(y[0], 0.09, epsilon = 1e-15);
        assert_abs_diff_eq!(y[1], 1.2, epsilon = 1e-15);

        let a4 = ModelMap::canonical(ModelClass::A4);
        let y = a4.eval(&v(&[1.0, 1.0, 1.0]));
        assert_abs_diff_eq!(y[0], 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(y[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(y[2], 1.0, epsilon = 1e-15);

        let d4m = ModelMap::canonical(ModelClass::D4Minus);
        let y = d4m.eval(&v(&[1.0, 1.0, 0.0]));
        assert_abs_diff_eq!(y[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(y[1], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(y[2], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let h = 1e-6;
        for class in [
            ModelClass::A2,
            ModelClass::A3,
            ModelClass::A4,
            ModelClass::D4Plus,
            ModelClass::D4Minus,
        ] {
            let m = ModelMap::canonical(class);
            let x = DVector::from_fn(m.dim, |i, _| 0.21 + 0.13 * i as f64);
            let j = m.jacobian(&x);
            for c in 0..m.dim {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[c] += h;
                xm[c] -= h;
                let fd = (m.eval(&xp) - m.eval(&xm)) / (2.0 * h);
                for r in 0..m.dim {
                    assert_abs_diff_eq!(j[(r, c)], fd[r], epsilon = 1e-8);
                }
            }
            // det field consistent with the Jacobian determinant
            assert_abs_diff_eq!(m.det(&x), m.jacobian(&x).determinant(), epsilon = 1e-12);
        }
    }

    #[test]
    fn kernels_at_origin() {
        let a3 = ModelMap::canonical(ModelClass::A3);
        let k = a3.kernel(&v(&[0.0, 0.0]), 1e-7);
        assert_eq!(k.len(), 1);
        assert_abs_diff_eq!(k[0][0].abs(), 1.0, epsilon = 1e-12);

        let d4p = ModelMap::canonical(ModelClass::D4Plus);
        let k = d4p.kernel(&v(&[0.0, 0.0, 0.0]), 1e-7);
        assert_eq!(k.len(), 2, "umbilic vertex has an order-2 kernel");
        for kv in &k {
            assert_abs_diff_eq!(kv[2], 0.0, epsilon = 1e-12);
        }
    }
}
