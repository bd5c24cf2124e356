//! Scalar root finding and 1D minimization helpers used throughout the engine.

/// Bisection on a sign change. `f(a)` and `f(b)` must have opposite signs.
/// Returns the midpoint of the final bracket of width `<= xtol`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> f64 {
    let mut fa = f(a);
    let fb = f(b);
    debug_assert!(
        fa == 0.0 || fb == 0.0 || (fa < 0.0) != (fb < 0.0),
        "bisect requires a sign change: f({a}) = {fa}, f({b}) = {fb}"
    );
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= xtol {
            return m;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Bisection refined by secant steps once the bracket is small; for smooth f
/// this reaches roughly machine accuracy in the root.
pub fn brent_like<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> f64 {
    let coarse = bisect(&mut f, a, b, (b - a).abs().max(xtol) * 1e-3);
    // polish with secant from two nearby points
    let h = ((b - a).abs() * 1e-3).max(xtol);
    let mut x0 = coarse - 0.5 * h;
    let mut x1 = coarse + 0.5 * h;
    let mut f0 = f(x0);
    let mut f1 = f(x1);
    for _ in 0..60 {
        if (x1 - x0).abs() <= xtol || f1 == f0 {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        if !x2.is_finite() {
            break;
        }
        // keep the iterate inside the original bracket
        let x2 = x2.clamp(a.min(b), a.max(b));
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f(x1);
        if f1 == 0.0 {
            return x1;
        }
    }
    x1
}

/// Golden-section minimization of a unimodal function on [a, b].
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    if fc < fx && fc < fd {
        (c, fc)
    } else if fd < fx {
        (d, fd)
    } else {
        (x, fx)
    }
}

/// Real roots of the cubic c3 x^3 + c2 x^2 + c1 x + c0, ascending order.
/// Trigonometric/Cardano form; degenerate leading coefficients fall back to
/// the quadratic/linear case.
pub fn cubic_real_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> Vec<f64> {
    let scale = c3.abs().max(c2.abs()).max(c1.abs()).max(c0.abs());
    if scale == 0.0 {
        return vec![];
    }
    if c3.abs() < 1e-14 * scale {
        return quadratic_real_roots(c2, c1, c0);
    }
    // normalize: x^3 + a x^2 + b x + c
    let a = c2 / c3;
    let b = c1 / c3;
    let c = c0 / c3;
    // depressed cubic t^3 + p t + q with x = t - a/3
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let shift = -a / 3.0;
    let disc = (q / 2.0) * (q / 2.0) + (p / 3.0) * (p / 3.0) * (p / 3.0);
    let mut roots = if disc > 1e-14 * (q * q + p * p * p.abs()).max(1e-300) {
        // one real root
        let sq = disc.sqrt();
        let u = cbrt(-q / 2.0 + sq);
        let v = cbrt(-q / 2.0 - sq);
        vec![u + v + shift]
    } else if p.abs() < 1e-13 * (1.0 + q.abs()) {
        // triple-ish root
        vec![cbrt(-q) + shift]
    } else {
        // three real roots (Viete)
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let mut r: Vec<f64> = (0..3)
            .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + shift)
            .collect();
        r.sort_by(|x, y| x.partial_cmp(y).unwrap());
        r
    };
    // one Newton polish per root
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let fx = ((c3 * *r + c2) * *r + c1) * *r + c0;
            let dfx = (3.0 * c3 * *r + 2.0 * c2) * *r + c1;
            if dfx.abs() > 1e-30 {
                *r -= fx / dfx;
            }
        }
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots
}

fn cbrt(x: f64) -> f64 {
    x.signum() * x.abs().powf(1.0 / 3.0)
}

/// Real roots of c2 x^2 + c1 x + c0, ascending.
pub fn quadratic_real_roots(c2: f64, c1: f64, c0: f64) -> Vec<f64> {
    if c2.abs() < 1e-14 * (c1.abs() + c0.abs()).max(1e-300) {
        if c1.abs() == 0.0 {
            return vec![];
        }
        return vec![-c0 / c1];
    }
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc < 0.0 {
        return vec![];
    }
    let sq = disc.sqrt();
    // numerically stable split
    let q = -0.5 * (c1 + c1.signum() * sq);
    let mut r = if q == 0.0 {
        vec![0.0, 0.0]
    } else {
        vec![q / c2, c0 / q]
    };
    r.sort_by(|x, y| x.partial_cmp(y).unwrap());
    r
}

/// Format a float with 9 significant digits. Interchange files use this
/// everywhere so re-running a job reproduces artifacts byte for byte.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".to_string()
        } else if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let s = format!("{:.8e}", x);
    // prettify numbers in a moderate range: 1.23456789e2 -> 123.456789
    let mag = x.abs();
    if (1e-4..1e9).contains(&mag) {
        let formatted = format!("{:.*}", decimals_for(mag), x);
        trim_zeros(&formatted)
    } else {
        s
    }
}

fn decimals_for(mag: f64) -> usize {
    let int_digits = if mag >= 1.0 { mag.log10().floor() as i64 + 1 } else { 0 };
    (9 - int_digits).max(0) as usize + if mag < 1.0 { extra_leading_zeros(mag) } else { 0 }
}

fn extra_leading_zeros(mag: f64) -> usize {
    // digits needed before the first significant digit for mag < 1
    let mut count = 0;
    let mut m = mag;
    while m < 0.1 && count < 8 {
        m *= 10.0;
        count += 1;
    }
    count
}

fn trim_zeros(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    let t = s.trim_end_matches('0');
    let t = t.trim_end_matches('.');
    t.to_string()
}
