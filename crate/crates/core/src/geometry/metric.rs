//! Metric fields evaluated in chart coordinates.

use nalgebra::{Matrix2, Vector2, Vector3};

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Riemannian,
    Finsler,
}

/// Pointwise norm data for the built-in test metrics. Chart conventions:
/// flat metrics use plane coordinates, the sphere and ellipsoid use
/// (colatitude, longitude).
#[derive(Debug, Clone)]
pub enum MetricField {
    Euclidean,
    /// Constant diagonal Riemannian metric; handy in tests.
    ConstDiag { diag: [f64; 2] },
    /// Translation-invariant Randers norm |v| + <drift, v>.
    Randers { drift: [f64; 2] },
    Sphere { radius: f64 },
    Ellipsoid { semiaxes: [f64; 3] },
}

impl MetricField {
    pub fn kind(&self) -> MetricKind {
        match self {
            MetricField::Randers { .. } => MetricKind::Finsler,
            _ => MetricKind::Riemannian,
        }
    }

    /// The metric tensor at p, for Riemannian kinds.
    pub fn tensor(&self, p: Vec2) -> Matrix2<f64> {
        match self {
            MetricField::Euclidean => Matrix2::identity(),
            MetricField::ConstDiag { diag } => Matrix2::new(diag[0], 0.0, 0.0, diag[1]),
            MetricField::Randers { .. } => {
                panic!("Randers norm has no metric tensor")
            }
            MetricField::Sphere { radius } => {
                let st = p.x.sin();
                Matrix2::new(radius * radius, 0.0, 0.0, radius * radius * st * st)
            }
            MetricField::Ellipsoid { semiaxes } => {
                let (e, f, g) = ellipsoid_first_form(*semiaxes, p.x, p.y);
                Matrix2::new(e, f, f, g)
            }
        }
    }

    /// phi_p(v), the Finsler norm of v at p.
    pub fn norm(&self, p: Vec2, v: Vec2) -> f64 {
        match self {
            MetricField::Randers { drift } => {
                v.norm() + drift[0] * v.x + drift[1] * v.y
            }
            _ => {
                let g = self.tensor(p);
                (v.dot(&(g * v))).max(0.0).sqrt()
            }
        }
    }

    /// dphi/dv at (p, v). Analytic for every built-in metric; the
    /// finite-difference fallback covers future additions.
    pub fn norm_grad_v(&self, p: Vec2, v: Vec2) -> Vec2 {
        match self {
            MetricField::Randers { drift } => {
                let n = v.norm();
                Vec2::new(v.x / n + drift[0], v.y / n + drift[1])
            }
            _ => {
                let g = self.tensor(p);
                let gv = g * v;
                let phi = (v.dot(&gv)).max(0.0).sqrt();
                gv / phi
            }
        }
    }

    /// dphi/dv by central differences, step 1e-6 (1 + |v|). Used as a test
    /// oracle against the analytic gradients.
    pub fn norm_grad_v_fd(&self, p: Vec2, v: Vec2) -> Vec2 {
        let h = 1e-6 * (1.0 + v.norm());
        let mut out = Vec2::zeros();
        for i in 0..2 {
            let mut vp = v;
            let mut vm = v;
            vp[i] += h;
            vm[i] -= h;
            out[i] = (self.norm(p, vp) - self.norm(p, vm)) / (2.0 * h);
        }
        out
    }

    /// The dual one form of v at p: w_j = phi(v) dphi/dv_j, so that
    /// w(v) = phi(v)^2 and w kills the hyperplane tangent to the indicatrix.
    pub fn dual_one_form(&self, p: Vec2, v: Vec2) -> Vec2 {
        let phi = self.norm(p, v);
        self.norm_grad_v(p, v) * phi
    }

    /// Maximize the covector w over the indicatrix; inverse of the duality
    /// map up to scale. Returns the unit vector attaining the max.
    pub fn dual_argmax(&self, p: Vec2, w: Vec2) -> Vec2 {
        let f = |a: f64| {
            let u = Vec2::new(a.cos(), a.sin());
            let x = u / self.norm(p, u);
            -(w.x * x.x + w.y * x.y)
        };
        // coarse scan then golden refinement
        let n = 256;
        let mut best = (0.0f64, f64::INFINITY);
        for i in 0..n {
            let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            let fa = f(a);
            if fa < best.1 {
                best = (a, fa);
            }
        }
        let w_half = 2.0 * std::f64::consts::PI / n as f64;
        let (a, _) = crate::numerics::golden_min(f, best.0 - w_half, best.0 + w_half, 1e-12);
        let u = Vec2::new(a.cos(), a.sin());
        u / self.norm(p, u)
    }

    /// Strict-convexity guard: sampled midpoints of indicatrix chords must be
    /// strictly inside the unit ball.
    pub fn indicatrix_is_strictly_convex(&self, p: Vec2, samples: usize) -> bool {
        let pts: Vec<Vec2> = (0..samples)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / samples as f64;
                let u = Vec2::new(a.cos(), a.sin());
                u / self.norm(p, u)
            })
            .collect();
        for i in 0..samples {
            let mid = (pts[i] + pts[(i + 1) % samples]) * 0.5;
            if self.norm(p, mid) >= 1.0 {
                return false;
            }
        }
        true
    }
}

/// First fundamental form of the ellipsoid (a sin t cos s, b sin t sin s, c cos t)
/// at colatitude t, longitude s.
pub fn ellipsoid_first_form(semiaxes: [f64; 3], t: f64, s: f64) -> (f64, f64, f64) {
    let [a, b, c] = semiaxes;
    let (st, ct) = t.sin_cos();
    let (ss, cs) = s.sin_cos();
    let rt = Vec3::new(a * ct * cs, b * ct * ss, -c * st);
    let rs = Vec3::new(-a * st * ss, b * st * cs, 0.0);
    (rt.dot(&rt), rt.dot(&rs), rs.dot(&rs))
}

/// Chart (colatitude, longitude) to embedding coordinates.
pub fn ellipsoid_embed(semiaxes: [f64; 3], p: Vec2) -> Vec3 {
    let [a, b, c] = semiaxes;
    let (st, ct) = p.x.sin_cos();
    let (ss, cs) = p.y.sin_cos();
    Vec3::new(a * st * cs, b * st * ss, c * ct)
}

/// Embedding coordinates back to the chart.
pub fn ellipsoid_unembed(semiaxes: [f64; 3], x: Vec3) -> Vec2 {
    let [a, b, c] = semiaxes;
    let u = Vec3::new(x.x / a, x.y / b, x.z / c).normalize();
    let t = u.z.clamp(-1.0, 1.0).acos();
    let s = u.y.atan2(u.x);
    Vec2::new(t, s)
}

/// Chart tangent vector to the embedded tangent vector.
pub fn ellipsoid_push(semiaxes: [f64; 3], p: Vec2, v: Vec2) -> Vec3 {
    let [a, b, c] = semiaxes;
    let (st, ct) = p.x.sin_cos();
    let (ss, cs) = p.y.sin_cos();
    let rt = Vec3::new(a * ct * cs, b * ct * ss, -c * st);
    let rs = Vec3::new(-a * st * ss, b * st * cs, 0.0);
    rt * v.x + rs * v.y
}

/// Embedded tangent vector back to chart components (least squares on the
/// coordinate frame; exact for vectors tangent to the surface).
pub fn ellipsoid_pull(semiaxes: [f64; 3], p: Vec2, u: Vec3) -> Vec2 {
    let [a, b, c] = semiaxes;
    let (st, ct) = p.x.sin_cos();
    let (ss, cs) = p.y.sin_cos();
    let rt = Vec3::new(a * ct * cs, b * ct * ss, -c * st);
    let rs = Vec3::new(-a * st * ss, b * st * cs, 0.0);
    let e = rt.dot(&rt);
    let f = rt.dot(&rs);
    let g = rs.dot(&rs);
    let bt = rt.dot(&u);
    let bs = rs.dot(&u);
    let det = e * g - f * f;
    Vec2::new((g * bt - f * bs) / det, (e * bs - f * bt) / det)
}
