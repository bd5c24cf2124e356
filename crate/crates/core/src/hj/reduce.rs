//! Reduction of a problem with boundary data g to a plain distance problem:
//! extend the manifold backward along characteristics, trace the zero level
//! of the extended solution, and check u = d(Lambda, .) on the original
//! domain. Implemented for flat charts, where backward characteristics are
//! straight lines.

use super::{check_compatibility, solve_at, BoundaryData, Problem, ProblemSource};
use crate::error::{CoreError, Result};
use crate::flow::characteristic_field;
use crate::geometry::{Shape, Vec2};
use crate::numerics::golden_min;

/// The zero level set of the extended solution, sampled densely per
/// component, with the analytic curve kept callable for refinement.
pub struct Reduction {
    problem: Problem,
    data: BoundaryData,
    pub depth: f64,
    /// Dense samples of Lambda per component.
    pub lambda: Vec<Vec<Vec2>>,
}

/// Extend backward along characteristics and trace Lambda = {u~ = 0}.
/// Backward rays are checked pairwise for crossings down to the needed depth.
pub fn extend_and_reduce(problem: &Problem) -> Result<Reduction> {
    let data = match &problem.source {
        ProblemSource::Boundary(d) => d.clone(),
        _ => {
            return Err(CoreError::InvalidArgument(
                "the reduction needs boundary data".into(),
            ))
        }
    };
    if !matches!(
        problem.manifold.shape,
        Shape::Disk { .. } | Shape::Annulus { .. } | Shape::EuclideanPlane
    ) {
        return Err(CoreError::InvalidArgument(
            "backward extension is implemented on flat charts".into(),
        ));
    }
    let report = check_compatibility(problem)?;
    if !report.ok {
        return Err(CoreError::Compatibility { margin: report.margin });
    }

    let m = &problem.manifold;
    let n = 2048usize;
    let mut lambda = Vec::new();
    let mut gmax = f64::NEG_INFINITY;
    let mut gmin = f64::INFINITY;
    for (ci, comp) in m.boundary_components.iter().enumerate() {
        let period = comp.period();
        for i in 0..n {
            let s = period * i as f64 / n as f64;
            let gv = data.value(ci, s);
            gmax = gmax.max(gv);
            gmin = gmin.min(gv);
        }
    }
    let depth = (gmax - gmin).max(1e-9) * 1.1;

    for (ci, comp) in m.boundary_components.iter().enumerate() {
        let period = comp.period();
        let gfun = &data.g[ci];
        // backward ray endpoints for the crossing check, then Lambda samples
        let mut rays: Vec<(Vec2, Vec2)> = Vec::with_capacity(n);
        let mut lam: Vec<Vec2> = Vec::with_capacity(n);
        for i in 0..n {
            let s = period * i as f64 / n as f64;
            let gamma = characteristic_field(m, ci, gfun, s)?;
            let c = comp.point(s);
            rays.push((c, c - gamma * depth));
            lam.push(c - gamma * data.value(ci, s));
        }
        // adjacent backward segments must not intersect
        for i in 0..n {
            let a = &rays[i];
            let b = &rays[(i + 1) % n];
            if let Some(t) = segments_cross(a.0, a.1, b.0, b.1) {
                return Err(CoreError::BackwardCrossing { depth: t * depth });
            }
        }
        lambda.push(lam);
    }
    Ok(Reduction { problem: problem.clone(), data, depth, lambda })
}

impl Reduction {
    /// d(Lambda, x): nearest dense sample refined by golden section on the
    /// analytic curve s -> c(s) - g(s) Gamma(s).
    pub fn distance_to_lambda(&self, x: Vec2) -> Result<f64> {
        let m = &self.problem.manifold;
        let mut best = f64::INFINITY;
        for (ci, lam) in self.lambda.iter().enumerate() {
            let comp = &m.boundary_components[ci];
            let period = comp.period();
            let n = lam.len();
            let mut bi = 0usize;
            let mut bd = f64::INFINITY;
            for (i, q) in lam.iter().enumerate() {
                let d = (x - q).norm();
                if d < bd {
                    bd = d;
                    bi = i;
                }
            }
            let gfun = self.data.g[ci].clone();
            let offs = self.data.offsets.get(ci).copied().unwrap_or(0.0);
            let curve = |s: f64| -> f64 {
                let gamma = match characteristic_field(m, ci, &gfun, s) {
                    Ok(g) => g,
                    Err(_) => return f64::INFINITY,
                };
                let q = comp.point(s) - gamma * (gfun.eval(s) + offs);
                (x - q).norm()
            };
            let s0 = period * bi as f64 / n as f64;
            let w = period / n as f64;
            let (_, d) = golden_min(curve, s0 - w, s0 + w, 1e-12);
            best = best.min(d);
        }
        Ok(best)
    }

    /// sup |u - d(Lambda, .)| over an n x n probe grid restricted to the
    /// region where the extended solution is nonnegative.
    pub fn verify(&self, n: usize) -> Result<f64> {
        let m = &self.problem.manifold;
        let (xw, yw) = super::default_grid_window(m);
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let p = Vec2::new(
                    xw[0] + (xw[1] - xw[0]) * i as f64 / (n - 1) as f64,
                    yw[0] + (yw[1] - yw[0]) * j as f64 / (n - 1) as f64,
                );
                if m.signed_interior_distance(p) <= 1e-6 {
                    continue;
                }
                let u = solve_at(&self.problem, p)?.u;
                if u < 0.0 {
                    continue;
                }
                let d = self.distance_to_lambda(p)?;
                worst = worst.max((u - d).abs());
            }
        }
        Ok(worst)
    }
}

/// Parametric crossing of segments ab and cd, ignoring the shared-endpoint
/// region; returns the parameter along ab when they properly intersect.
fn segments_cross(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> Option<f64> {
    let r = b - a;
    let s = d - c;
    let denom = r.x * s.y - r.y * s.x;
    if denom.abs() < 1e-15 {
        return None;
    }
    let t = ((c - a).x * s.y - (c - a).y * s.x) / denom;
    let u = ((c - a).x * r.y - (c - a).y * r.x) / denom;
    if t > 1e-9 && t < 1.0 - 1e-9 && u > 1e-9 && u < 1.0 - 1e-9 {
        Some(t)
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// semiconcavity
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, serde::Serialize)]
pub struct SemiconcavityReport {
    /// Smallest C such that the linear-modulus bound holds on the samples.
    pub min_feasible_c: f64,
    /// Largest positive defect seen (0 for concave restrictions).
    pub max_defect: f64,
}

/// Scan the semiconcavity defect of u along the given chart segments:
/// lam u(x) + (1 - lam) u(y) - u(lam x + (1 - lam) y), at several scales.
pub fn semiconcavity_check(
    problem: &Problem,
    segments: &[(Vec2, Vec2)],
    n: usize,
) -> Result<SemiconcavityReport> {
    let mut min_c = 0.0f64;
    let mut max_defect = 0.0f64;
    for (a, b) in segments {
        for scale_i in 0..4 {
            let scale = 1.0 / (1 << scale_i) as f64;
            for i in 0..n {
                let base = i as f64 / n as f64 * (1.0 - scale);
                let x = a + (b - a) * base;
                let y = a + (b - a) * (base + scale);
                if problem.manifold.signed_interior_distance(x) < 1e-9
                    || problem.manifold.signed_interior_distance(y) < 1e-9
                {
                    continue;
                }
                let ux = solve_at(problem, x)?.u;
                let uy = solve_at(problem, y)?.u;
                for lam in [0.25, 0.5, 0.75] {
                    let mid = x * lam + y * (1.0 - lam);
                    if problem.manifold.signed_interior_distance(mid) < 1e-9 {
                        continue;
                    }
                    let um = solve_at(problem, mid)?.u;
                    let defect = lam * ux + (1.0 - lam) * uy - um;
                    let denom = lam * (1.0 - lam) * (x - y).norm_squared();
                    if denom > 1e-18 && defect > 0.0 {
                        max_defect = max_defect.max(defect);
                        min_c = min_c.max(defect / denom);
                    }
                }
            }
        }
    }
    Ok(SemiconcavityReport { min_feasible_c: min_c, max_defect })
}
