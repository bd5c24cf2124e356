//! Singular-set extraction from a sampled viscosity solution. The minimizing
//! branch is piecewise smooth; the singular set is the locus where the best
//! branch changes, found by scanning grid edges for branch jumps and
//! bisecting the branch-value tie along each crossing edge. Cells whose
//! corners see three or more branches are refined to the meeting vertex.

use rayon::prelude::*;

use super::cut::{branch_value, cut_time, CutReason};
use super::shooting::ShootingTable;
use super::{solve_at_with, BranchId, GridSolution, MinimizerHit, Problem, ProblemSource};
use crate::error::Result;
use crate::geometry::{Shape, Vec2, TAU};

/// Primary-branch parameter jumps above this flag a crossing edge even when
/// the branch id is unchanged (a footpoint sweep across the far side).
const PARAM_JUMP: f64 = 0.3;

#[derive(Debug, Clone)]
pub struct SingularSample {
    pub point: Vec2,
    /// Tied minimizers at the refined point; h from each side is their value.
    pub branches: Vec<MinimizerHit>,
    pub vertex: bool,
    /// True when the sample came from a conjugate-reason cut endpoint.
    pub conjugate: bool,
}

#[derive(Debug, Clone)]
pub struct SingularSet {
    pub samples: Vec<SingularSample>,
    pub grid_spacing: f64,
}

fn branches_differ(a: &(BranchId, f64), b: &(BranchId, f64)) -> bool {
    if a.0 != b.0 {
        // direction sectors are a discretization of a continuum: only treat
        // far-apart sectors as distinct branches
        if let (BranchId::Direction(_), BranchId::Direction(_)) = (a.0, b.0) {
            return circ(a.1, b.1) > PARAM_JUMP;
        }
        return true;
    }
    circ(a.1, b.1) > PARAM_JUMP
}

fn circ(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Extract the singular set of the solution: edge crossings, multi-branch
/// vertices, and conjugate cut endpoints.
pub fn singular_set_extract(
    problem: &Problem,
    grid: &GridSolution,
    shooting: Option<&ShootingTable>,
) -> Result<SingularSet> {
    // continuum point sources on curved manifolds localize their cut by rays
    let use_edges = !matches!(
        (&problem.source, &problem.manifold.shape),
        (ProblemSource::Point { .. }, Shape::Sphere { .. })
            | (ProblemSource::Point { .. }, Shape::Ellipsoid { .. })
    );

    let mut samples: Vec<SingularSample> = Vec::new();
    if use_edges {
        let primary = |i: usize, j: usize| -> Option<(BranchId, f64, MinimizerHit)> {
            let k = grid.index(i, j);
            if !grid.mask[k] || !grid.u[k].is_finite() {
                return None;
            }
            grid.minimizers[k].first().map(|h| (h.branch, h.param, h.clone()))
        };

        // horizontal and vertical edges in parallel rows
        let rows: Vec<Vec<SingularSample>> = (0..grid.ny)
            .into_par_iter()
            .map(|j| {
                let mut out = Vec::new();
                for i in 0..grid.nx {
                    for (di, dj) in [(1usize, 0usize), (0, 1)] {
                        let (i2, j2) = (i + di, j + dj);
                        if i2 >= grid.nx || j2 >= grid.ny {
                            continue;
                        }
                        let (a, b) = match (primary(i, j), primary(i2, j2)) {
                            (Some(a), Some(b)) => (a, b),
                            _ => continue,
                        };
                        if !branches_differ(&(a.0, a.1), &(b.0, b.1)) {
                            continue;
                        }
                        let pa = grid.point(i, j);
                        let pb = grid.point(i2, j2);
                        if let Some(s) =
                            refine_edge_crossing(problem, &a.2, &b.2, pa, pb, shooting)
                        {
                            out.push(s);
                        }
                    }
                }
                out
            })
            .collect();
        for r in rows {
            samples.extend(r);
        }

        // vertices: cells whose corners carry 3+ distinct branches
        let mut vertices: Vec<SingularSample> = Vec::new();
        for j in 0..grid.ny.saturating_sub(1) {
            for i in 0..grid.nx.saturating_sub(1) {
                let corners: Vec<(BranchId, f64, MinimizerHit)> = [(0, 0), (1, 0), (0, 1), (1, 1)]
                    .iter()
                    .filter_map(|(di, dj)| primary(i + di, j + dj))
                    .collect();
                if corners.len() < 4 {
                    continue;
                }
                let mut distinct: Vec<(BranchId, f64, MinimizerHit)> = Vec::new();
                for c in &corners {
                    if !distinct.iter().any(|d| !branches_differ(&(d.0, d.1), &(c.0, c.1))) {
                        distinct.push(c.clone());
                    }
                }
                if distinct.len() < 3 {
                    continue;
                }
                let center = (grid.point(i, j) + grid.point(i + 1, j + 1)) * 0.5;
                if let Some(v) = refine_vertex(
                    problem,
                    &distinct[0].2,
                    &distinct[1].2,
                    &distinct[2].2,
                    center,
                    grid.spacing(),
                    shooting,
                ) {
                    // dedup against vertices from neighboring cells
                    if !vertices.iter().any(|o| (o.point - v.point).norm() < 0.5 * grid.spacing())
                    {
                        vertices.push(v);
                    }
                }
            }
        }
        samples.extend(vertices);
    }

    // conjugate-reason cut endpoints (the sphere antipode and friends)
    if matches!(
        (&problem.source, &problem.manifold.shape),
        (ProblemSource::Point { .. }, Shape::Sphere { .. })
    ) {
        let n = 64;
        let pts: Vec<Option<SingularSample>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let z = TAU * i as f64 / n as f64;
                let rec = cut_time(problem, 0, z, 4.0 * diameter_guess(problem), shooting).ok()?;
                if rec.reason != CutReason::Conjugate {
                    return None;
                }
                let fam = problem.ray_family(0, 1e-11);
                let traj = fam.trajectory(z, rec.t_cut + 1e-3).ok()?;
                let p = problem.manifold.wrap(traj.chart_at(rec.t_cut));
                let sol = solve_at_with(problem, p, shooting).ok()?;
                Some(SingularSample {
                    point: p,
                    branches: sol.minimizers,
                    vertex: false,
                    conjugate: true,
                })
            })
            .collect();
        samples.extend(pts.into_iter().flatten());
    }

    Ok(SingularSet { samples, grid_spacing: grid.spacing() })
}

fn diameter_guess(problem: &Problem) -> f64 {
    match &problem.manifold.shape {
        Shape::Sphere { radius } => std::f64::consts::PI * radius,
        Shape::Ellipsoid { semiaxes } => {
            std::f64::consts::PI * semiaxes.iter().cloned().fold(0.0f64, f64::max)
        }
        Shape::FlatTorus { periods } => periods[0].max(periods[1]),
        Shape::Annulus { r_outer, .. } => 2.0 * r_outer,
        Shape::Disk { radius } => 2.0 * radius,
        _ => 4.0,
    }
}

/// Bisect the tie h_A = h_B along the edge [pa, pb].
fn refine_edge_crossing(
    problem: &Problem,
    a: &MinimizerHit,
    b: &MinimizerHit,
    pa: Vec2,
    pb: Vec2,
    shooting: Option<&ShootingTable>,
) -> Option<SingularSample> {
    let f = |s: f64| -> f64 {
        let x = pa + (pb - pa) * s;
        match (branch_value(problem, a, x, shooting), branch_value(problem, b, x, shooting)) {
            (Some(ha), Some(hb)) => ha - hb,
            _ => f64::NAN,
        }
    };
    let f0 = f(0.0);
    let f1 = f(1.0);
    if !f0.is_finite() || !f1.is_finite() || (f0 < 0.0) == (f1 < 0.0) {
        return None;
    }
    let s = crate::numerics::bisect(f, 0.0, 1.0, 1e-10);
    let x = pa + (pb - pa) * s;
    let sol = solve_at_with(problem, x, shooting).ok()?;
    if sol.minimizers.len() < 2 {
        // re-solve with a looser tie window: the crossing is exact but the
        // global solve may see one side marginally lower
        let mut loose = problem.clone();
        loose.eps_min = problem.eps_min.max(1e-7);
        let sol2 = solve_at_with(&loose, x, shooting).ok()?;
        if sol2.minimizers.len() >= 2 {
            return Some(SingularSample {
                point: x,
                branches: sol2.minimizers,
                vertex: false,
                conjugate: false,
            });
        }
    }
    Some(SingularSample { point: x, branches: sol.minimizers, vertex: false, conjugate: false })
}

/// Newton solve for h_A = h_B = h_C from a cell center.
fn refine_vertex(
    problem: &Problem,
    a: &MinimizerHit,
    b: &MinimizerHit,
    c: &MinimizerHit,
    start: Vec2,
    spacing: f64,
    shooting: Option<&ShootingTable>,
) -> Option<SingularSample> {
    let g = |x: Vec2| -> Option<Vec2> {
        let ha = branch_value(problem, a, x, shooting)?;
        let hb = branch_value(problem, b, x, shooting)?;
        let hc = branch_value(problem, c, x, shooting)?;
        Some(Vec2::new(ha - hb, ha - hc))
    };
    let mut x = start;
    let h = 1e-7 * (1.0 + spacing);
    for _ in 0..24 {
        let gx = g(x)?;
        if gx.norm() < 1e-11 {
            break;
        }
        let gxp = g(x + Vec2::new(h, 0.0))?;
        let gyp = g(x + Vec2::new(0.0, h))?;
        let j = nalgebra::Matrix2::new(
            (gxp.x - gx.x) / h,
            (gyp.x - gx.x) / h,
            (gxp.y - gx.y) / h,
            (gyp.y - gx.y) / h,
        );
        let step = j.try_inverse()? * gx;
        x -= step;
        if (x - start).norm() > 3.0 * spacing {
            return None;
        }
    }
    let mut loose = problem.clone();
    loose.eps_min = problem.eps_min.max(1e-7);
    let sol = solve_at_with(&loose, x, shooting).ok()?;
    if sol.minimizers.len() < 3 {
        return None;
    }
    Some(SingularSample { point: x, branches: sol.minimizers, vertex: true, conjugate: false })
}

/// JSON export: point list with the R_p unit vectors.
pub fn singular_set_json(set: &SingularSet) -> serde_json::Value {
    serde_json::json!({
        "grid_spacing": set.grid_spacing,
        "points": set.samples.iter().map(|s| {
            serde_json::json!({
                "p": [s.point.x, s.point.y],
                "n_minimizers": s.branches.len(),
                "vertex": s.vertex,
                "conjugate": s.conjugate,
                "r_p": s.branches.iter()
                    .map(|h| [h.direction.x, h.direction.y])
                    .collect::<Vec<_>>(),
                "h_sides": s.branches.iter().map(|h| h.value).collect::<Vec<_>>(),
            })
        }).collect::<Vec<_>>(),
    })
}
