//! Cut times along characteristic rays: bisection on the minimizing
//! predicate, sharpened by a secant solve against the competing branch, and
//! the first-hit time rho_S against a sampled singular set.

use serde::Serialize;

use super::shooting::ShootingTable;
use super::{solve_at_with, BranchId, MinimizerHit, Problem, ProblemSource};
use crate::error::{CoreError, Result};
use crate::geometry::{Shape, Vec2, TAU};
use crate::numerics;

/// Tolerance of the minimizing predicate u(F(t,z)) = g(z) + t.
pub const PREDICATE_TOL: f64 = 1e-7;
/// |det dF| below this at the cut point flags a conjugate-type cut.
pub const CONJUGATE_DET_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CutReason {
    MultipleMinimizers,
    Conjugate,
    DomainExit,
}

#[derive(Debug, Clone, Serialize)]
pub struct CutRecord {
    pub z: f64,
    pub t_cut: f64,
    pub reason: CutReason,
}

/// Value of one fixed branch at the point x, refined locally. The `seed`
/// carries the branch identity and a warm-start parameter.
pub fn branch_value(
    problem: &Problem,
    seed: &MinimizerHit,
    x: Vec2,
    shooting: Option<&ShootingTable>,
) -> Option<f64> {
    let m = &problem.manifold;
    match (&problem.source, seed.branch) {
        (ProblemSource::TorusLattice { p, b }, BranchId::Translate(mi, ni)) => {
            if let Shape::FlatTorus { periods } = &m.shape {
                let t = Vec2::new(mi as f64 * periods[0], ni as f64 * periods[1]);
                Some((x - p - t).norm() + b[0] * t.x + b[1] * t.y)
            } else {
                None
            }
        }
        (ProblemSource::Boundary(data), BranchId::Component(ci)) => {
            let comp = &m.boundary_components[ci];
            let f = |s: f64| -> f64 {
                m.distance_oracle(x, comp.point(s)).unwrap_or(f64::INFINITY) + data.value(ci, s)
            };
            let w = 0.3;
            let (_, v) = numerics::golden_min(f, seed.param - w, seed.param + w, 1e-12);
            Some(v)
        }
        (ProblemSource::Point { p }, BranchId::Direction(_)) => match &m.shape {
            Shape::Sphere { radius } => {
                // every geodesic between two sphere points runs on one great
                // circle; the competing branch is the complementary arc
                let d = m.distance_oracle(*p, x).ok()?;
                Some(TAU * radius - d)
            }
            Shape::Ellipsoid { .. } => {
                let table = shooting?;
                let conns = table.connect(x).ok()?;
                conns
                    .iter()
                    .find(|c| circ_dist(c.theta, seed.param) < 0.5)
                    .or(conns.first())
                    .map(|c| c.length)
            }
            _ => m.distance_oracle(*p, x).ok(),
        },
        _ => None,
    }
}

fn circ_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Does a minimizer hit belong to the ray (component, z) itself?
fn is_own_branch(problem: &Problem, component: usize, z: f64, hit: &MinimizerHit) -> bool {
    match (&problem.source, hit.branch) {
        (ProblemSource::Boundary(_), BranchId::Component(ci)) => {
            ci == component && circ_dist(hit.param, z) < 5.0 * super::DELTA_SEP
        }
        (ProblemSource::TorusLattice { .. }, BranchId::Translate(mi, ni)) => mi == 0 && ni == 0,
        (ProblemSource::Point { .. }, BranchId::Direction(_)) => circ_dist(hit.param, z) < 0.3,
        _ => false,
    }
}

/// Cut time of the ray (component, z): bisection of the predicate
/// d(source, F(t,z)) = g(z) + t, then a secant against the first competing
/// branch, which stays sharp even when the two branches osculate.
pub fn cut_time(
    problem: &Problem,
    component: usize,
    z: f64,
    t_cap: f64,
    shooting: Option<&ShootingTable>,
) -> Result<CutRecord> {
    let fam = problem.ray_family(component, 1e-11);
    let traj = fam.trajectory(z, t_cap)?;
    let t_hi = traj.exit_time.unwrap_or(t_cap).min(traj.t_end());
    let g0 = match &problem.source {
        ProblemSource::Boundary(data) => data.value(component, z),
        _ => 0.0,
    };
    let wrap = |t: f64| problem.manifold.wrap(traj.chart_at(t));

    let defect = |t: f64| -> Result<f64> {
        let sol = solve_at_with(problem, wrap(t), shooting)?;
        Ok((g0 + t) - sol.u)
    };

    // predicate holds while defect <= PREDICATE_TOL
    let d_hi = defect(t_hi * (1.0 - 1e-9))?;
    if d_hi <= PREDICATE_TOL {
        // still minimizing at the domain exit (or the cap)
        return Ok(CutRecord { z, t_cut: t_hi, reason: CutReason::DomainExit });
    }
    // the lower bracket stays clear of the source, where shooting-based
    // backends degenerate; rays always minimize well inside the injectivity
    // radius of the test manifolds
    let mut lo = (0.05 * t_hi).min(0.25);
    let mut hi = t_hi;
    if defect(lo)? > PREDICATE_TOL {
        lo = 1e-6 * t_hi;
        if defect(lo)? > PREDICATE_TOL {
            return Err(CoreError::InvalidArgument(format!(
                "ray (component {component}, z {z}) is not minimizing even at t -> 0"
            )));
        }
    }
    for _ in 0..48 {
        let mid = 0.5 * (lo + hi);
        if defect(mid)? <= PREDICATE_TOL {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-9 {
            break;
        }
    }
    let mut t_cut = 0.5 * (lo + hi);

    // competing branch just past the cut
    let probe = wrap((t_cut + 1e-4).min(t_hi));
    let sol = solve_at_with(problem, probe, shooting)?;
    let other = sol
        .minimizers
        .iter()
        .find(|h| !is_own_branch(problem, component, z, h))
        .cloned();

    if let Some(seed) = other {
        // secant on f(t) = branch_value(F(t,z)) - (g0 + t); the root is the
        // exact tie between the two branches. On the sphere the competing
        // branch is the complementary arc of the ray's own great circle, so
        // its value along the ray is 2 pi R - t; the generic evaluator would
        // collapse onto the ray itself past the antipode.
        let sphere_complement = match (&problem.source, &problem.manifold.shape) {
            (ProblemSource::Point { .. }, Shape::Sphere { radius }) => Some(TAU * radius),
            _ => None,
        };
        let f = |t: f64| -> f64 {
            if let Some(circ_len) = sphere_complement {
                return (circ_len - t) - (g0 + t);
            }
            match branch_value(problem, &seed, wrap(t), shooting) {
                Some(v) => v - (g0 + t),
                None => f64::NAN,
            }
        };
        let mut t0 = t_cut - 1e-4;
        let mut t1 = t_cut + 1e-4;
        let mut f0 = f(t0);
        let mut f1 = f(t1);
        for _ in 0..40 {
            if !f0.is_finite() || !f1.is_finite() || f0 == f1 {
                break;
            }
            let t2 = (t1 - f1 * (t1 - t0) / (f1 - f0)).clamp(0.0, t_hi);
            t0 = t1;
            f0 = f1;
            t1 = t2;
            f1 = f(t1);
            if (t1 - t0).abs() < 1e-13 {
                break;
            }
        }
        if f1.is_finite() && f1.abs() < 1e-7 {
            t_cut = t1;
        }
    }

    // fourth characterization: the cut is the first branch tie or the first
    // conjugate time, whichever comes first. Near the cut-locus endpoints the
    // competing branches merge into the ray and no tie is resolvable, but the
    // conjugate time takes over there.
    if let Ok(events) = crate::conjugate::detect_conjugate_events(
        &fam,
        z,
        t_hi,
        crate::conjugate::ORDER_REL_TOL,
    ) {
        if let Some(first) = events.first() {
            if first.ray.t < t_cut {
                t_cut = first.ray.t;
            }
        }
    }

    let det_scale = (0..8)
        .map(|i| traj.det_at(t_cut * (i as f64 + 1.0) / 8.0).abs())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let reason = if traj.det_at(t_cut).abs() <= CONJUGATE_DET_TOL * det_scale {
        CutReason::Conjugate
    } else if other_exists(problem, component, z, wrap(t_cut), shooting)? {
        CutReason::MultipleMinimizers
    } else if (t_cut - t_hi).abs() < 1e-6 {
        CutReason::DomainExit
    } else {
        CutReason::MultipleMinimizers
    };
    Ok(CutRecord { z, t_cut, reason })
}

fn other_exists(
    problem: &Problem,
    component: usize,
    z: f64,
    x: Vec2,
    shooting: Option<&ShootingTable>,
) -> Result<bool> {
    let sol = solve_at_with(problem, x, shooting)?;
    Ok(sol.minimizers.iter().any(|h| !is_own_branch(problem, component, z, h)))
}

/// First time the ray (component, z) enters the delta-neighborhood of the
/// sampled set, or None if it never does before t_cap / the domain exit.
pub fn rho_to_cloud(
    problem: &Problem,
    component: usize,
    z: f64,
    cloud: &[Vec2],
    delta: f64,
    t_cap: f64,
) -> Result<Option<f64>> {
    if cloud.is_empty() {
        return Ok(None);
    }
    let fam = problem.ray_family(component, 1e-10);
    let traj = fam.trajectory(z, t_cap)?;
    let t_hi = traj.exit_time.unwrap_or(t_cap).min(traj.t_end());
    let m = &problem.manifold;
    let dist_to_cloud = |t: f64| -> f64 {
        let p = m.wrap(traj.chart_at(t));
        cloud
            .iter()
            .map(|s| m.distance_oracle(p, *s).unwrap_or(f64::INFINITY))
            .fold(f64::INFINITY, f64::min)
    };
    let step = (delta * 0.5).max(t_hi / 4096.0);
    let mut t = 0.0;
    let mut prev = dist_to_cloud(0.0) - delta;
    while t < t_hi {
        let tn = (t + step).min(t_hi);
        let cur = dist_to_cloud(tn) - delta;
        if cur <= 0.0 {
            let hit = if prev > 0.0 {
                numerics::bisect(|tt| dist_to_cloud(tt) - delta, t, tn, 1e-9)
            } else {
                tn
            };
            return Ok(Some(hit));
        }
        prev = cur;
        t = tn;
    }
    Ok(None)
}

/// rho_S with the predicate refinement: when the cloud is the problem's own
/// singular set, the first entry time is the cut time, which the minimizing
/// predicate locates far more sharply than the geometric hit.
pub fn rho_s(
    problem: &Problem,
    component: usize,
    z: f64,
    cloud: &[Vec2],
    delta: f64,
    t_cap: f64,
    refine_with_predicate: bool,
) -> Result<Option<f64>> {
    let coarse = rho_to_cloud(problem, component, z, cloud, delta, t_cap)?;
    if !refine_with_predicate {
        return Ok(coarse);
    }
    match coarse {
        None => Ok(None),
        Some(_) => {
            let rec = cut_time(problem, component, z, t_cap, None)?;
            Ok(Some(rec.t_cut))
        }
    }
}
