//! Balanced split loci: models built from boundary constants or torus
//! homology offsets, the split and balanced verifications, the structure
//! classification of singular points, and the (n-1)-current T with its
//! discrete boundary residual.

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::geometry::{Shape, Vec2, TAU};
use crate::hj::extract::{singular_set_extract, SingularSample, SingularSet};
use crate::hj::{
    check_compatibility, lax_oleinik_solve, solve_at, BoundaryData, BranchId, MinimizerHit,
    Problem, ProblemSource,
};

/// Cleave components can have at most this many tied branches before the
/// point is treated as non-generic remainder.
const MAX_CROSSING_BRANCHES: usize = 6;
/// Turning-angle gate for the greedy polyline chaining.
const CHAIN_MAX_ANGLE: f64 = 30.0 * std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PointClass {
    Cleave,
    Edge,
    DegenerateCleave,
    Crossing,
    Remainder,
}

#[derive(Debug, Clone, Serialize)]
pub enum SplitParameter {
    BoundaryConstants(Vec<f64>),
    TorusHomology([f64; 2]),
}

#[derive(Debug, Clone)]
pub struct SplitSample {
    pub point: Vec2,
    pub branches: Vec<MinimizerHit>,
    pub conjugate_flags: Vec<bool>,
    pub class: PointClass,
    pub vertex: bool,
}

/// A sampled split-locus candidate with per-point limit vectors, h values
/// from each side, classification, and chained cleave components.
pub struct SplitLocusModel {
    pub problem: Problem,
    pub parameter: SplitParameter,
    pub samples: Vec<SplitSample>,
    /// Chained cleave polylines as sample-index lists.
    pub components: Vec<Vec<usize>>,
    pub grid_spacing: f64,
}

// ---------------------------------------------------------------------------
// builders
// ---------------------------------------------------------------------------

/// Balanced split locus from per-component boundary constants a.
pub fn build_split_locus_from_constants(
    problem_manifold: &crate::geometry::ChartedManifold,
    g: Vec<crate::flow::ScalarFn1>,
    a: Vec<f64>,
    grid_n: usize,
) -> Result<SplitLocusModel> {
    let data = BoundaryData { g, offsets: a.clone() };
    let problem = Problem::new(problem_manifold.clone(), ProblemSource::Boundary(data));
    let report = check_compatibility(&problem)?;
    if !report.ok {
        return Err(CoreError::Compatibility { margin: report.margin });
    }
    let grid = lax_oleinik_solve(&problem, grid_n)?;
    let set = singular_set_extract(&problem, &grid, None)?;
    finish_model(problem, SplitParameter::BoundaryConstants(a), set)
}

/// Balanced split locus on the flat torus from the homology parameter b:
/// the point-source problem lifted to the covering plane with offsets
/// <b, T> per lattice translate.
pub fn build_torus_family(
    manifold: &crate::geometry::ChartedManifold,
    source: Vec2,
    b: [f64; 2],
    grid_n: usize,
) -> Result<SplitLocusModel> {
    if !matches!(manifold.shape, Shape::FlatTorus { .. }) {
        return Err(CoreError::Config("the homology family lives on the flat torus".into()));
    }
    let problem = Problem::new(manifold.clone(), ProblemSource::TorusLattice { p: source, b });
    let report = check_compatibility(&problem)?;
    if !report.ok {
        return Err(CoreError::Compatibility { margin: report.margin });
    }
    let grid = lax_oleinik_solve(&problem, grid_n)?;
    let set = singular_set_extract(&problem, &grid, None)?;
    finish_model(problem, SplitParameter::TorusHomology(b), set)
}

fn finish_model(
    problem: Problem,
    parameter: SplitParameter,
    set: SingularSet,
) -> Result<SplitLocusModel> {
    let samples: Vec<SplitSample> = set
        .samples
        .iter()
        .map(|s| {
            let flags = conjugacy_flags(&problem, s);
            let class = classify_sample(s, &flags);
            SplitSample {
                point: s.point,
                branches: s.branches.clone(),
                conjugate_flags: flags,
                class,
                vertex: s.vertex,
            }
        })
        .collect();
    let components = chain_cleave_components(&problem, &samples, set.grid_spacing);
    Ok(SplitLocusModel {
        problem,
        parameter,
        samples,
        components,
        grid_spacing: set.grid_spacing,
    })
}

/// Conjugacy of each minimizing ray at its arrival: det dF at (t, z).
/// Flat families admit closed forms; the sphere's polar family has det sin t.
fn conjugacy_flags(problem: &Problem, s: &SingularSample) -> Vec<bool> {
    let m = &problem.manifold;
    s.branches
        .iter()
        .map(|h| match (&problem.source, h.branch) {
            (ProblemSource::TorusLattice { .. }, _) => false,
            (ProblemSource::Point { .. }, _) => match &m.shape {
                Shape::Sphere { radius } => {
                    (h.distance / radius).sin().abs() < 1e-4
                }
                _ => false,
            },
            (ProblemSource::Boundary(_), BranchId::Component(ci)) => {
                // circle components focus at their center when rays run inward
                match &m.boundary_components[ci].kind {
                    crate::geometry::BoundaryKind::Circle { radius, inward, .. } => {
                        *inward > 0.0 && (h.distance - radius).abs() < 1e-4
                    }
                    _ => false,
                }
            }
            _ => false,
        })
        .collect()
}

/// Structure classification of one singular sample by its limit set.
fn classify_sample(s: &SingularSample, flags: &[bool]) -> PointClass {
    let n = s.branches.len();
    let n_conj = flags.iter().filter(|f| **f).count();
    if s.conjugate && n > MAX_CROSSING_BRANCHES {
        return PointClass::Remainder;
    }
    match n {
        0 => PointClass::Remainder,
        1 => {
            if n_conj == 1 {
                PointClass::Edge
            } else {
                PointClass::Remainder
            }
        }
        2 => {
            if n_conj == 0 {
                PointClass::Cleave
            } else {
                PointClass::DegenerateCleave
            }
        }
        _ => {
            if n > MAX_CROSSING_BRANCHES {
                return PointClass::Remainder;
            }
            // affine dimension of the dual set
            let w0 = s.branches[0].direction;
            let mut rank2 = false;
            for i in 1..n {
                for j in (i + 1)..n {
                    let u = s.branches[i].direction - w0;
                    let v = s.branches[j].direction - w0;
                    if (u.x * v.y - u.y * v.x).abs() > 1e-6 {
                        rank2 = true;
                    }
                }
            }
            if rank2 {
                PointClass::Crossing
            } else {
                PointClass::Remainder
            }
        }
    }
}

/// Class counts for reporting.
pub fn class_histogram(model: &SplitLocusModel) -> std::collections::BTreeMap<String, usize> {
    let mut h = std::collections::BTreeMap::new();
    for s in &model.samples {
        *h.entry(format!("{:?}", s.class)).or_insert(0) += 1;
    }
    h
}

// ---------------------------------------------------------------------------
// chaining
// ---------------------------------------------------------------------------

fn wrapped_diff(m: &crate::geometry::ChartedManifold, a: Vec2, b: Vec2) -> Vec2 {
    match &m.shape {
        Shape::FlatTorus { periods } => {
            let mut d = a - b;
            for (i, p) in periods.iter().enumerate() {
                d[i] -= (d[i] / p).round() * p;
            }
            d
        }
        _ => a - b,
    }
}

/// The unordered pair of branch identities a cleave sample ties between.
/// One cleave sheet is exactly one such pair; chains never mix pairs.
fn branch_pair(s: &SplitSample) -> Option<(BranchId, BranchId)> {
    if s.branches.len() < 2 {
        return None;
    }
    let a = s.branches[0].branch;
    let b = s.branches[1].branch;
    Some(if a <= b { (a, b) } else { (b, a) })
}

/// Greedy nearest-neighbor chaining of cleave samples with a turning-angle
/// gate, restricted to a fixed branch pair; cleave sets are C1 hypersurfaces
/// so local chaining is justified.
fn chain_cleave_components(
    problem: &Problem,
    samples: &[SplitSample],
    spacing: f64,
) -> Vec<Vec<usize>> {
    let m = &problem.manifold;
    let idxs: Vec<usize> = samples
        .iter()
        .enumerate()
        .filter(|(_, s)| matches!(s.class, PointClass::Cleave | PointClass::DegenerateCleave))
        .map(|(i, _)| i)
        .collect();
    let mut used = vec![false; samples.len()];
    let mut components = Vec::new();
    let max_step = 2.5 * spacing;

    for &start in &idxs {
        if used[start] {
            continue;
        }
        used[start] = true;
        let mut chain = vec![start];
        // grow in both directions
        for dir in 0..2 {
            loop {
                let (end, prev) = if dir == 0 {
                    let last = *chain.last().unwrap();
                    let prev = if chain.len() >= 2 { Some(chain[chain.len() - 2]) } else { None };
                    (last, prev)
                } else {
                    let first = chain[0];
                    let prev = if chain.len() >= 2 { Some(chain[1]) } else { None };
                    (first, prev)
                };
                let pe = samples[end].point;
                let heading = prev.map(|p| {
                    let d = wrapped_diff(m, pe, samples[p].point);
                    d / d.norm().max(1e-300)
                });
                let pair_here = branch_pair(&samples[end]);
                let mut best: Option<(usize, f64)> = None;
                for &cand in &idxs {
                    if used[cand] {
                        continue;
                    }
                    if branch_pair(&samples[cand]) != pair_here {
                        continue;
                    }
                    let d = wrapped_diff(m, samples[cand].point, pe);
                    let dist = d.norm();
                    if dist > max_step || dist < 1e-12 {
                        continue;
                    }
                    if let Some(h) = heading {
                        let cosang = (d / dist).dot(&h);
                        if cosang < CHAIN_MAX_ANGLE.cos() {
                            continue;
                        }
                    }
                    if best.map(|(_, bd)| dist < bd).unwrap_or(true) {
                        best = Some((cand, dist));
                    }
                }
                match best {
                    Some((cand, _)) => {
                        used[cand] = true;
                        if dir == 0 {
                            chain.push(cand);
                        } else {
                            chain.insert(0, cand);
                        }
                    }
                    None => break,
                }
            }
        }
        if chain.len() >= 3 {
            components.push(chain);
        }
    }
    components
}

// ---------------------------------------------------------------------------
// verify: splits
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SplitReport {
    pub probes: usize,
    pub failures: Vec<([f64; 2], usize)>,
}

impl SplitReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// The split property for the model's own singular set: away from S, the
/// minimizing characteristic is unique, so the minimizer count at a probe is
/// the number of rays reaching it before S.
pub fn verify_splits(model: &SplitLocusModel, n_probe: usize) -> Result<SplitReport> {
    let problem = &model.problem;
    let (xw, yw) = crate::hj::default_grid_window(&problem.manifold);
    let mut failures = Vec::new();
    let mut probes = 0usize;
    for j in 0..n_probe {
        for i in 0..n_probe {
            let p = Vec2::new(
                xw[0] + (xw[1] - xw[0]) * (i as f64 + 0.37) / n_probe as f64,
                yw[0] + (yw[1] - yw[0]) * (j as f64 + 0.61) / n_probe as f64,
            );
            if problem.manifold.signed_interior_distance(p) < 1e-6 {
                continue;
            }
            // skip probes on or next to S: the count is ambiguous there
            let near_s = model
                .samples
                .iter()
                .any(|s| wrapped_diff(&problem.manifold, s.point, p).norm() < model.grid_spacing);
            if near_s {
                continue;
            }
            probes += 1;
            let sol = solve_at(problem, p)?;
            if sol.minimizers.len() != 1 {
                failures.push(([p.x, p.y], sol.minimizers.len()));
            }
        }
    }
    Ok(SplitReport { probes, failures })
}

/// The split property for an arbitrary candidate set S on the annulus: count
/// the characteristic rays that reach each probe before entering the
/// delta-neighborhood of S. Exercise for constructed counterexamples.
pub fn verify_splits_against_cloud(
    problem: &Problem,
    cloud: &[Vec2],
    delta: f64,
    n_probe: usize,
) -> Result<SplitReport> {
    let m = &problem.manifold;
    let (r_in, r_out) = match &m.shape {
        Shape::Annulus { r_inner, r_outer } => (*r_inner, *r_outer),
        _ => {
            return Err(CoreError::InvalidArgument(
                "cloud-gated split check is implemented for the annulus".into(),
            ))
        }
    };
    let mut failures = Vec::new();
    let mut probes = 0usize;
    for j in 0..n_probe {
        for i in 0..n_probe {
            let th = TAU * (i as f64 + 0.3) / n_probe as f64;
            let r = r_in + (r_out - r_in) * (j as f64 + 0.5) / n_probe as f64;
            let p = Vec2::new(r * th.cos(), r * th.sin());
            // skip probes inside the neighborhood of S
            if cloud.iter().any(|s| (s - p).norm() < delta) {
                continue;
            }
            probes += 1;
            // radial rays from both circles reach p; gate by the first entry
            // into the S-neighborhood
            let mut count = 0usize;
            for (t_arrive, t0, dir) in [
                (r - r_in, r_in, 1.0f64),
                (r_out - r, r_out, -1.0),
            ] {
                let mut blocked = false;
                let steps = 512;
                for k in 0..=steps {
                    let t = t_arrive * k as f64 / steps as f64;
                    let q = Vec2::new(
                        (t0 + dir * t) * th.cos(),
                        (t0 + dir * t) * th.sin(),
                    );
                    if t < t_arrive - 1e-9 && cloud.iter().any(|s| (s - q).norm() < delta) {
                        blocked = true;
                        break;
                    }
                }
                if !blocked {
                    count += 1;
                }
            }
            if count != 1 {
                failures.push(([p.x, p.y], count));
            }
        }
    }
    Ok(SplitReport { probes, failures })
}

// ---------------------------------------------------------------------------
// verify: balanced
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct BalancedReport {
    /// Worst gap between max_w w(v) and the dual carried by an approach.
    pub worst_defect: f64,
    /// Worst mismatch of the difference-quotient identity.
    pub worst_quotient_error: f64,
    pub inconclusive: bool,
}

/// Discrete balanced check: tangential approaches estimated from the eight
/// nearest samples (via a local tangent fit), carried vectors matched from
/// the neighbors' limit sets, plus the difference-quotient identity probed
/// transversally off the locus.
pub fn verify_balanced(model: &SplitLocusModel) -> Result<BalancedReport> {
    let problem = &model.problem;
    let m = &problem.manifold;
    let n = model.samples.len();
    if n < 16 {
        return Ok(BalancedReport {
            worst_defect: f64::NAN,
            worst_quotient_error: f64::NAN,
            inconclusive: true,
        });
    }
    let mut worst_defect = 0.0f64;
    let mut worst_quotient = 0.0f64;

    // membership map: tangential approaches live on the sample's own cleave
    // sheet, so neighbors come from the same chained component
    let mut component_of = vec![usize::MAX; n];
    for (ci, chain) in model.components.iter().enumerate() {
        for &i in chain {
            component_of[i] = ci;
        }
    }

    for (si, s) in model.samples.iter().enumerate() {
        if !matches!(s.class, PointClass::Cleave | PointClass::DegenerateCleave) {
            continue;
        }
        if component_of[si] == usize::MAX {
            continue;
        }
        // eight nearest neighbors on the same component
        let mut near: Vec<(usize, f64)> = model
            .samples
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != si && component_of[*i] == component_of[si])
            .map(|(i, o)| (i, wrapped_diff(m, o.point, s.point).norm()))
            .collect();
        near.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        near.truncate(8);
        if near.len() < 4 {
            continue;
        }
        let offsets: Vec<Vec2> =
            near.iter().map(|(i, _)| wrapped_diff(m, model.samples[*i].point, s.point)).collect();
        let tangent = match fit_tangent(&offsets) {
            Some(t) => t,
            None => continue, // junction-contaminated neighborhood
        };
        // tangential approaches are interior limits: the sample needs
        // same-sheet neighbors on both sides, else the one-sided fit degrades
        // at sheet endpoints
        let side_pos = offsets.iter().filter(|d| d.dot(&tangent) > 0.0).count();
        if side_pos == 0 || side_pos == offsets.len() {
            continue;
        }

        let duals: Vec<Vec2> = s
            .branches
            .iter()
            .map(|h| m.metric.dual_one_form(s.point, h.direction))
            .collect();

        // tangential approaches from each side
        for orient in [1.0f64, -1.0] {
            let v = tangent * orient;
            // the approach from direction -v: nearest neighbor on that side
            let carrier = near
                .iter()
                .filter(|(i, _)| {
                    let d = wrapped_diff(m, model.samples[*i].point, s.point);
                    d.dot(&v) < 0.0
                })
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            let carrier = match carrier {
                Some((i, _)) => &model.samples[*i],
                None => continue,
            };
            // carried limit vectors: the neighbor's branches matched into R_p
            let mut carried: Vec<Vec2> = Vec::new();
            for (bi, hb) in s.branches.iter().enumerate() {
                let matched = carrier.branches.iter().any(|hn| {
                    hn.branch == hb.branch
                        && {
                            let d = (hn.param - hb.param).rem_euclid(TAU);
                            d.min(TAU - d) < 0.2
                        }
                });
                if matched {
                    carried.push(duals[bi]);
                }
            }
            if carried.is_empty() {
                continue;
            }
            let wmax = duals.iter().map(|w| w.dot(&v)).fold(f64::NEG_INFINITY, f64::max);
            let wcar = carried.iter().map(|w| w.dot(&v)).fold(f64::INFINITY, f64::min);
            worst_defect = worst_defect.max(wmax - wcar);
        }

        // difference-quotient identity on transversal off-locus probes
        let normal = Vec2::new(-tangent.y, tangent.x);
        let step = 2.0 * model.grid_spacing;
        for orient in [1.0f64, -1.0] {
            let pn = s.point - normal * (orient * step);
            let pn = m.wrap(pn);
            if m.signed_interior_distance(pn) < 1e-6 {
                continue;
            }
            let v = normal * orient; // direction of the approach p_n -> p
            let un = solve_at(problem, pn)?.u;
            let us = solve_at(problem, s.point)?.u;
            let quotient = (us - un) / step;
            let wmax = duals.iter().map(|w| w.dot(&v)).fold(f64::NEG_INFINITY, f64::max);
            worst_quotient = worst_quotient.max((quotient - wmax).abs());
        }
    }
    Ok(BalancedReport {
        worst_defect,
        worst_quotient_error: worst_quotient,
        inconclusive: false,
    })
}

/// Tangent direction of a locus from neighbor offsets: PCA start, outliers
/// from other branches trimmed by their perpendicular offset, then the
/// quadratic graph fit rotates the frame until the linear term vanishes.
/// Chord-level tilt would swamp the balanced defect; this leaves an error of
/// second order in the sample spacing.
fn fit_tangent(offsets: &[Vec2]) -> Option<Vec2> {
    let pca = |pts: &[Vec2]| -> Vec2 {
        let (mut cxx, mut cxy, mut cyy) = (0.0, 0.0, 0.0);
        for d in pts {
            cxx += d.x * d.x;
            cxy += d.x * d.y;
            cyy += d.y * d.y;
        }
        let tr = cxx + cyy;
        let det = cxx * cyy - cxy * cxy;
        let lam = 0.5 * tr + (0.25 * tr * tr - det).max(0.0).sqrt();
        if cxy.abs() > 1e-18 {
            Vec2::new(lam - cyy, cxy).normalize()
        } else if cxx >= cyy {
            Vec2::new(1.0, 0.0)
        } else {
            Vec2::new(0.0, 1.0)
        }
    };
    let mut t = pca(offsets);
    // trim neighbors that clearly belong to another branch
    let mut kept: Vec<Vec2> = offsets.to_vec();
    for _ in 0..2 {
        let n = Vec2::new(-t.y, t.x);
        let filtered: Vec<Vec2> = kept
            .iter()
            .cloned()
            .filter(|d| d.dot(&n).abs() <= 0.4 * d.norm())
            .collect();
        if filtered.len() < 4 {
            return None;
        }
        t = pca(&filtered);
        kept = filtered;
    }
    // quadratic graph fit eta = a xi + b xi^2; the slope a corrects the frame
    for _ in 0..3 {
        let n = Vec2::new(-t.y, t.x);
        let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for d in &kept {
            let xi = d.dot(&t);
            let eta = d.dot(&n);
            s11 += xi * xi;
            s12 += xi * xi * xi;
            s22 += xi * xi * xi * xi;
            r1 += xi * eta;
            r2 += xi * xi * eta;
        }
        let det = s11 * s22 - s12 * s12;
        if det.abs() < 1e-18 {
            break;
        }
        let a = (s22 * r1 - s12 * r2) / det;
        t = (t + n * a).normalize();
        if a.abs() < 1e-12 {
            break;
        }
    }
    Some(t)
}

/// Balanced check for an explicit candidate locus on the annulus (used for
/// the off-center counterexample): R_p from the radial characteristics.
pub fn balanced_defect_of_annulus_cloud(
    problem: &Problem,
    cloud: &[Vec2],
) -> Result<f64> {
    let m = &problem.manifold;
    if !matches!(m.shape, Shape::Annulus { .. }) {
        return Err(CoreError::InvalidArgument("annulus only".into()));
    }
    let n = cloud.len();
    let mut worst = 0.0f64;
    for (i, p) in cloud.iter().enumerate() {
        // R_p of the candidate: radial in and radial out
        let rhat = *p / p.norm();
        let duals = [rhat, -rhat];
        // fitted tangent from the two neighbors on the closed polyline
        let prev = cloud[(i + n - 1) % n];
        let next = cloud[(i + 1) % n];
        let t = (next - prev).normalize();
        for orient in [1.0f64, -1.0] {
            let v = t * orient;
            let wmax = duals.iter().map(|w| w.dot(&v)).fold(f64::NEG_INFINITY, f64::max);
            // approaches along the polyline carry both vectors
            let wmin = duals.iter().map(|w| w.dot(&v)).fold(f64::INFINITY, f64::min);
            worst = worst.max(wmax - wmin);
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// the current T
// ---------------------------------------------------------------------------

/// Evaluate T(phi) = sum over cleave components of the line integral of
/// (h1 - h2) phi, phi a 1-form given by its chart components.
pub fn current_t_eval(
    model: &SplitLocusModel,
    phi: &dyn Fn(Vec2) -> Vec2,
) -> Result<f64> {
    let mut total = 0.0;
    for chain in &model.components {
        total += component_integral(model, chain, &mut |x, tangent, dh| {
            let f = phi(x);
            dh * (f.x * tangent.x + f.y * tangent.y)
        })?;
    }
    Ok(total)
}

/// The boundary residual: T(d sigma) for a test function sigma, with d sigma
/// by central finite differences.
pub fn boundary_residual(
    model: &SplitLocusModel,
    sigma: &dyn Fn(Vec2) -> f64,
) -> Result<f64> {
    let h = 1e-6;
    let dphi = move |x: Vec2| -> Vec2 {
        Vec2::new(
            (sigma(x + Vec2::new(h, 0.0)) - sigma(x - Vec2::new(h, 0.0))) / (2.0 * h),
            (sigma(x + Vec2::new(0.0, h)) - sigma(x - Vec2::new(0.0, h))) / (2.0 * h),
        )
    };
    current_t_eval(model, &dphi)
}

/// Shared segment walk: calls f(midpoint, segment vector, h1 - h2) and sums.
/// Side 1 is the branch whose incoming vector makes a positive frame with the
/// walking direction, so the result is independent of the chain orientation.
fn component_integral(
    model: &SplitLocusModel,
    chain: &[usize],
    f: &mut dyn FnMut(Vec2, Vec2, f64) -> f64,
) -> Result<f64> {
    let m = &model.problem.manifold;
    let mut total = 0.0;
    for w in chain.windows(2) {
        let a = &model.samples[w[0]];
        let b = &model.samples[w[1]];
        let seg = wrapped_diff(m, b.point, a.point);
        let len = seg.norm();
        if len < 1e-14 {
            continue;
        }
        let mid = m.wrap(a.point + seg * 0.5);
        // h from each side at the segment: average the endpoint values with
        // side labels fixed by the frame rule
        let (h1a, h2a) = side_values(a, seg)?;
        let (h1b, h2b) = side_values(b, seg)?;
        let dh = 0.5 * ((h1a - h2a) + (h1b - h2b));
        total += f(mid, seg, dh);
    }
    Ok(total)
}

/// h values of a cleave sample labeled by the side rule: side 1 has
/// det[X, tau] > 0 for the walking direction tau. A vanishing frame
/// determinant means the incoming ray runs along the sheet and no side can
/// be assigned.
fn side_values(s: &SplitSample, tau: Vec2) -> Result<(f64, f64)> {
    if s.branches.len() < 2 {
        return Err(CoreError::UnorientedComponent(format!(
            "sample at ({}, {}) has fewer than two sides",
            s.point.x, s.point.y
        )));
    }
    let x1 = s.branches[0].direction;
    let d1 = x1.x * tau.y - x1.y * tau.x;
    if d1.abs() < 1e-9 * tau.norm() {
        return Err(CoreError::UnorientedComponent(format!(
            "incoming vector tangent to the sheet at ({}, {})",
            s.point.x, s.point.y
        )));
    }
    if d1 < 0.0 {
        Ok((s.branches[1].value, s.branches[0].value))
    } else {
        Ok((s.branches[0].value, s.branches[1].value))
    }
}

/// Difference h1 - h2 along every segment of a chained component; the
/// constancy of this per component is the key structural invariant.
pub fn component_h_differences(model: &SplitLocusModel, chain: &[usize]) -> Result<Vec<f64>> {
    let m = &model.problem.manifold;
    let mut out = Vec::new();
    for w in chain.windows(2) {
        let a = &model.samples[w[0]];
        let b = &model.samples[w[1]];
        let seg = wrapped_diff(m, b.point, a.point);
        let (h1, h2) = side_values(a, seg)?;
        out.push(h1 - h2);
    }
    Ok(out)
}

/// JSON export of the model: parameter, classified samples, and components.
pub fn model_to_json(model: &SplitLocusModel) -> serde_json::Value {
    serde_json::json!({
        "parameter": model.parameter,
        "grid_spacing": model.grid_spacing,
        "samples": model.samples.iter().map(|s| serde_json::json!({
            "p": [s.point.x, s.point.y],
            "class": s.class,
            "r_p": s.branches.iter().map(|h| [h.direction.x, h.direction.y]).collect::<Vec<_>>(),
            "h_sides": s.branches.iter().map(|h| h.value).collect::<Vec<_>>(),
            "vertex": s.vertex,
        })).collect::<Vec<_>>(),
        "components": model.components,
    })
}
