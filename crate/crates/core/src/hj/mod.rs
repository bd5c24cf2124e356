//! The Hamilton-Jacobi boundary value problem: Lax-Oleinik solves, the
//! solution by characteristics, minimizer sets, and the grid machinery the
//! singular-set extraction runs on.

pub mod cut;
pub mod extract;
pub mod reduce;
pub mod shooting;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::{Arc, OnceLock};

use crate::error::{CoreError, Result};
use crate::flow::{RayFamily, ScalarFn1};
use crate::geometry::{ChartedManifold, Shape, Vec2, TAU};

/// Within this of the infimum, a boundary point counts as a minimizer.
pub const EPS_MIN_DEFAULT: f64 = 1e-4;
/// Minimizer clusters closer than this in boundary parameter merge.
pub const DELTA_SEP: f64 = 1e-2;
/// Boundary samples per component for the infimum search.
pub const BOUNDARY_SAMPLES: usize = 2048;

/// Boundary data: a smooth g per component plus optional constant offsets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryData {
    pub g: Vec<ScalarFn1>,
    #[serde(default)]
    pub offsets: Vec<f64>,
}

impl BoundaryData {
    pub fn zero(n_components: usize) -> BoundaryData {
        BoundaryData { g: vec![ScalarFn1::Zero; n_components], offsets: vec![0.0; n_components] }
    }

    pub fn constants(offsets: Vec<f64>) -> BoundaryData {
        BoundaryData { g: vec![ScalarFn1::Zero; offsets.len()], offsets }
    }

    pub fn value(&self, component: usize, s: f64) -> f64 {
        self.g[component].eval(s) + self.offsets.get(component).copied().unwrap_or(0.0)
    }
}

/// Where the characteristics come from.
#[derive(Debug, Clone)]
pub enum ProblemSource {
    /// Rays out of the manifold's boundary components.
    Boundary(BoundaryData),
    /// A point source (sphere, ellipsoid, plane).
    Point { p: Vec2 },
    /// A point source on the flat torus, lifted to the covering plane with a
    /// per-translate offset <b, T>: the homology-parametrized family.
    TorusLattice { p: Vec2, b: [f64; 2] },
}

/// One Hamilton-Jacobi boundary value problem instance.
#[derive(Debug, Clone)]
pub struct Problem {
    pub manifold: ChartedManifold,
    pub source: ProblemSource,
    pub eps_min: f64,
    /// Dense boundary sample tables, built once and shared across clones;
    /// the infimum scan runs millions of evaluations per grid solve.
    scan_cache: Arc<OnceLock<Vec<Vec<(Vec2, f64)>>>>,
}

/// One boundary element attaining (or nearly attaining) the infimum at a
/// query point.
#[derive(Debug, Clone)]
pub struct MinimizerHit {
    /// Boundary component id, or the translate index for lattice sources.
    pub branch: BranchId,
    /// Boundary parameter (angle) or direction angle for point sources.
    pub param: f64,
    /// d(x, q) + g(q).
    pub value: f64,
    /// Geodesic distance part d(x, q).
    pub distance: f64,
    /// Unit incoming velocity at the query point (an R_p candidate).
    pub direction: Vec2,
}

/// Identity of a minimizing branch, comparable across nearby query points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BranchId {
    Component(usize),
    Translate(i32, i32),
    /// Direction sector index for continuum point sources (sphere).
    Direction(i32),
}

/// The viscosity solution value and minimizer set at one point.
#[derive(Debug, Clone)]
pub struct PointSolution {
    pub u: f64,
    pub minimizers: Vec<MinimizerHit>,
}

impl Problem {
    pub fn new(manifold: ChartedManifold, source: ProblemSource) -> Problem {
        Problem {
            manifold,
            source,
            eps_min: EPS_MIN_DEFAULT,
            scan_cache: Arc::new(OnceLock::new()),
        }
    }

    /// Boundary points and data values at the scan resolution, per component.
    fn scan_tables(&self) -> &Vec<Vec<(Vec2, f64)>> {
        self.scan_cache.get_or_init(|| match &self.source {
            ProblemSource::Boundary(data) => self
                .manifold
                .boundary_components
                .iter()
                .enumerate()
                .map(|(ci, comp)| {
                    let period = comp.period();
                    (0..BOUNDARY_SAMPLES)
                        .map(|i| {
                            let s = period * i as f64 / BOUNDARY_SAMPLES as f64;
                            (comp.point(s), data.value(ci, s))
                        })
                        .collect()
                })
                .collect(),
            _ => Vec::new(),
        })
    }

    pub fn with_eps_min(mut self, eps: f64) -> Problem {
        self.eps_min = eps;
        self
    }

    /// The ray family of the problem's characteristics for one component
    /// (ignored for point sources).
    pub fn ray_family(&self, component: usize, tol: f64) -> RayFamily {
        match &self.source {
            ProblemSource::Boundary(data) => RayFamily::from_boundary(
                &self.manifold,
                component,
                data.g[component].clone(),
                tol,
            ),
            ProblemSource::Point { p } => RayFamily::from_point(&self.manifold, *p, tol),
            ProblemSource::TorusLattice { p, .. } => {
                RayFamily::from_point(&self.manifold, *p, tol)
            }
        }
    }

    /// Boundary value g(z) + a at the footpoint of a branch.
    pub fn boundary_value(&self, hit: &MinimizerHit) -> f64 {
        hit.value - hit.distance
    }
}

// ---------------------------------------------------------------------------
// compatibility
// ---------------------------------------------------------------------------

/// Result of the compatibility scan: the largest |g(y) - g(z)| / d(y, z).
#[derive(Debug, Clone, Serialize)]
pub struct CompatibilityReport {
    pub ok: bool,
    pub margin: f64,
    /// Worst pair, for diagnostics.
    pub witness: Option<([f64; 2], [f64; 2])>,
}

/// Sampled check of |g(y) - g(z)| < k d(y, z), k < 1.
pub fn check_compatibility(problem: &Problem) -> Result<CompatibilityReport> {
    let m = &problem.manifold;
    match &problem.source {
        ProblemSource::Point { .. } => Ok(CompatibilityReport { ok: true, margin: 0.0, witness: None }),
        ProblemSource::TorusLattice { p, b } => {
            // offsets <b, T> between translated copies of the source point
            let mut worst = 0.0f64;
            let mut witness = None;
            let translates = m.torus_translates();
            for (i, ti) in translates.iter().enumerate() {
                for tj in translates.iter().skip(i + 1) {
                    let d = (ti - tj).norm();
                    if d < 1e-12 {
                        continue;
                    }
                    let dg = (b[0] * (ti.x - tj.x) + b[1] * (ti.y - tj.y)).abs();
                    let ratio = dg / d;
                    if ratio > worst {
                        worst = ratio;
                        let a = p + ti;
                        let c = p + tj;
                        witness = Some(([a.x, a.y], [c.x, c.y]));
                    }
                }
            }
            Ok(CompatibilityReport { ok: worst < 1.0 - 1e-6, margin: worst, witness })
        }
        ProblemSource::Boundary(data) => {
            let n = 128usize;
            let mut pts: Vec<(Vec2, f64)> = Vec::new();
            for (ci, comp) in m.boundary_components.iter().enumerate() {
                let period = comp.period();
                for i in 0..n {
                    let s = period * i as f64 / n as f64;
                    pts.push((comp.point(s), data.value(ci, s)));
                }
            }
            let mut worst = 0.0f64;
            let mut witness = None;
            for i in 0..pts.len() {
                for j in (i + 1)..pts.len() {
                    let d = m.distance_oracle(pts[i].0, pts[j].0)?;
                    if d < 1e-9 {
                        continue;
                    }
                    let ratio = (pts[i].1 - pts[j].1).abs() / d;
                    if ratio > worst {
                        worst = ratio;
                        witness = Some(([pts[i].0.x, pts[i].0.y], [pts[j].0.x, pts[j].0.y]));
                    }
                }
            }
            Ok(CompatibilityReport { ok: worst < 1.0 - 1e-6, margin: worst, witness })
        }
    }
}

// ---------------------------------------------------------------------------
// Lax-Oleinik point solve
// ---------------------------------------------------------------------------

/// u(x) = inf over the source of d(x, q) + g(q), with the minimizer set.
/// Boundary components are searched with a dense sample refined by golden
/// section around every competitive local minimum.
pub fn solve_at(problem: &Problem, x: Vec2) -> Result<PointSolution> {
    solve_at_with(problem, x, None)
}

/// `solve_at` with an optional shooting table for non-oracle manifolds.
pub fn solve_at_with(
    problem: &Problem,
    x: Vec2,
    shooting: Option<&shooting::ShootingTable>,
) -> Result<PointSolution> {
    let m = &problem.manifold;
    let mut hits: Vec<MinimizerHit> = Vec::new();
    match &problem.source {
        ProblemSource::TorusLattice { p, b } => {
            for (mi, ni, t) in lattice_translates(m) {
                let q = p + t;
                let w = x - q;
                let d = w.norm();
                if d < 1e-14 {
                    continue;
                }
                hits.push(MinimizerHit {
                    branch: BranchId::Translate(mi, ni),
                    param: w.y.atan2(w.x),
                    value: d + b[0] * t.x + b[1] * t.y,
                    distance: d,
                    direction: w / d,
                });
            }
        }
        ProblemSource::Point { p } => match &m.shape {
            Shape::Sphere { .. } | Shape::EuclideanPlane | Shape::Disk { .. }
            | Shape::MinkowskiPlane { .. } => {
                let d = m.distance_oracle(*p, x)?;
                if d > 1e-14 {
                    let dir = m.arrival_direction(*p, x).unwrap_or_else(|_| Vec2::new(1.0, 0.0));
                    // sector id keeps branch identity stable across samples
                    let ang = match m.v_p(*p, x) {
                        Ok(v) => v.y.atan2(v.x),
                        Err(_) => 0.0,
                    };
                    hits.push(MinimizerHit {
                        branch: BranchId::Direction((ang / (TAU / 64.0)).floor() as i32),
                        param: ang,
                        value: d,
                        distance: d,
                        direction: dir,
                    });
                    // complementary great-circle arc on the sphere
                    if let Shape::Sphere { radius } = &m.shape {
                        let d2 = TAU * radius - d;
                        hits.push(MinimizerHit {
                            branch: BranchId::Direction(
                                ((ang + std::f64::consts::PI) / (TAU / 64.0)).floor() as i32,
                            ),
                            param: ang + std::f64::consts::PI,
                            value: d2,
                            distance: d2,
                            direction: -dir,
                        });
                    }
                }
            }
            Shape::Ellipsoid { .. } => {
                let table = shooting.ok_or_else(|| {
                    CoreError::UnsupportedOracle(
                        "ellipsoid point solves need a shooting table".into(),
                    )
                })?;
                for sol in table.connect(x)? {
                    hits.push(MinimizerHit {
                        branch: BranchId::Direction((sol.theta / (TAU / 64.0)).floor() as i32),
                        param: sol.theta,
                        value: sol.length,
                        distance: sol.length,
                        direction: sol.arrival,
                    });
                }
            }
            _ => {
                return Err(CoreError::UnsupportedOracle(
                    "point source not supported on this manifold".into(),
                ))
            }
        },
        ProblemSource::Boundary(data) => {
            let tables = problem.scan_tables();
            for (ci, comp) in m.boundary_components.iter().enumerate() {
                let period = comp.period();
                let n = BOUNDARY_SAMPLES;
                let f = |s: f64| -> Result<f64> {
                    Ok(m.distance_oracle(x, comp.point(s))? + data.value(ci, s))
                };
                // dense scan over the precomputed table
                let table = &tables[ci];
                let mut vals = Vec::with_capacity(n);
                for (q, gv) in table.iter() {
                    vals.push(m.distance_oracle(x, *q)? + gv);
                }
                let best = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                // refine all competitive local minima (circular)
                for i in 0..n {
                    let prev = vals[(i + n - 1) % n];
                    let next = vals[(i + 1) % n];
                    let v = vals[i];
                    if v <= prev && v <= next && v <= best + 0.05 {
                        let s0 = period * i as f64 / n as f64;
                        let span = period / n as f64;
                        let (s_ref, v_ref) = crate::numerics::golden_min(
                            |s| f(s).unwrap_or(f64::INFINITY),
                            s0 - span,
                            s0 + span,
                            1e-12,
                        );
                        let s_ref = comp.wrap_param(s_ref);
                        let q = comp.point(s_ref);
                        let d = m.distance_oracle(x, q)?;
                        let dir = if d > 1e-12 {
                            m.arrival_direction(q, x)?
                        } else {
                            comp.inner_normal_hint(s_ref)
                        };
                        hits.push(MinimizerHit {
                            branch: BranchId::Component(ci),
                            param: s_ref,
                            value: v_ref,
                            distance: d,
                            direction: dir,
                        });
                    }
                }
            }
        }
    }
    if hits.is_empty() {
        return Err(CoreError::InvalidArgument(format!(
            "no boundary elements reachable from ({}, {})",
            x.x, x.y
        )));
    }
    hits.sort_by(|a, b| a.value.partial_cmp(&b.value).unwrap());
    let u = hits[0].value;
    // keep hits within eps_min, clustered by branch + parameter separation
    let mut minimizers: Vec<MinimizerHit> = Vec::new();
    for h in hits.into_iter().take_while(|h| h.value <= u + problem.eps_min) {
        let dup = minimizers.iter().any(|o| {
            o.branch == h.branch
                && circ_dist(o.param, h.param, TAU) < DELTA_SEP
        });
        if !dup {
            minimizers.push(h);
        }
    }
    Ok(PointSolution { u, minimizers })
}

fn circ_dist(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

/// Translates with their lattice indices, |m|,|n| <= 2.
pub fn lattice_translates(m: &ChartedManifold) -> Vec<(i32, i32, Vec2)> {
    match &m.shape {
        Shape::FlatTorus { periods } => {
            let mut out = Vec::with_capacity(25);
            for mi in -2..=2 {
                for ni in -2..=2 {
                    out.push((mi, ni, Vec2::new(mi as f64 * periods[0], ni as f64 * periods[1])));
                }
            }
            out
        }
        _ => vec![(0, 0, Vec2::zeros())],
    }
}

// ---------------------------------------------------------------------------
// grid solve
// ---------------------------------------------------------------------------

/// A sampled viscosity solution on a rectangular grid over the chart.
#[derive(Debug, Clone)]
pub struct GridSolution {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
    pub mask: Vec<bool>,
    pub u: Vec<f64>,
    pub minimizers: Vec<Vec<MinimizerHit>>,
}

impl GridSolution {
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn point(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(self.x0 + self.dx * i as f64, self.y0 + self.dy * j as f64)
    }

    pub fn spacing(&self) -> f64 {
        self.dx.max(self.dy)
    }

    /// CSV dump: p1, p2, u, n_minimizers.
    pub fn to_csv(&self) -> String {
        use crate::numerics::fmt_sig9 as f9;
        let mut out = String::from("p1,p2,u,n_minimizers\n");
        for j in 0..self.ny {
            for i in 0..self.nx {
                let k = self.index(i, j);
                if !self.mask[k] {
                    continue;
                }
                let p = self.point(i, j);
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    f9(p.x),
                    f9(p.y),
                    f9(self.u[k]),
                    self.minimizers[k].len()
                ));
            }
        }
        out
    }
}

/// The grid rectangle a problem is naturally sampled on.
pub fn default_grid_window(m: &ChartedManifold) -> ([f64; 2], [f64; 2]) {
    match &m.shape {
        Shape::FlatTorus { periods } => ([0.0, periods[0]], [0.0, periods[1]]),
        Shape::Annulus { r_outer, .. } => ([-r_outer, *r_outer], [-r_outer, *r_outer]),
        Shape::Disk { radius } => ([-radius, *radius], [-radius, *radius]),
        Shape::Sphere { .. } | Shape::Ellipsoid { .. } => {
            ([0.0, std::f64::consts::PI], [-std::f64::consts::PI, std::f64::consts::PI])
        }
        _ => (m.chart.x, m.chart.y),
    }
}

/// Sample the Lax-Oleinik solution on an n x n grid over the chart window.
pub fn lax_oleinik_solve(problem: &Problem, n: usize) -> Result<GridSolution> {
    let report = check_compatibility(problem)?;
    if !report.ok {
        return Err(CoreError::Compatibility { margin: report.margin });
    }
    let (xw, yw) = default_grid_window(&problem.manifold);
    let nx = n;
    let ny = n;
    let dx = (xw[1] - xw[0]) / (nx - 1) as f64;
    let dy = (yw[1] - yw[0]) / (ny - 1) as f64;
    type Row = Vec<(bool, f64, Vec<MinimizerHit>)>;
    let rows: Vec<Result<Row>> = (0..ny)
        .into_par_iter()
        .map(|j| {
            let mut row = Vec::with_capacity(nx);
            for i in 0..nx {
                let p = Vec2::new(xw[0] + dx * i as f64, yw[0] + dy * j as f64);
                let inside = problem.manifold.signed_interior_distance(p) > 1e-9;
                if !inside {
                    row.push((false, f64::NAN, Vec::new()));
                    continue;
                }
                match solve_at(problem, p) {
                    Ok(sol) => row.push((true, sol.u, sol.minimizers)),
                    Err(_) => row.push((true, f64::NAN, Vec::new())),
                }
            }
            Ok(row)
        })
        .collect();
    let mut mask = vec![false; nx * ny];
    let mut u = vec![f64::NAN; nx * ny];
    let mut minimizers = vec![Vec::new(); nx * ny];
    for (j, row) in rows.into_iter().enumerate() {
        let row = row?;
        for (i, (inside, uu, mins)) in row.into_iter().enumerate() {
            let k = j * nx + i;
            mask[k] = inside;
            u[k] = uu;
            minimizers[k] = mins;
        }
    }
    Ok(GridSolution { nx, ny, x0: xw[0], y0: yw[0], dx, dy, mask, u, minimizers })
}

/// u along a characteristic: g(z) + t, valid below the first singular hit.
/// Returns samples (t, chart point, u value).
pub fn characteristics_solution(
    problem: &Problem,
    component: usize,
    z: f64,
    t_max: f64,
    nt: usize,
) -> Result<Vec<(f64, Vec2, f64)>> {
    let fam = problem.ray_family(component, 1e-10);
    let g0 = match &problem.source {
        ProblemSource::Boundary(data) => data.value(component, z),
        _ => 0.0,
    };
    let traj = fam.trajectory(z, t_max)?;
    let te = traj.exit_time.unwrap_or(t_max);
    let mut out = Vec::with_capacity(nt);
    for i in 0..nt {
        let t = te * i as f64 / (nt - 1) as f64;
        out.push((t, problem.manifold.wrap(traj.chart_at(t)), g0 + t));
    }
    Ok(out)
}
