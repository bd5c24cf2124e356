//! Geodesic flow, the characteristic field on the boundary, exponential maps
//! from points and boundary components, and the variational columns of dF
//! along rays.
//!
//! Flat metrics integrate in chart coordinates; the sphere and ellipsoid
//! integrate in the R^3 embedding, which keeps the flow smooth across chart
//! seams and poles. Determinants of dF are always evaluated in an orthonormal
//! tangent frame, so conjugate detection never sees chart distortion.

pub mod rk;

use nalgebra::Matrix2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::geometry::{
    metric, sphere_embed, sphere_pull, sphere_push, sphere_unembed, ChartedManifold, Shape, Vec2,
    Vec3,
};
use rk::{DenseOutput, StopReason};

/// A point of the geodesic phase flow in chart coordinates.
#[derive(Debug, Clone, Copy)]
pub struct PhaseState {
    pub position: Vec2,
    pub velocity: Vec2,
    pub time: f64,
}

/// Ray coordinates (t, z): time along the ray and the source parameter.
/// For boundary sources z is the component parameter; for point sources it is
/// the direction angle in an orthonormal frame at the source point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayCoordinate {
    pub t: f64,
    pub z: f64,
}

/// Columns of dF along a ray, in chart coordinates, with the velocity
/// variations. The first column is dF(r), the geodesic velocity.
#[derive(Debug, Clone)]
pub struct JacobiBundle {
    pub base: PhaseState,
    pub columns: Matrix2<f64>,
    pub derivative_columns: Matrix2<f64>,
    /// Signed determinant of dF in an orthonormal tangent frame.
    pub det_df: f64,
}

/// Simple scalar functions of one periodic variable; boundary data g and its
/// derivative are evaluated through this.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarFn1 {
    Zero,
    Constant { value: f64 },
    Sine { amplitude: f64, frequency: f64, phase: f64 },
    Ramp { slope: f64 },
}

impl ScalarFn1 {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            ScalarFn1::Zero => 0.0,
            ScalarFn1::Constant { value } => *value,
            ScalarFn1::Sine { amplitude, frequency, phase } => {
                amplitude * (frequency * s + phase).sin()
            }
            ScalarFn1::Ramp { slope } => slope * s,
        }
    }

    pub fn deriv(&self, s: f64) -> f64 {
        match self {
            ScalarFn1::Zero | ScalarFn1::Constant { .. } => 0.0,
            ScalarFn1::Sine { amplitude, frequency, phase } => {
                amplitude * frequency * (frequency * s + phase).cos()
            }
            ScalarFn1::Ramp { slope } => *slope,
        }
    }
}

// ---------------------------------------------------------------------------
// flow space
// ---------------------------------------------------------------------------

/// Where the ODE actually runs.
#[derive(Debug, Clone)]
pub enum FlowSpace {
    Flat,
    Sphere { radius: f64 },
    Ellipsoid { semiaxes: [f64; 3] },
}

impl FlowSpace {
    pub fn of(m: &ChartedManifold) -> FlowSpace {
        match &m.shape {
            Shape::Sphere { radius } => FlowSpace::Sphere { radius: *radius },
            Shape::Ellipsoid { semiaxes } => FlowSpace::Ellipsoid { semiaxes: *semiaxes },
            _ => FlowSpace::Flat,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FlowSpace::Flat => 2,
            _ => 3,
        }
    }

    pub(crate) fn acc(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        match self {
            FlowSpace::Flat => {
                out[0] = 0.0;
                out[1] = 0.0;
            }
            FlowSpace::Sphere { radius } => {
                let v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
                let s = -v2 / (radius * radius);
                out[0] = s * x[0];
                out[1] = s * x[1];
                out[2] = s * x[2];
            }
            FlowSpace::Ellipsoid { semiaxes } => {
                let h = [
                    2.0 / (semiaxes[0] * semiaxes[0]),
                    2.0 / (semiaxes[1] * semiaxes[1]),
                    2.0 / (semiaxes[2] * semiaxes[2]),
                ];
                let n = [h[0] * x[0], h[1] * x[1], h[2] * x[2]];
                let q = h[0] * v[0] * v[0] + h[1] * v[1] * v[1] + h[2] * v[2] * v[2];
                let m = n[0] * n[0] + n[1] * n[1] + n[2] * n[2];
                let s = -q / m;
                out[0] = s * n[0];
                out[1] = s * n[1];
                out[2] = s * n[2];
            }
        }
    }

    /// Directional derivative of `acc` along the variation (J, K).
    pub(crate) fn acc_var(&self, x: &[f64], v: &[f64], j: &[f64], kk: &[f64], out: &mut [f64]) {
        match self {
            FlowSpace::Flat => {
                out[0] = 0.0;
                out[1] = 0.0;
            }
            FlowSpace::Sphere { radius } => {
                let r2 = radius * radius;
                let v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
                let vk = v[0] * kk[0] + v[1] * kk[1] + v[2] * kk[2];
                for i in 0..3 {
                    out[i] = -(2.0 * vk / r2) * x[i] - (v2 / r2) * j[i];
                }
            }
            FlowSpace::Ellipsoid { semiaxes } => {
                let h = [
                    2.0 / (semiaxes[0] * semiaxes[0]),
                    2.0 / (semiaxes[1] * semiaxes[1]),
                    2.0 / (semiaxes[2] * semiaxes[2]),
                ];
                let n = [h[0] * x[0], h[1] * x[1], h[2] * x[2]];
                let dn = [h[0] * j[0], h[1] * j[1], h[2] * j[2]];
                let q = h[0] * v[0] * v[0] + h[1] * v[1] * v[1] + h[2] * v[2] * v[2];
                let dq = 2.0 * (h[0] * v[0] * kk[0] + h[1] * v[1] * kk[1] + h[2] * v[2] * kk[2]);
                let m = n[0] * n[0] + n[1] * n[1] + n[2] * n[2];
                let dm = 2.0 * (n[0] * dn[0] + n[1] * dn[1] + n[2] * dn[2]);
                for i in 0..3 {
                    out[i] = -(dq / m) * n[i] + (q * dm / (m * m)) * n[i] - (q / m) * dn[i];
                }
            }
        }
    }

    pub fn to_chart(&self, x: &[f64]) -> Vec2 {
        match self {
            FlowSpace::Flat => Vec2::new(x[0], x[1]),
            FlowSpace::Sphere { radius } => sphere_unembed(*radius, Vec3::new(x[0], x[1], x[2])),
            FlowSpace::Ellipsoid { semiaxes } => {
                metric::ellipsoid_unembed(*semiaxes, Vec3::new(x[0], x[1], x[2]))
            }
        }
    }

    pub fn from_chart(&self, p: Vec2, v: Vec2) -> (Vec<f64>, Vec<f64>) {
        match self {
            FlowSpace::Flat => (vec![p.x, p.y], vec![v.x, v.y]),
            FlowSpace::Sphere { radius } => {
                let x = sphere_embed(*radius, p);
                let u = sphere_push(*radius, p, v);
                (vec![x.x, x.y, x.z], vec![u.x, u.y, u.z])
            }
            FlowSpace::Ellipsoid { semiaxes } => {
                let x = metric::ellipsoid_embed(*semiaxes, p);
                let u = metric::ellipsoid_push(*semiaxes, p, v);
                (vec![x.x, x.y, x.z], vec![u.x, u.y, u.z])
            }
        }
    }

    /// Pull an embedded tangent vector at x back to chart components.
    pub fn chart_vec(&self, x: &[f64], u: &[f64]) -> Vec2 {
        match self {
            FlowSpace::Flat => Vec2::new(u[0], u[1]),
            FlowSpace::Sphere { radius } => {
                let p = self.to_chart(x);
                sphere_pull(*radius, p, Vec3::new(u[0], u[1], u[2]))
            }
            FlowSpace::Ellipsoid { semiaxes } => {
                let p = self.to_chart(x);
                metric::ellipsoid_pull(*semiaxes, p, Vec3::new(u[0], u[1], u[2]))
            }
        }
    }

    /// Unit surface normal at x (3D flows only).
    fn unit_normal(&self, x: &[f64]) -> Vec3 {
        match self {
            FlowSpace::Flat => unreachable!("flat flow has no surface normal"),
            FlowSpace::Sphere { radius } => Vec3::new(x[0], x[1], x[2]) / *radius,
            FlowSpace::Ellipsoid { semiaxes } => Vec3::new(
                x[0] / (semiaxes[0] * semiaxes[0]),
                x[1] / (semiaxes[1] * semiaxes[1]),
                x[2] / (semiaxes[2] * semiaxes[2]),
            )
            .normalize(),
        }
    }

    /// Signed determinant of [a, b] in an orthonormal tangent frame at x.
    pub fn det2(&self, x: &[f64], a: &[f64], b: &[f64]) -> f64 {
        match self {
            FlowSpace::Flat => a[0] * b[1] - a[1] * b[0],
            _ => {
                let n = self.unit_normal(x);
                let av = Vec3::new(a[0], a[1], a[2]);
                let bv = Vec3::new(b[0], b[1], b[2]);
                n.dot(&av.cross(&bv))
            }
        }
    }

    /// Orthonormal tangent frame at the chart point p (embedded for 3D flows).
    pub fn tangent_frame(&self, p: Vec2) -> (Vec<f64>, Vec<f64>) {
        match self {
            FlowSpace::Flat => (vec![1.0, 0.0], vec![0.0, 1.0]),
            FlowSpace::Sphere { radius } => {
                let e1 = sphere_push(*radius, p, Vec2::new(1.0, 0.0)).normalize();
                let x = sphere_embed(*radius, p);
                let n = x / *radius;
                let e2 = n.cross(&e1);
                (vec![e1.x, e1.y, e1.z], vec![e2.x, e2.y, e2.z])
            }
            FlowSpace::Ellipsoid { semiaxes } => {
                let e1 = metric::ellipsoid_push(*semiaxes, p, Vec2::new(1.0, 0.0)).normalize();
                let x = metric::ellipsoid_embed(*semiaxes, p);
                let xs = [x.x, x.y, x.z];
                let n = self.unit_normal(&xs);
                let e2 = n.cross(&e1);
                (vec![e1.x, e1.y, e1.z], vec![e2.x, e2.y, e2.z])
            }
        }
    }
}

// ---------------------------------------------------------------------------
// characteristic field
// ---------------------------------------------------------------------------

/// Solve for the characteristic vector X at parameter s of a boundary
/// component: phi(X) = 1, the dual form of X restricted to the boundary
/// tangent equals dg, X pointing inward. Solved by a 50-sample bracket scan
/// over the inward half of the indicatrix followed by secant refinement.
pub fn characteristic_field(
    manifold: &ChartedManifold,
    component: usize,
    g: &ScalarFn1,
    s: f64,
) -> Result<Vec2> {
    let comp = manifold
        .boundary_components
        .get(component)
        .ok_or_else(|| CoreError::Config(format!("no boundary component {component}")))?;
    let p = comp.point(s);
    let tangent = comp.tangent(s);
    let normal = comp.inner_normal_hint(s);
    solve_characteristic(manifold, p, tangent, normal, g.deriv(s), s)
}

/// The same solve with explicit boundary geometry; used for synthetic
/// components in tests (half-planes, colatitude circles).
pub fn solve_characteristic(
    manifold: &ChartedManifold,
    p: Vec2,
    tangent: Vec2,
    inner_normal: Vec2,
    dgds: f64,
    s: f64,
) -> Result<Vec2> {
    let met = &manifold.metric;
    let f = |alpha: f64| -> f64 {
        let u = Vec2::new(alpha.cos(), alpha.sin());
        let x = u / met.norm(p, u);
        let w = met.dual_one_form(p, x);
        w.x * tangent.x + w.y * tangent.y - dgds
    };
    let center = inner_normal.y.atan2(inner_normal.x);
    let half = std::f64::consts::FRAC_PI_2 - 1e-6;
    let n = 50;
    let mut bracket: Option<(f64, f64)> = None;
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=n {
        let alpha = center - half + (2.0 * half) * (i as f64 / n as f64);
        let val = f(alpha);
        if val == 0.0 {
            bracket = Some((alpha, alpha));
            break;
        }
        if let Some((pa, pv)) = prev {
            if (pv < 0.0) != (val < 0.0) {
                bracket = Some((pa, alpha));
                break;
            }
        }
        prev = Some((alpha, val));
    }
    let (a0, b0) = bracket.ok_or(CoreError::CharacteristicUnsolvable { s })?;
    let alpha = if a0 == b0 { a0 } else { crate::numerics::brent_like(f, a0, b0, 1e-14) };
    if f(alpha).abs() > 1e-10 {
        return Err(CoreError::CharacteristicUnsolvable { s });
    }
    let u = Vec2::new(alpha.cos(), alpha.sin());
    Ok(u / met.norm(p, u))
}

// ---------------------------------------------------------------------------
// ray families and trajectories
// ---------------------------------------------------------------------------

/// Where the rays come from.
#[derive(Debug, Clone)]
pub enum RaySource {
    /// Characteristic rays out of one boundary component with boundary data g.
    Boundary { component: usize, g: ScalarFn1 },
    /// Rays out of a point; z is the direction angle in an orthonormal frame.
    Point { p: Vec2 },
    /// Point source reduced to its geodesic circle of radius eps: rays start
    /// on the circle, t measures distance from the circle.
    PointReduced { p: Vec2, eps: f64 },
}

/// A family of geodesic rays F(t, z) with variational columns.
#[derive(Debug, Clone)]
pub struct RayFamily {
    pub manifold: ChartedManifold,
    pub source: RaySource,
    /// Integrator tolerance (relative; absolute is tol * 1e-2).
    pub tol: f64,
}

/// One integrated ray with dense output; positions of flat-manifold rays are
/// in covering coordinates (no wrapping mid-flight).
#[derive(Debug, Clone)]
pub struct RayTrajectory {
    pub z: f64,
    pub space: FlowSpace,
    dense: DenseOutput,
    /// Metric handle for energy checks.
    manifold: ChartedManifold,
    /// Time at which the ray left the domain, if it did.
    pub exit_time: Option<f64>,
}

impl RayFamily {
    pub fn from_point(manifold: &ChartedManifold, p: Vec2, tol: f64) -> RayFamily {
        RayFamily { manifold: manifold.clone(), source: RaySource::Point { p }, tol }
    }

    pub fn from_boundary(
        manifold: &ChartedManifold,
        component: usize,
        g: ScalarFn1,
        tol: f64,
    ) -> RayFamily {
        RayFamily { manifold: manifold.clone(), source: RaySource::Boundary { component, g }, tol }
    }

    pub fn space(&self) -> FlowSpace {
        FlowSpace::of(&self.manifold)
    }

    /// Initial flow state [x, v, J, K] for the ray at parameter z.
    pub fn initial_state(&self, z: f64) -> Result<Vec<f64>> {
        let space = self.space();
        let m = space.dim();
        let mut y = vec![0.0; 4 * m];
        match &self.source {
            RaySource::Point { p } => {
                let (e1, e2) = space.tangent_frame(*p);
                let (x0, _) = space.from_chart(*p, Vec2::new(1.0, 0.0));
                let (ct, st) = (z.cos(), z.sin());
                for i in 0..m {
                    y[i] = x0[i];
                    y[m + i] = ct * e1[i] + st * e2[i];
                    y[2 * m + i] = 0.0;
                    y[3 * m + i] = -st * e1[i] + ct * e2[i];
                }
                if let Shape::MinkowskiPlane { .. } = self.manifold.shape {
                    // renormalize to unit Finsler speed; K by central difference
                    let unit = |ang: f64| -> Vec2 {
                        let u = Vec2::new(ang.cos(), ang.sin());
                        u / self.manifold.metric.norm(*p, u)
                    };
                    let v = unit(z);
                    let h = 1e-6;
                    let k = (unit(z + h) - unit(z - h)) / (2.0 * h);
                    y[m] = v.x;
                    y[m + 1] = v.y;
                    y[3 * m] = k.x;
                    y[3 * m + 1] = k.y;
                }
                Ok(y)
            }
            RaySource::PointReduced { p, eps } => {
                // state of the point ray at time eps, re-based
                let inner = RayFamily::from_point(&self.manifold, *p, self.tol);
                let traj = inner.trajectory(z, *eps * 1.001)?;
                Ok(traj.dense.sample(*eps))
            }
            RaySource::Boundary { component, g } => {
                let comp = self
                    .manifold
                    .boundary_components
                    .get(*component)
                    .ok_or_else(|| CoreError::Config(format!("no boundary component {component}")))?
                    .clone();
                let gamma = characteristic_field(&self.manifold, *component, g, z)?;
                let h = 1e-6 * comp.period();
                let gp = characteristic_field(&self.manifold, *component, g, z + h)?;
                let gm = characteristic_field(&self.manifold, *component, g, z - h)?;
                let dgamma = (gp - gm) / (2.0 * h);
                let p0 = comp.point(z);
                let cp = comp.tangent(z);
                // flat boundary components only; charts are the flow space
                y[0] = p0.x;
                y[1] = p0.y;
                y[2] = gamma.x;
                y[3] = gamma.y;
                y[4] = cp.x;
                y[5] = cp.y;
                y[6] = dgamma.x;
                y[7] = dgamma.y;
                Ok(y)
            }
        }
    }

    /// Integrate the ray to t_max carrying the variational columns, stopping
    /// early if the domain is left.
    pub fn trajectory(&self, z: f64, t_max: f64) -> Result<RayTrajectory> {
        let space = self.space();
        let m = space.dim();
        let y0 = self.initial_state(z)?;
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
            let (x, rest) = y.split_at(m);
            let (v, var) = rest.split_at(m);
            let (j, kk) = var.split_at(m);
            dy[..m].copy_from_slice(v);
            let (dv, dvar) = dy[m..].split_at_mut(m);
            space.acc(x, v, dv);
            let (dj, dk) = dvar.split_at_mut(m);
            dj.copy_from_slice(kk);
            space.acc_var(x, v, j, kk, dk);
        };
        let has_boundary =
            matches!(self.manifold.shape, Shape::Annulus { .. } | Shape::Disk { .. });
        let manifold = self.manifold.clone();
        let space_ev = space.clone();
        let event = if has_boundary {
            Some(move |_t: f64, y: &[f64]| {
                let p = space_ev.to_chart(&y[..space_ev.dim()]);
                manifold.signed_interior_distance(p) + 1e-12
            })
        } else {
            None
        };
        let dense = rk::integrate(rhs, &y0, 0.0, t_max, self.tol, self.tol * 1e-2, event);
        let exit_time = match dense.stop {
            StopReason::Event(t) => Some(t),
            _ => None,
        };
        if let StopReason::StepUnderflow(t) = dense.stop {
            return Err(CoreError::Integration {
                t,
                reason: "step size underflow near metric degeneracy".into(),
            });
        }
        Ok(RayTrajectory { z, space, dense, manifold: self.manifold.clone(), exit_time })
    }

    /// Integrate many rays in parallel with deterministic ordering.
    pub fn sweep(&self, zs: &[f64], t_max: f64) -> Vec<Result<RayTrajectory>> {
        zs.par_iter().map(|&z| self.trajectory(z, t_max)).collect()
    }

    /// F(t, z): the exponential map of the family.
    pub fn exponential(&self, x: RayCoordinate) -> Result<Vec2> {
        let traj = self.trajectory(x.z, x.t)?;
        if let Some(te) = traj.exit_time {
            if te < x.t {
                return Err(CoreError::Integration {
                    t: te,
                    reason: "ray exits the domain before the requested time".into(),
                });
            }
        }
        Ok(self.manifold.wrap(traj.chart_at(x.t)))
    }

    /// The Jacobi bundle at (t, z).
    pub fn bundle(&self, x: RayCoordinate) -> Result<JacobiBundle> {
        let traj = self.trajectory(x.z, x.t)?;
        Ok(traj.bundle_at(x.t))
    }
}

impl RayTrajectory {
    pub fn t_end(&self) -> f64 {
        self.dense.t_end()
    }

    pub fn state_at(&self, t: f64) -> Vec<f64> {
        self.dense.sample(t)
    }

    pub fn chart_at(&self, t: f64) -> Vec2 {
        let y = self.dense.sample(t);
        self.space.to_chart(&y[..self.space.dim()])
    }

    pub fn velocity_chart_at(&self, t: f64) -> Vec2 {
        let m = self.space.dim();
        let y = self.dense.sample(t);
        self.space.chart_vec(&y[..m], &y[m..2 * m])
    }

    /// Signed det dF at time t, in the orthonormal tangent frame.
    pub fn det_at(&self, t: f64) -> f64 {
        let m = self.space.dim();
        let y = self.dense.sample(t);
        self.space.det2(&y[..m], &y[m..2 * m], &y[2 * m..3 * m])
    }

    /// Kernel-facing data: velocity and Jacobi columns in the tangent frame.
    pub fn frame_columns_at(&self, t: f64) -> (Matrix2<f64>, Vec2) {
        let m = self.space.dim();
        let y = self.dense.sample(t);
        let p = self.space.to_chart(&y[..m]);
        let (e1, e2) = self.space.tangent_frame(p);
        let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
        let cols = Matrix2::new(
            dot(&y[m..2 * m], &e1),
            dot(&y[2 * m..3 * m], &e1),
            dot(&y[m..2 * m], &e2),
            dot(&y[2 * m..3 * m], &e2),
        );
        (cols, p)
    }

    pub fn bundle_at(&self, t: f64) -> JacobiBundle {
        let m = self.space.dim();
        let y = self.dense.sample(t);
        let x = &y[..m];
        let p = self.space.to_chart(x);
        let v = self.space.chart_vec(x, &y[m..2 * m]);
        let j = self.space.chart_vec(x, &y[2 * m..3 * m]);
        let mut dv = vec![0.0; m];
        self.space.acc(x, &y[m..2 * m], &mut dv);
        let vdot = self.space.chart_vec(x, &dv);
        let k = self.space.chart_vec(x, &y[3 * m..4 * m]);
        JacobiBundle {
            base: PhaseState { position: p, velocity: v, time: t },
            columns: Matrix2::new(v.x, j.x, v.y, j.y),
            derivative_columns: Matrix2::new(vdot.x, k.x, vdot.y, k.y),
            det_df: self.det_at(t),
        }
    }

    /// Finsler speed at time t (should be conserved along the ray).
    pub fn energy_at(&self, t: f64) -> f64 {
        let m = self.space.dim();
        let y = self.dense.sample(t);
        match self.space {
            FlowSpace::Flat => {
                let p = Vec2::new(y[0], y[1]);
                let v = Vec2::new(y[m], y[m + 1]);
                self.manifold.metric.norm(p, v)
            }
            _ => (y[m..2 * m].iter().map(|a| a * a).sum::<f64>()).sqrt(),
        }
    }

    /// Accepted node times of the underlying integration.
    pub fn node_times(&self) -> &[f64] {
        &self.dense.ts
    }
}

// ---------------------------------------------------------------------------
// plain geodesic integration (no variational columns)
// ---------------------------------------------------------------------------

/// Outcome of `integrate_geodesic`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<PhaseState>,
    /// Set when the trajectory left the domain early.
    pub boundary_exit: Option<f64>,
}

/// Integrate the geodesic through `start` up to t_end with adaptive steps.
/// The trajectory stops early with a boundary-exit flag if the domain is left.
pub fn integrate_geodesic(
    manifold: &ChartedManifold,
    start: PhaseState,
    t_end: f64,
    tol: f64,
) -> Result<Trajectory> {
    if tol <= 0.0 {
        return Err(CoreError::InvalidArgument("tol must be positive".into()));
    }
    let space = FlowSpace::of(manifold);
    let m = space.dim();
    let (x0, v0) = space.from_chart(start.position, start.velocity);
    let mut y0 = x0;
    y0.extend_from_slice(&v0);
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let (x, v) = y.split_at(m);
        dy[..m].copy_from_slice(v);
        space.acc(x, v, &mut dy[m..]);
    };
    let has_boundary = matches!(manifold.shape, Shape::Annulus { .. } | Shape::Disk { .. });
    let mf = manifold.clone();
    let sp = space.clone();
    let event = if has_boundary {
        Some(move |_t: f64, y: &[f64]| mf.signed_interior_distance(sp.to_chart(&y[..sp.dim()])) + 1e-12)
    } else {
        None
    };
    let dense = rk::integrate(rhs, &y0, 0.0, t_end, tol, tol * 1e-2, event);
    if let StopReason::StepUnderflow(t) = dense.stop {
        return Err(CoreError::Integration { t, reason: "step size underflow".into() });
    }
    let boundary_exit = match dense.stop {
        StopReason::Event(t) => Some(t),
        _ => None,
    };
    let states = dense
        .ts
        .iter()
        .zip(dense.ys.iter())
        .map(|(&t, y)| PhaseState {
            position: space.to_chart(&y[..m]),
            velocity: space.chart_vec(&y[..m], &y[m..2 * m]),
            time: t + start.time,
        })
        .collect();
    Ok(Trajectory { states, boundary_exit })
}

/// exp_p(v): endpoint of the geodesic with initial speed v after unit time.
pub fn exponential_from_point(manifold: &ChartedManifold, p: Vec2, v: Vec2) -> Result<Vec2> {
    let phi = manifold.metric.norm(p, v);
    if phi < 1e-15 {
        return Ok(p);
    }
    let unit = v / phi;
    let traj = integrate_geodesic(
        manifold,
        PhaseState { position: p, velocity: unit, time: 0.0 },
        phi,
        1e-11,
    )?;
    if let Some(te) = traj.boundary_exit {
        if te < phi {
            return Err(CoreError::Integration {
                t: te,
                reason: "geodesic exits the domain before time phi(v)".into(),
            });
        }
    }
    let last = traj.states.last().unwrap();
    Ok(manifold.wrap(last.position))
}

/// CSV dump of a ray trajectory: t, x1..xn, v1..vn, det_dF at the accepted
/// integrator nodes.
pub fn trajectory_csv(traj: &RayTrajectory) -> String {
    use crate::numerics::fmt_sig9 as f9;
    let mut out = String::from("t,x1,x2,v1,v2,det_dF\n");
    for &t in traj.node_times() {
        let p = traj.chart_at(t);
        let v = traj.velocity_chart_at(t);
        let det = traj.det_at(t);
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            f9(t),
            f9(p.x),
            f9(p.y),
            f9(v.x),
            f9(v.y),
            f9(det)
        ));
    }
    out
}
