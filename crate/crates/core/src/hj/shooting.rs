//! Geodesic-shooting distances on manifolds without a closed-form oracle.
//! A coarse fan of rays from the source seeds Newton iterations on the
//! endpoint map; every converged (direction, length) pair is a connecting
//! geodesic candidate.

use nalgebra::Matrix2;
use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::flow::{FlowSpace, RayFamily, RayTrajectory};
use crate::geometry::{ChartedManifold, Vec2, Vec3, TAU};

/// Number of fan directions used both for seeding and as the multi-start set.
pub const FAN_DIRECTIONS: usize = 32;
/// Endpoint residual for a converged Newton solve.
const NEWTON_RESIDUAL: f64 = 1e-11;

/// A geodesic from the source hitting the query point.
#[derive(Debug, Clone)]
pub struct Connection {
    pub theta: f64,
    pub length: f64,
    /// Unit chart velocity at the query point.
    pub arrival: Vec2,
}

/// Precomputed ray fan from one source point.
pub struct ShootingTable {
    pub manifold: ChartedManifold,
    pub source: Vec2,
    t_max: f64,
    fan: Vec<RayTrajectory>,
    thetas: Vec<f64>,
    space: FlowSpace,
    family: RayFamily,
}

impl ShootingTable {
    pub fn build(manifold: &ChartedManifold, source: Vec2, t_max: f64) -> Result<ShootingTable> {
        let family = RayFamily::from_point(manifold, source, 1e-11);
        let thetas: Vec<f64> =
            (0..FAN_DIRECTIONS).map(|i| TAU * i as f64 / FAN_DIRECTIONS as f64).collect();
        let fan: Result<Vec<RayTrajectory>> =
            thetas.par_iter().map(|&th| family.trajectory(th, t_max)).collect();
        Ok(ShootingTable {
            manifold: manifold.clone(),
            source,
            t_max,
            fan: fan?,
            thetas,
            space: FlowSpace::of(manifold),
            family,
        })
    }

    fn embed(&self, p: Vec2) -> Vec3 {
        let (x, _) = self.space.from_chart(p, Vec2::zeros());
        Vec3::new(x[0], x[1], *x.get(2).unwrap_or(&0.0))
    }

    /// All connecting geodesics found from the fan seeds, sorted by length.
    pub fn connect(&self, x: Vec2) -> Result<Vec<Connection>> {
        let target = self.embed(x);
        // seed candidates: best t along every fan ray, keep local minima over theta
        let mut best: Vec<(f64, f64, f64)> = Vec::with_capacity(self.fan.len()); // (theta, t, dist)
        for (i, traj) in self.fan.iter().enumerate() {
            let te = traj.t_end();
            let nt = 80;
            let mut bt = 0.0;
            let mut bd = f64::INFINITY;
            for k in 0..=nt {
                let t = te * k as f64 / nt as f64;
                let y = traj.state_at(t);
                let pos = Vec3::new(y[0], y[1], *y.get(2).unwrap_or(&0.0));
                let d = (pos - target).norm();
                if d < bd {
                    bd = d;
                    bt = t;
                }
            }
            best.push((self.thetas[i], bt.max(1e-3), bd));
        }
        let mut seeds: Vec<(f64, f64)> = Vec::new();
        let nf = best.len();
        for i in 0..nf {
            let prev = best[(i + nf - 1) % nf].2;
            let next = best[(i + 1) % nf].2;
            if best[i].2 <= prev && best[i].2 <= next {
                seeds.push((best[i].0, best[i].1));
            }
        }
        if seeds.is_empty() {
            seeds.push((best[0].0, best[0].1));
        }

        let mut out: Vec<Connection> = Vec::new();
        for (theta0, t0) in seeds {
            if let Some(c) = self.newton(x, target, theta0, t0) {
                let dup = out
                    .iter()
                    .any(|o| (o.length - c.length).abs() < 1e-8 && circ(o.theta, c.theta) < 1e-6);
                if !dup {
                    out.push(c);
                }
            }
        }
        if out.is_empty() {
            return Err(CoreError::Integration {
                t: 0.0,
                reason: format!("shooting failed to connect ({}, {})", x.x, x.y),
            });
        }
        out.sort_by(|a, b| a.length.partial_cmp(&b.length).unwrap());
        Ok(out)
    }

    /// Shortest connection length: the geodesic distance from the source.
    pub fn distance(&self, x: Vec2) -> Result<f64> {
        Ok(self.connect(x)?[0].length)
    }

    /// Newton on (theta, t) -> exp_source(t u(theta)) with the Jacobi column
    /// as the theta-derivative.
    fn newton(&self, _x_chart: Vec2, target: Vec3, theta0: f64, t0: f64) -> Option<Connection> {
        let mut theta = theta0;
        let mut t = t0.clamp(1e-7, self.t_max);
        let mut traj = self.family.trajectory(theta, (t * 1.3).min(self.t_max)).ok()?;
        for _ in 0..12 {
            let y = traj.state_at(t);
            let m = self.space.dim();
            let pos = Vec3::new(y[0], y[1], *y.get(2).unwrap_or(&0.0));
            let res3 = target - pos;
            // project residual and derivatives onto the tangent frame at pos
            let p_chart = self.space.to_chart(&y[..m]);
            let (e1, e2) = self.space.tangent_frame(p_chart);
            let basis = |v: &[f64]| -> Vec2 {
                let a: f64 = v.iter().zip(&e1).map(|(u, w)| u * w).sum();
                let b: f64 = v.iter().zip(&e2).map(|(u, w)| u * w).sum();
                Vec2::new(a, b)
            };
            let res = basis(&[res3.x, res3.y, res3.z][..m.min(3)]);
            if res.norm() < NEWTON_RESIDUAL {
                let vel = traj.velocity_chart_at(t);
                let speed = self.manifold.metric.norm(p_chart, vel).max(1e-300);
                return Some(Connection { theta: theta.rem_euclid(TAU), length: t, arrival: vel / speed });
            }
            let dv = basis(&y[m..2 * m]);
            let dj = basis(&y[2 * m..3 * m]);
            let jac = Matrix2::new(dv.x, dj.x, dv.y, dj.y);
            let det = jac.determinant();
            if det.abs() < 1e-14 * (1.0 + jac.norm_squared()) {
                return None;
            }
            let delta = jac.try_inverse()? * res;
            let (dt, dth) = (delta.x, delta.y);
            let damp = 1.0f64.min(0.3 / (dt.abs() + dth.abs()).max(1e-9));
            t = (t + dt * damp.min(1.0)).clamp(1e-7, self.t_max);
            theta += dth * damp.min(1.0);
            if dt.abs() + dth.abs() > 2.0 {
                return None;
            }
            traj = self.family.trajectory(theta, (t * 1.3).min(self.t_max)).ok()?;
        }
        None
    }
}

fn circ(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}
