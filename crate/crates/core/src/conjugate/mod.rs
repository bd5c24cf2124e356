//! Conjugate-event detection along rays, the lambda_k functions, and
//! residual-based classification of singularities against the canonical
//! forms.

pub mod classify;
pub mod models;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::flow::{RayCoordinate, RayFamily};
use models::ModelMap;

/// Rank decisions: singular values below this fraction of the largest one
/// count as kernel directions. Double-precision dF columns carry integrator
/// noise around 1e-9, so 1e-7 separates cleanly.
pub const ORDER_REL_TOL: f64 = 1e-7;
/// Conjugate times are bisected to this absolute resolution.
pub const ROOT_XTOL: f64 = 1e-10;
/// A refined |det| minimum below this fraction of the det scale counts as a
/// touching (even-multiplicity) root.
const TOUCH_REL: f64 = 1e-9;
/// Samples per unit of the det scan.
const SCAN_PER_UNIT: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SingularityClass {
    A2,
    #[serde(rename = "A3_I")]
    A3I,
    #[serde(rename = "A3_II")]
    A3II,
    A4,
    #[serde(rename = "D4_plus_I")]
    D4PlusI,
    #[serde(rename = "D4_plus_II")]
    D4PlusII,
    #[serde(rename = "D4_minus")]
    D4Minus,
    #[serde(rename = "UNCLASSIFIED")]
    Unclassified,
}

/// A rank-drop event along a ray.
#[derive(Debug, Clone)]
pub struct ConjugateEvent {
    pub ray: RayCoordinate,
    pub order: usize,
    /// Kernel basis in source coordinates: (t, z) for manifold rays, model
    /// coordinates for canonical maps.
    pub kernel_basis: Vec<DVector<f64>>,
    pub class: SingularityClass,
}

/// lambda_k value: the k-th conjugate time or infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LambdaValue {
    Finite { t: f64 },
    Infinite,
}

impl LambdaValue {
    pub fn finite(&self) -> Option<f64> {
        match self {
            LambdaValue::Finite { t } => Some(*t),
            LambdaValue::Infinite => None,
        }
    }
}

/// Sampled lambda_k over a parameter grid.
#[derive(Debug, Clone)]
pub struct LambdaProfile {
    pub zs: Vec<f64>,
    pub values: Vec<LambdaValue>,
    pub k: usize,
}

// ---------------------------------------------------------------------------
// root scanning
// ---------------------------------------------------------------------------

/// All roots of `det` in (t0, t_max], found by sign-change scan plus
/// near-touching minima, refined with the `precise` evaluator. Returns
/// (t, even_multiplicity) pairs in increasing t.
fn scan_det_roots(
    det_coarse: &dyn Fn(f64) -> f64,
    det_precise: &dyn Fn(f64) -> f64,
    t0: f64,
    t_max: f64,
) -> Result<Vec<(f64, bool)>> {
    let n = ((t_max - t0) * SCAN_PER_UNIT as f64).ceil().max(64.0) as usize;
    let ts: Vec<f64> = (0..=n).map(|i| t0 + (t_max - t0) * i as f64 / n as f64).collect();
    let vals: Vec<f64> = ts.iter().map(|&t| det_coarse(t)).collect();
    let scale = vals.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if scale == 0.0 {
        return Err(CoreError::DegenerateRay { t0, t1: t_max });
    }
    // degenerate stretch: many consecutive near-zero samples
    let mut run = 0usize;
    for (i, v) in vals.iter().enumerate() {
        if v.abs() < 1e-12 * scale {
            run += 1;
            if run >= 12 {
                return Err(CoreError::DegenerateRay {
                    t0: ts[i + 1 - run],
                    t1: ts[i],
                });
            }
        } else {
            run = 0;
        }
    }

    let mut roots: Vec<(f64, bool)> = Vec::new();
    let mut i = 1;
    while i <= n {
        let (ta, tb) = (ts[i - 1], ts[i]);
        let (va, vb) = (vals[i - 1], vals[i]);
        if va == 0.0 {
            if ta > t0 {
                roots.push((ta, false));
            }
            i += 1;
            continue;
        }
        if (va < 0.0) != (vb < 0.0) {
            let t = crate::numerics::brent_like(det_precise, ta, tb, ROOT_XTOL);
            roots.push((t, false));
            i += 1;
            continue;
        }
        // interior minimum of |det|: candidate touching root
        if i >= 2 && vals[i - 1].abs() < vals[i - 2].abs() && vals[i - 1].abs() <= vb.abs() {
            let lo = ts[i - 2];
            let hi = tb;
            let (tm, fm) = crate::numerics::golden_min(|t| det_precise(t).abs(), lo, hi, 1e-12);
            if fm <= TOUCH_REL * scale && tm > t0 + ROOT_XTOL {
                // avoid double-reporting around an already found root
                let dup = roots.iter().any(|(r, _)| (r - tm).abs() < 10.0 * ROOT_XTOL);
                if !dup {
                    roots.push((tm, true));
                }
            }
        }
        i += 1;
    }
    roots.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    roots.dedup_by(|a, b| (a.0 - b.0).abs() < 10.0 * ROOT_XTOL);
    Ok(roots)
}

// ---------------------------------------------------------------------------
// detection on manifold rays
// ---------------------------------------------------------------------------

/// Detect the conjugate events on the ray at parameter z, up to t_max or the
/// domain exit, whichever comes first.
pub fn detect_conjugate_events(
    family: &RayFamily,
    z: f64,
    t_max: f64,
    _tol: f64,
) -> Result<Vec<ConjugateEvent>> {
    let traj = family.trajectory(z, t_max)?;
    let t_hi = traj.exit_time.unwrap_or(t_max).min(traj.t_end());
    let space = traj.space.clone();
    let m = space.dim();
    let det_coarse = |t: f64| traj.det_at(t);

    // precise eval: re-integrate a short span from the nearest node state
    let nodes = traj.node_times().to_vec();
    let det_precise = |t: f64| -> f64 {
        let idx = match nodes.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        let t_node = nodes[idx];
        let y_node = traj.state_at(t_node);
        if (t - t_node).abs() < 1e-14 {
            return space.det2(&y_node[..m], &y_node[m..2 * m], &y_node[2 * m..3 * m]);
        }
        let sp = space.clone();
        let rhs = |_tt: f64, y: &[f64], dy: &mut [f64]| {
            let (x, rest) = y.split_at(m);
            let (v, var) = rest.split_at(m);
            let (j, kk) = var.split_at(m);
            dy[..m].copy_from_slice(v);
            let (dv, dvar) = dy[m..].split_at_mut(m);
            sp.acc(x, v, dv);
            let (dj, dk) = dvar.split_at_mut(m);
            dj.copy_from_slice(kk);
            sp.acc_var(x, v, j, kk, dk);
        };
        let out = crate::flow::rk::integrate(
            rhs,
            &y_node,
            t_node,
            t,
            1e-13,
            1e-14,
            None::<fn(f64, &[f64]) -> f64>,
        );
        let y = out.ys.last().unwrap();
        space.det2(&y[..m], &y[m..2 * m], &y[2 * m..3 * m])
    };

    let roots = scan_det_roots(&det_coarse, &det_precise, 0.0, t_hi)?;
    let mut events = Vec::new();
    for (t, _touching) in roots {
        let (cols, _) = traj.frame_columns_at(t);
        let dm = nalgebra::DMatrix::from_fn(2, 2, |r, c| cols[(r, c)]);
        let kernel = models::kernel_of(&dm, ORDER_REL_TOL);
        let order = kernel.len().max(1);
        events.push(ConjugateEvent {
            ray: RayCoordinate { t, z },
            order,
            kernel_basis: kernel,
            class: SingularityClass::Unclassified,
        });
    }
    Ok(events)
}

/// Detect conjugate events for a canonical model map along the straight ray
/// base + t * dir.
pub fn detect_model_events(
    model: &ModelMap,
    base: &DVector<f64>,
    dir: &DVector<f64>,
    t_max: f64,
) -> Result<Vec<ConjugateEvent>> {
    let det = |t: f64| model.det(&(base + dir * t));
    let roots = scan_det_roots(&det, &det, 0.0, t_max)?;
    let mut events = Vec::new();
    for (t, _touching) in roots {
        let x = base + dir * t;
        let kernel = model.kernel(&x, ORDER_REL_TOL);
        let order = kernel.len().max(1);
        events.push(ConjugateEvent {
            ray: RayCoordinate { t, z: 0.0 },
            order,
            kernel_basis: kernel,
            class: SingularityClass::Unclassified,
        });
    }
    Ok(events)
}

// ---------------------------------------------------------------------------
// lambda_k
// ---------------------------------------------------------------------------

/// The k-th conjugate time (counting multiplicity by kernel dimension) along
/// the ray z, or Infinite if there are fewer than k events before t_cap or
/// the domain exit.
pub fn lambda_k(family: &RayFamily, z: f64, k: usize, t_cap: f64) -> Result<LambdaValue> {
    if k == 0 {
        return Err(CoreError::InvalidArgument("k must be >= 1".into()));
    }
    let events = detect_conjugate_events(family, z, t_cap, ORDER_REL_TOL)?;
    let mut count = 0usize;
    for e in &events {
        count += e.order;
        if count >= k {
            return Ok(LambdaValue::Finite { t: e.ray.t });
        }
    }
    Ok(LambdaValue::Infinite)
}

/// Sample lambda_k over a z grid (parallel, deterministic ordering).
pub fn lambda_profile(family: &RayFamily, zs: &[f64], k: usize, t_cap: f64) -> Result<LambdaProfile> {
    use rayon::prelude::*;
    let values: Result<Vec<LambdaValue>> =
        zs.par_iter().map(|&z| lambda_k(family, z, k, t_cap)).collect();
    Ok(LambdaProfile { zs: zs.to_vec(), values: values?, k })
}

/// Max difference quotient of lambda_k over adjacent grid nodes, computed per
/// finite segment (gaps with Infinite split the profile).
pub fn lipschitz_estimate(profile: &LambdaProfile) -> f64 {
    let mut worst = 0.0f64;
    for w in profile.zs.windows(2).zip(profile.values.windows(2)) {
        let ((z0, z1), (v0, v1)) = ((w.0[0], w.0[1]), (w.1[0], w.1[1]));
        if let (Some(a), Some(b)) = (v0.finite(), v1.finite()) {
            let dz = (z1 - z0).abs();
            if dz > 0.0 {
                worst = worst.max((b - a).abs() / dz);
            }
        }
    }
    worst
}

/// Classify an event found on a manifold ray: the conjugate set near the
/// event is sampled in (t, z) coordinates from the lambda curve over a z
/// window, and the generic residual classifier runs on that cloud.
pub fn classify_ray_event(
    family: &RayFamily,
    event: &ConjugateEvent,
    z_window: f64,
    n_samples: usize,
) -> Result<SingularityClass> {
    let mut cloud = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let z = event.ray.z - z_window + 2.0 * z_window * (i as f64 / (n_samples - 1) as f64);
        let events = detect_conjugate_events(family, z, event.ray.t * 1.5 + 0.5, ORDER_REL_TOL)?;
        // nearest event in t within the window
        if let Some(e) = events
            .iter()
            .filter(|e| (e.ray.t - event.ray.t).abs() < 0.5)
            .min_by(|a, b| {
                let da = (a.ray.t - event.ray.t).abs();
                let db = (b.ray.t - event.ray.t).abs();
                da.partial_cmp(&db).unwrap()
            })
        {
            cloud.push(DVector::from_vec(vec![e.ray.t, e.ray.z]));
        }
    }
    let nbhd = classify::EventNeighborhood {
        center: DVector::from_vec(vec![event.ray.t, event.ray.z]),
        cloud,
        kernel: event.kernel_basis.clone(),
        radial: DVector::from_vec(vec![1.0, 0.0]),
        order: event.order,
        slack: None,
    };
    Ok(classify::classify_singularity(&nbhd))
}

/// JSON export of an event list.
pub fn events_to_json(events: &[ConjugateEvent]) -> serde_json::Value {
    serde_json::Value::Array(
        events
            .iter()
            .map(|e| {
                serde_json::json!({
                    "t": e.ray.t,
                    "z": e.ray.z,
                    "order": e.order,
                    "class": e.class,
                    "kernel_basis": e.kernel_basis.iter()
                        .map(|k| k.iter().cloned().collect::<Vec<f64>>())
                        .collect::<Vec<_>>(),
                })
            })
            .collect(),
    )
}
