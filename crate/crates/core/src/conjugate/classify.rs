//! Residual-based classification of order-1 and order-2 conjugate events
//! against the canonical forms. The conjugate set is fitted locally from a
//! cloud of detected events; contact order along the kernel decides the
//! class, never a symbolic coordinate change.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};

use super::models::ModelMap;
use super::SingularityClass;

/// Minimum |sin| of the kernel-vs-conjugate-set angle that still counts as
/// transversal (A2).
pub const TANGENCY_THRESHOLD: f64 = 0.05;
/// Fit-significance ratio for accepting a quadratic (A3) or cubic (A4)
/// contact; fits below it are ambiguous and classify as UNCLASSIFIED.
pub const F_RATIO: f64 = 10.0;
/// Max |sin| of a cone-direction-vs-kernel-plane angle for the hyperbolic
/// umbilic test (the D4+ cone meets the kernel plane in two lines).
pub const D4_PLANE_ANGLE: f64 = 0.2;

/// Everything the classifier needs about one event.
pub struct EventNeighborhood {
    pub center: DVector<f64>,
    /// Points of the conjugate set near the event, in source coordinates.
    pub cloud: Vec<DVector<f64>>,
    pub kernel: Vec<DVector<f64>>,
    pub radial: DVector<f64>,
    pub order: usize,
    /// Per-cloud-point slack (|sin| of kernel-vs-tangent angle); only needed
    /// for order-2 subtype decisions.
    pub slack: Option<Vec<f64>>,
}

/// Classify a conjugate event from its fitted neighborhood.
pub fn classify_singularity(nbhd: &EventNeighborhood) -> SingularityClass {
    match nbhd.order {
        1 => classify_order1(nbhd),
        2 => classify_order2(nbhd),
        _ => SingularityClass::Unclassified,
    }
}

fn classify_order1(nbhd: &EventNeighborhood) -> SingularityClass {
    let d = nbhd.center.len();
    if nbhd.cloud.len() < 8 || nbhd.kernel.len() != 1 {
        return SingularityClass::Unclassified;
    }
    let diffs: Vec<DVector<f64>> = nbhd.cloud.iter().map(|p| p - &nbhd.center).collect();
    let rho = (diffs.iter().map(|v| v.norm_squared()).sum::<f64>() / diffs.len() as f64).sqrt();
    if rho == 0.0 {
        return SingularityClass::Unclassified;
    }
    let weights: Vec<f64> = diffs
        .iter()
        .map(|v| (-v.norm_squared() / (rho * rho)).exp())
        .collect();

    // weighted PCA for an initial tangent frame
    let wsum: f64 = weights.iter().sum();
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for (v, w) in diffs.iter().zip(&weights) {
        cov += v * v.transpose() * *w;
    }
    cov /= wsum;
    let eig = cov.symmetric_eigen();
    let mut idx: Vec<usize> = (0..d).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let mut normal: DVector<f64> = eig.eigenvectors.column(idx[0]).into();
    let mut tangent: Vec<DVector<f64>> =
        idx[1..].iter().map(|&i| eig.eigenvectors.column(i).into()).collect();

    // iterate the graph fit: the fitted linear term rotates the frame until
    // the set is an honest graph over its tangent plane (uncentered PCA sees
    // curvature as tilt, so one pass is not enough)
    let dt = d - 1;
    let feats = cubic_feature_count(dt);
    let mut coef = DVector::<f64>::zeros(feats);
    let mut resid = 0.0;
    for pass in 0..6 {
        let mut a = DMatrix::<f64>::zeros(diffs.len(), feats);
        let mut b = DVector::<f64>::zeros(diffs.len());
        for (row, (v, w)) in diffs.iter().zip(&weights).enumerate() {
            let xi: Vec<f64> = tangent.iter().map(|t| t.dot(v) / rho).collect();
            let eta = normal.dot(v) / rho;
            let f = cubic_features(&xi);
            let sw = w.sqrt();
            for (c, fv) in f.iter().enumerate() {
                a[(row, c)] = fv * sw;
            }
            b[row] = eta * sw;
        }
        let svd = a.clone().svd(true, true);
        coef = match svd.solve(&b, 1e-12) {
            Ok(c) => c,
            Err(_) => return SingularityClass::Unclassified,
        };
        resid = (&a * &coef - &b).norm() / (diffs.len() as f64).sqrt();
        let lin_norm: f64 = coef.rows(0, dt).norm();
        if lin_norm < 1e-10 || pass == 5 {
            break;
        }
        // rotate: new normal direction is n - sum a_i t_i, re-orthonormalize
        let mut n_new = normal.clone();
        for (i, t) in tangent.iter().enumerate() {
            n_new -= t * coef[i];
        }
        normal = n_new.normalize();
        for i in 0..dt {
            let mut t = tangent[i].clone();
            t -= &normal * normal.dot(&t);
            for tprev in tangent.iter().take(i) {
                t -= tprev * tprev.dot(&t);
            }
            tangent[i] = t.normalize();
        }
    }

    let k = nbhd.kernel[0].normalize();
    let kn = k.dot(&normal).abs();
    if kn >= TANGENCY_THRESHOLD {
        return SingularityClass::A2;
    }

    // kernel direction in tangent coordinates
    let mut kappa: Vec<f64> = tangent.iter().map(|t| t.dot(&k)).collect();
    let klen = kappa.iter().map(|x| x * x).sum::<f64>().sqrt();
    if klen < 1e-12 {
        return SingularityClass::Unclassified;
    }
    for x in kappa.iter_mut() {
        *x /= klen;
    }

    let q_dir = quadratic_along(&coef, &kappa, dt);
    let c_dir = cubic_along(&coef, &kappa, dt);
    let noise = resid.max(1e-12);

    if q_dir.abs() >= F_RATIO * noise {
        // A3; subtype from the side the conjugate set bends toward
        let opening = normal * q_dir.signum();
        let r = nbhd.radial.normalize();
        if r.dot(&opening) > 0.0 {
            return SingularityClass::A3I;
        }
        return SingularityClass::A3II;
    }
    if c_dir.abs() >= F_RATIO * noise {
        return SingularityClass::A4;
    }
    SingularityClass::Unclassified
}

fn classify_order2(nbhd: &EventNeighborhood) -> SingularityClass {
    let d = nbhd.center.len();
    if d != 3 || nbhd.kernel.len() != 2 || nbhd.cloud.len() < 12 {
        return SingularityClass::Unclassified;
    }
    let k1 = nbhd.kernel[0].normalize();
    let k2 = nbhd.kernel[1].normalize();
    let n_k = cross3(&k1, &k2);
    let n_k = if n_k.norm() < 1e-9 {
        return SingularityClass::Unclassified;
    } else {
        n_k.normalize()
    };

    let dirs: Vec<DVector<f64>> = nbhd
        .cloud
        .iter()
        .filter_map(|p| {
            let v = p - &nbhd.center;
            if v.norm() > 1e-12 {
                Some(v.normalize())
            } else {
                None
            }
        })
        .collect();
    if dirs.len() < 12 {
        return SingularityClass::Unclassified;
    }

    // the conjugate set must be a quadratic cone through the vertex
    if !is_conical(&dirs) {
        return SingularityClass::Unclassified;
    }

    let min_plane_angle = dirs.iter().map(|u| u.dot(&n_k).abs()).fold(f64::INFINITY, f64::min);
    if min_plane_angle >= D4_PLANE_ANGLE {
        return SingularityClass::D4Minus;
    }

    // hyperbolic umbilic: subtype from the radial component along the kernel
    // plane normal, oriented by the A3 generatrix (minimum-slack direction)
    let slack = match &nbhd.slack {
        Some(s) if s.len() == nbhd.cloud.len() => s,
        _ => return SingularityClass::Unclassified,
    };
    let mut g_idx = 0usize;
    let mut g_best = f64::INFINITY;
    for (i, s) in slack.iter().enumerate() {
        if *s < g_best {
            g_best = *s;
            g_idx = i;
        }
    }
    let mut g = (nbhd.cloud[g_idx].clone() - &nbhd.center).normalize();
    let r = nbhd.radial.normalize();
    if g.dot(&r) < 0.0 {
        g = -g;
    }
    let n_oriented = if n_k.dot(&g) >= 0.0 { n_k } else { -n_k };
    if r.dot(&n_oriented) > 0.0 {
        SingularityClass::D4PlusI
    } else {
        SingularityClass::D4PlusII
    }
}

fn cross3(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_vec(vec![
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])
}

/// Does the direction cloud lie on a quadratic cone? Fit the best symmetric
/// form u^T A u = 0 and inspect the residual.
fn is_conical(dirs: &[DVector<f64>]) -> bool {
    // monomials: x^2, y^2, z^2, xy, xz, yz
    let mut m = DMatrix::<f64>::zeros(dirs.len(), 6);
    for (i, u) in dirs.iter().enumerate() {
        m[(i, 0)] = u[0] * u[0];
        m[(i, 1)] = u[1] * u[1];
        m[(i, 2)] = u[2] * u[2];
        m[(i, 3)] = u[0] * u[1];
        m[(i, 4)] = u[0] * u[2];
        m[(i, 5)] = u[1] * u[2];
    }
    let mtm = m.transpose() * &m;
    let eig = mtm.symmetric_eigen();
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    min <= 1e-4 * max.max(1e-300)
}

fn cubic_feature_count(dt: usize) -> usize {
    // linear + quadratic + cubic monomials in dt variables
    let quad = dt * (dt + 1) / 2;
    let cubic = dt * (dt + 1) * (dt + 2) / 6;
    dt + quad + cubic
}

/// Feature vector [xi_i, xi_i xi_j (i<=j), xi_i xi_j xi_k (i<=j<=k)].
fn cubic_features(xi: &[f64]) -> Vec<f64> {
    let dt = xi.len();
    let mut f = Vec::with_capacity(cubic_feature_count(dt));
    f.extend_from_slice(xi);
    for i in 0..dt {
        for j in i..dt {
            f.push(xi[i] * xi[j]);
        }
    }
    for i in 0..dt {
        for j in i..dt {
            for kq in j..dt {
                f.push(xi[i] * xi[j] * xi[kq]);
            }
        }
    }
    f
}

/// Quadratic part of the fit evaluated on (kappa, kappa); the monomial basis
/// makes this a plain sum over coefficients.
fn quadratic_along(coef: &DVector<f64>, kappa: &[f64], dt: usize) -> f64 {
    let mut idx = dt;
    let mut q = 0.0;
    for i in 0..dt {
        for j in i..dt {
            q += coef[idx] * kappa[i] * kappa[j];
            idx += 1;
        }
    }
    q
}

/// Directional third derivative coefficient C(kappa, kappa, kappa).
fn cubic_along(coef: &DVector<f64>, kappa: &[f64], dt: usize) -> f64 {
    let quad = dt * (dt + 1) / 2;
    let mut idx = dt + quad;
    let mut c = 0.0;
    for i in 0..dt {
        for j in i..dt {
            for kq in j..dt {
                c += coef[idx] * kappa[i] * kappa[j] * kappa[kq];
                idx += 1;
            }
        }
    }
    c
}

// ---------------------------------------------------------------------------
// cloud builders
// ---------------------------------------------------------------------------

/// Sample the conjugate set {det = 0} of a model map near `center` by Newton
/// projection along the det gradient from random seeds. Deterministic for a
/// fixed seed.
pub fn model_conjugate_cloud(
    model: &ModelMap,
    center: &DVector<f64>,
    radius: f64,
    n: usize,
    seed: u64,
) -> Vec<DVector<f64>> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let d = model.dim;
    let mut cloud = Vec::with_capacity(n);
    let mut attempts = 0;
    while cloud.len() < n && attempts < n * 50 {
        attempts += 1;
        let mut x = center.clone();
        for i in 0..d {
            x[i] += radius * (2.0 * rng.gen::<f64>() - 1.0);
        }
        // Newton projection onto det = 0
        let mut ok = false;
        for _ in 0..12 {
            let f = model.det(&x);
            let g = model.det_grad(&x);
            let g2 = g.norm_squared();
            if g2 < 1e-18 {
                break;
            }
            let step = &g * (f / g2);
            x -= &step;
            if model.det(&x).abs() < 1e-12 {
                ok = true;
                break;
            }
        }
        if ok && (x.clone() - center).norm() <= 1.5 * radius && (x.clone() - center).norm() > 1e-6 {
            cloud.push(x);
        }
    }
    cloud
}

/// Slack of order-1 points of a model map: |sin| of the angle between the
/// kernel and the tangent plane of the conjugate set.
pub fn model_slack(model: &ModelMap, x: &DVector<f64>) -> f64 {
    let kers = model.kernel(x, 1e-5);
    if kers.len() != 1 {
        return 0.0;
    }
    let n = model.det_grad(x);
    let nn = n.norm();
    if nn < 1e-15 {
        return 0.0;
    }
    kers[0].normalize().dot(&(n / nn)).abs()
}

/// Build the neighborhood of a model event and classify it.
pub fn classify_model_event(
    model: &ModelMap,
    x: &DVector<f64>,
    cloud_radius: f64,
) -> SingularityClass {
    let kernel = model.kernel(x, super::ORDER_REL_TOL * 100.0);
    let order = kernel.len();
    let cloud = model_conjugate_cloud(model, x, cloud_radius, 60, 42);
    let slack = if order == 2 {
        Some(cloud.iter().map(|p| model_slack(model, p)).collect())
    } else {
        None
    };
    let nbhd = EventNeighborhood {
        center: x.clone(),
        cloud,
        kernel,
        radial: model.radial.clone(),
        order,
        slack,
    };
    classify_singularity(&nbhd)
}
