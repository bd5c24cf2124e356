//! Acceptance suite: every criterion runs at its stated tolerance and prints
//! one pass/fail line (visible with `cargo test --test acceptance -- --nocapture`).

use cutlocus_core::cdc::{self, TraceOptions, UmbilicKind};
use cutlocus_core::conjugate::{self, models::ModelClass};
use cutlocus_core::flow::{RayFamily, ScalarFn1};
use cutlocus_core::geometry::{ChartedManifold, Vec2, TAU};
use cutlocus_core::hj::{
    cut, extract, lax_oleinik_solve, reduce, shooting::ShootingTable, BoundaryData, Problem,
    ProblemSource,
};
use cutlocus_core::split::{self, PointClass};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: &str, pass: bool, detail: &str) {
    println!("acceptance {criterion}: {} — {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn annulus_problem(a: Vec<f64>) -> Problem {
    let m = ChartedManifold::annulus(1.0, 2.0);
    Problem::new(m, ProblemSource::Boundary(BoundaryData::constants(a)))
}

fn hausdorff_to_circle(samples: &[Vec2], r: f64) -> f64 {
    // max over samples of distance to the circle, and max over the circle of
    // distance to the samples
    let d1 = samples.iter().map(|p| (p.norm() - r).abs()).fold(0.0f64, f64::max);
    let mut d2 = 0.0f64;
    for i in 0..512 {
        let th = TAU * i as f64 / 512.0;
        let q = Vec2::new(r * th.cos(), r * th.sin());
        let d = samples.iter().map(|p| (p - q).norm()).fold(f64::INFINITY, f64::min);
        d2 = d2.max(d);
    }
    d1.max(d2)
}

#[test]
fn criterion_1_annulus_cut_locus() {
    let start = std::time::Instant::now();
    let problem = annulus_problem(vec![0.0, 0.0]);
    let grid = lax_oleinik_solve(&problem, 256).unwrap();
    let set = extract::singular_set_extract(&problem, &grid, None).unwrap();
    let pts: Vec<Vec2> = set.samples.iter().map(|s| s.point).collect();
    let hd = hausdorff_to_circle(&pts, 1.5);
    let elapsed = start.elapsed().as_secs_f64();
    let tol = 2.0 * set.grid_spacing;
    report(
        "1 (annulus cut locus)",
        hd <= tol && elapsed < 30.0,
        &format!("Hausdorff {hd:.2e} <= {tol:.2e}, runtime {elapsed:.1}s < 30s"),
    );
}

#[test]
fn criterion_2_annulus_family_affinity() {
    let mut detail = String::new();
    let mut ok = true;
    for a in [-0.6, -0.3, 0.0, 0.3, 0.6] {
        let m = ChartedManifold::annulus(1.0, 2.0);
        let model = split::build_split_locus_from_constants(
            &m,
            vec![ScalarFn1::Zero, ScalarFn1::Zero],
            vec![a, 0.0],
            256,
        )
        .unwrap();
        let mean_r = model.samples.iter().map(|s| s.point.norm()).sum::<f64>()
            / model.samples.len() as f64;
        let max_dev = model
            .samples
            .iter()
            .map(|s| (s.point.norm() - (1.5 - a / 2.0)).abs())
            .fold(0.0f64, f64::max);
        let split_rep = split::verify_splits(&model, 24).unwrap();
        let bal = split::verify_balanced(&model).unwrap();
        let this_ok = max_dev <= 1e-3 && split_rep.ok() && !bal.inconclusive
            && bal.worst_defect <= 1e-3;
        ok &= this_ok;
        detail.push_str(&format!(
            "a={a}: r={mean_r:.5} (expect {}) dev {max_dev:.1e} defect {:.1e}; ",
            1.5 - a / 2.0,
            bal.worst_defect
        ));
    }
    report("2 (annulus family affinity)", ok, &detail);
}

/// Lattice brute-force oracle for the cut time of the unit torus from a point.
fn torus_cut_oracle(u: Vec2) -> f64 {
    let mut best = f64::INFINITY;
    for m in -3i32..=3 {
        for n in -3i32..=3 {
            if m == 0 && n == 0 {
                continue;
            }
            let t = Vec2::new(m as f64, n as f64);
            let proj = u.dot(&t);
            if proj > 1e-12 {
                best = best.min(t.norm_squared() / (2.0 * proj));
            }
        }
    }
    best
}

#[test]
fn criterion_3_torus_cut_locus() {
    let m = ChartedManifold::flat_torus([1.0, 1.0]);
    let problem =
        Problem::new(m.clone(), ProblemSource::TorusLattice { p: Vec2::zeros(), b: [0.0, 0.0] });
    let grid = lax_oleinik_solve(&problem, 256).unwrap();
    let set = extract::singular_set_extract(&problem, &grid, None).unwrap();
    let spacing = set.grid_spacing;

    // Hausdorff distance to the cross {x = 1/2} U {y = 1/2}
    let dist_to_cross = |p: Vec2| -> f64 { (p.x - 0.5).abs().min((p.y - 0.5).abs()) };
    let d1 = set.samples.iter().map(|s| dist_to_cross(s.point)).fold(0.0f64, f64::max);
    let mut d2 = 0.0f64;
    for i in 0..=256 {
        let c = i as f64 / 256.0;
        for q in [Vec2::new(0.5, c), Vec2::new(c, 0.5)] {
            let d = set
                .samples
                .iter()
                .map(|s| {
                    let mut dv = s.point - q;
                    dv.x -= dv.x.round();
                    dv.y -= dv.y.round();
                    dv.norm()
                })
                .fold(f64::INFINITY, f64::min);
            d2 = d2.max(d);
        }
    }
    let hd = d1.max(d2);

    // the crossing vertex
    let model = split::build_torus_family(&m, Vec2::zeros(), [0.0, 0.0], 256).unwrap();
    let vertices: Vec<&split::SplitSample> = model
        .samples
        .iter()
        .filter(|s| s.class == PointClass::Crossing)
        .collect();
    let vertex_ok = vertices.len() == 1
        && (vertices[0].point - Vec2::new(0.5, 0.5)).norm() <= 2.0 * spacing;

    // cut times in 64 directions vs the lattice oracle
    let mut worst_cut = 0.0f64;
    for i in 0..64 {
        let z = TAU * (i as f64 + 0.5) / 64.0;
        let rec = cut::cut_time(&problem, 0, z, 2.0, None).unwrap();
        let oracle = torus_cut_oracle(Vec2::new(z.cos(), z.sin()));
        worst_cut = worst_cut.max((rec.t_cut - oracle).abs());
    }

    report(
        "3 (flat torus cut locus)",
        hd <= 2.0 * spacing && vertex_ok && worst_cut <= 1e-6,
        &format!(
            "Hausdorff {hd:.2e} <= {:.2e}, vertex ok {vertex_ok}, worst cut error {worst_cut:.2e}",
            2.0 * spacing
        ),
    );
}

#[test]
fn criterion_4_torus_split_family() {
    let m = ChartedManifold::flat_torus([1.0, 1.0]);
    let bs: Vec<[f64; 2]> = {
        let vals = [-0.2, -0.1, 0.0, 0.1, 0.2];
        let mut out = Vec::new();
        for &x in &vals {
            for &y in &vals {
                out.push([x, y]);
            }
        }
        out
    };
    let models: Vec<split::SplitLocusModel> = bs
        .iter()
        .map(|b| split::build_torus_family(&m, Vec2::zeros(), *b, 256).unwrap())
        .collect();
    let spacing = models[0].grid_spacing;

    // pairwise distinctness: symmetric Hausdorff over subsampled clouds
    let clouds: Vec<Vec<Vec2>> = models
        .iter()
        .map(|mo| mo.samples.iter().step_by(4).map(|s| s.point).collect())
        .collect();
    let wrap_d = |a: Vec2, b: Vec2| -> f64 {
        let mut d = a - b;
        d.x -= d.x.round();
        d.y -= d.y.round();
        d.norm()
    };
    let mut min_pair = f64::INFINITY;
    for i in 0..clouds.len() {
        for j in (i + 1)..clouds.len() {
            let h1 = clouds[i]
                .iter()
                .map(|p| clouds[j].iter().map(|q| wrap_d(*p, *q)).fold(f64::INFINITY, f64::min))
                .fold(0.0f64, f64::max);
            let h2 = clouds[j]
                .iter()
                .map(|p| clouds[i].iter().map(|q| wrap_d(*p, *q)).fold(f64::INFINITY, f64::min))
                .fold(0.0f64, f64::max);
            min_pair = min_pair.min(h1.max(h2));
        }
    }
    let distinct_ok = min_pair > 10.0 * spacing;

    // hyperbola residual on cleave samples, and the balanced check
    let mut worst_res = 0.0f64;
    let mut balanced_ok = true;
    for (model, b) in models.iter().zip(&bs) {
        for s in &model.samples {
            if s.class != PointClass::Cleave {
                continue;
            }
            let (t0, t1) = match (s.branches[0].branch, s.branches[1].branch) {
                (
                    cutlocus_core::hj::BranchId::Translate(m0, n0),
                    cutlocus_core::hj::BranchId::Translate(m1, n1),
                ) => (Vec2::new(m0 as f64, n0 as f64), Vec2::new(m1 as f64, n1 as f64)),
                _ => continue,
            };
            let d0 = (s.point - t0).norm();
            let d1 = (s.point - t1).norm();
            let rhs = b[0] * (t1.x - t0.x) + b[1] * (t1.y - t0.y);
            worst_res = worst_res.max((d0 - d1 - rhs).abs());
        }
        let bal = split::verify_balanced(model).unwrap();
        balanced_ok &= !bal.inconclusive && bal.worst_defect <= 1e-3;
    }

    report(
        "4 (torus split family)",
        distinct_ok && worst_res < 1e-5 && balanced_ok,
        &format!(
            "min pairwise Hausdorff {min_pair:.3} > {:.3}, hyperbola residual {worst_res:.1e} < 1e-5, balanced {balanced_ok}",
            10.0 * spacing
        ),
    );
}

#[test]
fn criterion_5_lambda1_sphere_and_ellipsoid_cut_bound() {
    // sphere: lambda_1 = pi in every direction, and the cut sits there
    let s = ChartedManifold::sphere(1.0);
    let src = Vec2::new(1.1, 0.4);
    let fam = RayFamily::from_point(&s, src, 1e-11);
    let sphere_prob = Problem::new(s.clone(), ProblemSource::Point { p: src });
    let mut worst_l1 = 0.0f64;
    let mut worst_cut_gap = 0.0f64;
    for i in 0..256 {
        let z = TAU * i as f64 / 256.0;
        let l1 = conjugate::lambda_k(&fam, z, 1, 4.0)
            .unwrap()
            .finite()
            .expect("sphere ray has a conjugate point");
        worst_l1 = worst_l1.max((l1 - std::f64::consts::PI).abs());
        if i % 16 == 0 {
            let rec = cut::cut_time(&sphere_prob, 0, z, 4.0, None).unwrap();
            worst_cut_gap = worst_cut_gap.max((rec.t_cut - l1).abs());
        }
    }

    // ellipsoid: t_cut <= lambda_1 on 500 random rays
    let e = ChartedManifold::ellipsoid([1.0, 1.0, 1.5]);
    let esrc = Vec2::new(1.1, 0.7);
    let efam = RayFamily::from_point(&e, esrc, 1e-11);
    let eprob = Problem::new(e.clone(), ProblemSource::Point { p: esrc });
    let table = ShootingTable::build(&e, esrc, 7.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let zs: Vec<f64> = (0..500).map(|_| TAU * rng.gen::<f64>()).collect();
    use rayon::prelude::*;
    let slacks: Vec<f64> = zs
        .par_iter()
        .map(|&z| {
            let l1 = conjugate::lambda_k(&efam, z, 1, 6.5)
                .unwrap()
                .finite()
                .unwrap_or(f64::INFINITY);
            let rec = cut::cut_time(&eprob, 0, z, 6.0, Some(&table)).unwrap();
            l1 - rec.t_cut
        })
        .collect();
    let min_slack = slacks.iter().cloned().fold(f64::INFINITY, f64::min);

    report(
        "5 (lambda_1 and cut bound)",
        worst_l1 <= 1e-6 && worst_cut_gap <= 1e-6 && min_slack >= -1e-8,
        &format!(
            "max |lambda_1 - pi| {worst_l1:.2e} <= 1e-6, |t_cut - lambda_1| {worst_cut_gap:.2e}, min ellipsoid slack {min_slack:.2e} >= -1e-8"
        ),
    );
}

#[test]
fn criterion_6_lipschitz_and_cleave_fraction() {
    // lambda_1 on the ellipsoid of revolution: refinement-stable estimates
    let e = ChartedManifold::ellipsoid([1.0, 1.0, 1.5]);
    let fam = RayFamily::from_point(&e, Vec2::new(1.2, 0.4), 1e-11);
    let lip_l1: Vec<f64> = [256usize, 512]
        .iter()
        .map(|n| {
            let zs: Vec<f64> = (0..*n).map(|i| TAU * i as f64 / *n as f64).collect();
            let prof = conjugate::lambda_profile(&fam, &zs, 1, 6.5).unwrap();
            conjugate::lipschitz_estimate(&prof)
        })
        .collect();
    let ratio_l1 = lip_l1[1] / lip_l1[0];

    // rho_S on the torus cut locus
    let m = ChartedManifold::flat_torus([1.0, 1.0]);
    let tprob =
        Problem::new(m.clone(), ProblemSource::TorusLattice { p: Vec2::zeros(), b: [0.0, 0.0] });
    let lip_rho_torus: Vec<f64> = [256usize, 512]
        .iter()
        .map(|n| {
            let mut worst = 0.0f64;
            let mut prev: Option<f64> = None;
            let dz = TAU / *n as f64;
            for i in 0..=*n {
                let z = dz * i as f64;
                let r = cut::cut_time(&tprob, 0, z, 2.0, None).unwrap().t_cut;
                if let Some(p) = prev {
                    worst = worst.max((r - p).abs() / dz);
                }
                prev = Some(r);
            }
            worst
        })
        .collect();
    let ratio_rho_t = lip_rho_torus[1] / lip_rho_torus[0];

    // rho_S on the annulus with offset constants and smooth data
    let am = ChartedManifold::annulus(1.0, 2.0);
    let aprob = Problem::new(
        am,
        ProblemSource::Boundary(BoundaryData {
            g: vec![
                ScalarFn1::Sine { amplitude: 0.1, frequency: 1.0, phase: 0.0 },
                ScalarFn1::Zero,
            ],
            offsets: vec![0.4, 0.0],
        }),
    );
    let lip_rho_ann: Vec<f64> = [256usize, 512]
        .iter()
        .map(|n| {
            let mut worst = 0.0f64;
            let mut prev: Option<f64> = None;
            let dz = TAU / *n as f64;
            for i in 0..=*n {
                let z = dz * i as f64;
                let r = cut::cut_time(&aprob, 0, z, 2.0, None).unwrap().t_cut;
                if let Some(p) = prev {
                    worst = worst.max((r - p).abs() / dz);
                }
                prev = Some(r);
            }
            worst
        })
        .collect();
    let ratio_rho_a = lip_rho_ann[1] / lip_rho_ann[0];

    // structure fractions on a generic torus model at 512^2
    let model = split::build_torus_family(&m, Vec2::zeros(), [0.1, 0.07], 512).unwrap();
    let n_tot = model.samples.len() as f64;
    let n_cleave = model.samples.iter().filter(|s| s.class == PointClass::Cleave).count() as f64;
    let n_rem =
        model.samples.iter().filter(|s| s.class == PointClass::Remainder).count() as f64;
    let cleave_frac = n_cleave / n_tot;
    let rem_frac = n_rem / n_tot;

    let ratios_ok = [ratio_l1, ratio_rho_t, ratio_rho_a]
        .iter()
        .all(|r| (0.5..=2.0).contains(r));
    report(
        "6 (Lipschitz evidence and structure fractions)",
        ratios_ok && cleave_frac >= 0.98 && rem_frac <= 0.005,
        &format!(
            "ratios lambda1 {ratio_l1:.3}, rho torus {ratio_rho_t:.3}, rho annulus {ratio_rho_a:.3} in [0.5,2]; cleave {cleave_frac:.4} >= 0.98, remainder {rem_frac:.4} <= 0.005"
        ),
    );
}

#[test]
fn criterion_7_reduction_identity() {
    let m = ChartedManifold::disk(1.0);
    let problem = Problem::new(
        m,
        ProblemSource::Boundary(BoundaryData {
            g: vec![ScalarFn1::Sine { amplitude: 0.1, frequency: 1.0, phase: 0.0 }],
            offsets: vec![0.0],
        }),
    );
    let red = reduce::extend_and_reduce(&problem).unwrap();
    let err = red.verify(128).unwrap();
    report(
        "7 (reduction to zero boundary data)",
        err <= 5e-4,
        &format!("sup |u - d(Lambda, .)| = {err:.2e} <= 5e-4 on the 128^2 probe grid"),
    );
}

/// The pinned constant of criterion 8: |dT(sigma)| <= C h for the three test
/// functions below, at both resolutions.
const CURRENT_BOUNDARY_C: f64 = 6.0;

#[test]
fn criterion_8_current_and_boundary() {
    let sigmas: Vec<Box<dyn Fn(Vec2) -> f64 + Sync>> = vec![
        Box::new(|p: Vec2| p.x),
        Box::new(|p: Vec2| (2.0 * p.x + p.y).sin()),
        Box::new(|p: Vec2| p.x * p.y),
    ];
    let mut ok = true;
    let mut detail = String::new();

    // annulus models (criterion 2 family) at two resolutions
    for a in [-0.3, 0.0, 0.4] {
        for n in [128usize, 256] {
            let m = ChartedManifold::annulus(1.0, 2.0);
            let model = split::build_split_locus_from_constants(
                &m,
                vec![ScalarFn1::Zero, ScalarFn1::Zero],
                vec![a, 0.0],
                n,
            )
            .unwrap();
            let h = model.grid_spacing;
            for chain in &model.components {
                let dh = split::component_h_differences(&model, chain).unwrap();
                let mean = dh.iter().sum::<f64>() / dh.len() as f64;
                let std =
                    (dh.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / dh.len() as f64).sqrt();
                ok &= std <= 1e-4;
            }
            for sigma in &sigmas {
                let res = split::boundary_residual(&model, sigma).unwrap().abs();
                if res > CURRENT_BOUNDARY_C * h {
                    ok = false;
                    detail.push_str(&format!("annulus a={a} n={n}: dT {res:.1e} > C h; "));
                }
            }
            if a == 0.0 {
                // the cut locus carries the zero current
                let phi = |p: Vec2| Vec2::new(-p.y, p.x) / p.norm_squared();
                let t = split::current_t_eval(&model, &phi).unwrap();
                let phi_norm = TAU; // loop integral scale of phi
                if t.abs() > 1e-6 * phi_norm {
                    ok = false;
                    detail.push_str(&format!("cut-locus current {t:.1e}; "));
                }
            }
        }
    }

    // torus models (criterion 4 family, representative corners) at two sizes
    let m = ChartedManifold::flat_torus([1.0, 1.0]);
    for b in [[0.0, 0.0], [0.1, 0.0], [0.2, 0.2], [-0.1, 0.2]] {
        for n in [128usize, 256] {
            let model = split::build_torus_family(&m, Vec2::zeros(), b, n).unwrap();
            let h = model.grid_spacing;
            for chain in &model.components {
                let dh = split::component_h_differences(&model, chain).unwrap();
                if dh.is_empty() {
                    continue;
                }
                let mean = dh.iter().sum::<f64>() / dh.len() as f64;
                let std =
                    (dh.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / dh.len() as f64).sqrt();
                ok &= std <= 1e-4;
            }
            for sigma in &sigmas {
                let res = split::boundary_residual(&model, sigma).unwrap().abs();
                if res > CURRENT_BOUNDARY_C * h {
                    ok = false;
                    detail.push_str(&format!("torus b={b:?} n={n}: dT {res:.1e} > C h; "));
                }
            }
            if b == [0.0, 0.0] {
                let phi = |_p: Vec2| Vec2::new(1.0, 0.3);
                let t = split::current_t_eval(&model, &phi).unwrap();
                if t.abs() > 1e-6 * 2.0 {
                    ok = false;
                    detail.push_str(&format!("torus cut current {t:.1e}; "));
                }
            }
        }
    }
    if detail.is_empty() {
        detail = format!("h1-h2 constant per component, |dT| <= {CURRENT_BOUNDARY_C} h at both resolutions, cut currents vanish");
    }
    report("8 (the current T)", ok, &detail);
}

#[test]
fn criterion_9_cdc_suite() {
    let mut ok = true;
    let mut detail = String::new();

    // unbeatable identity on the curvature-exact fixture
    let ell = cdc::fixtures::EllipseNormalExp::new(2.0, 1.0);
    let start = DVector::from_vec(vec![ell.rho(1.05), 1.05]);
    let mut opts = TraceOptions::default();
    opts.step = 1e-3;
    opts.slack_stop = 2e-2;
    let curve = cdc::trace_cdc(&ell, &start, &opts).unwrap();
    let drop = curve.radius_drop();
    let len = curve.image_length(&ell);
    let id_err = (drop - len).abs() / len.max(1.0);
    if id_err > 1e-4 {
        ok = false;
        detail.push_str(&format!("unbeatable identity error {id_err:.1e}; "));
    }

    // A3 retort matches (-2t, 3t^2) pointwise
    let a3 = cdc::canonical_form_map(ModelClass::A3);
    let nsamp = 400;
    let samples: Vec<cdc::CdcSample> = (0..=nsamp)
        .map(|i| {
            let t = -0.5 + 0.5 * i as f64 / nsamp as f64;
            cdc::CdcSample {
                x: DVector::from_vec(vec![t, 3.0 * t * t]),
                radius: 3.0 * t * t,
                slack: 1.0,
            }
        })
        .collect();
    let alpha = cdc::CDCurve {
        samples,
        stop: cdc::CdcStop::A3Hit { subtype: cdc::A3Subtype::TypeI },
    };
    let retort = cdc::build_retort(
        &a3,
        &alpha,
        &DVector::from_vec(vec![0.0, 0.0]),
        Some(&DVector::from_vec(vec![1.0, 0.0])),
    )
    .unwrap();
    let mut retort_err = 0.0f64;
    for (i, x) in retort.samples.iter().enumerate().skip(1) {
        let t = -(i as f64) * 0.5 / nsamp as f64;
        retort_err = retort_err.max((x[0] + 2.0 * t).abs().max((x[1] - 3.0 * t * t).abs()));
    }
    if retort_err > 1e-8 {
        ok = false;
        detail.push_str(&format!("retort mismatch {retort_err:.1e}; "));
    }

    // terminality: descending flow ends at type I, leaves type II
    let curve_i = cdc::trace_cdc(
        &a3,
        &DVector::from_vec(vec![-0.5, 0.75]),
        &TraceOptions::default(),
    )
    .unwrap();
    let term_i =
        matches!(curve_i.stop, cdc::CdcStop::A3Hit { subtype: cdc::A3Subtype::TypeI });
    let a3_ii = cdc::canonical_form_map(ModelClass::A3).with_radial(vec![0.0, -1.0]);
    let mut opts2 = TraceOptions::default();
    opts2.domain_radius = 1.0;
    let curve_ii =
        cdc::trace_cdc(&a3_ii, &DVector::from_vec(vec![0.02, 0.0012]), &opts2).unwrap();
    let leaves_ii = curve_ii.stop == cdc::CdcStop::DomainExit;
    if !term_i || !leaves_ii {
        ok = false;
        detail.push_str(&format!("terminality: I={term_i} II-leaves={leaves_ii}; "));
    }

    // D4- root intervals on a 20 x 20 admissible grid
    let inv_sqrt3 = 1.0 / 3.0f64.sqrt();
    let mut intervals_ok = true;
    for i in 0..20 {
        for j in 0..20 {
            let a = -0.95 + 1.9 * i as f64 / 19.0;
            let b = -0.95 + 1.9 * j as f64 / 19.0;
            if a * a + b * b >= 1.0 {
                continue;
            }
            let r = cdc::d4_root_analysis(a, b, UmbilicKind::Minus).unwrap();
            intervals_ok &=
                r.len() == 3 && r[0] < -inv_sqrt3 && r[1].abs() < inv_sqrt3 && r[2] > inv_sqrt3;
        }
    }
    if !intervals_ok {
        ok = false;
        detail.push_str("D4- intervals failed; ");
    }

    // the elliptic umbilic vertex emits exactly three CDCs
    let d4m = cdc::canonical_form_map(ModelClass::D4Minus);
    let dirs = cdc::d4_minus_vertex_cdc_directions(&d4m, 0.05, 720).unwrap();
    let a3_dirs = [TAU - std::f64::consts::FRAC_PI_3, std::f64::consts::FRAC_PI_3, std::f64::consts::PI];
    let genuine = dirs
        .iter()
        .filter(|d| {
            a3_dirs.iter().all(|a| {
                let diff = (*d - a).rem_euclid(TAU);
                diff.min(TAU - diff) > 1e-2
            })
        })
        .count();
    if genuine != 3 {
        ok = false;
        detail.push_str(&format!("vertex emitted {genuine} CDCs; "));
    }

    if detail.is_empty() {
        detail = format!(
            "identity err {id_err:.1e}, retort err {retort_err:.1e}, terminality ok, intervals ok, 3 vertex CDCs"
        );
    }
    report("9 (CDC suite)", ok, &detail);
}

#[test]
fn criterion_10_balanced_discrimination() {
    let problem = annulus_problem(vec![0.0, 0.0]);
    let concentric: Vec<Vec2> = (0..2048)
        .map(|i| {
            let th = TAU * i as f64 / 2048.0;
            Vec2::new(1.5 * th.cos(), 1.5 * th.sin())
        })
        .collect();
    let off: Vec<Vec2> = (0..2048)
        .map(|i| {
            let th = TAU * i as f64 / 2048.0;
            Vec2::new(0.1 + 1.5 * th.cos(), 1.5 * th.sin())
        })
        .collect();
    let d_conc = split::balanced_defect_of_annulus_cloud(&problem, &concentric).unwrap();
    let d_off = split::balanced_defect_of_annulus_cloud(&problem, &off).unwrap();

    // and the full pipeline on the built cut-locus model
    let m = ChartedManifold::annulus(1.0, 2.0);
    let model = split::build_split_locus_from_constants(
        &m,
        vec![ScalarFn1::Zero, ScalarFn1::Zero],
        vec![0.0, 0.0],
        256,
    )
    .unwrap();
    let bal = split::verify_balanced(&model).unwrap();

    report(
        "10 (balanced discrimination)",
        d_conc <= 1e-3 && d_off >= 1e-3 && bal.worst_defect <= 1e-3,
        &format!(
            "concentric defect {d_conc:.1e} <= 1e-3, off-center defect {d_off:.2e} >= 1e-3, model defect {:.1e}",
            bal.worst_defect
        ),
    );
}
