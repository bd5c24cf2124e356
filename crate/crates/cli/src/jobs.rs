//! Job-file decoding and command execution.

use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use cutlocus_core::cdc::{self, CdcSpace, TraceOptions, UmbilicKind};
use cutlocus_core::conjugate::{self, models::ModelClass};
use cutlocus_core::error::CoreError;
use cutlocus_core::flow::{self, PhaseState, RayFamily, ScalarFn1};
use cutlocus_core::geometry::{ManifoldSpec, Vec2, TAU};
use cutlocus_core::hj::{
    self, cut, extract, BoundaryData, Problem, ProblemSource,
};
use cutlocus_core::numerics::fmt_sig9;
use cutlocus_core::split;
use cutlocus_core::svg::{class_color, SvgDoc};

#[derive(Debug)]
pub enum JobError {
    Config(String),
    Numerical(String),
}

impl From<CoreError> for JobError {
    fn from(e: CoreError) -> JobError {
        match e {
            CoreError::Config(_)
            | CoreError::InvalidArgument(_)
            | CoreError::Compatibility { .. }
            | CoreError::UnsupportedOracle(_)
            | CoreError::OutsideChamber(_) => JobError::Config(e.to_string()),
            other => JobError::Numerical(other.to_string()),
        }
    }
}

impl From<std::io::Error> for JobError {
    fn from(e: std::io::Error) -> JobError {
        JobError::Numerical(format!("i/o: {e}"))
    }
}

pub struct Overrides {
    pub tol: Option<f64>,
    pub epsilon_min: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JobFile {
    manifold: Option<ManifoldSpec>,
    command: String,
    #[serde(default)]
    params: Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundarySpec {
    g: Vec<ScalarFn1>,
    #[serde(default)]
    offsets: Vec<f64>,
}

fn parse_params<T: serde::de::DeserializeOwned>(v: &Value) -> Result<T, JobError> {
    serde_json::from_value(v.clone()).map_err(|e| JobError::Config(format!("params: {e}")))
}

fn round9(x: f64) -> f64 {
    fmt_sig9(x).parse().unwrap_or(x)
}

fn write(out: &Path, name: &str, content: &str) -> Result<(), JobError> {
    std::fs::write(out.join(name), content)?;
    Ok(())
}

fn write_json(out: &Path, name: &str, v: &Value) -> Result<(), JobError> {
    write(out, name, &format!("{}\n", serde_json::to_string_pretty(v).unwrap()))
}

pub fn run_job_file(path: &Path, out: &Path, ov: Overrides) -> Result<(), JobError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| JobError::Config(format!("cannot read job file: {e}")))?;
    let job: JobFile =
        serde_json::from_str(&text).map_err(|e| JobError::Config(format!("job file: {e}")))?;
    if let Some(t) = ov.tol {
        if t <= 0.0 {
            return Err(JobError::Config("tol must be positive".into()));
        }
    }
    if let Some(e) = ov.epsilon_min {
        if e <= 0.0 {
            return Err(JobError::Config("epsilon-min must be positive".into()));
        }
    }
    match job.command.as_str() {
        "geodesic" => run_geodesic(&job, out, &ov),
        "conjugate-locus" => run_conjugate_locus(&job, out, &ov),
        "cut-locus" => run_cut_locus(&job, out, &ov),
        "solve-hjbvp" => run_solve(&job, out, &ov),
        "split-family" => run_split_family(&job, out, &ov, false),
        "verify-balanced" => run_split_family(&job, out, &ov, true),
        "trace-cdc" => run_trace_cdc(&job, out),
        "d4-roots" => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct P {
                kind: String,
                a: f64,
                b: f64,
            }
            let p: P = parse_params(&job.params)?;
            run_d4_roots(&p.kind, p.a, p.b, out)
        }
        other => Err(JobError::Config(format!("unknown command '{other}'"))),
    }
}

fn manifold_of(job: &JobFile) -> Result<cutlocus_core::ChartedManifold, JobError> {
    let spec = job
        .manifold
        .as_ref()
        .ok_or_else(|| JobError::Config("this command needs a manifold".into()))?;
    Ok(spec.build()?)
}

fn source_problem(
    m: &cutlocus_core::ChartedManifold,
    source: Option<[f64; 2]>,
    boundary: Option<BoundarySpec>,
    b: Option<[f64; 2]>,
    eps_min: Option<f64>,
) -> Result<Problem, JobError> {
    let src = match (source, boundary) {
        (Some(p), None) => {
            let p = Vec2::new(p[0], p[1]);
            if matches!(m.shape, cutlocus_core::geometry::Shape::FlatTorus { .. }) {
                ProblemSource::TorusLattice { p, b: b.unwrap_or([0.0, 0.0]) }
            } else {
                ProblemSource::Point { p }
            }
        }
        (None, Some(bd)) => {
            if bd.g.len() != m.boundary_components.len() {
                return Err(JobError::Config(format!(
                    "boundary data covers {} components, manifold has {}",
                    bd.g.len(),
                    m.boundary_components.len()
                )));
            }
            ProblemSource::Boundary(BoundaryData { g: bd.g, offsets: bd.offsets })
        }
        _ => {
            return Err(JobError::Config(
                "exactly one of `source` (a point) or `boundary` (data) is required".into(),
            ))
        }
    };
    let mut p = Problem::new(m.clone(), src);
    if let Some(e) = eps_min {
        p = p.with_eps_min(e);
    }
    Ok(p)
}

fn chart_bounds(m: &cutlocus_core::ChartedManifold) -> (Vec2, Vec2) {
    let (xw, yw) = hj::default_grid_window(m);
    (Vec2::new(xw[0], yw[0]), Vec2::new(xw[1], yw[1]))
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

fn run_geodesic(job: &JobFile, out: &Path, ov: &Overrides) -> Result<(), JobError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct P {
        start: [f64; 2],
        direction: [f64; 2],
        t_end: f64,
        #[serde(default)]
        tol: Option<f64>,
    }
    let p: P = parse_params(&job.params)?;
    let tol = ov.tol.or(p.tol).unwrap_or(1e-10);
    if tol <= 0.0 || p.t_end <= 0.0 {
        return Err(JobError::Config("tolerances and t_end must be positive".into()));
    }
    let m = manifold_of(job)?;
    let start = Vec2::new(p.start[0], p.start[1]);
    let dir = Vec2::new(p.direction[0], p.direction[1]);
    let phi = m.metric.norm(start, dir);
    if phi <= 0.0 {
        return Err(JobError::Config("direction must be nonzero".into()));
    }

    // ray family oriented along the requested direction gives det dF columns
    let space = flow::FlowSpace::of(&m);
    let (e1, e2) = space.tangent_frame(start);
    let (_, v_emb) = space.from_chart(start, dir / phi);
    let dot = |a: &Vec<f64>, b: &Vec<f64>| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    let z = dot(&v_emb, &e2).atan2(dot(&v_emb, &e1));
    let fam = RayFamily::from_point(&m, start, tol);
    let traj = fam.trajectory(z, p.t_end).map_err(JobError::from)?;
    write(out, "trajectory.csv", &flow::trajectory_csv(&traj))?;

    let states = flow::integrate_geodesic(
        &m,
        PhaseState { position: start, velocity: dir / phi, time: 0.0 },
        p.t_end,
        tol,
    )?;
    let (lo, hi) = chart_bounds(&m);
    let mut doc = SvgDoc::new(lo, hi);
    let pts: Vec<Vec2> = states.states.iter().map(|s| m.wrap(s.position)).collect();
    doc.polyline(&pts, "#1f77b4", 1.5);
    write(out, "plot.svg", &doc.finish())?;
    Ok(())
}

fn run_conjugate_locus(job: &JobFile, out: &Path, ov: &Overrides) -> Result<(), JobError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct P {
        source: [f64; 2],
        #[serde(default)]
        directions: Option<usize>,
        t_max: f64,
        /// Classify the first event per direction against the canonical
        /// forms (slower: each classification sweeps a z window).
        #[serde(default)]
        classify: bool,
    }
    let p: P = parse_params(&job.params)?;
    let n = p.directions.unwrap_or(256);
    if p.t_max <= 0.0 || n < 4 {
        return Err(JobError::Config("t_max must be positive, directions >= 4".into()));
    }
    let m = manifold_of(job)?;
    let tol = ov.tol.unwrap_or(1e-11);
    let fam = RayFamily::from_point(&m, Vec2::new(p.source[0], p.source[1]), tol);
    let mut all = Vec::new();
    let mut image_pts = Vec::new();
    for i in 0..n {
        let z = TAU * i as f64 / n as f64;
        let mut events =
            conjugate::detect_conjugate_events(&fam, z, p.t_max, conjugate::ORDER_REL_TOL)?;
        if let Some(first) = events.first_mut() {
            if p.classify {
                first.class = conjugate::classify_ray_event(&fam, first, 0.15, 31)?;
            }
            let traj = fam.trajectory(z, first.ray.t + 1e-6)?;
            image_pts.push(m.wrap(traj.chart_at(first.ray.t)));
        }
        all.extend(events);
    }
    write_json(out, "events.json", &conjugate::events_to_json(&all))?;
    let (lo, hi) = chart_bounds(&m);
    let mut doc = SvgDoc::new(lo, hi);
    for q in &image_pts {
        doc.circle(*q, 2.0, "#d62728");
    }
    write(out, "plot.svg", &doc.finish())?;
    Ok(())
}

fn run_cut_locus(job: &JobFile, out: &Path, ov: &Overrides) -> Result<(), JobError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct P {
        #[serde(default)]
        source: Option<[f64; 2]>,
        #[serde(default)]
        boundary: Option<BoundarySpec>,
        #[serde(default)]
        b: Option<[f64; 2]>,
        #[serde(default)]
        grid: Option<usize>,
        #[serde(default)]
        rays: Option<usize>,
    }
    let p: P = parse_params(&job.params)?;
    let grid_n = p.grid.unwrap_or(256);
    if grid_n < 8 {
        return Err(JobError::Config("grid must be at least 8".into()));
    }
    let m = manifold_of(job)?;
    let problem = source_problem(&m, p.source, p.boundary, p.b, ov.epsilon_min)?;
    let grid = hj::lax_oleinik_solve(&problem, grid_n)?;
    let set = extract::singular_set_extract(&problem, &grid, None)?;
    write_json(out, "singular_set.json", &extract::singular_set_json(&set))?;

    // per-ray cut records
    let nrays = p.rays.unwrap_or(64);
    let mut records = String::from("z,t_cut,reason\n");
    for i in 0..nrays {
        let z = TAU * i as f64 / nrays as f64;
        let rec = cut::cut_time(&problem, 0, z, 8.0, None)?;
        records.push_str(&format!(
            "{},{},{}\n",
            fmt_sig9(z),
            fmt_sig9(rec.t_cut),
            match rec.reason {
                cut::CutReason::MultipleMinimizers => "multiple_minimizers",
                cut::CutReason::Conjugate => "conjugate",
                cut::CutReason::DomainExit => "domain_exit",
            }
        ));
    }
    write(out, "cut_records.csv", &records)?;

    let (lo, hi) = chart_bounds(&m);
    let mut doc = SvgDoc::new(lo, hi);
    for comp in &m.boundary_components {
        let pts: Vec<Vec2> =
            (0..=256).map(|i| comp.point(comp.period() * i as f64 / 256.0)).collect();
        doc.polyline(&pts, "#999999", 1.0);
    }
    for s in &set.samples {
        doc.circle(s.point, 1.5, "#1f77b4");
    }
    write(out, "plot.svg", &doc.finish())?;
    Ok(())
}

fn run_solve(job: &JobFile, out: &Path, ov: &Overrides) -> Result<(), JobError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct P {
        #[serde(default)]
        source: Option<[f64; 2]>,
        #[serde(default)]
        boundary: Option<BoundarySpec>,
        #[serde(default)]
        b: Option<[f64; 2]>,
        #[serde(default)]
        grid: Option<usize>,
    }
    let p: P = parse_params(&job.params)?;
    let m = manifold_of(job)?;
    let problem = source_problem(&m, p.source, p.boundary, p.b, ov.epsilon_min)?;
    let grid = hj::lax_oleinik_solve(&problem, p.grid.unwrap_or(128))?;
    write(out, "solution.csv", &grid.to_csv())?;

    // grayscale map of u
    let umax = grid.u.iter().cloned().filter(|u| u.is_finite()).fold(0.0f64, f64::max);
    let (lo, hi) = chart_bounds(&m);
    let mut doc = SvgDoc::new(lo, hi);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = grid.index(i, j);
            if grid.mask[k] && grid.u[k].is_finite() {
                let q = (255.0 * (1.0 - grid.u[k] / umax.max(1e-12))) as u8;
                doc.circle(grid.point(i, j), 1.2, &format!("rgb({q},{q},{q})"));
            }
        }
    }
    write(out, "plot.svg", &doc.finish())?;
    Ok(())
}

fn run_split_family(
    job: &JobFile,
    out: &Path,
    _ov: &Overrides,
    with_reports: bool,
) -> Result<(), JobError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct P {
        #[serde(default)]
        source: Option<[f64; 2]>,
        #[serde(default)]
        b: Option<[f64; 2]>,
        #[serde(default)]
        a: Option<Vec<f64>>,
        #[serde(default)]
        g: Option<Vec<ScalarFn1>>,
        #[serde(default)]
        grid: Option<usize>,
    }
    let p: P = parse_params(&job.params)?;
    let grid_n = p.grid.unwrap_or(256);
    let m = manifold_of(job)?;
    let model = if let Some(b) = p.b {
        let src = p.source.map(|s| Vec2::new(s[0], s[1])).unwrap_or_else(Vec2::zeros);
        split::build_torus_family(&m, src, b, grid_n)?
    } else if let Some(a) = p.a {
        let g = p
            .g
            .unwrap_or_else(|| vec![ScalarFn1::Zero; m.boundary_components.len()]);
        split::build_split_locus_from_constants(&m, g, a, grid_n)?
    } else {
        return Err(JobError::Config(
            "split-family needs either `b` (torus homology) or `a` (boundary constants)".into(),
        ));
    };
    write_json(out, "model.json", &split::model_to_json(&model))?;

    if with_reports {
        let split_rep = split::verify_splits(&model, 24)?;
        let bal = split::verify_balanced(&model)?;
        write_json(
            out,
            "report.json",
            &serde_json::json!({
                "split": { "probes": split_rep.probes, "failures": split_rep.failures.len() },
                "balanced": {
                    "worst_defect": round9(bal.worst_defect),
                    "worst_quotient_error": round9(bal.worst_quotient_error),
                    "inconclusive": bal.inconclusive,
                },
                "histogram": split::class_histogram(&model),
            }),
        )?;
    }

    let (lo, hi) = chart_bounds(&m);
    let mut doc = SvgDoc::new(lo, hi);
    for chain in &model.components {
        let pts: Vec<Vec2> = chain.iter().map(|&i| model.samples[i].point).collect();
        doc.polyline(&pts, "#bbbbbb", 0.8);
    }
    for s in &model.samples {
        doc.circle(s.point, if s.vertex { 3.0 } else { 1.5 }, class_color(&s.class));
    }
    write(out, "plot.svg", &doc.finish())?;
    Ok(())
}

fn run_trace_cdc(job: &JobFile, out: &Path) -> Result<(), JobError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct P {
        model: String,
        start: Vec<f64>,
        #[serde(default)]
        radial: Option<Vec<f64>>,
        #[serde(default)]
        step: Option<f64>,
        #[serde(default)]
        slack_stop: Option<f64>,
        #[serde(default)]
        semiaxes: Option<[f64; 2]>,
    }
    let p: P = parse_params(&job.params)?;
    let mut opts = TraceOptions::default();
    if let Some(s) = p.step {
        if s <= 0.0 {
            return Err(JobError::Config("step must be positive".into()));
        }
        opts.step = s;
    }
    if let Some(s) = p.slack_stop {
        opts.slack_stop = s;
    }
    let space: Box<dyn CdcSpace> = match p.model.as_str() {
        "A2" => Box::new(build_model(ModelClass::A2, p.radial)),
        "A3" => Box::new(build_model(ModelClass::A3, p.radial)),
        "A4" => Box::new(build_model(ModelClass::A4, p.radial)),
        "D4_plus" => Box::new(build_model(ModelClass::D4Plus, p.radial)),
        "D4_minus" => Box::new(build_model(ModelClass::D4Minus, p.radial)),
        "ellipse" => {
            let ax = p.semiaxes.unwrap_or([2.0, 1.0]);
            Box::new(cdc::fixtures::EllipseNormalExp::new(ax[0], ax[1]))
        }
        other => return Err(JobError::Config(format!("unknown model '{other}'"))),
    };
    let start = cutlocus_core::nalgebra::DVector::from_vec(p.start);
    if start.len() != space.dim() {
        return Err(JobError::Config("start dimension does not match the model".into()));
    }
    let curve = cdc::trace_cdc(space.as_ref(), &start, &opts)?;
    write(out, "cdc.csv", &curve.to_csv())?;

    let mut image = String::from("s,y1,y2,y3\n");
    let r0 = curve.samples.first().map(|s| s.radius).unwrap_or(0.0);
    for s in &curve.samples {
        let y = space.eval(&s.x);
        image.push_str(&format!(
            "{},{},{},{}\n",
            fmt_sig9(r0 - s.radius),
            fmt_sig9(y[0]),
            fmt_sig9(*y.get(1).unwrap_or(&0.0)),
            fmt_sig9(*y.get(2).unwrap_or(&0.0)),
        ));
    }
    write(out, "cdc_image.csv", &image)?;

    let join_json = match cdc::a3_join(space.as_ref(), &curve) {
        Ok(j) => cdc::join_to_json(&j),
        Err(e) => serde_json::json!({ "refused": e.to_string() }),
    };
    write_json(out, "joins.json", &join_json)?;
    Ok(())
}

fn build_model(
    class: ModelClass,
    radial: Option<Vec<f64>>,
) -> cutlocus_core::conjugate::models::ModelMap {
    let m = cdc::canonical_form_map(class);
    match radial {
        Some(r) => m.with_radial(r),
        None => m,
    }
}

pub fn run_d4_roots(kind: &str, a: f64, b: f64, out: &Path) -> Result<(), JobError> {
    let kind_enum = match kind {
        "minus" => UmbilicKind::Minus,
        "plus" => UmbilicKind::Plus,
        other => return Err(JobError::Config(format!("kind must be minus or plus, got '{other}'"))),
    };
    let roots = cdc::d4_root_analysis(a, b, kind_enum)?;
    let rounded: Vec<f64> = roots.iter().map(|r| round9(*r)).collect();
    write_json(
        out,
        "roots.json",
        &serde_json::json!({ "kind": kind, "a": a, "b": b, "roots": rounded }),
    )?;
    Ok(())
}
