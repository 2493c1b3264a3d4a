use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::{json, Map, Value};
use thiserror::Error;
use warped_soliton::analysis::{
    check_spec, three_eigen_obstruction, ObstructionConfig, ObstructionError, Residual, ResidualTable,
    CLOSED_FORM_TOL,
};
use warped_soliton::ode::{
    integrate, monitor, IntegrateOptions, Method, OdeError, SolitonOdeParams, TrajectoryState,
};
use warped_soliton::{
    build_metric, catalog_entry, CatalogId, CatalogKind, CurvatureError, FiberSpec, SolitonSpec,
    SpecError,
};

use crate::report::{residual_lines, to_pretty, to_value};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: io::Error },
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error("{}", describe_ode(.0))]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Obstruction(#[from] ObstructionError),
}

fn describe_ode(e: &OdeError) -> String {
    match e.last_valid_s() {
        Some(s) => format!("integration failed: {e} (last valid s = {s})"),
        None => e.to_string(),
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_)
            | CliError::Read { .. }
            | CliError::Write { .. }
            | CliError::Spec(_)
            | CliError::Obstruction(_) => 2,
            CliError::Ode(OdeError::InvalidParams(_) | OdeError::InvalidInit(_) | OdeError::InvalidSettings(_)) => 2,
            CliError::Curvature(_) | CliError::Ode(_) => 3,
        }
    }
}

/// Successful runs end in pass (exit 0) or residual failure (exit 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    fn from_pass(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes to `path`, or to stdout when `path` is `None`.
fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Write {
            path: p.display().to_string(),
            source,
        }),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Write {
                path: "stdout".into(),
                source,
            }),
    }
}

fn positive(name: &str, x: f64) -> Result<f64, CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Usage(format!("--{name} must be positive, got {x}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Text,
}

pub struct CheckArgs<'a> {
    pub spec: &'a Path,
    pub grid: usize,
    pub tol: f64,
    pub format: Format,
    pub out: Option<&'a Path>,
}

pub fn run_check(a: CheckArgs) -> Result<Verdict, CliError> {
    if a.grid < 2 {
        return Err(CliError::Usage(format!("--grid must be at least 2, got {}", a.grid)));
    }
    let tol = positive("tol", a.tol)?;
    let spec = build_metric(SolitonSpec::from_json(&read(a.spec)?)?)?;
    let rep = check_spec(&spec, a.grid, tol)?;
    let passed = rep.passed();

    let (verdict, predicates, note) = match &rep.classification {
        Ok(c) => (c.local_type.name().to_string(), to_value(&c.predicates), Value::Null),
        Err(e) => {
            let preds = match e {
                warped_soliton::analysis::ClassifyError::Ambiguous(p) => to_value(p),
                _ => Value::Array(Vec::new()),
            };
            ("unclassified".to_string(), preds, Value::String(e.to_string()))
        }
    };
    let text = match a.format {
        Format::Json => {
            let hc = &rep.harmonic_curvature;
            to_pretty(&json!({
                "assumptions": rep.assumptions,
                "classification": {
                    "local_type": verdict,
                    "note": note,
                    "predicates": predicates,
                },
                "grid_points": rep.grid_points,
                "harmonic_curvature": {
                    "holds": hc.passed,
                    "max_cotton": hc.max_cotton,
                    "max_scalar_derivative": hc.max_scalar_derivative,
                },
                "passed": passed,
                "residuals": to_value(&rep.table.entries),
                "spec": to_value(&spec),
                "tolerance": tol,
            }))
        }
        Format::Text => {
            let mut s = format!(
                "verdict: {verdict}\nstatus: {}\ngrid points: {}\ntolerance: {tol:e}\nharmonic curvature: {}\n",
                if passed { "pass" } else { "fail" },
                rep.grid_points,
                rep.harmonic_curvature.passed
            );
            if let Value::String(n) = note {
                s.push_str(&format!("classification note: {n}\n"));
            }
            for a in &rep.assumptions {
                s.push_str(&format!("assumption: {a}\n"));
            }
            s.push('\n');
            s.push_str(&residual_lines(&rep.table.entries));
            s
        }
    };
    emit(a.out, &text)?;
    Ok(Verdict::from_pass(passed))
}

pub struct CatalogArgs<'a> {
    pub id: &'a str,
    pub n: usize,
    pub r: Option<usize>,
    pub rho: Option<f64>,
    pub out: Option<&'a Path>,
}

pub fn run_catalog(a: CatalogArgs) -> Result<Verdict, CliError> {
    let kind: CatalogKind = a.id.parse().map_err(CliError::Usage)?;
    let default_rho = match kind {
        CatalogKind::TypeIII | CatalogKind::RoundCone => 0.0,
        _ => 1.0,
    };
    let rho = a.rho.unwrap_or(default_rho);
    let id = match kind {
        CatalogKind::Gaussian => CatalogId::gaussian(a.n, rho),
        CatalogKind::EinsteinProduct => CatalogId::einstein_product(a.n, rho),
        CatalogKind::TypeII => CatalogId::type_ii(a.n, a.r.unwrap_or(1), rho),
        CatalogKind::TypeIII => CatalogId::new(kind, a.n, 1, rho),
        CatalogKind::RoundCone => CatalogId::new(kind, a.n, a.n.saturating_sub(1), rho),
        CatalogKind::Custom => CatalogId::new(kind, a.n, a.r.unwrap_or(0), rho),
    };
    let spec = catalog_entry(id)?;
    emit(a.out, &to_pretty(&to_value(&spec)))?;
    Ok(Verdict::Pass)
}

#[derive(Debug, Deserialize)]
struct InitBlock {
    s0: Option<f64>,
    h: Vec<f64>,
    w: Vec<f64>,
    f: f64,
    fprime: f64,
}

#[derive(Debug, Deserialize)]
struct OdeConfig {
    n: usize,
    rho: f64,
    fibers: Vec<FiberSpec>,
    init: InitBlock,
}

/// An integration problem read from either an initial-data config or a
/// closed-form spec, whose data at `s0` seeds the run.
struct Problem {
    params: SolitonOdeParams,
    init: TrajectoryState,
    s1: f64,
    closed_form: Option<SolitonSpec>,
}

fn load_problem(text: &str, s0: Option<f64>, s1: Option<f64>) -> Result<Problem, CliError> {
    let raw: Value = serde_json::from_str(text).map_err(SpecError::from)?;
    if raw.get("init").is_some() {
        let cfg: OdeConfig = serde_json::from_value(raw).map_err(SpecError::from)?;
        let s = s0
            .or(cfg.init.s0)
            .ok_or_else(|| CliError::Usage("initial point missing: pass --s0 or set init.s0".into()))?;
        let s1 = s1.ok_or_else(|| CliError::Usage("--s1 is required".into()))?;
        return Ok(Problem {
            params: SolitonOdeParams::new(cfg.n, cfg.rho, cfg.fibers)?,
            init: TrajectoryState {
                s,
                h: cfg.init.h,
                w: cfg.init.w,
                f: cfg.init.f,
                v: cfg.init.fprime,
            },
            s1,
            closed_form: None,
        });
    }
    let spec = build_metric(SolitonSpec::from_json(text)?)?;
    let s = s0.unwrap_or(spec.domain[0]);
    Ok(Problem {
        params: SolitonOdeParams::from_spec(&spec)?,
        init: TrajectoryState::from_spec(&spec, s)?,
        s1: s1.unwrap_or(spec.domain[1]),
        closed_form: Some(spec),
    })
}

pub struct IntegrateArgs<'a> {
    pub config: &'a Path,
    pub s0: Option<f64>,
    pub s1: Option<f64>,
    pub tol: f64,
    pub grid: usize,
    pub method: &'a str,
    pub step: Option<f64>,
    pub out: Option<&'a Path>,
    pub summary: Option<&'a Path>,
}

pub fn run_integrate(a: IntegrateArgs) -> Result<Verdict, CliError> {
    if a.grid < 2 {
        return Err(CliError::Usage(format!("--grid must be at least 2, got {}", a.grid)));
    }
    let tol = positive("tol", a.tol)?;
    let method = match a.method {
        "rk45" => Method::Rk45,
        "rk4" => Method::Rk4 {
            step: positive("step", a.step.unwrap_or(1e-3))?,
        },
        other => return Err(CliError::Usage(format!("unknown method `{other}` (expected rk45 or rk4)"))),
    };
    let problem = load_problem(&read(a.config)?, a.s0, a.s1)?;
    let opts = IntegrateOptions {
        tol,
        method,
        grid_points: a.grid,
        ..IntegrateOptions::default()
    };
    let traj = integrate(&problem.init, &problem.params, problem.s1, &opts)?;
    let mon = monitor(&traj)?;

    let mut csv = Vec::new();
    traj.write_csv(&mut csv).map_err(|source| CliError::Write {
        path: "buffer".into(),
        source,
    })?;
    let csv = String::from_utf8(csv).expect("CSV is UTF-8");

    let mut table = ResidualTable::default();
    let last_s = traj.last().s;
    let drift_bound = 100.0 * tol * (1.0 + mon.c0_initial.abs());
    table.push(Residual::checked("c0_drift", mon.c0_drift, last_s, drift_bound));
    table.push(Residual::checked(
        "hamilton_grad",
        mon.hamilton_grad_max,
        last_s,
        warped_soliton::analysis::TRAJECTORY_TOL,
    ));
    table.push(Residual::info(
        "hamilton_grad_fd",
        mon.hamilton_grad_fd_max,
        last_s,
        warped_soliton::analysis::TRAJECTORY_TOL,
    ));
    table.push(Residual::checked(
        "soliton_max",
        mon.soliton_max,
        last_s,
        warped_soliton::analysis::TRAJECTORY_TOL,
    ));
    table.push(Residual::info("cotton_max", mon.cotton_max, last_s, CLOSED_FORM_TOL));
    if let Some(spec) = &problem.closed_form {
        let mut worst: f64 = 0.0;
        let mut at = traj.samples[0].s;
        for st in &traj.samples {
            let exact = TrajectoryState::from_spec(spec, st.s)?;
            let d = st.max_abs_diff(&exact);
            if d > worst {
                worst = d;
                at = st.s;
            }
        }
        table.push(Residual::checked(
            "closed_form_deviation",
            worst,
            at,
            warped_soliton::analysis::TRAJECTORY_TOL,
        ));
    }
    let passed = table.all_pass();
    let stats = &traj.stats;
    let mut summary = Map::new();
    summary.insert("c0_initial".into(), json!(mon.c0_initial));
    summary.insert("c0_drift".into(), json!(mon.c0_drift));
    summary.insert("s0".into(), json!(problem.init.s));
    summary.insert("s1".into(), json!(last_s));
    summary.insert("tolerance".into(), json!(tol));
    summary.insert("grid_points".into(), json!(traj.samples.len()));
    summary.insert("passed".into(), json!(passed));
    summary.insert("residuals".into(), to_value(&table.entries));
    summary.insert(
        "stats".into(),
        json!({
            "max_error_estimate": stats.max_error_estimate,
            "rejections": stats.rejections,
            "rhs_evals": stats.rhs_evals,
            "steps": stats.steps,
        }),
    );
    let summary = to_pretty(&Value::Object(summary));

    emit(a.out, &csv)?;
    match (a.summary, a.out) {
        (Some(p), _) => emit(Some(p), &summary)?,
        (None, Some(_)) => emit(None, &summary)?,
        (None, None) => eprint!("{summary}"),
    }
    Ok(Verdict::from_pass(passed))
}

pub struct ObstructionArgs<'a> {
    pub n: usize,
    pub rho: f64,
    pub samples: u64,
    pub seed: u64,
    pub tol: Option<f64>,
    pub out: Option<&'a Path>,
}

pub fn run_obstruction(a: ObstructionArgs) -> Result<Verdict, CliError> {
    let mut cfg = ObstructionConfig::new(a.n, a.rho, a.samples, a.seed);
    if let Some(t) = a.tol {
        cfg.tol = positive("tol", t)?;
    }
    let cert = three_eigen_obstruction(&cfg)?;
    let v = json!({
        "feasible_count": cert.feasible_count,
        "max_sum_identity_error": cert.max_sum_identity_error,
        "n": cert.n,
        "rejected": cert.rejected,
        "rho": cert.rho,
        "samples": cert.samples,
        "seed": cert.seed,
        "status": if cert.feasible_count == 0 { "pass" } else { "fail" },
        "tested": cert.tested,
        "tolerance": cfg.tol,
        "worst_margin": cert.worst_margin,
    });
    emit(a.out, &to_pretty(&v))?;
    Ok(Verdict::from_pass(cert.feasible_count == 0))
}
