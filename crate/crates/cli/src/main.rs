//! Command-line front end: runs the discrete methods and their flows from a
//! JSON config, executes the equivalence and certification suites, and emits
//! the figure data as CSV/JSON. Exit codes: 0 success, 1 config error,
//! 2 solver/divergence error, 3 equivalence failure, 4 certificate failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use agmlab::discrete::{self, default_params, equivalence_suite, Form, HyperParams};
use agmlab::linalg;
use agmlab::objectives::{make_quadratic, ObjectiveSpec};
use agmlab::ode::{self, OdeKind, OdeSystem};
use agmlab::spectral::{verify_decay_bound, Certificate};
use agmlab::Objective;

#[derive(Parser)]
#[command(name = "agmlab", version, about = "Accelerated-method laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one discrete method or one flow and write its trajectory.
    Run(CommonArgs),
    /// Run the seven-form agreement suite and write the deviation matrix.
    Equivalence(CommonArgs),
    /// Certify flow decay rates over a grid of random quadratics.
    Certify(CommonArgs),
    /// Emit dual geodesics in primal and dual views plus the straight chord.
    Geodesic(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment description (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output path; overrides the config's `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format; overrides the config's `format`.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// RNG seed; overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
enum Format {
    Csv,
    Json,
}

/// One experiment. Top-level knobs that only some subcommands read are
/// rejected per command rather than structurally, so one schema serves all
/// four; unknown keys are always an error.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    objective: Option<ObjectiveSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    form: Option<Form>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ode: Option<OdeKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    overrides: Option<Overrides>,
    #[serde(skip_serializing_if = "Option::is_none")]
    x0: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    integrator: Option<Integrator>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    format: Option<Format>,
    /// `run`: emit the four-path figure bundle instead of one trajectory.
    #[serde(skip_serializing_if = "Option::is_none")]
    bundle: Option<bool>,
    /// `equivalence`: agreement tolerance (default 1e-9).
    #[serde(skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
    /// `certify`: random-instance grid (defaults to the standard grid).
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<GridSpec>,
    /// `certify`: flows to certify (default: all three).
    #[serde(skip_serializing_if = "Option::is_none")]
    kinds: Option<Vec<OdeKind>>,
    /// `geodesic`: the two endpoints.
    #[serde(skip_serializing_if = "Option::is_none")]
    endpoints: Option<[Vec<f64>; 2]>,
    /// `geodesic`: sample count (default 201).
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<usize>,
}

/// Partial parameter overlay on top of each form's defaults.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Overrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
}

impl Overrides {
    fn apply(&self, p: &mut HyperParams) {
        if let Some(v) = self.eta {
            p.eta = v;
        }
        if let Some(v) = self.tau {
            p.tau = v;
        }
        if let Some(v) = self.alpha {
            p.alpha = v;
        }
        if let Some(v) = self.beta {
            p.beta = v;
        }
        if let Some(v) = self.gamma {
            p.gamma = v;
        }
        if let Some(v) = self.theta {
            p.theta = v;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
enum Integrator {
    Rk4,
    ImplicitEuler,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSpec {
    mu: Vec<f64>,
    kappa: Vec<f64>,
    per_cell: usize,
    n_max: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            mu: vec![0.1, 1.0],
            kappa: vec![1.0, 10.0, 100.0, 1e4],
            per_cell: 20,
            n_max: 8,
        }
    }
}

enum CliError {
    Config(String),
    Solver(String),
    Equivalence(String),
    Certificate(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Equivalence(_) => 3,
            CliError::Certificate(_) => 4,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Config(m) => format!("config: {m}"),
            CliError::Solver(m) => format!("solve: {m}"),
            CliError::Equivalence(m) => format!("equivalence: {m}"),
            CliError::Certificate(m) => format!("certify: {m}"),
        }
    }
}

fn config_err<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Config(msg.into()))
}

fn solver(e: agmlab::Error) -> CliError {
    CliError::Solver(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage problems are config problems for exit-code purposes.
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = match &cli.cmd {
        Cmd::Run(a) => load(a).and_then(|c| cmd_run(&c)),
        Cmd::Equivalence(a) => load(a).and_then(|c| cmd_equivalence(&c)),
        Cmd::Certify(a) => load(a).and_then(|c| cmd_certify(&c)),
        Cmd::Geodesic(a) => load(a).and_then(|c| cmd_geodesic(&c)),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

/// Parse the config file and fold in the command-line overrides, so every
/// output embeds the *effective* experiment description.
fn load(args: &CommonArgs) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;
    let mut cfg: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    if let Some(f) = args.format {
        cfg.format = Some(f);
    }
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    Ok(cfg)
}

fn config_json(cfg: &ExperimentConfig) -> String {
    serde_json::to_string(cfg).expect("config serializes")
}

/// `# {...}` header comment carrying the effective config.
fn csv_with_config(cfg: &ExperimentConfig, body: &str) -> String {
    format!("# {}\n{body}", config_json(cfg))
}

fn emit(cfg: &ExperimentConfig, path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path.or(cfg.out.as_deref()) {
        Some(p) => std::fs::write(p, content)
            .map_err(|e| CliError::Config(format!("{}: {e}", p.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn build_objective(cfg: &ExperimentConfig) -> Result<Objective, CliError> {
    let spec = cfg
        .objective
        .as_ref()
        .ok_or_else(|| CliError::Config("missing `objective`".into()))?;
    spec.build().map_err(|e| CliError::Config(e.to_string()))
}

fn start_point(cfg: &ExperimentConfig, obj: &Objective) -> Result<DVector<f64>, CliError> {
    match &cfg.x0 {
        Some(v) if v.len() == obj.dimension() => Ok(DVector::from_vec(v.clone())),
        Some(v) => config_err(format!(
            "x0 has length {}, objective dimension is {}",
            v.len(),
            obj.dimension()
        )),
        None => config_err("missing `x0`"),
    }
}

fn form_params(cfg: &ExperimentConfig, form: Form, obj: &Objective) -> Result<HyperParams, CliError> {
    let mut p = default_params(form, obj.mu(), obj.lipschitz())
        .map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(o) = &cfg.overrides {
        o.apply(&mut p);
    }
    validate_params(&p)?;
    Ok(p)
}

fn validate_params(p: &HyperParams) -> Result<(), CliError> {
    if !(p.eta > 0.0 && p.tau > 0.0) {
        return config_err(format!("eta and tau must be positive (eta={}, tau={})", p.eta, p.tau));
    }
    if !(0.0..=1.0).contains(&p.alpha) {
        return config_err(format!("alpha must lie in [0, 1], got {}", p.alpha));
    }
    if !(0.0..1.0).contains(&p.beta) {
        return config_err(format!("beta must lie in [0, 1), got {}", p.beta));
    }
    if p.gamma <= 0.0 || !(0.0..=1.0).contains(&p.theta) {
        return config_err(format!(
            "gamma must be positive and theta in [0, 1] (gamma={}, theta={})",
            p.gamma, p.theta
        ));
    }
    Ok(())
}

fn ode_form(kind: OdeKind) -> Form {
    match kind {
        OdeKind::ProxPoint => Form::ProxPoint,
        OdeKind::Agm => Form::BregmanAgm,
        OdeKind::HeavyBall => Form::HeavyBall,
    }
}

/// Natural flow start from a primal point: g = grad f(x0), z = x0 - (a/e) g
/// for the prox/AGM systems, (x0, 0) for heavy ball.
fn flow_start(kind: OdeKind, obj: &Objective, p: &HyperParams, x0: &DVector<f64>) -> DVector<f64> {
    let n = obj.dimension();
    let mut u = DVector::zeros(2 * n);
    match kind {
        OdeKind::ProxPoint | OdeKind::Agm => {
            let g = obj.gradient(x0);
            u.rows_mut(0, n).copy_from(&(x0 - &g * (p.alpha / p.eta)));
            u.rows_mut(n, n).copy_from(&g);
        }
        OdeKind::HeavyBall => {
            u.rows_mut(0, n).copy_from(x0);
        }
    }
    u
}

fn integrate(
    cfg: &ExperimentConfig,
    sys: &OdeSystem,
    u0: &DVector<f64>,
) -> Result<ode::ContinuousTrajectory, CliError> {
    let t_max = match cfg.t_max {
        Some(t) if t > 0.0 => t,
        Some(t) => return config_err(format!("t_max must be positive, got {t}")),
        None => return config_err("missing `t_max` for an ODE run"),
    };
    match cfg.integrator.unwrap_or(Integrator::Rk4) {
        Integrator::Rk4 => {
            let dt = cfg.dt.unwrap_or_else(|| ode::default_dt(&sys.params));
            ode::integrate_rk4(sys, u0, dt, t_max).map_err(solver)
        }
        Integrator::ImplicitEuler => {
            let h = cfg.dt.unwrap_or(1.0);
            if h <= 0.0 {
                return config_err(format!("dt must be positive, got {h}"));
            }
            let steps = (t_max / h).ceil() as usize;
            ode::integrate_implicit_euler(sys, u0, h, steps).map_err(solver)
        }
    }
}

fn cmd_run(cfg: &ExperimentConfig) -> Result<(), CliError> {
    if cfg.bundle == Some(true) {
        return run_bundle(cfg);
    }
    let obj = build_objective(cfg)?;
    let x0 = start_point(cfg, &obj)?;
    let f_star = obj.value(obj.minimizer());
    match (cfg.form, cfg.ode) {
        (Some(form), None) => {
            let k_max = cfg
                .k_max
                .ok_or_else(|| CliError::Config("missing `k_max` for a discrete run".into()))?;
            let params = form_params(cfg, form, &obj)?;
            let traj = discrete::run(form, &obj, &params, &x0, k_max).map_err(solver)?;
            let last = traj.records.last().expect("non-empty trajectory");
            eprintln!(
                "{form}: {} iterations, final f - f* = {:.6e}, |grad| = {:.6e}",
                k_max,
                last.f_value - f_star,
                last.grad_norm
            );
            let content = match cfg.format.unwrap_or(Format::Csv) {
                Format::Csv => csv_with_config(cfg, &traj.to_csv()),
                Format::Json => json_payload(cfg, "trajectory", &traj),
            };
            emit(cfg, None, &content)
        }
        (None, Some(kind)) => {
            let params = form_params(cfg, ode_form(kind), &obj)?;
            if cfg.integrator == Some(Integrator::ImplicitEuler) && kind != OdeKind::Agm {
                return config_err("the implicit-Euler integrator applies to the agm flow only");
            }
            let sys = OdeSystem::new(kind, obj.clone(), params).map_err(solver)?;
            let u0 = flow_start(kind, &obj, &params, &x0);
            let traj = integrate(cfg, &sys, &u0)?;
            let n = obj.dimension();
            let u_end = traj.final_state();
            let x_end = match kind {
                OdeKind::HeavyBall => u_end.rows(0, n).into_owned(),
                _ => obj
                    .conjugate_gradient(&u_end.rows(n, n).into_owned())
                    .map_err(solver)?,
            };
            eprintln!(
                "{kind} flow: t_max = {}, final f - f* = {:.6e}, |u - u*| = {:.6e}",
                traj.samples.last().expect("non-empty").0,
                obj.value(&x_end) - f_star,
                (u_end - sys.fixed_point()).norm()
            );
            let content = match cfg.format.unwrap_or(Format::Csv) {
                Format::Csv => csv_with_config(cfg, &traj.to_csv()),
                Format::Json => json_payload(cfg, "trajectory", &traj),
            };
            emit(cfg, None, &content)
        }
        (Some(_), Some(_)) => config_err("set exactly one of `form` and `ode`, not both"),
        (None, None) => config_err("set exactly one of `form` and `ode`"),
    }
}

/// Four comparable paths on one quadratic: discrete AGM and prox point,
/// plus their two flows, each in its own CSV next to `out`.
fn run_bundle(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let obj = build_objective(cfg)?;
    if !obj.is_quadratic() {
        return config_err("the figure bundle expects a quadratic objective");
    }
    let x0 = start_point(cfg, &obj)?;
    let out = cfg
        .out
        .as_ref()
        .ok_or_else(|| CliError::Config("the bundle needs `out` as a filename stem".into()))?;
    let k_max = cfg.k_max.unwrap_or(100);
    let t_max = cfg.t_max.unwrap_or(20.0);

    let stem = out.to_string_lossy();
    let mut x_paths: Vec<(String, Vec<DVector<f64>>)> = Vec::new();

    for form in [Form::BregmanAgm, Form::ProxPoint] {
        let params = default_params(form, obj.mu(), obj.lipschitz())
            .map_err(|e| CliError::Config(e.to_string()))?;
        let traj = discrete::run(form, &obj, &params, &x0, k_max).map_err(solver)?;
        x_paths.push((
            format!("{form} (discrete)"),
            (0..=k_max).map(|k| traj.position(k).clone()).collect(),
        ));
        let path = PathBuf::from(format!("{stem}_{form}_discrete.csv"));
        emit(cfg, Some(&path), &csv_with_config(cfg, &traj.to_csv()))?;
    }

    for kind in [OdeKind::Agm, OdeKind::ProxPoint] {
        let params = default_params(ode_form(kind), obj.mu(), obj.lipschitz())
            .map_err(|e| CliError::Config(e.to_string()))?;
        let sys = OdeSystem::new(kind, obj.clone(), params).map_err(solver)?;
        let u0 = flow_start(kind, &obj, &params, &x0);
        let dt = cfg.dt.unwrap_or_else(|| ode::default_dt(&params));
        let traj = ode::integrate_rk4(&sys, &u0, dt, t_max).map_err(solver)?;
        let n = obj.dimension();
        let mut xs = Vec::with_capacity(traj.len());
        for (_, u) in &traj.samples {
            xs.push(
                obj.conjugate_gradient(&u.rows(n, n).into_owned())
                    .map_err(solver)?,
            );
        }
        x_paths.push((format!("{kind} (flow)"), xs));
        let path = PathBuf::from(format!("{stem}_{kind}_ode.csv"));
        emit(cfg, Some(&path), &csv_with_config(cfg, &traj.to_csv()))?;
    }

    // How far the discrete iterates stray from their flow's path (as a
    // point set): the four curves genuinely differ, which is the point of
    // drawing them together.
    for (di, fi) in [(0usize, 2usize), (1, 3)] {
        let gap = x_paths[di]
            .1
            .iter()
            .map(|xk| {
                x_paths[fi]
                    .1
                    .iter()
                    .map(|xt| (xk - xt).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        eprintln!(
            "max gap, {} vs {}: {gap:.6e}",
            x_paths[di].0, x_paths[fi].0
        );
    }
    Ok(())
}

fn json_payload<T: Serialize>(cfg: &ExperimentConfig, key: &str, value: &T) -> String {
    let mut root = serde_json::Map::new();
    root.insert(
        "config".into(),
        serde_json::to_value(cfg).expect("config serializes"),
    );
    root.insert(key.into(), serde_json::to_value(value).expect("payload serializes"));
    let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(root))
        .expect("payload serializes");
    s.push('\n');
    s
}

fn cmd_equivalence(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let obj = build_objective(cfg)?;
    let x0 = start_point(cfg, &obj)?;
    let k_max = cfg.k_max.unwrap_or(100);
    let tolerance = cfg.tolerance.unwrap_or(1e-9);

    let mut overrides = Vec::new();
    if let (Some(form), Some(o)) = (cfg.form, &cfg.overrides) {
        let mut p = discrete::matched_params(form, obj.mu(), obj.lipschitz())
            .map_err(|e| CliError::Config(e.to_string()))?;
        o.apply(&mut p);
        overrides.push((form, p));
    }

    let report = equivalence_suite(&obj, &x0, k_max, tolerance, &overrides)
        .map_err(|e| CliError::Config(e.to_string()))?;

    let content = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut body = String::from("form");
            for f in &report.forms {
                let _ = write!(body, ",{f}");
            }
            body.push('\n');
            for (i, f) in report.forms.iter().enumerate() {
                let _ = write!(body, "{f}");
                for j in 0..report.forms.len() {
                    let _ = write!(body, ",{}", report.max_deviation[(i, j)]);
                }
                body.push('\n');
            }
            csv_with_config(cfg, &body)
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Payload<'a> {
                forms: &'a [Form],
                max_deviation: Vec<Vec<f64>>,
                tolerance: f64,
                first_failure: Option<(Form, Form, usize)>,
            }
            let m = report.forms.len();
            json_payload(
                cfg,
                "equivalence",
                &Payload {
                    forms: &report.forms,
                    max_deviation: (0..m)
                        .map(|i| (0..m).map(|j| report.max_deviation[(i, j)]).collect())
                        .collect(),
                    tolerance,
                    first_failure: report.first_failure,
                },
            )
        }
    };
    emit(cfg, None, &content)?;

    match report.first_failure {
        None => {
            eprintln!(
                "equivalence: 7 forms, {k_max} iterations, max deviation {:.3e}",
                report.worst()
            );
            Ok(())
        }
        Some((a, b, k)) => Err(CliError::Equivalence(format!(
            "{a} and {b} diverge at iteration {k} (max deviation {:.3e} > {tolerance:.1e})",
            report.worst()
        ))),
    }
}

fn cmd_certify(cfg: &ExperimentConfig) -> Result<(), CliError> {
    use rand::SeedableRng;
    let kinds = cfg
        .kinds
        .clone()
        .unwrap_or_else(|| vec![OdeKind::ProxPoint, OdeKind::Agm, OdeKind::HeavyBall]);
    if let (Some(o), true) = (&cfg.overrides, kinds.contains(&OdeKind::Agm)) {
        if let Some(a) = o.alpha {
            if !(0.0..=1.0).contains(&a) {
                return config_err(format!("agm coupling alpha must lie in [0, 1], got {a}"));
            }
        }
    }

    let mut certs: Vec<Certificate> = Vec::new();
    if let Some(spec) = &cfg.objective {
        let obj = spec.build().map_err(|e| CliError::Config(e.to_string()))?;
        let h = obj
            .quadratic_matrix()
            .ok_or_else(|| CliError::Solver("certificates need a quadratic objective".into()))?;
        for &kind in &kinds {
            let p = form_params(cfg, ode_form(kind), &obj)?;
            certs.push(verify_decay_bound(kind, h, &p).map_err(solver)?);
        }
    } else {
        let grid = cfg.grid.clone().unwrap_or_default();
        if grid.mu.is_empty() || grid.kappa.is_empty() || grid.per_cell == 0 || grid.n_max < 2 {
            return config_err("grid needs mu values, kappa values, per_cell >= 1, n_max >= 2");
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed.unwrap_or(0));
        for &mu in &grid.mu {
            for &kappa in &grid.kappa {
                let l = mu * kappa;
                for trial in 0..grid.per_cell {
                    let n = 2 + trial % (grid.n_max - 1);
                    let h = linalg::random_spd(n, mu, l, &mut rng)
                        .map_err(|e| CliError::Config(e.to_string()))?;
                    let obj = make_quadratic(h.clone(), DVector::zeros(n))
                        .map_err(|e| CliError::Config(e.to_string()))?;
                    for &kind in &kinds {
                        let p = form_params(cfg, ode_form(kind), &obj)?;
                        certs.push(verify_decay_bound(kind, &h, &p).map_err(solver)?);
                    }
                }
            }
        }
    }

    emit(cfg, None, &json_payload(cfg, "certificates", &certs))?;
    let failed = certs.iter().filter(|c| !c.pass).count();
    eprintln!("certify: {} certificates, {failed} failed", certs.len());
    if failed > 0 {
        let worst = certs
            .iter()
            .filter(|c| !c.pass)
            .max_by(|a, b| {
                (a.abscissa + a.rho_bound)
                    .partial_cmp(&(b.abscissa + b.rho_bound))
                    .unwrap()
            })
            .unwrap();
        return Err(CliError::Certificate(format!(
            "{failed} of {} failed; worst: {} mu={} L={} abscissa {:.6} > -rho {:.6}",
            certs.len(),
            worst.kind,
            worst.mu,
            worst.l,
            worst.abscissa,
            -worst.rho_bound
        )));
    }
    Ok(())
}

fn cmd_geodesic(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let phi = build_objective(cfg)?;
    let [a, b] = cfg
        .endpoints
        .as_ref()
        .ok_or_else(|| CliError::Config("missing `endpoints`".into()))?;
    if a.len() != phi.dimension() || b.len() != phi.dimension() {
        return config_err("endpoint dimensions must match the generator");
    }
    let a = DVector::from_vec(a.clone());
    let b = DVector::from_vec(b.clone());
    let m = cfg.samples.unwrap_or(201);
    let out = cfg
        .out
        .as_ref()
        .ok_or_else(|| CliError::Config("geodesic output needs `out` as a filename stem".into()))?;
    let stem = out.to_string_lossy();

    let path = agmlab::bregman::dual_geodesic(&phi, &a, &b, m).map_err(solver)?;
    let chord = agmlab::bregman::GeodesicPath::straight_line(&a, &b, m)
        .map_err(|e| CliError::Config(e.to_string()))?;

    // Dual view: the same samples pushed through the gradient map.
    let n = phi.dimension();
    let mut dual = String::from("t");
    for j in 1..=n {
        let _ = write!(dual, ",y_{j}");
    }
    dual.push('\n');
    for (t, x) in path.samples() {
        let _ = write!(dual, "{t}");
        for v in phi.gradient(x).iter() {
            let _ = write!(dual, ",{v}");
        }
        dual.push('\n');
    }

    emit(
        cfg,
        Some(Path::new(&format!("{stem}_primal.csv"))),
        &csv_with_config(cfg, &path.to_csv()),
    )?;
    emit(
        cfg,
        Some(Path::new(&format!("{stem}_dual.csv"))),
        &csv_with_config(cfg, &dual),
    )?;
    emit(
        cfg,
        Some(Path::new(&format!("{stem}_segment.csv"))),
        &csv_with_config(cfg, &chord.to_csv()),
    )?;
    eprintln!("geodesic: {m} samples, endpoints mapped through the dual chart");
    Ok(())
}
