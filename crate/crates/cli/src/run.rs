//! Task orchestration and artifact emission.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use mcnls::blowup::{run_sweep, SweepOutcome};
use mcnls::gn_profile::{check_gn_inequality, relax_q_spectral, solve_q_ode, GnProfile};
use mcnls::io::{fmt_f64, write_field, write_field_csv, write_profile, write_sweep_csv, write_trace_csv};
use mcnls::minimizer::{edge_mass, solve, trace_is_monotone, trial_upper_bound, Status};
use mcnls::potential::{Degeneracy, PotentialSpec};
use mcnls::Grid;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{ConfigError, Offset, RunConfig, Task};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{stage}: {source}")]
    Numeric { stage: &'static str, source: mcnls::Error },
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, RunError>;
}

impl<T> Stage<T> for mcnls::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, RunError> {
        self.map_err(|source| RunError::Numeric { stage, source })
    }
}

/// A named pass/fail check attached to a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check { name: name.to_string(), passed, detail }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Outcome {
    /// `key = value` lines, also written to the task's report file.
    pub report: Vec<(String, String)>,
    pub checks: Vec<Check>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn put(&mut self, key: &str, value: impl Into<String>) {
        self.report.push((key.to_string(), value.into()));
    }

    fn put_f64(&mut self, key: &str, value: f64) {
        self.put(key, fmt_f64(value));
    }
}

/// `mcnls <version> config-sha256=<hex>` for the given effective config.
pub fn provenance(cfg: &RunConfig) -> String {
    let digest = Sha256::digest(cfg.canonical().as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    format!("mcnls {} config-sha256={hex}", env!("CARGO_PKG_VERSION"))
}

struct Emitter<'a> {
    dir: &'a Path,
    provenance: String,
    files: Vec<PathBuf>,
}

impl Emitter<'_> {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>, RunError> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|source| RunError::Io { path: path.display().to_string(), source })?;
        self.files.push(path);
        Ok(BufWriter::new(file))
    }

    fn emit<F>(&mut self, name: &str, stage: &'static str, write: F) -> Result<(), RunError>
    where
        F: FnOnce(BufWriter<File>, &str) -> mcnls::Result<()>,
    {
        let w = self.create(name)?;
        let provenance = self.provenance.clone();
        write(w, &provenance).stage(stage)
    }

    fn text(&mut self, name: &str, body: &str) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|source| RunError::Io { path: path.display().to_string(), source })?;
        self.files.push(path);
        Ok(())
    }
}

/// Validates `cfg` for `task`, runs it and writes its artifacts to `out`.
pub fn run(task: Task, cfg: &RunConfig, out: &Path) -> Result<Outcome, RunError> {
    cfg.validate(task)?;
    fs::create_dir_all(out).map_err(|source| RunError::Io { path: out.display().to_string(), source })?;
    let mut emitter = Emitter { dir: out, provenance: provenance(cfg), files: Vec::new() };
    let grid = Grid::new(cfg.dimension, cfg.grid.half_width, cfg.grid.points).stage("grid")?;
    let mut outcome = Outcome::default();
    outcome.put("task", task.to_string());
    outcome.put("provenance", emitter.provenance.clone());
    match task {
        Task::Gn => run_gn(cfg, &grid, &mut emitter, &mut outcome)?,
        Task::Classify => run_classify(cfg, &grid, &mut outcome)?,
        Task::Solve => run_solve(cfg, &grid, &mut emitter, &mut outcome)?,
        Task::Sweep => run_sweep_task(cfg, &grid, &mut emitter, &mut outcome)?,
        Task::Trialbound => run_trialbound(cfg, &grid, &mut emitter, &mut outcome)?,
    }
    let mut body = format!("# {}\n", emitter.provenance);
    for (k, v) in &outcome.report {
        let _ = writeln!(body, "{k} = {v}");
    }
    for c in &outcome.checks {
        let _ = writeln!(body, "{}", c.line());
    }
    emitter.text(&format!("{task}_report.txt"), &body)?;
    outcome.files = emitter.files;
    Ok(outcome)
}

fn relaxed_profile(cfg: &RunConfig, grid: &Grid) -> Result<GnProfile, RunError> {
    relax_q_spectral(grid, cfg.profile.tol).stage("gn_profile")
}

fn potential(cfg: &RunConfig) -> (PotentialSpec, Option<Offset>) {
    let pot = cfg.potential.as_ref().expect("validated: potential present");
    (pot.base_spec(), pot.offset().expect("validated: offset consistent"))
}

fn run_gn(cfg: &RunConfig, grid: &Grid, emitter: &mut Emitter, outcome: &mut Outcome) -> Result<(), RunError> {
    let mut profile = relaxed_profile(cfg, grid)?;
    let radial = solve_q_ode(cfg.dimension, cfg.profile.ode_tol).stage("gn_profile")?;
    profile.a_star_ode = Some(radial.a_star);
    profile.mass_q = radial.mass.sqrt();
    emitter.emit("profile.bin", "io", |w, _| write_profile(w, &profile))?;
    emitter.emit("profile.csv", "io", |w, prov| write_field_csv(w, &profile.q0, prov))?;

    let q = mcnls::critical_exponent(cfg.dimension);
    let kinetic = profile.q0.grad_norm_sq();
    let power = profile.q0.lp_power_integral(q);
    let identity = kinetic - profile.a_star_discrete * power;
    outcome.put("dimension", cfg.dimension.to_string());
    outcome.put_f64("a_star_discrete", profile.a_star_discrete);
    outcome.put_f64("a_star_ode", radial.a_star);
    outcome.put_f64("mass_q", profile.mass_q);
    outcome.put_f64("kinetic", kinetic);
    outcome.put_f64("power_integral", power);
    outcome.put_f64("identity_residual", identity);
    outcome.checks.push(Check::new(
        "optimizer_identity",
        identity.abs() <= 1e-9,
        format!("int |grad Q0|^2 - a* int Q0^q = {identity:.3e}"),
    ));
    if cfg.dimension == 1 {
        let exact = std::f64::consts::PI.powi(2) / 4.0;
        let rel_discrete = (profile.a_star_discrete / exact - 1.0).abs();
        let rel_ode = (radial.a_star / exact - 1.0).abs();
        outcome.put_f64("a_star_closed_form", exact);
        outcome.checks.push(Check::new(
            "a_star_closed_form",
            rel_discrete <= 1e-5 && rel_ode <= 1e-5,
            format!("relative error {rel_discrete:.3e} (relaxation), {rel_ode:.3e} (shooting)"),
        ));
    } else {
        let rel = (profile.a_star_discrete / radial.a_star - 1.0).abs();
        outcome.checks.push(Check::new(
            "a_star_routes_agree",
            rel <= 1e-4,
            format!("relaxation and shooting differ by {rel:.3e}"),
        ));
    }
    let gn = check_gn_inequality(&profile, cfg.profile.random_fields, cfg.seed, cfg.profile.slack);
    outcome.put("gn_samples", gn.samples.to_string());
    outcome.put("gn_violations", gn.violations.to_string());
    outcome.put_f64("gn_worst_margin", gn.worst_margin);
    outcome.checks.push(Check::new(
        "gn_inequality",
        gn.violations == 0,
        format!("{} of {} random fields below a* (worst J/a* - 1 = {:.3e})", gn.violations, gn.samples, gn.worst_margin),
    ));
    Ok(())
}

fn run_classify(cfg: &RunConfig, grid: &Grid, outcome: &mut Outcome) -> Result<(), RunError> {
    let (base, offset) = potential(cfg);
    let profile = relaxed_profile(cfg, grid)?;
    let a_star = profile.a_star_discrete;
    let offset = offset.expect("validated: offset present").resolve(a_star);
    let regime = base.with_offset(offset).classify(grid, a_star, cfg.classify.strict).stage("potential")?;
    let diag = &regime.diagnostics;
    outcome.put("regime", regime.kind.name());
    outcome.put_f64("offset", offset);
    outcome.put_f64("a_star", diag.a_star);
    outcome.put_f64("inf_k", diag.inf_k);
    outcome.put_f64("margin", diag.margin);
    if let Some(g) = &diag.growth {
        outcome.put("growth_holds", g.holds.to_string());
        outcome.put_f64("growth_tail_exponent", g.tail_exponent);
        outcome.put_f64("growth_integral", g.integral_value);
    }
    if let Some(d) = &diag.degeneracy {
        outcome.put(
            "degeneracy",
            match d {
                Degeneracy::Constant => "constant".to_string(),
                Degeneracy::Degenerate { p } => format!("degenerate p={p}"),
                Degeneracy::Open => "open p=2".to_string(),
                Degeneracy::NonDegenerate { p } => format!("nondegenerate p={p}"),
            },
        );
    }
    for note in &diag.notes {
        outcome.put("note", note.clone());
    }
    if let Some(expected) = &cfg.classify.expect {
        outcome.checks.push(Check::new(
            "regime",
            regime.kind.name() == expected,
            format!("classified {} (expected {expected})", regime.kind.name()),
        ));
    }
    Ok(())
}

fn run_solve(cfg: &RunConfig, grid: &Grid, emitter: &mut Emitter, outcome: &mut Outcome) -> Result<(), RunError> {
    let (base, offset) = potential(cfg);
    let offset = match offset.expect("validated: offset present") {
        Offset::Absolute(a) => a,
        gap => gap.resolve(relaxed_profile(cfg, grid)?.a_star_discrete),
    };
    let spec = base.with_offset(offset);
    let solver = cfg.solver.to_config(cfg.dimension)?;
    let res = solve(&spec, grid, &solver).stage("minimizer")?;
    emitter.emit("solution.bin", "io", |w, _| write_field(w, &res.u, None))?;
    emitter.emit("solution.csv", "io", |w, prov| write_field_csv(w, &res.u, prov))?;
    emitter.emit("trace.csv", "io", |w, prov| write_trace_csv(w, &res.trace, prov))?;

    outcome.put("status", res.status.name());
    outcome.put_f64("offset", offset);
    outcome.put_f64("energy", res.energy);
    outcome.put_f64("kinetic", res.kinetic);
    outcome.put_f64("nonlinear", res.nonlinear);
    outcome.put_f64("mu", res.mu);
    outcome.put_f64("residual", res.residual);
    outcome.put("iters", res.iters.to_string());
    outcome.put_f64("edge_mass", edge_mass(&res.u));
    outcome.checks.push(Check::new(
        "status",
        res.status != Status::IterCap,
        format!("{} after {} iterations", res.status.name(), res.iters),
    ));
    outcome.checks.push(Check::new(
        "monotone_energy",
        trace_is_monotone(&res.trace),
        format!("{} recorded iterates", res.trace.len()),
    ));
    let worst_norm = res.trace.iter().map(|t| (t.norm - 1.0).abs()).fold(0.0, f64::max);
    outcome.checks.push(Check::new("unit_norm", worst_norm <= 1e-12, format!("max | ||u||_2 - 1 | = {worst_norm:.3e}")));
    if res.status == Status::Converged {
        outcome.checks.push(Check::new(
            "euler_lagrange",
            res.residual <= 1e-6,
            format!("residual {:.3e} with mu = {:.10}", res.residual, res.mu),
        ));
    }
    Ok(())
}

fn run_sweep_task(cfg: &RunConfig, grid: &Grid, emitter: &mut Emitter, outcome: &mut Outcome) -> Result<(), RunError> {
    let (spec, _) = potential(cfg);
    let plan = cfg.sweep.clone().unwrap_or_default().to_plan()?;
    let solver = cfg.solver.to_config(cfg.dimension)?;
    let profile = relaxed_profile(cfg, grid)?;
    let result: SweepOutcome = run_sweep(&spec, grid, &plan, &profile, &solver).stage("blowup")?;
    emitter.emit("sweep.csv", "io", |w, prov| write_sweep_csv(w, &result.records, prov))?;

    outcome.put_f64("a_star", profile.a_star_discrete);
    outcome.put_f64("p", result.p);
    outcome.put_f64("lambda", result.lambda);
    outcome.put_f64("b", result.constants.b);
    outcome.put_f64("e_limit", result.constants.e_limit);
    if let Some(f) = &result.energy_fit {
        outcome.put_f64("energy_exponent", f.exponent);
        outcome.put_f64("energy_prefactor", f.prefactor);
    }
    if let Some(f) = &result.kinetic_fit {
        outcome.put_f64("kinetic_exponent", f.exponent);
        outcome.put_f64("kinetic_prefactor", f.prefactor);
    }
    for r in result.records.iter().filter(|r| r.note.is_some()) {
        outcome.put("note", format!("delta {}: {}", fmt_f64(r.delta), r.note.as_deref().unwrap_or("")));
    }
    outcome.checks.extend(result.verdicts.iter().map(|v| Check::new(v.name, v.passed, v.detail.clone())));
    Ok(())
}

fn run_trialbound(cfg: &RunConfig, grid: &Grid, emitter: &mut Emitter, outcome: &mut Outcome) -> Result<(), RunError> {
    let (base, offset) = potential(cfg);
    let Some(Offset::Gap(gap)) = offset else { unreachable!("validated: positive gap") };
    let profile = relaxed_profile(cfg, grid)?;
    let spec = base.with_offset(profile.a_star_discrete - gap);
    let flat = spec.flattest_set().stage("potential")?;
    let (p, lambda) = (flat.p, flat.lambda);
    let constants = profile.limit_constants(p, lambda).stage("gn_profile")?;
    let (power, moment) = (profile.power_integral(), profile.moment(p));
    let ell_opt = gap.powf(-1.0 / p) * constants.b;
    let ells = cfg
        .trialbound
        .ells
        .clone()
        .unwrap_or_else(|| (0..9).map(|i| ell_opt * 2f64.powf(0.5 * (i as f64 - 4.0))).collect());
    let radius = cfg.trialbound.radius_fraction * grid.half_width();
    let step_one = |ell: f64| ell * ell * (gap * power + lambda * moment * ell.powf(-p));

    let mut rows = Vec::with_capacity(ells.len());
    for &ell in &ells {
        let trial = trial_upper_bound(&profile, &spec, grid, ell, radius).stage("minimizer")?;
        rows.push((ell, trial, step_one(ell)));
    }
    let mut w = emitter.create("trialbound.csv")?;
    let io_err = |source| RunError::Io { path: "trialbound.csv".into(), source };
    use std::io::Write as _;
    writeln!(w, "# {}", emitter.provenance).map_err(io_err)?;
    writeln!(w, "ell,trial_energy,asymptotic,relative_difference").map_err(io_err)?;
    for &(ell, trial, asym) in &rows {
        writeln!(w, "{},{},{},{}", fmt_f64(ell), fmt_f64(trial), fmt_f64(asym), fmt_f64(trial / asym - 1.0))
            .map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;

    let at_opt = trial_upper_bound(&profile, &spec, grid, ell_opt, radius).stage("minimizer")?;
    let predicted = constants.e_limit * gap.powf(1.0 - 2.0 / p);
    let rel = (at_opt / predicted - 1.0).abs();
    outcome.put_f64("gap", gap);
    outcome.put_f64("b", constants.b);
    outcome.put_f64("e_limit", constants.e_limit);
    outcome.put_f64("ell_opt", ell_opt);
    outcome.put_f64("trial_at_ell_opt", at_opt);
    outcome.put_f64("predicted", predicted);
    outcome.checks.push(Check::new(
        "trial_asymptotics",
        rel <= 0.05,
        format!("trial energy at the optimal scale is {rel:.3e} from E_limit gap^(1-2/p)"),
    ));
    Ok(())
}
