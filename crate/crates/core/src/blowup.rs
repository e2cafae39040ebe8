//! Sweeps `a -> a*` from below and measures the blow-up of the ground states
//! against the limiting laws: `E_k ~ E_limit (a* - a)^{1-2/p}`,
//! `int |grad u|^2 ~ (a* - a)^{-2/p}`, concentration at a flattest well, and
//! convergence of the rescaled minimizer to `b^{d/2} Q0(b x)`.

use crate::error::{Error, Result};
use crate::gn_profile::{GnProfile, LimitConstants};
use crate::grid::{Field, Grid};
use crate::minimizer::{self, Init, SolveResult, SolverConfig, Status};
use crate::potential::{PotentialSpec, RegimeKind};

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPlan {
    /// Strictly decreasing gaps `delta_n = a* - a_n > 0`.
    pub gaps: Vec<f64>,
    /// The grid is refined while `delta^{1/p} < width_factor * h`.
    pub width_factor: f64,
    /// Upper bound on points per axis reached by refinement.
    pub max_points: usize,
    /// Seed each solve with the previous minimizer, dilated about its
    /// concentration point.
    pub warm_start: bool,
    /// Concentration balls have radius `c0 delta^{1/p}`; `None` means `8 / b`.
    pub ball_constant: Option<f64>,
    /// Cutoff radius of the trial states, as a fraction of the half-width.
    pub trial_radius_fraction: f64,
    /// Grid on which rescaled minimizers are compared with the profile.
    pub compare_half_width: f64,
    pub compare_points: usize,
}

impl SweepPlan {
    /// `count` gaps spaced geometrically from `largest` down to `smallest`.
    pub fn geometric(largest: f64, smallest: f64, count: usize) -> Result<Self> {
        if !(largest > smallest && smallest > 0.0 && count >= 2) {
            return Err(Error::InvalidConfig(
                "sweep needs largest > smallest > 0 and at least two points".into(),
            ));
        }
        let ratio = (smallest / largest).powf(1.0 / (count - 1) as f64);
        let mut gaps: Vec<f64> = (0..count).map(|i| largest * ratio.powi(i as i32)).collect();
        gaps[count - 1] = smallest;
        Ok(SweepPlan { gaps, ..SweepPlan::default() })
    }

    pub fn validate(&self) -> Result<()> {
        if self.gaps.is_empty() {
            return Err(Error::InvalidConfig("sweep.gaps is empty".into()));
        }
        if !self.gaps.iter().all(|&g| g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidConfig("sweep gaps must be positive".into()));
        }
        if !self.gaps.windows(2).all(|w| w[1] < w[0]) {
            return Err(Error::InvalidConfig("sweep gaps must be strictly decreasing".into()));
        }
        if !(self.trial_radius_fraction > 0.0 && self.trial_radius_fraction < 0.5) {
            return Err(Error::InvalidConfig("sweep.trial_radius_fraction must lie in (0, 1/2)".into()));
        }
        Ok(())
    }
}

impl Default for SweepPlan {
    fn default() -> Self {
        let gaps = (0..9).map(|i| 10f64.powf(-2.0 - 0.25 * i as f64)).collect();
        SweepPlan {
            gaps,
            width_factor: 8.0,
            max_points: 16384,
            warm_start: true,
            ball_constant: None,
            trial_radius_fraction: 0.4,
            compare_half_width: 32.0,
            compare_points: 2048,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecordStatus {
    Converged,
    IterCap,
    Diverged,
    Failed,
}

impl RecordStatus {
    pub fn name(self) -> &'static str {
        match self {
            RecordStatus::Converged => "Converged",
            RecordStatus::IterCap => "IterCap",
            RecordStatus::Diverged => "Diverged",
            RecordStatus::Failed => "Failed",
        }
    }
}

impl From<Status> for RecordStatus {
    fn from(s: Status) -> Self {
        match s {
            Status::Converged => RecordStatus::Converged,
            Status::IterCap => RecordStatus::IterCap,
            Status::Diverged => RecordStatus::Diverged,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub delta: f64,
    pub energy: f64,
    pub kinetic: f64,
    /// `E_k / delta^{1-2/p}`
    pub ratio_e: f64,
    /// `kinetic * delta^{2/p}`
    pub ratio_kin: f64,
    pub z_hat: Vec<f64>,
    /// Whether `z_hat` is one of the flattest wells.
    pub z_in_flattest: bool,
    pub dist_l2: f64,
    pub dist_h1: f64,
    pub mass_in_ball: f64,
    pub status: RecordStatus,
    /// Points per axis of the grid used for this gap.
    pub points: usize,
    pub iters: usize,
    pub residual: f64,
    /// Energy of the cutoff trial state at `l = delta^{-1/p} b`.
    pub trial_bound: f64,
    pub note: Option<String>,
}

impl SweepRecord {
    fn failed(delta: f64, points: usize, note: String) -> Self {
        SweepRecord {
            delta,
            energy: f64::NAN,
            kinetic: f64::NAN,
            ratio_e: f64::NAN,
            ratio_kin: f64::NAN,
            z_hat: Vec::new(),
            z_in_flattest: false,
            dist_l2: f64::NAN,
            dist_h1: f64::NAN,
            mass_in_ball: f64::NAN,
            status: RecordStatus::Failed,
            points,
            iters: 0,
            residual: f64::NAN,
            trial_bound: f64::NAN,
            note: Some(note),
        }
    }

    pub fn converged(&self) -> bool {
        self.status == RecordStatus::Converged
    }
}

/// `v(x) = delta^{d/(2p)} u(z + delta^{1/p} x)` sampled on `target`.
pub fn rescale_minimizer(u: &Field, delta: f64, z: &[f64], p: f64, target: &Grid) -> Result<Field> {
    if !(delta > 0.0) {
        return Err(Error::InvalidConfig(format!("rescaling needs delta > 0, got {delta}")));
    }
    u.dilate_about(target, z, delta.powf(1.0 / p))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Concentration {
    pub z_hat: Vec<f64>,
    pub mass_in_ball: f64,
    pub in_flattest: bool,
    pub radius: f64,
    /// Ball mass around every well, in declaration order.
    pub well_masses: Vec<f64>,
}

/// Mass of `u` within distance `radius` of `center`.
pub fn mass_in_ball(u: &Field, center: &[f64], radius: f64) -> f64 {
    let grid = u.grid();
    let d = grid.dim();
    let r2 = radius * radius;
    let s: f64 = u
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let x = grid.point(*i);
            x[..d].iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= r2
        })
        .map(|(_, v)| v.norm_sqr())
        .sum();
    s * grid.cell_volume()
}

/// Finds the well whose ball of radius `c0 delta^{1/p}` holds the most mass.
/// All wells compete, so a concentration away from the flattest set is
/// reported rather than hidden.
pub fn detect_concentration(u: &Field, spec: &PotentialSpec, delta: f64, c0: f64) -> Result<Concentration> {
    let z = spec.flattest_set()?;
    let radius = c0 * delta.powf(1.0 / z.p);
    let well_masses: Vec<f64> = spec.wells.iter().map(|w| mass_in_ball(u, &w.center, radius)).collect();
    let (best, &best_mass) = well_masses
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |acc, (i, m)| if *m > *acc.1 { (i, m) } else { acc });
    if !(best_mass >= 0.5) {
        return Err(Error::NoConcentration { best_mass });
    }
    let z_hat = spec.wells[best].center.clone();
    let in_flattest = z.centers.contains(&z_hat);
    Ok(Concentration { z_hat, mass_in_ball: best_mass, in_flattest, radius, well_masses })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileDistance {
    pub l2: f64,
    pub h1: f64,
}

/// Distances of `|v|`, recentred at its peak, to `b^{d/2} Q0(b x)`.
pub fn compare_profile(v: &Field, profile: &GnProfile, b: f64) -> Result<ProfileDistance> {
    let modulus = v.modulus();
    let peak = modulus.peak_location();
    let shift: Vec<f64> = peak.iter().map(|c| -c).collect();
    let aligned = modulus.translate(&shift).real_part();
    let target = profile.scaled_profile(v.grid(), b)?;
    let diff = aligned.sub(&target)?;
    let l2_sq = diff.mass();
    let h1_sq = l2_sq + diff.grad_norm_sq();
    Ok(ProfileDistance { l2: l2_sq.sqrt(), h1: h1_sq.sqrt() })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
}

/// Least squares fit of `log y = log C + e log x`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerFit> {
    if points.len() < 2 {
        return Err(Error::DegenerateFit(format!("{} points", points.len())));
    }
    if let Some(bad) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::DegenerateFit(format!("non-positive point {bad:?}")));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all abscissae coincide".into()));
    }
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - exponent * x).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(PowerFit { exponent, prefactor: intercept.exp(), r_squared })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    Energy,
    Kinetic,
}

/// Power law of a record quantity against `delta`, over converged records.
pub fn fit_records(records: &[SweepRecord], quantity: Quantity) -> Result<PowerFit> {
    let points: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.converged())
        .map(|r| {
            (r.delta, match quantity {
                Quantity::Energy => r.energy,
                Quantity::Kinetic => r.kinetic,
            })
        })
        .collect();
    if points.len() < 4 {
        return Err(Error::DegenerateFit(format!("{} converged records, need 4", points.len())));
    }
    fit_power_law(&points)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    /// `p` and `lambda` of the flattest wells.
    pub p: f64,
    pub lambda: f64,
    pub constants: LimitConstants,
    pub energy_fit: Option<PowerFit>,
    pub kinetic_fit: Option<PowerFit>,
    pub verdicts: Vec<Verdict>,
}

impl SweepOutcome {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }
}

/// Gaps at or below this value must concentrate on a flattest well.
pub const SELECTION_GAP: f64 = 1e-3;

fn grid_for(base: &Grid, delta: f64, p: f64, plan: &SweepPlan) -> Result<Grid> {
    let width = delta.powf(1.0 / p);
    let mut n = base.points();
    while width < plan.width_factor * 2.0 * base.half_width() / n as f64 && 2 * n <= plan.max_points {
        n *= 2;
    }
    base.with_points(n)
}

/// Runs the sweep. Each gap is solved on the base grid, refined when the
/// predicted concentration width drops below `width_factor` cells.
pub fn run_sweep(
    spec: &PotentialSpec,
    grid: &Grid,
    plan: &SweepPlan,
    profile: &GnProfile,
    cfg: &SolverConfig,
) -> Result<SweepOutcome> {
    plan.validate()?;
    cfg.validate()?;
    let flattest = spec.flattest_set()?;
    let (p, lambda) = (flattest.p, flattest.lambda);
    if !(p > 2.0) {
        return Err(Error::InvalidPotential(format!("blow-up analysis needs p > 2, flattest well has p = {p}")));
    }
    let a_star = profile.a_star_discrete;
    for &delta in &plan.gaps {
        let regime = spec.with_offset(a_star - delta).classify(grid, a_star, false)?;
        if regime.kind != RegimeKind::SubcriticalExists {
            return Err(Error::NotSubcritical { margin: regime.diagnostics.margin });
        }
    }
    let constants = profile.limit_constants(p, lambda)?;
    let c0 = plan.ball_constant.unwrap_or(8.0 / constants.b);
    let cmp_grid = Grid::new(grid.dim(), plan.compare_half_width, plan.compare_points)?;

    let mut records = Vec::with_capacity(plan.gaps.len());
    let mut previous: Option<(f64, Field, Vec<f64>)> = None;
    for &delta in &plan.gaps {
        let g = grid_for(grid, delta, p, plan)?;
        let spec_a = spec.with_offset(a_star - delta);
        let solved = match (&previous, plan.warm_start) {
            (Some((prev_delta, u, z)), true) => warm_solve(&spec_a, &g, cfg, u, z, prev_delta / delta, p)
                .or_else(|_| multi_start(&spec_a, &g, cfg, delta, p, constants.b)),
            _ => multi_start(&spec_a, &g, cfg, delta, p, constants.b),
        };
        match solved {
            Ok(res) => {
                let record = measure(&res, &spec_a, &g, &cmp_grid, profile, &constants, delta, p, c0, plan);
                if record.converged() {
                    previous = Some((delta, res.u, record.z_hat.clone()));
                }
                records.push(record);
            }
            Err(e) => records.push(SweepRecord::failed(delta, g.points(), e.to_string())),
        }
    }

    let energy_fit = fit_records(&records, Quantity::Energy).ok();
    let kinetic_fit = fit_records(&records, Quantity::Kinetic).ok();
    let verdicts = verdicts(&records, spec, p, &constants, energy_fit, kinetic_fit);
    Ok(SweepOutcome { records, p, lambda, constants, energy_fit, kinetic_fit, verdicts })
}

fn warm_solve(
    spec: &PotentialSpec,
    grid: &Grid,
    cfg: &SolverConfig,
    u: &Field,
    z: &[f64],
    gap_ratio: f64,
    p: f64,
) -> Result<SolveResult> {
    let ell = gap_ratio.powf(1.0 / p);
    let offset: Vec<f64> = z.iter().map(|c| c * (1.0 - ell)).collect();
    let seed = u.dilate_about(grid, &offset, ell)?;
    let res = minimizer::solve(spec, grid, &SolverConfig { init: Init::WarmStart(seed), ..cfg.clone() })?;
    if res.status != Status::Converged {
        return Err(Error::NotConverged { change: res.residual, iters: res.iters });
    }
    Ok(res)
}

/// Gaussian seeds at every well; the lowest converged energy wins.
fn multi_start(spec: &PotentialSpec, grid: &Grid, cfg: &SolverConfig, delta: f64, p: f64, b: f64) -> Result<SolveResult> {
    let width = (delta.powf(1.0 / p) / b).max(2.0 * grid.spacing());
    let mut best: Option<SolveResult> = None;
    let mut last_err = None;
    for w in &spec.wells {
        let init = Init::Gaussian { center: w.center.clone(), width };
        match minimizer::solve(spec, grid, &SolverConfig { init, ..cfg.clone() }) {
            Ok(res) => {
                let better = match &best {
                    None => true,
                    Some(b) => {
                        let rank = |r: &SolveResult| (r.status != Status::Converged) as u8;
                        (rank(&res), res.energy) < (rank(b), b.energy)
                    }
                };
                if better {
                    best = Some(res);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::InvalidPotential("no wells to seed".into())))
}

#[allow(clippy::too_many_arguments)]
fn measure(
    res: &SolveResult,
    spec: &PotentialSpec,
    grid: &Grid,
    cmp_grid: &Grid,
    profile: &GnProfile,
    constants: &LimitConstants,
    delta: f64,
    p: f64,
    c0: f64,
    plan: &SweepPlan,
) -> SweepRecord {
    let mut record = SweepRecord {
        delta,
        energy: res.energy,
        kinetic: res.kinetic,
        ratio_e: res.energy / delta.powf(1.0 - 2.0 / p),
        ratio_kin: res.kinetic * delta.powf(2.0 / p),
        z_hat: Vec::new(),
        z_in_flattest: false,
        dist_l2: f64::NAN,
        dist_h1: f64::NAN,
        mass_in_ball: f64::NAN,
        status: res.status.into(),
        points: grid.points(),
        iters: res.iters,
        residual: res.residual,
        trial_bound: f64::NAN,
        note: None,
    };
    let mut notes = Vec::new();
    match detect_concentration(&res.u, spec, delta, c0) {
        Ok(c) => {
            record.z_hat = c.z_hat;
            record.z_in_flattest = c.in_flattest;
            record.mass_in_ball = c.mass_in_ball;
            match rescale_minimizer(&res.u, delta, &record.z_hat, p, cmp_grid)
                .and_then(|v| compare_profile(&v, profile, constants.b))
            {
                Ok(dist) => {
                    record.dist_l2 = dist.l2;
                    record.dist_h1 = dist.h1;
                }
                Err(e) => notes.push(format!("profile comparison: {e}")),
            }
        }
        Err(e) => {
            notes.push(format!("concentration: {e}"));
            record.status = RecordStatus::Failed;
        }
    }
    let ell = delta.powf(-1.0 / p) * constants.b;
    match minimizer::trial_upper_bound(profile, spec, grid, ell, plan.trial_radius_fraction * grid.half_width()) {
        Ok(t) => record.trial_bound = t,
        Err(e) => notes.push(format!("trial state: {e}")),
    }
    if !notes.is_empty() {
        record.note = Some(notes.join("; "));
    }
    record
}

fn verdict(name: &'static str, passed: bool, detail: String) -> Verdict {
    Verdict { name, passed, detail }
}

fn verdicts(
    records: &[SweepRecord],
    spec: &PotentialSpec,
    p: f64,
    constants: &LimitConstants,
    energy_fit: Option<PowerFit>,
    kinetic_fit: Option<PowerFit>,
) -> Vec<Verdict> {
    let mut out = Vec::new();
    let converged: Vec<&SweepRecord> = records.iter().filter(|r| r.converged()).collect();
    out.push(verdict(
        "all_converged",
        converged.len() == records.len(),
        format!("{} of {} records converged", converged.len(), records.len()),
    ));

    let expected_e = 1.0 - 2.0 / p;
    out.push(match energy_fit {
        Some(f) => verdict(
            "energy_exponent",
            ((f.exponent - expected_e) / expected_e).abs() <= 0.05,
            format!("fitted {:.6}, expected {:.6}", f.exponent, expected_e),
        ),
        None => verdict("energy_exponent", false, "fewer than 4 usable records".into()),
    });
    let expected_k = -2.0 / p;
    out.push(match kinetic_fit {
        Some(f) => verdict(
            "kinetic_exponent",
            ((f.exponent - expected_k) / expected_k).abs() <= 0.05,
            format!("fitted {:.6}, expected {:.6}", f.exponent, expected_k),
        ),
        None => verdict("kinetic_exponent", false, "fewer than 4 usable records".into()),
    });

    let last = converged.iter().min_by(|a, b| a.delta.total_cmp(&b.delta));
    out.push(match last {
        Some(r) => {
            let rel = (r.ratio_e - constants.e_limit).abs() / constants.e_limit;
            verdict(
                "energy_limit",
                rel <= 0.02,
                format!("ratio_E = {:.8} at delta = {:.3e}, E_limit = {:.8} ({:.3e} relative)", r.ratio_e, r.delta, constants.e_limit, rel),
            )
        }
        None => verdict("energy_limit", false, "no converged record".into()),
    });

    let kin: Vec<f64> = converged.iter().map(|r| r.ratio_kin).collect();
    let (kmin, kmax) = kin.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    out.push(verdict(
        "kinetic_sandwich",
        !kin.is_empty() && kmax / kmin <= 10.0,
        format!("ratio_kin spans [{kmin:.6}, {kmax:.6}]"),
    ));

    let low_mass = converged.iter().filter(|r| !(r.mass_in_ball >= 0.5)).count();
    out.push(verdict("mass_concentration", low_mass == 0, format!("{low_mass} converged records hold less than 1/2 in the ball")));

    out.push(match last {
        Some(r) => verdict(
            "profile_convergence",
            r.dist_l2 <= 1e-2 && r.dist_h1 <= 5e-2,
            format!("L2 distance {:.3e}, H1 distance {:.3e} at delta = {:.3e}", r.dist_l2, r.dist_h1, r.delta),
        ),
        None => verdict("profile_convergence", false, "no converged record".into()),
    });

    let stray = converged.iter().filter(|r| r.delta <= SELECTION_GAP && !r.z_in_flattest).count();
    out.push(verdict(
        "flattest_selection",
        stray == 0,
        format!("{stray} records with delta <= {SELECTION_GAP:e} concentrate off the flattest set"),
    ));

    let above = converged.iter().filter(|r| !(r.energy <= r.trial_bound + 1e-9)).count();
    out.push(verdict("upper_bound", above == 0, format!("{above} records exceed the trial-state energy")));
    out.push(match last {
        Some(r) => {
            let scaled = r.trial_bound / r.delta.powf(1.0 - 2.0 / p);
            let rel = (scaled - constants.e_limit).abs() / constants.e_limit;
            verdict(
                "trial_asymptotics",
                rel <= 0.05,
                format!("trial / delta^(1-2/p) = {scaled:.8} ({rel:.3e} from E_limit)"),
            )
        }
        None => verdict("trial_asymptotics", false, "no converged record".into()),
    });

    if spec.wells.len() == 1 {
        let mut bad = 0;
        for w in converged.windows(2) {
            if w[1].dist_l2 > 1.2 * w[0].dist_l2 {
                bad += 1;
            }
        }
        out.push(verdict("profile_distance_decreasing", bad == 0, format!("{bad} increases beyond 20%")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gn_profile::relax_q_spectral;
    use crate::potential::Well;
    use std::sync::OnceLock;

    fn profile() -> &'static GnProfile {
        static P: OnceLock<GnProfile> = OnceLock::new();
        P.get_or_init(|| relax_q_spectral(&Grid::new(1, 16.0, 1024).unwrap(), 1e-14).unwrap())
    }

    #[test]
    fn geometric_plan() {
        let plan = SweepPlan::geometric(1e-2, 1e-4, 9).unwrap();
        assert_eq!(plan.gaps.len(), 9);
        assert!((plan.gaps[4] - 1e-3).abs() < 1e-15);
        assert_eq!(plan.gaps[8], 1e-4);
        plan.validate().unwrap();
        let bad = SweepPlan { gaps: vec![1e-3, 1e-2], ..SweepPlan::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn power_law_fit_is_exact() {
        let pts: Vec<(f64, f64)> = [1e-2, 3e-3, 1e-3, 1e-4].iter().map(|&d: &f64| (d, 3.0 * d.sqrt())).collect();
        let f = fit_power_law(&pts).unwrap();
        assert!((f.exponent - 0.5).abs() < 1e-10);
        assert!((f.prefactor - 3.0).abs() < 1e-10);
        assert!((f.r_squared - 1.0).abs() < 1e-10);
        assert!(fit_power_law(&[(1.0, 1.0), (2.0, -1.0)]).is_err());
    }

    #[test]
    fn rescaling_identity_and_inverse() {
        let g = Grid::new(1, 32.0, 2048).unwrap();
        let q0 = |x: f64| {
            let norm = (3.0f64.sqrt() * std::f64::consts::PI / 2.0).sqrt();
            3.0f64.powf(0.25) * (1.0 / (2.0 * x).cosh()).sqrt() / norm
        };
        let (delta, b, z): (f64, f64, f64) = (1e-2, 0.5, 1.0);
        let s = delta.powf(0.25);
        let target = Field::from_fn(&g, |x| b.sqrt() * q0(b * x[0]));
        let same = rescale_minimizer(&target, 1.0, &[0.0], 4.0, &g).unwrap();
        for (x, y) in same.values().iter().zip(target.values()) {
            assert_eq!(x, y);
        }
        let synthetic = Field::from_fn(&g, |x| b.sqrt() * q0(b * (x[0] - z) / s) / s.sqrt());
        let v = rescale_minimizer(&synthetic, delta, &[z], 4.0, &g).unwrap();
        let err = v.sub(&target).unwrap().l2_norm();
        assert!(err < 1e-8, "{err}");
        assert!((v.l2_norm() - synthetic.l2_norm()).abs() < 1e-8);
    }

    #[test]
    fn compare_profile_metric() {
        let prof = profile();
        let g = Grid::new(1, 32.0, 2048).unwrap();
        let b = 0.477;
        let exact = prof.scaled_profile(&g, b).unwrap();
        let d = compare_profile(&exact, prof, b).unwrap();
        assert!(d.l2 < 1e-12 && d.h1 < 1e-12);
        let bump = Field::from_fn(&g, |x| (-(x[0] - 0.3).powi(2)).exp());
        let bump = bump.scaled(1e-3 / bump.l2_norm());
        let perturbed = exact.add(&bump).unwrap();
        let d = compare_profile(&perturbed, prof, b).unwrap();
        assert!(d.l2 >= 0.5e-3 && d.l2 <= 2e-3, "{}", d.l2);
    }

    #[test]
    fn concentration_on_the_right_well() {
        let prof = profile();
        let g = Grid::new(1, 16.0, 1024).unwrap();
        let spec = PotentialSpec {
            wells: vec![
                Well { center: vec![-1.0], p: 4.0, lambda: 1.0 },
                Well { center: vec![1.0], p: 4.0, lambda: 1.0 },
            ],
            ..PotentialSpec::flat(0.0)
        };
        let delta: f64 = 1e-3;
        let ell = 0.477 / delta.powf(0.25);
        let u = prof.q0.dilate_about(&g, &[-ell], ell).unwrap();
        let c = detect_concentration(&u, &spec, delta, 8.0 / 0.477).unwrap();
        assert_eq!(c.z_hat, vec![1.0]);
        assert!(c.mass_in_ball > 0.99);
        assert!(c.in_flattest);
        let spread = Field::constant(&g, 1.0).normalize_l2().unwrap();
        assert!(matches!(detect_concentration(&spread, &spec, delta, 1.0), Err(Error::NoConcentration { .. })));
    }

    #[test]
    fn short_single_well_sweep() {
        let prof = profile();
        let g = Grid::new(1, 16.0, 1024).unwrap();
        let spec = PotentialSpec::single_well(1, 4.0, 1.0, 0.0);
        let plan = SweepPlan { gaps: vec![1e-2, 5e-3, 2e-3, 1e-3], ..SweepPlan::default() };
        let out = run_sweep(&spec, &g, &plan, prof, &SolverConfig::default()).unwrap();
        assert!(out.records.iter().all(|r| r.converged()));
        for r in &out.records {
            assert_eq!(r.z_hat, vec![0.0]);
            assert!(r.energy <= r.trial_bound + 1e-9);
            assert!((r.ratio_e / out.constants.e_limit - 1.0).abs() < 0.01);
        }
        let fit = out.energy_fit.unwrap();
        assert!((fit.exponent - 0.5).abs() < 0.025);
    }
}
