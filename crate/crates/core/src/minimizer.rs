//! Constrained minimization of `E(u) = int |grad u|^2 + int k |u|^{2+4/d}`
//! over `||u||_2 = 1` by a normalized, preconditioned gradient flow.
//!
//! One step moves along the Euler–Lagrange residual
//! `r = -Delta u + (q/2) k |u|^{4/d} u - mu u` preconditioned by
//! `(I + tau (-Delta + c))^{-1}`, then projects back onto the unit sphere.
//! Steps that raise the energy are retried with half the time step.

use std::collections::VecDeque;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gn_profile::GnProfile;
use crate::grid::{grad_norm_sq_from_spectrum, Field, Grid};
use crate::potential::PotentialSpec;

/// Relative size of the energy noise floor. Energy increases smaller than
/// this fraction of `|kinetic| + |nonlinear|` are indistinguishable from
/// rounding and do not count as an increase.
pub const ENERGY_ROUNDOFF: f64 = 1e-13;

/// Smallest admissible time step.
pub const MIN_TAU: f64 = 1e-12;

/// Outer shell of the box, as a fraction of the half-width per axis.
const EDGE_FRACTION: f64 = 0.9;
/// Largest mass a converged state may keep in the outer shell. Without this
/// guard a coupling with no minimizer lets the flow settle on a nearly
/// constant state, which the periodic box would report as converged.
const EDGE_MASS_TOLERANCE: f64 = 1e-3;
/// Consecutive small energy changes needed for convergence.
const CALM_STEPS: usize = 10;
/// Stationary steps tolerated while the edge guard still fails. Past this
/// the state is fixed and only the box is wrong, so iterating on is futile.
const STALLED_STEPS: usize = 200;

#[derive(Clone, Debug)]
pub enum Init {
    Gaussian { center: Vec<f64>, width: f64 },
    WarmStart(Field),
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Largest time step; the flow shrinks it on rejected steps and grows it
    /// back afterwards.
    pub tau: f64,
    /// Stabilization shift. `None` recomputes
    /// `max(0, -min k) (d+2)/d max |u|^{4/d}` at every step.
    pub c_stab: Option<f64>,
    pub tol_energy: f64,
    pub tol_residual: f64,
    pub max_iters: usize,
    pub energy_floor: f64,
    pub init: Init,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tau: 1.0,
            c_stab: None,
            tol_energy: 1e-12,
            tol_residual: 1e-7,
            max_iters: 200_000,
            energy_floor: -1e3,
            init: Init::Gaussian { center: vec![0.0; 3], width: 1.0 },
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidConfig("solver.tau must be positive".into()));
        }
        if matches!(self.c_stab, Some(c) if !(c >= 0.0)) {
            return Err(Error::InvalidConfig("solver.c_stab must be nonnegative".into()));
        }
        if !(self.tol_energy > 0.0 && self.tol_residual > 0.0) {
            return Err(Error::InvalidConfig("solver tolerances must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("solver.max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Converged,
    /// Energy fell below the configured floor.
    Diverged,
    /// Not converged: the iteration cap was hit, or the flow came to rest
    /// with more than the tolerated mass near the box edge.
    IterCap,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Converged => "Converged",
            Status::Diverged => "Diverged",
            Status::IterCap => "IterCap",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceEntry {
    pub iter: usize,
    pub energy: f64,
    pub kinetic: f64,
    pub residual: f64,
    pub tau: f64,
    pub norm: f64,
}

impl TraceEntry {
    /// Energy noise floor at this iterate, the same one the backtracking
    /// uses to decide whether a step raised the energy.
    pub fn roundoff(&self) -> f64 {
        ENERGY_ROUNDOFF * (self.kinetic.abs() + (self.energy - self.kinetic).abs())
    }
}

/// Whether the recorded energies never rise above the noise floor.
pub fn trace_is_monotone(trace: &[TraceEntry]) -> bool {
    trace.windows(2).all(|w| w[1].energy <= w[0].energy + w[0].roundoff())
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub u: Field,
    pub energy: f64,
    pub kinetic: f64,
    pub nonlinear: f64,
    pub mu: f64,
    pub residual: f64,
    pub iters: usize,
    pub status: Status,
    pub trace: Vec<TraceEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyParts {
    pub kinetic: f64,
    pub nonlinear: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.kinetic + self.nonlinear
    }

    fn scale(&self) -> f64 {
        self.kinetic.abs() + self.nonlinear.abs()
    }
}

/// `|u|^{4/d}` from `|u|^2`.
#[inline]
fn focusing_power(norm_sqr: f64, dim: usize) -> f64 {
    match dim {
        1 => norm_sqr * norm_sqr,
        2 => norm_sqr,
        _ => norm_sqr.powf(2.0 / 3.0),
    }
}

/// `(d+2)/d`, half the critical exponent.
fn half_exponent(dim: usize) -> f64 {
    (dim as f64 + 2.0) / dim as f64
}

fn nonlinear_term(grid: &Grid, k: &[f64], u: &[Complex64]) -> f64 {
    let d = grid.dim();
    let s: f64 = u
        .iter()
        .zip(k)
        .map(|(v, &kv)| {
            let a = v.norm_sqr();
            kv * a * focusing_power(a, d)
        })
        .sum();
    s * grid.cell_volume()
}

/// Kinetic and nonlinear parts of the energy.
pub fn energy_parts(u: &Field, k: &Field) -> Result<EnergyParts> {
    if u.grid() != k.grid() {
        return Err(Error::GridMismatch);
    }
    let kr = k.real_parts();
    Ok(EnergyParts { kinetic: u.grad_norm_sq(), nonlinear: nonlinear_term(u.grid(), &kr, u.values()) })
}

/// `E(u) = int |grad u|^2 + int k |u|^{2+4/d}`.
pub fn energy(u: &Field, k: &Field) -> Result<f64> {
    Ok(energy_parts(u, k)?.total())
}

/// `mu = int |grad u|^2 + (d+2)/d int k |u|^{2+4/d}` for a unit-mass `u`.
pub fn multiplier(u: &Field, k: &Field) -> Result<f64> {
    let parts = energy_parts(u, k)?;
    Ok(parts.kinetic + half_exponent(u.grid().dim()) * parts.nonlinear)
}

/// `|| -Delta u + (d+2)/d k |u|^{4/d} u - mu u ||_2`.
pub fn euler_lagrange_residual(u: &Field, k: &Field, mu: f64) -> Result<f64> {
    if u.grid() != k.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = u.grid();
    let d = grid.dim();
    let c = half_exponent(d);
    let lap = u.neg_laplacian();
    let s: f64 = lap
        .values()
        .iter()
        .zip(u.values())
        .zip(k.values())
        .map(|((l, v), kv)| (l + v * (c * kv.re * focusing_power(v.norm_sqr(), d)) - v * mu).norm_sqr())
        .sum();
    Ok((s * grid.cell_volume()).sqrt())
}

struct Gradient {
    r: Vec<Complex64>,
    mu: f64,
    residual: f64,
}

/// Outcome of one accepted step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepInfo {
    pub energy_before: f64,
    pub energy_after: f64,
    /// Time step used by the accepted step.
    pub tau: f64,
    pub rejections: usize,
}

/// State of the normalized flow: current iterate, its spectrum and energy.
pub(crate) struct Flow {
    grid: Grid,
    k: Vec<f64>,
    k_min: f64,
    real: bool,
    tau: f64,
    tau_max: f64,
    c_stab: Option<f64>,
    u: Vec<Complex64>,
    u_hat: Vec<Complex64>,
    parts: EnergyParts,
    streak: usize,
}

impl Flow {
    pub(crate) fn new(u: &Field, k: Vec<f64>, tau: f64, c_stab: Option<f64>) -> Result<Self> {
        let grid = u.grid().clone();
        if k.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        let real = u.is_real();
        let u = u.normalize_l2()?;
        let u = if real { u.real_part() } else { u };
        let u_vals = u.into_values();
        let mut u_hat = u_vals.clone();
        grid.fft(&mut u_hat, false);
        let k_min = k.iter().copied().fold(f64::INFINITY, f64::min);
        let parts = EnergyParts {
            kinetic: grad_norm_sq_from_spectrum(&grid, &u_hat),
            nonlinear: nonlinear_term(&grid, &k, &u_vals),
        };
        Ok(Flow { grid, k, k_min, real, tau, tau_max: tau, c_stab, u: u_vals, u_hat, parts, streak: 0 })
    }

    pub(crate) fn parts(&self) -> EnergyParts {
        self.parts
    }

    pub(crate) fn tau(&self) -> f64 {
        self.tau
    }

    pub(crate) fn field(&self) -> Field {
        Field::new(&self.grid, self.u.clone()).expect("flow state matches its grid")
    }

    pub(crate) fn values(&self) -> &[Complex64] {
        &self.u
    }

    /// Replaces `k` by the constant `value`.
    pub(crate) fn set_uniform_k(&mut self, value: f64) {
        self.k.iter_mut().for_each(|v| *v = value);
        self.k_min = value;
        self.parts.nonlinear = nonlinear_term(&self.grid, &self.k, &self.u);
    }

    fn gradient(&self) -> Gradient {
        let d = self.grid.dim();
        let c = half_exponent(d);
        let mut lap: Vec<Complex64> =
            self.u_hat.iter().zip(self.grid.k_squared()).map(|(v, &k2)| v * k2).collect();
        self.grid.fft(&mut lap, true);
        let mu = self.parts.kinetic + c * self.parts.nonlinear;
        let mut sq = 0.0;
        for ((l, v), &kv) in lap.iter_mut().zip(&self.u).zip(&self.k) {
            *l += v * (c * kv * focusing_power(v.norm_sqr(), d) - mu);
            sq += l.norm_sqr();
        }
        Gradient { r: lap, mu, residual: (sq * self.grid.cell_volume()).sqrt() }
    }

    /// Euler–Lagrange residual and multiplier of the current iterate.
    pub(crate) fn residual(&self) -> (f64, f64) {
        let g = self.gradient();
        (g.residual, g.mu)
    }

    pub(crate) fn advance(&mut self) -> Result<StepInfo> {
        let grad = self.gradient();
        self.step(&grad)
    }

    fn stabilization(&self) -> f64 {
        self.c_stab.unwrap_or_else(|| {
            let d = self.grid.dim();
            let peak = self.u.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
            (-self.k_min).max(0.0) * half_exponent(d) * focusing_power(peak, d)
        })
    }

    fn step(&mut self, grad: &Gradient) -> Result<StepInfo> {
        let c = self.stabilization();
        let mut r_hat = grad.r.clone();
        self.grid.fft(&mut r_hat, false);
        let before = self.parts.total();
        let slack = ENERGY_ROUNDOFF * self.parts.scale();
        let h = self.grid.cell_volume();
        let mut rejections = 0;
        loop {
            let tau = self.tau;
            let mut w: Vec<Complex64> = self
                .u_hat
                .iter()
                .zip(&r_hat)
                .zip(self.grid.k_squared())
                .map(|((u, r), &k2)| u - r * (tau / (1.0 + tau * (k2 + c))))
                .collect();
            self.grid.fft(&mut w, true);
            if self.real {
                w.iter_mut().for_each(|v| v.im = 0.0);
            }
            let norm = (w.iter().map(|v| v.norm_sqr()).sum::<f64>() * h).sqrt();
            let mut accepted = None;
            if norm.is_finite() && norm > 0.0 {
                let inv = 1.0 / norm;
                w.iter_mut().for_each(|v| *v *= inv);
                let mut w_hat = w.clone();
                self.grid.fft(&mut w_hat, false);
                let parts = EnergyParts {
                    kinetic: grad_norm_sq_from_spectrum(&self.grid, &w_hat),
                    nonlinear: nonlinear_term(&self.grid, &self.k, &w),
                };
                if parts.total().is_finite() && parts.total() <= before + slack {
                    accepted = Some((w, w_hat, parts));
                }
            }
            match accepted {
                Some((w, w_hat, parts)) => {
                    self.u = w;
                    self.u_hat = w_hat;
                    self.parts = parts;
                    if rejections == 0 {
                        self.streak += 1;
                        if self.streak >= 4 && self.tau < self.tau_max {
                            self.tau = (2.0 * self.tau).min(self.tau_max);
                            self.streak = 0;
                        }
                    } else {
                        self.streak = 0;
                    }
                    return Ok(StepInfo { energy_before: before, energy_after: parts.total(), tau, rejections });
                }
                None => {
                    rejections += 1;
                    self.tau *= 0.5;
                    if self.tau < MIN_TAU {
                        return Err(Error::StepUnderflow { energy: before });
                    }
                }
            }
        }
    }
}

/// One accepted step of the flow from `u`, with backtracking.
pub fn flow_step(u: &Field, k: &Field, cfg: &SolverConfig) -> Result<(Field, StepInfo)> {
    if u.grid() != k.grid() {
        return Err(Error::GridMismatch);
    }
    let mut flow = Flow::new(u, k.real_parts(), cfg.tau, cfg.c_stab)?;
    let grad = flow.gradient();
    let info = flow.step(&grad)?;
    Ok((flow.field(), info))
}

fn initial_state(grid: &Grid, init: &Init) -> Result<Field> {
    match init {
        Init::Gaussian { center, width } => {
            if !(*width > 0.0) {
                return Err(Error::InvalidConfig("Gaussian seed width must be positive".into()));
            }
            let d = grid.dim();
            let c: Vec<f64> = (0..d).map(|i| center.get(i).copied().unwrap_or(0.0)).collect();
            Ok(Field::from_fn(grid, |x| {
                let r2: f64 = x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
                (-0.5 * r2 / (width * width)).exp()
            }))
        }
        Init::WarmStart(u) => {
            if u.grid() != grid {
                return Err(Error::GridMismatch);
            }
            Ok(u.clone())
        }
    }
}

/// Fraction of the mass of `u` lying in the outer shell of the box.
pub fn edge_mass(u: &Field) -> f64 {
    let grid = u.grid();
    let d = grid.dim();
    let bound = EDGE_FRACTION * grid.half_width();
    let s: f64 = u
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| grid.point(*i)[..d].iter().any(|c| c.abs() > bound))
        .map(|(_, v)| v.norm_sqr())
        .sum();
    s * grid.cell_volume()
}

/// Minimizes the energy for the coupling described by `spec`.
pub fn solve(spec: &PotentialSpec, grid: &Grid, cfg: &SolverConfig) -> Result<SolveResult> {
    let k = spec.eval_k(grid)?;
    solve_with_k(&k, cfg)
}

/// Minimizes the energy for sampled `k`.
pub fn solve_with_k(k: &Field, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let grid = k.grid();
    let seed = initial_state(grid, &cfg.init)?;
    let mut flow = Flow::new(&seed, k.real_parts(), cfg.tau, cfg.c_stab)?;
    let mut calm: VecDeque<f64> = VecDeque::with_capacity(CALM_STEPS + 1);
    let mut trace = Vec::new();
    let finish = |flow: &Flow, grad: &Gradient, iters: usize, status: Status, trace: Vec<TraceEntry>| {
        let parts = flow.parts();
        SolveResult {
            u: flow.field(),
            energy: parts.total(),
            kinetic: parts.kinetic,
            nonlinear: parts.nonlinear,
            mu: grad.mu,
            residual: grad.residual,
            iters,
            status,
            trace,
        }
    };
    let mut iter = 0;
    let mut stalled = 0;
    loop {
        let grad = flow.gradient();
        let parts = flow.parts();
        let norm = (flow.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.cell_volume()).sqrt();
        trace.push(TraceEntry { iter, energy: parts.total(), kinetic: parts.kinetic, residual: grad.residual, tau: flow.tau(), norm });
        let at_rest = grad.residual <= cfg.tol_residual
            && calm.len() == CALM_STEPS
            && calm.iter().all(|&c| c <= cfg.tol_energy);
        if at_rest {
            if edge_mass(&flow.field()) <= EDGE_MASS_TOLERANCE {
                return Ok(finish(&flow, &grad, iter, Status::Converged, trace));
            }
            stalled += 1;
            if stalled >= STALLED_STEPS {
                return Ok(finish(&flow, &grad, iter, Status::IterCap, trace));
            }
        } else {
            stalled = 0;
        }
        if parts.total() < cfg.energy_floor {
            return Ok(finish(&flow, &grad, iter, Status::Diverged, trace));
        }
        if iter >= cfg.max_iters {
            return Ok(finish(&flow, &grad, iter, Status::IterCap, trace));
        }
        let info = flow.step(&grad)?;
        let scale = flow.parts().scale().max(f64::MIN_POSITIVE);
        if calm.len() == CALM_STEPS {
            calm.pop_front();
        }
        calm.push_back((info.energy_before - info.energy_after).abs() / scale);
        iter += 1;
    }
}

/// C² cutoff: 1 on `[0, radius/2]`, 0 beyond `radius`, quintic in between.
pub fn cutoff(distance: f64, radius: f64) -> f64 {
    let t = (distance - 0.5 * radius) / (0.5 * radius);
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    }
}

/// Normalized `v(x) = l^{d/2} Q0(l (x - z)) w(|x - z|)` on `grid`.
pub fn trial_state(profile: &GnProfile, grid: &Grid, center: &[f64], ell: f64, radius: f64) -> Result<Field> {
    let d = grid.dim();
    if profile.q0.grid().dim() != d {
        return Err(Error::GridMismatch);
    }
    if radius >= grid.half_width() {
        return Err(Error::CutoffTooWide { radius, limit: grid.half_width() });
    }
    let offset: Vec<f64> = center.iter().take(d).map(|c| -ell * c).collect();
    let q = profile.q0.resample(grid, &offset, ell)?;
    let w = Field::from_fn(grid, |x| {
        let r: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        cutoff(r, radius)
    });
    q.mul(&w)?.real_part().normalize_l2()
}

/// Energy of the cutoff-rescaled profile centred at the first flattest
/// well. By the variational principle this bounds the ground state energy
/// from above.
pub fn trial_upper_bound(profile: &GnProfile, spec: &PotentialSpec, grid: &Grid, ell: f64, radius: f64) -> Result<f64> {
    if radius >= 0.5 * grid.half_width() {
        return Err(Error::CutoffTooWide { radius, limit: 0.5 * grid.half_width() });
    }
    let center = if spec.wells.is_empty() {
        vec![0.0; grid.dim()]
    } else {
        spec.flattest_set()?.centers[0].clone()
    };
    let k = spec.eval_k(grid)?;
    energy(&trial_state(profile, grid, &center, ell, radius)?, &k)
}

/// Cutoff profile `phi` with `int |grad phi|^2 < (a* + eps) int |phi|^{2+4/d}`,
/// cut off at radius `L/2` of the profile's grid.
pub fn instability_trial(profile: &GnProfile, eps: f64) -> Result<Field> {
    let radius = 0.5 * profile.q0.grid().half_width();
    instability_trial_with_radius(profile, eps, radius)
}

pub fn instability_trial_with_radius(profile: &GnProfile, eps: f64, radius: f64) -> Result<Field> {
    let grid = profile.q0.grid();
    let phi = trial_state(profile, grid, &[0.0; 3], 1.0, radius)?;
    let q = crate::critical_exponent(grid.dim());
    let gap = phi.grad_norm_sq() - (profile.a_star_discrete + eps) * phi.lp_power_integral(q);
    if !(gap < 0.0) {
        return Err(Error::GapNotNegative { gap });
    }
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(1, 16.0, 512).unwrap()
    }

    #[test]
    fn energy_is_linear_in_constant_k() {
        let g = grid();
        let u = Field::from_fn(&g, |x| (-x[0] * x[0]).exp()).normalize_l2().unwrap();
        let e = energy(&u, &Field::constant(&g, -1.5)).unwrap();
        let expected = u.grad_norm_sq() - 1.5 * u.lp_power_integral(6.0);
        assert!((e - expected).abs() < 1e-13);
    }

    #[test]
    fn cutoff_shape() {
        assert_eq!(cutoff(0.0, 2.0), 1.0);
        assert_eq!(cutoff(1.0, 2.0), 1.0);
        assert_eq!(cutoff(2.0, 2.0), 0.0);
        assert!((cutoff(1.5, 2.0) - 0.5).abs() < 1e-15);
        // C1 and C2 at both joints
        let eps = 1e-6;
        for x in [1.0, 2.0] {
            let left = (cutoff(x, 2.0) - cutoff(x - eps, 2.0)) / eps;
            let right = (cutoff(x + eps, 2.0) - cutoff(x, 2.0)) / eps;
            assert!(left.abs() < 1e-5 && right.abs() < 1e-5);
        }
    }

    #[test]
    fn subcritical_flow_decreases_energy_and_keeps_mass() {
        let g = grid();
        let spec = PotentialSpec::single_well(1, 4.0, 1.0, 2.0);
        let cfg = SolverConfig { max_iters: 500, ..SolverConfig::default() };
        let res = solve(&spec, &g, &cfg).unwrap();
        assert!(trace_is_monotone(&res.trace));
        for t in &res.trace {
            assert!((t.norm - 1.0).abs() < 1e-12);
        }
        assert!(res.u.min_re() >= -1e-13);
    }

    #[test]
    fn converged_state_satisfies_euler_lagrange() {
        let g = grid();
        let spec = PotentialSpec::single_well(1, 4.0, 1.0, 2.0);
        let k = spec.eval_k(&g).unwrap();
        let res = solve(&spec, &g, &SolverConfig::default()).unwrap();
        assert_eq!(res.status, Status::Converged);
        assert!(res.energy > 0.0);
        assert!((res.u.l2_norm() - 1.0).abs() < 1e-12);
        assert!(((res.kinetic + res.nonlinear) - res.energy).abs() <= 1e-12 * res.energy.abs());
        let mu = multiplier(&res.u, &k).unwrap();
        assert!((mu - res.mu).abs() <= 1e-8 * mu.abs());
        assert!(euler_lagrange_residual(&res.u, &k, res.mu).unwrap() <= 1e-7);
        // a further step is a fixed point up to rounding
        let (_, info) = flow_step(&res.u, &k, &SolverConfig::default()).unwrap();
        assert!((info.energy_before - info.energy_after).abs() <= 1e-14 * 10.0);
    }

    #[test]
    fn comparison_principle() {
        let g = grid();
        let cfg = SolverConfig::default();
        let e1 = solve(&PotentialSpec::single_well(1, 4.0, 1.0, 2.2), &g, &cfg).unwrap();
        let e2 = solve(&PotentialSpec::single_well(1, 4.0, 1.0, 1.8), &g, &cfg).unwrap();
        let e3 = solve(&PotentialSpec::single_well(1, 4.0, 2.0, 1.8), &g, &cfg).unwrap();
        assert!(e1.energy <= e2.energy + 1e-8);
        assert!(e2.energy <= e3.energy + 1e-8);
    }

    #[test]
    fn flat_coupling_never_converges() {
        let g = Grid::new(1, 16.0, 256).unwrap();
        let cfg = SolverConfig { max_iters: 3000, ..SolverConfig::default() };
        let res = solve(&PotentialSpec::flat(0.0), &g, &cfg).unwrap();
        assert_eq!(res.status, Status::IterCap);
        assert!(res.energy <= 1e-3 && res.energy >= 0.0);
    }

    #[test]
    fn state_too_wide_for_box_stops_early() {
        let g = Grid::new(1, 16.0, 512).unwrap();
        let a = std::f64::consts::PI.powi(2) / 4.0 - 0.5;
        let cfg = SolverConfig { max_iters: 100_000, ..SolverConfig::default() };
        let res = solve(&PotentialSpec::single_well(1, 2.0, 1.0, a), &g, &cfg).unwrap();
        assert_eq!(res.status, Status::IterCap);
        assert!(res.iters < 5_000);
        assert!(res.residual <= cfg.tol_residual);
        assert!(edge_mass(&res.u) > EDGE_MASS_TOLERANCE);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = SolverConfig { tau: 0.0, ..SolverConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = SolverConfig { max_iters: 0, ..SolverConfig::default() };
        assert!(cfg.validate().is_err());
    }
}
