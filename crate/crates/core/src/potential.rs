//! The inhomogeneous coupling `k = K - a` and the regimes it falls into.
//!
//! `K` is assembled from declared wells: `K(x) = min_j lambda_j |x - x_j|^{p_j}`
//! plus an optional envelope `c |x|^s`. Declaring the local shape, rather than
//! inferring it from samples, lets the flattest set `Z` and the growth at
//! infinity be read off exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// Band around `inf k = -a*` that is classified as critical.
pub const CRITICAL_BAND: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Well {
    pub center: Vec<f64>,
    pub p: f64,
    pub lambda: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub c: f64,
    pub s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    #[serde(default)]
    pub wells: Vec<Well>,
    #[serde(default)]
    pub envelope: Option<Envelope>,
    /// The shift `a` in `k = K - a`.
    #[serde(default)]
    pub offset: f64,
    /// Growth exponent of `K` at infinity. Derived from the wells and the
    /// envelope when absent.
    #[serde(default)]
    pub tail_exponent: Option<f64>,
}

/// Output of [`PotentialSpec::flattest_set`].
#[derive(Clone, Debug, PartialEq)]
pub struct FlattestSet {
    pub p: f64,
    pub lambda: f64,
    pub centers: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthCheck {
    pub holds: bool,
    /// `int_box (k + a*)^{-d/2}`.
    pub integral_value: f64,
    pub tail_exponent: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RegimeKind {
    SubcriticalExists,
    SubcriticalNoMin,
    Critical,
    Supercritical,
}

impl RegimeKind {
    /// Position along increasing `a`: both subcritical cases share rank 0.
    pub fn rank(self) -> u8 {
        match self {
            RegimeKind::SubcriticalExists | RegimeKind::SubcriticalNoMin => 0,
            RegimeKind::Critical => 1,
            RegimeKind::Supercritical => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RegimeKind::SubcriticalExists => "SubcriticalExists",
            RegimeKind::SubcriticalNoMin => "SubcriticalNoMin",
            RegimeKind::Critical => "Critical",
            RegimeKind::Supercritical => "Supercritical",
        }
    }
}

/// Local behaviour of `k` at the point where `inf k = -a*` is attained.
#[derive(Clone, Debug, PartialEq)]
pub enum Degeneracy {
    /// `k` is constant: the only critical case with a minimizer.
    Constant,
    /// `(k - inf k) / |x - x0|^2 -> 0`: flat well, `E_k = 0` without minimizer.
    Degenerate { p: f64 },
    /// quadratic well: the unresolved case, no claim is made
    Open,
    /// `p < 2`: `(k + a*)^{-d/2}` is locally integrable, `E_k > 0`
    NonDegenerate { p: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    pub inf_k: f64,
    pub a_star: f64,
    /// `inf k + a*`
    pub margin: f64,
    pub growth: Option<GrowthCheck>,
    pub degeneracy: Option<Degeneracy>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Regime {
    pub kind: RegimeKind,
    pub diagnostics: Diagnostics,
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn radius(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

impl PotentialSpec {
    pub fn single_well(dim: usize, p: f64, lambda: f64, offset: f64) -> Self {
        PotentialSpec {
            wells: vec![Well { center: vec![0.0; dim], p, lambda }],
            envelope: None,
            offset,
            tail_exponent: None,
        }
    }

    /// `k == -offset`.
    pub fn flat(offset: f64) -> Self {
        PotentialSpec { wells: Vec::new(), envelope: None, offset, tail_exponent: None }
    }

    pub fn with_offset(&self, offset: f64) -> Self {
        PotentialSpec { offset, ..self.clone() }
    }

    /// Checks the structural assumptions on `K` for a `dim`-dimensional problem.
    pub fn validate(&self, dim: usize) -> Result<()> {
        for (i, w) in self.wells.iter().enumerate() {
            if w.center.len() != dim {
                return Err(Error::InvalidPotential(format!(
                    "well {i} has a {}-dimensional center in dimension {dim}",
                    w.center.len()
                )));
            }
            if !(w.p > 0.0 && w.lambda > 0.0 && w.p.is_finite() && w.lambda.is_finite()) {
                return Err(Error::InvalidPotential(format!("well {i} needs p > 0 and lambda > 0")));
            }
            if !w.center.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidPotential(format!("well {i} has a non-finite center")));
            }
        }
        if let Some(env) = self.envelope {
            if !(env.c >= 0.0 && env.s >= 0.0) {
                return Err(Error::InvalidPotential("envelope needs c >= 0 and s >= 0".into()));
            }
            // inf K = 0 must be attained at every declared minimum
            for (i, w) in self.wells.iter().enumerate() {
                if self.envelope_value(&w.center) > 1e-12 {
                    return Err(Error::InvalidPotential(format!(
                        "envelope does not vanish at well {i}, so K(x_{i}) != 0"
                    )));
                }
            }
            if self.wells.is_empty() && env.s == 0.0 && env.c > 0.0 {
                return Err(Error::InvalidPotential("a constant envelope makes inf K > 0".into()));
            }
        }
        if !self.offset.is_finite() {
            return Err(Error::InvalidPotential("offset must be finite".into()));
        }
        Ok(())
    }

    fn envelope_value(&self, x: &[f64]) -> f64 {
        match self.envelope {
            Some(env) if env.c > 0.0 => env.c * radius(x).powf(env.s),
            _ => 0.0,
        }
    }

    /// `K(x)`.
    pub fn base_value(&self, x: &[f64]) -> f64 {
        let wells = self
            .wells
            .iter()
            .map(|w| w.lambda * dist(x, &w.center).powf(w.p))
            .fold(f64::INFINITY, f64::min);
        let wells = if wells.is_finite() { wells } else { 0.0 };
        wells + self.envelope_value(x)
    }

    /// `k(x) = K(x) - a`.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.base_value(x) - self.offset
    }

    /// Samples `k` on the grid. Wells must sit at least `L/4` inside the box.
    pub fn eval_k(&self, grid: &Grid) -> Result<Field> {
        self.validate(grid.dim())?;
        let limit = 0.75 * grid.half_width();
        for (index, w) in self.wells.iter().enumerate() {
            if w.center.iter().any(|c| c.abs() > limit) {
                return Err(Error::WellOutsideBox { index, center: w.center.clone() });
            }
        }
        Ok(Field::from_fn(grid, |x| self.value(x)))
    }

    /// Growth exponent of `K` at infinity, declared or derived.
    pub fn tail_exponent(&self) -> f64 {
        if let Some(s) = self.tail_exponent {
            return s;
        }
        let wells = self.wells.iter().map(|w| w.p).fold(f64::INFINITY, f64::min);
        let env = match self.envelope {
            Some(e) if e.c > 0.0 => e.s,
            _ => 0.0,
        };
        if wells.is_finite() {
            wells.max(env)
        } else {
            env
        }
    }

    /// `p = max p_j`, `lambda = min {lambda_j : p_j = p}` and the wells
    /// attaining both.
    pub fn flattest_set(&self) -> Result<FlattestSet> {
        if self.wells.is_empty() {
            return Err(Error::InvalidPotential("flattest set needs at least one well".into()));
        }
        let p = self.wells.iter().map(|w| w.p).fold(f64::NEG_INFINITY, f64::max);
        let lambda = self
            .wells
            .iter()
            .filter(|w| w.p == p)
            .map(|w| w.lambda)
            .fold(f64::INFINITY, f64::min);
        let centers = self
            .wells
            .iter()
            .filter(|w| w.p == p && w.lambda == lambda)
            .map(|w| w.center.clone())
            .collect();
        Ok(FlattestSet { p, lambda, centers })
    }

    /// Largest relative deviation of `K(x) / |x - x_j|^{p_j}` from `lambda_j`
    /// on the grid points at distance `4h` from each well (along each axis).
    pub fn local_shape_error(&self, grid: &Grid) -> f64 {
        let r = 4.0 * grid.spacing();
        let mut worst: f64 = 0.0;
        for w in &self.wells {
            for axis in 0..w.center.len() {
                for sign in [-1.0, 1.0] {
                    let mut x = w.center.clone();
                    x[axis] += sign * r;
                    let ratio = self.base_value(&x) / r.powf(w.p);
                    worst = worst.max((ratio / w.lambda - 1.0).abs());
                }
            }
        }
        worst
    }

    /// Integrability of `(k + a*)^{-d/2}`. The box part is a quadrature; the
    /// verdict on the tail comes from the growth exponent, which must exceed 2.
    pub fn check_growth_fast(&self, grid: &Grid, a_star: f64) -> Result<GrowthCheck> {
        let k = self.eval_k(grid)?;
        let inf_k = self.inf_k(&k);
        let margin = inf_k + a_star;
        if margin <= 0.0 {
            return Err(Error::NotSubcritical { margin });
        }
        let half_d = 0.5 * grid.dim() as f64;
        let integral_value = k.values().iter().map(|v| (v.re + a_star).powf(-half_d)).sum::<f64>()
            * grid.cell_volume();
        let tail_exponent = self.tail_exponent();
        Ok(GrowthCheck { holds: tail_exponent > 2.0, integral_value, tail_exponent })
    }

    fn inf_k(&self, k: &Field) -> f64 {
        // K(x_j) = 0 exactly at each declared well, so inf k is attained there
        let at_wells = if self.wells.is_empty() { f64::INFINITY } else { -self.offset };
        k.min_re().min(at_wells)
    }

    /// Sorts the potential into the four regimes of the existence theory.
    /// With `strict`, an `inf k` inside the critical band is an error rather
    /// than a `Critical` verdict.
    pub fn classify(&self, grid: &Grid, a_star: f64, strict: bool) -> Result<Regime> {
        let k = self.eval_k(grid)?;
        let inf_k = self.inf_k(&k);
        let margin = inf_k + a_star;
        let mut diagnostics =
            Diagnostics { inf_k, a_star, margin, growth: None, degeneracy: None, notes: Vec::new() };
        let kind = if margin.abs() <= CRITICAL_BAND {
            if strict {
                return Err(Error::AmbiguousThreshold { margin });
            }
            let degeneracy = self.degeneracy();
            diagnostics.notes.push(match &degeneracy {
                Degeneracy::Constant => "k is constant: Q0 and its dilates are minimizers".to_string(),
                Degeneracy::Degenerate { p } => {
                    format!("flat minimum (p = {p} > 2): E_k = 0 and no minimizer")
                }
                Degeneracy::Open => "quadratic minimum (p = 2): unresolved case, no claim".to_string(),
                Degeneracy::NonDegenerate { p } => {
                    format!("sharp minimum (p = {p} < 2): (k + a*)^(-d/2) locally integrable")
                }
            });
            diagnostics.degeneracy = Some(degeneracy);
            RegimeKind::Critical
        } else if margin < 0.0 {
            diagnostics.notes.push("inf k < -a*: E_k = -infinity".into());
            RegimeKind::Supercritical
        } else {
            let growth = self.check_growth_fast(grid, a_star)?;
            let kind = if growth.holds {
                diagnostics.notes.push(format!(
                    "K grows like |x|^{} > |x|^2: (k + a*)^(-d/2) integrable",
                    growth.tail_exponent
                ));
                RegimeKind::SubcriticalExists
            } else {
                diagnostics.notes.push(format!(
                    "K grows at most like |x|^{} <= |x|^2: E_k = 0 without minimizer",
                    growth.tail_exponent
                ));
                RegimeKind::SubcriticalNoMin
            };
            diagnostics.growth = Some(growth);
            kind
        };
        Ok(Regime { kind, diagnostics })
    }

    fn degeneracy(&self) -> Degeneracy {
        let env_flat = match self.envelope {
            Some(e) => e.c == 0.0,
            None => true,
        };
        if self.wells.is_empty() {
            return match self.envelope {
                Some(e) if !env_flat => exponent_class(e.s),
                _ => Degeneracy::Constant,
            };
        }
        // every well attains inf k; the sharpest one decides integrability
        let p = self.wells.iter().map(|w| w.p).fold(f64::INFINITY, f64::min);
        exponent_class(p)
    }
}

fn exponent_class(p: f64) -> Degeneracy {
    if p > 2.0 {
        Degeneracy::Degenerate { p }
    } else if p == 2.0 {
        Degeneracy::Open
    } else {
        Degeneracy::NonDegenerate { p }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A_STAR_1D: f64 = std::f64::consts::PI * std::f64::consts::PI / 4.0;

    fn grid() -> Grid {
        Grid::new(1, 16.0, 256).unwrap()
    }

    fn well(c: f64, p: f64, lambda: f64) -> Well {
        Well { center: vec![c], p, lambda }
    }

    #[test]
    fn single_quartic_well_is_exact() {
        let g = grid();
        let k = PotentialSpec::single_well(1, 4.0, 1.0, 0.0).eval_k(&g).unwrap();
        for (i, v) in k.values().iter().enumerate() {
            let x = g.point(i)[0];
            assert_eq!(v.re, x.abs().powf(4.0));
        }
    }

    #[test]
    fn offset_shifts_minimum() {
        let g = grid();
        let k = PotentialSpec::single_well(1, 4.0, 1.0, A_STAR_1D).eval_k(&g).unwrap();
        assert!((k.min_re() + A_STAR_1D).abs() < 1e-12);
    }

    #[test]
    fn symmetric_double_well() {
        let g = grid();
        let spec = PotentialSpec {
            wells: vec![well(-1.0, 4.0, 1.0), well(1.0, 4.0, 1.0)],
            envelope: None,
            offset: 0.3,
            tail_exponent: None,
        };
        let k = spec.eval_k(&g).unwrap();
        let n = g.points();
        for j in 1..n {
            let mirror = n - j;
            assert!((k.values()[j].re - k.values()[mirror].re).abs() < 1e-14);
        }
    }

    #[test]
    fn offset_is_exact_subtraction() {
        let g = grid();
        let spec = PotentialSpec {
            wells: vec![well(-1.0, 3.0, 1.5), well(2.0, 4.0, 0.7)],
            envelope: None,
            offset: 0.0,
            tail_exponent: None,
        };
        let k0 = spec.eval_k(&g).unwrap();
        let ka = spec.with_offset(1.234).eval_k(&g).unwrap();
        for (a, b) in k0.values().iter().zip(ka.values()) {
            assert_eq!(a.re - 1.234, b.re);
        }
    }

    #[test]
    fn wells_must_stay_inside() {
        let g = grid();
        let spec = PotentialSpec { wells: vec![well(13.0, 4.0, 1.0)], ..PotentialSpec::flat(0.0) };
        assert!(matches!(spec.eval_k(&g), Err(Error::WellOutsideBox { index: 0, .. })));
    }

    #[test]
    fn flattest_set_definitions() {
        let one = PotentialSpec::single_well(1, 4.0, 1.0, 0.0).flattest_set().unwrap();
        assert_eq!((one.p, one.lambda, one.centers), (4.0, 1.0, vec![vec![0.0]]));

        let asym = PotentialSpec { wells: vec![well(-1.0, 4.0, 1.0), well(1.0, 4.0, 2.0)], ..PotentialSpec::flat(0.0) };
        assert_eq!(asym.flattest_set().unwrap().centers, vec![vec![-1.0]]);

        let mixed = PotentialSpec { wells: vec![well(-1.0, 2.5, 1.0), well(1.0, 4.0, 3.0)], ..PotentialSpec::flat(0.0) };
        let z = mixed.flattest_set().unwrap();
        assert_eq!((z.p, z.lambda, z.centers), (4.0, 3.0, vec![vec![1.0]]));

        assert!(PotentialSpec::flat(0.0).flattest_set().is_err());
    }

    #[test]
    fn local_shape_matches_declared_strength() {
        let g = grid();
        let spec = PotentialSpec { wells: vec![well(-1.0, 4.0, 1.0), well(1.0, 3.0, 2.0)], ..PotentialSpec::flat(0.0) };
        assert!(spec.local_shape_error(&g) < 0.05);
    }

    #[test]
    fn growth_condition() {
        let g = grid();
        let quartic = PotentialSpec::single_well(1, 4.0, 1.0, 1.0);
        assert!(quartic.check_growth_fast(&g, A_STAR_1D).unwrap().holds);
        let harmonic = PotentialSpec {
            envelope: Some(Envelope { c: 1.0, s: 2.0 }),
            ..PotentialSpec::flat(0.0)
        };
        assert!(!harmonic.check_growth_fast(&g, A_STAR_1D).unwrap().holds);
        let zero = PotentialSpec::flat(0.0);
        let check = zero.check_growth_fast(&g, A_STAR_1D).unwrap();
        assert!(!check.holds);
        assert!((check.integral_value - 32.0 / A_STAR_1D.sqrt()).abs() < 1e-10);
        assert!(matches!(
            PotentialSpec::flat(3.0).check_growth_fast(&g, A_STAR_1D),
            Err(Error::NotSubcritical { .. })
        ));
    }

    #[test]
    fn canonical_regimes() {
        let g = grid();
        let a = A_STAR_1D;
        let kind = |spec: PotentialSpec| spec.classify(&g, a, false).unwrap().kind;
        assert_eq!(kind(PotentialSpec::single_well(1, 4.0, 1.0, a - 0.1)), RegimeKind::SubcriticalExists);
        assert_eq!(kind(PotentialSpec::flat(0.0)), RegimeKind::SubcriticalNoMin);
        assert_eq!(kind(PotentialSpec::single_well(1, 4.0, 1.0, a + 0.1)), RegimeKind::Supercritical);
        let critical = PotentialSpec::flat(a).classify(&g, a, false).unwrap();
        assert_eq!(critical.kind, RegimeKind::Critical);
        assert_eq!(critical.diagnostics.degeneracy, Some(Degeneracy::Constant));
        let quad = PotentialSpec::single_well(1, 2.0, 1.0, a).classify(&g, a, false).unwrap();
        assert_eq!(quad.diagnostics.degeneracy, Some(Degeneracy::Open));
        assert!(matches!(
            PotentialSpec::flat(a).classify(&g, a, true),
            Err(Error::AmbiguousThreshold { .. })
        ));
    }

    #[test]
    fn envelope_must_vanish_at_wells() {
        let spec = PotentialSpec {
            wells: vec![well(1.0, 4.0, 1.0)],
            envelope: Some(Envelope { c: 1.0, s: 4.0 }),
            ..PotentialSpec::flat(0.0)
        };
        assert!(spec.validate(1).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn wells() -> impl Strategy<Value = Vec<Well>> {
            prop::collection::vec(
                (-5.0f64..5.0, prop::sample::select(vec![2.5, 3.0, 4.0]), prop::sample::select(vec![0.5, 1.0, 2.0]))
                    .prop_map(|(c, p, l)| Well { center: vec![c], p, lambda: l }),
                1..5,
            )
        }

        proptest! {
            #[test]
            fn flattest_set_ignores_order(ws in wells(), seed in 0usize..100) {
                let spec = PotentialSpec { wells: ws.clone(), ..PotentialSpec::flat(0.0) };
                let mut shuffled = ws;
                let len = shuffled.len();
                shuffled.rotate_left(seed % len);
                shuffled.reverse();
                let other = PotentialSpec { wells: shuffled, ..PotentialSpec::flat(0.0) };
                let a = spec.flattest_set().unwrap();
                let b = other.flattest_set().unwrap();
                prop_assert_eq!(a.p, b.p);
                prop_assert_eq!(a.lambda, b.lambda);
                let mut ca = a.centers; ca.sort_by(|x, y| x[0].total_cmp(&y[0]));
                let mut cb = b.centers; cb.sort_by(|x, y| x[0].total_cmp(&y[0]));
                prop_assert_eq!(ca, cb);
            }

            #[test]
            fn regime_is_monotone_in_offset(a1 in 0.0f64..5.0, a2 in 0.0f64..5.0) {
                let g = Grid::new(1, 16.0, 64).unwrap();
                let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
                let r_lo = PotentialSpec::single_well(1, 4.0, 1.0, lo).classify(&g, A_STAR_1D, false).unwrap();
                let r_hi = PotentialSpec::single_well(1, 4.0, 1.0, hi).classify(&g, A_STAR_1D, false).unwrap();
                prop_assert!(r_lo.kind.rank() <= r_hi.kind.rank());
            }
        }
    }
}
