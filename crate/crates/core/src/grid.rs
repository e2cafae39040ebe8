//! Periodic box discretization of R^d and the fields living on it.
//!
//! The box is `[-L, L)^d` sampled at `n` points per axis, `x_j = -L + j h`
//! with `h = 2L / n`. Samples are stored in lexicographic order with the last
//! axis fastest. Derivatives are spectral: the wavenumbers are `k_m = pi m / L`
//! for `m` in the symmetric range `[-n/2, n/2)`. Off-grid evaluation
//! (translation, dilation, regridding) uses the real-symmetric trigonometric
//! interpolant, in which the Nyquist mode is a cosine.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Relative L2 mass change tolerated by [`Field::rescale`] and friends.
pub const TRUNCATION_TOLERANCE: f64 = 1e-8;

#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    dim: usize,
    half_width: f64,
    points: usize,
    spacing: f64,
    wavenumbers: Vec<f64>,
    k_squared: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.inner.dim)
            .field("half_width", &self.inner.half_width)
            .field("points", &self.inner.points)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dim == other.inner.dim
                && self.inner.points == other.inner.points
                && self.inner.half_width == other.inner.half_width)
    }
}

impl Grid {
    pub fn new(dim: usize, half_width: f64, points: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half width {half_width} must be positive")));
        }
        if points < 8 || !points.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("{points} points per axis; need an even n >= 8")));
        }
        let spacing = 2.0 * half_width / points as f64;
        let wavenumbers: Vec<f64> = (0..points)
            .map(|m| {
                let signed = if m < points / 2 { m as i64 } else { m as i64 - points as i64 };
                PI * signed as f64 / half_width
            })
            .collect();
        let total = points.pow(dim as u32);
        let mut k_squared = vec![0.0; total];
        for (flat, k2) in k_squared.iter_mut().enumerate() {
            let mut rest = flat;
            for _ in 0..dim {
                let k = wavenumbers[rest % points];
                *k2 += k * k;
                rest /= points;
            }
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(points);
        let inverse = planner.plan_fft_inverse(points);
        Ok(Grid {
            inner: Arc::new(GridInner {
                dim,
                half_width,
                points,
                spacing,
                wavenumbers,
                k_squared,
                forward,
                inverse,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn half_width(&self) -> f64 {
        self.inner.half_width
    }

    pub fn points(&self) -> usize {
        self.inner.points
    }

    pub fn spacing(&self) -> f64 {
        self.inner.spacing
    }

    /// Total number of samples, `n^d`.
    pub fn len(&self) -> usize {
        self.inner.k_squared.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of one sample, `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.inner.spacing.powi(self.inner.dim as i32)
    }

    /// Per-axis wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.wavenumbers
    }

    /// `|k|^2` for every spectral index, FFT order.
    pub fn k_squared(&self) -> &[f64] {
        &self.inner.k_squared
    }

    pub fn axis_coordinate(&self, j: usize) -> f64 {
        -self.inner.half_width + j as f64 * self.inner.spacing
    }

    /// Coordinates of the sample with the given flat index.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let mut x = [0.0; 3];
        let n = self.inner.points;
        let mut rest = flat;
        for axis in (0..self.inner.dim).rev() {
            x[axis] = self.axis_coordinate(rest % n);
            rest /= n;
        }
        x
    }

    /// Flat index of the sample nearest to `x` (periodically wrapped).
    pub fn nearest_index(&self, x: &[f64]) -> usize {
        let n = self.inner.points as i64;
        let mut flat = 0usize;
        for &c in &x[..self.inner.dim] {
            let s = ((c + self.inner.half_width) / self.inner.spacing).round() as i64;
            flat = flat * n as usize + s.rem_euclid(n) as usize;
        }
        flat
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .take(self.inner.dim)
            .all(|&c| c >= -self.inner.half_width && c < self.inner.half_width)
    }

    /// Same box, `points` samples per axis.
    pub fn with_points(&self, points: usize) -> Result<Grid> {
        Grid::new(self.inner.dim, self.inner.half_width, points)
    }

    /// In-place d-dimensional FFT. The inverse includes the `1/n^d` factor.
    pub(crate) fn fft(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.inner.points;
        let plan = if inverse { &self.inner.inverse } else { &self.inner.forward };
        let total = data.len();
        if self.inner.dim == 1 {
            plan.process(data);
        } else {
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
            for axis in 0..self.inner.dim {
                let stride = n.pow((self.inner.dim - 1 - axis) as u32);
                let block = stride * n;
                for outer in (0..total).step_by(block) {
                    for inner in 0..stride {
                        let base = outer + inner;
                        for (j, v) in line.iter_mut().enumerate() {
                            *v = data[base + j * stride];
                        }
                        plan.process_with_scratch(&mut line, &mut scratch);
                        for (j, v) in line.iter().enumerate() {
                            data[base + j * stride] = *v;
                        }
                    }
                }
            }
        }
        if inverse {
            let scale = 1.0 / total as f64;
            for v in data.iter_mut() {
                *v *= scale;
            }
        }
    }

    /// Rows of the trigonometric interpolation matrix that evaluate a field on
    /// this grid's axis at the points `targets`. Targets outside `[-L, L)`
    /// get a zero row: fields are treated as vanishing outside the box.
    fn interpolation_rows(&self, targets: &[f64]) -> Vec<f64> {
        let n = self.inner.points;
        let nf = n as f64;
        let l = self.inner.half_width;
        let mut rows = vec![0.0; targets.len() * n];
        for (row, &y) in rows.chunks_mut(n).zip(targets) {
            if !(y >= -l && y < l) {
                continue;
            }
            let s = (y + l) / self.inner.spacing;
            let nearest = s.round();
            if (s - nearest).abs() < 1e-12 {
                row[(nearest as usize) % n] = 1.0;
                continue;
            }
            let sin_s = (PI * s).sin();
            for (j, w) in row.iter_mut().enumerate() {
                let t = s - j as f64;
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                *w = sign * sin_s / ((PI * t / nf).tan() * nf);
            }
        }
        rows
    }
}

/// Samples of a (generally complex) function on a [`Grid`].
#[derive(Clone, Debug)]
pub struct Field {
    grid: Grid,
    values: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: &Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Field { grid: grid.clone(), values })
    }

    pub fn from_real(grid: &Grid, values: &[f64]) -> Result<Self> {
        Field::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn zeros(grid: &Grid) -> Self {
        Field { grid: grid.clone(), values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Field { grid: grid.clone(), values: vec![Complex64::new(value, 0.0); grid.len()] }
    }

    /// Samples a real function of position.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let d = grid.dim();
        let values = (0..grid.len())
            .map(|i| Complex64::new(f(&grid.point(i)[..d]), 0.0))
            .collect();
        Field { grid: grid.clone(), values }
    }

    pub fn from_fn_complex(grid: &Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let d = grid.dim();
        let values = (0..grid.len()).map(|i| f(&grid.point(i)[..d])).collect();
        Field { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    /// Drops imaginary parts.
    pub fn real_part(&self) -> Field {
        self.map(|v| Complex64::new(v.re, 0.0))
    }

    /// Pointwise modulus.
    pub fn modulus(&self) -> Field {
        self.map(|v| Complex64::new(v.norm(), 0.0))
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Field {
        Field { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scaled(&self, factor: f64) -> Field {
        self.map(|v| v * factor)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Field { grid: self.grid.clone(), values })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn min_re(&self) -> f64 {
        self.values.iter().map(|v| v.re).fold(f64::INFINITY, f64::min)
    }

    /// Flat index of the sample of largest modulus.
    pub fn argmax_abs(&self) -> usize {
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for (i, v) in self.values.iter().enumerate() {
            let a = v.norm_sqr();
            if a > best_val {
                best_val = a;
                best = i;
            }
        }
        best
    }

    /// Location of the maximum of `|u|`, refined below the grid spacing by a
    /// parabola through the largest sample and its neighbours on each axis.
    pub fn peak_location(&self) -> Vec<f64> {
        let d = self.grid.dim();
        let n = self.grid.points();
        let h = self.grid.spacing();
        let best = self.argmax_abs();
        let x = self.grid.point(best);
        (0..d)
            .map(|axis| {
                let stride = n.pow((d - 1 - axis) as u32);
                let j = (best / stride) % n;
                let at = |jj: usize| self.values[best - j * stride + (jj % n) * stride].norm();
                let (fm, f0, fp) = (at(j + n - 1), at(j), at(j + 1));
                let curvature = fm - 2.0 * f0 + fp;
                let shift = if curvature < 0.0 { 0.5 * (fm - fp) / curvature } else { 0.0 };
                x[axis] + shift.clamp(-0.5, 0.5) * h
            })
            .collect()
    }

    /// Uniform (trapezoid) quadrature, `h^d * sum`.
    pub fn integrate(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.grid.cell_volume()
    }

    /// `int |u|^2`.
    pub fn mass(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.mass().sqrt()
    }

    /// `int |u|^q`.
    pub fn lp_power_integral(&self, q: f64) -> f64 {
        let h = self.grid.cell_volume();
        if q == 2.0 {
            return self.mass();
        }
        let half = 0.5 * q;
        self.values.iter().map(|v| v.norm_sqr().powf(half)).sum::<f64>() * h
    }

    /// L2 inner product `int conj(u) v`.
    pub fn inner(&self, other: &Field) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let s: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum();
        Ok(s * self.grid.cell_volume())
    }

    /// Unnormalized forward DFT of the samples.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut data = self.values.clone();
        self.grid.fft(&mut data, false);
        data
    }

    pub fn from_spectrum(grid: &Grid, mut spectrum: Vec<Complex64>) -> Field {
        grid.fft(&mut spectrum, true);
        Field { grid: grid.clone(), values: spectrum }
    }

    /// `int |grad u|^2`, evaluated through Parseval in spectral space.
    pub fn grad_norm_sq(&self) -> f64 {
        grad_norm_sq_from_spectrum(&self.grid, &self.spectrum())
    }

    /// Spectral partial derivatives, one field per axis.
    pub fn gradient(&self) -> Vec<Field> {
        let spec = self.spectrum();
        let n = self.grid.points();
        let d = self.grid.dim();
        let ks = self.grid.wavenumbers();
        (0..d)
            .map(|axis| {
                let stride = n.pow((d - 1 - axis) as u32);
                let data: Vec<Complex64> = spec
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| c * Complex64::new(0.0, ks[(i / stride) % n]))
                    .collect();
                Field::from_spectrum(&self.grid, data)
            })
            .collect()
    }

    /// `-Delta u`.
    pub fn neg_laplacian(&self) -> Field {
        let mut spec = self.spectrum();
        for (c, &k2) in spec.iter_mut().zip(self.grid.k_squared()) {
            *c *= k2;
        }
        Field::from_spectrum(&self.grid, spec)
    }

    /// `u / ||u||_2`.
    pub fn normalize_l2(&self) -> Result<Field> {
        let norm = self.l2_norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroField);
        }
        Ok(self.scaled(1.0 / norm))
    }

    /// `v(x) = u(x - z)`, an exact periodic shift of the trigonometric
    /// interpolant (phase ramp in spectral space).
    pub fn translate(&self, shift: &[f64]) -> Field {
        let d = self.grid.dim();
        if shift.iter().take(d).all(|&z| z == 0.0) {
            return self.clone();
        }
        let n = self.grid.points();
        let ks = self.grid.wavenumbers();
        let factors: Vec<Vec<Complex64>> = (0..d)
            .map(|axis| {
                let z = shift[axis];
                (0..n)
                    .map(|m| {
                        let phase = ks[m] * z;
                        if m == n / 2 {
                            Complex64::new(phase.cos(), 0.0)
                        } else {
                            Complex64::new(phase.cos(), -phase.sin())
                        }
                    })
                    .collect()
            })
            .collect();
        let mut spec = self.spectrum();
        for (i, c) in spec.iter_mut().enumerate() {
            let mut rest = i;
            for axis in (0..d).rev() {
                *c *= factors[axis][rest % n];
                rest /= n;
            }
        }
        Field::from_spectrum(&self.grid, spec)
    }

    /// Evaluates `x -> u(offset + stretch * x)` at the nodes of `target`,
    /// using trigonometric interpolation along each axis. Points mapped
    /// outside this field's box evaluate to zero.
    pub fn resample(&self, target: &Grid, offset: &[f64], stretch: f64) -> Result<Field> {
        let d = self.grid.dim();
        if target.dim() != d {
            return Err(Error::GridMismatch);
        }
        let n_src = self.grid.points();
        let n_dst = target.points();
        let mut shape = vec![n_src; d];
        let mut data = self.values.clone();
        for axis in 0..d {
            let targets: Vec<f64> =
                (0..n_dst).map(|i| offset[axis] + stretch * target.axis_coordinate(i)).collect();
            let rows = self.grid.interpolation_rows(&targets);
            let outer: usize = shape[..axis].iter().product();
            let inner: usize = shape[axis + 1..].iter().product();
            let mut out = vec![Complex64::new(0.0, 0.0); outer * n_dst * inner];
            for o in 0..outer {
                for (i, row) in rows.chunks(n_src).enumerate() {
                    let dst = &mut out[(o * n_dst + i) * inner..(o * n_dst + i + 1) * inner];
                    for (j, &w) in row.iter().enumerate() {
                        if w == 0.0 {
                            continue;
                        }
                        let src = &data[(o * n_src + j) * inner..(o * n_src + j + 1) * inner];
                        for (a, b) in dst.iter_mut().zip(src) {
                            *a += b * w;
                        }
                    }
                }
            }
            data = out;
            shape[axis] = n_dst;
        }
        Ok(Field { grid: target.clone(), values: data })
    }

    /// Mass-preserving dilation `v(x) = l^{d/2} u(l x)` on the same grid.
    pub fn rescale(&self, factor: f64) -> Result<Field> {
        let origin = [0.0; 3];
        self.dilate_about(&self.grid.clone(), &origin, factor)
    }

    /// `v(x) = s^{d/2} u(c + s x)` sampled on `target`, with the mass check
    /// shared by every dilation in the crate.
    pub fn dilate_about(&self, target: &Grid, offset: &[f64], stretch: f64) -> Result<Field> {
        if !(stretch.is_finite() && stretch > 0.0) {
            return Err(Error::InvalidGrid(format!("dilation factor {stretch} must be positive")));
        }
        let d = self.grid.dim();
        let before = self.mass();
        let moved = if stretch == 1.0 && offset.iter().take(d).all(|&c| c == 0.0) && *target == self.grid {
            self.clone()
        } else {
            self.resample(target, offset, stretch)?.scaled(stretch.powf(0.5 * d as f64))
        };
        if before > 0.0 {
            let relative = (moved.mass() - before).abs() / before;
            if relative > TRUNCATION_TOLERANCE {
                return Err(Error::Truncation { relative });
            }
        }
        Ok(moved)
    }
}

/// `int |grad u|^2` from an unnormalized forward DFT of the samples.
pub(crate) fn grad_norm_sq_from_spectrum(grid: &Grid, spectrum: &[Complex64]) -> f64 {
    let s: f64 = spectrum.iter().zip(grid.k_squared()).map(|(c, &k2)| k2 * c.norm_sqr()).sum();
    s * grid.cell_volume() / grid.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: &Grid) -> Field {
        Field::from_fn(grid, |x| (-x.iter().map(|c| c * c).sum::<f64>()).exp())
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(0, 1.0, 16).is_err());
        assert!(Grid::new(4, 1.0, 16).is_err());
        assert!(Grid::new(1, -1.0, 16).is_err());
        assert!(Grid::new(1, 1.0, 6).is_err());
        assert!(Grid::new(1, 1.0, 17).is_err());
    }

    #[test]
    fn constant_integrates_to_box_volume() {
        let g = Grid::new(1, 8.0, 256).unwrap();
        assert_eq!(Field::constant(&g, 1.0).integrate().re, 16.0);
        let g2 = Grid::new(2, 3.0, 16).unwrap();
        assert!((Field::constant(&g2, 1.0).integrate().re - 36.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_and_odd_integrals() {
        let g = Grid::new(1, 16.0, 512).unwrap();
        let i = gaussian(&g).integrate().re;
        assert!((i - PI.sqrt()).abs() < 1e-12, "{i}");
        let odd = Field::from_fn(&g, |x| x[0] * (-x[0] * x[0]).exp()).integrate().re;
        assert!(odd.abs() < 1e-14, "{odd}");
    }

    #[test]
    fn gradient_of_constant_and_sine() {
        let g = Grid::new(1, 4.0, 64).unwrap();
        assert!(Field::constant(&g, 3.0).grad_norm_sq() < 1e-20);
        let l = g.half_width();
        let s = Field::from_fn(&g, |x| (PI * x[0] / l).sin());
        let expected = (PI / l).powi(2) * l;
        assert!((s.grad_norm_sq() - expected).abs() < 1e-10);
    }

    #[test]
    fn parseval_matches_physical_gradient() {
        let g = Grid::new(2, 6.0, 32).unwrap();
        let u = Field::from_fn(&g, |x| (-(x[0] - 0.3).powi(2) - 2.0 * x[1] * x[1]).exp() * (1.0 + 0.2 * x[0]));
        let spectral = u.grad_norm_sq();
        let physical: f64 = u.gradient().iter().map(|f| f.mass()).sum();
        assert!((spectral - physical).abs() <= 1e-10 * spectral);
    }

    #[test]
    fn zero_field_does_not_normalize() {
        let g = Grid::new(1, 4.0, 16).unwrap();
        assert_eq!(Field::zeros(&g).normalize_l2().unwrap_err(), Error::ZeroField);
        assert_eq!(Field::zeros(&g).lp_power_integral(6.0), 0.0);
    }

    #[test]
    fn translate_round_trip() {
        let g = Grid::new(1, 16.0, 512).unwrap();
        let u = gaussian(&g);
        assert_eq!(u.translate(&[0.0]).values(), u.values());
        let back = u.translate(&[1.0]).translate(&[-1.0]);
        let err = back.sub(&u).unwrap().max_abs();
        assert!(err < 1e-10, "{err}");
        // a shift by one grid spacing is exact
        let shifted = u.translate(&[g.spacing()]);
        for j in 1..g.points() {
            assert!((shifted.values()[j] - u.values()[j - 1]).norm() < 1e-13);
        }
    }

    #[test]
    fn rescale_identity_and_kinetic_scaling() {
        let g = Grid::new(1, 16.0, 1024).unwrap();
        let u = gaussian(&g);
        let same = u.rescale(1.0).unwrap();
        assert_eq!(same.values(), u.values());
        let v = u.rescale(2.0).unwrap();
        let ratio = v.grad_norm_sq() / u.grad_norm_sq();
        assert!((ratio - 4.0).abs() < 1e-8, "{ratio}");
    }

    #[test]
    fn rescale_reports_truncation() {
        let g = Grid::new(1, 4.0, 64).unwrap();
        let wide = Field::from_fn(&g, |x| (-(x[0] * x[0]) / 4.0).exp());
        assert!(matches!(wide.rescale(0.25), Err(Error::Truncation { .. })));
    }

    #[test]
    fn resample_onto_finer_grid_is_exact_for_band_limited() {
        let g = Grid::new(1, 16.0, 256).unwrap();
        let u = gaussian(&g);
        let fine = g.with_points(512).unwrap();
        let v = u.resample(&fine, &[0.0], 1.0).unwrap();
        let exact = gaussian(&fine);
        assert!(v.sub(&exact).unwrap().max_abs() < 1e-12);
    }
}
