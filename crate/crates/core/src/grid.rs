//! Periodic transverse grid, scalar fields and spectral differentiation.
//!
//! The transverse space of the Heisenberg-type model is the torus
//! `T^{2n} = (R / L Z)^{2n}` in the coordinates `x^1, ..., x^{2n}`. The
//! Reeb direction `x^0` is never stored: every field here is basic.
//!
//! Points are stored row-major, axis 0 slowest. Axes are 0-based in the
//! API (`axis = 0` is `x^1`).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{KError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeMode {
    Spectral,
    FiniteDifference4,
}

impl std::str::FromStr for DerivativeMode {
    type Err = KError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(Self::Spectral),
            "finite-difference-4" | "fd4" => Ok(Self::FiniteDifference4),
            other => Err(KError::Config(format!("unknown derivative mode {other:?}"))),
        }
    }
}

pub struct TransverseGrid {
    n: usize,
    dim: usize,
    size: usize,
    period: f64,
    mode: DerivativeMode,
    points: usize,
    strides: Vec<usize>,
    /// Angular wavenumbers `2 pi k / L` in FFT order, Nyquist entry zeroed.
    wavenumbers: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

pub type Grid = Arc<TransverseGrid>;

impl fmt::Debug for TransverseGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransverseGrid")
            .field("n", &self.n)
            .field("size", &self.size)
            .field("period", &self.period)
            .field("mode", &self.mode)
            .finish()
    }
}

/// Serializable description of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub n: usize,
    pub size: usize,
    pub period: f64,
    pub mode: DerivativeMode,
}

impl TransverseGrid {
    /// Builds a grid with unit period.
    pub fn new(n: usize, size: usize, mode: DerivativeMode) -> Result<Grid> {
        Self::with_period(n, size, 1.0, mode)
    }

    pub fn with_period(n: usize, size: usize, period: f64, mode: DerivativeMode) -> Result<Grid> {
        if !(n == 1 || n == 2) {
            return Err(KError::UnsupportedDimension(n));
        }
        if size < 8 || !size.is_power_of_two() {
            return Err(KError::BadResolution(size));
        }
        if !(period > 0.0) || !period.is_finite() {
            return Err(KError::Config(format!("period must be positive, got {period}")));
        }
        let dim = 2 * n;
        let points = size.pow(dim as u32);
        let strides = (0..dim).map(|a| size.pow((dim - 1 - a) as u32)).collect();
        let wavenumbers = (0..size)
            .map(|j| {
                if 2 * j == size {
                    0.0
                } else {
                    2.0 * PI * signed_mode(j, size) as f64 / period
                }
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(size);
        let inv = planner.plan_fft_inverse(size);
        Ok(Arc::new(Self {
            n,
            dim,
            size,
            period,
            mode,
            points,
            strides,
            wavenumbers,
            fwd,
            inv,
        }))
    }

    /// Same geometry at another resolution.
    pub fn resized(&self, size: usize) -> Result<Grid> {
        Self::with_period(self.n, size, self.period, self.mode)
    }

    pub fn with_mode(&self, mode: DerivativeMode) -> Result<Grid> {
        Self::with_period(self.n, self.size, self.period, mode)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    /// Number of transverse axes, `2n`.
    pub fn dim(&self) -> usize {
        self.dim
    }
    /// Points per axis.
    pub fn size(&self) -> usize {
        self.size
    }
    pub fn period(&self) -> f64 {
        self.period
    }
    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }
    pub fn points(&self) -> usize {
        self.points
    }
    pub fn spacing(&self) -> f64 {
        self.period / self.size as f64
    }
    /// Coordinate volume of the torus, `L^{2n}`.
    pub fn volume(&self) -> f64 {
        self.period.powi(self.dim as i32)
    }
    pub fn info(&self) -> GridInfo {
        GridInfo { n: self.n, size: self.size, period: self.period, mode: self.mode }
    }

    pub fn same_as(&self, other: &TransverseGrid) -> bool {
        self.n == other.n
            && self.size == other.size
            && self.period == other.period
            && self.mode == other.mode
    }

    pub fn index_along(&self, point: usize, axis: usize) -> usize {
        (point / self.strides[axis]) % self.size
    }

    pub fn coord(&self, point: usize, axis: usize) -> f64 {
        self.index_along(point, axis) as f64 * self.spacing()
    }

    pub fn coords(&self, point: usize) -> Vec<f64> {
        (0..self.dim).map(|a| self.coord(point, a)).collect()
    }

    /// Smallest nonzero eigenvalue of the flat Laplacian, `(2 pi / L)^2`.
    pub fn first_flat_eigenvalue(&self) -> f64 {
        (2.0 * PI / self.period).powi(2)
    }

    pub fn wavenumber(&self, j: usize) -> f64 {
        self.wavenumbers[j]
    }

    /// Squared angular wavenumber of the multi-index at `point` (FFT order),
    /// Nyquist entries included with their full magnitude.
    pub fn wavenumber_sq(&self, point: usize) -> f64 {
        (0..self.dim)
            .map(|a| {
                let k = 2.0 * PI * signed_mode(self.index_along(point, a), self.size) as f64
                    / self.period;
                k * k
            })
            .sum()
    }

    /// In-place 1-D FFT of every line along `axis` of a point-indexed buffer.
    /// The inverse transform is unnormalized.
    pub fn fft_axis(&self, buf: &mut [Complex64], axis: usize, inverse: bool) {
        debug_assert_eq!(buf.len(), self.points);
        let plan = if inverse { &self.inv } else { &self.fwd };
        let n = self.size;
        let stride = self.strides[axis];
        if stride == 1 {
            plan.process(buf);
            return;
        }
        let outer = self.points / (n * stride);
        let mut lines = vec![Complex64::new(0.0, 0.0); n * stride];
        for o in 0..outer {
            let base = o * n * stride;
            for j in 0..n {
                for i in 0..stride {
                    lines[i * n + j] = buf[base + j * stride + i];
                }
            }
            plan.process(&mut lines);
            for j in 0..n {
                for i in 0..stride {
                    buf[base + j * stride + i] = lines[i * n + j];
                }
            }
        }
    }

    /// Full forward transform over all axes.
    pub fn fft_all(&self, buf: &mut [Complex64], inverse: bool) {
        for a in 0..self.dim {
            self.fft_axis(buf, a, inverse);
        }
        if inverse {
            let s = 1.0 / self.points as f64;
            buf.iter_mut().for_each(|c| *c *= s);
        }
    }

    /// Partial derivative along `axis` of component `comp` of a point-major
    /// buffer holding `ncomp` values per point. Returns a point-indexed vector.
    pub fn derivative_strided(&self, data: &[f64], ncomp: usize, comp: usize, axis: usize) -> Vec<f64> {
        debug_assert_eq!(data.len(), self.points * ncomp);
        match self.mode {
            DerivativeMode::Spectral => self.spectral_derivative(data, ncomp, comp, axis),
            DerivativeMode::FiniteDifference4 => self.fd4_derivative(data, ncomp, comp, axis),
        }
    }

    fn spectral_derivative(&self, data: &[f64], ncomp: usize, comp: usize, axis: usize) -> Vec<f64> {
        let n = self.size;
        let stride = self.strides[axis];
        let outer = self.points / (n * stride);
        let plan_f = &self.fwd;
        let plan_i = &self.inv;
        let norm = 1.0 / n as f64;
        let mut out = vec![0.0; self.points];
        let mut lines = vec![Complex64::new(0.0, 0.0); n * stride];
        for o in 0..outer {
            let base = o * n * stride;
            for j in 0..n {
                for i in 0..stride {
                    lines[i * n + j] = Complex64::new(data[(base + j * stride + i) * ncomp + comp], 0.0);
                }
            }
            plan_f.process(&mut lines);
            for line in lines.chunks_exact_mut(n) {
                for (c, &k) in line.iter_mut().zip(&self.wavenumbers) {
                    *c = Complex64::new(-c.im * k, c.re * k) * norm;
                }
            }
            plan_i.process(&mut lines);
            for j in 0..n {
                for i in 0..stride {
                    out[base + j * stride + i] = lines[i * n + j].re;
                }
            }
        }
        out
    }

    fn fd4_derivative(&self, data: &[f64], ncomp: usize, comp: usize, axis: usize) -> Vec<f64> {
        let n = self.size;
        let stride = self.strides[axis];
        let h = self.spacing();
        let mut out = vec![0.0; self.points];
        for (p, o) in out.iter_mut().enumerate() {
            let j = (p / stride) % n;
            let base = p - j * stride;
            let at = |jj: usize| data[(base + (jj % n) * stride) * ncomp + comp];
            *o = (-at(j + 2) + 8.0 * at(j + 1) - 8.0 * at(j + n - 1) + at(j + n - 2)) / (12.0 * h);
        }
        out
    }

    /// Index of the point `x + shift * h`.
    pub fn shifted_index(&self, point: usize, shift: &[usize]) -> usize {
        (0..self.dim).fold(0, |acc, a| acc * self.size + (self.index_along(point, a) + shift[a]) % self.size)
    }

    /// Trapezoidal quadrature on the torus: `mean * L^{2n}`.
    pub fn integrate_slice(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() / self.points as f64 * self.volume()
    }
}

/// Signed Fourier mode of FFT index `j` on `n` points.
pub fn signed_mode(j: usize, n: usize) -> i64 {
    if 2 * j >= n {
        j as i64 - n as i64
    } else {
        j as i64
    }
}

/// A scalar (basic) function sampled on the grid.
#[derive(Clone)]
pub struct ScalarField {
    grid: Grid,
    data: Vec<f64>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("grid", &self.grid)
            .field("max_abs", &self.max_abs())
            .finish()
    }
}

impl ScalarField {
    pub fn from_vec(grid: &Grid, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), grid.points(), "field length does not match grid");
        Self { grid: grid.clone(), data }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Self { grid: grid.clone(), data: vec![value; grid.points()] }
    }

    /// Samples `f(x)` with `x` the coordinate vector of each point.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut x = vec![0.0; grid.dim()];
        let data = (0..grid.points())
            .map(|p| {
                for (a, xa) in x.iter_mut().enumerate() {
                    *xa = grid.coord(p, a);
                }
                f(&x)
            })
            .collect();
        Self { grid: grid.clone(), data }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.data
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn partial_derivative(&self, axis: usize) -> Result<ScalarField> {
        if axis >= self.grid.dim() {
            return Err(KError::AxisOutOfRange { axis, dim: self.grid.dim() });
        }
        Ok(Self { grid: self.grid.clone(), data: self.grid.derivative_strided(&self.data, 1, 0, axis) })
    }

    /// `integral of f * density` over the transverse torus.
    pub fn integrate(&self, density: &ScalarField) -> Result<f64> {
        if !self.grid.same_as(&density.grid) {
            return Err(KError::GridMismatch);
        }
        let min = density.data.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) {
            return Err(KError::NonPositiveDensity(min));
        }
        let s: f64 = self.data.iter().zip(&density.data).map(|(a, b)| a * b).sum();
        Ok(s / self.grid.points() as f64 * self.grid.volume())
    }

    /// Integral against the unit density.
    pub fn integral(&self) -> f64 {
        self.grid.integrate_slice(&self.data)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `L^2` norm for the unit density.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.integrate_slice(&self.data.iter().map(|v| v * v).collect::<Vec<_>>())).sqrt()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid.clone(), data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        assert!(self.grid.same_as(&other.grid), "grid mismatch");
        Self {
            grid: self.grid.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a + b)
    }
    pub fn sub(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a - b)
    }
    pub fn mul(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a * b)
    }
    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    /// Same field with its mean removed.
    pub fn centered(&self) -> Self {
        let m = self.mean();
        self.map(|v| v - m)
    }

    /// Fourier interpolation (or truncation) to another resolution of the
    /// same geometry. Exact for fields band-limited below both Nyquist limits.
    pub fn resample(&self, target: &Grid) -> Self {
        let src = &self.grid;
        let mut buf: Vec<Complex64> = self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        src.fft_all(&mut buf, false);
        let scale = 1.0 / src.points() as f64;
        let mut out = vec![Complex64::new(0.0, 0.0); target.points()];
        let half = src.size().min(target.size()) / 2;
        for (p, c) in buf.iter().enumerate() {
            let mut tp = 0;
            let mut keep = true;
            for a in 0..src.dim() {
                let k = signed_mode(src.index_along(p, a), src.size());
                if k.unsigned_abs() as usize >= half {
                    keep = false;
                    break;
                }
                let j = k.rem_euclid(target.size() as i64) as usize;
                tp = tp * target.size() + j;
            }
            if keep {
                out[tp] = *c * scale;
            }
        }
        for a in 0..target.dim() {
            target.fft_axis(&mut out, a, true);
        }
        Self { grid: target.clone(), data: out.iter().map(|c| c.re).collect() }
    }
}

/// A real trigonometric polynomial `Re sum_k c_k exp(2 pi i k.x / L)` with
/// `|k_a| <= cutoff` on every axis. Independent of resolution, so the same
/// field can be sampled on several grids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrigField {
    dim: usize,
    cutoff: usize,
    /// Coefficients over the box `[-cutoff, cutoff]^dim`, row-major, as `(re, im)`.
    coeffs: Vec<(f64, f64)>,
}

impl TrigField {
    pub fn zero(dim: usize, cutoff: usize) -> Self {
        Self { dim, cutoff, coeffs: vec![(0.0, 0.0); (2 * cutoff + 1).pow(dim as u32)] }
    }

    /// Random coefficients uniform in `[-1, 1]^2`, scaled so the sup norm
    /// bound `sum |c_k|` equals `amplitude`.
    pub fn random<R: Rng>(dim: usize, cutoff: usize, amplitude: f64, mean_zero: bool, rng: &mut R) -> Self {
        let mut f = Self::zero(dim, cutoff);
        let center = f.box_index(&vec![0; dim]);
        for (i, c) in f.coeffs.iter_mut().enumerate() {
            *c = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if mean_zero && i == center {
                *c = (0.0, 0.0);
            }
        }
        let total: f64 = f.coeffs.iter().map(|(a, b)| a.hypot(*b)).sum();
        if total > 0.0 {
            let s = amplitude / total;
            f.coeffs.iter_mut().for_each(|c| {
                c.0 *= s;
                c.1 *= s;
            });
        }
        f
    }

    /// A single real mode `amp * cos(2 pi k.x / L + phase)`.
    pub fn mode(dim: usize, k: &[i64], amp: f64, phase: f64) -> Self {
        let cutoff = k.iter().map(|v| v.unsigned_abs() as usize).max().unwrap_or(0);
        let mut f = Self::zero(dim, cutoff);
        let i = f.box_index(k);
        f.coeffs[i] = (amp * phase.cos(), amp * phase.sin());
        f
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    fn box_index(&self, k: &[i64]) -> usize {
        let w = (2 * self.cutoff + 1) as i64;
        k.iter().fold(0i64, |acc, &ki| acc * w + ki + self.cutoff as i64) as usize
    }

    /// Drops every mode that oscillates along an axis outside `axes`.
    pub fn restricted_to(&self, axes: &[usize]) -> Self {
        let mut f = self.clone();
        let w = 2 * self.cutoff + 1;
        for (i, c) in f.coeffs.iter_mut().enumerate() {
            let mut rem = i;
            for a in (0..self.dim).rev() {
                let k = rem % w;
                rem /= w;
                if k != self.cutoff && !axes.contains(&a) {
                    *c = (0.0, 0.0);
                }
            }
        }
        f
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut f = self.clone();
        f.coeffs.iter_mut().for_each(|c| {
            c.0 *= s;
            c.1 *= s;
        });
        f
    }

    /// Samples the field. Fails when the cutoff reaches the Nyquist mode.
    pub fn sample(&self, grid: &Grid) -> Result<ScalarField> {
        if grid.dim() != self.dim {
            return Err(KError::GridMismatch);
        }
        if 2 * self.cutoff >= grid.size() {
            return Err(KError::Aliasing { cutoff: self.cutoff, n: grid.size() });
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); grid.points()];
        let w = 2 * self.cutoff + 1;
        for (i, &(re, im)) in self.coeffs.iter().enumerate() {
            if re == 0.0 && im == 0.0 {
                continue;
            }
            let mut rem = i;
            let mut p = 0;
            let mut digits = vec![0usize; self.dim];
            for a in (0..self.dim).rev() {
                digits[a] = rem % w;
                rem /= w;
            }
            for &d in &digits {
                let k = d as i64 - self.cutoff as i64;
                p = p * grid.size() + k.rem_euclid(grid.size() as i64) as usize;
            }
            buf[p] += Complex64::new(re, im);
        }
        for a in 0..grid.dim() {
            grid.fft_axis(&mut buf, a, true);
        }
        Ok(ScalarField::from_vec(grid, buf.iter().map(|c| c.re).collect()))
    }
}
