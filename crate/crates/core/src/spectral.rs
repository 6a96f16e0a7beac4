//! Periodic Fourier-grid infrastructure.
//!
//! Fields live on a uniform grid of `N` points over `[0, L)` and are stored as
//! Fourier-series coefficients
//!
//! ```text
//! u(x) = sum_j u_j exp(i k_j x),   k_j = 2 pi j / L,   j = -N/2+1, ..., N/2
//! u_j  = (1/N) sum_n u(x_n) exp(-i k_j x_n)
//! ```
//!
//! Coefficients are kept in FFT storage order: index `0..=N/2` holds
//! `j = 0..=N/2`, index `N/2+1..N` holds `j = -N/2+1..=-1`. The Nyquist mode
//! `j = N/2` is treated with the symmetrized symbol `(s(k) + s(-k))/2`, so odd
//! multipliers annihilate it and real fields stay real.
//!
//! Weighted norms use the physical wavenumbers `k_j` directly. On the slow
//! torus (`L = 2 pi`) these are the integers.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Largest admissible exponent `sigma (1 + |k|)` in a Gevrey weight.
pub const SATURATION_EXPONENT: f64 = 700.0;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Uniform periodic grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    num_modes: usize,
    period: f64,
    dealias: bool,
}

impl Grid1D {
    /// Grid with `num_modes` points (even, at least 8) on a period `period`.
    /// Dealiased products are on by default.
    pub fn new(num_modes: usize, period: f64) -> Result<Self> {
        if num_modes < 8 || !num_modes.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "num_modes must be even and >= 8, got {num_modes}"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGrid(format!("period must be positive, got {period}")));
        }
        Ok(Self { num_modes, period, dealias: true })
    }

    pub fn with_dealiasing(mut self, on: bool) -> Self {
        self.dealias = on;
        self
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn dealias(&self) -> bool {
        self.dealias
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.num_modes as f64
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.num_modes).map(|n| n as f64 * h).collect()
    }

    /// Signed mode number `j` stored at `index`.
    pub fn mode_number(&self, index: usize) -> i64 {
        let n = self.num_modes;
        if index <= n / 2 {
            index as i64
        } else {
            index as i64 - n as i64
        }
    }

    /// Storage index of mode number `j`, if it is represented.
    pub fn index_of(&self, j: i64) -> Option<usize> {
        let half = (self.num_modes / 2) as i64;
        if j > half || j <= -half {
            return None;
        }
        Some(if j >= 0 { j as usize } else { (self.num_modes as i64 + j) as usize })
    }

    pub fn is_nyquist(&self, index: usize) -> bool {
        index == self.num_modes / 2
    }

    pub fn fundamental(&self) -> f64 {
        2.0 * PI / self.period
    }

    pub fn wavenumber(&self, index: usize) -> f64 {
        self.fundamental() * self.mode_number(index) as f64
    }

    /// Wavenumbers in storage order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.num_modes).map(|i| self.wavenumber(i)).collect()
    }

    pub fn max_wavenumber(&self) -> f64 {
        self.fundamental() * (self.num_modes / 2) as f64
    }

    /// Evaluates a Fourier symbol at every stored mode; the Nyquist mode gets
    /// the symmetrized value.
    pub fn symbol<F: Fn(f64) -> Complex64>(&self, s: F) -> Vec<Complex64> {
        (0..self.num_modes)
            .map(|i| {
                let k = self.wavenumber(i);
                if self.is_nyquist(i) {
                    (s(k) + s(-k)) * 0.5
                } else {
                    s(k)
                }
            })
            .collect()
    }

    /// Same grid with twice the points (and the same period).
    pub fn refined(&self) -> Self {
        Self { num_modes: 2 * self.num_modes, ..*self }
    }

    fn padded_len(&self) -> usize {
        if !self.dealias {
            return self.num_modes;
        }
        let m = (3 * self.num_modes).div_ceil(2);
        m + (m % 2)
    }
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("FFT plan cache poisoned");
    map.entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

/// Samples to Fourier-series coefficients (in place, normalized by `1/N`).
pub(crate) fn forward_in_place(buf: &mut [Complex64]) {
    let n = buf.len();
    plans(n).forward.process(buf);
    let s = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= s);
}

/// Fourier-series coefficients to samples (in place).
pub(crate) fn inverse_in_place(buf: &mut [Complex64]) {
    plans(buf.len()).inverse.process(buf);
}

/// Maps coefficients between storage layouts of different lengths:
/// zero-padding when growing, truncation when shrinking. The Nyquist mode is
/// split evenly on padding and folded back on truncation.
pub(crate) fn remap_coefficients(src: &[Complex64], dst_len: usize) -> Vec<Complex64> {
    let n = src.len();
    let m = dst_len;
    let mut dst = vec![ZERO; m];
    if m == n {
        dst.copy_from_slice(src);
        return dst;
    }
    if m > n {
        let half = n / 2;
        dst[..half].copy_from_slice(&src[..half]);
        for j in 1..half {
            dst[m - j] = src[n - j];
        }
        let nyq = src[half] * 0.5;
        dst[half] += nyq;
        dst[m - half] += nyq;
    } else {
        let half = m / 2;
        dst[..half].copy_from_slice(&src[..half]);
        for j in 1..half {
            dst[m - j] = src[n - j];
        }
        dst[half] = src[half] + src[n - half];
    }
    dst
}

/// Whether a field is real-valued (Hermitian coefficients) or complex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Real,
    Complex,
}

/// A periodic field stored by its Fourier coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid1D,
    kind: FieldKind,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid1D, kind: FieldKind) -> Self {
        Self { grid, kind, coeffs: vec![ZERO; grid.num_modes()] }
    }

    pub fn constant(grid: Grid1D, value: f64) -> Self {
        let mut f = Self::zeros(grid, FieldKind::Real);
        f.coeffs[0] = Complex64::new(value, 0.0);
        f
    }

    pub fn from_coefficients(grid: Grid1D, kind: FieldKind, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.num_modes() {
            return Err(Error::LengthMismatch { expected: grid.num_modes(), got: coeffs.len() });
        }
        Ok(Self { grid, kind, coeffs })
    }

    /// Spectrum of real samples taken at `grid.points()`.
    pub fn from_real(grid: Grid1D, samples: &[f64]) -> Result<Self> {
        if samples.len() != grid.num_modes() {
            return Err(Error::LengthMismatch { expected: grid.num_modes(), got: samples.len() });
        }
        let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        forward_in_place(&mut buf);
        Ok(Self { grid, kind: FieldKind::Real, coeffs: buf })
    }

    /// Spectrum of complex samples taken at `grid.points()`.
    pub fn from_complex(grid: Grid1D, samples: &[Complex64]) -> Result<Self> {
        if samples.len() != grid.num_modes() {
            return Err(Error::LengthMismatch { expected: grid.num_modes(), got: samples.len() });
        }
        let mut buf = samples.to_vec();
        forward_in_place(&mut buf);
        Ok(Self { grid, kind: FieldKind::Complex, coeffs: buf })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: Grid1D, f: F) -> Self {
        let s: Vec<f64> = grid.points().into_iter().map(f).collect();
        Self::from_real(grid, &s).expect("length matches by construction")
    }

    pub fn from_complex_fn<F: Fn(f64) -> Complex64>(grid: Grid1D, f: F) -> Self {
        let s: Vec<Complex64> = grid.points().into_iter().map(f).collect();
        Self::from_complex(grid, &s).expect("length matches by construction")
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn is_real(&self) -> bool {
        self.kind == FieldKind::Real
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coefficients(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of mode number `j` (zero if not represented).
    pub fn mode(&self, j: i64) -> Complex64 {
        self.grid.index_of(j).map_or(ZERO, |i| self.coeffs[i])
    }

    /// The `k = 0` coefficient, i.e. the spatial mean.
    pub fn mean(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn to_complex_samples(&self) -> Vec<Complex64> {
        let mut buf = self.coeffs.clone();
        inverse_in_place(&mut buf);
        buf
    }

    /// Physical samples; the imaginary round-off of real fields is discarded.
    pub fn to_real_samples(&self) -> Vec<f64> {
        self.to_complex_samples().into_iter().map(|c| c.re).collect()
    }

    /// Samples on the zero-padded grid of length `len`.
    fn physical_on(&self, len: usize) -> Vec<Complex64> {
        let mut buf = remap_coefficients(&self.coeffs, len);
        inverse_in_place(&mut buf);
        if self.is_real() {
            buf.iter_mut().for_each(|c| c.im = 0.0);
        }
        buf
    }

    fn from_physical_on(grid: Grid1D, kind: FieldKind, mut samples: Vec<Complex64>) -> Self {
        if kind == FieldKind::Real {
            samples.iter_mut().for_each(|c| c.im = 0.0);
        }
        forward_in_place(&mut samples);
        let coeffs = remap_coefficients(&samples, grid.num_modes());
        Self { grid, kind, coeffs }
    }

    fn check_grid(&self, other: &Self) {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
    }

    fn combined_kind(&self, other: &Self) -> FieldKind {
        if self.is_real() && other.is_real() {
            FieldKind::Real
        } else {
            FieldKind::Complex
        }
    }

    /// Coefficient-wise multiplication by `(ik)^order`.
    pub fn derivative(&self, order: u32) -> Self {
        if order == 0 {
            return self.clone();
        }
        let sym = self.grid.symbol(|k| Complex64::new(0.0, k).powu(order));
        self.apply_symbol(&sym)
    }

    /// Coefficient-wise product with a precomputed symbol.
    pub fn apply_symbol(&self, symbol: &[Complex64]) -> Self {
        assert_eq!(symbol.len(), self.coeffs.len());
        let coeffs = self.coeffs.iter().zip(symbol).map(|(c, s)| c * s).collect();
        Self { coeffs, ..self.clone() }
    }

    pub fn apply_multiplier(&self, spec: &MultiplierSpec) -> Self {
        let sym = self.grid.symbol(|k| spec.symbol(k));
        let mut out = self.apply_symbol(&sym);
        if !spec.preserves_reality() {
            out.kind = FieldKind::Complex;
        }
        out
    }

    /// Discrete Gevrey norm `(sum_k e^{2 sigma (1+|k|)} (1+k^2)^m |u_k|^2)^{1/2}`.
    pub fn gevrey_norm(&self, p: GevreyParams) -> Result<f64> {
        let exponent = p.sigma * (1.0 + self.grid.max_wavenumber());
        if exponent > SATURATION_EXPONENT {
            return Err(Error::GevreySaturation { exponent });
        }
        let sum: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = self.grid.wavenumber(i).abs();
                (2.0 * p.sigma * (1.0 + k)).exp() * (1.0 + k * k).powf(p.m) * c.norm_sqr()
            })
            .sum();
        Ok(sum.sqrt())
    }

    /// One step of the shrinking analyticity strip: multiplies every mode by
    /// `e^{-eta dt (1+|k|)}`.
    pub fn gevrey_filter_step(&self, eta: f64, dt: f64) -> Self {
        self.apply_multiplier(&MultiplierSpec::GevreyFilter { delta_sigma: eta * dt })
    }

    /// Strip filter acting on `k != 0` only; the mean is left untouched.
    pub fn gevrey_filter_nonzero_modes(&self, eta: f64, dt: f64) -> Self {
        let mean = self.coeffs[0];
        let mut out = self.gevrey_filter_step(eta, dt);
        out.coeffs[0] = mean;
        out
    }

    /// Plain l2 norm of the coefficient vector.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum modulus over the grid samples.
    pub fn sup_norm(&self) -> f64 {
        self.to_complex_samples().iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest Hermitian-symmetry defect `|u_{-k} - conj(u_k)|` relative to the
    /// largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.num_modes();
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = self.coeffs[0].im.abs();
        for i in 1..n {
            let d = (self.coeffs[n - i] - self.coeffs[i].conj()).norm();
            worst = worst.max(d);
        }
        worst / scale
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_grid(other);
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Self { grid: self.grid, kind: self.combined_kind(other), coeffs }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check_grid(other);
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Self { grid: self.grid, kind: self.combined_kind(other), coeffs }
    }

    pub fn scale(&self, s: f64) -> Self {
        let coeffs = self.coeffs.iter().map(|c| c * s).collect();
        Self { coeffs, ..self.clone() }
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        let coeffs = self.coeffs.iter().map(|c| c * s).collect();
        Self { grid: self.grid, kind: FieldKind::Complex, coeffs }
    }

    pub fn add_constant(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        self.check_grid(other);
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b * s).collect();
        Self { grid: self.grid, kind: self.combined_kind(other), coeffs }
    }

    pub fn as_complex(&self) -> Self {
        Self { kind: FieldKind::Complex, ..self.clone() }
    }

    /// Pointwise product, evaluated on the 3/2-padded grid when the grid
    /// dealiases.
    pub fn mul(&self, other: &Self) -> Self {
        self.check_grid(other);
        let len = self.grid.padded_len();
        let a = self.physical_on(len);
        let b = other.physical_on(len);
        let prod = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        Self::from_physical_on(self.grid, self.combined_kind(other), prod)
    }

    /// Pointwise quotient (dealiased like [`SpectralField::mul`]).
    pub fn div(&self, other: &Self) -> Self {
        self.check_grid(other);
        let len = self.grid.padded_len();
        let a = self.physical_on(len);
        let b = other.physical_on(len);
        let q = a.iter().zip(&b).map(|(x, y)| x / y).collect();
        Self::from_physical_on(self.grid, self.combined_kind(other), q)
    }

    /// Applies a real function pointwise to a real field.
    pub fn map_real<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        let len = self.grid.padded_len();
        let s = self
            .physical_on(len)
            .into_iter()
            .map(|c| Complex64::new(f(c.re), 0.0))
            .collect();
        Self::from_physical_on(self.grid, FieldKind::Real, s)
    }

    /// Applies a complex function pointwise.
    pub fn map_complex<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Self {
        let len = self.grid.padded_len();
        let s = self.physical_on(len).into_iter().map(f).collect();
        Self::from_physical_on(self.grid, FieldKind::Complex, s)
    }

    /// Evaluates `f` pointwise on the (padded) physical samples of several
    /// fields on a common grid.
    pub fn pointwise<F>(inputs: &[&SpectralField], kind: FieldKind, f: F) -> Self
    where
        F: Fn(&[Complex64]) -> Complex64,
    {
        let grid = inputs[0].grid;
        for u in inputs {
            assert_eq!(u.grid, grid, "fields live on different grids");
        }
        let len = grid.padded_len();
        let samples: Vec<Vec<Complex64>> = inputs.iter().map(|u| u.physical_on(len)).collect();
        let mut args = vec![ZERO; inputs.len()];
        let out = (0..len)
            .map(|n| {
                for (a, s) in args.iter_mut().zip(&samples) {
                    *a = s[n];
                }
                f(&args)
            })
            .collect();
        Self::from_physical_on(grid, kind, out)
    }

    /// Band-limited resampling onto a grid with another number of points.
    /// The coefficients of mode `j` are carried over unchanged, so resampling
    /// onto a grid of period `L / eps` evaluates `u(eps x)`.
    pub fn resample(&self, target: Grid1D) -> Self {
        let coeffs = remap_coefficients(&self.coeffs, target.num_modes());
        Self { grid: target, kind: self.kind, coeffs }
    }

    /// Periodic antiderivative with zero mean. Fails unless the mean of the
    /// field vanishes to `tol`.
    pub fn antiderivative(&self, tol: f64) -> Result<Self> {
        let mean = self.coeffs[0].norm();
        if mean > tol {
            return Err(Error::NonzeroMean { mean });
        }
        let sym = self.grid.symbol(|k| {
            if k == 0.0 {
                ZERO
            } else {
                Complex64::new(0.0, -1.0 / k)
            }
        });
        Ok(self.apply_symbol(&sym))
    }
}

/// Gevrey weight parameters: strip half-width `sigma` and Sobolev exponent `m`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GevreyParams {
    pub sigma: f64,
    pub m: f64,
}

impl GevreyParams {
    pub fn new(sigma: f64, m: f64) -> Result<Self> {
        if !(sigma >= 0.0 && m >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "Gevrey parameters need sigma >= 0 and m >= 0, got sigma = {sigma}, m = {m}"
            )));
        }
        Ok(Self { sigma, m })
    }

    pub fn sobolev(m: f64) -> Self {
        Self { sigma: 0.0, m }
    }
}

/// Smooth cutoff of radius `delta`: 1 on `|k| <= delta/2`, 0 on `|k| >= delta`,
/// blended by `exp(1 - 1/(1 - s^2))`, `s = 2|k|/delta - 1`.
pub fn cutoff_chi(k: f64, delta: f64) -> f64 {
    let a = k.abs();
    if a <= 0.5 * delta {
        1.0
    } else if a >= delta {
        0.0
    } else {
        let s = 2.0 * a / delta - 1.0;
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

/// Fourier multipliers used throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MultiplierSpec {
    /// `(ik)^order`
    Derivative { order: u32 },
    /// `sqrt(1 + k^2)`
    NormalFormM,
    /// `1 / sqrt(1 + k^2)`
    NormalFormMInverse,
    /// `chi(k) k`; bounded by `max(1, delta) * min(1, |k|)`.
    SemiderivativeTheta { delta: f64 },
    /// `exp(-delta_sigma (1 + |k|))`
    GevreyFilter { delta_sigma: f64 },
    /// `chi(k)`
    CutoffChi { delta: f64 },
}

impl MultiplierSpec {
    pub fn symbol(&self, k: f64) -> Complex64 {
        match *self {
            MultiplierSpec::Derivative { order } => Complex64::new(0.0, k).powu(order),
            MultiplierSpec::NormalFormM => Complex64::new((1.0 + k * k).sqrt(), 0.0),
            MultiplierSpec::NormalFormMInverse => Complex64::new(1.0 / (1.0 + k * k).sqrt(), 0.0),
            MultiplierSpec::SemiderivativeTheta { delta } => {
                Complex64::new(cutoff_chi(k, delta) * k, 0.0)
            }
            MultiplierSpec::GevreyFilter { delta_sigma } => {
                Complex64::new((-delta_sigma * (1.0 + k.abs())).exp(), 0.0)
            }
            MultiplierSpec::CutoffChi { delta } => Complex64::new(cutoff_chi(k, delta), 0.0),
        }
    }

    /// The constant `c` in `|theta(k)| <= c min(1, |k|)`.
    pub fn theta_bound_constant(delta: f64) -> f64 {
        delta.max(1.0)
    }

    fn preserves_reality(&self) -> bool {
        // Real-valued odd symbols (theta) map real fields to imaginary ones.
        !matches!(self, MultiplierSpec::SemiderivativeTheta { .. })
    }
}
