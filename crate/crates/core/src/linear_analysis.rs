//! Fourier symbol of the linearization about a wave train in the variables
//! `W = (r, v, B)`, `psi = M v` with `M = sqrt(1 + k^2)`, its spectral
//! projections and the center/stable split.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{rhs_polar, GglParams, PolarState, WaveTrain};
use crate::spectral::{cutoff_chi, FieldKind, MultiplierSpec, SpectralField};
use crate::wme::{classify_matrix, WmeType};

type C = Complex64;
type M3 = Matrix3<C>;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

fn re(v: f64) -> C {
    C::new(v, 0.0)
}

fn im(v: f64) -> C {
    C::new(0.0, v)
}

/// The 3x3 symbol at one frequency with its eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSymbol {
    pub k: f64,
    pub matrix: M3,
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: [C; 3],
}

/// Symbol matrix at frequency `k`.
pub fn lambda_matrix(k: f64, p: &GglParams, wt: &WaveTrain) -> M3 {
    let e = wt.amp2();
    let q = wt.q;
    let m = (1.0 + k * k).sqrt();
    M3::new(
        re(-k * k - 2.0 * e) + im(-2.0 * p.alpha * q * k),
        im(-p.alpha * k * m) + re(-2.0 * q * m),
        re(p.gamma_r),
        (im(-p.alpha * k * k * k - 2.0 * p.beta * e * k) + re(-2.0 * q * k * k)) / m,
        re(-k * k) + im(-2.0 * p.alpha * q * k),
        im(p.gamma_i * k / m),
        im(2.0 * p.d * e * k),
        ZERO,
        re(-p.a * k * k) + im(p.c * k),
    )
}

fn sort_eigenvalues(mut ev: [C; 3]) -> [C; 3] {
    ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    ev
}

/// Eigenvalues of a complex 3x3 matrix via the Schur form.
pub fn eigenvalues3(m: &M3) -> [C; 3] {
    let ev = m.schur().eigenvalues().expect("complex Schur form is triangular");
    sort_eigenvalues([ev[0], ev[1], ev[2]])
}

pub fn assemble_lambda_hat(k: f64, p: &GglParams, wt: &WaveTrain) -> LambdaSymbol {
    let matrix = lambda_matrix(k, p, wt);
    LambdaSymbol { k, eigenvalues: eigenvalues3(&matrix), matrix }
}

fn cross(a: &Vector3<C>, b: &Vector3<C>) -> Vector3<C> {
    Vector3::new(a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])
}

/// Largest cross product of two of the given vectors; for a rank-2 set it
/// spans the vector orthogonal (bilinearly) to all three.
fn best_cross(v: [Vector3<C>; 3]) -> Vector3<C> {
    let cands = [cross(&v[1], &v[2]), cross(&v[0], &v[1]), cross(&v[0], &v[2])];
    cands
        .into_iter()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .expect("three candidates")
}

impl LambdaSymbol {
    /// Right and left eigenvectors of the simple eigenvalue `lambda`.
    pub fn eigenvectors(&self, lambda: C) -> (Vector3<C>, Vector3<C>) {
        let shifted = self.matrix - M3::identity() * lambda;
        let rows = [shifted.row(0).transpose(), shifted.row(1).transpose(), shifted.row(2).transpose()];
        let cols = [shifted.column(0).into_owned(), shifted.column(1).into_owned(), shifted.column(2).into_owned()];
        (best_cross(rows), best_cross(cols))
    }

    /// Spectral projection `r l^T / (l^T r)` onto the most damped eigenvalue.
    pub fn p1(&self) -> M3 {
        let (r, l) = self.eigenvectors(self.eigenvalues[0]);
        let norm = l.dot(&r);
        r * l.transpose() / norm
    }

    /// Eigenpair residual `max_j ||(Lambda - lambda_j) v_j||` over the three
    /// eigenvalues (unit right eigenvectors).
    pub fn eigen_residual(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|&l| {
                let (r, _) = self.eigenvectors(l);
                let r = r / C::new(r.norm().max(1e-300), 0.0);
                (self.matrix * r - r * l).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Sorted eigenvalues along a list of frequencies.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumCurves {
    pub k: Vec<f64>,
    pub eigenvalues: Vec<[(f64, f64); 3]>,
    pub max_real_part: f64,
}

pub fn spectrum_curves(p: &GglParams, wt: &WaveTrain, k_samples: &[f64]) -> SpectrumCurves {
    let eigenvalues: Vec<[(f64, f64); 3]> = k_samples
        .iter()
        .map(|&k| assemble_lambda_hat(k, p, wt).eigenvalues.map(|z| (z.re, z.im)))
        .collect();
    let max_real_part = eigenvalues
        .iter()
        .flat_map(|e| e.iter().map(|z| z.0))
        .fold(f64::NEG_INFINITY, f64::max);
    SpectrumCurves { k: k_samples.to_vec(), eigenvalues, max_real_part }
}

/// Evenly spaced samples on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// `min_{j>1} Re lambda_j - Re lambda_1`.
fn separation(k: f64, p: &GglParams, wt: &WaveTrain) -> f64 {
    let ev = assemble_lambda_hat(k, p, wt).eigenvalues;
    ev[1].re - ev[0].re
}

/// Center/stable split with cutoff radius `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralSplit {
    pub delta: f64,
    /// Required separation of the damped eigenvalue.
    pub gap_min: f64,
    /// Separation at `k = 0`.
    pub gap: f64,
    pub params: GglParams,
    pub wt: WaveTrain,
}

const SCAN_POINTS: usize = 2000;

/// Finds the largest radius `delta <= 1` on which the damped eigenvalue stays
/// `gap_min` away (in real part) from the rest. The default `gap_min` is
/// `e^{2 rho}`, half the separation at `k = 0`.
pub fn build_split(p: &GglParams, wt: &WaveTrain, gap_min: Option<f64>) -> Result<SpectralSplit> {
    let gap_min = gap_min.unwrap_or(wt.amp2());
    let gap = separation(0.0, p, wt);
    if !(gap >= gap_min) || gap_min <= 0.0 {
        return Err(Error::NoGap { gap, required: gap_min });
    }
    let ok = |k: f64| separation(k, p, wt) >= gap_min && separation(-k, p, wt) >= gap_min;
    let mut delta = 1.0;
    for i in 1..=SCAN_POINTS {
        let k = i as f64 / SCAN_POINTS as f64;
        if !ok(k) {
            let (mut lo, mut hi) = ((i - 1) as f64 / SCAN_POINTS as f64, k);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if ok(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            delta = lo;
            break;
        }
    }
    if delta <= 0.0 {
        return Err(Error::NoGap { gap, required: gap_min });
    }
    Ok(SpectralSplit { delta, gap_min, gap, params: *p, wt: *wt })
}

impl SpectralSplit {
    pub fn chi(&self, k: f64) -> f64 {
        cutoff_chi(k, self.delta)
    }

    pub fn symbol(&self, k: f64) -> LambdaSymbol {
        assemble_lambda_hat(k, &self.params, &self.wt)
    }

    /// `(P_c(k), P_s(k))`.
    pub fn projectors(&self, k: f64) -> (M3, M3) {
        let chi = self.chi(k);
        let pc = if chi == 0.0 {
            M3::zeros()
        } else {
            (M3::identity() - self.symbol(k).p1()) * re(chi)
        };
        (pc, M3::identity() - pc)
    }
}

/// `||A||_max`
pub fn max_abs(m: &M3) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Numerical rank with relative tolerance `1e-10`.
pub fn rank(m: &M3) -> usize {
    let sv = m.svd(false, false).singular_values;
    let top = sv.max();
    sv.iter().filter(|&&s| s > 1e-10 * top.max(1e-300)).count()
}

/// Outcome of the semiderivative check.
#[derive(Debug, Clone, Serialize)]
pub struct SemiderivativeReport {
    /// `|P_c(0) (x, 0, 0)^T|`, maximized over the probe values `x`.
    pub anchor_defect: f64,
    /// Fitted slope of `log |g_c(k)|` against `log |k|` per trial.
    pub slopes: Vec<f64>,
    pub min_slope: f64,
}

/// Nonlinear part `G(W)` of the system for `W = (r, v, B)` in Fourier space,
/// given the state in `(r, psi, B)` form.
pub fn nonlinearity_hat(state: &PolarState, p: &GglParams, wt: &WaveTrain) -> [SpectralField; 3] {
    let v = state.psi.apply_multiplier(&MultiplierSpec::NormalFormMInverse);
    let t = rhs_polar(state, p, wt);
    let vt = t.psi.apply_multiplier(&MultiplierSpec::NormalFormMInverse);
    let grid = *state.r.grid();
    let w = [state.r.coefficients(), v.coefficients(), state.b.coefficients()];
    let mut lin = [vec![ZERO; grid.num_modes()], vec![ZERO; grid.num_modes()], vec![ZERO; grid.num_modes()]];
    for i in 0..grid.num_modes() {
        let k = grid.wavenumber(i);
        let l = lambda_matrix(k, p, wt);
        let wk = Vector3::new(w[0][i], w[1][i], w[2][i]);
        let lw = if grid.is_nyquist(i) {
            (l * wk + lambda_matrix(-k, p, wt) * wk) * re(0.5)
        } else {
            l * wk
        };
        for c in 0..3 {
            lin[c][i] = lw[c];
        }
    }
    let [l0, l1, l2] = lin;
    let f = |c: Vec<C>| SpectralField::from_coefficients(grid, FieldKind::Complex, c).expect("grid length");
    [t.r.sub(&f(l0)), vt.sub(&f(l1)), t.b.sub(&f(l2))]
}

/// Smooth localized trial states: each component is a sum of three Gaussian
/// bumps near the middle of a long periodic domain.
pub fn random_trial_fields(count: usize, seed: u64) -> Vec<PolarState> {
    let grid = crate::spectral::Grid1D::new(1024, 2.0 * std::f64::consts::PI * 64.0).expect("valid grid");
    let mid = grid.period() / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let field = |rng: &mut ChaCha8Rng| {
        let bumps: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| (rng.gen_range(-0.1..0.1), mid + rng.gen_range(-5.0..5.0), rng.gen_range(1.0..3.0)))
            .collect();
        SpectralField::from_fn(grid, move |x| bumps.iter().map(|&(a, c, w)| a * (-((x - c) / w).powi(2)).exp()).sum())
    };
    (0..count)
        .map(|_| PolarState { r: field(&mut rng), psi: field(&mut rng), b: field(&mut rng), time: 0.0 })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Checks that the center projection of the nonlinearity vanishes linearly
/// at `k = 0`, using the three smallest positive grid frequencies.
pub fn verify_semiderivative(split: &SpectralSplit, trials: &[PolarState], seed: u64) -> SemiderivativeReport {
    let (pc0, _) = split.projectors(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probes = [ONE, C::new(0.0, 1.0), C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))];
    let anchor_defect = probes
        .iter()
        .map(|&x| (pc0 * Vector3::new(x, ZERO, ZERO)).norm())
        .fold(0.0, f64::max);
    let mut slopes = Vec::with_capacity(trials.len());
    for s in trials {
        let g = nonlinearity_hat(s, &split.params, &split.wt);
        let grid = *s.r.grid();
        let mut ks = Vec::new();
        let mut mags = Vec::new();
        for j in 1..=3 {
            let i = grid.index_of(j).expect("small mode exists");
            let k = grid.wavenumber(i);
            let (pc, _) = split.projectors(k);
            let gk = Vector3::new(g[0].coefficients()[i], g[1].coefficients()[i], g[2].coefficients()[i]);
            ks.push(k);
            mags.push((pc * gk).norm());
        }
        let slope = if mags.iter().all(|&m| m == 0.0) { f64::INFINITY } else { loglog_slope(&ks, &mags) };
        slopes.push(slope);
    }
    let min_slope = slopes.iter().copied().fold(f64::INFINITY, f64::min);
    SemiderivativeReport { anchor_defect, slopes, min_slope }
}

/// Fitted constants of the pointwise bounds
/// `Re <V_s, Lambda V_s> <= (-d0 + d1 |k| - d2 k^2) |V_s|^2` and
/// `Re <V_c, Lambda V_c> <= d1 |k| |V_c|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsFit {
    pub d0: f64,
    pub d1: f64,
    pub d2: f64,
    pub feasible: bool,
    pub samples: usize,
}

fn rayleigh(m: &M3, v: &Vector3<C>) -> Option<f64> {
    let n2 = v.norm_squared();
    if n2 < 1e-28 {
        return None;
    }
    Some(v.dotc(&(m * v)).re / n2)
}

/// Fits the bound constants on `k_samples` with `vectors_per_k` random test
/// vectors per frequency and re-checks every sample.
pub fn fit_bounds(split: &SpectralSplit, k_samples: &[f64], vectors_per_k: usize, seed: u64) -> BoundsFit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stable = Vec::new();
    let mut center = Vec::new();
    for &k in k_samples {
        let l = split.symbol(k).matrix;
        let (pc, ps) = split.projectors(k);
        for _ in 0..vectors_per_k {
            let v = Vector3::from_fn(|_, _| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            if let Some(s) = rayleigh(&l, &(ps * v)) {
                stable.push((k.abs(), s));
            }
            if let Some(c) = rayleigh(&l, &(pc * v)) {
                center.push((k.abs(), c));
            }
        }
    }
    let p = &split.params;
    let s0 = stable
        .iter()
        .filter(|(k, _)| *k == 0.0)
        .map(|x| x.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let s0 = if s0.is_finite() { s0 } else { -split.gap };
    let d0 = -0.5 * s0;
    let d2 = 0.5 * p.a.min(1.0);
    let mut d1: f64 = 1e-12;
    for &(k, s) in &stable {
        if k > 0.0 {
            d1 = d1.max((s + d0 + d2 * k * k) / k);
        }
    }
    for &(k, c) in &center {
        if k > 0.0 {
            d1 = d1.max(c / k);
        }
    }
    let tol = 1e-12;
    let feasible = d0 > 0.0
        && d1.is_finite()
        && stable.iter().all(|&(k, s)| s <= -d0 + d1 * k - d2 * k * k + tol)
        && center.iter().all(|&(k, c)| c <= d1 * k + tol);
    BoundsFit { d0, d1, d2, feasible, samples: stable.len() + center.len() }
}

/// The linearized Whitham matrix read off the center eigenvalues at `k = 0`.
pub fn lambda2_prime0(p: &GglParams, wt: &WaveTrain) -> ([[f64; 2]; 2], WmeType) {
    let q = wt.q;
    let m = [
        [2.0 * q * (p.beta - p.alpha), p.gamma_i - p.beta * p.gamma_r],
        [-2.0 * p.d * q, p.c + p.d * p.gamma_r],
    ];
    (m, classify_matrix(&m))
}

/// `lambda / (i h)` for the two center eigenvalues at `k = h`, sorted.
pub fn center_eigenvalue_slopes(p: &GglParams, wt: &WaveTrain, h: f64) -> [C; 2] {
    let ev = assemble_lambda_hat(h, p, wt).eigenvalues;
    let mut s = [ev[1] / im(h), ev[2] / im(h)];
    s.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    s
}
