//! Whitham modulation equations
//!
//! ```text
//! psi_T = (beta (2 q psi + psi^2 - gamma_r B) - 2 alpha q psi - alpha psi^2 + gamma_i B)_X
//! B_T   = (c B + d (-2 q psi - psi^2 + gamma_r B))_X
//! ```
//!
//! on the slow torus `X in [0, 2 pi)`, solved in a Gevrey scale whose strip
//! width shrinks linearly, `sigma(T) = sigma0 - eta T`.
//!
//! Two strip policies are offered. [`StripMode::Filtered`] multiplies every
//! nonzero mode by `e^{-eta dt (1+|k|)}` after each step, which damps the
//! solution itself and tames elliptic growth. [`StripMode::Shrinking`] leaves
//! the evolution untouched and lets the shrinking width enter only the
//! monitored norm; this is the right choice when the solution itself is
//! needed, e.g. for building the approximation hierarchy.

use serde::{Deserialize, Serialize};

use crate::algebra::FieldAlgebra;
use crate::error::{Error, Result};
use crate::model::{GglParams, WaveTrain};
use crate::spectral::{GevreyParams, SpectralField};

/// CFL constant for the explicit RK4 step.
pub const CFL_CONSTANT: f64 = 0.8;

/// Type of the linearized modulation system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WmeType {
    Hyperbolic,
    Elliptic,
    Degenerate,
}

/// Fluxes `(flux_psi, flux_B)`; evaluated on values, fields or jets.
pub fn wme_flux<F: FieldAlgebra>(psi: &F, b: &F, p: &GglParams, wt: &WaveTrain) -> (F, F) {
    let q = wt.q;
    let psi2 = psi.square();
    let f1 = psi
        .scale(2.0 * q * (p.beta - p.alpha))
        .axpy(p.beta - p.alpha, &psi2)
        .axpy(p.gamma_i - p.beta * p.gamma_r, b);
    let f2 = b
        .scale(p.c + p.d * p.gamma_r)
        .axpy(-2.0 * p.d * q, psi)
        .axpy(-p.d, &psi2);
    (f1, f2)
}

/// Fluxes linearized about the wave train.
pub fn wme_flux_linear<F: FieldAlgebra>(psi: &F, b: &F, p: &GglParams, wt: &WaveTrain) -> (F, F) {
    let m = wme_matrix(p, wt, 0.0);
    (psi.scale(m[0][0]).axpy(m[0][1], b), psi.scale(m[1][0]).axpy(m[1][1], b))
}

/// Argument `1 + e^{-2 rho}(-2 q psi - psi^2 + gamma_r B)` of the leading-order
/// amplitude relation `e^{2 r} = argument`.
pub fn r0_argument<F: FieldAlgebra>(psi: &F, b: &F, p: &GglParams, wt: &WaveTrain) -> F {
    let s = (-2.0 * wt.q * wt.amp2().recip(), -wt.amp2().recip(), p.gamma_r / wt.amp2());
    psi.scale(s.0).axpy(s.1, &psi.square()).axpy(s.2, b).offset(1.0)
}

/// `r0 = ln(argument) / 2` without positivity checks; see [`solve_r0`].
pub fn r0_formula<F: FieldAlgebra>(psi: &F, b: &F, p: &GglParams, wt: &WaveTrain) -> F {
    r0_argument(psi, b, p, wt).ln().scale(0.5)
}

/// Fails unless the amplitude argument is positive at every grid point.
pub fn check_r0_argument(arg: &SpectralField) -> Result<()> {
    let pts = arg.grid().points();
    for (x, v) in pts.iter().zip(arg.to_real_samples()) {
        if !(v > 0.0) {
            return Err(Error::NonPositiveAmplitude { value: v, x: *x });
        }
    }
    Ok(())
}

/// Leading-order amplitude deviation slaved to `(psi, B)`.
pub fn solve_r0(psi: &SpectralField, b: &SpectralField, p: &GglParams, wt: &WaveTrain) -> Result<SpectralField> {
    let arg = r0_argument(psi, b, p, wt);
    check_r0_argument(&arg)?;
    Ok(arg.ln().scale(0.5))
}

/// Jacobian of the fluxes at local wavenumber deviation `psi`, row by row.
pub fn wme_matrix(p: &GglParams, wt: &WaveTrain, psi: f64) -> [[f64; 2]; 2] {
    let s = wt.q + psi;
    [
        [2.0 * (p.beta - p.alpha) * s, p.gamma_i - p.beta * p.gamma_r],
        [-2.0 * p.d * s, p.c + p.d * p.gamma_r],
    ]
}

fn trace_det(m: &[[f64; 2]; 2]) -> (f64, f64) {
    (m[0][0] + m[1][1], m[0][0] * m[1][1] - m[0][1] * m[1][0])
}

/// Classification by the discriminant `tr^2 - 4 det` with relative
/// tolerance `1e-12 (tr^2 + |det|)`.
pub fn classify_matrix(m: &[[f64; 2]; 2]) -> WmeType {
    let (tr, det) = trace_det(m);
    let disc = tr * tr - 4.0 * det;
    let tol = 1e-12 * (tr * tr + det.abs());
    if disc > tol {
        WmeType::Hyperbolic
    } else if disc < -tol {
        WmeType::Elliptic
    } else {
        WmeType::Degenerate
    }
}

pub fn classify_wme(p: &GglParams, wt: &WaveTrain, psi: f64) -> WmeType {
    classify_matrix(&wme_matrix(p, wt, psi))
}

/// Spectral radius and largest imaginary part of the eigenvalues.
pub fn matrix_spectrum_bounds(m: &[[f64; 2]; 2]) -> (f64, f64) {
    let (tr, det) = trace_det(m);
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        (((tr + s) * 0.5).abs().max(((tr - s) * 0.5).abs()), 0.0)
    } else {
        (det.sqrt(), 0.5 * (-disc).sqrt())
    }
}

/// State of the modulation equations.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationState {
    pub psi: SpectralField,
    pub b: SpectralField,
    pub t: f64,
    /// Remaining strip width.
    pub sigma: f64,
}

impl ModulationState {
    pub fn new(psi: SpectralField, b: SpectralField, sigma: f64) -> Self {
        Self { psi, b, t: 0.0, sigma }
    }
}

/// Shrink rate `safety * (max_X rho(M) + max_X |Im lambda(M)|) + 1`.
pub fn estimate_eta(state: &ModulationState, p: &GglParams, wt: &WaveTrain, safety: f64) -> Result<f64> {
    if !(safety >= 1.0) {
        return Err(Error::InvalidArgument(format!("safety must be >= 1, got {safety}")));
    }
    let (mut radius, mut imag) = (0.0f64, 0.0f64);
    for v in state.psi.to_real_samples() {
        let (r, i) = matrix_spectrum_bounds(&wme_matrix(p, wt, v));
        radius = radius.max(r);
        imag = imag.max(i);
    }
    Ok(safety * (radius + imag) + 1.0)
}

/// How the shrinking strip acts on the solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StripMode {
    /// Damp nonzero modes by `e^{-eta dt (1+|k|)}` after every step.
    Filtered,
    /// Evolve unfiltered; the strip only shrinks in the monitor.
    Shrinking,
}

/// Which fluxes to evolve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FluxModel {
    Full,
    Linearized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WmeConfig {
    pub eta: f64,
    pub sigma0: f64,
    pub dt: f64,
    /// Sobolev exponent; the monitor uses `m + 1`.
    pub m: f64,
    pub smallness_bound: f64,
    pub strip_mode: StripMode,
    pub flux_model: FluxModel,
}

impl WmeConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eta", self.eta), ("sigma0", self.sigma0), ("dt", self.dt), ("smallness_bound", self.smallness_bound)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.m >= 0.0) {
            return Err(Error::InvalidArgument(format!("m must be nonnegative, got {}", self.m)));
        }
        Ok(())
    }

    /// Largest horizon the strip survives.
    pub fn horizon(&self) -> f64 {
        self.sigma0 / self.eta
    }
}

/// `||(psi, B)||` in `G^{m+1}_sigma`.
pub fn monitored_norm(psi: &SpectralField, b: &SpectralField, sigma: f64, m: f64) -> Result<f64> {
    let g = GevreyParams { sigma, m: m + 1.0 };
    Ok(psi.gevrey_norm(g)?.hypot(b.gevrey_norm(g)?))
}

/// `d/dT (psi, B)`.
pub fn wme_tendency(
    psi: &SpectralField,
    b: &SpectralField,
    p: &GglParams,
    wt: &WaveTrain,
    model: FluxModel,
) -> (SpectralField, SpectralField) {
    let (f1, f2) = match model {
        FluxModel::Full => wme_flux(psi, b, p, wt),
        FluxModel::Linearized => wme_flux_linear(psi, b, p, wt),
    };
    (f1.derivative(1), f2.derivative(1))
}

/// CFL limit `CFL_CONSTANT * dX / max wave speed` on the current state.
pub fn cfl_limit(psi: &SpectralField, p: &GglParams, wt: &WaveTrain, model: FluxModel) -> f64 {
    let speed = match model {
        FluxModel::Linearized => matrix_spectrum_bounds(&wme_matrix(p, wt, 0.0)).0,
        FluxModel::Full => psi
            .to_real_samples()
            .into_iter()
            .map(|v| matrix_spectrum_bounds(&wme_matrix(p, wt, v)).0)
            .fold(0.0, f64::max),
    };
    if speed == 0.0 {
        f64::INFINITY
    } else {
        CFL_CONSTANT * psi.grid().spacing() / speed
    }
}

/// Classical RK4 step for a pair of fields.
pub(crate) fn rk4_pair<R>(u: (&SpectralField, &SpectralField), dt: f64, rhs: R) -> (SpectralField, SpectralField)
where
    R: Fn(f64, &SpectralField, &SpectralField) -> (SpectralField, SpectralField),
{
    let (p0, b0) = u;
    let (k1p, k1b) = rhs(0.0, p0, b0);
    let (k2p, k2b) = rhs(0.5, &p0.axpy(0.5 * dt, &k1p), &b0.axpy(0.5 * dt, &k1b));
    let (k3p, k3b) = rhs(0.5, &p0.axpy(0.5 * dt, &k2p), &b0.axpy(0.5 * dt, &k2b));
    let (k4p, k4b) = rhs(1.0, &p0.axpy(dt, &k3p), &b0.axpy(dt, &k3b));
    let w = dt / 6.0;
    let psi = p0.axpy(w, &k1p).axpy(2.0 * w, &k2p).axpy(2.0 * w, &k3p).axpy(w, &k4p);
    let b = b0.axpy(w, &k1b).axpy(2.0 * w, &k2b).axpy(2.0 * w, &k3b).axpy(w, &k4b);
    (psi, b)
}

pub(crate) fn apply_strip(u: SpectralField, cfg: &WmeConfig, dt: f64) -> SpectralField {
    match cfg.strip_mode {
        StripMode::Filtered => u.gevrey_filter_nonzero_modes(cfg.eta, dt),
        StripMode::Shrinking => u,
    }
}

pub(crate) fn all_finite(u: &SpectralField) -> bool {
    u.coefficients().iter().all(|c| c.re.is_finite() && c.im.is_finite())
}

/// One step of size `dt` (usually `config.dt`).
pub fn wme_step_dt(state: &ModulationState, p: &GglParams, wt: &WaveTrain, cfg: &WmeConfig, dt: f64) -> Result<ModulationState> {
    let sigma = state.sigma - cfg.eta * dt;
    let time = state.t + dt;
    if sigma <= 0.0 {
        return Err(Error::StripExhausted { time, sigma });
    }
    let limit = cfl_limit(&state.psi, p, wt, cfg.flux_model);
    if dt > limit {
        return Err(Error::CflViolated { dt, limit });
    }
    let (psi, b) = rk4_pair((&state.psi, &state.b), dt, |_, u, v| wme_tendency(u, v, p, wt, cfg.flux_model));
    let psi = apply_strip(psi, cfg, dt);
    let b = apply_strip(b, cfg, dt);
    if !(all_finite(&psi) && all_finite(&b)) {
        return Err(Error::BlowUp { time });
    }
    Ok(ModulationState { psi, b, t: time, sigma })
}

pub fn wme_step(state: &ModulationState, p: &GglParams, wt: &WaveTrain, cfg: &WmeConfig) -> Result<ModulationState> {
    wme_step_dt(state, p, wt, cfg, cfg.dt)
}

/// Step sizes that land exactly on each target time.
pub(crate) fn step_schedule(t0: f64, targets: &[f64], dt: f64) -> Vec<(f64, bool)> {
    let mut out = Vec::new();
    let mut t = t0;
    for &target in targets {
        let span = target - t;
        if span > 1e-12 {
            let n = (span / dt - 1e-9).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for i in 0..n {
                out.push((h, i + 1 == n));
            }
        } else {
            out.push((0.0, true));
        }
        t = target;
    }
    out
}

/// Result of a dense solve: every step plus the indices of the samples.
#[derive(Debug, Clone)]
pub struct DenseSolution {
    pub steps: Vec<ModulationState>,
    pub sample_indices: Vec<usize>,
    /// Monitored norm at every step.
    pub monitor: Vec<f64>,
}

impl DenseSolution {
    pub fn samples(&self) -> Vec<ModulationState> {
        self.sample_indices.iter().map(|&i| self.steps[i].clone()).collect()
    }
}

fn check_times(t0: f64, t_end: f64, sample_times: &[f64]) -> Result<Vec<f64>> {
    let targets: Vec<f64> = if sample_times.is_empty() { vec![t_end] } else { sample_times.to_vec() };
    let mut prev = t0;
    for &t in &targets {
        if t < prev - 1e-12 || t > t_end + 1e-12 {
            return Err(Error::TimeOutOfRange { time: t, start: t0, end: t_end });
        }
        prev = t;
    }
    Ok(targets)
}

/// Integrates to `t_end`, keeping every step.
pub fn wme_solve_dense(
    initial: &ModulationState,
    p: &GglParams,
    wt: &WaveTrain,
    cfg: &WmeConfig,
    t_end: f64,
    sample_times: &[f64],
) -> Result<DenseSolution> {
    cfg.validate()?;
    let sigma_end = initial.sigma - cfg.eta * (t_end - initial.t);
    if sigma_end <= 0.0 {
        return Err(Error::StripExhausted { time: t_end, sigma: sigma_end });
    }
    let targets = check_times(initial.t, t_end, sample_times)?;
    let norm0 = monitored_norm(&initial.psi, &initial.b, initial.sigma, cfg.m)?;
    if norm0 > cfg.smallness_bound {
        return Err(Error::SmallnessViolated { time: initial.t, norm: norm0, bound: cfg.smallness_bound });
    }
    let mut steps = vec![initial.clone()];
    let mut monitor = vec![norm0];
    let mut sample_indices = Vec::with_capacity(targets.len());
    let mut state = initial.clone();
    let mut target = targets.iter();
    for (h, lands) in step_schedule(initial.t, &targets, cfg.dt) {
        if h > 0.0 {
            state = wme_step_dt(&state, p, wt, cfg, h)?;
            let norm = monitored_norm(&state.psi, &state.b, state.sigma, cfg.m)?;
            if norm > cfg.smallness_bound {
                return Err(Error::SmallnessViolated { time: state.t, norm, bound: cfg.smallness_bound });
            }
            steps.push(state.clone());
            monitor.push(norm);
        }
        if lands {
            let t = *target.next().expect("schedule matches targets");
            let last = steps.len() - 1;
            steps[last].t = t;
            state.t = t;
            sample_indices.push(last);
        }
    }
    Ok(DenseSolution { steps, sample_indices, monitor })
}

/// Snapshots of the solution at `sample_times` (an empty list samples
/// `t_end`).
pub fn wme_solve(
    initial: &ModulationState,
    p: &GglParams,
    wt: &WaveTrain,
    cfg: &WmeConfig,
    t_end: f64,
    sample_times: &[f64],
) -> Result<Vec<ModulationState>> {
    Ok(wme_solve_dense(initial, p, wt, cfg, t_end, sample_times)?.samples())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::wavetrain_from_q;
    use crate::spectral::Grid1D;
    use nalgebra::Matrix2;
    use std::f64::consts::PI;

    fn setup() -> (GglParams, WaveTrain, Grid1D) {
        let p = GglParams::default();
        let wt = wavetrain_from_q(&p, 0.0).unwrap();
        (p, wt, Grid1D::new(64, 2.0 * PI).unwrap())
    }

    fn cfg() -> WmeConfig {
        WmeConfig {
            eta: 0.5,
            sigma0: 0.28,
            dt: 0.005,
            m: 2.0,
            smallness_bound: 0.25,
            strip_mode: StripMode::Filtered,
            flux_model: FluxModel::Full,
        }
    }

    #[test]
    fn flux_examples() {
        let (p, wt, _) = setup();
        assert_eq!(wme_flux(&0.0, &0.0, &p, &wt), (0.0, 0.0));
        let (psi, b) = (0.3, -0.2);
        let (f1, _) = wme_flux(&psi, &b, &p, &wt);
        let expected = (p.beta - p.alpha) * psi * psi + (p.gamma_i - p.beta * p.gamma_r) * b;
        assert!((f1 - expected).abs() < 1e-15);

        let wq = wavetrain_from_q(&p, 0.4).unwrap();
        let (f1, f2) = wme_flux(&psi, &b, &p, &wq);
        let q = 0.4;
        let e1 = p.beta * (2.0 * q * psi + psi * psi - p.gamma_r * b) - 2.0 * p.alpha * q * psi - p.alpha * psi * psi + p.gamma_i * b;
        let e2 = p.c * b + p.d * (-2.0 * q * psi - psi * psi + p.gamma_r * b);
        assert!((f1 - e1).abs() < 1e-15 && (f2 - e2).abs() < 1e-15);
    }

    #[test]
    fn constant_states_have_no_tendency() {
        let (p, wt, g) = setup();
        let (dp, db) = wme_tendency(&SpectralField::constant(g, 0.1), &SpectralField::constant(g, -0.2), &p, &wt, FluxModel::Full);
        assert!(dp.l2_norm() < 1e-16 && db.l2_norm() < 1e-16);
    }

    #[test]
    fn r0_examples() {
        let (p, wt, g) = setup();
        let z = SpectralField::zeros(g, crate::spectral::FieldKind::Real);
        assert!(solve_r0(&z, &z, &p, &wt).unwrap().l2_norm() < 1e-16);
        let r = solve_r0(&z, &SpectralField::constant(g, 0.1), &p, &wt).unwrap();
        assert!((r.mean().re - 0.5 * 1.04f64.ln()).abs() < 1e-15);
        let big = SpectralField::from_fn(g, |x| 1.5 * x.sin());
        assert!(matches!(solve_r0(&big, &z, &p, &wt), Err(Error::NonPositiveAmplitude { .. })));
    }

    #[test]
    fn r0_solves_amplitude_relation() {
        let p = GglParams::default();
        let wt = wavetrain_from_q(&p, 0.3).unwrap();
        let g = Grid1D::new(64, 2.0 * PI).unwrap();
        let psi = SpectralField::from_fn(g, |x| 0.1 * x.sin() + 0.05 * (2.0 * x).cos());
        let b = SpectralField::from_fn(g, |x| 0.08 * x.cos());
        let r = solve_r0(&psi, &b, &p, &wt).unwrap();
        let (ps, bs, rs) = (psi.to_real_samples(), b.to_real_samples(), r.to_real_samples());
        let worst = (0..64)
            .map(|i| {
                let v = -2.0 * wt.q * ps[i] - ps[i] * ps[i] + wt.amp2() * (1.0 - (2.0 * rs[i]).exp()) + p.gamma_r * bs[i];
                v.abs()
            })
            .fold(0.0, f64::max);
        assert!(worst < 1e-12);
    }

    fn oracle_type(m: [[f64; 2]; 2]) -> WmeType {
        let a = Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]);
        let ev = a.complex_eigenvalues();
        let scale = m.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
        if (ev[0] - ev[1]).norm() <= 1e-6 * scale {
            WmeType::Degenerate
        } else if ev[0].im.abs() > 1e-9 * scale {
            WmeType::Elliptic
        } else {
            WmeType::Hyperbolic
        }
    }

    #[test]
    fn classification_examples() {
        let base = GglParams::default();
        let p = GglParams { d: 0.0, gamma_i: base.beta * base.gamma_r, ..base };
        let wt = wavetrain_from_q(&p, 0.3).unwrap();
        assert_eq!(classify_wme(&p, &wt, 0.1), WmeType::Hyperbolic);

        let p = GglParams { alpha: 0.3, beta: 0.3, d: 1.0, gamma_r: 0.0, c: 0.0, gamma_i: 1.0, a: 1.0 };
        let w0 = wavetrain_from_q(&p, 0.0).unwrap();
        assert_eq!(classify_wme(&p, &w0, 0.0), WmeType::Degenerate);

        let p = GglParams { alpha: 0.0, beta: 0.0, c: 0.0, gamma_r: 0.0, d: 1.0, gamma_i: -1.0, a: 1.0 };
        let w = wavetrain_from_q(&p, 0.5).unwrap();
        let m = wme_matrix(&p, &w, 0.0);
        assert_eq!(classify_wme(&p, &w, 0.0), oracle_type(m));
        let p = GglParams { gamma_i: 1.0, ..p };
        assert_eq!(classify_wme(&p, &w, 0.0), WmeType::Elliptic);
        assert_eq!(oracle_type(wme_matrix(&p, &w, 0.0)), WmeType::Elliptic);
    }

    #[test]
    fn eta_examples() {
        let p = GglParams { alpha: 0.0, beta: 0.0, gamma_r: 0.0, gamma_i: 0.0, a: 1.0, c: 0.0, d: 0.0 };
        let wt = wavetrain_from_q(&p, 0.0).unwrap();
        let g = Grid1D::new(16, 2.0 * PI).unwrap();
        let z = ModulationState::new(SpectralField::zeros(g, crate::spectral::FieldKind::Real), SpectralField::zeros(g, crate::spectral::FieldKind::Real), 1.0);
        assert_eq!(estimate_eta(&z, &p, &wt, 2.0).unwrap(), 1.0);

        let p = GglParams::default();
        let wt = wavetrain_from_q(&p, 0.2).unwrap();
        let s = ModulationState::new(SpectralField::constant(g, 0.1), SpectralField::constant(g, 0.0), 1.0);
        let m = wme_matrix(&p, &wt, 0.1);
        let ev = Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]).complex_eigenvalues();
        let radius = ev[0].norm().max(ev[1].norm());
        let imag = ev[0].im.abs().max(ev[1].im.abs());
        let e1 = estimate_eta(&s, &p, &wt, 1.0).unwrap();
        assert!((e1 - (radius + imag + 1.0)).abs() < 1e-12);
        assert!(estimate_eta(&s, &p, &wt, 2.0).unwrap() >= e1);
        assert!(estimate_eta(&s, &p, &wt, 0.5).is_err());
    }

    #[test]
    fn step_examples() {
        let (p, wt, g) = setup();
        let z = ModulationState::new(SpectralField::zeros(g, crate::spectral::FieldKind::Real), SpectralField::zeros(g, crate::spectral::FieldKind::Real), 0.28);
        let n = wme_step(&z, &p, &wt, &cfg()).unwrap();
        assert_eq!(n.psi.l2_norm() + n.b.l2_norm(), 0.0);
        assert!((n.sigma - (0.28 - 0.5 * 0.005)).abs() < 1e-15);

        let c = ModulationState::new(SpectralField::constant(g, 0.02), SpectralField::constant(g, -0.03), 0.28);
        let n = wme_step(&c, &p, &wt, &cfg()).unwrap();
        assert_eq!(n.psi.mean(), c.psi.mean());
        assert_eq!(n.b.mean(), c.b.mean());
        assert!(n.psi.coefficients()[1..].iter().all(|v| v.norm() < 1e-18));
    }

    #[test]
    fn step_preserves_means() {
        let (p, wt, g) = setup();
        let s = ModulationState::new(
            SpectralField::from_fn(g, |x| 0.05 * x.sin() + 0.01),
            SpectralField::from_fn(g, |x| 0.05 * x.cos() - 0.02),
            0.28,
        );
        let mut n = s.clone();
        for _ in 0..20 {
            n = wme_step(&n, &p, &wt, &cfg()).unwrap();
        }
        assert!((n.psi.mean() - s.psi.mean()).norm() < 1e-14);
        assert!((n.b.mean() - s.b.mean()).norm() < 1e-14);
    }

    #[test]
    fn strip_exhaustion_and_cfl() {
        let (p, wt, g) = setup();
        let s = ModulationState::new(SpectralField::from_fn(g, |x| 0.01 * x.sin()), SpectralField::constant(g, 0.0), 0.001);
        assert!(matches!(wme_step(&s, &p, &wt, &cfg()), Err(Error::StripExhausted { .. })));
        let s = ModulationState { sigma: 0.28, ..s };
        let big_dt = WmeConfig { dt: 1.0, eta: 0.01, ..cfg() };
        assert!(matches!(wme_step(&s, &p, &wt, &big_dt), Err(Error::CflViolated { .. })));
        assert!(matches!(
            wme_solve(&s, &p, &wt, &cfg(), 1.0, &[]),
            Err(Error::StripExhausted { .. })
        ));
    }

    #[test]
    fn solve_zero_and_constant() {
        let (p, wt, g) = setup();
        let z = ModulationState::new(SpectralField::zeros(g, crate::spectral::FieldKind::Real), SpectralField::zeros(g, crate::spectral::FieldKind::Real), 0.28);
        let out = wme_solve(&z, &p, &wt, &cfg(), 0.5, &[0.1, 0.5]).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out.iter().all(|s| s.psi.l2_norm() + s.b.l2_norm() == 0.0));
        assert!((out[1].t - 0.5).abs() < 1e-15);

        let c = ModulationState::new(SpectralField::constant(g, 0.02), SpectralField::constant(g, 0.01), 0.28);
        let out = wme_solve(&c, &p, &wt, &cfg(), 0.5, &[]).unwrap();
        assert!(out[0].psi.sub(&c.psi).l2_norm() < 1e-16);
    }

    #[test]
    fn smallness_is_enforced() {
        let (p, wt, g) = setup();
        let s = ModulationState::new(SpectralField::from_fn(g, |x| 0.5 * x.sin()), SpectralField::constant(g, 0.0), 0.28);
        assert!(matches!(wme_solve(&s, &p, &wt, &cfg(), 0.1, &[]), Err(Error::SmallnessViolated { .. })));
    }
}
