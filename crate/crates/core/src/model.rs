//! The coupled Ginzburg-Landau / conservation-law system
//!
//! ```text
//! A_t = (1 + i alpha) A_xx + A - (1 + i beta) A |A|^2 + (gamma_r + i gamma_i) A B
//! B_t = a B_xx + c B_x + d (|A|^2)_x
//! ```
//!
//! its wave trains `A = e^{rho - i omega t + i q x}`, `B = 0`, the polar
//! modulation system for `(r, psi, B)` and an exponential Runge-Kutta solver.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::FieldAlgebra;
use crate::error::{Error, Result};
use crate::spectral::{FieldKind, Grid1D, SpectralField};

/// Below this modulus the phase of `A` is not recoverable.
pub const PHASE_SINGULARITY_THRESHOLD: f64 = 1e-8;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Coefficients of the coupled system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GglParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma_r: f64,
    pub gamma_i: f64,
    pub a: f64,
    pub c: f64,
    pub d: f64,
}

impl Default for GglParams {
    /// The validated set used by the experiments.
    fn default() -> Self {
        Self { alpha: 0.5, beta: 0.2, gamma_r: 0.4, gamma_i: 0.3, a: 1.0, c: 0.1, d: 0.2 }
    }
}

impl GglParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha, self.beta, self.gamma_r, self.gamma_i, self.a, self.c, self.d];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("coefficients must be finite".into()));
        }
        if self.a <= 0.0 {
            return Err(Error::InvalidArgument(format!("diffusion a must be positive, got {}", self.a)));
        }
        Ok(())
    }
}

/// A member of the wave-train family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveTrain {
    pub q: f64,
    pub rho: f64,
    pub omega: f64,
    /// Background level; always 0 here.
    pub b: f64,
}

impl WaveTrain {
    /// `e^{2 rho}`.
    pub fn amp2(&self) -> f64 {
        (2.0 * self.rho).exp()
    }
}

/// Wave train with wavenumber `q` and zero background.
pub fn wavetrain_from_q(params: &GglParams, q: f64) -> Result<WaveTrain> {
    if !(q.abs() < 1.0) {
        return Err(Error::NoWaveTrain { q });
    }
    let e2rho = 1.0 - q * q;
    Ok(WaveTrain {
        q,
        rho: 0.5 * e2rho.ln(),
        omega: params.alpha * q * q + params.beta * e2rho,
        b: 0.0,
    })
}

/// State of the original system.
#[derive(Debug, Clone, PartialEq)]
pub struct AbState {
    pub a: SpectralField,
    pub b: SpectralField,
    pub time: f64,
}

/// Modulation variables: log-amplitude deviation `r`, local wavenumber
/// deviation `psi`, background `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarState {
    pub r: SpectralField,
    pub psi: SpectralField,
    pub b: SpectralField,
    pub time: f64,
}

impl PolarState {
    pub fn zeros(grid: Grid1D, time: f64) -> Self {
        let z = SpectralField::zeros(grid, FieldKind::Real);
        Self { r: z.clone(), psi: z.clone(), b: z, time }
    }
}

/// Checks that `q` winds an integer number of times around the grid.
pub fn check_period(q: f64, grid: &Grid1D) -> Result<()> {
    let windings = q * grid.period() / (2.0 * PI);
    if (windings - windings.round()).abs() > 1e-9 * windings.abs().max(1.0) {
        return Err(Error::PeriodMismatch { q, period: grid.period() });
    }
    Ok(())
}

/// The exact wave train sampled on `grid` at time `t`.
pub fn wavetrain_field(wt: &WaveTrain, grid: Grid1D, t: f64) -> Result<AbState> {
    check_period(wt.q, &grid)?;
    let a = SpectralField::from_complex_fn(grid, |x| {
        (Complex64::new(wt.rho, 0.0) + I * (wt.q * x - wt.omega * t)).exp()
    });
    let b = SpectralField::constant(grid, wt.b);
    Ok(AbState { a, b, time: t })
}

fn linear_symbols(params: &GglParams, grid: &Grid1D) -> (Vec<Complex64>, Vec<Complex64>) {
    let la = grid.symbol(|k| Complex64::new(1.0, params.alpha) * (-k * k) + 1.0);
    let lb = grid.symbol(|k| Complex64::new(-params.a * k * k, params.c * k));
    (la, lb)
}

fn nonlinear_ab(a: &SpectralField, b: &SpectralField, params: &GglParams) -> (SpectralField, SpectralField) {
    let cubic = Complex64::new(1.0, params.beta);
    let coupling = Complex64::new(params.gamma_r, params.gamma_i);
    let na = SpectralField::pointwise(&[a, b], FieldKind::Complex, |v| {
        -cubic * v[0] * v[0].norm_sqr() + coupling * v[0] * v[1].re
    });
    let mod2 = SpectralField::pointwise(&[a], FieldKind::Real, |v| Complex64::new(v[0].norm_sqr(), 0.0));
    let nb = mod2.derivative(1).scale(params.d);
    (na, nb)
}

/// Full right-hand side of the original system. The returned `AbState`
/// holds the tendencies `(A_t, B_t)`.
pub fn rhs_ab(state: &AbState, params: &GglParams) -> AbState {
    let grid = *state.a.grid();
    let (la, lb) = linear_symbols(params, &grid);
    let (na, nb) = nonlinear_ab(&state.a, &state.b, params);
    AbState {
        a: state.a.apply_symbol(&la).add(&na),
        b: state.b.apply_symbol(&lb).add(&nb),
        time: state.time,
    }
}

/// Coefficients of one ETDRK4 step of size `h` for a diagonal linear part.
#[derive(Debug)]
struct EtdCoefficients {
    e: Vec<Complex64>,
    e2: Vec<Complex64>,
    q: Vec<Complex64>,
    f1: Vec<Complex64>,
    f2: Vec<Complex64>,
    f3: Vec<Complex64>,
}

const CONTOUR_POINTS: usize = 32;

impl EtdCoefficients {
    fn new(l: &[Complex64], h: f64) -> Self {
        let roots: Vec<Complex64> = (0..CONTOUR_POINTS)
            .map(|j| Complex64::from_polar(1.0, 2.0 * PI * (j as f64 + 0.5) / CONTOUR_POINTS as f64))
            .collect();
        let n = l.len();
        let mut c = Self {
            e: Vec::with_capacity(n),
            e2: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            f1: Vec::with_capacity(n),
            f2: Vec::with_capacity(n),
            f3: Vec::with_capacity(n),
        };
        let w = h / CONTOUR_POINTS as f64;
        for &lk in l {
            let hl = lk * h;
            c.e.push(hl.exp());
            c.e2.push((hl * 0.5).exp());
            let (mut q, mut f1, mut f2, mut f3) = (Complex64::default(), Complex64::default(), Complex64::default(), Complex64::default());
            for &r in &roots {
                let z = hl + r;
                let ez = z.exp();
                let z3 = z * z * z;
                q += ((z * 0.5).exp() - 1.0) / z;
                f1 += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
                f2 += (2.0 + z + ez * (z - 2.0)) / z3;
                f3 += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
            }
            c.q.push(q * w);
            c.f1.push(f1 * w);
            c.f2.push(f2 * w);
            c.f3.push(f3 * w);
        }
        c
    }
}

/// Fourth-order exponential time differencing (Cox-Matthews scheme with
/// contour-averaged phi-functions) for `u' = L u + N(u)` with diagonal `L`.
/// Coefficients are cached per step size.
#[derive(Debug)]
pub struct Etdrk4 {
    l: Vec<Complex64>,
    cache: Mutex<HashMap<u64, Arc<EtdCoefficients>>>,
}

impl Etdrk4 {
    pub fn new(l: Vec<Complex64>) -> Self {
        Self { l, cache: Mutex::new(HashMap::new()) }
    }

    pub fn linear_symbol(&self) -> &[Complex64] {
        &self.l
    }

    fn coefficients(&self, h: f64) -> Arc<EtdCoefficients> {
        let mut cache = self.cache.lock().expect("coefficient cache poisoned");
        cache
            .entry(h.to_bits())
            .or_insert_with(|| Arc::new(EtdCoefficients::new(&self.l, h)))
            .clone()
    }

    /// One step of size `h`.
    pub fn step<N>(&self, u: &[Complex64], h: f64, nonlinear: N) -> Vec<Complex64>
    where
        N: Fn(&[Complex64]) -> Vec<Complex64>,
    {
        let c = self.coefficients(h);
        let n = u.len();
        assert_eq!(n, self.l.len());
        let nu = nonlinear(u);
        let a: Vec<Complex64> = (0..n).map(|i| c.e2[i] * u[i] + c.q[i] * nu[i]).collect();
        let na = nonlinear(&a);
        let b: Vec<Complex64> = (0..n).map(|i| c.e2[i] * u[i] + c.q[i] * na[i]).collect();
        let nb = nonlinear(&b);
        let cc: Vec<Complex64> = (0..n).map(|i| c.e2[i] * a[i] + c.q[i] * (2.0 * nb[i] - nu[i])).collect();
        let nc = nonlinear(&cc);
        (0..n)
            .map(|i| c.e[i] * u[i] + c.f1[i] * nu[i] + 2.0 * c.f2[i] * (na[i] + nb[i]) + c.f3[i] * nc[i])
            .collect()
    }
}

/// Time stepper for the original system on a fixed grid.
#[derive(Debug)]
pub struct GglStepper {
    params: GglParams,
    grid: Grid1D,
    etd: Etdrk4,
}

impl GglStepper {
    pub fn new(params: GglParams, grid: Grid1D) -> Self {
        let (mut la, lb) = linear_symbols(&params, &grid);
        la.extend(lb);
        Self { params, grid, etd: Etdrk4::new(la) }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    fn split(&self, u: &[Complex64]) -> (SpectralField, SpectralField) {
        let n = self.grid.num_modes();
        let a = SpectralField::from_coefficients(self.grid, FieldKind::Complex, u[..n].to_vec())
            .expect("stepper state length");
        let b = SpectralField::from_coefficients(self.grid, FieldKind::Real, u[n..].to_vec())
            .expect("stepper state length");
        (a, b)
    }

    /// Advances `state` by `dt`.
    pub fn step(&self, state: &AbState, dt: f64) -> Result<AbState> {
        let mut u = state.a.coefficients().to_vec();
        u.extend_from_slice(state.b.coefficients());
        let next = self.etd.step(&u, dt, |v| {
            let (a, b) = self.split(v);
            let (na, nb) = nonlinear_ab(&a, &b, &self.params);
            let mut out = na.into_coefficients();
            out.extend(nb.into_coefficients());
            out
        });
        let time = state.time + dt;
        if next.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::BlowUp { time });
        }
        let (a, b) = self.split(&next);
        Ok(AbState { a, b, time })
    }

    /// Snapshots at `sample_times` (sorted, within `[state.time, t_end]`).
    /// Steps are shortened where needed to land exactly on each sample; an
    /// empty list samples `t_end` only.
    pub fn simulate(&self, initial: &AbState, t_end: f64, dt: f64, sample_times: &[f64]) -> Result<Vec<AbState>> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        let t0 = initial.time;
        let targets: Vec<f64> = if sample_times.is_empty() { vec![t_end] } else { sample_times.to_vec() };
        let mut prev = t0;
        for &t in &targets {
            if t < prev - 1e-12 || t > t_end + 1e-12 {
                return Err(Error::TimeOutOfRange { time: t, start: t0, end: t_end });
            }
            prev = t;
        }
        let mut out = Vec::with_capacity(targets.len());
        let mut state = initial.clone();
        for &target in &targets {
            let span = target - state.time;
            if span > 1e-12 {
                let steps = (span / dt - 1e-9).ceil().max(1.0) as usize;
                let h = span / steps as f64;
                for _ in 0..steps {
                    state = self.step(&state, h)?;
                }
            }
            state.time = target;
            out.push(state.clone());
        }
        Ok(out)
    }
}

/// One exponential Runge-Kutta step of the original system.
pub fn step_etd(state: &AbState, params: &GglParams, dt: f64) -> Result<AbState> {
    GglStepper::new(*params, *state.a.grid()).step(state, dt)
}

/// Integrates the original system; see [`GglStepper::simulate`].
pub fn simulate(initial: &AbState, params: &GglParams, t_end: f64, dt: f64, sample_times: &[f64]) -> Result<Vec<AbState>> {
    GglStepper::new(*params, *initial.a.grid()).simulate(initial, t_end, dt, sample_times)
}

/// Polar modulation variables relative to `wt`:
/// `r = ln|A| - rho`, `psi = Im(A_x / A) - q`.
pub fn extract_polar(state: &AbState, wt: &WaveTrain) -> Result<PolarState> {
    let grid = *state.a.grid();
    let a = state.a.to_complex_samples();
    let ax = state.a.derivative(1).to_complex_samples();
    let points = grid.points();
    let (imin, amin) = a
        .iter()
        .map(|z| z.norm())
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    if amin < PHASE_SINGULARITY_THRESHOLD {
        return Err(Error::PhaseSingularity { min_abs: amin, x: points[imin] });
    }
    let r: Vec<f64> = a.iter().map(|z| z.norm().ln() - wt.rho).collect();
    let psi: Vec<f64> = a.iter().zip(&ax).map(|(z, zx)| (zx / z).im - wt.q).collect();
    Ok(PolarState {
        r: SpectralField::from_real(grid, &r)?,
        psi: SpectralField::from_real(grid, &psi)?,
        b: state.b.clone(),
        time: state.time,
    })
}

/// Right-hand sides of the modulation system in long-wave form with scale
/// parameter `eps`:
///
/// ```text
/// eps r_T = eps^2 r'' - eps alpha psi' + e^{2rho}(1 - e^{2r}) + eps^2 (r')^2
///           - 2 q psi - psi^2 - 2 eps alpha q r' - 2 eps alpha psi r' + gamma_r B
/// psi_T   = eps psi'' + eps^2 alpha r''' + beta e^{2rho} (1 - e^{2r})'
///           + eps^2 alpha ((r')^2)' - 2 alpha q psi' - alpha (psi^2)'
///           + 2 eps q r'' + 2 eps (psi r')' + gamma_i B'
/// B_T     = eps a B'' + c B' + d e^{2rho} (e^{2r})'
/// ```
///
/// Returns the three right-hand sides; the first is the value of `eps r_T`.
/// With `eps = 1` this is the modulation system in the original
/// coordinates.
pub fn modulation_rhs<F: FieldAlgebra>(r: &F, psi: &F, b: &F, eps: f64, p: &GglParams, wt: &WaveTrain) -> (F, F, F) {
    let e2rho = wt.amp2();
    let q = wt.q;
    let rx = r.dx();
    let e2r = r.scale(2.0).exp();
    let one_minus = e2r.scale(-1.0).offset(1.0);
    let psi2 = psi.square();
    let psi_rx = psi.mul(&rx);

    let rr = rx
        .dx()
        .scale(eps * eps)
        .axpy(-eps * p.alpha, &psi.dx())
        .axpy(e2rho, &one_minus)
        .axpy(eps * eps, &rx.square())
        .axpy(-2.0 * q, psi)
        .axpy(-1.0, &psi2)
        .axpy(-2.0 * eps * p.alpha * q, &rx)
        .axpy(-2.0 * eps * p.alpha, &psi_rx)
        .axpy(p.gamma_r, b);

    let rpsi = psi
        .dxn(2)
        .scale(eps)
        .axpy(eps * eps * p.alpha, &rx.dxn(2))
        .axpy(p.beta * e2rho, &one_minus.dx())
        .axpy(eps * eps * p.alpha, &rx.square().dx())
        .axpy(-2.0 * p.alpha * q, &psi.dx())
        .axpy(-p.alpha, &psi2.dx())
        .axpy(2.0 * eps * q, &rx.dx())
        .axpy(2.0 * eps, &psi_rx.dx())
        .axpy(p.gamma_i, &b.dx());

    let rb = b
        .dxn(2)
        .scale(eps * p.a)
        .axpy(p.c, &b.dx())
        .axpy(p.d * e2rho, &e2r.dx());

    (rr, rpsi, rb)
}

/// Tendency of the polar modulation variables in the original coordinates.
pub fn rhs_polar(state: &PolarState, params: &GglParams, wt: &WaveTrain) -> PolarState {
    let (r, psi, b) = modulation_rhs(&state.r, &state.psi, &state.b, 1.0, params, wt);
    PolarState { r, psi, b, time: state.time }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> GglParams {
        GglParams::default()
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn wavetrain_examples() {
        let p = GglParams { alpha: 0.5, beta: 0.2, ..params() };
        let w0 = wavetrain_from_q(&p, 0.0).unwrap();
        assert_eq!(w0.rho, 0.0);
        assert!((w0.omega - 0.2).abs() < 1e-15);
        let w = wavetrain_from_q(&p, 0.6).unwrap();
        assert!((w.amp2() - 0.64).abs() < 1e-14);
        assert!((w.rho - (-0.223144)).abs() < 1e-6);
        assert!((w.omega - 0.308).abs() < 1e-14);
        // dispersion identities
        assert!((w.amp2() - (1.0 - 0.36 + p.gamma_r * w.b)).abs() < 1e-14);
        assert!((w.omega - (p.alpha * 0.36 + p.beta * w.amp2() - p.gamma_i * w.b)).abs() < 1e-14);
        assert_eq!(wavetrain_from_q(&p, 1.0), Err(Error::NoWaveTrain { q: 1.0 }));
    }

    #[test]
    fn wavetrain_field_examples() {
        let p = params();
        let g = Grid1D::new(32, 2.0 * PI).unwrap();
        let w0 = wavetrain_from_q(&p, 0.0).unwrap();
        let s = wavetrain_field(&w0, g, 0.0).unwrap();
        assert!((s.a.mean() - 1.0).norm() < 1e-15);
        assert!(s.b.l2_norm() == 0.0);

        let g4 = Grid1D::new(32, 4.0 * PI).unwrap();
        let w = wavetrain_from_q(&p, 0.5).unwrap();
        let s = wavetrain_field(&w, g4, 0.0).unwrap();
        assert!((s.a.mode(1).norm() - w.rho.exp()).abs() < 1e-14);
        let later = wavetrain_field(&w, g4, 2.0 * PI / w.omega).unwrap();
        assert!(later.a.sub(&s.a).l2_norm() < 1e-12);

        let bad = wavetrain_from_q(&p, 0.3).unwrap();
        assert!(matches!(wavetrain_field(&bad, g, 0.0), Err(Error::PeriodMismatch { .. })));
    }

    #[test]
    fn rhs_on_zero_and_wavetrain() {
        let p = params();
        let g = Grid1D::new(32, 4.0 * PI).unwrap();
        let z = AbState {
            a: SpectralField::zeros(g, FieldKind::Complex),
            b: SpectralField::zeros(g, FieldKind::Real),
            time: 0.0,
        };
        let t = rhs_ab(&z, &p);
        assert_eq!(t.a.l2_norm() + t.b.l2_norm(), 0.0);

        for q in [0.0, 0.5] {
            let w = wavetrain_from_q(&p, q).unwrap();
            let s = wavetrain_field(&w, g, 0.3).unwrap();
            let t = rhs_ab(&s, &p);
            let expected = s.a.scale_complex(Complex64::new(0.0, -w.omega));
            assert!(t.a.sub(&expected).l2_norm() < 1e-12);
            assert!(t.b.l2_norm() < 1e-12);
        }
    }

    #[test]
    fn linear_modes_advance_exactly() {
        let p = GglParams { beta: 0.0, gamma_r: 0.0, gamma_i: 0.0, d: 0.0, ..params() };
        let g = Grid1D::new(16, 2.0 * PI).unwrap();
        // Small amplitude keeps the cubic term below round-off.
        let amp = 1e-9;
        let a = SpectralField::from_complex_fn(g, |x| (I * 2.0 * x).exp() * amp);
        let s = AbState { a, b: SpectralField::zeros(g, FieldKind::Real), time: 0.0 };
        let dt = 0.37;
        let next = step_etd(&s, &p, dt).unwrap();
        let factor = ((Complex64::new(1.0, p.alpha) * -4.0 + 1.0) * dt).exp();
        assert!((next.a.mode(2) / amp - factor).norm() < 1e-12);
    }

    #[test]
    fn zero_stays_zero() {
        let g = Grid1D::new(16, 2.0 * PI).unwrap();
        let s = AbState {
            a: SpectralField::zeros(g, FieldKind::Complex),
            b: SpectralField::zeros(g, FieldKind::Real),
            time: 0.0,
        };
        let out = simulate(&s, &params(), 1.0, 0.1, &[]).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].a.l2_norm(), 0.0);
        assert!((out[0].time - 1.0).abs() < 1e-15);
    }

    #[test]
    fn wavetrain_step_is_phase_rotation() {
        let p = params();
        let g = Grid1D::new(32, 4.0 * PI).unwrap();
        let w = wavetrain_from_q(&p, 0.5).unwrap();
        let s = wavetrain_field(&w, g, 0.0).unwrap();
        let dt = 0.01;
        let next = step_etd(&s, &p, dt).unwrap();
        let exact = wavetrain_field(&w, g, dt).unwrap();
        let err = next.a.sub(&exact.a).l2_norm(); assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn simulate_zero_horizon_returns_initial() {
        let g = Grid1D::new(16, 2.0 * PI).unwrap();
        let w = wavetrain_from_q(&params(), 0.0).unwrap();
        let s = wavetrain_field(&w, g, 0.0).unwrap();
        let out = simulate(&s, &params(), 0.0, 0.01, &[0.0]).unwrap();
        assert_eq!(out, vec![s]);
    }

    #[test]
    fn simulate_hits_sample_times() {
        let g = Grid1D::new(16, 2.0 * PI).unwrap();
        let w = wavetrain_from_q(&params(), 0.0).unwrap();
        let s = wavetrain_field(&w, g, 0.0).unwrap();
        let out = simulate(&s, &params(), 1.0, 0.03, &[0.1, 0.55, 1.0]).unwrap();
        let times: Vec<f64> = out.iter().map(|s| s.time).collect();
        assert_eq!(times, vec![0.1, 0.55, 1.0]);
        assert!(simulate(&s, &params(), 1.0, 0.03, &[0.5, 0.2]).is_err());
    }

    #[test]
    fn extract_polar_examples() {
        let p = params();
        let g = Grid1D::new(64, 4.0 * PI).unwrap();
        let w = wavetrain_from_q(&p, 0.5).unwrap();
        let s = wavetrain_field(&w, g, 0.7).unwrap();
        let v = extract_polar(&s, &w).unwrap();
        assert!(v.r.sup_norm() < 1e-12 && v.psi.sup_norm() < 1e-12 && v.b.sup_norm() < 1e-12);

        let scaled = AbState { a: s.a.scale(0.1f64.exp()), ..s.clone() };
        let v = extract_polar(&scaled, &w).unwrap();
        assert!(v.r.add_constant(-0.1).sup_norm() < 1e-12);
        assert!(v.psi.sup_norm() < 1e-12);

        let eps = 2.0 * PI / g.period();
        let modulated = SpectralField::from_complex_fn(g, |x| {
            (Complex64::new(w.rho, 0.0) + I * (w.q * x + (eps * x).sin())).exp()
        });
        let v = extract_polar(&AbState { a: modulated, ..s.clone() }, &w).unwrap();
        let exact: Vec<f64> = g.points().iter().map(|x| eps * (eps * x).cos()).collect();
        assert!(max_diff(&v.psi.to_real_samples(), &exact) < 1e-11);

        let zero = AbState { a: SpectralField::zeros(g, FieldKind::Complex), ..s };
        assert!(matches!(extract_polar(&zero, &w), Err(Error::PhaseSingularity { .. })));
    }

    #[test]
    fn polar_rhs_examples() {
        let p = params();
        let g = Grid1D::new(32, 2.0 * PI).unwrap();
        let w = wavetrain_from_q(&p, 0.0).unwrap();
        let z = PolarState::zeros(g, 0.0);
        let t = rhs_polar(&z, &p, &w);
        assert!(t.r.l2_norm() + t.psi.l2_norm() + t.b.l2_norm() < 1e-15);

        let c = PolarState { r: SpectralField::constant(g, 0.01), ..z };
        let t = rhs_polar(&c, &p, &w);
        assert!((t.r.mean().re - w.amp2() * (1.0 - 0.02f64.exp())).abs() < 1e-15);
        assert!(t.b.mean().norm() < 1e-15);
    }

    #[test]
    fn polar_rhs_means_vanish() {
        let p = params();
        let g = Grid1D::new(64, 2.0 * PI).unwrap();
        let w = wavetrain_from_q(&p, 0.0).unwrap();
        let s = PolarState {
            r: SpectralField::from_fn(g, |x| 0.1 * x.sin() + 0.05 * (3.0 * x).cos()),
            psi: SpectralField::from_fn(g, |x| 0.2 * (2.0 * x).cos() + 0.3),
            b: SpectralField::from_fn(g, |x| 0.1 * x.cos() - 0.2),
            time: 0.0,
        };
        let t = rhs_polar(&s, &p, &w);
        assert!(t.psi.mean().norm() < 1e-15);
        assert!(t.b.mean().norm() < 1e-15);
    }
}
