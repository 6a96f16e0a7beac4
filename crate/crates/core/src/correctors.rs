//! Order-0 and order-1 approximations of the long-wave modulation system.
//!
//! The expansion `r = r0 + eps r1`, `(psi, B) = u0 + eps u1` is inserted into
//! the scaled modulation system. At order `eps^0`, `u0` solves the Whitham
//! system and `r0` is slaved to it. At order `eps^1`,
//!
//! ```text
//! 2 e^{2rho} e^{2r0} r1 = -r0_T - alpha psi0' - 2 q psi1 - 2 psi0 psi1
//!                         - 2 alpha q r0' - 2 alpha psi0 r0' + gamma_r B1
//! psi1_T = psi0'' - 2 beta e^{2rho} (e^{2r0} r1)' - 2 alpha q psi1'
//!          - 2 alpha (psi0 psi1)' + 2 q r0'' + 2 (psi0 r0')' + gamma_i B1'
//! B1_T   = a B0'' + c B1' + 2 d e^{2rho} (e^{2r0} r1)'
//! ```
//!
//! with `u1 = 0` initially. Time derivatives needed by the residuals are
//! computed from the evolution equations through time jets.

use std::sync::Arc;

use num_complex::Complex64;

use crate::algebra::{FieldAlgebra, Jet};
use crate::error::{Error, Result};
use crate::model::{modulation_rhs, AbState, GglParams, PolarState, WaveTrain};
use crate::spectral::{FieldKind, GevreyParams, Grid1D, SpectralField};
use crate::wme::{
    all_finite, apply_strip, check_r0_argument, r0_argument, r0_formula, wme_flux,
    wme_solve_dense, ModulationState, WmeConfig,
};

/// Tolerance on the mean local wavenumber when integrating the phase.
pub const WINDING_TOLERANCE: f64 = 1e-12;

/// `d r0 / dT` by the chain rule through the amplitude relation.
pub fn time_derivative_r0(state: &ModulationState, p: &GglParams, wt: &WaveTrain) -> Result<SpectralField> {
    let arg = r0_argument(&state.psi, &state.b, p, wt);
    check_r0_argument(&arg)?;
    let (f1, f2) = wme_flux(&state.psi, &state.b, p, wt);
    let (psi_t, b_t) = (f1.derivative(1), f2.derivative(1));
    let num = psi_t
        .scale(-2.0 * wt.q)
        .axpy(-2.0, &state.psi.mul(&psi_t))
        .axpy(p.gamma_r, &b_t);
    Ok(num.mul(&arg.recip()).scale(0.5 / wt.amp2()))
}

/// `r1` from the order-`eps` balance of the amplitude equation. `forcing`
/// scales the part independent of `(psi1, B1)` and is 1 for the actual
/// hierarchy.
#[allow(clippy::too_many_arguments)]
pub fn corrector1_r_generic<F: FieldAlgebra>(
    psi1: &F,
    b1: &F,
    psi0: &F,
    r0: &F,
    r0_t: &F,
    p: &GglParams,
    wt: &WaveTrain,
    forcing: f64,
) -> F {
    let r0x = r0.dx();
    let source = r0_t
        .scale(-1.0)
        .axpy(-p.alpha, &psi0.dx())
        .axpy(-2.0 * p.alpha * wt.q, &r0x)
        .axpy(-2.0 * p.alpha, &psi0.mul(&r0x))
        .scale(forcing);
    let num = source
        .axpy(-2.0 * wt.q, psi1)
        .axpy(-2.0, &psi0.mul(psi1))
        .axpy(p.gamma_r, b1);
    num.mul(&r0.scale(-2.0).exp()).scale(0.5 / wt.amp2())
}

/// Order-`eps` tendencies `(psi1_T, B1_T)`.
#[allow(clippy::too_many_arguments)]
pub fn corrector1_rhs_generic<F: FieldAlgebra>(
    psi1: &F,
    b1: &F,
    r1: &F,
    psi0: &F,
    b0: &F,
    r0: &F,
    p: &GglParams,
    wt: &WaveTrain,
    forcing: f64,
) -> (F, F) {
    let q = wt.q;
    let r0x = r0.dx();
    let flux_r1 = r0.scale(2.0).exp().mul(r1).dx();
    let psi_src = psi0.dxn(2).axpy(2.0 * q, &r0x.dx()).axpy(2.0, &psi0.mul(&r0x).dx()).scale(forcing);
    let dpsi = psi_src
        .axpy(-2.0 * p.beta * wt.amp2(), &flux_r1)
        .axpy(-2.0 * p.alpha * q, &psi1.dx())
        .axpy(-2.0 * p.alpha, &psi0.mul(psi1).dx())
        .axpy(p.gamma_i, &b1.dx());
    let db = b0
        .dxn(2)
        .scale(p.a * forcing)
        .axpy(p.c, &b1.dx())
        .axpy(2.0 * p.d * wt.amp2(), &flux_r1);
    (dpsi, db)
}

/// Base quantities at one slow time.
#[derive(Debug, Clone)]
pub struct BaseFields {
    pub psi0: SpectralField,
    pub b0: SpectralField,
    pub r0: SpectralField,
    pub r0_t: SpectralField,
}

impl BaseFields {
    pub fn new(state: &ModulationState, p: &GglParams, wt: &WaveTrain) -> Result<Self> {
        let arg = r0_argument(&state.psi, &state.b, p, wt);
        check_r0_argument(&arg)?;
        Ok(Self {
            psi0: state.psi.clone(),
            b0: state.b.clone(),
            r0: arg.ln().scale(0.5),
            r0_t: time_derivative_r0(state, p, wt)?,
        })
    }
}

pub fn corrector1_r(psi1: &SpectralField, b1: &SpectralField, base: &BaseFields, p: &GglParams, wt: &WaveTrain) -> SpectralField {
    corrector1_r_generic(psi1, b1, &base.psi0, &base.r0, &base.r0_t, p, wt, 1.0)
}

fn corrector1_tendency(
    psi1: &SpectralField,
    b1: &SpectralField,
    base: &BaseFields,
    p: &GglParams,
    wt: &WaveTrain,
    forcing: f64,
) -> (SpectralField, SpectralField) {
    let r1 = corrector1_r_generic(psi1, b1, &base.psi0, &base.r0, &base.r0_t, p, wt, forcing);
    corrector1_rhs_generic(psi1, b1, &r1, &base.psi0, &base.b0, &base.r0, p, wt, forcing)
}

/// `(psi1_T, B1_T)` at a base state.
pub fn corrector1_rhs(
    psi1: &SpectralField,
    b1: &SpectralField,
    base: &BaseFields,
    p: &GglParams,
    wt: &WaveTrain,
) -> (SpectralField, SpectralField) {
    corrector1_tendency(psi1, b1, base, p, wt, 1.0)
}

fn wme_rate(s: &ModulationState, p: &GglParams, wt: &WaveTrain) -> (SpectralField, SpectralField) {
    let (f1, f2) = wme_flux(&s.psi, &s.b, p, wt);
    (f1.derivative(1), f2.derivative(1))
}

/// Cubic Hermite value at `theta in [0, 1]` of an interval of length `h`.
fn hermite(u0: &SpectralField, d0: &SpectralField, u1: &SpectralField, d1: &SpectralField, h: f64, theta: f64) -> SpectralField {
    let t2 = theta * theta;
    let t3 = t2 * theta;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + theta;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    u0.scale(h00).axpy(h * h10, d0).axpy(h01, u1).axpy(h * h11, d1)
}

fn base_midpoint(a: &ModulationState, b: &ModulationState, p: &GglParams, wt: &WaveTrain) -> ModulationState {
    let h = b.t - a.t;
    let (da_p, da_b) = wme_rate(a, p, wt);
    let (db_p, db_b) = wme_rate(b, p, wt);
    ModulationState {
        psi: hermite(&a.psi, &da_p, &b.psi, &db_p, h, 0.5),
        b: hermite(&a.b, &da_b, &b.b, &db_b, h, 0.5),
        t: 0.5 * (a.t + b.t),
        sigma: 0.5 * (a.sigma + b.sigma),
    }
}

/// One RK4 step of the corrector between two consecutive base states. The
/// base at the half step is the Hermite cubic through the end states.
pub fn corrector1_step(
    u1: (&SpectralField, &SpectralField),
    start: &ModulationState,
    end: &ModulationState,
    p: &GglParams,
    wt: &WaveTrain,
    cfg: &WmeConfig,
) -> Result<(SpectralField, SpectralField)> {
    corrector1_step_forced(u1, start, end, p, wt, cfg, 1.0)
}

#[allow(clippy::too_many_arguments)]
fn corrector1_step_forced(
    u1: (&SpectralField, &SpectralField),
    start: &ModulationState,
    end: &ModulationState,
    p: &GglParams,
    wt: &WaveTrain,
    cfg: &WmeConfig,
    forcing: f64,
) -> Result<(SpectralField, SpectralField)> {
    let dt = end.t - start.t;
    let bases = [
        BaseFields::new(start, p, wt)?,
        BaseFields::new(&base_midpoint(start, end, p, wt), p, wt)?,
        BaseFields::new(end, p, wt)?,
    ];
    let (psi, b) = crate::wme::rk4_pair(u1, dt, |stage, x, y| {
        let base = if stage == 0.0 { &bases[0] } else if stage == 1.0 { &bases[2] } else { &bases[1] };
        corrector1_tendency(x, y, base, p, wt, forcing)
    });
    let psi = apply_strip(psi, cfg, dt);
    let b = apply_strip(b, cfg, dt);
    if !(all_finite(&psi) && all_finite(&b)) {
        return Err(Error::BlowUp { time: end.t });
    }
    Ok((psi, b))
}

/// Corrector along a dense base trajectory, from zero data; one entry per
/// base step.
pub fn corrector1_solve(
    base: &[ModulationState],
    p: &GglParams,
    wt: &WaveTrain,
    cfg: &WmeConfig,
) -> Result<Vec<(SpectralField, SpectralField)>> {
    corrector1_solve_forced(base, p, wt, cfg, 1.0)
}

fn corrector1_solve_forced(
    base: &[ModulationState],
    p: &GglParams,
    wt: &WaveTrain,
    cfg: &WmeConfig,
    forcing: f64,
) -> Result<Vec<(SpectralField, SpectralField)>> {
    let grid = *base[0].psi.grid();
    let zero = SpectralField::zeros(grid, FieldKind::Real);
    let mut out = vec![(zero.clone(), zero)];
    for w in base.windows(2) {
        if w[1].sigma <= 0.0 {
            return Err(Error::StripExhausted { time: w[1].t, sigma: w[1].sigma });
        }
        let last = out.last().expect("nonempty");
        let next = if w[1].t > w[0].t {
            corrector1_step_forced((&last.0, &last.1), &w[0], &w[1], p, wt, cfg, forcing)?
        } else {
            last.clone()
        };
        out.push(next);
    }
    Ok(out)
}

/// Base (and corrector) sampled at fixed slow times; independent of `eps`.
#[derive(Debug, Clone)]
pub struct HierarchyTrajectory {
    pub params: GglParams,
    pub wt: WaveTrain,
    pub times: Vec<f64>,
    pub base: Vec<ModulationState>,
    pub corrector: Option<Vec<(SpectralField, SpectralField)>>,
    /// Monitored Gevrey norm of the base at every step of the solve.
    pub monitor: Vec<f64>,
}

impl HierarchyTrajectory {
    /// Solves the Whitham system (and, if `with_corrector`, the order-1
    /// corrector) and keeps the states at `sample_times`.
    pub fn solve(
        initial: &ModulationState,
        p: &GglParams,
        wt: &WaveTrain,
        cfg: &WmeConfig,
        t_end: f64,
        sample_times: &[f64],
        with_corrector: bool,
    ) -> Result<Self> {
        let dense = wme_solve_dense(initial, p, wt, cfg, t_end, sample_times)?;
        let corrector = if with_corrector {
            let all = corrector1_solve(&dense.steps, p, wt, cfg)?;
            Some(dense.sample_indices.iter().map(|&i| all[i].clone()).collect())
        } else {
            None
        };
        let base = dense.samples();
        Ok(Self {
            params: *p,
            wt: *wt,
            times: base.iter().map(|s| s.t).collect(),
            base,
            corrector,
            monitor: dense.monitor,
        })
    }

    pub fn slow_grid(&self) -> Grid1D {
        *self.base[0].psi.grid()
    }

    fn index_of(&self, t: f64) -> Result<usize> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
            .ok_or(Error::TimeOutOfRange { time: t, start: self.times[0], end: *self.times.last().expect("nonempty") })
    }
}

/// An order-`n` approximation (`n` in {0, 1}) at scale `epsilon`.
#[derive(Debug, Clone)]
pub struct HierarchySolution {
    order: u8,
    epsilon: f64,
    traj: Arc<HierarchyTrajectory>,
}

impl HierarchySolution {
    pub fn new(order: u8, epsilon: f64, traj: Arc<HierarchyTrajectory>) -> Result<Self> {
        if order > 1 {
            return Err(Error::InvalidArgument(format!("orders 0 and 1 are supported, got {order}")));
        }
        if order == 1 && traj.corrector.is_none() {
            return Err(Error::InvalidArgument("order 1 needs a corrector trajectory".into()));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        Ok(Self { order, epsilon, traj })
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn trajectory(&self) -> &HierarchyTrajectory {
        &self.traj
    }

    /// Corrector samples, present exactly for order 1.
    pub fn corrector(&self) -> Option<&[(SpectralField, SpectralField)]> {
        if self.order == 1 {
            self.traj.corrector.as_deref()
        } else {
            None
        }
    }
}

/// Norms of the residuals of the scaled modulation system.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ResidualReport {
    pub res_r_norm: f64,
    pub res_u_norm: f64,
    pub norm_spec: GevreyParams,
    pub t: f64,
}

/// Jets `(psi0, B0)` up to `order` time derivatives, from the Whitham system.
pub fn base_jets(psi: &SpectralField, b: &SpectralField, order: usize, p: &GglParams, wt: &WaveTrain) -> (Jet<SpectralField>, Jet<SpectralField>) {
    let mut jp = Jet::constant(psi.clone());
    let mut jb = Jet::constant(b.clone());
    for n in 0..order {
        let (f1, f2) = wme_flux(&jp, &jb, p, wt);
        jp.push(f1.term(n).derivative(1));
        jb.push(f2.term(n).derivative(1));
    }
    (jp, jb)
}

/// Inserts the order-`n` approximation at slow time `t` into the scaled
/// modulation system, keeping every power of `eps`.
pub fn residuals_scaled(h: &HierarchySolution, t: f64, norm: GevreyParams) -> Result<ResidualReport> {
    let traj = h.trajectory();
    let (p, wt) = (&traj.params, &traj.wt);
    let eps = h.epsilon;
    let i = traj.index_of(t)?;
    let s = &traj.base[i];
    check_r0_argument(&r0_argument(&s.psi, &s.b, p, wt))?;

    let (jp, jb) = base_jets(&s.psi, &s.b, if h.order == 1 { 2 } else { 1 }, p, wt);
    let jr = r0_formula(&jp, &jb, p, wt);

    let (r, psi, b, r_t, psi_t, b_t) = match h.corrector() {
        None => (
            jr.value().clone(),
            s.psi.clone(),
            s.b.clone(),
            jr.term(1).clone(),
            jp.term(1).clone(),
            jb.term(1).clone(),
        ),
        Some(corr) => {
            let (psi1, b1) = &corr[i];
            let r0_t = jr.term(1);
            let r1 = corrector1_r_generic(psi1, b1, &s.psi, jr.value(), r0_t, p, wt, 1.0);
            let (psi1_t, b1_t) = corrector1_rhs_generic(psi1, b1, &r1, &s.psi, &s.b, jr.value(), p, wt, 1.0);
            let j1p = Jet::new(vec![psi1.clone(), psi1_t.clone()]);
            let j1b = Jet::new(vec![b1.clone(), b1_t.clone()]);
            let jr1 = corrector1_r_generic(&j1p, &j1b, &jp.truncate(1), &jr.truncate(1), &jr.derivative(), p, wt, 1.0);
            (
                jr.value().axpy(eps, &r1),
                s.psi.axpy(eps, psi1),
                s.b.axpy(eps, b1),
                r0_t.axpy(eps, jr1.term(1)),
                jp.term(1).axpy(eps, &psi1_t),
                jb.term(1).axpy(eps, &b1_t),
            )
        }
    };
    let (rr, rpsi, rb) = modulation_rhs(&r, &psi, &b, eps, p, wt);
    let res_r = rr.axpy(-eps, &r_t);
    let res_psi = rpsi.sub(&psi_t);
    let res_b = rb.sub(&b_t);
    Ok(ResidualReport {
        res_r_norm: res_r.gevrey_norm(norm)?,
        res_u_norm: res_psi.gevrey_norm(norm)?.hypot(res_b.gevrey_norm(norm)?),
        norm_spec: norm,
        t,
    })
}

/// Slow fields `(r, psi, B)` of the approximation at slow time `t`,
/// cubic-Hermite interpolated between samples.
pub fn slow_ansatz(h: &HierarchySolution, t: f64) -> Result<(SpectralField, SpectralField, SpectralField)> {
    let traj = h.trajectory();
    let (p, wt) = (&traj.params, &traj.wt);
    let times = &traj.times;
    let (first, last) = (times[0], *times.last().expect("nonempty"));
    let tol = 1e-12 * last.abs().max(1.0);
    if t < first - tol || t > last + tol {
        return Err(Error::TimeOutOfRange { time: t, start: first, end: last });
    }
    let t = t.clamp(first, last);
    let j = times.partition_point(|&s| s <= t).clamp(1, times.len().max(2) - 1);
    let (state, u1) = if times.len() == 1 {
        (traj.base[0].clone(), traj.corrector.as_ref().map(|c| c[0].clone()))
    } else {
        let (a, b) = (&traj.base[j - 1], &traj.base[j]);
        let dt = b.t - a.t;
        let theta = if dt > 0.0 { (t - a.t) / dt } else { 0.0 };
        let (da_p, da_b) = wme_rate(a, p, wt);
        let (db_p, db_b) = wme_rate(b, p, wt);
        let state = ModulationState {
            psi: hermite(&a.psi, &da_p, &b.psi, &db_p, dt, theta),
            b: hermite(&a.b, &da_b, &b.b, &db_b, dt, theta),
            t,
            sigma: a.sigma + theta * (b.sigma - a.sigma),
        };
        let u1 = match h.corrector() {
            None => None,
            Some(c) => {
                let (ba, bb) = (BaseFields::new(a, p, wt)?, BaseFields::new(b, p, wt)?);
                let (ca, cb) = (&c[j - 1], &c[j]);
                let (dap, dab) = corrector1_rhs(&ca.0, &ca.1, &ba, p, wt);
                let (dbp, dbb) = corrector1_rhs(&cb.0, &cb.1, &bb, p, wt);
                Some((
                    hermite(&ca.0, &dap, &cb.0, &dbp, dt, theta),
                    hermite(&ca.1, &dab, &cb.1, &dbb, dt, theta),
                ))
            }
        };
        (state, u1)
    };
    let base = BaseFields::new(&state, p, wt)?;
    match (h.order, u1) {
        (1, Some((psi1, b1))) => {
            let r1 = corrector1_r(&psi1, &b1, &base, p, wt);
            let eps = h.epsilon;
            Ok((base.r0.axpy(eps, &r1), base.psi0.axpy(eps, &psi1), base.b0.axpy(eps, &b1)))
        }
        _ => Ok((base.r0, base.psi0, base.b0)),
    }
}

/// The approximation `(r, psi, B)(eps x, eps t)` on the fast grid at fast
/// time `t`; `fine_grid` must have period `(slow period) / eps`.
pub fn assemble_ansatz(h: &HierarchySolution, fine_grid: Grid1D, t: f64) -> Result<PolarState> {
    let slow = h.trajectory().slow_grid();
    let expected = slow.period() / h.epsilon;
    if (fine_grid.period() - expected).abs() > 1e-12 * expected {
        return Err(Error::InvalidArgument(format!(
            "fine grid period {} does not match {expected}",
            fine_grid.period()
        )));
    }
    let (r, psi, b) = slow_ansatz(h, h.epsilon * t)?;
    Ok(PolarState {
        r: r.resample(fine_grid),
        psi: psi.resample(fine_grid),
        b: b.resample(fine_grid),
        time: t,
    })
}

/// Initial data of the original system reproducing the modulation state:
/// `A = e^{rho + r} e^{i (q x - omega t + phi)}` with `phi' = psi`.
pub fn lift_to_ab(ansatz: &PolarState, wt: &WaveTrain, fine_grid: Grid1D) -> Result<AbState> {
    if *ansatz.psi.grid() != fine_grid {
        return Err(Error::InvalidArgument("ansatz does not live on the given grid".into()));
    }
    let phi = ansatz.psi.antiderivative(WINDING_TOLERANCE)?;
    let (r, phi) = (ansatz.r.to_real_samples(), phi.to_real_samples());
    let t = ansatz.time;
    let samples: Vec<Complex64> = fine_grid
        .points()
        .iter()
        .enumerate()
        .map(|(n, &x)| Complex64::new(wt.rho + r[n], wt.q * x - wt.omega * t + phi[n]).exp())
        .collect();
    Ok(AbState { a: SpectralField::from_complex(fine_grid, &samples)?, b: ansatz.b.clone(), time: t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{extract_polar, wavetrain_from_q};
    use crate::wme::{FluxModel, StripMode};
    use std::f64::consts::PI;

    fn cfg() -> WmeConfig {
        WmeConfig {
            eta: 0.5,
            sigma0: 0.4,
            dt: 0.005,
            m: 2.0,
            smallness_bound: 0.25,
            strip_mode: StripMode::Shrinking,
            flux_model: FluxModel::Full,
        }
    }

    fn slow() -> Grid1D {
        Grid1D::new(32, 2.0 * PI).unwrap()
    }

    fn smooth_state(amp: f64) -> ModulationState {
        let g = slow();
        ModulationState::new(
            SpectralField::from_fn(g, |x| amp * x.sin()),
            SpectralField::from_fn(g, |x| amp * x.cos()),
            0.4,
        )
    }

    #[test]
    fn dr0_vanishes_on_trivial_states() {
        let p = GglParams::default();
        let wt = wavetrain_from_q(&p, 0.0).unwrap();
        let g = slow();
        let c = ModulationState::new(SpectralField::constant(g, 0.1), SpectralField::constant(g, 0.05), 0.4);
        assert!(time_derivative_r0(&c, &p, &wt).unwrap().l2_norm() < 1e-16);
        let z = ModulationState::new(SpectralField::zeros(g, FieldKind::Real), SpectralField::zeros(g, FieldKind::Real), 0.4);
        assert_eq!(time_derivative_r0(&z, &p, &wt).unwrap().l2_norm(), 0.0);
    }

    #[test]
    fn dr0_matches_jet() {
        let p = GglParams::default();
        let wt = wavetrain_from_q(&p, 0.2).unwrap();
        let s = smooth_state(0.05);
        let (jp, jb) = base_jets(&s.psi, &s.b, 1, &p, &wt);
        let jr = r0_formula(&jp, &jb, &p, &wt);
        let d = time_derivative_r0(&s, &p, &wt).unwrap();
        assert!(d.sub(jr.term(1)).l2_norm() < 1e-15);
    }

    #[test]
    fn r1_zero_cases() {
        let p = GglParams::default();
        let wt = wavetrain_from_q(&p, 0.0).unwrap();
        let g = slow();
        let z = SpectralField::zeros(g, FieldKind::Real);
        let zero_base = BaseFields::new(&ModulationState::new(z.clone(), z.clone(), 0.4), &p, &wt).unwrap();
        assert_eq!(corrector1_r(&z, &z, &zero_base, &p, &wt).l2_norm(), 0.0);
        let c = ModulationState::new(SpectralField::constant(g, 0.1), SpectralField::constant(g, 0.05), 0.4);
        let cb = BaseFields::new(&c, &p, &wt).unwrap();
        assert!(corrector1_r(&z, &z, &cb, &p, &wt).l2_norm() < 1e-16);
    }

    #[test]
    fn corrector_vanishes_for_trivial_bases() {
        let p = GglParams::default();
        let wt = wavetrain_from_q(&p, 0.0).unwrap();
        let g = slow();
        for v in [0.0, 0.03] {
            let s = ModulationState::new(SpectralField::constant(g, v), SpectralField::constant(g, -v), 0.4);
            let traj = HierarchyTrajectory::solve(&s, &p, &wt, &cfg(), 0.1, &[0.05, 0.1], true).unwrap();
            for (a, b) in traj.corrector.as_ref().unwrap() {
                assert!(a.l2_norm() + b.l2_norm() < 1e-16);
            }
        }
    }

    #[test]
    fn corrector_is_linear_in_forcing() {
        let p = GglParams::default();
        let wt = wavetrain_from_q(&p, 0.0).unwrap();
        let s = smooth_state(0.04);
        // Frozen base: the same state at every step.
        let base: Vec<ModulationState> = (0..=20).map(|i| ModulationState { t: 0.005 * i as f64, ..s.clone() }).collect();
        let one = corrector1_solve_forced(&base, &p, &wt, &cfg(), 1.0).unwrap();
        let two = corrector1_solve_forced(&base, &p, &wt, &cfg(), 2.0).unwrap();
        let (a, b) = (one.last().unwrap(), two.last().unwrap());
        assert!(a.0.l2_norm() > 1e-6);
        assert!(b.0.sub(&a.0.scale(2.0)).l2_norm() < 1e-10 * a.0.l2_norm().max(1.0));
        assert!(b.1.sub(&a.1.scale(2.0)).l2_norm() < 1e-10 * a.1.l2_norm().max(1.0));
    }

    #[test]
    fn hierarchy_orders() {
        let p = GglParams::default();
        let wt = wavetrain_from_q(&p, 0.0).unwrap();
        let traj = Arc::new(HierarchyTrajectory::solve(&smooth_state(0.03), &p, &wt, &cfg(), 0.1, &[0.0, 0.1], false).unwrap());
        assert!(HierarchySolution::new(1, 0.1, traj.clone()).is_err());
        assert!(HierarchySolution::new(2, 0.1, traj.clone()).is_err());
        let h = HierarchySolution::new(0, 0.1, traj).unwrap();
        assert!(h.corrector().is_none());
    }

    #[test]
    fn zero_hierarchy_has_zero_residuals() {
        let p = GglParams::default();
        let wt = wavetrain_from_q(&p, 0.0).unwrap();
        let traj = Arc::new(HierarchyTrajectory::solve(&smooth_state(0.0), &p, &wt, &cfg(), 0.1, &[0.0, 0.1], true).unwrap());
        for order in [0, 1] {
            let h = HierarchySolution::new(order, 0.1, traj.clone()).unwrap();
            let rep = residuals_scaled(&h, 0.1, GevreyParams::sobolev(2.0)).unwrap();
            assert!(rep.res_r_norm + rep.res_u_norm < 1e-12);
        }
    }

    #[test]
    fn ansatz_examples() {
        let p = GglParams::default();
        let wt = wavetrain_from_q(&p, 0.0).unwrap();
        let g = slow();
        let eps = 0.1;
        let fine = Grid1D::new(512, 2.0 * PI / eps).unwrap();
        let c = ModulationState::new(SpectralField::constant(g, 0.02), SpectralField::constant(g, 0.01), 0.4);
        let traj = Arc::new(HierarchyTrajectory::solve(&c, &p, &wt, &cfg(), 0.1, &[0.0, 0.05, 0.1], true).unwrap());
        let h = HierarchySolution::new(1, eps, traj).unwrap();
        let a = assemble_ansatz(&h, fine, 0.7).unwrap();
        assert!((a.psi.mean().re - 0.02).abs() < 1e-15);
        assert!(a.psi.coefficients()[1..].iter().all(|v| v.norm() < 1e-15));
        assert!(matches!(assemble_ansatz(&h, fine, 1.5), Err(Error::TimeOutOfRange { .. })));

        // psi = sin X frozen by choosing a vanishing flux
        let frozen = GglParams { alpha: 0.0, beta: 0.0, gamma_r: 0.0, gamma_i: 0.0, a: 1.0, c: 0.0, d: 0.0 };
        let s = ModulationState::new(SpectralField::from_fn(g, |x| 0.5 * x.sin()), SpectralField::zeros(g, FieldKind::Real), 0.4);
        let cfg = WmeConfig { smallness_bound: 100.0, ..cfg() };
        let traj = Arc::new(HierarchyTrajectory::solve(&s, &frozen, &wt, &cfg, 0.0, &[0.0], false).unwrap());
        let h = HierarchySolution::new(0, eps, traj).unwrap();
        let a = assemble_ansatz(&h, fine, 0.0).unwrap();
        let err = fine
            .points()
            .iter()
            .zip(a.psi.to_real_samples())
            .map(|(x, v)| (0.5 * (eps * x).sin() - v).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn lift_examples() {
        let p = GglParams::default();
        let eps = 0.1;
        let fine = Grid1D::new(256, 2.0 * PI / eps).unwrap();
        let wt = wavetrain_from_q(&p, 0.5).unwrap();
        let zero = PolarState::zeros(fine, 0.0);
        let ab = lift_to_ab(&zero, &wt, fine).unwrap();
        let exact = crate::model::wavetrain_field(&wt, fine, 0.0).unwrap();
        assert!(ab.a.sub(&exact.a).l2_norm() < 1e-13);

        let shifted = PolarState { r: SpectralField::constant(fine, 0.1), ..zero.clone() };
        let ab = lift_to_ab(&shifted, &wt, fine).unwrap();
        assert!(ab.a.sub(&exact.a.scale(0.1f64.exp())).l2_norm() < 1e-13);

        let bad = PolarState { psi: SpectralField::constant(fine, 0.01), ..zero };
        assert!(matches!(lift_to_ab(&bad, &wt, fine), Err(Error::NonzeroMean { .. })));
    }

    #[test]
    fn lift_round_trip() {
        let p = GglParams::default();
        let eps = 0.1;
        let fine = Grid1D::new(256, 2.0 * PI / eps).unwrap();
        let wt = wavetrain_from_q(&p, 0.0).unwrap();
        let v = PolarState {
            r: SpectralField::from_fn(fine, |x| 0.02 * (eps * x).cos() + 0.01 * (2.0 * eps * x).sin()),
            psi: SpectralField::from_fn(fine, |x| 0.03 * (eps * x).sin() - 0.01 * (3.0 * eps * x).cos()),
            b: SpectralField::from_fn(fine, |x| 0.02 * (eps * x).cos()),
            time: 0.0,
        };
        let back = extract_polar(&lift_to_ab(&v, &wt, fine).unwrap(), &wt).unwrap();
        assert!(back.r.sub(&v.r).sup_norm() < 1e-11);
        assert!(back.psi.sub(&v.psi).sup_norm() < 1e-11);
        assert!(back.b.sub(&v.b).sup_norm() < 1e-11);
    }
}
