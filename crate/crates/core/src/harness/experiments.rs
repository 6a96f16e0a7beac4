//! The validation experiments.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::{Matrix2, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::config::{set_param, ExperimentConfig, ExperimentKind};
use super::report::{fit_loglog_slope, Check, ErrorRecord, RunRecord, RunReport, T1Attempt};
use crate::correctors::{assemble_ansatz, lift_to_ab, residuals_scaled, HierarchySolution, HierarchyTrajectory};
use crate::error::{Error, Result};
use crate::linear_analysis::{
    build_split, center_eigenvalue_slopes, fit_bounds, lambda2_prime0, lambda_matrix, linspace, max_abs,
    random_trial_fields, rank, spectrum_curves, verify_semiderivative,
};
use crate::model::{check_period, extract_polar, wavetrain_field, wavetrain_from_q, GglParams, GglStepper, PolarState, WaveTrain};
use crate::spectral::{GevreyParams, Grid1D};
use crate::wme::{classify_wme, WmeConfig, WmeType};

pub const WAVETRAIN_TOLERANCE: f64 = 1e-8;
pub const STABILITY_TOLERANCE: f64 = 1e-8;
pub const CONSERVATION_TOLERANCE: f64 = 1e-12;
pub const RESIDUAL_SLOPE_TOLERANCE: f64 = 0.3;
/// `0.5 - 0.15`.
pub const ERROR_SLOPE_THRESHOLD: f64 = 0.35;
pub const SEMIDERIVATIVE_SLOPE: f64 = 0.9;
pub const ANCHOR_TOLERANCE: f64 = 1e-14;
pub const FD_STEP: f64 = 1e-4;
pub const FD_TOLERANCE: f64 = 1e-2;
/// Errors below this count as an exact wave train.
pub const EXACT_ERROR: f64 = 1e-8;

/// Runs one experiment; failures end up in the report.
pub fn run_experiment(cfg: &ExperimentConfig, kind: ExperimentKind) -> RunReport {
    let start = Instant::now();
    let mut report = RunReport::new(kind, cfg);
    let outcome = match kind {
        ExperimentKind::WavetrainInvariance => run_wavetrain_invariance(cfg, &mut report),
        ExperimentKind::ResidualOrder => run_residual_order(cfg, &mut report),
        ExperimentKind::ErrorScaling => run_error_scaling(cfg, &mut report),
        ExperimentKind::SpectralReport => run_spectral_report(cfg, &mut report),
        ExperimentKind::ClassifySweep => run_classify_sweep(cfg, &mut report),
    };
    if let Err(e) = outcome {
        report.error = Some(ErrorRecord::new(&e, None, None));
    }
    report.runtime_s = start.elapsed().as_secs_f64();
    report
}

fn record(label: String, key: f64, units: &str, grid_modes: Option<usize>, start: Instant, outcome: Result<f64>, eps: Option<f64>) -> RunRecord {
    let (value, error) = match outcome {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(ErrorRecord::new(&e, eps, None))),
    };
    RunRecord { label, key, value, units: units.into(), runtime_s: start.elapsed().as_secs_f64(), grid_modes, error }
}

/// Sup deviation of `(|A|, B)` from the wave train over `[0, t_end]`.
pub fn wavetrain_deviation(p: &GglParams, wt: &WaveTrain, grid: Grid1D, t_end: f64, dt: f64) -> Result<f64> {
    check_period(wt.q, &grid)?;
    let init = wavetrain_field(wt, grid, 0.0)?;
    let samples: Vec<f64> = (1..=10).map(|i| t_end * i as f64 / 10.0).collect();
    let out = GglStepper::new(*p, grid).simulate(&init, t_end, dt, &samples)?;
    let amp = wt.rho.exp();
    let mut worst: f64 = 0.0;
    for s in &out {
        let da = s.a.to_complex_samples().iter().map(|z| (z.norm() - amp).abs()).fold(0.0, f64::max);
        let db = s.b.to_real_samples().iter().map(|v| (v - wt.b).abs()).fold(0.0, f64::max);
        worst = worst.max(da).max(db);
    }
    Ok(worst)
}

pub fn run_wavetrain_invariance(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let w = &cfg.wavetrain;
    let grid = Grid1D::new(w.modes, w.period)?;
    let mut qs = vec![0.0, 0.25, 0.5];
    if !qs.contains(&w.q) {
        qs.push(w.q);
    }
    let runs: Vec<RunRecord> = qs
        .par_iter()
        .map(|&q| {
            let start = Instant::now();
            let outcome = wavetrain_from_q(&cfg.params, q)
                .and_then(|wt| wavetrain_deviation(&cfg.params, &wt, grid, w.t_end, cfg.experiment.fast_dt));
            record(format!("q={q}"), q, "sup_deviation", Some(w.modes), start, outcome, None)
        })
        .collect();
    for r in &runs {
        if let Some(v) = r.value {
            report.curve(r.key, w.t_end, v, "sup_deviation");
            report.checks.push(Check::below(&format!("deviation q={}", r.key), v, WAVETRAIN_TOLERANCE));
        }
    }
    report.runs = runs;
    report.details = json!({ "modes": w.modes, "period": w.period, "t_end": w.t_end });
    Ok(())
}

/// Spectral stability of the wave train and hyperbolicity of its Whitham
/// system.
pub fn parameter_checks(p: &GglParams, wt: &WaveTrain, k_max: f64, samples: usize) -> Vec<Check> {
    let curves = spectrum_curves(p, wt, &linspace(-k_max, k_max, samples));
    vec![
        Check::at_most("max_re_lambda", curves.max_real_part, STABILITY_TOLERANCE),
        Check::flag("hyperbolic", lambda2_prime0(p, wt).1 == WmeType::Hyperbolic),
    ]
}

/// Slow trajectory on `[0, t1]`, halving `t1` while the strip or the
/// smallness check fails.
pub fn solve_with_halving(
    cfg: &ExperimentConfig,
    wme: &WmeConfig,
    sample_count: usize,
    with_corrector: bool,
    attempts: &mut Vec<T1Attempt>,
) -> Result<(Arc<HierarchyTrajectory>, f64)> {
    let init = cfg.initial_state()?;
    let wt = cfg.wave_train()?;
    let mut t1 = cfg.experiment.t1;
    for _ in 0..=cfg.experiment.max_halvings {
        let times = linspace(0.0, t1, sample_count);
        match HierarchyTrajectory::solve(&init, &cfg.params, &wt, wme, t1, &times, with_corrector) {
            Ok(traj) => {
                attempts.push(T1Attempt { t1, error: None });
                return Ok((Arc::new(traj), t1));
            }
            Err(e @ (Error::StripExhausted { .. } | Error::SmallnessViolated { .. })) => {
                attempts.push(T1Attempt { t1, error: Some(e.to_string()) });
                t1 /= 2.0;
            }
            Err(e) => return Err(e),
        }
    }
    let last = attempts.last().and_then(|a| a.error.clone()).unwrap_or_default();
    Err(Error::InvalidArgument(format!("slow solve failed after {} halvings: {last}", cfg.experiment.max_halvings)))
}

/// Largest drift of the mean of `psi` and `B` along the slow samples.
pub fn slow_mean_drift(traj: &HierarchyTrajectory) -> f64 {
    let (p0, b0) = (traj.base[0].psi.mode(0), traj.base[0].b.mode(0));
    traj.base
        .iter()
        .map(|s| (s.psi.mode(0) - p0).norm().max((s.b.mode(0) - b0).norm()))
        .fold(0.0, f64::max)
}

pub fn run_residual_order(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let wme = cfg.wme_config()?;
    let (traj, t1) = solve_with_halving(cfg, &wme, cfg.experiment.residual_times, true, &mut report.t1_attempts)?;
    let norm = GevreyParams::sobolev(2.0);
    for order in [0u8, 1] {
        let runs: Vec<RunRecord> = cfg
            .experiment
            .epsilons
            .par_iter()
            .map(|&eps| {
                let start = Instant::now();
                let outcome = HierarchySolution::new(order, eps, traj.clone()).and_then(|h| {
                    traj.times.iter().try_fold(0.0f64, |acc, &t| Ok(acc.max(residuals_scaled(&h, t, norm)?.res_u_norm)))
                });
                let modes = Some(cfg.experiment.slow_modes);
                record(format!("order={order} eps={eps}"), eps, "residual_u_h2_max", modes, start, outcome, Some(eps))
            })
            .collect();
        let pairs: Vec<(f64, f64)> = runs.iter().filter_map(|r| r.value.map(|v| (r.key, v))).collect();
        for &(eps, v) in &pairs {
            report.curve(eps, order as f64, v, "residual_u_h2_max");
        }
        let center = order as f64 + 1.0;
        if pairs.len() == runs.len() && pairs.iter().all(|p| p.1 <= CONSERVATION_TOLERANCE) {
            report.checks.push(Check::flag(&format!("order {order} residual vanishes"), true));
        } else if let Ok(fit) = fit_loglog_slope(&pairs) {
            report.checks.push(Check::within(&format!("order {order} slope"), fit.slope, center, RESIDUAL_SLOPE_TOLERANCE));
            report.fits.push((format!("order {order}"), fit));
        } else {
            report.checks.push(Check::flag(&format!("order {order} slope fit"), false));
        }
        report.runs.extend(runs);
    }
    report.checks.push(Check::at_most("slow mean drift", slow_mean_drift(&traj), CONSERVATION_TOLERANCE));
    report.details = json!({ "t1": t1, "eta": wme.eta, "horizon": wme.horizon(), "norm": norm });
    Ok(())
}

/// Per-epsilon outcome of an error-scaling run.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingRun {
    pub epsilon: f64,
    pub fine_modes: usize,
    /// `(fast time, sup error)` at every sample.
    pub errors: Vec<(f64, f64)>,
    pub max_error: f64,
    /// Largest drift of the mean of `B` in the fast run.
    pub b_mean_drift: f64,
}

/// Max over components of the sup distance between two polar states.
pub fn polar_sup_distance(a: &PolarState, b: &PolarState) -> f64 {
    a.r.sub(&b.r).sup_norm().max(a.psi.sub(&b.psi).sup_norm()).max(a.b.sub(&b.b).sup_norm())
}

/// Simulates the lifted approximation at scale `eps` to `t1 / eps` and
/// records the sup error at the slow sample times.
pub fn scaling_run(cfg: &ExperimentConfig, traj: Arc<HierarchyTrajectory>, order: u8, eps: f64) -> Result<ScalingRun> {
    let wt = traj.wt;
    let fine = cfg.fine_grid(eps)?;
    let h = HierarchySolution::new(order, eps, traj.clone())?;
    let initial = lift_to_ab(&assemble_ansatz(&h, fine, 0.0)?, &wt, fine)?;
    let fast: Vec<f64> = traj.times.iter().map(|t| t / eps).collect();
    let t_end = *fast.last().expect("nonempty schedule");
    let out = GglStepper::new(traj.params, fine).simulate(&initial, t_end, cfg.experiment.fast_dt, &fast)?;
    let b0 = initial.b.mode(0);
    let mut errors = Vec::with_capacity(out.len());
    let mut drift: f64 = 0.0;
    for s in &out {
        drift = drift.max((s.b.mode(0) - b0).norm());
        let polar = extract_polar(s, &wt).map_err(|e| match e {
            Error::PhaseSingularity { .. } | Error::NonPositiveAmplitude { .. } => {
                Error::InvalidArgument(format!("{e} at t = {}", s.time))
            }
            other => other,
        })?;
        errors.push((s.time, polar_sup_distance(&polar, &assemble_ansatz(&h, fine, s.time)?)));
    }
    let max_error = errors.iter().map(|e| e.1).fold(0.0, f64::max);
    Ok(ScalingRun { epsilon: eps, fine_modes: fine.num_modes(), errors, max_error, b_mean_drift: drift })
}

/// Threshold rules of the error-scaling experiment from the per-epsilon maxima
/// (epsilons in decreasing order).
pub fn error_scaling_checks(maxima: &[(f64, f64)]) -> (Vec<Check>, Option<super::report::LogLogFit>) {
    let mut checks = Vec::new();
    if maxima.iter().all(|m| m.1 < EXACT_ERROR) {
        let worst = maxima.iter().map(|m| m.1).fold(0.0, f64::max);
        checks.push(Check::below("exact wave train error", worst, EXACT_ERROR));
        return (checks, None);
    }
    let monotone = maxima.windows(2).all(|w| w[1].1 <= w[0].1);
    checks.push(Check::flag("errors nonincreasing in epsilon", monotone));
    match fit_loglog_slope(maxima) {
        Ok(fit) => {
            checks.push(Check::at_least("error slope", fit.slope, ERROR_SLOPE_THRESHOLD));
            (checks, Some(fit))
        }
        Err(_) => {
            checks.push(Check::flag("error slope fit", false));
            (checks, None)
        }
    }
}

pub fn run_error_scaling(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let wt = cfg.wave_train()?;
    let pre = parameter_checks(&cfg.params, &wt, cfg.experiment.k_max, cfg.experiment.k_samples);
    let init = cfg.initial_state()?;
    let mean = init.psi.mode(0).norm();
    let ok = pre.iter().all(|c| c.passed) && mean <= CONSERVATION_TOLERANCE;
    report.checks.extend(pre);
    report.checks.push(Check::at_most("initial psi mean", mean, CONSERVATION_TOLERANCE));
    if !ok {
        return Err(Error::InvalidArgument("parameter set failed the runtime validation".into()));
    }
    let wme = cfg.wme_config()?;
    let order = cfg.experiment.order;
    let (traj, t1) = solve_with_halving(cfg, &wme, cfg.experiment.sample_count, order == 1, &mut report.t1_attempts)?;
    let results: Vec<(f64, Instant, Result<ScalingRun>)> = cfg
        .experiment
        .epsilons
        .par_iter()
        .map(|&eps| {
            let start = Instant::now();
            (eps, start, scaling_run(cfg, traj.clone(), order, eps))
        })
        .collect();
    let mut maxima = Vec::new();
    let mut drift: f64 = 0.0;
    let mut detail_runs = Vec::new();
    for (eps, start, res) in results {
        let modes = cfg.fine_grid(eps).ok().map(|g| g.num_modes());
        let value = res.as_ref().map(|r| r.max_error).map_err(Clone::clone);
        report.runs.push(record(format!("eps={eps}"), eps, "sup_error_max", modes, start, value, Some(eps)));
        if let Ok(run) = res {
            for &(t, e) in &run.errors {
                report.curve(eps, t, e, "sup_error");
            }
            report.curve(eps, order as f64, run.max_error, "sup_error_max");
            report.curve(eps, order as f64, run.max_error / eps.sqrt(), "sup_error_over_sqrt_eps");
            maxima.push((eps, run.max_error));
            drift = drift.max(run.b_mean_drift);
            detail_runs.push(json!({ "epsilon": eps, "fine_modes": run.fine_modes, "max_error": run.max_error, "b_mean_drift": run.b_mean_drift }));
        }
    }
    if maxima.len() == cfg.experiment.epsilons.len() {
        let (checks, fit) = error_scaling_checks(&maxima);
        report.checks.extend(checks);
        if let Some(fit) = fit {
            report.fits.push(("sup error".into(), fit));
        }
    }
    report.checks.push(Check::at_most("fast B mean drift", drift, CONSERVATION_TOLERANCE));
    report.checks.push(Check::at_most("slow mean drift", slow_mean_drift(&traj), CONSERVATION_TOLERANCE));
    report.details = json!({
        "t1": t1,
        "eta": wme.eta,
        "horizon": wme.horizon(),
        "order": order,
        "runs": detail_runs,
    });
    Ok(())
}

pub fn run_spectral_report(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let p = &cfg.params;
    let wt = cfg.wave_train()?;
    let e = &cfg.experiment;
    let ks = linspace(-e.k_max, e.k_max, e.k_samples);
    let curves = spectrum_curves(p, &wt, &ks);
    for (k, ev) in curves.k.iter().zip(&curves.eigenvalues) {
        for (j, z) in ev.iter().enumerate() {
            report.curve(*k, j as f64, z.0, "re_lambda");
            report.curve(*k, j as f64, z.1, "im_lambda");
        }
    }
    let e2 = wt.amp2();
    let l0 = lambda_matrix(0.0, p, &wt);
    let mut expected = nalgebra::Matrix3::<Complex64>::zeros();
    expected[(0, 0)] = Complex64::new(-2.0 * e2, 0.0);
    expected[(0, 1)] = Complex64::new(-2.0 * wt.q, 0.0);
    expected[(0, 2)] = Complex64::new(p.gamma_r, 0.0);
    let ev0 = crate::linear_analysis::eigenvalues3(&l0);
    let ev_defect = (ev0[0] - Complex64::new(-2.0 * e2, 0.0)).norm().max(ev0[1].norm()).max(ev0[2].norm());
    report.checks.push(Check::at_most("lambda(0) anchor", max_abs(&(l0 - expected)), ANCHOR_TOLERANCE));
    report.checks.push(Check::at_most("eigenvalues at k=0", ev_defect, ANCHOR_TOLERANCE));
    report.checks.push(Check::at_most("max_re_lambda", curves.max_real_part, STABILITY_TOLERANCE));

    let split = build_split(p, &wt, None)?;
    let (pc0, _) = split.projectors(0.0);
    let rank0 = rank(&pc0);
    report.checks.push(Check::flag("rank P_c(0) = 2", rank0 == 2));
    let kernel_defect = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(0.37, -1.3)]
        .iter()
        .map(|&x| (pc0 * Vector3::new(x, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))).norm())
        .fold(0.0, f64::max);
    report.checks.push(Check::at_most("P_c(0) kills r-direction", kernel_defect, 0.0));

    let fit = fit_bounds(&split, &ks, 16, e.rng_seed);
    report.checks.push(Check::flag("bounds fit feasible", fit.feasible));
    let trials = random_trial_fields(e.semiderivative_trials, e.rng_seed);
    let semi = verify_semiderivative(&split, &trials, e.rng_seed);
    report.checks.push(Check::at_most("semiderivative anchor", semi.anchor_defect, 0.0));
    report.checks.push(Check::at_least("semiderivative min slope", semi.min_slope, SEMIDERIVATIVE_SLOPE));
    for (i, s) in semi.slopes.iter().enumerate() {
        report.curve(i as f64, 0.0, *s, "semiderivative_slope");
    }

    let (m, kind) = lambda2_prime0(p, &wt);
    let mu = eigenvalues2(&m);
    let fd = center_eigenvalue_slopes(p, &wt, FD_STEP);
    let scale = mu[0].norm().max(mu[1].norm()).max(f64::MIN_POSITIVE);
    let fd_err = mu.iter().zip(&fd).map(|(a, b)| (a - b).norm() / scale).fold(0.0, f64::max);
    report.checks.push(Check::below("center eigenvalue derivative", fd_err, FD_TOLERANCE));
    report.checks.push(Check::flag("classification matches Whitham matrix", kind == classify_wme(p, &wt, 0.0)));
    report.details = json!({
        "lambda0_eigenvalues": ev0.iter().map(|z| (z.re, z.im)).collect::<Vec<_>>(),
        "max_real_part": curves.max_real_part,
        "rank_pc0": rank0,
        "split": { "delta": split.delta, "gap": split.gap, "gap_min": split.gap_min },
        "bounds": fit,
        "semiderivative": semi,
        "lambda2_prime0": m,
        "classification": kind,
        "center_eigenvalue_slopes": fd.iter().map(|z| (z.re, z.im)).collect::<Vec<_>>(),
    });
    Ok(())
}

/// Eigenvalues of a real 2x2 matrix, sorted by real then imaginary part.
pub fn eigenvalues2(m: &[[f64; 2]; 2]) -> [Complex64; 2] {
    let ev = Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]).complex_eigenvalues();
    let mut out = [ev[0], ev[1]];
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    out
}

/// Classification read off numerically computed eigenvalues.
pub fn classify_by_eigenvalues(m: &[[f64; 2]; 2]) -> WmeType {
    let [l1, l2] = eigenvalues2(m);
    let scale = l1.norm().max(l2.norm());
    if (l1 - l2).norm() <= 1e-6 * scale || scale == 0.0 {
        WmeType::Degenerate
    } else if l1.im.abs().max(l2.im.abs()) > 1e-9 * scale {
        WmeType::Elliptic
    } else {
        WmeType::Hyperbolic
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub x: f64,
    pub y: f64,
    pub wme: WmeType,
    pub lambda2_prime0: WmeType,
    pub eigenvalue_oracle: WmeType,
}

fn type_code(t: WmeType) -> f64 {
    match t {
        WmeType::Hyperbolic => 0.0,
        WmeType::Elliptic => 1.0,
        WmeType::Degenerate => 2.0,
    }
}

pub fn sweep_cells(cfg: &ExperimentConfig) -> Result<Vec<SweepCell>> {
    let s = &cfg.experiment.sweep;
    let values = linspace(s.range[0], s.range[1], s.points);
    let mut cells = Vec::with_capacity(values.len() * values.len());
    for &x in &values {
        for &y in &values {
            let mut p = cfg.params;
            set_param(&mut p, &s.x, x)?;
            set_param(&mut p, &s.y, y)?;
            let wt = wavetrain_from_q(&p, cfg.wavetrain.q)?;
            let (m, kind) = lambda2_prime0(&p, &wt);
            cells.push(SweepCell {
                x,
                y,
                wme: classify_wme(&p, &wt, 0.0),
                lambda2_prime0: kind,
                eigenvalue_oracle: classify_by_eigenvalues(&m),
            });
        }
    }
    Ok(cells)
}

pub fn run_classify_sweep(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let cells = sweep_cells(cfg)?;
    let agree = cells
        .iter()
        .filter(|c| c.wme == c.lambda2_prime0 && c.wme == c.eigenvalue_oracle)
        .count();
    for c in &cells {
        report.curve(c.x, c.y, type_code(c.wme), "classification");
    }
    let fraction = agree as f64 / cells.len() as f64;
    report.checks.push(Check::at_least("classification agreement", fraction, 1.0));
    let s = &cfg.experiment.sweep;
    report.details = json!({
        "x": s.x, "y": s.y, "range": s.range, "points": s.points,
        "cells": cells.len(), "agreeing": agree,
        "hyperbolic": cells.iter().filter(|c| c.wme == WmeType::Hyperbolic).count(),
        "elliptic": cells.iter().filter(|c| c.wme == WmeType::Elliptic).count(),
        "degenerate": cells.iter().filter(|c| c.wme == WmeType::Degenerate).count(),
        "grid": cells,
    });
    Ok(())
}
