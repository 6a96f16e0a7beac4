//! TOML experiment configuration.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{wavetrain_from_q, GglParams, WaveTrain};
use crate::spectral::{Grid1D, SpectralField};
use crate::wme::{estimate_eta, monitored_norm, FluxModel, ModulationState, StripMode, WmeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    WavetrainInvariance,
    ResidualOrder,
    ErrorScaling,
    SpectralReport,
    ClassifySweep,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        Self::WavetrainInvariance,
        Self::ResidualOrder,
        Self::ErrorScaling,
        Self::SpectralReport,
        Self::ClassifySweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::WavetrainInvariance => "wavetrain-invariance",
            Self::ResidualOrder => "residual-order",
            Self::ErrorScaling => "error-scaling",
            Self::SpectralReport => "spectral-report",
            Self::ClassifySweep => "classify-sweep",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

/// Grid and horizon for the exact wave-train runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WavetrainSection {
    pub q: f64,
    pub modes: usize,
    pub period: f64,
    pub t_end: f64,
}

impl Default for WavetrainSection {
    fn default() -> Self {
        Self { q: 0.0, modes: 512, period: 16.0 * PI, t_end: 10.0 }
    }
}

/// Whitham solver settings; `eta` is estimated from the initial data when
/// absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WmeSection {
    pub eta: Option<f64>,
    pub eta_safety: f64,
    pub sigma0: f64,
    pub dt: f64,
    pub m: f64,
    pub smallness_bound: f64,
    pub strip_mode: StripMode,
    pub flux_model: FluxModel,
}

impl Default for WmeSection {
    fn default() -> Self {
        Self {
            eta: None,
            eta_safety: 2.0,
            sigma0: 0.4,
            dt: 0.005,
            m: 2.0,
            smallness_bound: 0.25,
            strip_mode: StripMode::Shrinking,
            flux_model: FluxModel::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub x: String,
    pub y: String,
    pub range: [f64; 2],
    pub points: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { x: "alpha".into(), y: "d".into(), range: [-1.0, 1.0], points: 21 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub name: ExperimentKind,
    pub epsilons: Vec<f64>,
    pub order: u8,
    pub slow_modes: usize,
    pub fine_modes_per_inverse_epsilon: usize,
    /// Slow horizon before any halving.
    pub t1: f64,
    pub max_halvings: u32,
    /// Step of the original system.
    pub fast_dt: f64,
    /// `(a_psi, a_B)` in `psi = a_psi sin X`, `B = a_B cos X`.
    pub initial_amplitudes: [f64; 2],
    pub sample_count: usize,
    pub residual_times: usize,
    pub semiderivative_trials: usize,
    pub k_samples: usize,
    pub k_max: f64,
    pub output_dir: PathBuf,
    pub rng_seed: u64,
    pub sweep: SweepSection,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            name: ExperimentKind::ErrorScaling,
            epsilons: vec![0.1, 0.05, 0.025],
            order: 1,
            slow_modes: 64,
            fine_modes_per_inverse_epsilon: 64,
            t1: 0.5,
            max_halvings: 3,
            fast_dt: 0.01,
            initial_amplitudes: [0.03, 0.03],
            sample_count: 50,
            residual_times: 5,
            semiderivative_trials: 10,
            k_samples: 401,
            k_max: 10.0,
            output_dir: PathBuf::from("out"),
            rng_seed: 0,
            sweep: SweepSection::default(),
        }
    }
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: GglParams,
    pub wavetrain: WavetrainSection,
    pub wme: WmeSection,
    pub experiment: ExperimentSection,
}

const SWEEPABLE: [&str; 7] = ["alpha", "beta", "gamma_r", "gamma_i", "a", "c", "d"];

/// Sets the named coefficient.
pub fn set_param(p: &mut GglParams, name: &str, value: f64) -> Result<()> {
    let slot = match name {
        "alpha" => &mut p.alpha,
        "beta" => &mut p.beta,
        "gamma_r" => &mut p.gamma_r,
        "gamma_i" => &mut p.gamma_i,
        "a" => &mut p.a,
        "c" => &mut p.c,
        "d" => &mut p.d,
        _ => return Err(Error::Config(format!("unknown coefficient `{name}`, expected one of {SWEEPABLE:?}"))),
    };
    *slot = value;
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let e = &self.experiment;
        let w = &self.wme;
        if e.epsilons.is_empty() {
            return Err(Error::Config("epsilons must not be empty".into()));
        }
        for &eps in &e.epsilons {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::Config(format!("epsilons must lie in (0, 1), got {eps}")));
            }
        }
        if e.epsilons.windows(2).any(|p| p[1] >= p[0]) {
            return Err(Error::Config("epsilons must be strictly decreasing".into()));
        }
        if e.order > 1 {
            return Err(Error::Config(format!("order must be 0 or 1, got {}", e.order)));
        }
        for (name, v) in [
            ("slow_modes", e.slow_modes),
            ("fine_modes_per_inverse_epsilon", e.fine_modes_per_inverse_epsilon),
            ("semiderivative_trials", e.semiderivative_trials),
            ("wavetrain.modes", self.wavetrain.modes),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        for (name, v) in [("sample_count", e.sample_count), ("residual_times", e.residual_times), ("k_samples", e.k_samples), ("sweep.points", e.sweep.points)] {
            if v < 2 {
                return Err(Error::Config(format!("{name} must be at least 2, got {v}")));
            }
        }
        for (name, v) in [
            ("t1", e.t1),
            ("fast_dt", e.fast_dt),
            ("k_max", e.k_max),
            ("wavetrain.period", self.wavetrain.period),
            ("wavetrain.t_end", self.wavetrain.t_end),
            ("wme.sigma0", w.sigma0),
            ("wme.dt", w.dt),
            ("wme.smallness_bound", w.smallness_bound),
        ] {
            positive(name, v)?;
        }
        if let Some(eta) = w.eta {
            positive("wme.eta", eta)?;
        }
        if !(w.eta_safety >= 1.0) {
            return Err(Error::Config(format!("wme.eta_safety must be >= 1, got {}", w.eta_safety)));
        }
        if !(w.m >= 0.0) {
            return Err(Error::Config(format!("wme.m must be nonnegative, got {}", w.m)));
        }
        if e.initial_amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(Error::Config("initial amplitudes must be finite".into()));
        }
        let [lo, hi] = e.sweep.range;
        if !(lo < hi) {
            return Err(Error::Config(format!("sweep range must be increasing, got [{lo}, {hi}]")));
        }
        let mut probe = self.params;
        set_param(&mut probe, &e.sweep.x, lo)?;
        set_param(&mut probe, &e.sweep.y, lo)?;
        Grid1D::new(e.slow_modes, 2.0 * PI)
            .map_err(|err| Error::Config(format!("slow grid: {err}")))?;
        self.wave_train()?;
        let init = self.initial_state()?;
        let norm = monitored_norm(&init.psi, &init.b, w.sigma0, w.m)?;
        if norm > w.smallness_bound {
            return Err(Error::Config(format!(
                "initial amplitudes give monitored norm {norm}, above smallness_bound {}",
                w.smallness_bound
            )));
        }
        Ok(())
    }

    pub fn wave_train(&self) -> Result<WaveTrain> {
        wavetrain_from_q(&self.params, self.wavetrain.q)
    }

    pub fn slow_grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.experiment.slow_modes, 2.0 * PI)
    }

    /// `psi = a_psi sin X`, `B = a_B cos X` at strip width `sigma0`.
    pub fn initial_state(&self) -> Result<ModulationState> {
        let g = self.slow_grid()?;
        let [ap, ab] = self.experiment.initial_amplitudes;
        Ok(ModulationState::new(
            SpectralField::from_fn(g, move |x| ap * x.sin()),
            SpectralField::from_fn(g, move |x| ab * x.cos()),
            self.wme.sigma0,
        ))
    }

    /// Solver settings with `eta` resolved.
    pub fn wme_config(&self) -> Result<WmeConfig> {
        let w = &self.wme;
        let eta = match w.eta {
            Some(eta) => eta,
            None => estimate_eta(&self.initial_state()?, &self.params, &self.wave_train()?, w.eta_safety)?,
        };
        let cfg = WmeConfig {
            eta,
            sigma0: w.sigma0,
            dt: w.dt,
            m: w.m,
            smallness_bound: w.smallness_bound,
            strip_mode: w.strip_mode,
            flux_model: w.flux_model,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fast grid at scale `eps`: period `2 pi / eps`, modes rounded up to a
    /// power of two.
    pub fn fine_grid(&self, eps: f64) -> Result<Grid1D> {
        let n = ((self.experiment.fine_modes_per_inverse_epsilon as f64 / eps).ceil() as usize).next_power_of_two();
        Grid1D::new(n.max(8), 2.0 * PI / eps)
    }
}
