//! Run reports, slope fits and their on-disk formats.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentKind};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_loglog_slope(pairs: &[(f64, f64)]) -> Result<LogLogFit> {
    if pairs.len() < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 pairs, got {}", pairs.len())));
    }
    if let Some(&(x, y)) = pairs.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(Error::InvalidArgument(format!("log-log fit needs positive finite data, got ({x}, {y})")));
    }
    let n = pairs.len() as f64;
    let lx: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("log-log fit needs distinct x values".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sst: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let sse: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if sst == 0.0 { 1.0 } else { 1.0 - sse / sst };
    Ok(LogLogFit { slope, intercept, r_squared })
}

/// A failure kept in the report instead of aborting the run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub message: String,
    pub epsilon: Option<f64>,
    pub time: Option<f64>,
}

impl ErrorRecord {
    pub fn new(err: &Error, epsilon: Option<f64>, time: Option<f64>) -> Self {
        let time = time.or(match *err {
            Error::BlowUp { time }
            | Error::StripExhausted { time, .. }
            | Error::SmallnessViolated { time, .. }
            | Error::TimeOutOfRange { time, .. } => Some(time),
            _ => None,
        });
        Self { message: err.to_string(), epsilon, time }
    }
}

/// One independent unit of work (one epsilon, one q, one sweep cell).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub label: String,
    pub key: f64,
    pub value: Option<f64>,
    pub units: String,
    pub runtime_s: f64,
    pub grid_modes: Option<usize>,
    pub error: Option<ErrorRecord>,
}

/// A threshold comparison; `passed` is a pure function of `value`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub rule: String,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, rule: format!("<= {bound:e}"), passed: value <= bound }
    }

    pub fn below(name: &str, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, rule: format!("< {bound:e}"), passed: value < bound }
    }

    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, rule: format!(">= {bound}"), passed: value >= bound }
    }

    pub fn within(name: &str, value: f64, center: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            rule: format!("{center} +- {tol}"),
            passed: (value - center).abs() <= tol,
        }
    }

    pub fn flag(name: &str, ok: bool) -> Self {
        Self { name: name.into(), value: if ok { 1.0 } else { 0.0 }, rule: "== 1".into(), passed: ok }
    }
}

/// Long-format curve row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub experiment: String,
    pub epsilon_or_k: f64,
    pub time_or_order: f64,
    pub value: f64,
    pub units: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct T1Attempt {
    pub t1: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub package_version: &'static str,
    pub experiment: ExperimentKind,
    pub config: ExperimentConfig,
    pub runs: Vec<RunRecord>,
    pub fits: Vec<(String, LogLogFit)>,
    pub checks: Vec<Check>,
    pub t1_attempts: Vec<T1Attempt>,
    pub details: serde_json::Value,
    pub curves: Vec<CurveRow>,
    pub error: Option<ErrorRecord>,
    pub runtime_s: f64,
}

impl RunReport {
    pub fn new(experiment: ExperimentKind, config: &ExperimentConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            package_version: env!("CARGO_PKG_VERSION"),
            experiment,
            config: config.clone(),
            runs: Vec::new(),
            fits: Vec::new(),
            checks: Vec::new(),
            t1_attempts: Vec::new(),
            details: serde_json::Value::Null,
            curves: Vec::new(),
            error: None,
            runtime_s: 0.0,
        }
    }

    /// All checks pass and nothing failed.
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.runs.iter().all(|r| r.error.is_none()) && self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn fit(&self, label: &str) -> Option<&LogLogFit> {
        self.fits.iter().find(|f| f.0 == label).map(|f| &f.1)
    }

    pub fn curve(&mut self, epsilon_or_k: f64, time_or_order: f64, value: f64, units: &str) {
        self.curves.push(CurveRow {
            experiment: self.experiment.name().into(),
            epsilon_or_k,
            time_or_order,
            value,
            units: units.into(),
        });
    }

    pub fn to_json(&self) -> Result<String> {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFormatter::default());
        self.serialize(&mut ser).map_err(|e| Error::Io(e.to_string()))?;
        buf.push(b'\n');
        String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
    }
}

/// `v` with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// Pretty JSON with floats printed by [`format_f64`].
#[derive(Default)]
struct SigFormatter<'a> {
    inner: serde_json::ser::PrettyFormatter<'a>,
}

impl serde_json::ser::Formatter for SigFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(format_f64(v).as_bytes())
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

pub const CSV_HEADER: &str = "experiment,epsilon_or_k,time_or_order,value,units";

pub fn curves_csv(reports: &[RunReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in reports.iter().flat_map(|r| &r.curves) {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.experiment,
            format_f64(row.epsilon_or_k),
            format_f64(row.time_or_order),
            format_f64(row.value),
            row.units
        ));
    }
    out
}

/// Writes via a temporary file in the same directory and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| Error::Io(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// `report.json` (one report, or an array for several) and `curves.csv`.
pub fn write_outputs(dir: &Path, reports: &[RunReport]) -> Result<()> {
    let json = if let [single] = reports {
        single.to_json()?
    } else {
        let parts: Result<Vec<String>> = reports.iter().map(|r| r.to_json()).collect();
        format!("[\n{}]\n", parts?.join(",\n"))
    };
    write_atomic(&dir.join("report.json"), &json)?;
    write_atomic(&dir.join("curves.csv"), &curves_csv(reports))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fit_identity() {
        let f = fit_loglog_slope(&[(1.0, 1.0), (2.0, 2.0), (5.0, 5.0)]).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-14 && f.intercept.abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fit_power_law() {
        let f = fit_loglog_slope(&[(1.0, 3.0), (2.0, 12.0), (4.0, 48.0)]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn fit_noisy_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pairs: Vec<(f64, f64)> = (0..8)
            .map(|i| {
                let x = 0.1 * 1.5f64.powi(i);
                (x, 2.0 * x.powf(0.5) * (1.0 + rng.gen_range(-0.01..0.01)))
            })
            .collect();
        assert!((fit_loglog_slope(&pairs).unwrap().slope - 0.5).abs() < 0.05);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(fit_loglog_slope(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(fit_loglog_slope(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
        assert!(fit_loglog_slope(&[(-1.0, 1.0), (2.0, 1.0), (3.0, 1.0)]).is_err());
    }

    #[test]
    fn floats_use_seventeen_digits() {
        assert_eq!(format_f64(0.1), "1.0000000000000001e-1");
        let v: f64 = format_f64(std::f64::consts::PI).parse().unwrap();
        assert_eq!(v, std::f64::consts::PI);
        let mut r = RunReport::new(ExperimentKind::ErrorScaling, &ExperimentConfig::default());
        r.curve(0.1, 1.0, 2.5e-7, "sup_error");
        let json = r.to_json().unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed["curves"][0]["value"].as_f64(), Some(2.5e-7));
        assert!(json.contains("2.4999999999999999e-7"));
        let csv = curves_csv(&[r]);
        assert_eq!(csv.lines().nth(1), Some("error-scaling,1.0000000000000001e-1,1.0000000000000000e0,2.4999999999999999e-7,sup_error"));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = std::env::temp_dir().join(format!("whitham-report-{}", std::process::id()));
        let path = dir.join("a.txt");
        write_atomic(&path, "one").unwrap();
        write_atomic(&path, "two").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(std::fs::read_dir(&dir).unwrap().count(), 1);
        std::fs::remove_dir_all(dir).unwrap();
    }
}
