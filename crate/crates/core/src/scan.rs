//! Parameter sweeps, threshold search and curve output.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::concentration::{CountRecord, Hoeffding};
use crate::error::{Error, Result};
use crate::finite_key::KeyRateResult;
use crate::gains::GainSet;
use crate::pipeline::{evaluate, evaluate_analytic, PipelineInputs};
use crate::params::SystemParams;
use crate::simulator::{simulate_session, SimConfig, SimMode};

/// Bisection tolerance for length scans, km.
pub const LENGTH_TOLERANCE_KM: f64 = 0.01;
/// Bisection tolerance for other variables, as a fraction of the bracket.
pub const RELATIVE_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanVariable {
    LengthKm,
    DetectorEfficiency,
    DeadTime,
    Mu,
}

impl ScanVariable {
    pub fn apply(self, params: &SystemParams, value: f64) -> SystemParams {
        let mut p = *params;
        match self {
            ScanVariable::LengthKm => p.channel.length_km = value,
            ScanVariable::DetectorEfficiency => p.detectors.efficiency = value,
            ScanVariable::DeadTime => p.detectors.dead_time_s = value,
            ScanVariable::Mu => p.source.mu = value,
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PipelineMode {
    /// Every count is its expectation under the analytic model.
    Analytic,
    /// Counts from a fresh simulated session per grid point.
    Simulate { seed: u64, rounds: u64, mode: SimMode },
    /// The same recorded counts at every grid point.
    Replay(CountRecord),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    pub variable: ScanVariable,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    pub pipeline_mode: PipelineMode,
    /// Scale key rates by `(1 - DR) * CR`.
    pub throughput: bool,
}

impl ScanSpec {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::Precondition(format!("scan step {} must be > 0", self.step)));
        }
        if self.start > self.stop {
            return Err(Error::Precondition(format!(
                "scan start {} exceeds stop {}",
                self.start, self.stop
            )));
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|i| self.start + i as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub variable: f64,
    pub qber: Option<f64>,
    pub phase_error_upper: Option<f64>,
    pub key_bits: Option<f64>,
    pub key_rate_bps: Option<f64>,
    pub aborted: bool,
    pub reason: String,
}

impl ScanRow {
    fn from_result(value: f64, params: &SystemParams, r: &KeyRateResult, throughput: bool) -> Self {
        let mut rate = r.key_length_bits() / params.block_duration_s();
        if throughput {
            rate *= (1.0 - params.receiver.disclose_rate) * params.receiver.compression_ratio;
        }
        ScanRow {
            variable: value,
            qber: Some(r.qber),
            phase_error_upper: Some(r.phase_error_observed_upper),
            key_bits: Some(r.key_length_bits()),
            key_rate_bps: Some(rate),
            aborted: r.aborted().is_some(),
            reason: r.aborted().map(|a| a.as_str().to_string()).unwrap_or_default(),
        }
    }

    fn from_error(value: f64, err: &Error) -> Self {
        ScanRow {
            variable: value,
            qber: None,
            phase_error_upper: None,
            key_bits: None,
            key_rate_bps: None,
            aborted: true,
            reason: format!("error: {err}"),
        }
    }
}

/// Evaluates the pipeline at one parameter point.
pub fn evaluate_point(params: &SystemParams, mode: &PipelineMode) -> Result<KeyRateResult> {
    let params = params.validate()?;
    match mode {
        PipelineMode::Analytic => evaluate_analytic(&params, &Hoeffding),
        PipelineMode::Simulate { seed, rounds, mode } => {
            let tally = simulate_session(
                &params,
                &SimConfig {
                    seed: *seed,
                    rounds: *rounds,
                    mode: *mode,
                },
            );
            let reference = tally.empirical_gains().or_else(&GainSet::analytic(&params));
            evaluate(&params, &PipelineInputs::from(&tally.record), &reference, &Hoeffding)
        }
        PipelineMode::Replay(record) => evaluate(
            &params,
            &PipelineInputs::from(record),
            &GainSet::analytic(&params),
            &Hoeffding,
        ),
    }
}

/// One row per grid point in grid order. Point failures become error rows.
pub fn run_scan(spec: &ScanSpec, params: &SystemParams) -> Result<Vec<ScanRow>> {
    let grid = spec.grid()?;
    Ok(grid
        .par_iter()
        .map(|&x| {
            let p = spec.variable.apply(params, x);
            match evaluate_point(&p, &spec.pipeline_mode) {
                Ok(r) => ScanRow::from_result(x, &p, &r, spec.throughput),
                Err(e) => ScanRow::from_error(x, &e),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Qber,
    KeyLength,
}

impl Metric {
    pub fn of(self, r: &KeyRateResult) -> f64 {
        match self {
            Metric::Qber => r.qber,
            Metric::KeyLength => r.key_length_bits(),
        }
    }
}

/// Locates where `metric` crosses `target` along `variable` inside
/// `[lo, hi]` by bisection, using the analytic pipeline.
pub fn find_threshold(
    metric: Metric,
    target: f64,
    bracket: (f64, f64),
    variable: ScanVariable,
    params: &SystemParams,
) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) {
        return Err(Error::Precondition(format!("empty bracket [{lo}, {hi}]")));
    }
    let tol = match variable {
        ScanVariable::LengthKm => LENGTH_TOLERANCE_KM,
        _ => RELATIVE_TOLERANCE * (hi - lo),
    };
    let above = |x: f64| -> Result<bool> {
        let r = evaluate_point(&variable.apply(params, x), &PipelineMode::Analytic)?;
        Ok(metric.of(&r) > target)
    };
    let lo_above = above(lo)?;
    if lo_above == above(hi)? {
        return Err(Error::NoStraddle { lo, hi, target });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if above(mid)? == lo_above {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

pub const CSV_HEADER: [&str; 7] = [
    "variable",
    "qber",
    "phase_error_upper",
    "key_bits",
    "key_rate_bps",
    "aborted",
    "reason",
];

/// Writes rows as CSV (fixed header) or as a JSON array of objects.
pub fn emit_to_writer<W: Write>(rows: &[ScanRow], format: Format, mut out: W) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Precondition("no rows to emit".to_string()));
    }
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in rows {
                w.serialize(row)?;
            }
            w.flush().map_err(csv::Error::from)?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, rows)?;
            out.write_all(b"\n").map_err(|e| Error::Json(serde_json::Error::io(e)))?;
        }
    }
    Ok(())
}

pub fn emit(rows: &[ScanRow], format: Format, destination: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: destination.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(destination).map_err(io_err)?;
    let mut buf = std::io::BufWriter::new(file);
    emit_to_writer(rows, format, &mut buf)?;
    buf.flush().map_err(io_err)
}
