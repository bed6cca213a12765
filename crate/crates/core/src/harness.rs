//! Configuration-driven parameter sweeps with CSV and JSON output.
//!
//! A sweep is the cartesian grid of its axes (first axis varies slowest).
//! Trial `t` of cell `c` draws from stream `(c << 32) | t` of the master
//! seed, so any cell can be rerun on its own and reproduce its row.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::{fano_lower_bound, mi_plugin};
use crate::model::ModelSpec;
use crate::recovery::{exact_error, flip_error, map_recover, LikelihoodMode};
use crate::samplers::{sample, sample_labels};
use crate::seed::Seed;
use crate::thresholds::{condition, ThresholdReport};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Threshold,
    ExactError,
    FlipError,
    MeanInDegree,
    Mi,
}

fn default_metrics() -> Vec<Metric> {
    vec![Metric::Threshold, Metric::ExactError, Metric::FlipError]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub n: usize,
    #[serde(default)]
    pub sweep: Vec<SweepAxis>,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub recovery: LikelihoodMode,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<OutputFormat>,
}

impl ExperimentConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_slice(bytes).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.trials > u32::MAX as usize {
            return Err(Error::Config("too many trials per cell".into()));
        }
        if self.metrics.is_empty() {
            return Err(Error::Config("no metrics requested".into()));
        }
        let known: Vec<&str> = self.model.params().iter().map(|(name, _)| *name).collect();
        let mut seen = BTreeSet::new();
        for axis in &self.sweep {
            if axis.param != "n" && !known.contains(&axis.param.as_str()) {
                return Err(Error::Config(format!(
                    "model `{}` has no parameter `{}` (known: {}, n)",
                    self.model.kind(),
                    axis.param,
                    known.join(", ")
                )));
            }
            if !seen.insert(axis.param.as_str()) {
                return Err(Error::Config(format!("axis `{}` listed twice", axis.param)));
            }
            if axis.values.is_empty() {
                return Err(Error::Config(format!("axis `{}` has no values", axis.param)));
            }
            if axis.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(format!("axis `{}` has a non-finite value", axis.param)));
            }
            if axis.param == "n" && axis.values.iter().any(|v| *v < 2.0 || v.fract() != 0.0) {
                return Err(Error::Config("axis `n` needs whole numbers ≥ 2".into()));
            }
        }
        if self.n < 2 && !seen.contains("n") {
            return Err(Error::Config("n must be at least 2".into()));
        }
        if self.cell_count() > u32::MAX as usize {
            return Err(Error::Config("grid too large".into()));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.sweep.iter().map(|a| a.values.len()).product()
    }

    /// Axis values of cell `index`.
    pub fn cell(&self, index: usize) -> Vec<(&str, f64)> {
        let mut rest = index;
        let mut out = vec![("", 0.0); self.sweep.len()];
        for (k, axis) in self.sweep.iter().enumerate().rev() {
            out[k] = (axis.param.as_str(), axis.values[rest % axis.values.len()]);
            rest /= axis.values.len();
        }
        out
    }

    fn wants(&self, m: Metric) -> bool {
        self.metrics.contains(&m)
    }

    fn samples_graphs(&self) -> bool {
        self.wants(Metric::ExactError) || self.wants(Metric::FlipError) || self.wants(Metric::MeanInDegree)
    }

    fn param_columns(&self) -> Vec<&'static str> {
        let mut cols: Vec<&'static str> = self.model.params().iter().map(|(name, _)| *name).collect();
        cols.push("n");
        cols
    }
}

/// An empirical proportion with its Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub rate: f64,
    pub lo: f64,
    pub hi: f64,
    pub successes: usize,
    pub trials: usize,
}

impl Rate {
    pub fn wilson(successes: usize, trials: usize) -> Self {
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = Z95 * Z95;
        let denom = 1.0 + z2 / n;
        let centre = (p + z2 / (2.0 * n)) / denom;
        let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        Rate {
            rate: p,
            lo: (centre - half).clamp(0.0, p),
            hi: (centre + half).clamp(p, 1.0),
            successes,
            trials,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub standard_error: f64,
}

impl MeanEstimate {
    fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        MeanEstimate {
            mean,
            standard_error: (var / n).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub params: Vec<(String, f64)>,
    pub threshold: Option<ThresholdReport>,
    pub exact_err: Option<Rate>,
    pub flip_err: Option<Rate>,
    /// Mean in-degree of non-founder nodes for directed models, mean degree
    /// otherwise, averaged over trials.
    pub mean_in_degree: Option<MeanEstimate>,
    pub mi: Option<f64>,
    pub fano: Option<f64>,
    pub trials: usize,
    pub seconds: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub model: crate::model::ModelKind,
    pub metrics: Vec<Metric>,
    pub param_columns: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Column names in output order.
    pub fn header(&self) -> Vec<String> {
        let mut cols = self.param_columns.clone();
        let has = |m| self.metrics.contains(&m);
        let mut push = |names: &[&str]| cols.extend(names.iter().map(|s| s.to_string()));
        if has(Metric::Threshold) {
            push(&["lhs", "rhs", "nonrecoverable"]);
        }
        if has(Metric::ExactError) {
            push(&["exact_err", "exact_err_lo", "exact_err_hi"]);
        }
        if has(Metric::FlipError) {
            push(&["flip_err", "flip_err_lo", "flip_err_hi"]);
        }
        if has(Metric::MeanInDegree) {
            push(&["mean_in_degree", "mean_in_degree_se"]);
        }
        if has(Metric::Mi) {
            push(&["mi", "fano"]);
        }
        push(&["trials", "seconds"]);
        if self.rows.iter().any(|r| r.error.is_some()) {
            push(&["error"]);
        }
        cols
    }

    fn record(&self, row: &SweepRow, with_error: bool) -> Vec<String> {
        let has = |m| self.metrics.contains(&m);
        let opt = |x: Option<f64>| x.map(fmt_float).unwrap_or_default();
        let mut out: Vec<String> = row.params.iter().map(|(_, v)| fmt_float(*v)).collect();
        if has(Metric::Threshold) {
            let t = row.threshold;
            out.push(opt(t.map(|t| t.lhs)));
            out.push(opt(t.map(|t| t.rhs)));
            out.push(t.map(|t| t.nonrecoverable.to_string()).unwrap_or_default());
        }
        for (metric, rate) in [(Metric::ExactError, row.exact_err), (Metric::FlipError, row.flip_err)] {
            if has(metric) {
                out.push(opt(rate.map(|r| r.rate)));
                out.push(opt(rate.map(|r| r.lo)));
                out.push(opt(rate.map(|r| r.hi)));
            }
        }
        if has(Metric::MeanInDegree) {
            out.push(opt(row.mean_in_degree.map(|m| m.mean)));
            out.push(opt(row.mean_in_degree.map(|m| m.standard_error)));
        }
        if has(Metric::Mi) {
            out.push(opt(row.mi));
            out.push(opt(row.fano));
        }
        out.push(row.trials.to_string());
        out.push(fmt_float(row.seconds));
        if with_error {
            out.push(row.error.clone().unwrap_or_default());
        }
        out
    }
}

/// Shortest decimal that round-trips the value rounded to 9 significant digits.
pub fn fmt_float(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.8e}").parse().unwrap_or(x);
    rounded.to_string()
}

fn cell_spec(cfg: &ExperimentConfig, cell: &[(&str, f64)]) -> Result<(ModelSpec, usize)> {
    let mut spec = cfg.model.clone();
    let mut n = cfg.n;
    for &(name, value) in cell {
        if name == "n" {
            n = value as usize;
        } else {
            spec = spec.with_param(name, value)?;
        }
    }
    spec.validate(n)?;
    Ok((spec, n))
}

struct TrialOutcome {
    exact: u8,
    flip: u8,
    degree: f64,
}

fn run_trial(cfg: &ExperimentConfig, spec: &ModelSpec, n: usize, seed: Seed) -> Result<TrialOutcome> {
    let mut rng = seed.rng();
    let labels = sample_labels(n, &mut rng);
    let g = sample(spec, &labels, &mut rng)?.graph;
    let (exact, flip) = if cfg.wants(Metric::ExactError) || cfg.wants(Metric::FlipError) {
        let r = map_recover(spec, &g, cfg.recovery)?;
        (exact_error(&r.y_hat, &labels)?, flip_error(&r.y_hat, &labels)?)
    } else {
        (0, 0)
    };
    let degree = match spec {
        ModelSpec::Dpam { m, .. } | ModelSpec::Dswm { m, .. } => {
            (*m..n).map(|i| g.in_degree(i) as f64).sum::<f64>() / (n - m) as f64
        }
        _ => 2.0 * g.edge_count() as f64 / n as f64,
    };
    Ok(TrialOutcome { exact, flip, degree })
}

fn fill_cell(cfg: &ExperimentConfig, index: usize, row: &mut SweepRow) -> Result<()> {
    let cell = cfg.cell(index);
    let (spec, n) = cell_spec(cfg, &cell)?;
    row.params = spec
        .params()
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .chain(std::iter::once(("n".to_string(), n as f64)))
        .collect();
    if cfg.wants(Metric::Threshold) {
        row.threshold = Some(condition(&spec, n)?);
    }
    if cfg.wants(Metric::Mi) {
        let mi = mi_plugin(&spec, n)?.value;
        row.mi = Some(mi);
        row.fano = Some(fano_lower_bound(mi, n));
    }
    if cfg.samples_graphs() {
        let outcomes = (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, &spec, n, Seed::trial(cfg.seed, index as u32, t as u32)))
            .collect::<Result<Vec<_>>>()?;
        let count = |f: fn(&TrialOutcome) -> u8| outcomes.iter().map(|o| f(o) as usize).sum::<usize>();
        if cfg.wants(Metric::ExactError) {
            row.exact_err = Some(Rate::wilson(count(|o| o.exact), cfg.trials));
        }
        if cfg.wants(Metric::FlipError) {
            row.flip_err = Some(Rate::wilson(count(|o| o.flip), cfg.trials));
        }
        if cfg.wants(Metric::MeanInDegree) {
            let degrees: Vec<f64> = outcomes.iter().map(|o| o.degree).collect();
            row.mean_in_degree = Some(MeanEstimate::of(&degrees));
        }
        row.trials = cfg.trials;
    }
    Ok(())
}

/// Computes row `index` of the sweep. Failures are stored in the row.
pub fn run_cell(cfg: &ExperimentConfig, index: usize) -> SweepRow {
    let start = Instant::now();
    let mut row = SweepRow {
        params: cfg
            .param_columns()
            .into_iter()
            .map(|name| (name.to_string(), f64::NAN))
            .collect(),
        threshold: None,
        exact_err: None,
        flip_err: None,
        mean_in_degree: None,
        mi: None,
        fano: None,
        trials: 0,
        seconds: 0.0,
        error: None,
    };
    // Unset parameters keep the template value or the axis value.
    for (name, value) in row.params.iter_mut() {
        if let Some((_, v)) = cfg.model.params().iter().find(|(k, _)| k == name) {
            *value = *v;
        }
        if name == "n" {
            *value = cfg.n as f64;
        }
    }
    for (name, v) in cfg.cell(index) {
        if let Some(slot) = row.params.iter_mut().find(|(k, _)| k == name) {
            slot.1 = v;
        }
    }
    if let Err(e) = fill_cell(cfg, index, &mut row) {
        row.threshold = None;
        row.exact_err = None;
        row.flip_err = None;
        row.mean_in_degree = None;
        row.mi = None;
        row.fano = None;
        row.trials = 0;
        row.error = Some(e.to_string());
    }
    row.seconds = start.elapsed().as_secs_f64();
    row
}

/// Runs every cell of the grid.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let rows = (0..cfg.cell_count())
        .into_par_iter()
        .map(|index| run_cell(cfg, index))
        .collect();
    let mut metrics = cfg.metrics.clone();
    metrics.sort();
    metrics.dedup();
    Ok(SweepResult {
        model: cfg.model.kind(),
        metrics,
        param_columns: cfg.param_columns().into_iter().map(String::from).collect(),
        rows,
    })
}

pub fn write_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header = result.header();
    let with_error = header.last().map(String::as_str) == Some("error");
    w.write_record(&header)?;
    for row in &result.rows {
        w.write_record(result.record(row, with_error))?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(result, std::io::BufWriter::new(file))
}

pub fn write_json<W: Write>(result: &SweepResult, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, result)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn emit_json(result: &SweepResult, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_json(result, std::io::BufWriter::new(file))
}
