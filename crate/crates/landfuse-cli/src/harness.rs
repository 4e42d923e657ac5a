//! Monte-Carlo evaluation harness: parallel runs with derived seeds,
//! mean ± sample-std aggregation, and the report writers.
//!
//! Wall-clock seconds stand in for CPU time; the timing table is written
//! separately from the metrics so that reports stay byte-reproducible.

use std::fmt::Write as _;

use rayon::prelude::*;

use landfuse_core::metrics::{ConfusionMatrix, Metrics};

use crate::error::{CliError, Result};

/// One Monte-Carlo run's outcome.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub run: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
    pub train_seconds: f64,
    pub test_seconds: f64,
}

/// Mean and sample standard deviation (n-1; zero for a single value).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
}

pub fn aggregate(values: &[f64]) -> Aggregate {
    let n = values.len();
    if n == 0 {
        return Aggregate { mean: f64::NAN, std: 0.0 };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    Aggregate { mean, std }
}

/// Aggregated report of one classifier over all runs.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub classifier: String,
    pub runs: Vec<RunRecord>,
}

impl EvalReport {
    fn over(&self, f: impl Fn(&RunRecord) -> f64) -> Aggregate {
        let values: Vec<f64> = self.runs.iter().map(f).collect();
        aggregate(&values)
    }

    pub fn oa(&self) -> Aggregate {
        self.over(|r| r.metrics.oa)
    }

    pub fn aa(&self) -> Aggregate {
        self.over(|r| r.metrics.aa)
    }

    pub fn kappa(&self) -> Aggregate {
        self.over(|r| r.metrics.kappa)
    }

    pub fn train_seconds(&self) -> Aggregate {
        self.over(|r| r.train_seconds)
    }

    pub fn test_seconds(&self) -> Aggregate {
        self.over(|r| r.test_seconds)
    }

    /// Confusion counts pooled over every run.
    pub fn pooled_confusion(&self) -> Option<ConfusionMatrix> {
        let first = self.runs.first()?;
        let mut pooled = ConfusionMatrix::new(first.confusion.classes());
        for r in &self.runs {
            pooled.merge(&r.confusion);
        }
        Some(pooled)
    }
}

/// Execute `run_count` runs (in parallel; each run derives its own seeds
/// from its index) and collect them ordered by run index. A failing run
/// aborts the whole evaluation with its index and cause.
pub fn monte_carlo<F>(run_count: usize, run: F) -> Result<Vec<RunRecord>>
where
    F: Fn(usize) -> Result<RunRecord> + Sync,
{
    let results: Vec<Result<RunRecord>> = (0..run_count)
        .into_par_iter()
        .map(|r| run(r).map_err(|e| CliError::Data(format!("run {r}: {e}"))))
        .collect();
    let mut records = Vec::with_capacity(run_count);
    for outcome in results {
        records.push(outcome?);
    }
    records.sort_by_key(|r| r.run);
    Ok(records)
}

/// Machine-readable metrics: aggregate rows then per-run rows, tab
/// separated. Deterministic given the runs.
pub fn metrics_tsv(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    out.push_str("classifier\tmetric\tmean\tstd\n");
    for report in reports {
        for (name, agg) in
            [("kappa", report.kappa()), ("oa", report.oa()), ("aa", report.aa())]
        {
            let _ = writeln!(
                out,
                "{}\t{}\t{:.6}\t{:.6}",
                report.classifier, name, agg.mean, agg.std
            );
        }
    }
    out.push_str("classifier\trun\toa\taa\tkappa\n");
    for report in reports {
        for r in &report.runs {
            let _ = writeln!(
                out,
                "{}\t{}\t{:.6}\t{:.6}\t{:.6}",
                report.classifier, r.run, r.metrics.oa, r.metrics.aa, r.metrics.kappa
            );
        }
    }
    out
}

/// Wall-time table, tab separated.
pub fn timing_tsv(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    out.push_str("classifier\tphase\tmean_seconds\tstd_seconds\n");
    for report in reports {
        for (phase, agg) in
            [("train", report.train_seconds()), ("test", report.test_seconds())]
        {
            let _ = writeln!(
                out,
                "{}\t{}\t{:.4}\t{:.4}",
                report.classifier, phase, agg.mean, agg.std
            );
        }
    }
    out
}

/// Human-readable table: metric rows by classifier columns, `mean±std`
/// cells (accuracies in percent, kappa unitless), with the timing table
/// underneath.
pub fn text_table(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    let width = 22usize;
    let _ = write!(out, "{:10}", "");
    for report in reports {
        let _ = write!(out, "{:>width$}", report.classifier.to_uppercase());
    }
    out.push('\n');
    let cell = |agg: Aggregate, percent: bool| -> String {
        if percent {
            format!("{:.2}±{:.3}", agg.mean * 100.0, agg.std * 100.0)
        } else {
            format!("{:.4}±{:.4}", agg.mean, agg.std)
        }
    };
    for (label, percent) in [("kappa", false), ("OA", true), ("AA", true)] {
        let _ = write!(out, "{label:10}");
        for report in reports {
            let agg = match label {
                "kappa" => report.kappa(),
                "OA" => report.oa(),
                _ => report.aa(),
            };
            let _ = write!(out, "{:>width$}", cell(agg, percent));
        }
        out.push('\n');
    }
    out.push('\n');
    let _ = write!(out, "{:10}", "seconds");
    for report in reports {
        let _ = write!(out, "{:>width$}", report.classifier.to_uppercase());
    }
    out.push('\n');
    for phase in ["train", "test"] {
        let _ = write!(out, "{phase:10}");
        for report in reports {
            let agg = if phase == "train" {
                report.train_seconds()
            } else {
                report.test_seconds()
            };
            let _ = write!(out, "{:>width$}", format!("{:.2}±{:.2}", agg.mean, agg.std));
        }
        out.push('\n');
    }
    out
}
