//! Accuracy metrics (ME, MAE, RMSE, MAPE) and the timing harness used to
//! compare estimation methods against ground truth.

use std::time::Instant;

use crate::angles::circular_diff;
use crate::error::{Error, Result};

/// Aggregated error metrics for one method on one quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    /// Mean error (bias).
    pub me: f64,
    /// Mean absolute error.
    pub mae: f64,
    /// Root mean square error.
    pub rmse: f64,
    /// Mean absolute percentage error, percent; disabled for quantities
    /// with zero-crossing truths.
    pub mape_percent: Option<f64>,
    pub n: usize,
    pub runtime_s_per_item: Option<f64>,
}

/// Compute ME / MAE / RMSE and optionally MAPE over paired predictions.
///
/// With `circular` set, each difference is wrapped to (-180, 180] before
/// aggregation, which scores 179 vs -179 as a 2-degree error.
pub fn compute_metrics(
    pred: &[f64],
    truth: &[f64],
    circular: bool,
    mape_enabled: bool,
) -> Result<MetricReport> {
    if pred.len() != truth.len() {
        return Err(Error::Metrics(format!(
            "length mismatch: {} predictions vs {} truths",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Metrics("empty input".into()));
    }
    if mape_enabled {
        if let Some(i) = truth.iter().position(|&x| x == 0.0) {
            return Err(Error::Metrics(format!(
                "MAPE undefined: truth value at index {i} is zero"
            )));
        }
    }

    let n = pred.len() as f64;
    let mut sum = 0.0;
    let mut sum_abs = 0.0;
    let mut sum_sq = 0.0;
    let mut sum_pct = 0.0;
    for (&p, &t) in pred.iter().zip(truth) {
        let d = if circular { circular_diff(p, t) } else { p - t };
        sum += d;
        sum_abs += d.abs();
        sum_sq += d * d;
        if mape_enabled {
            sum_pct += d.abs() / t;
        }
    }
    Ok(MetricReport {
        me: sum / n,
        mae: sum_abs / n,
        rmse: (sum_sq / n).sqrt(),
        mape_percent: mape_enabled.then(|| 100.0 * sum_pct / n),
        n: pred.len(),
        runtime_s_per_item: None,
    })
}

/// Median wall-clock seconds per item over `repetitions` runs of `op`.
pub fn timed(repetitions: usize, items: usize, mut op: impl FnMut()) -> f64 {
    assert!(repetitions >= 1 && items >= 1);
    let mut per_item: Vec<f64> = (0..repetitions)
        .map(|_| {
            let start = Instant::now();
            op();
            start.elapsed().as_secs_f64() / items as f64
        })
        .collect();
    per_item.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = per_item.len();
    if n % 2 == 1 {
        per_item[n / 2]
    } else {
        0.5 * (per_item[n / 2 - 1] + per_item[n / 2])
    }
}

/// One table row: a named method with its metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub method: String,
    pub report: MetricReport,
}

/// A per-quantity comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkTable {
    pub quantity: String,
    pub circular: bool,
    pub rows: Vec<BenchmarkRow>,
}

/// Compute one row per `(method, predictions, truths)` entry. All rows in a
/// table share the quantity, and thus the circular/MAPE settings.
pub fn benchmark_report(
    quantity: &str,
    circular: bool,
    mape_enabled: bool,
    entries: &[(String, Vec<f64>, Vec<f64>)],
) -> Result<BenchmarkTable> {
    let mut rows = Vec::with_capacity(entries.len());
    for (method, pred, truth) in entries {
        rows.push(BenchmarkRow {
            method: method.clone(),
            report: compute_metrics(pred, truth, circular, mape_enabled)?,
        });
    }
    Ok(BenchmarkTable {
        quantity: quantity.to_string(),
        circular,
        rows,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into())
}

impl BenchmarkTable {
    /// Machine-readable CSV with one row per method.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,n,me,mae,rmse,mape_percent,runtime_s_per_item\n");
        for row in &self.rows {
            let r = &row.report;
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                row.method,
                r.n,
                r.me,
                r.mae,
                r.rmse,
                r.mape_percent.map(|v| v.to_string()).unwrap_or_default(),
                r.runtime_s_per_item
                    .map(|v| v.to_string())
                    .unwrap_or_default(),
            ));
        }
        out
    }

    /// Fixed-width text table for terminals.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let wrap_note = if self.circular {
            " (circular errors, wrapped to (-180, 180])"
        } else {
            ""
        };
        out.push_str(&format!("quantity: {}{}\n", self.quantity, wrap_note));
        let width = self
            .rows
            .iter()
            .map(|r| r.method.len())
            .max()
            .unwrap_or(6)
            .max(6);
        out.push_str(&format!(
            "{:<width$}  {:>8}  {:>12}  {:>12}  {:>12}  {:>10}  {:>12}\n",
            "method", "n", "ME", "MAE", "RMSE", "MAPE[%]", "s/item",
        ));
        for row in &self.rows {
            let r = &row.report;
            out.push_str(&format!(
                "{:<width$}  {:>8}  {:>12.6}  {:>12.6}  {:>12.6}  {:>10}  {:>12}\n",
                row.method,
                r.n,
                r.me,
                r.mae,
                r.rmse,
                fmt_opt(r.mape_percent),
                fmt_opt(r.runtime_s_per_item),
            ));
        }
        out
    }
}
