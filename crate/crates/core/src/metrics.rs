//! Error metrics between thickness maps and dataset-level evaluation
//! reports (JSON, CSV mirror, and a max-thickness histogram).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::expect_same_shape;
use crate::io::read_thickness_file;
use crate::streamline::{Assigned, ThicknessMap};
use crate::synth::DatasetManifest;

/// Pixel support error metrics are computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// Pixels the reference map measured (its wall support).
    Mask,
    /// Every pixel, background included.
    Whole,
}

/// Aggregate absolute/squared error over a support; `support == 0` marks an
/// empty region (both errors read 0 then).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorStats {
    pub mae_mm: f64,
    pub mse_mm2: f64,
    pub support: usize,
}

pub fn error_stats(pred: &ThicknessMap, reference: &ThicknessMap, region: Region) -> Result<ErrorStats> {
    expect_same_shape(&pred.geometry, &reference.geometry, "prediction vs reference")?;
    let mut abs_sum = 0.0f64;
    let mut sq_sum = 0.0f64;
    let mut support = 0usize;
    let assignments = reference.assignments();
    for (i, (&p, &g)) in pred.values().iter().zip(reference.values()).enumerate() {
        if region == Region::Mask && assignments[i] == Assigned::Zero {
            continue;
        }
        let d = p - g;
        abs_sum += d.abs();
        sq_sum += d * d;
        support += 1;
    }
    if support == 0 {
        return Ok(ErrorStats { mae_mm: 0.0, mse_mm2: 0.0, support: 0 });
    }
    Ok(ErrorStats {
        mae_mm: abs_sum / support as f64,
        mse_mm2: sq_sum / support as f64,
        support,
    })
}

pub fn mae(pred: &ThicknessMap, reference: &ThicknessMap, region: Region) -> Result<f64> {
    Ok(error_stats(pred, reference, region)?.mae_mm)
}

pub fn mse(pred: &ThicknessMap, reference: &ThicknessMap, region: Region) -> Result<f64> {
    Ok(error_stats(pred, reference, region)?.mse_mm2)
}

/// Largest measured value in the map.
pub fn max_thickness(map: &ThicknessMap) -> f64 {
    map.max_mm()
}

/// Fixed-width counting histogram over [lo, hi) with half-open bins;
/// out-of-range values clamp into the edge bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
}

pub fn histogram(values: &[f64], lo: f64, hi: f64, bin_width: f64) -> Result<Histogram> {
    if !(hi > lo) || !(bin_width > 0.0) {
        return Err(Error::Range(format!(
            "histogram needs lo < hi and a positive bin width, got [{lo}, {hi}) step {bin_width}"
        )));
    }
    let n_bins = ((hi - lo) / bin_width).ceil() as usize;
    let mut counts = vec![0u64; n_bins];
    for &v in values {
        let bin = if v < lo {
            0
        } else {
            (((v - lo) / bin_width) as usize).min(n_bins - 1)
        };
        counts[bin] += 1;
    }
    Ok(Histogram { lo, hi, bin_width, counts })
}

impl Histogram {
    pub fn bin_range(&self, i: usize) -> (f64, f64) {
        (self.lo + i as f64 * self.bin_width, self.lo + (i + 1) as f64 * self.bin_width)
    }
}

/// Per-item evaluation row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemEval {
    pub id: usize,
    pub mae_mm: f64,
    pub mse_mm2: f64,
    pub max_reference_mm: f64,
    pub max_predicted_mm: f64,
}

/// Dataset-level evaluation: per-item errors, their population statistics,
/// and max-thickness histograms for both sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub region: Region,
    pub n_items: usize,
    pub mean_mae_mm: f64,
    pub std_mae_mm: f64,
    pub mean_mse_mm2: f64,
    pub std_mse_mm2: f64,
    /// `mean(std)` with three decimals, e.g. `0.321(0.060)`.
    pub mae_summary: String,
    pub mse_summary: String,
    pub items: Vec<ItemEval>,
    pub reference_max_histogram: Histogram,
    pub predicted_max_histogram: Histogram,
}

/// Histogram domain for max thickness, millimeters.
const MAX_HIST_LO: f64 = 0.0;
const MAX_HIST_HI: f64 = 64.0;
const MAX_HIST_STEP: f64 = 2.0;

fn population_stats(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn format_mean_std(mean: f64, std: f64) -> String {
    format!("{mean:.3}({std:.3})")
}

/// Evaluate predicted maps against reference maps. Both directories mirror
/// the manifest's relative `thickness` paths.
pub fn eval_dataset(
    pred_dir: &Path,
    reference_dir: &Path,
    manifest: &DatasetManifest,
    region: Region,
) -> Result<EvalReport> {
    if manifest.entries.is_empty() {
        return Err(Error::Config("manifest lists no items".into()));
    }
    let mut items = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        let reference = read_thickness_file(&reference_dir.join(&entry.thickness), None)?;
        let predicted = read_thickness_file(&pred_dir.join(&entry.thickness), None)?;
        let stats = error_stats(&predicted, &reference, region)?;
        items.push(ItemEval {
            id: entry.id,
            mae_mm: stats.mae_mm,
            mse_mm2: stats.mse_mm2,
            max_reference_mm: reference.max_mm(),
            max_predicted_mm: predicted.max_mm(),
        });
    }
    let maes: Vec<f64> = items.iter().map(|i| i.mae_mm).collect();
    let mses: Vec<f64> = items.iter().map(|i| i.mse_mm2).collect();
    let (mean_mae, std_mae) = population_stats(&maes);
    let (mean_mse, std_mse) = population_stats(&mses);
    let ref_max: Vec<f64> = items.iter().map(|i| i.max_reference_mm).collect();
    let pred_max: Vec<f64> = items.iter().map(|i| i.max_predicted_mm).collect();
    Ok(EvalReport {
        region,
        n_items: items.len(),
        mean_mae_mm: mean_mae,
        std_mae_mm: std_mae,
        mean_mse_mm2: mean_mse,
        std_mse_mm2: std_mse,
        mae_summary: format_mean_std(mean_mae, std_mae),
        mse_summary: format_mean_std(mean_mse, std_mse),
        items,
        reference_max_histogram: histogram(&ref_max, MAX_HIST_LO, MAX_HIST_HI, MAX_HIST_STEP)?,
        predicted_max_histogram: histogram(&pred_max, MAX_HIST_LO, MAX_HIST_HI, MAX_HIST_STEP)?,
    })
}

/// Write the report as JSON, with a per-item CSV mirror next to it and the
/// max-thickness histogram as `<stem>.hist.csv`.
pub fn write_eval_report(json_path: &Path, report: &EvalReport) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Config(format!("report serialization: {e}")))?;
    text.push('\n');
    fs::write(json_path, text).map_err(|e| Error::io(json_path.to_path_buf(), e))?;

    let csv_path = json_path.with_extension("csv");
    let mut writer = csv::Writer::from_writer(Vec::new());
    for item in &report.items {
        writer
            .serialize(item)
            .map_err(|e| Error::Config(format!("report row: {e}")))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Config(format!("report flush: {e}")))?;
    fs::write(&csv_path, bytes).map_err(|e| Error::io(csv_path.clone(), e))?;

    let hist_path = json_path.with_extension("hist.csv");
    let mut text = String::from("bin_lo_mm,bin_hi_mm,reference_count,predicted_count\n");
    let h_ref = &report.reference_max_histogram;
    let h_pred = &report.predicted_max_histogram;
    for i in 0..h_ref.counts.len() {
        let (lo, hi) = h_ref.bin_range(i);
        let pred = h_pred.counts.get(i).copied().unwrap_or(0);
        text.push_str(&format!("{lo},{hi},{},{pred}\n", h_ref.counts[i]));
    }
    fs::write(&hist_path, text).map_err(|e| Error::io(hist_path.clone(), e))?;
    Ok(())
}
