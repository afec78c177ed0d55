//! Turns summary CSVs into per-strategy accuracy-vs-compute curve files
//! ready for any plotting tool.

use super::sweep::SummaryRow;
use super::HarnessError;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs::{self, File};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize)]
struct CurvePoint {
    g: u32,
    n: u32,
    log2_flops: f64,
    accuracy: f64,
    stderr: f64,
}

/// Reads a summary CSV and writes one `curves_<strategy>.csv` per
/// strategy into `output_dir`, each sorted by (g, compute budget) so every
/// granularity forms a contiguous accuracy-vs-log2(FLOPs) series.
pub fn report_curves(summary_csv: &Path, output_dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut reader = csv::Reader::from_reader(File::open(summary_csv)?);
    let mut by_strategy: BTreeMap<String, Vec<CurvePoint>> = BTreeMap::new();
    for (index, record) in reader.deserialize::<SummaryRow>().enumerate() {
        let row = record?;
        if !(0.0..=1.0).contains(&row.accuracy) || !row.accuracy.is_finite() {
            return Err(HarnessError::Spec(format!(
                "summary row {index} has accuracy {} outside [0, 1]",
                row.accuracy
            )));
        }
        by_strategy.entry(row.strategy.clone()).or_default().push(CurvePoint {
            g: row.g,
            n: row.n,
            log2_flops: row.log2_flops,
            accuracy: row.accuracy,
            stderr: row.stderr,
        });
    }
    if by_strategy.is_empty() {
        return Err(HarnessError::Spec(format!(
            "summary file {} has no data rows",
            summary_csv.display()
        )));
    }

    fs::create_dir_all(output_dir)?;
    let mut paths = Vec::new();
    for (strategy, mut points) in by_strategy {
        points.sort_by(|a, b| {
            a.g.cmp(&b.g)
                .then(a.log2_flops.total_cmp(&b.log2_flops))
                .then(a.n.cmp(&b.n))
        });
        let path = output_dir.join(format!("curves_{strategy}.csv"));
        let mut writer = csv::Writer::from_writer(File::create(&path)?);
        for point in &points {
            writer.serialize(point)?;
        }
        writer.flush().map_err(csv::Error::from)?;
        paths.push(path);
    }
    Ok(paths)
}
