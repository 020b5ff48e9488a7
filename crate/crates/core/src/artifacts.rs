//! Reading and writing the on-disk artifacts: count and value matrices as
//! CSV, distance matrices with a JSON sidecar describing how they were
//! built, and report files for contributions, sweeps, and robustness
//! checks.
//!
//! Floating-point cells are written with Rust's shortest round-trip
//! formatting, so reading a file back reproduces the original values bit
//! for bit. Nothing here records timestamps or machine details; rerunning
//! a command yields byte-identical files.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::corpus::{FrequencyMatrix, Vocabulary};
use crate::decompose::{ContributionTable, Favored};
use crate::error::{Error, Result};
use crate::evaluate::SweepReport;
use crate::metrics::DistanceMatrix;
use crate::pipeline::PipelineParams;
use crate::robustness::{BootstrapReport, MfwStabilityReport, RemovalReport};

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| Error::FileWrite {
        path: path.to_path_buf(),
        source: e,
    })
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| Error::FileRead {
        path: path.to_path_buf(),
        source: e,
    })
}

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::MalformedTable {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let file = create(path)?;
    serde_json::to_writer_pretty(file, value).map_err(|e| Error::MalformedJson {
        path: path.to_path_buf(),
        source: e,
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = open(path)?;
    serde_json::from_reader(file).map_err(|e| Error::MalformedJson {
        path: path.to_path_buf(),
        source: e,
    })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

fn finish(mut writer: csv::Writer<fs::File>, path: &Path) -> Result<()> {
    writer.flush().map_err(|e| Error::FileWrite {
        path: path.to_path_buf(),
        source: e,
    })
}

fn csv_records(path: &Path) -> Result<(csv::StringRecord, Vec<csv::StringRecord>)> {
    let mut reader = csv::Reader::from_reader(open(path)?);
    let header = reader
        .headers()
        .map_err(|e| malformed(path, e.to_string()))?
        .clone();
    let rows = reader
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| malformed(path, e.to_string()))?;
    Ok((header, rows))
}

/// Write a count matrix as CSV: an `id` column followed by one column per
/// token, one row per document.
pub fn write_frequency_csv(matrix: &FrequencyMatrix, path: &Path) -> Result<()> {
    let mut writer = csv_writer(path)?;
    let mut header = vec!["id".to_string()];
    header.extend(matrix.vocab().tokens().iter().cloned());
    writer
        .write_record(&header)
        .map_err(|e| malformed(path, e.to_string()))?;
    for (i, id) in matrix.docs().iter().enumerate() {
        let mut record = vec![id.clone()];
        record.extend(matrix.counts().row(i).iter().map(|c| c.to_string()));
        writer
            .write_record(&record)
            .map_err(|e| malformed(path, e.to_string()))?;
    }
    finish(writer, path)
}

/// Read a count matrix written by [`write_frequency_csv`]. Column order is
/// taken as the vocabulary order.
pub fn read_frequency_csv(path: &Path) -> Result<FrequencyMatrix> {
    let (header, rows) = csv_records(path)?;
    if header.is_empty() {
        return Err(malformed(path, "empty header"));
    }
    let tokens: Vec<String> = header.iter().skip(1).map(|t| t.to_string()).collect();
    let vocab = Vocabulary::new(tokens)?;
    let mut docs = Vec::with_capacity(rows.len());
    let mut counts = Array2::<u64>::zeros((rows.len(), vocab.len()));
    for (i, row) in rows.iter().enumerate() {
        if row.len() != vocab.len() + 1 {
            return Err(malformed(
                path,
                format!("row {} has {} fields, expected {}", i + 2, row.len(), vocab.len() + 1),
            ));
        }
        docs.push(row[0].to_string());
        for j in 0..vocab.len() {
            counts[[i, j]] = row[j + 1].parse::<u64>().map_err(|e| {
                malformed(path, format!("row {} column {}: {e}", i + 2, j + 2))
            })?;
        }
    }
    FrequencyMatrix::from_parts(docs, vocab, counts)
}

/// Write a document-by-token value matrix (z-scores, probabilities, or
/// ranks) as CSV with the same layout as the count matrix.
pub fn write_values_csv(
    docs: &[String],
    tokens: &[String],
    values: &Array2<f64>,
    path: &Path,
) -> Result<()> {
    let mut writer = csv_writer(path)?;
    let mut header = vec!["id".to_string()];
    header.extend(tokens.iter().cloned());
    writer
        .write_record(&header)
        .map_err(|e| malformed(path, e.to_string()))?;
    for (i, id) in docs.iter().enumerate() {
        let mut record = vec![id.clone()];
        record.extend(values.row(i).iter().map(|v| v.to_string()));
        writer
            .write_record(&record)
            .map_err(|e| malformed(path, e.to_string()))?;
    }
    finish(writer, path)
}

/// Read a matrix written by [`write_values_csv`].
pub fn read_values_csv(path: &Path) -> Result<(Vec<String>, Vec<String>, Array2<f64>)> {
    let (header, rows) = csv_records(path)?;
    if header.is_empty() {
        return Err(malformed(path, "empty header"));
    }
    let tokens: Vec<String> = header.iter().skip(1).map(|t| t.to_string()).collect();
    let mut docs = Vec::with_capacity(rows.len());
    let mut values = Array2::<f64>::zeros((rows.len(), tokens.len()));
    for (i, row) in rows.iter().enumerate() {
        if row.len() != tokens.len() + 1 {
            return Err(malformed(
                path,
                format!("row {} has {} fields, expected {}", i + 2, row.len(), tokens.len() + 1),
            ));
        }
        docs.push(row[0].to_string());
        for j in 0..tokens.len() {
            values[[i, j]] = row[j + 1].parse::<f64>().map_err(|e| {
                malformed(path, format!("row {} column {}: {e}", i + 2, j + 2))
            })?;
        }
    }
    Ok((docs, tokens, values))
}

/// The provenance recorded next to a distance matrix: which measure
/// produced it and with what pipeline settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceSidecar {
    pub metric: crate::metrics::MetricSpec,
    pub pipeline: PipelineParams,
}

/// Write a distance matrix as a square CSV (document ids in both the
/// header and the first column) plus a JSON sidecar with the metric and
/// pipeline parameters.
pub fn write_distance_artifacts(
    dist: &DistanceMatrix,
    pipeline: &PipelineParams,
    csv_path: &Path,
    json_path: &Path,
) -> Result<()> {
    let mut writer = csv_writer(csv_path)?;
    let mut header = vec!["id".to_string()];
    header.extend(dist.docs().iter().cloned());
    writer
        .write_record(&header)
        .map_err(|e| malformed(csv_path, e.to_string()))?;
    for (i, id) in dist.docs().iter().enumerate() {
        let mut record = vec![id.clone()];
        record.extend(dist.values().row(i).iter().map(|v| v.to_string()));
        writer
            .write_record(&record)
            .map_err(|e| malformed(csv_path, e.to_string()))?;
    }
    finish(writer, csv_path)?;
    write_json(
        &DistanceSidecar {
            metric: *dist.metric(),
            pipeline: *pipeline,
        },
        json_path,
    )
}

/// Read a distance matrix and its sidecar back. The matrix is revalidated
/// (square, symmetric, zero diagonal) on the way in.
pub fn read_distance_artifacts(
    csv_path: &Path,
    json_path: &Path,
) -> Result<(DistanceMatrix, PipelineParams)> {
    let sidecar: DistanceSidecar = read_json(json_path)?;
    let (header, rows) = csv_records(csv_path)?;
    let header_docs: Vec<String> = header.iter().skip(1).map(|d| d.to_string()).collect();
    if rows.len() != header_docs.len() {
        return Err(malformed(
            csv_path,
            format!(
                "{} data rows but {} header columns; the matrix must be square",
                rows.len(),
                header_docs.len()
            ),
        ));
    }
    let n = header_docs.len();
    let mut values = Array2::<f64>::zeros((n, n));
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n + 1 {
            return Err(malformed(
                csv_path,
                format!("row {} has {} fields, expected {}", i + 2, row.len(), n + 1),
            ));
        }
        if row[0] != header_docs[i] {
            return Err(malformed(
                csv_path,
                format!
                    ("row {} is labelled {:?} but the header says {:?}", i + 2, &row[0], header_docs[i]),
            ));
        }
        for j in 0..n {
            values[[i, j]] = row[j + 1].parse::<f64>().map_err(|e| {
                malformed(csv_path, format!("row {} column {}: {e}", i + 2, j + 2))
            })?;
        }
    }
    let dist = DistanceMatrix::new(header_docs, sidecar.metric, values)?;
    Ok((dist, sidecar.pipeline))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct WordShiftRow<'a> {
    token: &'a str,
    delta: f64,
    favored: Favored,
    /// Plot-ready signed length: positive bars point toward side 1,
    /// negative ones toward side 2.
    bar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct WordShift<'a> {
    metric: crate::metrics::MetricSpec,
    pair: (&'a str, &'a str),
    total: f64,
    rows: Vec<WordShiftRow<'a>>,
}

/// Write a contribution table as CSV (token, delta, favored side, rank in
/// the given order) plus a word-shift JSON with signed bar lengths for
/// plotting.
pub fn write_contribution_artifacts(
    table: &ContributionTable,
    csv_path: &Path,
    json_path: &Path,
) -> Result<()> {
    let mut writer = csv_writer(csv_path)?;
    writer
        .write_record(["token", "delta", "favored", "rank"])
        .map_err(|e| malformed(csv_path, e.to_string()))?;
    for (rank, row) in table.rows.iter().enumerate() {
        writer
            .write_record([
                row.token.as_str(),
                &row.delta.to_string(),
                &row.favored.to_string(),
                &(rank + 1).to_string(),
            ])
            .map_err(|e| malformed(csv_path, e.to_string()))?;
    }
    finish(writer, csv_path)?;

    let shift = WordShift {
        metric: table.metric,
        pair: (table.pair.0.as_str(), table.pair.1.as_str()),
        total: table.total(),
        rows: table
            .rows
            .iter()
            .map(|row| WordShiftRow {
                token: &row.token,
                delta: row.delta,
                favored: row.favored,
                bar: match row.favored {
                    Favored::Side2 => -row.delta,
                    _ => row.delta,
                },
            })
            .collect(),
    };
    write_json(&shift, json_path)
}

/// Write a sweep as long-form CSV (one row per cell, empty fields where an
/// axis does not apply) plus the full report as JSON.
pub fn write_sweep_artifacts(
    report: &SweepReport,
    csv_path: &Path,
    json_path: &Path,
) -> Result<()> {
    let mut writer = csv_writer(csv_path)?;
    writer
        .write_record(["mfw", "metric", "alpha", "zmode", "score", "task", "error"])
        .map_err(|e| malformed(csv_path, e.to_string()))?;
    for cell in &report.cells {
        writer
            .write_record([
                cell.mfw.to_string(),
                cell.metric.to_string(),
                cell.alpha.map(|a| a.to_string()).unwrap_or_default(),
                cell.zmode.to_string(),
                cell.score.map(|s| s.to_string()).unwrap_or_default(),
                report.task.to_string(),
                cell.error.clone().unwrap_or_default(),
            ])
            .map_err(|e| malformed(csv_path, e.to_string()))?;
    }
    finish(writer, csv_path)?;
    write_json(report, json_path)
}

/// Write a word-list stability report as CSV (mfw, jaccard_overlap) plus
/// the report as JSON.
pub fn write_mfw_stability_artifacts(
    report: &MfwStabilityReport,
    csv_path: &Path,
    json_path: &Path,
) -> Result<()> {
    let mut writer = csv_writer(csv_path)?;
    writer
        .write_record(["mfw", "jaccard_overlap"])
        .map_err(|e| malformed(csv_path, e.to_string()))?;
    for row in &report.rows {
        writer
            .write_record([row.mfw.to_string(), row.jaccard.to_string()])
            .map_err(|e| malformed(csv_path, e.to_string()))?;
    }
    finish(writer, csv_path)?;
    write_json(report, json_path)
}

/// Write a bootstrap stability report as a one-row summary CSV (metric,
/// mean_jaccard, std_dev) plus the per-iteration detail as JSON.
pub fn write_bootstrap_artifacts(
    report: &BootstrapReport,
    csv_path: &Path,
    json_path: &Path,
) -> Result<()> {
    let mut writer = csv_writer(csv_path)?;
    writer
        .write_record(["metric", "mean_jaccard", "std_dev"])
        .map_err(|e| malformed(csv_path, e.to_string()))?;
    writer
        .write_record([
            report.metric.to_string(),
            report.mean_jaccard.to_string(),
            report.std_dev.to_string(),
        ])
        .map_err(|e| malformed(csv_path, e.to_string()))?;
    finish(writer, csv_path)?;
    write_json(report, json_path)
}

/// Write a removal experiment as CSV (removed_top_k, distance_before,
/// distance_after) plus the report as JSON.
pub fn write_removal_artifacts(
    report: &RemovalReport,
    csv_path: &Path,
    json_path: &Path,
) -> Result<()> {
    let mut writer = csv_writer(csv_path)?;
    writer
        .write_record(["removed_top_k", "distance_before", "distance_after"])
        .map_err(|e| malformed(csv_path, e.to_string()))?;
    for row in &report.rows {
        writer
            .write_record([
                row.removed_top_k.to_string(),
                report.before.to_string(),
                row.after.to_string(),
            ])
            .map_err(|e| malformed(csv_path, e.to_string()))?;
    }
    finish(writer, csv_path)?;
    write_json(report, json_path)
}
