//! Relative frequencies, z-score standardization, and the probability and
//! rank representations derived from z-scores.
//!
//! Standardization fits a per-token mean and standard deviation over the
//! corpus. Tokens whose relative frequency never varies carry no signal and
//! would divide by zero, so they are dropped with a logged warning. Both the
//! centred form `(p - mu) / sigma` and the uncentred form `p / sigma` are
//! supported; coordinate differences between two documents are identical in
//! the two forms because the mean cancels.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::corpus::{FrequencyMatrix, Vocabulary};
use crate::error::{Error, Result};

/// Whether z-scores are mean-centred or left as scaled frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZMode {
    Centred,
    Uncentred,
}

impl fmt::Display for ZMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZMode::Centred => write!(f, "centred"),
            ZMode::Uncentred => write!(f, "uncentred"),
        }
    }
}

impl FromStr for ZMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centred" => Ok(ZMode::Centred),
            "uncentred" => Ok(ZMode::Uncentred),
            other => Err(Error::InvalidParameter(format!(
                "unknown z-score mode {other:?}; expected centred or uncentred"
            ))),
        }
    }
}

/// Document-by-token relative frequencies; every row sums to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RelFreqMatrix {
    docs: Vec<String>,
    vocab: Vocabulary,
    values: Array2<f64>,
}

impl RelFreqMatrix {
    pub fn docs(&self) -> &[String] {
        &self.docs
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }
}

/// Per-token mean and standard deviation fitted on a relative-frequency
/// matrix. `mu` and `sigma` cover every fitted column; columns listed in
/// `dropped` had zero variance (their `sigma` entry is 0) and are removed by
/// [`z_transform`].
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationStats {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Delta degrees of freedom: 0 divides by D, 1 by D - 1.
    pub ddof: u8,
    /// Column indices (into the fitted matrix) with zero variance.
    pub dropped: Vec<usize>,
}

/// Standardized document-by-token matrix. The vocabulary excludes dropped
/// zero-variance columns. Uncentred values are never negative.
#[derive(Debug, Clone, PartialEq)]
pub struct ZMatrix {
    docs: Vec<String>,
    vocab: Vocabulary,
    values: Array2<f64>,
    mode: ZMode,
}

impl ZMatrix {
    /// Assemble directly, for synthetic inputs; pipeline code uses
    /// [`z_transform`]. Dimensions must agree and uncentred values must be
    /// non-negative.
    pub fn from_parts(
        docs: Vec<String>,
        vocab: Vocabulary,
        values: Array2<f64>,
        mode: ZMode,
    ) -> Result<Self> {
        if values.nrows() != docs.len() {
            return Err(Error::LengthMismatch {
                left: docs.len(),
                right: values.nrows(),
            });
        }
        if values.ncols() != vocab.len() {
            return Err(Error::VocabularyMismatch {
                expected: vocab.len(),
                found: values.ncols(),
            });
        }
        if mode == ZMode::Uncentred && values.iter().any(|v| *v < 0.0) {
            return Err(Error::InvalidParameter(
                "uncentred z-scores cannot be negative".into(),
            ));
        }
        Ok(ZMatrix {
            docs,
            vocab,
            values,
            mode,
        })
    }

    pub fn docs(&self) -> &[String] {
        &self.docs
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn mode(&self) -> ZMode {
        self.mode
    }

    pub fn n_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn n_types(&self) -> usize {
        self.vocab.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        row_slice(&self.values, i)
    }
}

/// Per-document probability distributions over the retained vocabulary,
/// produced from uncentred z-scores by epsilon smoothing and row
/// normalization. Rows sum to 1; with a positive epsilon all entries are
/// strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    docs: Vec<String>,
    vocab: Vocabulary,
    values: Array2<f64>,
    epsilon: f64,
}

impl ProbabilityMatrix {
    pub fn docs(&self) -> &[String] {
        &self.docs
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn row(&self, i: usize) -> &[f64] {
        row_slice(&self.values, i)
    }
}

/// Per-document rank vectors over the retained vocabulary. Rank 1 is the
/// largest value in the row; tied values share the average of the ranks they
/// span, so every row sums to n(n+1)/2.
#[derive(Debug, Clone, PartialEq)]
pub struct RankMatrix {
    docs: Vec<String>,
    vocab: Vocabulary,
    values: Array2<f64>,
}

impl RankMatrix {
    pub fn docs(&self) -> &[String] {
        &self.docs
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        row_slice(&self.values, i)
    }
}

fn row_slice(values: &Array2<f64>, i: usize) -> &[f64] {
    values
        .row(i)
        .to_slice()
        .expect("matrix rows are contiguous in row-major layout")
}

/// Convert counts to per-document relative frequencies over the selected
/// vocabulary. Fails if any document has a zero total over that vocabulary.
pub fn relative_frequencies(matrix: &FrequencyMatrix) -> Result<RelFreqMatrix> {
    let counts = matrix.counts();
    let mut values = Array2::<f64>::zeros(counts.dim());
    for (i, row) in counts.outer_iter().enumerate() {
        let total: u64 = row.iter().sum();
        if total == 0 {
            return Err(Error::ZeroRowTotal {
                doc: matrix.docs()[i].clone(),
            });
        }
        for (j, &count) in row.iter().enumerate() {
            values[[i, j]] = count as f64 / total as f64;
        }
    }
    Ok(RelFreqMatrix {
        docs: matrix.docs().to_vec(),
        vocab: matrix.vocab().clone(),
        values,
    })
}

/// Fit per-token mean and standard deviation. A column is flagged as
/// dropped when every document has the same value there (true zero
/// variance); flagged columns are reported via a warning log line. Fails if
/// that flags every column.
pub fn fit_stats(rel: &RelFreqMatrix, ddof: u8) -> Result<StandardizationStats> {
    if ddof > 1 {
        return Err(Error::InvalidParameter(format!(
            "ddof must be 0 or 1, got {ddof}"
        )));
    }
    let d = rel.values.nrows();
    if d < 2 {
        return Err(Error::CorpusTooSmall { docs: d });
    }
    let denom = (d - ddof as usize) as f64;
    let mut mu = Vec::with_capacity(rel.values.ncols());
    let mut sigma = Vec::with_capacity(rel.values.ncols());
    let mut dropped = Vec::new();
    for (j, col) in rel.values.columns().into_iter().enumerate() {
        let mean = col.iter().sum::<f64>() / d as f64;
        mu.push(mean);
        let constant = col.iter().all(|v| *v == col[0]);
        if constant {
            dropped.push(j);
            sigma.push(0.0);
        } else {
            let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
            sigma.push((ss / denom).sqrt());
        }
    }
    if dropped.len() == rel.values.ncols() {
        return Err(Error::AllColumnsDropped);
    }
    if !dropped.is_empty() {
        let shown: Vec<&str> = dropped
            .iter()
            .take(8)
            .map(|&j| rel.vocab.token(j))
            .collect();
        log::warn!(
            "dropping {} zero-variance token(s) from standardization: {:?}{}",
            dropped.len(),
            shown,
            if dropped.len() > 8 { " ..." } else { "" }
        );
    }
    Ok(StandardizationStats {
        mu,
        sigma,
        ddof,
        dropped,
    })
}

/// Standardize a relative-frequency matrix with previously fitted stats,
/// removing the dropped columns. `Centred` gives `(p - mu) / sigma`,
/// `Uncentred` gives `p / sigma`.
pub fn z_transform(
    rel: &RelFreqMatrix,
    stats: &StandardizationStats,
    mode: ZMode,
) -> Result<ZMatrix> {
    if stats.mu.len() != rel.values.ncols() {
        return Err(Error::VocabularyMismatch {
            expected: stats.mu.len(),
            found: rel.values.ncols(),
        });
    }
    let keep: Vec<usize> = (0..rel.values.ncols())
        .filter(|j| !stats.dropped.contains(j))
        .collect();
    let tokens: Vec<String> = keep.iter().map(|&j| rel.vocab.token(j).to_string()).collect();
    let mut values = Array2::<f64>::zeros((rel.values.nrows(), keep.len()));
    for (out_j, &j) in keep.iter().enumerate() {
        let mu = stats.mu[j];
        let sigma = stats.sigma[j];
        for i in 0..rel.values.nrows() {
            let p = rel.values[[i, j]];
            values[[i, out_j]] = match mode {
                ZMode::Centred => (p - mu) / sigma,
                ZMode::Uncentred => p / sigma,
            };
        }
    }
    ZMatrix::from_parts(rel.docs.clone(), Vocabulary::new(tokens)?, values, mode)
}

/// Turn uncentred z-scores into per-document probability distributions:
/// add `epsilon` to every component, then normalize each row to sum to 1.
/// Centred input is rejected because negative components cannot be
/// probabilities.
pub fn to_probability(z: &ZMatrix, epsilon: f64) -> Result<ProbabilityMatrix> {
    if z.mode != ZMode::Uncentred {
        return Err(Error::ModeMismatch {
            metric: "probability representation".into(),
            required: "uncentred z-scores".into(),
            found: z.mode.to_string(),
        });
    }
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be finite and non-negative, got {epsilon}"
        )));
    }
    let mut values = Array2::<f64>::zeros(z.values.dim());
    for (i, row) in z.values.outer_iter().enumerate() {
        let total: f64 = row.iter().map(|v| v + epsilon).sum();
        if total <= 0.0 {
            return Err(Error::ZeroRowTotal {
                doc: z.docs[i].clone(),
            });
        }
        for (j, &v) in row.iter().enumerate() {
            values[[i, j]] = (v + epsilon) / total;
        }
    }
    Ok(ProbabilityMatrix {
        docs: z.docs.clone(),
        vocab: z.vocab.clone(),
        values,
        epsilon,
    })
}

/// Rank the components of one row in descending order: rank 1 is the
/// largest value and tied values share the average of the ranks they cover.
pub fn to_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start..end (0-based) tie; they share the mean of ranks
        // start+1 ..= end.
        let shared = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = shared;
        }
        start = end;
    }
    ranks
}

/// Rank every document row of a z-matrix independently.
pub fn to_rank_matrix(z: &ZMatrix) -> RankMatrix {
    let mut values = Array2::<f64>::zeros(z.values.dim());
    for (i, row) in z.values.outer_iter().enumerate() {
        let ranks = to_ranks(row.to_slice().expect("contiguous row"));
        for (j, r) in ranks.into_iter().enumerate() {
            values[[i, j]] = r;
        }
    }
    RankMatrix {
        docs: z.docs.clone(),
        vocab: z.vocab.clone(),
        values,
    }
}
