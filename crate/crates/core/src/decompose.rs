//! Token-level contribution tables: how much each token pushes two authors
//! (or two documents) apart under a given measure.
//!
//! Contributions are exact decompositions, not approximations. Summing a
//! table recovers the distance it was derived from:
//!
//! * `burrows`: contributions sum to the unnormalized L1 distance;
//! * `cosine`: 1 plus the contribution sum equals the distance, and a
//!   token contributes positively exactly when its z-scores disagree in
//!   sign;
//! * `jsd`: contributions sum to the divergence;
//! * `rtd`: contributions sum to the divergence.
//!
//! The L2 measure has no meaningful per-token split and is rejected.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::metrics::{plog2, rtd_normalizer, MetricKind, MetricSpec};
use crate::standardize::{to_ranks, ZMatrix, ZMode};

/// Mean z-score vector of one author's documents (or a single document).
#[derive(Debug, Clone, PartialEq)]
pub struct AuthorProfile {
    pub author: String,
    pub mean_z: Vec<f64>,
    /// How many documents were averaged.
    pub support: usize,
    /// Mode inherited from the source matrix.
    pub mode: ZMode,
    pub vocab: Vocabulary,
}

/// Average the z-score rows of every document labelled with `author`.
/// `doc_authors` must align with the matrix rows.
pub fn author_profile(
    z: &ZMatrix,
    doc_authors: &[String],
    author: &str,
) -> Result<AuthorProfile> {
    if doc_authors.len() != z.n_docs() {
        return Err(Error::LengthMismatch {
            left: doc_authors.len(),
            right: z.n_docs(),
        });
    }
    let member_rows: Vec<usize> = doc_authors
        .iter()
        .enumerate()
        .filter(|(_, a)| a.as_str() == author)
        .map(|(i, _)| i)
        .collect();
    if member_rows.is_empty() {
        return Err(Error::UnknownAuthor {
            author: author.to_string(),
        });
    }
    let mut mean_z = vec![0.0; z.n_types()];
    for &i in &member_rows {
        for (j, v) in z.row(i).iter().enumerate() {
            mean_z[j] += v;
        }
    }
    let count = member_rows.len() as f64;
    for v in &mut mean_z {
        *v /= count;
    }
    Ok(AuthorProfile {
        author: author.to_string(),
        mean_z,
        support: member_rows.len(),
        mode: z.mode(),
        vocab: z.vocab().clone(),
    })
}

/// Wrap a single document row as a profile, for document-vs-document
/// contribution tables.
pub fn document_profile(z: &ZMatrix, index: usize) -> Result<AuthorProfile> {
    if index >= z.n_docs() {
        return Err(Error::KOutOfRange {
            k: index,
            n: z.n_docs(),
        });
    }
    Ok(AuthorProfile {
        author: z.docs()[index].clone(),
        mean_z: z.row(index).to_vec(),
        support: 1,
        mode: z.mode(),
        vocab: z.vocab().clone(),
    })
}

/// Which side of the comparison a token speaks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Favored {
    Side1,
    Side2,
    Neutral,
}

impl fmt::Display for Favored {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Favored::Side1 => write!(f, "side1"),
            Favored::Side2 => write!(f, "side2"),
            Favored::Neutral => write!(f, "neutral"),
        }
    }
}

/// One token's share of the distance between two profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionRow {
    pub token: String,
    pub delta: f64,
    pub favored: Favored,
}

/// Per-token contributions for one profile pair under one measure. Covers
/// every retained token exactly once, in vocabulary order.
#[derive(Debug, Clone, PartialEq)]
pub struct ContributionTable {
    pub metric: MetricSpec,
    pub pair: (String, String),
    pub rows: Vec<ContributionRow>,
}

impl ContributionTable {
    /// Sum of all contribution values.
    pub fn total(&self) -> f64 {
        self.rows.iter().map(|r| r.delta).sum()
    }
}

/// Decompose the distance between two profiles into per-token
/// contributions. For `jsd`, profiles are first converted to epsilon
/// -smoothed probabilities; for `rtd`, to rank vectors. The profiles must
/// share vocabulary and mode.
pub fn contributions(
    side1: &AuthorProfile,
    side2: &AuthorProfile,
    metric: &MetricSpec,
    epsilon: f64,
) -> Result<ContributionTable> {
    metric.validate()?;
    if side1.vocab != side2.vocab {
        return Err(Error::VocabularyMismatch {
            expected: side1.vocab.len(),
            found: side2.vocab.len(),
        });
    }
    if side1.mode != side2.mode {
        return Err(Error::ModeMismatch {
            metric: metric.kind.to_string(),
            required: side1.mode.to_string(),
            found: side2.mode.to_string(),
        });
    }
    let deltas: Vec<(f64, Favored)> = match metric.kind {
        MetricKind::Burrows => burrows_contributions(&side1.mean_z, &side2.mean_z),
        MetricKind::Cosine => cosine_contributions(side1, side2, metric)?,
        MetricKind::Jsd => jsd_contributions(side1, side2, metric, epsilon)?,
        MetricKind::Rtd => rtd_contributions(side1, side2, metric)?,
        MetricKind::Quadratic => {
            return Err(Error::InvalidParameter(
                "no token-level decomposition is defined for the quadratic measure".into(),
            ))
        }
    };
    let rows = side1
        .vocab
        .tokens()
        .iter()
        .zip(deltas)
        .map(|(token, (delta, favored))| ContributionRow {
            token: token.clone(),
            delta,
            favored,
        })
        .collect();
    Ok(ContributionTable {
        metric: *metric,
        pair: (side1.author.clone(), side2.author.clone()),
        rows,
    })
}

/// Absolute z-score difference per token; the side with the larger scaled
/// frequency is favored. Works in either mode because the mean cancels.
fn burrows_contributions(z1: &[f64], z2: &[f64]) -> Vec<(f64, Favored)> {
    z1.iter()
        .zip(z2)
        .map(|(a, b)| {
            let favored = if a > b {
                Favored::Side1
            } else if a < b {
                Favored::Side2
            } else {
                Favored::Neutral
            };
            ((a - b).abs(), favored)
        })
        .collect()
}

/// Negated product of unit-scaled centred z-scores. A positive value marks
/// sign disagreement (one author above the corpus mean, the other below)
/// and favors the side above it; agreement contributes negatively and is
/// neutral.
fn cosine_contributions(
    side1: &AuthorProfile,
    side2: &AuthorProfile,
    metric: &MetricSpec,
) -> Result<Vec<(f64, Favored)>> {
    if side1.mode != ZMode::Centred {
        return Err(Error::ModeMismatch {
            metric: metric.kind.to_string(),
            required: "centred z-scores".into(),
            found: side1.mode.to_string(),
        });
    }
    let m1 = side1.mean_z.iter().map(|v| v * v).sum::<f64>().sqrt();
    let m2 = side2.mean_z.iter().map(|v| v * v).sum::<f64>().sqrt();
    if m1 == 0.0 || m2 == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(side1
        .mean_z
        .iter()
        .zip(&side2.mean_z)
        .map(|(a, b)| {
            let delta = -(a / m1) * (b / m2);
            let favored = if delta > 0.0 {
                if *a > 0.0 {
                    Favored::Side1
                } else {
                    Favored::Side2
                }
            } else {
                Favored::Neutral
            };
            (delta, favored)
        })
        .collect())
}

/// Mixture-entropy surplus per token; the side with the larger smoothed
/// probability is favored.
fn jsd_contributions(
    side1: &AuthorProfile,
    side2: &AuthorProfile,
    metric: &MetricSpec,
    epsilon: f64,
) -> Result<Vec<(f64, Favored)>> {
    if side1.mode != ZMode::Uncentred {
        return Err(Error::ModeMismatch {
            metric: metric.kind.to_string(),
            required: "uncentred z-scores".into(),
            found: side1.mode.to_string(),
        });
    }
    let p = profile_probabilities(side1, epsilon)?;
    let q = profile_probabilities(side2, epsilon)?;
    let pi1 = metric.pi1;
    let pi2 = 1.0 - pi1;
    Ok(p
        .iter()
        .zip(&q)
        .map(|(a, b)| {
            let m = pi1 * a + pi2 * b;
            let delta = plog2(m) - (pi1 * plog2(*a) + pi2 * plog2(*b));
            let favored = if a > b {
                Favored::Side1
            } else if a < b {
                Favored::Side2
            } else {
                Favored::Neutral
            };
            (delta, favored)
        })
        .collect())
}

/// Smooth and normalize a profile vector into a probability distribution,
/// mirroring the document-level conversion.
pub(crate) fn profile_probabilities(profile: &AuthorProfile, epsilon: f64) -> Result<Vec<f64>> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be finite and non-negative, got {epsilon}"
        )));
    }
    let total: f64 = profile.mean_z.iter().map(|v| v + epsilon).sum();
    if total <= 0.0 {
        return Err(Error::ZeroRowTotal {
            doc: profile.author.clone(),
        });
    }
    let rho: Vec<f64> = profile.mean_z.iter().map(|v| (v + epsilon) / total).collect();
    if let Some(i) = rho.iter().position(|p| *p <= 0.0) {
        return Err(Error::ZeroProbability {
            what: format!(
                "token {:?} in the profile of {:?}",
                profile.vocab.token(i),
                profile.author
            ),
        });
    }
    Ok(rho)
}

/// Normalized rank-difference term per token; the side where the token
/// ranks better (closer to 1) is favored.
fn rtd_contributions(
    side1: &AuthorProfile,
    side2: &AuthorProfile,
    metric: &MetricSpec,
) -> Result<Vec<(f64, Favored)>> {
    let r1 = to_ranks(&side1.mean_z);
    let r2 = to_ranks(&side2.mean_z);
    let alpha = metric.alpha;
    let normalizer = rtd_normalizer(
        r1.len(),
        r2.len(),
        &r1,
        &r2,
        alpha,
        metric.rtd_normalizer,
    )?;
    let scale = (alpha + 1.0) / alpha;
    let inv_pow = 1.0 / (alpha + 1.0);
    Ok(r1
        .iter()
        .zip(&r2)
        .map(|(a, b)| {
            let delta =
                scale * (a.powf(-alpha) - b.powf(-alpha)).abs().powf(inv_pow) / normalizer.value;
            let favored = if a < b {
                Favored::Side1
            } else if a > b {
                Favored::Side2
            } else {
                Favored::Neutral
            };
            (delta, favored)
        })
        .collect())
}

/// The `k` strongest rows of a table, ordered by descending contribution
/// magnitude with ties broken by token string. For `cosine`, only rows
/// with positive contributions qualify, since negative rows mark agreement.
/// Asking for more rows than qualify returns them all.
pub fn top_k(table: &ContributionTable, k: usize) -> ContributionTable {
    let mut rows: Vec<ContributionRow> = match table.metric.kind {
        MetricKind::Cosine => table
            .rows
            .iter()
            .filter(|r| r.delta > 0.0)
            .cloned()
            .collect(),
        _ => table.rows.clone(),
    };
    rows.sort_by(|a, b| {
        b.delta
            .abs()
            .total_cmp(&a.delta.abs())
            .then_with(|| a.token.cmp(&b.token))
    });
    rows.truncate(k);
    ContributionTable {
        metric: table.metric,
        pair: table.pair.clone(),
        rows,
    }
}
