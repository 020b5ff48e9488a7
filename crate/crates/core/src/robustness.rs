//! Robustness checks for contribution rankings: how stable the top token
//! list is under word-list perturbation and bootstrap resampling, and how
//! the distance responds when the top contributors are removed.

use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::FrequencyMatrix;
use crate::decompose::{contributions, profile_probabilities, top_k, AuthorProfile};
use crate::error::{Error, Result};
use crate::metrics::{
    cosine_delta, jensen_shannon_delta, lp_delta, rank_turbulence_delta, LpOrder, MetricKind,
    MetricSpec,
};
use crate::pipeline::{author_pair_contributions, PipelineParams};
use crate::standardize::to_ranks;

/// Set overlap of two token lists: intersection over union, ignoring
/// order and duplicates. Two empty lists overlap fully.
pub fn jaccard_overlap(a: &[String], b: &[String]) -> f64 {
    let sa: HashSet<&str> = a.iter().map(|s| s.as_str()).collect();
    let sb: HashSet<&str> = b.iter().map(|s| s.as_str()).collect();
    if sa.is_empty() && sb.is_empty() {
        return 1.0;
    }
    let intersection = sa.intersection(&sb).count();
    let union = sa.len() + sb.len() - intersection;
    intersection as f64 / union as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MfwStabilityRow {
    pub mfw: usize,
    pub jaccard: f64,
}

/// Overlap of the top contributing tokens between a base word-list size
/// and perturbed ones. The base row always reads 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MfwStabilityReport {
    pub metric: MetricKind,
    pub authors: (String, String),
    pub base_mfw: usize,
    pub top_k: usize,
    pub rows: Vec<MfwStabilityRow>,
}

fn top_token_list(
    freq: &FrequencyMatrix,
    doc_authors: &[String],
    author1: &str,
    author2: &str,
    spec: &MetricSpec,
    params: &PipelineParams,
    k: usize,
) -> Result<Vec<String>> {
    let table = author_pair_contributions(freq, doc_authors, author1, author2, spec, params)?;
    Ok(top_k(&table, k).rows.into_iter().map(|r| r.token).collect())
}

/// Recompute the top-`top_k` contribution list at each perturbed word-list
/// size and report its overlap with the list at `params.mfw`.
pub fn mfw_stability(
    freq: &FrequencyMatrix,
    doc_authors: &[String],
    author1: &str,
    author2: &str,
    spec: &MetricSpec,
    params: &PipelineParams,
    perturbed: &[usize],
    top_k: usize,
) -> Result<MfwStabilityReport> {
    if top_k < 1 {
        return Err(Error::InvalidParameter(
            "stability comparison needs a positive top-k".into(),
        ));
    }
    let base = top_token_list(freq, doc_authors, author1, author2, spec, params, top_k)?;
    let mut rows = vec![MfwStabilityRow {
        mfw: params.mfw,
        jaccard: 1.0,
    }];
    for &mfw in perturbed {
        let alt_params = PipelineParams { mfw, ..*params };
        let alt = top_token_list(freq, doc_authors, author1, author2, spec, &alt_params, top_k)?;
        rows.push(MfwStabilityRow {
            mfw,
            jaccard: jaccard_overlap(&base, &alt),
        });
    }
    Ok(MfwStabilityReport {
        metric: spec.kind,
        authors: (author1.to_string(), author2.to_string()),
        base_mfw: params.mfw,
        top_k,
        rows,
    })
}

/// Overlap of bootstrap top token lists with the full-data list.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapReport {
    pub metric: MetricKind,
    pub authors: (String, String),
    pub iterations: usize,
    pub seed: u64,
    pub top_k: usize,
    /// One overlap per iteration, in iteration order.
    pub jaccards: Vec<f64>,
    pub mean_jaccard: f64,
    /// Sample standard deviation of the overlaps; 0 for one iteration.
    pub std_dev: f64,
}

/// Resample every author's documents with replacement, rerun the whole
/// pipeline (including standardization) on the resampled corpus, and
/// compare the resulting top-`top_k` token list against the full-data one.
///
/// Each iteration draws from its own random stream derived from `seed`, so
/// the report is identical across runs and thread counts.
pub fn bootstrap_stability(
    freq: &FrequencyMatrix,
    doc_authors: &[String],
    author1: &str,
    author2: &str,
    spec: &MetricSpec,
    params: &PipelineParams,
    top_k: usize,
    iterations: usize,
    seed: u64,
) -> Result<BootstrapReport> {
    if doc_authors.len() != freq.n_docs() {
        return Err(Error::LengthMismatch {
            left: doc_authors.len(),
            right: freq.n_docs(),
        });
    }
    if iterations < 1 {
        return Err(Error::InvalidParameter(
            "bootstrap needs at least one iteration".into(),
        ));
    }
    if top_k < 1 {
        return Err(Error::InvalidParameter(
            "stability comparison needs a positive top-k".into(),
        ));
    }
    for author in [author1, author2] {
        let docs = doc_authors.iter().filter(|a| *a == author).count();
        if docs == 0 {
            return Err(Error::UnknownAuthor {
                author: author.to_string(),
            });
        }
        if docs < 2 {
            return Err(Error::AuthorTooSmall {
                author: author.to_string(),
                docs,
                required: 2,
            });
        }
    }

    let baseline = top_token_list(freq, doc_authors, author1, author2, spec, params, top_k)?;

    // Author groups in a fixed (alphabetical) order so draws do not depend
    // on corpus row order quirks.
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, author) in doc_authors.iter().enumerate() {
        groups.entry(author.as_str()).or_default().push(i);
    }

    let jaccards: Vec<f64> = (0..iterations)
        .into_par_iter()
        .map(|iteration| -> Result<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(iteration as u64);
            let mut picked: Vec<usize> = Vec::with_capacity(freq.n_docs());
            for rows in groups.values() {
                for _ in 0..rows.len() {
                    picked.push(rows[rng.gen_range(0..rows.len())]);
                }
            }

            let mut counts = ndarray::Array2::<u64>::zeros((picked.len(), freq.n_types()));
            let mut docs = Vec::with_capacity(picked.len());
            let mut authors = Vec::with_capacity(picked.len());
            for (slot, &row) in picked.iter().enumerate() {
                counts.row_mut(slot).assign(&freq.counts().row(row));
                // Duplicated draws need distinct ids.
                docs.push(format!("{}~{slot}", freq.docs()[row]));
                authors.push(doc_authors[row].clone());
            }
            let resampled = FrequencyMatrix::from_parts(docs, freq.vocab().clone(), counts)?;
            let list =
                top_token_list(&resampled, &authors, author1, author2, spec, params, top_k)?;
            Ok(jaccard_overlap(&baseline, &list))
        })
        .collect::<Result<Vec<f64>>>()?;

    let mean = jaccards.iter().sum::<f64>() / jaccards.len() as f64;
    let std_dev = if jaccards.len() > 1 {
        let ss: f64 = jaccards.iter().map(|j| (j - mean).powi(2)).sum();
        (ss / (jaccards.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(BootstrapReport {
        metric: spec.kind,
        authors: (author1.to_string(), author2.to_string()),
        iterations,
        seed,
        top_k,
        jaccards,
        mean_jaccard: mean,
        std_dev,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemovalRow {
    pub removed_top_k: usize,
    pub after: f64,
}

/// Distance before and after deleting the strongest contributors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemovalReport {
    pub metric: MetricKind,
    pub before: f64,
    pub rows: Vec<RemovalRow>,
}

/// Zero out the top-K contributing tokens in both profiles and report the
/// recomputed distance for each K in `k_list` (which must be strictly
/// increasing). Standardization is not refitted and nothing is
/// renormalized.
///
/// For the sum-decomposable metrics the removed terms simply leave the
/// sum, so the distance can only shrink as K grows. The rank-based metric
/// re-ranks the full vocabulary with the zeroed coordinates in place: the
/// removed tokens sink to the shared bottom ranks on both sides and stop
/// separating the profiles. A row that exceeds the starting distance
/// (beyond rounding) is reported as an error rather than silently
/// accepted.
pub fn removal_experiment(
    side1: &AuthorProfile,
    side2: &AuthorProfile,
    spec: &MetricSpec,
    epsilon: f64,
    k_list: &[usize],
) -> Result<RemovalReport> {
    let n_types = side1.vocab.len();
    if k_list.is_empty() {
        return Err(Error::InvalidKList {
            reason: "no K values given".into(),
        });
    }
    for window in k_list.windows(2) {
        if window[0] >= window[1] {
            return Err(Error::InvalidKList {
                reason: format!("K values must be strictly increasing, got {k_list:?}"),
            });
        }
    }
    if k_list[0] < 1 || *k_list.last().unwrap() > n_types {
        return Err(Error::InvalidKList {
            reason: format!(
                "K values must lie in 1..={n_types}, got {k_list:?}"
            ),
        });
    }

    // Fails for the metric without a decomposition, which is the point:
    // removal is defined through the contribution table.
    let table = contributions(side1, side2, spec, epsilon)?;
    let ordered = top_k(&table, n_types);

    let before = match spec.kind {
        MetricKind::Burrows => {
            lp_delta(&side1.mean_z, &side2.mean_z, LpOrder::L1, spec.normalize_by_n)?
        }
        MetricKind::Cosine => cosine_delta(&side1.mean_z, &side2.mean_z)?,
        MetricKind::Jsd => {
            let p1 = profile_probabilities(side1, epsilon)?;
            let p2 = profile_probabilities(side2, epsilon)?;
            jensen_shannon_delta(&p1, &p2, spec.pi1)?
        }
        MetricKind::Rtd => {
            let r1 = to_ranks(&side1.mean_z);
            let r2 = to_ranks(&side2.mean_z);
            rank_turbulence_delta(&r1, &r2, spec.alpha, spec.rtd_normalizer)?
        }
        MetricKind::Quadratic => unreachable!("rejected by the decomposition above"),
    };

    let mut rows = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let removed = &ordered.rows[..k.min(ordered.rows.len())];
        let removed_sum: f64 = removed.iter().map(|r| r.delta).sum();
        let after = match spec.kind {
            MetricKind::Burrows => {
                let raw = table.total() - removed_sum;
                if spec.normalize_by_n {
                    raw / n_types as f64
                } else {
                    raw
                }
            }
            MetricKind::Cosine => (1.0 + table.total() - removed_sum).max(0.0),
            MetricKind::Jsd => (table.total() - removed_sum).max(0.0),
            MetricKind::Rtd => {
                let gone: HashSet<&str> = removed.iter().map(|r| r.token.as_str()).collect();
                let mut v1 = side1.mean_z.clone();
                let mut v2 = side2.mean_z.clone();
                for (t, token) in side1.vocab.tokens().iter().enumerate() {
                    if gone.contains(token.as_str()) {
                        v1[t] = 0.0;
                        v2[t] = 0.0;
                    }
                }
                let r1 = to_ranks(&v1);
                let r2 = to_ranks(&v2);
                rank_turbulence_delta(&r1, &r2, spec.alpha, spec.rtd_normalizer)?
            }
            MetricKind::Quadratic => unreachable!(),
        };
        if after > before + 1e-12 * before.abs().max(1.0) {
            return Err(Error::RemovalIncreased { k, before, after });
        }
        rows.push(RemovalRow {
            removed_top_k: k,
            after,
        });
    }
    Ok(RemovalReport {
        metric: spec.kind,
        before,
        rows,
    })
}
