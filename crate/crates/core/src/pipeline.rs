//! One-call composition of the analysis stages: counts to standardized
//! scores, scores to the representation a metric compares, representations
//! to pairwise distances, and author pairs to contribution tables.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::corpus::{select_mfw, FrequencyMatrix};
use crate::decompose::{author_profile, contributions, AuthorProfile, ContributionTable};
use crate::error::{Error, Result};
use crate::metrics::{pairwise_matrix, DistanceMatrix, MetricKind, MetricSpec, Representation};
use crate::standardize::{
    fit_stats, relative_frequencies, to_probability, to_rank_matrix, z_transform,
    StandardizationStats, ZMatrix, ZMode,
};

pub const DEFAULT_MFW: usize = 10_000;
pub const DEFAULT_VOCAB_CAP: usize = 20_000;
pub const DEFAULT_EPSILON: f64 = 1e-10;
pub const DEFAULT_DDOF: u8 = 1;

/// Settings shared by every stage downstream of the raw count matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    /// How many of the most frequent words to analyze.
    pub mfw: usize,
    /// Standardization mode; `None` lets each metric pick its default.
    pub zmode: Option<ZMode>,
    /// Delta degrees of freedom for the standard deviation (0 or 1).
    pub ddof: u8,
    /// Smoothing constant for probability rows.
    pub epsilon: f64,
}

impl PipelineParams {
    pub fn new(mfw: usize) -> Self {
        PipelineParams {
            mfw,
            zmode: None,
            ddof: DEFAULT_DDOF,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn with_zmode(mut self, mode: ZMode) -> Self {
        self.zmode = Some(mode);
        self
    }

    pub fn with_ddof(mut self, ddof: u8) -> Self {
        self.ddof = ddof;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams::new(DEFAULT_MFW)
    }
}

/// The standardization mode a metric uses when none is requested. The
/// difference-based metrics centre; the distributional ones keep scores
/// non-negative so they can become probabilities or ranks.
pub fn default_zmode(kind: MetricKind) -> ZMode {
    match kind {
        MetricKind::Burrows | MetricKind::Quadratic | MetricKind::Cosine => ZMode::Centred,
        MetricKind::Jsd | MetricKind::Rtd => ZMode::Uncentred,
    }
}

/// Pick the standardization mode for `kind`, honoring an explicit request
/// when the metric can work with it. Cosine distance is meaningless on
/// uncentred scores and probability rows require non-negative input, so
/// those combinations are rejected rather than silently corrected.
pub fn resolve_zmode(kind: MetricKind, requested: Option<ZMode>) -> Result<ZMode> {
    let mode = requested.unwrap_or_else(|| default_zmode(kind));
    match kind {
        MetricKind::Cosine if mode != ZMode::Centred => Err(Error::ModeMismatch {
            metric: kind.to_string(),
            required: "centred z-scores".into(),
            found: mode.to_string(),
        }),
        MetricKind::Jsd if mode != ZMode::Uncentred => Err(Error::ModeMismatch {
            metric: kind.to_string(),
            required: "uncentred z-scores".into(),
            found: mode.to_string(),
        }),
        _ => Ok(mode),
    }
}

/// Select the most frequent words, convert to relative frequencies, fit
/// per-token statistics, and standardize in the given mode.
pub fn standardized(
    freq: &FrequencyMatrix,
    params: &PipelineParams,
    mode: ZMode,
) -> Result<(ZMatrix, StandardizationStats)> {
    let selected = select_mfw(freq, params.mfw)?;
    let rel = relative_frequencies(&selected)?;
    let stats = fit_stats(&rel, params.ddof)?;
    let z = z_transform(&rel, &stats, mode)?;
    Ok((z, stats))
}

/// Build the representation `spec` compares documents in: probability rows
/// for the entropy-based metric, rank vectors for the rank-based one, and
/// z-scores for everything else.
pub fn representation(
    freq: &FrequencyMatrix,
    spec: &MetricSpec,
    params: &PipelineParams,
) -> Result<Representation> {
    let mode = resolve_zmode(spec.kind, params.zmode)?;
    let (z, _) = standardized(freq, params, mode)?;
    Ok(match spec.kind {
        MetricKind::Jsd => Representation::Probability(to_probability(&z, params.epsilon)?),
        MetricKind::Rtd => Representation::Rank(to_rank_matrix(&z)),
        _ => Representation::Z(z),
    })
}

/// Counts to a pairwise distance matrix in one call.
pub fn distance_matrix(
    freq: &FrequencyMatrix,
    spec: &MetricSpec,
    params: &PipelineParams,
) -> Result<DistanceMatrix> {
    let rep = representation(freq, spec, params)?;
    pairwise_matrix(&rep, spec)
}

/// Mean standardized profiles for two authors, fitted on the whole corpus.
pub fn author_pair_profiles(
    freq: &FrequencyMatrix,
    doc_authors: &[String],
    author1: &str,
    author2: &str,
    spec: &MetricSpec,
    params: &PipelineParams,
) -> Result<(AuthorProfile, AuthorProfile)> {
    let mode = resolve_zmode(spec.kind, params.zmode)?;
    let (z, _) = standardized(freq, params, mode)?;
    let side1 = author_profile(&z, doc_authors, author1)?;
    let side2 = author_profile(&z, doc_authors, author2)?;
    Ok((side1, side2))
}

/// Token-level contribution table for one author pair under `spec`.
pub fn author_pair_contributions(
    freq: &FrequencyMatrix,
    doc_authors: &[String],
    author1: &str,
    author2: &str,
    spec: &MetricSpec,
    params: &PipelineParams,
) -> Result<ContributionTable> {
    let (side1, side2) =
        author_pair_profiles(freq, doc_authors, author1, author2, spec, params)?;
    contributions(&side1, &side2, spec, params.epsilon)
}

/// Keep only the documents written by the named authors, preserving the
/// corpus-wide vocabulary order. Returns the reduced count matrix and the
/// author labels aligned with its rows; downstream stages refit their
/// statistics on the reduced corpus.
pub fn restrict_to_authors(
    freq: &FrequencyMatrix,
    doc_authors: &[String],
    authors: &[String],
) -> Result<(FrequencyMatrix, Vec<String>)> {
    if doc_authors.len() != freq.n_docs() {
        return Err(Error::LengthMismatch {
            left: doc_authors.len(),
            right: freq.n_docs(),
        });
    }
    for author in authors {
        if !doc_authors.contains(author) {
            return Err(Error::UnknownAuthor {
                author: author.clone(),
            });
        }
    }
    let keep: Vec<usize> = (0..freq.n_docs())
        .filter(|&i| authors.contains(&doc_authors[i]))
        .collect();
    let docs: Vec<String> = keep.iter().map(|&i| freq.docs()[i].clone()).collect();
    let labels: Vec<String> = keep.iter().map(|&i| doc_authors[i].clone()).collect();
    let mut counts = Array2::<u64>::zeros((keep.len(), freq.n_types()));
    for (r, &i) in keep.iter().enumerate() {
        counts.row_mut(r).assign(&freq.counts().row(i));
    }
    let reduced = FrequencyMatrix::from_parts(docs, freq.vocab().clone(), counts)?;
    Ok((reduced, labels))
}
