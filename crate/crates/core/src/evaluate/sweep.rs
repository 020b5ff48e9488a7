//! Grid evaluation: score clustering or attribution at every combination
//! of word-list size and metric (with an alpha axis for the rank-based
//! metric), recording per-cell failures instead of aborting the sweep.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::FrequencyMatrix;
use crate::error::{Error, Result};
use crate::evaluate::{adjusted_rand_index, loocv_nearest_neighbor, pam_cluster};
use crate::metrics::{MetricKind, MetricSpec, RtdNormalizerMode};
use crate::pipeline::{default_zmode, distance_matrix, PipelineParams, DEFAULT_EPSILON};
use crate::standardize::ZMode;

/// What each grid cell scores: clustering against known authors via the
/// adjusted Rand index, or leave-one-out attribution via balanced accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepTask {
    Cluster,
    Attribute,
}

impl fmt::Display for SweepTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepTask::Cluster => write!(f, "cluster"),
            SweepTask::Attribute => write!(f, "attribute"),
        }
    }
}

impl FromStr for SweepTask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cluster" => Ok(SweepTask::Cluster),
            "attribute" => Ok(SweepTask::Attribute),
            other => Err(Error::InvalidParameter(format!(
                "unknown sweep task {other:?}; expected cluster or attribute"
            ))),
        }
    }
}

/// The axes of a sweep. Cells are laid out with `mfw` outermost, then
/// metrics, then (for the rank-based metric only) alphas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub mfw: Vec<usize>,
    pub metrics: Vec<MetricKind>,
    /// Alpha values tried for the rank-turbulence metric; other metrics
    /// ignore this axis.
    pub alphas: Vec<f64>,
}

/// Fixed parameters shared by every cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub ddof: u8,
    pub epsilon: f64,
    pub pi1: f64,
    pub normalize_by_n: bool,
    pub rtd_normalizer: RtdNormalizerMode,
    /// Standardization mode for metrics that accept either; constrained
    /// metrics always use the mode they require.
    pub zmode: Option<ZMode>,
    /// Drop single-document authors from attribution scoring.
    pub exclude_singletons: bool,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            ddof: 1,
            epsilon: DEFAULT_EPSILON,
            pi1: 0.5,
            normalize_by_n: true,
            rtd_normalizer: RtdNormalizerMode::MinusHalf,
            zmode: None,
            exclude_singletons: false,
        }
    }
}

/// One scored grid cell. Exactly one of `score` and `error` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub mfw: usize,
    pub metric: MetricKind,
    pub zmode: ZMode,
    pub alpha: Option<f64>,
    pub score: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub task: SweepTask,
    pub settings: SweepSettings,
    pub cells: Vec<SweepCell>,
}

/// The standardization mode a sweep cell runs in. Unlike the one-off
/// pipeline, a conflicting global request is not an error here: cosine and
/// the entropy metric silently keep their required mode so that one sweep
/// can still cover every metric family.
fn cell_zmode(kind: MetricKind, requested: Option<ZMode>) -> ZMode {
    match kind {
        MetricKind::Cosine => ZMode::Centred,
        MetricKind::Jsd => ZMode::Uncentred,
        _ => requested.unwrap_or_else(|| default_zmode(kind)),
    }
}

fn score_cell(
    freq: &FrequencyMatrix,
    doc_authors: &[String],
    task: SweepTask,
    mfw: usize,
    spec: &MetricSpec,
    zmode: ZMode,
    settings: &SweepSettings,
    n_authors: usize,
) -> Result<f64> {
    let params = PipelineParams::new(mfw)
        .with_zmode(zmode)
        .with_ddof(settings.ddof)
        .with_epsilon(settings.epsilon);
    let dist = distance_matrix(freq, spec, &params)?;
    match task {
        SweepTask::Cluster => {
            let clusters = pam_cluster(&dist, n_authors)?;
            adjusted_rand_index(&clusters.labels, doc_authors)
        }
        SweepTask::Attribute => {
            let result = loocv_nearest_neighbor(&dist, doc_authors)?;
            result.balanced_accuracy(settings.exclude_singletons)
        }
    }
}

/// Run `task` over every grid cell. Cells are scored concurrently but
/// reported in grid order, and a failing cell records its reason without
/// stopping the rest of the sweep.
pub fn sweep(
    freq: &FrequencyMatrix,
    doc_authors: &[String],
    task: SweepTask,
    grid: &SweepGrid,
    settings: &SweepSettings,
) -> Result<SweepReport> {
    if grid.mfw.is_empty() || grid.metrics.is_empty() {
        return Err(Error::InvalidParameter(
            "sweep grid needs at least one mfw value and one metric".into(),
        ));
    }
    if grid.metrics.contains(&MetricKind::Rtd) && grid.alphas.is_empty() {
        return Err(Error::InvalidParameter(
            "sweeping the rtd metric needs at least one alpha value".into(),
        ));
    }
    if doc_authors.len() != freq.n_docs() {
        return Err(Error::LengthMismatch {
            left: doc_authors.len(),
            right: freq.n_docs(),
        });
    }
    let n_authors = doc_authors.iter().collect::<BTreeSet<_>>().len();

    let mut layout: Vec<(usize, MetricSpec)> = Vec::new();
    for &mfw in &grid.mfw {
        for &kind in &grid.metrics {
            let base = MetricSpec::new(kind)
                .with_pi1(settings.pi1)
                .with_normalize_by_n(settings.normalize_by_n)
                .with_rtd_normalizer(settings.rtd_normalizer);
            if kind == MetricKind::Rtd {
                for &alpha in &grid.alphas {
                    layout.push((mfw, base.with_alpha(alpha)));
                }
            } else {
                layout.push((mfw, base));
            }
        }
    }

    let cells: Vec<SweepCell> = layout
        .par_iter()
        .map(|&(mfw, ref spec)| {
            let zmode = cell_zmode(spec.kind, settings.zmode);
            let alpha = (spec.kind == MetricKind::Rtd).then_some(spec.alpha);
            match score_cell(freq, doc_authors, task, mfw, spec, zmode, settings, n_authors) {
                Ok(score) => SweepCell {
                    mfw,
                    metric: spec.kind,
                    zmode,
                    alpha,
                    score: Some(score),
                    error: None,
                },
                Err(e) => SweepCell {
                    mfw,
                    metric: spec.kind,
                    zmode,
                    alpha,
                    score: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    Ok(SweepReport {
        task,
        settings: *settings,
        cells,
    })
}
