//! Distance measures between document representations.
//!
//! Five measures are provided, each over its own representation:
//!
//! * `burrows`: mean (or plain sum of) absolute z-score differences, L1.
//! * `quadratic`: Euclidean distance between z-score rows, L2.
//! * `cosine`: 1 minus the cosine similarity of centred z-score rows.
//! * `jsd`: Jensen-Shannon divergence between smoothed probability rows,
//!   in bits, computed in entropy form `H(M) - pi1 H(P1) - pi2 H(P2)`.
//! * `rtd`: rank-turbulence divergence between rank rows, normalized so a
//!   full reversal over a shared vocabulary scores close to 1.
//!
//! Scalar functions operate on row slices; [`pairwise_matrix`] applies one
//! measure to every document pair of a representation and enforces the
//! representation each measure is defined on.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::standardize::{ProbabilityMatrix, RankMatrix, ZMatrix, ZMode};

/// Which distance measure to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Burrows,
    Quadratic,
    Cosine,
    Jsd,
    Rtd,
}

impl MetricKind {
    pub const ALL: [MetricKind; 5] = [
        MetricKind::Burrows,
        MetricKind::Quadratic,
        MetricKind::Cosine,
        MetricKind::Jsd,
        MetricKind::Rtd,
    ];
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            MetricKind::Burrows => "burrows",
            MetricKind::Quadratic => "quadratic",
            MetricKind::Cosine => "cosine",
            MetricKind::Jsd => "jsd",
            MetricKind::Rtd => "rtd",
        };
        write!(f, "{name}")
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "burrows" => Ok(MetricKind::Burrows),
            "quadratic" => Ok(MetricKind::Quadratic),
            "cosine" => Ok(MetricKind::Cosine),
            "jsd" => Ok(MetricKind::Jsd),
            "rtd" => Ok(MetricKind::Rtd),
            other => Err(Error::InvalidParameter(format!(
                "unknown metric {other:?}; expected burrows, quadratic, cosine, jsd, or rtd"
            ))),
        }
    }
}

/// Reference-rank convention for the rank-turbulence normalizer.
///
/// `MinusHalf` compares every rank against `n1 - n2/2`; `PlusHalf` uses
/// `n1 + n2/2`, the disjoint-support convention from the allotaxonometry
/// literature. Over a shared vocabulary both give a divergence in [0, 1];
/// they differ only in how close a full reversal comes to 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RtdNormalizerMode {
    MinusHalf,
    PlusHalf,
}

impl fmt::Display for RtdNormalizerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RtdNormalizerMode::MinusHalf => write!(f, "minus-half"),
            RtdNormalizerMode::PlusHalf => write!(f, "plus-half"),
        }
    }
}

impl FromStr for RtdNormalizerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minus-half" => Ok(RtdNormalizerMode::MinusHalf),
            "plus-half" => Ok(RtdNormalizerMode::PlusHalf),
            other => Err(Error::InvalidParameter(format!(
                "unknown rtd normalizer mode {other:?}; expected minus-half or plus-half"
            ))),
        }
    }
}

/// A fully parameterized distance measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub kind: MetricKind,
    /// Mixture weight of the first distribution (jsd only); in (0, 1).
    pub pi1: f64,
    /// Rank-turbulence exponent (rtd only); positive.
    pub alpha: f64,
    /// Divide the L1 sum by the vocabulary size (burrows only).
    pub normalize_by_n: bool,
    /// Reference-rank convention (rtd only).
    pub rtd_normalizer: RtdNormalizerMode,
}

impl MetricSpec {
    pub fn new(kind: MetricKind) -> Self {
        MetricSpec {
            kind,
            pi1: 0.5,
            alpha: 1.0,
            normalize_by_n: true,
            rtd_normalizer: RtdNormalizerMode::MinusHalf,
        }
    }

    pub fn burrows() -> Self {
        Self::new(MetricKind::Burrows)
    }

    pub fn quadratic() -> Self {
        Self::new(MetricKind::Quadratic)
    }

    pub fn cosine() -> Self {
        Self::new(MetricKind::Cosine)
    }

    pub fn jsd() -> Self {
        Self::new(MetricKind::Jsd)
    }

    pub fn rtd(alpha: f64) -> Self {
        Self::new(MetricKind::Rtd).with_alpha(alpha)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_pi1(mut self, pi1: f64) -> Self {
        self.pi1 = pi1;
        self
    }

    pub fn with_normalize_by_n(mut self, normalize: bool) -> Self {
        self.normalize_by_n = normalize;
        self
    }

    pub fn with_rtd_normalizer(mut self, mode: RtdNormalizerMode) -> Self {
        self.rtd_normalizer = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pi1 > 0.0 && self.pi1 < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "pi1 must lie strictly between 0 and 1, got {}",
                self.pi1
            )));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be finite and positive, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Which exponent the z-score distance uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpOrder {
    L1,
    L2,
}

/// L1 or L2 distance between two z-score rows. With `L1` and
/// `normalize_by_n` the sum of absolute differences is divided by the row
/// length; `L2` is the plain Euclidean distance and ignores the flag.
/// Centred and uncentred rows give identical results because the mean
/// cancels from every coordinate difference.
pub fn lp_delta(z1: &[f64], z2: &[f64], order: LpOrder, normalize_by_n: bool) -> Result<f64> {
    check_lengths(z1, z2)?;
    match order {
        LpOrder::L1 => {
            let sum: f64 = z1.iter().zip(z2).map(|(a, b)| (a - b).abs()).sum();
            if normalize_by_n {
                Ok(sum / z1.len() as f64)
            } else {
                Ok(sum)
            }
        }
        LpOrder::L2 => {
            let sum: f64 = z1
                .iter()
                .zip(z2)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            Ok(sum.sqrt())
        }
    }
}

/// 1 minus the cosine similarity of two rows, in [0, 2]. Intended for
/// centred z-scores, where angles beyond 90 degrees carry signal; fails on
/// zero-magnitude input. Componentwise-equal rows return exactly 0.
pub fn cosine_delta(z1: &[f64], z2: &[f64]) -> Result<f64> {
    check_lengths(z1, z2)?;
    let m1 = magnitude(z1);
    let m2 = magnitude(z2);
    if m1 == 0.0 || m2 == 0.0 {
        return Err(Error::ZeroVector);
    }
    if z1 == z2 {
        return Ok(0.0);
    }
    let dot: f64 = z1.iter().zip(z2).map(|(a, b)| (a / m1) * (b / m2)).sum();
    // The true similarity of unit vectors lies in [-1, 1]; anything beyond
    // is accumulated rounding.
    Ok(1.0 - dot.clamp(-1.0, 1.0))
}

fn magnitude(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Weighted mixture of two probability rows, `pi1 * rho1 + pi2 * rho2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureDistribution {
    pub m: Vec<f64>,
    pub pi1: f64,
}

impl MixtureDistribution {
    pub fn new(rho1: &[f64], rho2: &[f64], pi1: f64) -> Result<Self> {
        validate_distribution_pair(rho1, rho2, pi1)?;
        let pi2 = 1.0 - pi1;
        let m = rho1
            .iter()
            .zip(rho2)
            .map(|(p, q)| pi1 * p + pi2 * q)
            .collect();
        Ok(MixtureDistribution { m, pi1 })
    }
}

/// Jensen-Shannon divergence in bits between two strictly positive
/// probability rows, computed in entropy form against the `pi1`-weighted
/// mixture. Symmetric when `pi1 = 0.5`, where it lies in [0, 1]. Zero
/// components are rejected; smooth them away with a positive epsilon when
/// building the probability representation.
pub fn jensen_shannon_delta(rho1: &[f64], rho2: &[f64], pi1: f64) -> Result<f64> {
    validate_distribution_pair(rho1, rho2, pi1)?;
    if rho1 == rho2 {
        return Ok(0.0);
    }
    let pi2 = 1.0 - pi1;
    let mut total = 0.0;
    for (p, q) in rho1.iter().zip(rho2) {
        let m = pi1 * p + pi2 * q;
        total += plog2(m) - (pi1 * plog2(*p) + pi2 * plog2(*q));
    }
    // The divergence is non-negative; tiny negative totals are rounding.
    Ok(total.max(0.0))
}

/// `x log2(1/x)` with the conventional value 0 at x = 0.
pub(crate) fn plog2(x: f64) -> f64 {
    if x > 0.0 {
        -x * x.log2()
    } else {
        0.0
    }
}

fn validate_distribution_pair(rho1: &[f64], rho2: &[f64], pi1: f64) -> Result<()> {
    check_lengths(rho1, rho2)?;
    if !(pi1 > 0.0 && pi1 < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "pi1 must lie strictly between 0 and 1, got {pi1}"
        )));
    }
    for (label, rho) in [("first", rho1), ("second", rho2)] {
        let sum: f64 = rho.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::NonStochastic {
                row: label.into(),
                sum,
            });
        }
        if let Some(i) = rho.iter().position(|p| *p <= 0.0) {
            return Err(Error::ZeroProbability {
                what: format!("component {i} of the {label} distribution"),
            });
        }
    }
    Ok(())
}

/// The divergence scale factor for rank-turbulence comparisons: the value
/// the numerator sum takes when every type's rank is compared against a
/// fixed reference rank instead of the other document.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RtdNormalizer {
    pub value: f64,
    pub alpha: f64,
    pub n1: usize,
    pub n2: usize,
    pub mode: RtdNormalizerMode,
}

/// Compute the rank-turbulence normalizer for two rank rows of declared
/// domain sizes `n1` and `n2` (which must equal the row lengths). The
/// reference rank is `n1 - n2/2` in `MinusHalf` mode and `n1 + n2/2` in
/// `PlusHalf` mode; `MinusHalf` fails when that quantity is not positive.
/// The value depends only on the rank multisets, not on which token holds
/// which rank.
pub fn rtd_normalizer(
    n1: usize,
    n2: usize,
    r1: &[f64],
    r2: &[f64],
    alpha: f64,
    mode: RtdNormalizerMode,
) -> Result<RtdNormalizer> {
    if n1 != r1.len() {
        return Err(Error::LengthMismatch {
            left: n1,
            right: r1.len(),
        });
    }
    if n2 != r2.len() {
        return Err(Error::LengthMismatch {
            left: n2,
            right: r2.len(),
        });
    }
    check_alpha(alpha)?;
    check_ranks(r1)?;
    check_ranks(r2)?;
    let (ref1, ref2) = match mode {
        RtdNormalizerMode::MinusHalf => (
            n1 as f64 - 0.5 * n2 as f64,
            n2 as f64 - 0.5 * n1 as f64,
        ),
        RtdNormalizerMode::PlusHalf => (
            n1 as f64 + 0.5 * n2 as f64,
            n2 as f64 + 0.5 * n1 as f64,
        ),
    };
    for reference in [ref1, ref2] {
        if reference <= 0.0 {
            return Err(Error::NormalizerUndefined {
                reference,
                n1,
                n2,
            });
        }
    }
    let scale = (alpha + 1.0) / alpha;
    let inv_pow = 1.0 / (alpha + 1.0);
    let ref1_term = ref1.powf(-alpha);
    let ref2_term = ref2.powf(-alpha);
    let side1: f64 = r1
        .iter()
        .map(|r| (r.powf(-alpha) - ref1_term).abs().powf(inv_pow))
        .sum();
    let side2: f64 = r2
        .iter()
        .map(|r| (ref2_term - r.powf(-alpha)).abs().powf(inv_pow))
        .sum();
    Ok(RtdNormalizer {
        value: scale * side1 + scale * side2,
        alpha,
        n1,
        n2,
        mode,
    })
}

/// Rank-turbulence divergence between two rank rows over the same
/// vocabulary, in [0, 1]. Small `alpha` emphasizes differences among
/// low-frequency (large-rank) types; large `alpha` concentrates on the top
/// ranks. Identical rows give exactly 0.
pub fn rank_turbulence_delta(
    r1: &[f64],
    r2: &[f64],
    alpha: f64,
    mode: RtdNormalizerMode,
) -> Result<f64> {
    check_lengths(r1, r2)?;
    let normalizer = rtd_normalizer(r1.len(), r2.len(), r1, r2, alpha, mode)?;
    if normalizer.value <= 0.0 {
        return Err(Error::InvalidParameter(
            "rank-turbulence normalizer degenerated to zero".into(),
        ));
    }
    let scale = (alpha + 1.0) / alpha;
    let inv_pow = 1.0 / (alpha + 1.0);
    let sum: f64 = r1
        .iter()
        .zip(r2)
        .map(|(a, b)| (a.powf(-alpha) - b.powf(-alpha)).abs().powf(inv_pow))
        .sum();
    Ok(scale * sum / normalizer.value)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be finite and positive, got {alpha}"
        )));
    }
    Ok(())
}

fn check_ranks(ranks: &[f64]) -> Result<()> {
    if let Some(r) = ranks.iter().find(|r| !(r.is_finite() && **r >= 1.0)) {
        return Err(Error::InvalidParameter(format!(
            "ranks must be finite and at least 1, got {r}"
        )));
    }
    Ok(())
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// A document representation a metric can run on.
#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    Z(ZMatrix),
    Probability(ProbabilityMatrix),
    Rank(RankMatrix),
}

impl Representation {
    pub fn docs(&self) -> &[String] {
        match self {
            Representation::Z(m) => m.docs(),
            Representation::Probability(m) => m.docs(),
            Representation::Rank(m) => m.docs(),
        }
    }

    pub fn n_docs(&self) -> usize {
        self.docs().len()
    }

    fn describe(&self) -> String {
        match self {
            Representation::Z(m) => format!("{} z-scores", m.mode()),
            Representation::Probability(_) => "probability distributions".into(),
            Representation::Rank(_) => "rank vectors".into(),
        }
    }
}

/// Symmetric document-by-document distance matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    docs: Vec<String>,
    metric: MetricSpec,
    values: Array2<f64>,
}

impl DistanceMatrix {
    /// Validate and wrap a raw matrix: it must be square with one row per
    /// document, non-negative, exactly zero on the diagonal, and symmetric
    /// to within 1e-12.
    pub fn new(docs: Vec<String>, metric: MetricSpec, values: Array2<f64>) -> Result<Self> {
        let n = docs.len();
        if values.nrows() != n || values.ncols() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: values.nrows().max(values.ncols()),
            });
        }
        for i in 0..n {
            if values[[i, i]] != 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "distance matrix diagonal entry ({i}, {i}) is {}, expected 0",
                    values[[i, i]]
                )));
            }
            for j in 0..n {
                let d = values[[i, j]];
                if !(d.is_finite() && d >= 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "distance matrix entry ({i}, {j}) is {d}; distances must be finite and non-negative"
                    )));
                }
                if (d - values[[j, i]]).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "distance matrix is asymmetric at ({i}, {j}): {d} vs {}",
                        values[[j, i]]
                    )));
                }
            }
        }
        Ok(DistanceMatrix {
            docs,
            metric,
            values,
        })
    }

    pub fn docs(&self) -> &[String] {
        &self.docs
    }

    pub fn metric(&self) -> &MetricSpec {
        &self.metric
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn n_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }
}

/// Evaluate one metric on every document pair of a representation.
///
/// Each unordered pair is computed once and mirrored, so the result is
/// exactly symmetric with a zero diagonal. Pairs are evaluated in parallel;
/// the result does not depend on thread count. The metric must match the
/// representation: z-scores for `burrows`/`quadratic`, centred z-scores for
/// `cosine`, probabilities for `jsd` (with `pi1 = 0.5`, since other weights
/// are asymmetric), ranks for `rtd`.
pub fn pairwise_matrix(rep: &Representation, spec: &MetricSpec) -> Result<DistanceMatrix> {
    spec.validate()?;
    let required = match spec.kind {
        MetricKind::Burrows | MetricKind::Quadratic => "z-scores",
        MetricKind::Cosine => "centred z-scores",
        MetricKind::Jsd => "probability distributions",
        MetricKind::Rtd => "rank vectors",
    };
    let mismatch = || Error::ModeMismatch {
        metric: spec.kind.to_string(),
        required: required.into(),
        found: rep.describe(),
    };
    let n = rep.n_docs();
    let rows: Vec<&[f64]> = match (spec.kind, rep) {
        (MetricKind::Burrows | MetricKind::Quadratic, Representation::Z(z)) => {
            (0..n).map(|i| z.row(i)).collect()
        }
        (MetricKind::Cosine, Representation::Z(z)) => {
            if z.mode() != ZMode::Centred {
                return Err(mismatch());
            }
            (0..n).map(|i| z.row(i)).collect()
        }
        (MetricKind::Jsd, Representation::Probability(p)) => {
            if spec.pi1 != 0.5 {
                return Err(Error::InvalidParameter(format!(
                    "a symmetric jsd distance matrix requires pi1 = 0.5, got {}",
                    spec.pi1
                )));
            }
            (0..n).map(|i| p.row(i)).collect()
        }
        (MetricKind::Rtd, Representation::Rank(r)) => (0..n).map(|i| r.row(i)).collect(),
        _ => return Err(mismatch()),
    };

    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let distances = pairs
        .par_iter()
        .map(|&(i, j)| {
            let a = rows[i];
            let b = rows[j];
            let d = match spec.kind {
                MetricKind::Burrows => lp_delta(a, b, LpOrder::L1, spec.normalize_by_n)?,
                MetricKind::Quadratic => lp_delta(a, b, LpOrder::L2, false)?,
                MetricKind::Cosine => cosine_delta(a, b)?,
                MetricKind::Jsd => jensen_shannon_delta(a, b, spec.pi1)?,
                MetricKind::Rtd => rank_turbulence_delta(a, b, spec.alpha, spec.rtd_normalizer)?,
            };
            Ok(((i, j), d))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut values = Array2::<f64>::zeros((n, n));
    for ((i, j), d) in distances {
        values[[i, j]] = d;
        values[[j, i]] = d;
    }
    DistanceMatrix::new(rep.docs().to_vec(), *spec, values)
}
