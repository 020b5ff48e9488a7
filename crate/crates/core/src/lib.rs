//! Corpus-to-report toolkit for distance-based authorship analysis.
//!
//! The pipeline runs in stages, each usable on its own:
//!
//! 1. [`corpus`] turns raw text files into a document-by-token count matrix.
//! 2. [`standardize`] converts counts to relative frequencies, fits per-token
//!    mean and standard deviation, and produces z-score, probability, and
//!    rank representations.
//! 3. [`metrics`] evaluates distance measures on those representations:
//!    L1/L2 deltas, cosine delta, Jensen-Shannon divergence, and
//!    rank-turbulence divergence.
//! 4. [`decompose`] splits any distance into per-token contributions.
//! 5. [`evaluate`] scores distance matrices by medoid clustering (with
//!    adjusted Rand index) and leave-one-out attribution (with balanced
//!    accuracy), and sweeps parameter grids.
//! 6. [`robustness`] checks how stable the top contributing tokens are under
//!    vocabulary perturbation, bootstrap resampling, and token removal.
//!
//! [`pipeline`] wires the stages together and [`artifacts`] reads and writes
//! the CSV/JSON files exchanged between them. All computations are
//! deterministic: reruns with the same inputs produce identical output bytes
//! regardless of thread count.

pub mod artifacts;
pub mod corpus;
pub mod decompose;
pub mod error;
pub mod evaluate;
pub mod metrics;
pub mod pipeline;
pub mod robustness;
pub mod standardize;

pub use corpus::{DocumentRecord, FrequencyMatrix, Vocabulary};
pub use error::{Error, Result};
pub use metrics::{DistanceMatrix, MetricKind, MetricSpec};
pub use standardize::{ZMatrix, ZMode};
