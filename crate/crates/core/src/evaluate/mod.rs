//! Scoring distance matrices against known authorship: medoid clustering
//! with the adjusted Rand index, and leave-one-out nearest-neighbor
//! attribution with balanced accuracy.

mod sweep;

pub use sweep::{sweep, SweepCell, SweepGrid, SweepReport, SweepSettings, SweepTask};

use std::collections::HashMap;
use std::hash::Hash;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::DistanceMatrix;

/// Output of k-medoid clustering: which documents serve as medoids, which
/// cluster each document joins, and the total distance to assigned medoids.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusteringResult {
    pub k: usize,
    /// Medoid document ids, in ascending document order.
    pub medoids: Vec<String>,
    /// Medoid row indices matching `medoids`.
    pub medoid_indices: Vec<usize>,
    /// Cluster index per document, pointing into `medoids`.
    pub labels: Vec<usize>,
    pub total_cost: f64,
}

/// Partition documents around `k` medoids.
///
/// The medoid set is seeded greedily (each step adds the document that
/// lowers total assignment cost the most) and then refined by swapping a
/// medoid for a non-medoid while any single swap strictly lowers the cost.
/// All scans run in a fixed order and accept only strict improvements, so
/// ties resolve to the smallest document index and the result is
/// deterministic. The final configuration admits no improving single swap;
/// that is a local, not global, optimum.
pub fn pam_cluster(dist: &DistanceMatrix, k: usize) -> Result<ClusteringResult> {
    let n = dist.n_docs();
    if k < 1 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }

    // Greedy seeding.
    let mut medoids: Vec<usize> = Vec::with_capacity(k);
    let mut best = (f64::INFINITY, 0usize);
    for i in 0..n {
        let total: f64 = (0..n).map(|j| dist.get(i, j)).sum();
        if total < best.0 {
            best = (total, i);
        }
    }
    medoids.push(best.1);
    let mut nearest: Vec<f64> = (0..n).map(|j| dist.get(best.1, j)).collect();
    while medoids.len() < k {
        let mut choice = (f64::INFINITY, usize::MAX);
        for c in 0..n {
            if medoids.contains(&c) {
                continue;
            }
            let cost: f64 = (0..n).map(|j| nearest[j].min(dist.get(c, j))).sum();
            if cost < choice.0 {
                choice = (cost, c);
            }
        }
        medoids.push(choice.1);
        for (j, d) in nearest.iter_mut().enumerate() {
            *d = d.min(dist.get(choice.1, j));
        }
    }

    // Swap refinement.
    let cost_of = |medoids: &[usize]| -> f64 {
        (0..n)
            .map(|j| {
                medoids
                    .iter()
                    .map(|&m| dist.get(m, j))
                    .fold(f64::INFINITY, f64::min)
            })
            .sum()
    };
    let mut current_cost = cost_of(&medoids);
    loop {
        let mut best_swap: Option<(f64, usize, usize)> = None;
        for slot in 0..medoids.len() {
            for h in 0..n {
                if medoids.contains(&h) {
                    continue;
                }
                let mut trial = medoids.clone();
                trial[slot] = h;
                let cost = cost_of(&trial);
                let bar = best_swap.map_or(current_cost, |(c, _, _)| c);
                if cost < bar {
                    best_swap = Some((cost, slot, h));
                }
            }
        }
        match best_swap {
            Some((cost, slot, h)) => {
                medoids[slot] = h;
                current_cost = cost;
            }
            None => break,
        }
    }

    medoids.sort_unstable();
    let labels: Vec<usize> = (0..n)
        .map(|j| {
            let mut assigned = 0;
            let mut best = f64::INFINITY;
            for (c, &m) in medoids.iter().enumerate() {
                let d = dist.get(m, j);
                if d < best {
                    best = d;
                    assigned = c;
                }
            }
            assigned
        })
        .collect();
    Ok(ClusteringResult {
        k,
        medoids: medoids.iter().map(|&m| dist.docs()[m].clone()).collect(),
        medoid_indices: medoids,
        labels,
        total_cost: current_cost,
    })
}

/// Chance-corrected agreement between two partitions of the same items.
/// 1 means identical partitions, 0 the expected agreement of independent
/// ones; negative values mean worse than chance. Pair counts are
/// accumulated in integers, so small exact cases come out exact.
pub fn adjusted_rand_index<A, B>(a: &[A], b: &[B]) -> Result<f64>
where
    A: Eq + Hash,
    B: Eq + Hash,
{
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "adjusted Rand index needs at least 2 items, got {n}"
        )));
    }

    let mut a_ids: HashMap<&A, usize> = HashMap::new();
    let mut b_ids: HashMap<&B, usize> = HashMap::new();
    let mut cells: HashMap<(usize, usize), i128> = HashMap::new();
    let mut a_sizes: Vec<i128> = Vec::new();
    let mut b_sizes: Vec<i128> = Vec::new();
    for (x, y) in a.iter().zip(b) {
        let next = a_ids.len();
        let i = *a_ids.entry(x).or_insert(next);
        if i == a_sizes.len() {
            a_sizes.push(0);
        }
        let next = b_ids.len();
        let j = *b_ids.entry(y).or_insert(next);
        if j == b_sizes.len() {
            b_sizes.push(0);
        }
        a_sizes[i] += 1;
        b_sizes[j] += 1;
        *cells.entry((i, j)).or_insert(0) += 1;
    }

    let choose2 = |x: i128| x * (x - 1) / 2;
    let index: i128 = cells.values().map(|&c| choose2(c)).sum();
    let sum_a: i128 = a_sizes.iter().map(|&c| choose2(c)).sum();
    let sum_b: i128 = b_sizes.iter().map(|&c| choose2(c)).sum();
    let pairs = choose2(n as i128);

    // ari = (index - sum_a sum_b / pairs) / ((sum_a + sum_b)/2 - sum_a sum_b / pairs),
    // cleared of fractions so the division below is the only rounding step.
    let numerator = 2 * (index * pairs - sum_a * sum_b);
    let denominator = pairs * (sum_a + sum_b) - 2 * sum_a * sum_b;
    if denominator == 0 {
        // Both partitions are all-singletons or both one cluster; they can
        // only be identical.
        return Ok(1.0);
    }
    Ok(numerator as f64 / denominator as f64)
}

/// Leave-one-out nearest-neighbor attribution over a distance matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributionResult {
    pub docs: Vec<String>,
    pub truth: Vec<String>,
    pub predicted: Vec<String>,
}

impl AttributionResult {
    /// Balanced accuracy of the predictions. Authors with a single
    /// document can never be attributed correctly under leave-one-out;
    /// `exclude_singletons` removes their documents from scoring instead
    /// of counting them as errors.
    pub fn balanced_accuracy(&self, exclude_singletons: bool) -> Result<f64> {
        if !exclude_singletons {
            return balanced_accuracy(&self.truth, &self.predicted);
        }
        let mut class_sizes: HashMap<&str, usize> = HashMap::new();
        for t in &self.truth {
            *class_sizes.entry(t.as_str()).or_insert(0) += 1;
        }
        let keep: Vec<usize> = (0..self.truth.len())
            .filter(|&i| class_sizes[self.truth[i].as_str()] > 1)
            .collect();
        if keep.is_empty() {
            return Err(Error::InvalidParameter(
                "every author has a single document; nothing left to score".into(),
            ));
        }
        let truth: Vec<String> = keep.iter().map(|&i| self.truth[i].clone()).collect();
        let predicted: Vec<String> = keep.iter().map(|&i| self.predicted[i].clone()).collect();
        balanced_accuracy(&truth, &predicted)
    }
}

/// Predict each document's author as the author of its nearest other
/// document. Distance ties resolve to the smallest document index.
pub fn loocv_nearest_neighbor(
    dist: &DistanceMatrix,
    authors: &[String],
) -> Result<AttributionResult> {
    let n = dist.n_docs();
    if authors.len() != n {
        return Err(Error::LengthMismatch {
            left: authors.len(),
            right: n,
        });
    }
    if n < 2 {
        return Err(Error::CorpusTooSmall { docs: n });
    }
    let predicted = (0..n)
        .map(|i| {
            let mut best = f64::INFINITY;
            let mut nearest = usize::MAX;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d = dist.get(i, j);
                if d < best {
                    best = d;
                    nearest = j;
                }
            }
            authors[nearest].clone()
        })
        .collect();
    Ok(AttributionResult {
        docs: dist.docs().to_vec(),
        truth: authors.to_vec(),
        predicted,
    })
}

/// Mean per-class recall: each true author counts equally regardless of
/// how many documents they wrote.
pub fn balanced_accuracy(truth: &[String], predicted: &[String]) -> Result<f64> {
    if truth.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::InvalidParameter(
            "balanced accuracy of an empty prediction list is undefined".into(),
        ));
    }
    let mut per_class: std::collections::BTreeMap<&str, (usize, usize)> =
        std::collections::BTreeMap::new();
    for (t, p) in truth.iter().zip(predicted) {
        let entry = per_class.entry(t.as_str()).or_insert((0, 0));
        entry.1 += 1;
        if t == p {
            entry.0 += 1;
        }
    }
    let recalls: f64 = per_class
        .values()
        .map(|&(correct, total)| correct as f64 / total as f64)
        .sum();
    Ok(recalls / per_class.len() as f64)
}
