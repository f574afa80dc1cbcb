//! Weighted Euclidean metric, kNN classification and cross-validated accuracy.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featurize::FeatureMatrix;
use crate::wmds::simplex_project;

/// Lower bound on every learned weight.
pub const WEIGHT_FLOOR: f64 = 1e-6;

const SUM_TOLERANCE: f64 = 1e-9;

/// Nonnegative per-dimension weights summing to one, each at least [`WEIGHT_FLOOR`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn uniform(dims: usize) -> Self {
        assert!(dims > 0, "weight vector needs at least one dimension");
        WeightVector(vec![1.0 / dims as f64; dims])
    }

    /// Wraps `w` after checking the floor and sum invariants.
    pub fn from_vec(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::invalid("weight vector is empty"));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("weight vector"));
        }
        if let Some((k, v)) = w.iter().enumerate().find(|(_, &v)| v < WEIGHT_FLOOR) {
            return Err(Error::invalid(format!(
                "weight {k} is {v:e}, below the floor {WEIGHT_FLOOR:e}"
            )));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::invalid(format!("weights sum to {sum}, not 1")));
        }
        Ok(WeightVector(w))
    }

    /// Nearest point of the floored simplex to `v`.
    pub fn project(v: &[f64]) -> Result<Self> {
        Self::from_vec(simplex_project(v, WEIGHT_FLOOR)?)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The `k` largest weights as `(dimension, weight)`, ties by lower dimension.
    pub fn top(&self, k: usize) -> Vec<(usize, f64)> {
        let mut idx: Vec<(usize, f64)> = self.0.iter().copied().enumerate().collect();
        idx.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        idx.truncate(k);
        idx
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = Error;

    fn try_from(w: Vec<f64>) -> Result<Self> {
        Self::from_vec(w)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

/// `Σ w_k (x_k - y_k)²` without length or finiteness checks.
#[inline]
pub fn weighted_sq_distance(x: &[f64], y: &[f64], w: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .zip(w)
        .map(|((a, b), wk)| {
            let d = a - b;
            wk * d * d
        })
        .sum()
}

pub fn weighted_distance(x: &[f64], y: &[f64], w: &WeightVector) -> Result<f64> {
    let w = w.as_slice();
    for len in [x.len(), y.len()] {
        if len != w.len() {
            return Err(Error::DimensionMismatch {
                expected: w.len(),
                actual: len,
            });
        }
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("distance input"));
    }
    Ok(weighted_sq_distance(x, y, w).sqrt())
}

/// Symmetric matrix of weighted distances between all rows, row-major `n × n`.
pub fn distance_matrix(features: &FeatureMatrix, w: &[f64]) -> Vec<f64> {
    let n = features.n_rows();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        let xi = features.row(i);
        for j in (i + 1)..n {
            let d = weighted_sq_distance(xi, features.row(j), w).sqrt();
            out[i * n + j] = d;
            out[j * n + i] = d;
        }
    }
    out
}

/// Majority label of neighbours sorted nearest first. A tied majority goes to
/// the tied label that appears first in the list.
fn vote<L: PartialEq + Clone>(neighbours: &[&L]) -> L {
    let mut tally: Vec<(&L, usize)> = Vec::new();
    for &label in neighbours {
        match tally.iter_mut().find(|(l, _)| *l == label) {
            Some((_, c)) => *c += 1,
            None => tally.push((label, 1)),
        }
    }
    // tally is in order of first appearance, so the first max wins ties.
    let best = tally.iter().map(|(_, c)| *c).max().unwrap_or(0);
    tally
        .into_iter()
        .find(|(_, c)| *c == best)
        .map(|(l, _)| l.clone())
        .expect("vote over an empty neighbour list")
}

/// Sorts `(distance, index)` candidates and keeps the `k` nearest, ties by index.
fn k_nearest(candidates: &mut [(f64, usize)], k: usize) -> &[(f64, usize)] {
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < candidates.len() {
        candidates.select_nth_unstable_by(k - 1, cmp);
    }
    let head = &mut candidates[..k];
    head.sort_unstable_by(cmp);
    head
}

/// Majority label of the `k` training rows nearest to `query`.
///
/// Equal distances are ordered by lower row index; a tied vote goes to the
/// label of the single nearest neighbour.
pub fn knn_predict<L: PartialEq + Clone>(
    rows: &[&[f64]],
    labels: &[L],
    query: &[f64],
    k: usize,
    w: &WeightVector,
) -> Result<L> {
    if rows.is_empty() {
        return Err(Error::invalid("kNN training set is empty"));
    }
    if rows.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            actual: labels.len(),
        });
    }
    if k == 0 || k > rows.len() {
        return Err(Error::invalid(format!(
            "k = {k} out of range for {} training rows",
            rows.len()
        )));
    }
    let mut candidates = rows
        .iter()
        .enumerate()
        .map(|(i, r)| weighted_distance(r, query, w).map(|d| (d, i)))
        .collect::<Result<Vec<_>>>()?;
    let nearest = k_nearest(&mut candidates, k);
    let votes: Vec<&L> = nearest.iter().map(|&(_, i)| &labels[i]).collect();
    Ok(vote(&votes))
}

/// Stratified fold index for every row: each class is shuffled with `seed`
/// and dealt round-robin, continuing where the previous class stopped.
pub fn stratified_folds<L: Ord>(labels: &[L], folds: usize, seed: u64) -> Vec<usize> {
    let mut by_class: BTreeMap<&L, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    let mut offset = 0;
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
        for (pos, &i) in members.iter().enumerate() {
            assignment[i] = (offset + pos) % folds;
        }
        offset += members.len();
    }
    assignment
}

/// Mean per-fold accuracy of weighted kNN under stratified `folds`-fold
/// cross-validation.
pub fn cv_accuracy<L: Ord + Clone>(
    features: &FeatureMatrix,
    labels: &[L],
    w: &WeightVector,
    k: usize,
    folds: usize,
    seed: u64,
) -> Result<f64> {
    let n = features.n_rows();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: labels.len(),
        });
    }
    if w.len() != features.dims() {
        return Err(Error::DimensionMismatch {
            expected: features.dims(),
            actual: w.len(),
        });
    }
    if folds < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {folds}")));
    }
    let mut class_sizes: BTreeMap<&L, usize> = BTreeMap::new();
    for l in labels {
        *class_sizes.entry(l).or_default() += 1;
    }
    if let Some(smallest) = class_sizes.values().min() {
        if *smallest < folds {
            return Err(Error::invalid(format!(
                "a class has {smallest} documents, fewer than {folds} folds"
            )));
        }
    } else {
        return Err(Error::EmptyCorpus);
    }

    let assignment = stratified_folds(labels, folds, seed);
    let mut fold_sizes = vec![0usize; folds];
    for &f in &assignment {
        fold_sizes[f] += 1;
    }
    if fold_sizes.iter().any(|&s| n - s < k) {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the training size of some fold"
        )));
    }

    // Squared distances preserve the neighbour ranking.
    let wv = w.as_slice();
    let mut sq = vec![0.0; n * n];
    for i in 0..n {
        let xi = features.row(i);
        for j in (i + 1)..n {
            let d = weighted_sq_distance(xi, features.row(j), wv);
            sq[i * n + j] = d;
            sq[j * n + i] = d;
        }
    }

    let mut correct = vec![0usize; folds];
    let mut candidates = Vec::with_capacity(n);
    for i in 0..n {
        let fold = assignment[i];
        candidates.clear();
        candidates.extend((0..n).filter(|&j| assignment[j] != fold).map(|j| (sq[i * n + j], j)));
        let nearest = k_nearest(&mut candidates, k);
        let votes: Vec<&L> = nearest.iter().map(|&(_, j)| &labels[j]).collect();
        if vote(&votes) == labels[i] {
            correct[fold] += 1;
        }
    }
    let mean = correct
        .iter()
        .zip(&fold_sizes)
        .map(|(&c, &s)| c as f64 / s as f64)
        .sum::<f64>()
        / folds as f64;
    Ok(mean)
}
