//! Independent reference computations and synthetic data for integration tests.
//!
//! Nothing here calls into the code path it is used to check.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use si_core::corpus::{Corpus, Document};
use si_core::featurize::{EmbeddingTable, FeatureMatrix, FeatureMode};

pub mod properties;

pub fn fnv1a_reference(bytes: &[u8]) -> u64 {
    let mut h: u128 = 14695981039346656037;
    for &b in bytes {
        h ^= b as u128;
        h = (h * 1099511628211) % (1u128 << 64);
    }
    h as u64
}

pub fn minmax_reference(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = rows[0].len();
    let mut out = rows.to_vec();
    for k in 0..d {
        let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for r in out.iter_mut() {
            r[k] = if hi > lo { (r[k] - lo) / (hi - lo) } else { 0.0 };
        }
    }
    out
}

/// Hashed TF-IDF computed token by token from pre-split documents.
pub fn tfidf_reference(docs: &[Vec<&str>], dims: usize) -> Vec<Vec<f64>> {
    let n = docs.len() as f64;
    let mut rows = vec![vec![0.0; dims]; docs.len()];
    for (r, doc) in docs.iter().enumerate() {
        let mut distinct: Vec<&str> = doc.clone();
        distinct.sort();
        distinct.dedup();
        for t in distinct {
            let c = doc.iter().filter(|x| **x == t).count() as f64;
            let df = docs.iter().filter(|d| d.contains(&t)).count() as f64;
            let w = (1.0 + c.ln()) * (((1.0 + n) / (1.0 + df)).ln() + 1.0);
            let h = fnv1a_reference(t.as_bytes());
            let sign = if h >= 1u64 << 63 { -1.0 } else { 1.0 };
            rows[r][(h % dims as u64) as usize] += sign * w;
        }
    }
    minmax_reference(&rows)
}

/// kNN by sorting every training distance.
pub fn knn_reference(rows: &[Vec<f64>], labels: &[u8], query: &[f64], k: usize, w: &[f64]) -> u8 {
    let mut all: Vec<(f64, usize)> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut s = 0.0;
            for j in 0..r.len() {
                s += w[j] * (r[j] - query[j]) * (r[j] - query[j]);
            }
            (s.sqrt(), i)
        })
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let top = &all[..k];
    let mut counts: BTreeMap<u8, usize> = BTreeMap::new();
    for &(_, i) in top {
        *counts.entry(labels[i]).or_default() += 1;
    }
    let best = *counts.values().max().unwrap();
    // First label in distance order that reaches the best count.
    top.iter().map(|&(_, i)| labels[i]).find(|l| counts[l] == best).unwrap()
}

/// Projection onto `{w ≥ eps, Σw = 1}` by enumerating every free set.
pub fn simplex_projection_reference(v: &[f64], eps: f64) -> Vec<f64> {
    let d = v.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << d) {
        let free: Vec<usize> = (0..d).filter(|i| mask & (1 << i) != 0).collect();
        let fixed = d - free.len();
        let mu = (free.iter().map(|&i| v[i]).sum::<f64>() + fixed as f64 * eps - 1.0) / free.len() as f64;
        let w: Vec<f64> = (0..d)
            .map(|i| if mask & (1 << i) != 0 { v[i] - mu } else { eps })
            .collect();
        if w.iter().any(|&x| x < eps - 1e-15) {
            continue;
        }
        let dist: f64 = w.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(bd, _)| dist < *bd) {
            best = Some((dist, w));
        }
    }
    best.unwrap().1
}

/// The inversion objective written out directly.
pub fn inversion_objective_reference(
    rows: &[Vec<f64>],
    pinned: &[(usize, [f64; 2])],
    w_prev: &[f64],
    lambda: f64,
    w: &[f64],
) -> f64 {
    let dist = |a: &[f64], b: &[f64], w: &[f64]| -> f64 {
        let mut s = 0.0;
        for k in 0..a.len() {
            s += w[k] * (a[k] - b[k]).powi(2);
        }
        s.sqrt()
    };
    let mut pairs = Vec::new();
    for a in 0..pinned.len() {
        for b in (a + 1)..pinned.len() {
            let (i, pi) = pinned[a];
            let (j, pj) = pinned[b];
            let l = ((pi[0] - pj[0]).powi(2) + (pi[1] - pj[1]).powi(2)).sqrt();
            pairs.push((i, j, l));
        }
    }
    let num: f64 = pairs
        .iter()
        .map(|&(i, j, l)| dist(&rows[i], &rows[j], w_prev) * l)
        .sum();
    let den: f64 = pairs.iter().map(|&(_, _, l)| l * l).sum();
    let s = if den > 0.0 { num / den } else { 1.0 };
    let fit: f64 = pairs
        .iter()
        .map(|&(i, j, l)| (dist(&rows[i], &rows[j], w) - s * l).powi(2))
        .sum::<f64>()
        / pairs.len() as f64;
    let reg: f64 = w.iter().zip(w_prev).map(|(a, b)| (a - b).powi(2)).sum();
    fit + lambda * reg
}

/// Minimizer of the reference objective over the 2-simplex on a grid.
pub fn grid_search_2simplex(
    rows: &[Vec<f64>],
    pinned: &[(usize, [f64; 2])],
    w_prev: &[f64],
    lambda: f64,
    resolution: f64,
) -> [f64; 3] {
    let steps = (1.0 / resolution).round() as usize;
    let mut best = (f64::INFINITY, [0.0; 3]);
    for a in 0..=steps {
        for b in 0..=(steps - a) {
            let w = [
                a as f64 * resolution,
                b as f64 * resolution,
                (steps - a - b) as f64 * resolution,
            ];
            let j = inversion_objective_reference(rows, pinned, w_prev, lambda, &w);
            if j < best.0 {
                best = (j, w);
            }
        }
    }
    best.1
}

pub fn stress_reference(rows: &[Vec<f64>], w: &[f64], layout: &[[f64; 2]]) -> f64 {
    let mut total = 0.0;
    for i in 0..rows.len() {
        for j in 0..rows.len() {
            if i < j {
                let mut fd = 0.0;
                for k in 0..w.len() {
                    fd += w[k] * (rows[i][k] - rows[j][k]).powi(2);
                }
                let ld = ((layout[i][0] - layout[j][0]).powi(2) + (layout[i][1] - layout[j][1]).powi(2)).sqrt();
                total += (ld - fd.sqrt()).powi(2);
            }
        }
    }
    total
}

/// Plain Euclidean kNN cross-validation over a given fold assignment.
pub fn cv_euclidean_reference(rows: &[Vec<f64>], labels: &[u8], folds: &[usize], n_folds: usize, k: usize) -> f64 {
    let mut acc = 0.0;
    for f in 0..n_folds {
        let train: Vec<usize> = (0..rows.len()).filter(|&i| folds[i] != f).collect();
        let test: Vec<usize> = (0..rows.len()).filter(|&i| folds[i] == f).collect();
        let train_rows: Vec<Vec<f64>> = train.iter().map(|&i| rows[i].clone()).collect();
        let train_labels: Vec<u8> = train.iter().map(|&i| labels[i]).collect();
        let ones = vec![1.0; rows[0].len()];
        let correct = test
            .iter()
            .filter(|&&i| knn_reference(&train_rows, &train_labels, &rows[i], k, &ones) == labels[i])
            .count();
        acc += correct as f64 / test.len() as f64;
    }
    acc / n_folds as f64
}

pub fn matrix(rows: &[Vec<f64>]) -> FeatureMatrix {
    let ids = (0..rows.len()).map(|i| format!("d{i}")).collect();
    FeatureMatrix::new(FeatureMode::EmbeddingAverage, rows[0].len(), rows.concat(), ids).unwrap()
}

pub fn random_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect()
}

/// Two classes that differ only in dimensions `0..block`; the rest is shared noise.
pub fn block_corpus(seed: u64, n_per_class: usize, d: usize, block: usize) -> (Vec<Vec<f64>>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for class in 0..2u8 {
        for _ in 0..n_per_class {
            let row: Vec<f64> = (0..d)
                .map(|k| {
                    let u: f64 = rng.random();
                    if k < block {
                        if class == 0 {
                            0.3 * u
                        } else {
                            0.7 + 0.3 * u
                        }
                    } else {
                        u
                    }
                })
                .collect();
            rows.push(row);
            labels.push(class);
        }
    }
    (rows, labels)
}

/// A two-topic corpus with a matching embedding table.
///
/// Each class draws a share of its tokens from a large class-specific
/// vocabulary whose word vectors cluster around a class centroid; the rest
/// come from a shared vocabulary with unrelated vectors. Documents of the same
/// class rarely share exact topic words, so keyword features see little
/// overlap while averaged embeddings pick up the common centroid.
pub struct SyntheticTask {
    pub corpus: Corpus,
    pub table: EmbeddingTable,
}

pub fn synthetic_task(seed: u64, n_per_class: usize, dims: usize) -> SyntheticTask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shared = 2000;
    let topic = 1500;
    let doc_len = 40;
    let topic_share = 0.15;

    let mut table = EmbeddingTable::new(dims);
    let centroids: Vec<Vec<f64>> = (0..2)
        .map(|_| (0..dims).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
        .collect();
    for i in 0..shared {
        let v = (0..dims).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        table.insert(format!("common{i}"), v).unwrap();
    }
    for (c, centroid) in centroids.iter().enumerate() {
        for i in 0..topic {
            let v = centroid
                .iter()
                .map(|m| m + (rng.random::<f64>() * 2.0 - 1.0) * 1.5)
                .collect();
            table.insert(format!("topic{c}x{i}"), v).unwrap();
        }
    }

    let mut docs = Vec::new();
    let mut counter: HashMap<u8, usize> = HashMap::new();
    for i in 0..(2 * n_per_class) {
        let class = (i % 2) as u8;
        let label = if class == 0 { "alpha" } else { "beta" };
        let words: Vec<String> = (0..doc_len)
            .map(|_| {
                if rng.random::<f64>() < topic_share {
                    format!("topic{class}x{}", rng.random_range(0..topic))
                } else {
                    format!("common{}", rng.random_range(0..shared))
                }
            })
            .collect();
        let n = counter.entry(class).or_default();
        *n += 1;
        docs.push(Document::new(format!("{label}-{n}"), words.join(" "), Some(label)));
    }
    SyntheticTask {
        corpus: Corpus::new(docs).unwrap(),
        table,
    }
}
