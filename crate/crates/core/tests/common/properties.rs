//! Property checks shared by the granular property tests and the acceptance
//! suite. Each returns a short summary on success or the first violation.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use si_core::corpus::{Corpus, Document};
use si_core::featurize::{embed_average, hash_token, tfidf_hashed, EmbeddingTable};
use si_core::metric::{cv_accuracy, knn_predict, stratified_folds, WeightVector, WEIGHT_FLOOR};
use si_core::wmds::{
    classical_mds, forward_project, invert_weights, simplex_project, smacof, InversionObjective, SMACOF_MAX_ITER,
};

use super::*;

pub type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn weighted_rows_distance_matrix(rows: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    let n = rows.len();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..w.len() {
                s += w[k] * (rows[i][k] - rows[j][k]).powi(2);
            }
            out[i * n + j] = s.sqrt();
        }
    }
    out
}

fn random_weights(rng: &mut ChaCha8Rng, d: usize) -> WeightVector {
    let raw: Vec<f64> = (0..d).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = raw.iter().sum();
    WeightVector::project(&raw.iter().map(|v| v / total).collect::<Vec<_>>()).unwrap()
}

/// SMACOF stress never increases between iterations.
pub fn smacof_monotone(instances: usize) -> Check {
    let mut total_steps = 0;
    for seed in 0..instances as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(3..30);
        let d = rng.random_range(2..12);
        let rows = random_rows(&mut rng, n, d);
        let w = random_weights(&mut rng, d);
        let target = weighted_rows_distance_matrix(&rows, w.as_slice());
        let init: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
        for start in [init, classical_mds(&target, n, seed)] {
            let run = smacof(&target, start, 1e-9, SMACOF_MAX_ITER);
            for (t, pair) in run.stress_history.windows(2).enumerate() {
                ensure(pair[1] <= pair[0] * (1.0 + 1e-12) + 1e-15, || {
                    format!("instance {seed}: stress rose at step {t}: {} -> {}", pair[0], pair[1])
                })?;
            }
            total_steps += run.stress_history.len() - 1;
        }
        // The public entry point reports the same non-increasing history.
        let p = forward_project(&matrix(&rows), &w, None, seed).map_err(|e| e.to_string())?;
        ensure(
            p.stress_history
                .windows(2)
                .all(|s| s[1] <= s[0] * (1.0 + 1e-12) + 1e-15),
            || format!("instance {seed}: forward_project stress history not monotone"),
        )?;
    }
    Ok(format!("{instances} instances, {total_steps} Guttman steps"))
}

/// Inversion never raises the objective and always returns simplex weights.
pub fn inversion_descends(instances: usize) -> Check {
    for seed in 0..instances as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let n = rng.random_range(4..25);
        let d = rng.random_range(2..40);
        let rows = random_rows(&mut rng, n, d);
        let m = matrix(&rows);
        let p = rng.random_range(2..=n);
        let mut ids: Vec<usize> = (0..n).collect();
        ids.shuffle(&mut rng);
        let pinned: Vec<(String, [f64; 2])> = ids[..p]
            .iter()
            .map(|&i| (format!("d{i}"), [rng.random(), rng.random()]))
            .collect();
        let w_prev = if seed % 2 == 0 {
            WeightVector::uniform(d)
        } else {
            random_weights(&mut rng, d)
        };
        let lambda = [0.0, 0.1, 0.5, 2.0][seed as usize % 4];
        let out = invert_weights(&m, &pinned, &w_prev, lambda).map_err(|e| e.to_string())?;
        let obj = InversionObjective::new(&m, &pinned, &w_prev, lambda).unwrap();
        let (before, after) = (obj.value(w_prev.as_slice()), obj.value(out.weights.as_slice()));
        ensure(after <= before, || {
            format!("instance {seed}: J rose {before} -> {after}")
        })?;
        let w = out.weights.as_slice();
        ensure(w.iter().all(|&x| x >= WEIGHT_FLOOR), || {
            format!("instance {seed}: weight below floor")
        })?;
        ensure((w.iter().sum::<f64>() - 1.0).abs() <= 1e-9, || {
            format!("instance {seed}: weights do not sum to 1")
        })?;
        WeightVector::from_vec(w.to_vec()).map_err(|e| format!("instance {seed}: {e}"))?;
    }
    Ok(format!("{instances} pinned sets"))
}

/// Inversion agrees with a grid search over the 2-simplex.
pub fn inversion_matches_grid(instances: usize) -> Check {
    let mut worst: f64 = 0.0;
    for seed in 0..instances as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
        let rows = random_rows(&mut rng, 3, 3);
        let pinned: Vec<(usize, [f64; 2])> = (0..3).map(|i| (i, [rng.random(), rng.random()])).collect();
        let w_prev = WeightVector::uniform(3);
        let lambda = 0.5;
        let grid = grid_search_2simplex(&rows, &pinned, w_prev.as_slice(), lambda, 0.001);
        let named: Vec<(String, [f64; 2])> = pinned.iter().map(|(i, p)| (format!("d{i}"), *p)).collect();
        let out = invert_weights(&matrix(&rows), &named, &w_prev, lambda).map_err(|e| e.to_string())?;
        for k in 0..3 {
            let diff = (out.weights.as_slice()[k] - grid[k]).abs();
            worst = worst.max(diff);
            ensure(diff <= 0.005, || {
                format!(
                    "instance {seed}: w = {:?}, grid optimum {grid:?}",
                    out.weights.as_slice()
                )
            })?;
        }
    }
    Ok(format!("{instances} instances, max coordinate gap {worst:.4}"))
}

/// Weighted kNN agrees with sorting every distance.
pub fn knn_matches_exhaustive(instances: usize) -> Check {
    for seed in 0..instances as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(3000 + seed);
        // Coarse coordinates make equal distances common, exercising tie rules.
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..2).map(|_| rng.random_range(0..4) as f64 / 3.0).collect())
            .collect();
        let labels: Vec<u8> = (0..6).map(|_| rng.random_range(0..3)).collect();
        let query: Vec<f64> = (0..2).map(|_| rng.random_range(0..4) as f64 / 3.0).collect();
        let w = if seed % 3 == 0 {
            WeightVector::uniform(2)
        } else {
            random_weights(&mut rng, 2)
        };
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        for k in 1..=6 {
            let got = knn_predict(&refs, &labels, &query, k, &w).map_err(|e| e.to_string())?;
            let want = knn_reference(&rows, &labels, &query, k, w.as_slice());
            ensure(got == want, || {
                format!("instance {seed}, k={k}: got {got}, oracle {want}")
            })?;
        }
    }
    Ok(format!("{instances} six-point instances, k = 1..6"))
}

/// FNV-1a golden values and the hashing rule.
pub fn hash_golden() -> Check {
    let golden: [(&str, Option<u64>, usize, f64); 4] = [
        ("cat", Some(0xf5e307190ce4a327), 31, -1.0),
        ("dog", Some(0xcaaf3b18f47478e9), 93, -1.0),
        ("semantic", None, 13, -1.0),
        ("x86", None, 73, -1.0),
    ];
    ensure(fnv1a_reference(b"") == 0xcbf29ce484222325, || {
        "empty input must hash to the offset basis".into()
    })?;
    for (token, hash, bucket, sign) in golden {
        if let Some(hash) = hash {
            ensure(fnv1a_reference(token.as_bytes()) == hash, || {
                format!("reference hash of {token} drifted")
            })?;
        }
        let got = hash_token(token, 300);
        ensure(got == (bucket, sign), || {
            format!("{token}: got {got:?}, want ({bucket}, {sign})")
        })?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let token: String = (0..rng.random_range(2..12))
            .map(|_| char::from(rng.random_range(b'a'..=b'z')))
            .collect();
        let h = fnv1a_reference(token.as_bytes());
        let want = ((h % 300) as usize, if h >> 63 == 1 { -1.0 } else { 1.0 });
        ensure(hash_token(&token, 300) == want, || format!("{token}: mismatch"))?;
    }
    Ok("4 golden vectors, 200 random tokens".into())
}

/// Hashed TF-IDF and averaged embeddings against hand computations.
pub fn featurizers_match_oracles() -> Check {
    let corpus = Corpus::new(vec![
        Document::new("a", "cat cat", None),
        Document::new("b", "cat dog", None),
        Document::new("c", "dog", None),
    ])
    .unwrap()
    .tokenized();
    let got = tfidf_hashed(&corpus, 4).map_err(|e| e.to_string())?;
    let want = tfidf_reference(&[vec!["cat", "cat"], vec!["cat", "dog"], vec!["dog"]], 4);
    for (i, row) in want.iter().enumerate() {
        for k in 0..4 {
            ensure((got.row(i)[k] - row[k]).abs() <= 1e-12, || {
                format!("tfidf row {i} dim {k}: {} vs {}", got.row(i)[k], row[k])
            })?;
        }
    }
    // By hand: cat -> bucket 3, dog -> bucket 1, both negative, so
    // column 1 is (1, 0, 0) and column 3 is (0, ln2/(1+ln2), 1).
    let by_hand = [
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.409_383_890_850_358_7],
        [0.0, 0.0, 0.0, 1.0],
    ];
    for i in 0..3 {
        for k in 0..4 {
            ensure((got.row(i)[k] - by_hand[i][k]).abs() <= 1e-12, || {
                format!("tfidf hand value ({i},{k})")
            })?;
        }
    }

    let mut table = EmbeddingTable::new(3);
    let vectors = [
        ("red", [0.2, -1.0, 0.5]),
        ("blue", [1.5, 0.0, -0.25]),
        ("green", [-0.75, 0.3, 0.1]),
    ];
    for (w, v) in vectors {
        table.insert(w, v.to_vec()).unwrap();
    }
    let corpus = Corpus::new(vec![
        Document::new("p", "red red blue unknownword", None),
        Document::new("q", "green", None),
        Document::new("r", "blue green red green", None),
    ])
    .unwrap()
    .tokenized();
    let out = embed_average(&corpus, &table, 3).map_err(|e| e.to_string())?;
    let get = |t: &str| vectors.iter().find(|(w, _)| *w == t).unwrap().1;
    let docs: [&[&str]; 3] = [&["red", "red", "blue"], &["green"], &["blue", "green", "red", "green"]];
    let averaged: Vec<Vec<f64>> = docs
        .iter()
        .map(|toks| {
            let mut acc = [0.0; 3];
            for t in toks.iter() {
                for k in 0..3 {
                    acc[k] += get(t)[k];
                }
            }
            acc.iter().map(|v| v / toks.len() as f64).collect()
        })
        .collect();
    let want = minmax_reference(&averaged);
    for i in 0..3 {
        for k in 0..3 {
            ensure((out.features.row(i)[k] - want[i][k]).abs() <= 1e-12, || {
                format!(
                    "embedding row {i} dim {k}: {} vs {}",
                    out.features.row(i)[k],
                    want[i][k]
                )
            })?;
        }
    }
    Ok("3-doc tf-idf and embedding toys match".into())
}

/// Accuracy 1.0 on separated clusters and about 0.5 on random labels.
pub fn cv_accuracy_calibration() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for c in 0..2u8 {
        for _ in 0..25 {
            rows.push((0..4).map(|_| c as f64 * 5.0 + rng.random::<f64>()).collect::<Vec<_>>());
            labels.push(c);
        }
    }
    let separated =
        cv_accuracy(&matrix(&rows), &labels, &WeightVector::uniform(4), 3, 5, 1).map_err(|e| e.to_string())?;
    ensure(separated == 1.0, || format!("separated clusters scored {separated}"))?;

    let mut total = 0.0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        let rows = random_rows(&mut rng, 100, 10);
        let labels: Vec<u8> = (0..100).map(|_| rng.random_range(0..2)).collect();
        total +=
            cv_accuracy(&matrix(&rows), &labels, &WeightVector::uniform(10), 3, 5, seed).map_err(|e| e.to_string())?;
    }
    let random = total / 20.0;
    ensure((random - 0.5).abs() <= 0.1, || format!("random labels scored {random}"))?;

    // Uniform weights rank neighbours exactly like plain Euclidean distance.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let rows = random_rows(&mut rng, 40, 5);
    let labels: Vec<u8> = (0..40).map(|i| (i % 2) as u8).collect();
    let folds = stratified_folds(&labels, 5, 3);
    let weighted =
        cv_accuracy(&matrix(&rows), &labels, &WeightVector::uniform(5), 3, 5, 3).map_err(|e| e.to_string())?;
    let plain = cv_euclidean_reference(&rows, &labels, &folds, 5, 3);
    ensure(weighted == plain, || {
        format!("uniform weighted cv {weighted} != euclidean cv {plain}")
    })?;
    Ok(format!(
        "separated 1.0, random {random:.3}, uniform == euclidean ({plain:.3})"
    ))
}

/// Pinning two documents per class at opposite corners moves weight onto the
/// dimensions that separate the classes.
pub fn discriminative_block_gains_weight(corpora: usize) -> Check {
    let (d, block) = (30, 5);
    let mut min_gain = f64::INFINITY;
    for seed in 0..corpora as u64 {
        let (rows, labels) = block_corpus(seed, 20, d, block);
        let m = matrix(&rows);
        let a: Vec<usize> = (0..rows.len()).filter(|&i| labels[i] == 0).take(2).collect();
        let b: Vec<usize> = (0..rows.len()).filter(|&i| labels[i] == 1).take(2).collect();
        let pinned: Vec<(String, [f64; 2])> = a
            .iter()
            .map(|&i| (format!("d{i}"), [0.0, 0.0]))
            .chain(b.iter().map(|&i| (format!("d{i}"), [1.0, 1.0])))
            .collect();
        let w0 = WeightVector::uniform(d);
        let w = invert_weights(&m, &pinned, &w0, 0.5)
            .map_err(|e| e.to_string())?
            .weights;
        let before: f64 = w0.as_slice()[..block].iter().sum();
        let after: f64 = w.as_slice()[..block].iter().sum();
        min_gain = min_gain.min(after - before);
        ensure(after > before, || {
            format!("corpus {seed}: block mass {before} -> {after}")
        })?;
    }
    Ok(format!("{corpora} corpora, smallest block-mass gain {min_gain:.4}"))
}

/// Simplex projection agrees with active-set enumeration.
pub fn simplex_projection_matches_enumeration(instances: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..instances {
        let v: Vec<f64> = (0..4).map(|_| rng.random::<f64>() * 2.0 - 0.5).collect();
        let got = simplex_project(&v, WEIGHT_FLOOR).map_err(|e| e.to_string())?;
        let want = simplex_projection_reference(&v, WEIGHT_FLOOR);
        for k in 0..4 {
            ensure((got[k] - want[k]).abs() <= 1e-9, || {
                format!("instance {i}: {got:?} vs {want:?}")
            })?;
        }
    }
    Ok(format!("{instances} random 4-vectors"))
}
