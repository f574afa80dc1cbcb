//! Weighted MDS in both directions.
//!
//! [`forward_project`] places documents in the unit square so that layout
//! distances approximate the weighted feature distances (classical MDS start,
//! then SMACOF). [`invert_weights`] goes the other way: given documents an
//! analyst has pinned at chosen positions, it finds weights on the floored
//! probability simplex whose distances match the pinned layout, anchored to
//! the previous weights.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featurize::FeatureMatrix;
use crate::metric::{distance_matrix, weighted_sq_distance, WeightVector, WEIGHT_FLOOR};

pub type Point = [f64; 2];

/// SMACOF stops when the relative stress decrease falls below this.
pub const SMACOF_TOLERANCE: f64 = 1e-6;
pub const SMACOF_MAX_ITER: usize = 300;

/// Proximal weight on `‖w - w_prev‖²` in the inversion objective.
pub const DEFAULT_LAMBDA: f64 = 0.5;
pub const INVERSION_TOLERANCE: f64 = 1e-8;
pub const INVERSION_MAX_ITER: usize = 500;

const POWER_MAX_ITER: usize = 1000;
const POWER_TOLERANCE: f64 = 1e-10;

/// Document positions in the unit square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout2D {
    pub doc_ids: Vec<String>,
    pub positions: Vec<Point>,
}

impl Layout2D {
    pub fn new(doc_ids: Vec<String>, positions: Vec<Point>) -> Result<Self> {
        if doc_ids.len() != positions.len() {
            return Err(Error::DimensionMismatch {
                expected: doc_ids.len(),
                actual: positions.len(),
            });
        }
        if positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("layout"));
        }
        Ok(Self { doc_ids, positions })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Move {
    pub doc_id: String,
    pub target: Point,
}

/// Documents dragged to new positions in one interaction.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InteractionBatch {
    pub moves: Vec<Move>,
}

impl InteractionBatch {
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for m in &self.moves {
            if !seen.insert(m.doc_id.as_str()) {
                return Err(Error::invalid(format!(
                    "document {:?} moved twice in one batch",
                    m.doc_id
                )));
            }
            if !m.target.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)) {
                return Err(Error::invalid(format!(
                    "target {:?} for {:?} is outside the unit square",
                    m.target, m.doc_id
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }
}

#[inline]
fn dist2(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Raw stress of `points` against a row-major target distance matrix.
fn raw_stress(target: &[f64], points: &[Point]) -> f64 {
    let n = points.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let r = dist2(&points[i], &points[j]) - target[i * n + j];
            s += r * r;
        }
    }
    s
}

/// `Σ_{i<j} (‖y_i - y_j‖ - d_w(x_i, x_j))²`.
pub fn stress(features: &FeatureMatrix, w: &WeightVector, layout: &Layout2D) -> Result<f64> {
    if layout.doc_ids.as_slice() != features.doc_ids() {
        return Err(Error::invalid("layout and features are not aligned"));
    }
    if w.len() != features.dims() {
        return Err(Error::DimensionMismatch {
            expected: features.dims(),
            actual: w.len(),
        });
    }
    Ok(raw_stress(&distance_matrix(features, w.as_slice()), &layout.positions))
}

/// Top two eigenpairs of a symmetric PSD matrix by orthogonal iteration
/// from a seeded random start.
fn top_two_eigen(b: &[f64], n: usize, seed: u64) -> [(f64, Vec<f64>); 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: [Vec<f64>; 2] = [
        (0..n).map(|_| rng.random::<f64>() - 0.5).collect(),
        (0..n).map(|_| rng.random::<f64>() - 0.5).collect(),
    ];
    orthonormalize(&mut q);
    let matvec = |v: &[f64]| -> Vec<f64> {
        b.chunks_exact(n)
            .map(|row| row.iter().zip(v).map(|(a, x)| a * x).sum())
            .collect()
    };
    for _ in 0..POWER_MAX_ITER {
        let mut z = [matvec(&q[0]), matvec(&q[1])];
        orthonormalize(&mut z);
        // Subspace change measured by the projection residual of the new basis.
        let mut change: f64 = 0.0;
        for zi in &z {
            let mut r = zi.clone();
            for qj in &q {
                let c = dot(zi, qj);
                r.iter_mut().zip(qj).for_each(|(ri, qk)| *ri -= c * qk);
            }
            change = change.max(dot(&r, &r).sqrt());
        }
        q = z;
        if change < POWER_TOLERANCE {
            break;
        }
    }
    // Rayleigh-Ritz on the converged 2D subspace.
    let bq = [matvec(&q[0]), matvec(&q[1])];
    let (h00, h01, h11) = (dot(&q[0], &bq[0]), dot(&q[0], &bq[1]), dot(&q[1], &bq[1]));
    let mean = 0.5 * (h00 + h11);
    let radius = (0.25 * (h00 - h11).powi(2) + h01 * h01).sqrt();
    let (l0, l1) = (mean + radius, mean - radius);
    let angle = 0.5 * (2.0 * h01).atan2(h00 - h11);
    let (c, s) = (angle.cos(), angle.sin());
    let v0: Vec<f64> = q[0].iter().zip(&q[1]).map(|(a, b)| c * a + s * b).collect();
    let v1: Vec<f64> = q[0].iter().zip(&q[1]).map(|(a, b)| -s * a + c * b).collect();
    [(l0, v0), (l1, v1)]
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn orthonormalize(q: &mut [Vec<f64>; 2]) {
    let n0 = dot(&q[0], &q[0]).sqrt();
    if n0 > 0.0 {
        q[0].iter_mut().for_each(|v| *v /= n0);
    }
    let c = dot(&q[0], &q[1]);
    let (a, b) = q.split_at_mut(1);
    b[0].iter_mut().zip(&a[0]).for_each(|(v, u)| *v -= c * u);
    let n1 = dot(&q[1], &q[1]).sqrt();
    if n1 > 0.0 {
        q[1].iter_mut().for_each(|v| *v /= n1);
    }
}

/// Classical (Torgerson) MDS of a distance matrix into two dimensions.
pub fn classical_mds(target: &[f64], n: usize, seed: u64) -> Vec<Point> {
    if n == 1 {
        return vec![[0.0, 0.0]];
    }
    let mut b: Vec<f64> = target.iter().map(|d| -0.5 * d * d).collect();
    let row_means: Vec<f64> = b.chunks_exact(n).map(|r| r.iter().sum::<f64>() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    for i in 0..n {
        for j in 0..n {
            // Symmetric, so column means equal row means.
            b[i * n + j] += grand - row_means[i] - row_means[j];
        }
    }
    let [(l0, v0), (l1, v1)] = top_two_eigen(&b, n, seed);
    let (s0, s1) = (l0.max(0.0).sqrt(), l1.max(0.0).sqrt());
    v0.iter().zip(&v1).map(|(a, c)| [a * s0, c * s1]).collect()
}

/// Outcome of SMACOF on a fixed target distance matrix.
#[derive(Debug, Clone)]
pub struct SmacofRun {
    pub points: Vec<Point>,
    /// Raw stress of the starting configuration followed by the stress after
    /// each Guttman transform.
    pub stress_history: Vec<f64>,
}

/// Raw stress of `x` and its Guttman transform, written into `next`, in one
/// pass over the pairs.
fn guttman_pass(target: &[f64], x: &[Point], next: &mut [Point]) -> f64 {
    let n = x.len();
    next.iter_mut().for_each(|p| *p = [0.0, 0.0]);
    let mut stress = 0.0;
    for i in 0..n {
        let xi = x[i];
        let row = &target[i * n..(i + 1) * n];
        let mut acc = [0.0, 0.0];
        for j in (i + 1)..n {
            let dx = [xi[0] - x[j][0], xi[1] - x[j][1]];
            let d = (dx[0] * dx[0] + dx[1] * dx[1]).sqrt();
            let r = d - row[j];
            stress += r * r;
            if d > 0.0 {
                let ratio = row[j] / d;
                acc[0] += ratio * dx[0];
                acc[1] += ratio * dx[1];
                next[j][0] -= ratio * dx[0];
                next[j][1] -= ratio * dx[1];
            }
        }
        next[i][0] += acc[0];
        next[i][1] += acc[1];
    }
    let inv = 1.0 / n as f64;
    next.iter_mut().for_each(|p| *p = [p[0] * inv, p[1] * inv]);
    stress
}

/// Minimizes raw stress from `init` by repeated Guttman transforms.
///
/// Stops when the relative stress decrease drops below `tolerance` or after
/// `max_iter` transforms. The returned points are the last configuration
/// whose stress was recorded.
pub fn smacof(target: &[f64], init: Vec<Point>, tolerance: f64, max_iter: usize) -> SmacofRun {
    let n = init.len();
    let mut x = init;
    let mut next = vec![[0.0; 2]; n];
    let mut history: Vec<f64> = Vec::new();
    let mut transforms = 0;
    loop {
        let s = guttman_pass(target, &x, &mut next);
        let converged = match history.last() {
            Some(&prev) => prev == 0.0 || (prev - s) / prev < tolerance,
            None => false,
        };
        history.push(s);
        if converged || s == 0.0 || transforms == max_iter {
            break;
        }
        std::mem::swap(&mut x, &mut next);
        transforms += 1;
    }
    SmacofRun {
        points: x,
        stress_history: history,
    }
}

fn centroid(points: &[Point]) -> Point {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |a, p| (a.0 + p[0], a.1 + p[1]));
    [sx / n, sy / n]
}

/// Rotates (or reflects) `points` about their centroid to best match `reference`.
pub fn procrustes_align(points: &mut [Point], reference: &[Point]) {
    let (cx, cr) = (centroid(points), centroid(reference));
    // m = Xᵀ Y over centered configurations.
    let mut m = [[0.0; 2]; 2];
    for (p, r) in points.iter().zip(reference) {
        let x = [p[0] - cx[0], p[1] - cx[1]];
        let y = [r[0] - cr[0], r[1] - cr[1]];
        for a in 0..2 {
            for b in 0..2 {
                m[a][b] += x[a] * y[b];
            }
        }
    }
    let rot_score = (m[0][0] + m[1][1]).hypot(m[0][1] - m[1][0]);
    let refl_score = (m[0][0] - m[1][1]).hypot(m[0][1] + m[1][0]);
    // Row vectors are multiplied on the right: x' = x R.
    let r = if rot_score >= refl_score {
        let t = (m[0][1] - m[1][0]).atan2(m[0][0] + m[1][1]);
        [[t.cos(), t.sin()], [-t.sin(), t.cos()]]
    } else {
        let t = (m[0][1] + m[1][0]).atan2(m[0][0] - m[1][1]);
        [[t.cos(), t.sin()], [t.sin(), -t.cos()]]
    };
    for p in points.iter_mut() {
        let x = [p[0] - cx[0], p[1] - cx[1]];
        *p = [
            x[0] * r[0][0] + x[1] * r[1][0] + cx[0],
            x[0] * r[0][1] + x[1] * r[1][1] + cx[1],
        ];
    }
}

/// Uniformly scales and translates into `[0,1]²`, centering the shorter axis.
/// Returns false (all points at the center) when every point coincides.
pub fn normalize_unit_square(points: &mut [Point]) -> bool {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points.iter() {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let range = [hi[0] - lo[0], hi[1] - lo[1]];
    let scale = range[0].max(range[1]);
    if scale.is_nan() || scale <= 0.0 {
        points.iter_mut().for_each(|p| *p = [0.5, 0.5]);
        return false;
    }
    let pad = [(1.0 - range[0] / scale) / 2.0, (1.0 - range[1] / scale) / 2.0];
    for p in points.iter_mut() {
        for a in 0..2 {
            p[a] = ((p[a] - lo[a]) / scale + pad[a]).clamp(0.0, 1.0);
        }
    }
    true
}

/// A forward projection and its diagnostics.
#[derive(Debug, Clone)]
pub struct Projection {
    pub layout: Layout2D,
    /// Raw stress per SMACOF step, in feature-distance units (before the
    /// layout is rescaled into the unit square).
    pub stress_history: Vec<f64>,
    /// Every document has identical weighted features; all points sit at the center.
    pub degenerate: bool,
}

/// Lays documents out in the unit square under the weighted metric.
///
/// Starts from `init` (rescaled to the target distances) or from classical
/// MDS, runs SMACOF, aligns the result to `init` when given, and rescales
/// into `[0,1]²`.
pub fn forward_project(
    features: &FeatureMatrix,
    w: &WeightVector,
    init: Option<&Layout2D>,
    seed: u64,
) -> Result<Projection> {
    let n = features.n_rows();
    if n < 2 {
        return Err(Error::invalid(format!(
            "projection needs at least 2 documents, got {n}"
        )));
    }
    if w.len() != features.dims() {
        return Err(Error::DimensionMismatch {
            expected: features.dims(),
            actual: w.len(),
        });
    }
    if let Some(init) = init {
        if init.doc_ids.as_slice() != features.doc_ids() {
            return Err(Error::invalid("initial layout is not aligned with the features"));
        }
    }
    let doc_ids = features.doc_ids().to_vec();
    let target = distance_matrix(features, w.as_slice());
    if target.iter().all(|&d| d == 0.0) {
        return Ok(Projection {
            layout: Layout2D::new(doc_ids, vec![[0.5, 0.5]; n])?,
            stress_history: vec![0.0],
            degenerate: true,
        });
    }

    let start = match init {
        Some(init) => {
            // Least-squares scale of the given layout onto the target distances.
            let mut x = init.positions.clone();
            let c = centroid(&x);
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..n {
                for j in (i + 1)..n {
                    let l = dist2(&x[i], &x[j]);
                    num += l * target[i * n + j];
                    den += l * l;
                }
            }
            if den > 0.0 {
                let s = num / den;
                x.iter_mut().for_each(|p| *p = [(p[0] - c[0]) * s, (p[1] - c[1]) * s]);
                x
            } else {
                classical_mds(&target, n, seed)
            }
        }
        None => classical_mds(&target, n, seed),
    };

    let run = smacof(&target, start, SMACOF_TOLERANCE, SMACOF_MAX_ITER);
    let mut points = run.points;
    if let Some(init) = init {
        procrustes_align(&mut points, &init.positions);
    }
    normalize_unit_square(&mut points);
    Ok(Projection {
        layout: Layout2D::new(doc_ids, points)?,
        stress_history: run.stress_history,
        degenerate: false,
    })
}

/// Euclidean projection onto `{w : w_k ≥ eps, Σ w_k = 1}` by the
/// sorted-threshold method applied to the shifted simplex of mass `1 - d·eps`.
pub fn simplex_project(v: &[f64], eps: f64) -> Result<Vec<f64>> {
    let d = v.len();
    if d == 0 {
        return Err(Error::invalid("cannot project an empty vector"));
    }
    if eps.is_nan() || eps < 0.0 || eps * d as f64 >= 1.0 {
        return Err(Error::invalid(format!(
            "floor {eps:e} is infeasible for {d} dimensions"
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("vector to project"));
    }
    let mass = 1.0 - eps * d as f64;
    let shifted: Vec<f64> = v.iter().map(|x| x - eps).collect();
    let mut sorted = shifted.clone();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - mass) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    Ok(shifted.iter().map(|u| (u - theta).max(0.0) + eps).collect())
}

/// Inversion objective over a fixed pinned set.
///
/// `J(w) = (1/P) Σ_pairs (d_w(x_i, x_j) - s·‖y_i - y_j‖)² + λ‖w - w_prev‖²`
/// with `s` the least-squares scale of layout distances onto the feature
/// distances under `w_prev`.
#[derive(Debug, Clone)]
pub struct InversionObjective {
    dims: usize,
    /// Per pair, the squared coordinate differences `(x_ik - x_jk)²`.
    sq_diffs: Vec<f64>,
    /// Per pair, the scaled layout distance `s·‖y_i - y_j‖`.
    targets: Vec<f64>,
    w_prev: Vec<f64>,
    lambda: f64,
    scale: f64,
}

impl InversionObjective {
    pub fn new(
        features: &FeatureMatrix,
        pinned: &[(String, Point)],
        w_prev: &WeightVector,
        lambda: f64,
    ) -> Result<Self> {
        if pinned.len() < 2 {
            return Err(Error::invalid(format!(
                "weight inversion needs at least 2 pinned documents, got {}",
                pinned.len()
            )));
        }
        if w_prev.len() != features.dims() {
            return Err(Error::DimensionMismatch {
                expected: features.dims(),
                actual: w_prev.len(),
            });
        }
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::invalid(format!(
                "lambda must be a nonnegative number, got {lambda}"
            )));
        }
        let mut seen = HashSet::new();
        let rows = pinned
            .iter()
            .map(|(id, p)| {
                if !seen.insert(id.as_str()) {
                    return Err(Error::invalid(format!("document {id:?} pinned twice")));
                }
                if !p.iter().all(|v| v.is_finite()) {
                    return Err(Error::NonFinite("pinned position"));
                }
                features
                    .position(id)
                    .map(|r| (r, *p))
                    .ok_or_else(|| Error::UnknownDocument(id.clone()))
            })
            .collect::<Result<Vec<_>>>()?;

        let dims = features.dims();
        let wp = w_prev.as_slice();
        let pairs = rows.len() * (rows.len() - 1) / 2;
        let mut sq_diffs = Vec::with_capacity(pairs * dims);
        let mut layout = Vec::with_capacity(pairs);
        let mut prev = Vec::with_capacity(pairs);
        for a in 0..rows.len() {
            for b in (a + 1)..rows.len() {
                let (xa, xb) = (features.row(rows[a].0), features.row(rows[b].0));
                sq_diffs.extend(xa.iter().zip(xb).map(|(u, v)| (u - v) * (u - v)));
                layout.push(dist2(&rows[a].1, &rows[b].1));
                prev.push(weighted_sq_distance(xa, xb, wp).sqrt());
            }
        }
        let den: f64 = layout.iter().map(|l| l * l).sum();
        let scale = if den > 0.0 {
            layout.iter().zip(&prev).map(|(l, d)| l * d).sum::<f64>() / den
        } else {
            1.0
        };
        let targets = layout.iter().map(|l| scale * l).collect();
        Ok(Self {
            dims,
            sq_diffs,
            targets,
            w_prev: wp.to_vec(),
            lambda,
            scale,
        })
    }

    /// The layout-to-feature distance scale `s`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn pairs(&self) -> usize {
        self.targets.len()
    }

    fn pair_distance(&self, p: usize, w: &[f64]) -> f64 {
        let row = &self.sq_diffs[p * self.dims..(p + 1) * self.dims];
        row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>().sqrt()
    }

    fn proximal(&self, w: &[f64]) -> f64 {
        self.lambda * w.iter().zip(&self.w_prev).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    }

    pub fn value(&self, w: &[f64]) -> f64 {
        let p = self.pairs() as f64;
        let fit: f64 = (0..self.pairs())
            .map(|i| (self.pair_distance(i, w) - self.targets[i]).powi(2))
            .sum();
        fit / p + self.proximal(w)
    }

    pub fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let p = self.pairs() as f64;
        let mut g: Vec<f64> = w
            .iter()
            .zip(&self.w_prev)
            .map(|(a, b)| 2.0 * self.lambda * (a - b))
            .collect();
        for i in 0..self.pairs() {
            let d = self.pair_distance(i, w);
            if d <= 0.0 {
                continue;
            }
            // d/dw_k of (d - t)² with d = sqrt(Σ w_k δ_k²) is (d - t)·δ_k²/d.
            let c = (d - self.targets[i]) / (d * p);
            let row = &self.sq_diffs[i * self.dims..(i + 1) * self.dims];
            g.iter_mut().zip(row).for_each(|(gk, s)| *gk += c * s);
        }
        g
    }
}

/// Learned weights and optimizer diagnostics.
#[derive(Debug, Clone)]
pub struct Inversion {
    pub weights: WeightVector,
    pub objective_before: f64,
    pub objective_after: f64,
    pub iterations: usize,
    pub scale: f64,
}

/// Projected gradient descent on [`InversionObjective`] from `w_prev`.
///
/// Each step starts from twice the last accepted step length (at most 1) and
/// halves until the objective decreases; it stops when a step moves `w` by
/// less than [`INVERSION_TOLERANCE`], when no decreasing step exists, or after
/// [`INVERSION_MAX_ITER`] steps.
pub fn invert_weights(
    features: &FeatureMatrix,
    pinned: &[(String, Point)],
    w_prev: &WeightVector,
    lambda: f64,
) -> Result<Inversion> {
    let objective = InversionObjective::new(features, pinned, w_prev, lambda)?;
    let mut w = w_prev.as_slice().to_vec();
    let mut value = objective.value(&w);
    let before = value;
    let mut step: f64 = 1.0;
    let mut iterations = 0;
    while iterations < INVERSION_MAX_ITER {
        let g = objective.gradient(&w);
        step = (step * 2.0).min(1.0);
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = w.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            let candidate = simplex_project(&trial, WEIGHT_FLOOR)?;
            let v = objective.value(&candidate);
            if v < value {
                accepted = Some((candidate, v));
                break;
            }
            step *= 0.5;
        }
        let Some((candidate, v)) = accepted else {
            break;
        };
        iterations += 1;
        let moved = candidate
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        w = candidate;
        value = v;
        if moved < INVERSION_TOLERANCE {
            break;
        }
    }
    Ok(Inversion {
        weights: WeightVector::from_vec(w)?,
        objective_before: before,
        objective_after: value,
        iterations,
        scale: objective.scale(),
    })
}
