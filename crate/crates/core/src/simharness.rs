//! Simulated-analyst evaluation.
//!
//! A labeled binary task stands in for the analyst's intent: each iteration
//! drags a few documents of class A to one corner and of class B to the
//! opposite corner, re-learns the weights from every pinned document, and
//! scores the new metric with cross-validated kNN accuracy.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::featurize::{embed_average, tfidf_hashed, EmbeddingTable, FeatureMatrix, FeatureMode, DEFAULT_DIMS};
use crate::metric::{cv_accuracy, WeightVector};
use crate::wmds::{forward_project, invert_weights, InteractionBatch, Layout2D, Move, Point, DEFAULT_LAMBDA};

/// Built-in binary tasks: name, class A, class B.
pub const TASK_PRESETS: [(&str, &str, &str); 4] = [
    ("rec", "rec.autos", "rec.motorcycles"),
    ("religion", "talk.religion.misc", "soc.religion.christian"),
    ("sys", "comp.sys.mac.hardware", "comp.sys.ibm.pc.hardware"),
    ("vis", "InfoVis", "VAST"),
];

/// Which pinned documents constrain each weight update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PinningMode {
    /// Every document pinned so far.
    Cumulative,
    /// Only the current iteration's batch.
    NewestOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: String,
    pub class_a: String,
    pub class_b: String,
    pub corner_a: Point,
    pub corner_b: Point,
    pub docs_per_class_per_iter: usize,
    pub iterations: usize,
    pub runs: usize,
    pub base_seed: u64,
    pub feature_mode: FeatureMode,
    pub dims: usize,
    pub knn_k: usize,
    pub cv_folds: usize,
    pub lambda: f64,
    pub pinning: PinningMode,
    /// Re-project after every update. Accuracy does not depend on it.
    pub refresh_layout: bool,
}

impl TaskSpec {
    pub fn new(name: &str, class_a: &str, class_b: &str, feature_mode: FeatureMode) -> Self {
        Self {
            name: name.to_owned(),
            class_a: class_a.to_owned(),
            class_b: class_b.to_owned(),
            corner_a: [0.0, 0.0],
            corner_b: [1.0, 1.0],
            docs_per_class_per_iter: 5,
            iterations: 10,
            runs: 10,
            base_seed: 42,
            feature_mode,
            dims: DEFAULT_DIMS,
            knn_k: 3,
            cv_folds: 5,
            lambda: DEFAULT_LAMBDA,
            pinning: PinningMode::Cumulative,
            refresh_layout: true,
        }
    }

    /// One of the names in [`TASK_PRESETS`].
    pub fn preset(name: &str, feature_mode: FeatureMode) -> Result<Self> {
        TASK_PRESETS
            .iter()
            .find(|(n, _, _)| *n == name)
            .map(|(n, a, b)| Self::new(n, a, b, feature_mode))
            .ok_or_else(|| {
                let names: Vec<_> = TASK_PRESETS.iter().map(|p| p.0).collect();
                Error::invalid(format!("unknown task {name:?}; presets are {names:?}"))
            })
    }

    /// Checks the spec against the sizes of its two classes.
    pub fn validate(&self, class_sizes: [usize; 2]) -> Result<()> {
        if self.corner_a == self.corner_b {
            return Err(Error::invalid("task corners must differ"));
        }
        if self.runs == 0 {
            return Err(Error::invalid("at least one run is required"));
        }
        if self.docs_per_class_per_iter == 0 {
            return Err(Error::invalid("docs_per_class_per_iter must be at least 1"));
        }
        let needed = self.iterations * self.docs_per_class_per_iter;
        let smaller = class_sizes[0].min(class_sizes[1]);
        if needed > smaller {
            return Err(Error::invalid(format!(
                "{} iterations of {} documents per class need {needed} documents, \
                 but the smaller class has {smaller}",
                self.iterations, self.docs_per_class_per_iter
            )));
        }
        Ok(())
    }
}

/// Accuracy after each iteration of one simulated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyTrace {
    pub task: String,
    pub feature_mode: FeatureMode,
    pub run_seed: u64,
    pub per_iteration: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub task: String,
    pub feature_mode: FeatureMode,
    pub runs: usize,
    pub final_acc_mean: f64,
    pub final_acc_std: f64,
    pub overall_acc_mean: f64,
    pub overall_acc_std: f64,
}

/// Features and class indices (0 = class A, 1 = class B) for one task.
#[derive(Debug, Clone)]
pub struct PreparedTask {
    pub features: FeatureMatrix,
    pub labels: Vec<usize>,
    pub empty_documents: Vec<String>,
}

/// Slices the task's two classes out of `corpus` and featurizes them.
pub fn prepare_task(spec: &TaskSpec, corpus: &Corpus, embeddings: Option<&EmbeddingTable>) -> Result<PreparedTask> {
    let subset = corpus.task_subset(&spec.class_a, &spec.class_b)?;
    let subset = if subset.is_tokenized() {
        subset
    } else {
        subset.tokenized()
    };
    let (features, empty_documents) = match spec.feature_mode {
        FeatureMode::KeywordHashed => (tfidf_hashed(&subset, spec.dims)?, Vec::new()),
        FeatureMode::EmbeddingAverage => {
            let table = embeddings.ok_or_else(|| Error::invalid("embedding features need an embedding table"))?;
            let out = embed_average(&subset, table, spec.dims)?;
            (out.features, out.empty_documents)
        }
    };
    let labels = subset
        .documents()
        .iter()
        .map(|d| usize::from(d.label.as_deref() != Some(spec.class_a.as_str())))
        .collect();
    Ok(PreparedTask {
        features,
        labels,
        empty_documents,
    })
}

/// Per-run bookkeeping of which documents are still available to move.
#[derive(Debug, Clone)]
pub struct RunState {
    doc_ids: Vec<String>,
    unmoved: [Vec<usize>; 2],
    corners: [Point; 2],
    per_class: usize,
}

impl RunState {
    pub fn new(doc_ids: Vec<String>, labels: &[usize], corners: [Point; 2], per_class: usize) -> Self {
        let mut unmoved = [Vec::new(), Vec::new()];
        for (i, &l) in labels.iter().enumerate() {
            unmoved[l].push(i);
        }
        Self {
            doc_ids,
            unmoved,
            corners,
            per_class,
        }
    }

    pub fn remaining(&self, class: usize) -> usize {
        self.unmoved[class].len()
    }
}

/// Draws `per_class` unmoved documents from each class uniformly without
/// replacement and targets them at their class corner. Drawn documents are
/// marked as moved.
pub fn sample_interaction(state: &mut RunState, rng: &mut ChaCha8Rng) -> Result<InteractionBatch> {
    let mut moves = Vec::with_capacity(2 * state.per_class);
    for class in 0..2 {
        let pool = &mut state.unmoved[class];
        if pool.len() < state.per_class {
            return Err(Error::invalid(format!(
                "class {} has {} unmoved documents, {} requested",
                if class == 0 { "A" } else { "B" },
                pool.len(),
                state.per_class
            )));
        }
        let mut picked = index::sample(rng, pool.len(), state.per_class).into_vec();
        let chosen: Vec<usize> = picked.iter().map(|&p| pool[p]).collect();
        picked.sort_unstable_by(|a, b| b.cmp(a));
        for p in picked {
            pool.remove(p);
        }
        moves.extend(chosen.into_iter().map(|i| Move {
            doc_id: state.doc_ids[i].clone(),
            target: state.corners[class],
        }));
    }
    Ok(InteractionBatch { moves })
}

/// Result of every run of one task.
#[derive(Debug, Clone)]
pub struct TaskRun {
    pub traces: Vec<AccuracyTrace>,
    /// Final layout of each run, when [`TaskSpec::refresh_layout`] is set.
    pub final_layouts: Vec<Layout2D>,
}

fn run_one(
    spec: &TaskSpec,
    task: &PreparedTask,
    initial_layout: Option<&Layout2D>,
    seed: u64,
) -> Result<(AccuracyTrace, Option<Layout2D>)> {
    let features = &task.features;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = RunState::new(
        features.doc_ids().to_vec(),
        &task.labels,
        [spec.corner_a, spec.corner_b],
        spec.docs_per_class_per_iter,
    );
    let mut weights = WeightVector::uniform(features.dims());
    let mut pinned: Vec<(String, Point)> = Vec::new();
    let mut layout = initial_layout.cloned();
    let mut per_iteration = Vec::with_capacity(spec.iterations);
    for _ in 0..spec.iterations {
        let batch = sample_interaction(&mut state, &mut rng)?;
        if spec.pinning == PinningMode::NewestOnly {
            pinned.clear();
        }
        pinned.extend(batch.moves.into_iter().map(|m| (m.doc_id, m.target)));
        weights = invert_weights(features, &pinned, &weights, spec.lambda)?.weights;
        per_iteration.push(cv_accuracy(
            features,
            &task.labels,
            &weights,
            spec.knn_k,
            spec.cv_folds,
            seed,
        )?);
        if let Some(prev) = layout.as_ref() {
            layout = Some(forward_project(features, &weights, Some(prev), seed)?.layout);
        }
    }
    let trace = AccuracyTrace {
        task: spec.name.clone(),
        feature_mode: spec.feature_mode,
        run_seed: seed,
        per_iteration,
    };
    Ok((trace, layout))
}

/// Runs every seed of a prepared task. Runs are independent and may execute
/// on separate threads; results come back in seed order.
pub fn run_prepared(spec: &TaskSpec, task: &PreparedTask) -> Result<TaskRun> {
    let counts = [
        task.labels.iter().filter(|&&l| l == 0).count(),
        task.labels.iter().filter(|&&l| l == 1).count(),
    ];
    spec.validate(counts)?;
    let initial = if spec.refresh_layout {
        Some(
            forward_project(
                &task.features,
                &WeightVector::uniform(task.features.dims()),
                None,
                spec.base_seed,
            )?
            .layout,
        )
    } else {
        None
    };
    let seeds: Vec<u64> = (0..spec.runs as u64).map(|r| spec.base_seed + r).collect();
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(seeds.len());
    let results: Vec<Result<(AccuracyTrace, Option<Layout2D>)>> = if workers <= 1 {
        seeds
            .iter()
            .map(|&s| run_one(spec, task, initial.as_ref(), s))
            .collect()
    } else {
        let mut slots: Vec<Option<Result<_>>> = (0..seeds.len()).map(|_| None).collect();
        std::thread::scope(|scope| {
            let chunk = seeds.len().div_ceil(workers);
            for (seed_chunk, slot_chunk) in seeds.chunks(chunk).zip(slots.chunks_mut(chunk)) {
                let initial = initial.as_ref();
                scope.spawn(move || {
                    for (s, slot) in seed_chunk.iter().zip(slot_chunk) {
                        *slot = Some(run_one(spec, task, initial, *s));
                    }
                });
            }
        });
        slots
            .into_iter()
            .map(|s| s.expect("worker filled every slot"))
            .collect()
    };
    let mut traces = Vec::with_capacity(results.len());
    let mut final_layouts = Vec::new();
    for r in results {
        let (trace, layout) = r?;
        traces.push(trace);
        final_layouts.extend(layout);
    }
    Ok(TaskRun { traces, final_layouts })
}

/// Prepares the task and runs every seed.
pub fn run_task(spec: &TaskSpec, corpus: &Corpus, embeddings: Option<&EmbeddingTable>) -> Result<Vec<AccuracyTrace>> {
    let task = prepare_task(spec, corpus, embeddings)?;
    Ok(run_prepared(spec, &task)?.traces)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; zero for fewer than two values.
fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Final-iteration and all-iteration accuracy statistics over runs.
///
/// `overall_acc_std` is the spread of the per-run mean accuracies.
pub fn summarize(traces: &[AccuracyTrace]) -> Result<SummaryRow> {
    let first = traces.first().ok_or_else(|| Error::invalid("no traces to summarize"))?;
    if traces
        .iter()
        .any(|t| t.task != first.task || t.feature_mode != first.feature_mode)
    {
        return Err(Error::invalid("traces mix tasks or feature modes"));
    }
    let len = first.per_iteration.len();
    if len == 0 {
        return Err(Error::invalid("no iterations"));
    }
    if traces.iter().any(|t| t.per_iteration.len() != len) {
        return Err(Error::invalid("traces have different lengths"));
    }
    let finals: Vec<f64> = traces.iter().map(|t| t.per_iteration[len - 1]).collect();
    let run_means: Vec<f64> = traces.iter().map(|t| mean(&t.per_iteration)).collect();
    let all: Vec<f64> = traces.iter().flat_map(|t| t.per_iteration.iter().copied()).collect();
    Ok(SummaryRow {
        task: first.task.clone(),
        feature_mode: first.feature_mode,
        runs: traces.len(),
        final_acc_mean: mean(&finals),
        final_acc_std: sample_std(&finals),
        overall_acc_mean: mean(&all),
        overall_acc_std: sample_std(&run_means),
    })
}

/// Mean accuracy at each iteration across runs.
pub fn mean_curve(traces: &[AccuracyTrace]) -> Vec<f64> {
    let len = traces.iter().map(|t| t.per_iteration.len()).min().unwrap_or(0);
    (0..len)
        .map(|i| traces.iter().map(|t| t.per_iteration[i]).sum::<f64>() / traces.len() as f64)
        .collect()
}

fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties. NaN when either
/// side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman needs paired samples");
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let (mx, my) = (mean(&rx), mean(&ry));
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

pub const TRACES_FILE: &str = "traces.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Serialize, Deserialize)]
struct TraceRecord {
    task: String,
    mode: FeatureMode,
    run_seed: u64,
    iteration: usize,
    accuracy: f64,
}

#[derive(Serialize)]
struct SummaryRecord<'a> {
    task: &'a str,
    mode: FeatureMode,
    final_mean: f64,
    final_std: f64,
    overall_mean: f64,
    overall_std: f64,
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    // Headers are written explicitly so that empty outputs still get one.
    Ok(csv::WriterBuilder::new().has_headers(false).from_writer(file))
}

/// Writes `traces.csv` and `summary.csv` into `dir`, creating it if needed.
/// Rows are ordered by task, mode, seed and iteration. Iterations are
/// numbered from 1.
pub fn write_results(summaries: &[SummaryRow], traces: &[AccuracyTrace], dir: &Path) -> Result<[PathBuf; 2]> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut sorted: Vec<&AccuracyTrace> = traces.iter().collect();
    sorted.sort_by(|a, b| (&a.task, a.feature_mode, a.run_seed).cmp(&(&b.task, b.feature_mode, b.run_seed)));
    let traces_path = dir.join(TRACES_FILE);
    let mut out = csv_writer(&traces_path)?;
    out.write_record(["task", "mode", "run_seed", "iteration", "accuracy"])?;
    for t in sorted {
        for (i, &accuracy) in t.per_iteration.iter().enumerate() {
            out.serialize(TraceRecord {
                task: t.task.clone(),
                mode: t.feature_mode,
                run_seed: t.run_seed,
                iteration: i + 1,
                accuracy,
            })?;
        }
    }
    out.flush().map_err(|e| Error::io(&traces_path, e))?;

    let mut rows: Vec<&SummaryRow> = summaries.iter().collect();
    rows.sort_by(|a, b| (&a.task, a.feature_mode).cmp(&(&b.task, b.feature_mode)));
    let summary_path = dir.join(SUMMARY_FILE);
    let mut out = csv_writer(&summary_path)?;
    out.write_record(["task", "mode", "final_mean", "final_std", "overall_mean", "overall_std"])?;
    for r in rows {
        out.serialize(SummaryRecord {
            task: &r.task,
            mode: r.feature_mode,
            final_mean: r.final_acc_mean,
            final_std: r.final_acc_std,
            overall_mean: r.overall_acc_mean,
            overall_std: r.overall_acc_std,
        })?;
    }
    out.flush().map_err(|e| Error::io(&summary_path, e))?;
    Ok([traces_path, summary_path])
}

/// Reads a `traces.csv` written by [`write_results`] back into traces.
pub fn read_traces(path: &Path) -> Result<Vec<AccuracyTrace>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let mut traces: Vec<AccuracyTrace> = Vec::new();
    for record in reader.deserialize() {
        let r: TraceRecord = record?;
        match traces.last_mut() {
            Some(t) if t.task == r.task && t.feature_mode == r.mode && t.run_seed == r.run_seed => {
                t.per_iteration.push(r.accuracy);
            }
            _ => traces.push(AccuracyTrace {
                task: r.task,
                feature_mode: r.mode,
                run_seed: r.run_seed,
                per_iteration: vec![r.accuracy],
            }),
        }
    }
    Ok(traces)
}

/// Writes final layouts as `task,mode,run_seed,doc_id,x,y`.
pub fn write_layouts<W: Write>(writer: W, spec: &TaskSpec, layouts: &[Layout2D]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["task", "mode", "run_seed", "doc_id", "x", "y"])?;
    for (r, layout) in layouts.iter().enumerate() {
        let seed = (spec.base_seed + r as u64).to_string();
        for (id, p) in layout.doc_ids.iter().zip(&layout.positions) {
            out.write_record([
                spec.name.as_str(),
                spec.feature_mode.short_name(),
                &seed,
                id,
                &p[0].to_string(),
                &p[1].to_string(),
            ])?;
        }
    }
    out.flush().map_err(|e| Error::io("layouts", e))?;
    Ok(())
}
