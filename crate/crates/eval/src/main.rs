//! Runs simulated-analyst sessions on a labelled corpus and writes accuracy
//! traces and a summary as CSV.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, ValueEnum};
use si_core::corpus::Corpus;
use si_core::featurize::{vocabulary, EmbeddingTable, FeatureMode};
use si_core::simharness::{
    prepare_task, run_prepared, summarize, write_layouts, write_results, PinningMode, PreparedTask, TaskSpec,
    TASK_PRESETS,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Features {
    Keyword,
    Embedding,
    /// Run both modes on the same interactions.
    Both,
}

#[derive(Parser, Debug)]
#[command(name = "si-eval", version, about = "Simulated-analyst accuracy benchmark")]
struct Args {
    /// Corpus as JSONL with "id", "text" and "label" keys.
    #[arg(long)]
    corpus: PathBuf,
    /// A preset (rec, religion, sys, vis) or two labels separated by a comma.
    #[arg(long)]
    task: String,
    #[arg(long, value_enum, default_value = "embedding")]
    features: Features,
    /// GloVe-format word vectors; required for embedding features.
    #[arg(long)]
    glove: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    iters: usize,
    /// Documents moved per class in each iteration.
    #[arg(long, default_value_t = 5)]
    per_class: usize,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = si_core::featurize::DEFAULT_DIMS)]
    dims: usize,
    /// Constrain each update with only the newest batch instead of every pin so far.
    #[arg(long)]
    newest_only: bool,
    /// Also re-project after each update and write the final layouts.
    #[arg(long)]
    layouts: bool,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

enum Failure {
    /// Bad arguments or inputs; exit code 2.
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

fn task_labels(task: &str) -> anyhow::Result<(String, String, String)> {
    if let Some((a, b)) = task.split_once(',') {
        let (a, b) = (a.trim(), b.trim());
        if a.is_empty() || b.is_empty() {
            bail!("--task needs two labels separated by a comma, got {task:?}");
        }
        return Ok((format!("{a}_vs_{b}"), a.to_owned(), b.to_owned()));
    }
    match TASK_PRESETS.iter().find(|p| p.0 == task) {
        Some(&(name, a, b)) => Ok((name.to_owned(), a.to_owned(), b.to_owned())),
        None => {
            let names: Vec<_> = TASK_PRESETS.iter().map(|p| p.0).collect();
            bail!("unknown task {task:?}; use one of {names:?} or two labels as \"a,b\"")
        }
    }
}

struct Plan {
    specs: Vec<TaskSpec>,
    tasks: Vec<PreparedTask>,
}

fn plan(args: &Args) -> anyhow::Result<Plan> {
    let (name, a, b) = task_labels(&args.task)?;
    if !(args.lambda >= 0.0 && args.lambda.is_finite()) {
        bail!("--lambda must be a non-negative number");
    }
    let modes = match args.features {
        Features::Keyword => vec![FeatureMode::KeywordHashed],
        Features::Embedding => vec![FeatureMode::EmbeddingAverage],
        Features::Both => vec![FeatureMode::EmbeddingAverage, FeatureMode::KeywordHashed],
    };
    let corpus = Corpus::load_jsonl(&args.corpus)?;
    let subset = corpus.task_subset(&a, &b)?.tokenized();

    let table = if modes.contains(&FeatureMode::EmbeddingAverage) {
        let path = args.glove.as_ref().context("embedding features need --glove")?;
        let started = Instant::now();
        let vocab = vocabulary(&subset);
        let table = EmbeddingTable::load_filtered(path, args.dims, Some(&vocab))?;
        eprintln!(
            "loaded {} of {} corpus words from {} in {:.1?}",
            table.len(),
            vocab.len(),
            path.display(),
            started.elapsed()
        );
        Some(table)
    } else {
        None
    };

    let mut specs = Vec::new();
    let mut tasks = Vec::new();
    for mode in modes {
        let mut spec = TaskSpec::new(&name, &a, &b, mode);
        spec.iterations = args.iters;
        spec.docs_per_class_per_iter = args.per_class;
        spec.runs = args.runs;
        spec.base_seed = args.seed;
        spec.lambda = args.lambda;
        spec.cv_folds = args.folds;
        spec.knn_k = args.k;
        spec.dims = args.dims;
        spec.refresh_layout = args.layouts;
        if args.newest_only {
            spec.pinning = PinningMode::NewestOnly;
        }
        let task = prepare_task(&spec, &subset, table.as_ref())?;
        let sizes = [
            task.labels.iter().filter(|&&l| l == 0).count(),
            task.labels.len() - task.labels.iter().filter(|&&l| l == 0).count(),
        ];
        spec.validate(sizes)?;
        if sizes.iter().any(|&s| s < spec.cv_folds) {
            bail!(
                "each class needs at least {} documents for {}-fold validation",
                spec.cv_folds,
                spec.cv_folds
            );
        }
        if !task.empty_documents.is_empty() {
            eprintln!(
                "warning: {} documents have no words in the embedding table and get a zero vector",
                task.empty_documents.len()
            );
        }
        specs.push(spec);
        tasks.push(task);
    }
    Ok(Plan { specs, tasks })
}

fn execute(args: &Args, plan: &Plan) -> anyhow::Result<()> {
    let mut all_traces = Vec::new();
    let mut summaries = Vec::new();
    for (spec, task) in plan.specs.iter().zip(&plan.tasks) {
        let started = Instant::now();
        let out = run_prepared(spec, task)?;
        let summary = summarize(&out.traces)?;
        println!(
            "{} {}: final {:.3} ± {:.3}, overall {:.3} ± {:.3} ({} runs, {:.1?})",
            spec.name,
            spec.feature_mode,
            summary.final_acc_mean,
            summary.final_acc_std,
            summary.overall_acc_mean,
            summary.overall_acc_std,
            summary.runs,
            started.elapsed()
        );
        if args.layouts {
            std::fs::create_dir_all(&args.out)?;
            let path = args.out.join(format!("layouts_{}.csv", spec.feature_mode.short_name()));
            let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write_layouts(BufWriter::new(file), spec, &out.final_layouts)?;
        }
        summaries.push(summary);
        all_traces.extend(out.traces);
    }
    let [traces, summary] = write_results(&summaries, &all_traces, &args.out)?;
    eprintln!("wrote {} and {}", traces.display(), summary.display());
    Ok(())
}

fn run(args: &Args) -> Result<(), Failure> {
    let plan = plan(args).map_err(Failure::Config)?;
    execute(args, &plan).map_err(Failure::Runtime)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
