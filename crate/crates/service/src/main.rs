use std::collections::{BTreeMap, HashSet};
use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::Parser;
use si_core::corpus::Corpus;
use si_core::featurize::{vocabulary, EmbeddingTable};
use si_service::{router, AppState, ServiceConfig};
use tower_http::cors::CorsLayer;

#[derive(Parser, Debug)]
#[command(name = "si-serve", version, about = "Interactive metric-learning session server")]
struct Args {
    /// Corpus to serve as NAME=PATH (JSONL). Repeatable.
    #[arg(long = "corpus", value_name = "NAME=PATH", required = true)]
    corpora: Vec<String>,
    /// Keep only two labels of a corpus, as NAME=LABEL_A,LABEL_B. Repeatable.
    #[arg(long = "subset", value_name = "NAME=A,B")]
    subsets: Vec<String>,
    /// GloVe-format word vectors, needed for embedding sessions.
    #[arg(long)]
    glove: Option<PathBuf>,
    #[arg(long, default_value_t = si_core::featurize::DEFAULT_DIMS)]
    dims: usize,
    #[arg(long, default_value_t = si_core::wmds::DEFAULT_LAMBDA)]
    lambda: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Accept cross-origin requests from any page (for a UI served elsewhere).
    #[arg(long)]
    cors: bool,
}

fn split_pair<'a>(arg: &'a str, what: &str) -> anyhow::Result<(&'a str, &'a str)> {
    match arg.split_once('=') {
        Some((k, v)) if !k.is_empty() && !v.is_empty() => Ok((k, v)),
        _ => bail!("{what} must look like NAME=VALUE, got {arg:?}"),
    }
}

fn load(args: &Args) -> anyhow::Result<(BTreeMap<String, Corpus>, Option<EmbeddingTable>)> {
    let mut corpora = BTreeMap::new();
    for arg in &args.corpora {
        let (name, path) = split_pair(arg, "--corpus")?;
        let corpus = Corpus::load_jsonl(path)?;
        if corpora.insert(name.to_owned(), corpus).is_some() {
            bail!("corpus {name:?} given twice");
        }
    }
    for arg in &args.subsets {
        let (name, labels) = split_pair(arg, "--subset")?;
        let Some((a, b)) = labels.split_once(',') else {
            bail!("--subset needs two labels, got {labels:?}");
        };
        let corpus = corpora
            .get(name)
            .with_context(|| format!("--subset names unknown corpus {name:?}"))?;
        let subset = corpus.task_subset(a, b)?;
        corpora.insert(name.to_owned(), subset);
    }
    let corpora: BTreeMap<String, Corpus> = corpora.into_iter().map(|(n, c)| (n, c.tokenized())).collect();
    for (name, c) in &corpora {
        log::info!("corpus {name}: {} documents, labels {:?}", c.len(), c.label_set());
    }
    let table = match &args.glove {
        None => None,
        Some(path) => {
            let mut vocab = HashSet::new();
            for c in corpora.values() {
                vocab.extend(vocabulary(c));
            }
            let table = EmbeddingTable::load_filtered(path, args.dims, Some(&vocab))?;
            log::info!("embedding table: {} of {} corpus words", table.len(), vocab.len());
            Some(table)
        }
    };
    Ok((corpora, table))
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let (corpora, table) = load(&args)?;
    let config = ServiceConfig {
        dims: args.dims,
        lambda: args.lambda,
        seed: args.seed,
    };
    let mut app = router(AppState::new(corpora, table, config));
    if args.cors {
        app = app.layer(CorsLayer::permissive());
    }
    let listener = tokio::net::TcpListener::bind(args.addr)
        .await
        .with_context(|| format!("binding {}", args.addr))?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
