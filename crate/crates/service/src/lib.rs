//! HTTP front end for interactive sessions: clients drag documents, the
//! server learns new dimension weights and answers with a fresh layout.
//!
//! | Method | Path | Body | Reply |
//! |---|---|---|---|
//! | POST | `/sessions` | `{corpus, feature_mode}` | `{session_id}` |
//! | GET | `/sessions/{id}` | | state snapshot |
//! | POST | `/sessions/{id}/interactions` | `{moves: [{doc_id, x, y}]}` | `{revision, layout, top_weights}` |
//! | POST | `/sessions/{id}/release` | `{doc_ids}` | `{revision, pinned}` |
//! | POST | `/sessions/{id}/reset` | | `{revision, layout, top_weights}` |
//! | GET | `/corpus/{doc_id}` | | `{id, text, label}` |
//!
//! Errors come back as `{code, message}` with a matching status.

pub mod error;
pub mod session;

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use si_core::corpus::Corpus;
use si_core::featurize::{EmbeddingTable, FeatureMode};
use si_core::wmds::{Move, DEFAULT_LAMBDA};

pub use error::ApiError;
use session::{Base, Session, Snapshot, TopWeight};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub dims: usize,
    pub lambda: f64,
    pub seed: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            dims: si_core::featurize::DEFAULT_DIMS,
            lambda: DEFAULT_LAMBDA,
            seed: 42,
        }
    }
}

/// Corpora and embeddings loaded at startup plus every live session.
pub struct AppState {
    corpora: BTreeMap<String, Arc<Corpus>>,
    embeddings: Option<Arc<EmbeddingTable>>,
    config: ServiceConfig,
    bases: Mutex<HashMap<(String, FeatureMode), Arc<Base>>>,
    sessions: RwLock<HashMap<String, Arc<Session>>>,
    next_id: AtomicU64,
}

impl AppState {
    /// Corpora are tokenized here if they were not already.
    pub fn new(
        corpora: BTreeMap<String, Corpus>,
        embeddings: Option<EmbeddingTable>,
        config: ServiceConfig,
    ) -> Arc<Self> {
        let corpora = corpora
            .into_iter()
            .map(|(name, c)| {
                let c = if c.is_tokenized() { c } else { c.tokenized() };
                (name, Arc::new(c))
            })
            .collect();
        Arc::new(Self {
            corpora,
            embeddings: embeddings.map(Arc::new),
            config,
            bases: Mutex::new(HashMap::new()),
            sessions: RwLock::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        })
    }

    fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        self.sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_session(id))
    }

    async fn base(self: &Arc<Self>, corpus: &str, mode: FeatureMode) -> Result<Arc<Base>, ApiError> {
        let key = (corpus.to_owned(), mode);
        if let Some(b) = self.bases.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(b.clone());
        }
        let source = self.corpora.get(corpus).cloned().ok_or_else(|| {
            let names: Vec<&String> = self.corpora.keys().collect();
            ApiError::new(
                StatusCode::NOT_FOUND,
                "unknown_corpus",
                format!("no corpus {corpus:?}; loaded: {names:?}"),
            )
        })?;
        if mode == FeatureMode::EmbeddingAverage && self.embeddings.is_none() {
            return Err(ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "embedding_unavailable",
                "embedding table unavailable",
            ));
        }
        // Two first requests may both build; the results are identical.
        let state = Arc::clone(self);
        let base = tokio::task::spawn_blocking(move || {
            Base::build(
                source,
                mode,
                state.config.dims,
                state.embeddings.as_deref(),
                state.config.seed,
            )
        })
        .await
        .map_err(|e| ApiError::internal(format!("featurization failed: {e}")))??;
        let base = Arc::new(base);
        let mut bases = self.bases.lock().unwrap_or_else(|e| e.into_inner());
        Ok(bases.entry(key).or_insert(base).clone())
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_state))
        .route("/sessions/{id}/interactions", post(apply_interaction))
        .route("/sessions/{id}/release", post(release))
        .route("/sessions/{id}/reset", post(reset))
        .route("/corpus/{doc_id}", get(get_document))
        .with_state(state)
}

#[derive(Debug, Deserialize)]
pub struct CreateSession {
    pub corpus: String,
    pub feature_mode: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub session_id: String,
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<Created>), ApiError> {
    let Json(req) = body?;
    let mode: FeatureMode = req
        .feature_mode
        .parse()
        .map_err(|e: si_core::Error| ApiError::new(StatusCode::BAD_REQUEST, "unknown_feature_mode", e.to_string()))?;
    let base = state.base(&req.corpus, mode).await?;
    let id = format!("s{}", state.next_id.fetch_add(1, Ordering::Relaxed));
    let session = Session::new(
        id.clone(),
        req.corpus,
        mode,
        base,
        state.config.lambda,
        state.config.seed,
    );
    state
        .sessions
        .write()
        .unwrap_or_else(|e| e.into_inner())
        .insert(id.clone(), Arc::new(session));
    log::info!("created session {id}");
    Ok((StatusCode::CREATED, Json(Created { session_id: id })))
}

#[derive(Debug, Serialize)]
pub struct PinnedDoc {
    pub doc_id: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Serialize)]
pub struct WeightsDigest {
    pub dims: usize,
    pub top: Vec<TopWeight>,
    /// Changes whenever any weight changes.
    pub checksum: String,
}

#[derive(Debug, Serialize)]
pub struct SessionState {
    pub session_id: String,
    pub corpus: String,
    pub feature_mode: FeatureMode,
    pub revision: u64,
    pub doc_ids: Vec<String>,
    pub labels: Vec<Option<String>>,
    pub layout: Vec<[f64; 2]>,
    pub pinned: Vec<PinnedDoc>,
    pub weights: WeightsDigest,
}

fn pinned_docs(snap: &Snapshot) -> Vec<PinnedDoc> {
    snap.pinned
        .iter()
        .map(|(id, p)| PinnedDoc {
            doc_id: id.clone(),
            x: p[0],
            y: p[1],
        })
        .collect()
}

async fn get_state(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<SessionState>, ApiError> {
    let session = state.session(&id)?;
    let snap = session.snapshot();
    let base = &session.base;
    Ok(Json(SessionState {
        session_id: session.id.clone(),
        corpus: session.corpus_name.clone(),
        feature_mode: session.mode,
        revision: snap.revision,
        doc_ids: snap.layout.doc_ids.clone(),
        labels: base.corpus.documents().iter().map(|d| d.label.clone()).collect(),
        layout: snap.layout.positions.clone(),
        pinned: pinned_docs(&snap),
        weights: WeightsDigest {
            dims: snap.weights.len(),
            top: base.top_weights(&snap.weights),
            checksum: snap.weights_checksum(),
        },
    }))
}

#[derive(Debug, Deserialize)]
pub struct WireMove {
    pub doc_id: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Deserialize)]
pub struct Interaction {
    pub moves: Vec<WireMove>,
}

#[derive(Debug, Serialize)]
pub struct LayoutUpdate {
    pub revision: u64,
    pub layout: Vec<[f64; 2]>,
    pub top_weights: Vec<TopWeight>,
}

fn layout_update(session: &Session, snap: &Snapshot) -> LayoutUpdate {
    LayoutUpdate {
        revision: snap.revision,
        layout: snap.layout.positions.clone(),
        top_weights: session.base.top_weights(&snap.weights),
    }
}

async fn apply_interaction(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<Interaction>, JsonRejection>,
) -> Result<Json<LayoutUpdate>, ApiError> {
    let session = state.session(&id)?;
    let Json(req) = body?;
    let moves = req
        .moves
        .into_iter()
        .map(|m| Move {
            doc_id: m.doc_id,
            target: [m.x, m.y],
        })
        .collect();
    let snap = session.apply(moves).await?;
    Ok(Json(layout_update(&session, &snap)))
}

#[derive(Debug, Deserialize)]
pub struct Release {
    pub doc_ids: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct Released {
    pub revision: u64,
    pub pinned: Vec<PinnedDoc>,
}

async fn release(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<Release>, JsonRejection>,
) -> Result<Json<Released>, ApiError> {
    let session = state.session(&id)?;
    let Json(req) = body?;
    let snap = session.release(&req.doc_ids).await?;
    Ok(Json(Released {
        revision: snap.revision,
        pinned: pinned_docs(&snap),
    }))
}

async fn reset(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<LayoutUpdate>, ApiError> {
    let session = state.session(&id)?;
    let snap = session.reset().await;
    Ok(Json(layout_update(&session, &snap)))
}

#[derive(Debug, Serialize)]
pub struct DocumentView {
    pub id: String,
    pub text: String,
    pub label: Option<String>,
}

async fn get_document(
    State(state): State<Arc<AppState>>,
    Path(doc_id): Path<String>,
) -> Result<Json<DocumentView>, ApiError> {
    state
        .corpora
        .values()
        .find_map(|c| c.get(&doc_id))
        .map(|d| {
            Json(DocumentView {
                id: d.id.clone(),
                text: d.text.clone(),
                label: d.label.clone(),
            })
        })
        .ok_or_else(|| ApiError::unknown_document(&doc_id))
}
