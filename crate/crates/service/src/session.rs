//! Live model state of one analyst session.
//!
//! Each session publishes immutable [`Snapshot`]s. Readers clone the current
//! `Arc` and never wait on a computation; a per-session writer lock serializes
//! updates, which are computed off to the side and swapped in whole.

use std::sync::{Arc, RwLock};

use axum::http::StatusCode;
use serde::Serialize;
use si_core::corpus::Corpus;
use si_core::featurize::{
    bucket_top_tokens, embed_average, fnv1a_64, tfidf_hashed, EmbeddingTable, FeatureMatrix, FeatureMode,
};
use si_core::metric::WeightVector;
use si_core::wmds::{forward_project, invert_weights, InteractionBatch, Layout2D, Move, Point};

use crate::error::ApiError;

pub const TOP_WEIGHTS: usize = 10;
const TOKENS_PER_BUCKET: usize = 3;

/// Features and the uniform-weight projection shared by every session over
/// the same corpus and feature mode.
#[derive(Debug)]
pub struct Base {
    pub corpus: Arc<Corpus>,
    pub features: FeatureMatrix,
    pub initial_layout: Layout2D,
    /// For keyword features: frequent corpus tokens behind each hash bucket.
    pub bucket_tokens: Option<Vec<Vec<String>>>,
}

impl Base {
    /// Featurizes the corpus and projects it with uniform weights. Slow for
    /// large corpora; call from a blocking context.
    pub fn build(
        corpus: Arc<Corpus>,
        mode: FeatureMode,
        dims: usize,
        embeddings: Option<&EmbeddingTable>,
        seed: u64,
    ) -> Result<Self, ApiError> {
        let (features, bucket_tokens) = match mode {
            FeatureMode::KeywordHashed => (
                tfidf_hashed(&corpus, dims)?,
                Some(bucket_top_tokens(&corpus, dims, TOKENS_PER_BUCKET)),
            ),
            FeatureMode::EmbeddingAverage => {
                let table = embeddings.ok_or_else(|| {
                    ApiError::new(
                        StatusCode::UNPROCESSABLE_ENTITY,
                        "embedding_unavailable",
                        "embedding table unavailable",
                    )
                })?;
                let out = embed_average(&corpus, table, dims)?;
                if !out.empty_documents.is_empty() {
                    log::warn!("{} documents have no embedded words", out.empty_documents.len());
                }
                (out.features, None)
            }
        };
        let initial_layout = forward_project(&features, &WeightVector::uniform(dims), None, seed)?.layout;
        Ok(Self {
            corpus,
            features,
            initial_layout,
            bucket_tokens,
        })
    }

    pub fn top_weights(&self, w: &WeightVector) -> Vec<TopWeight> {
        w.top(TOP_WEIGHTS)
            .into_iter()
            .map(|(dim, weight)| TopWeight {
                dim,
                weight,
                tokens: self.bucket_tokens.as_ref().map(|b| b[dim].clone()),
                approximate: self.bucket_tokens.is_some(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopWeight {
    pub dim: usize,
    pub weight: f64,
    /// Tokens hashing into this keyword bucket, most frequent first.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<String>>,
    /// Set when `tokens` is a heuristic reading of a hash bucket.
    pub approximate: bool,
}

/// Everything a reader may see, all from one revision.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub revision: u64,
    pub weights: WeightVector,
    pub layout: Layout2D,
    /// In first-pinned order; re-pinning a document moves its target only.
    pub pinned: Vec<(String, Point)>,
}

impl Snapshot {
    /// FNV-1a of the weights' little-endian bytes.
    pub fn weights_checksum(&self) -> String {
        let bytes: Vec<u8> = self.weights.as_slice().iter().flat_map(|w| w.to_le_bytes()).collect();
        format!("{:016x}", fnv1a_64(&bytes))
    }
}

#[derive(Debug)]
pub struct Session {
    pub id: String,
    pub corpus_name: String,
    pub mode: FeatureMode,
    pub base: Arc<Base>,
    pub lambda: f64,
    pub seed: u64,
    current: RwLock<Arc<Snapshot>>,
    writer: tokio::sync::Mutex<()>,
}

impl Session {
    pub fn new(id: String, corpus_name: String, mode: FeatureMode, base: Arc<Base>, lambda: f64, seed: u64) -> Self {
        let initial = Snapshot {
            revision: 0,
            weights: WeightVector::uniform(base.features.dims()),
            layout: base.initial_layout.clone(),
            pinned: Vec::new(),
        };
        Self {
            id,
            corpus_name,
            mode,
            base,
            lambda,
            seed,
            current: RwLock::new(Arc::new(initial)),
            writer: tokio::sync::Mutex::new(()),
        }
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.current.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    fn publish(&self, next: Snapshot) -> Arc<Snapshot> {
        let next = Arc::new(next);
        *self.current.write().unwrap_or_else(|e| e.into_inner()) = next.clone();
        next
    }

    fn check_known(&self, id: &str) -> Result<(), ApiError> {
        match self.base.corpus.position(id) {
            Some(_) => Ok(()),
            None => Err(ApiError::unknown_document(id)),
        }
    }

    /// Merges the batch into the pinned set, learns new weights and
    /// re-projects from the current layout. On any error the session is left
    /// as it was.
    pub async fn apply(self: &Arc<Self>, moves: Vec<Move>) -> Result<Arc<Snapshot>, ApiError> {
        let batch = InteractionBatch { moves };
        if batch.is_empty() {
            return Err(ApiError::bad_request("an interaction must move at least one document"));
        }
        batch.validate()?;
        for m in &batch.moves {
            self.check_known(&m.doc_id)?;
        }

        let _writer = self.writer.lock().await;
        let current = self.snapshot();
        let mut pinned = current.pinned.clone();
        for m in batch.moves {
            match pinned.iter_mut().find(|(id, _)| *id == m.doc_id) {
                Some(slot) => slot.1 = m.target,
                None => pinned.push((m.doc_id, m.target)),
            }
        }
        if pinned.len() < 2 {
            return Err(ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "too_few_pinned",
                "at least two documents must be pinned to learn weights",
            ));
        }

        let session = Arc::clone(self);
        let next = tokio::task::spawn_blocking(move || -> Result<Snapshot, ApiError> {
            let features = &session.base.features;
            let weights = invert_weights(features, &pinned, &current.weights, session.lambda)?.weights;
            let layout = forward_project(features, &weights, Some(&current.layout), session.seed)?.layout;
            Ok(Snapshot {
                revision: current.revision + 1,
                weights,
                layout,
                pinned,
            })
        })
        .await
        .map_err(|e| ApiError::internal(format!("update task failed: {e}")))??;
        Ok(self.publish(next))
    }

    /// Unpins documents. Weights and layout stay as they are; the revision
    /// advances only if the pinned set changed.
    pub async fn release(&self, doc_ids: &[String]) -> Result<Arc<Snapshot>, ApiError> {
        for id in doc_ids {
            self.check_known(id)?;
        }
        let _writer = self.writer.lock().await;
        let current = self.snapshot();
        let pinned: Vec<(String, Point)> = current
            .pinned
            .iter()
            .filter(|(id, _)| !doc_ids.contains(id))
            .cloned()
            .collect();
        if pinned.len() == current.pinned.len() {
            return Ok(current);
        }
        Ok(self.publish(Snapshot {
            revision: current.revision + 1,
            pinned,
            ..(*current).clone()
        }))
    }

    /// Back to uniform weights, the initial projection and no pins. The
    /// revision still advances so clients notice the change.
    pub async fn reset(&self) -> Arc<Snapshot> {
        let _writer = self.writer.lock().await;
        let current = self.snapshot();
        self.publish(Snapshot {
            revision: current.revision + 1,
            weights: WeightVector::uniform(self.base.features.dims()),
            layout: self.base.initial_layout.clone(),
            pinned: Vec::new(),
        })
    }
}
