//! A self-contained document map for the browser. Drag a few documents,
//! apply, and the map re-projects under the weights learned from the drags.
//!
//! [`Model`] holds the state and is plain Rust; [`Explorer`] is the thin
//! `wasm-bindgen` wrapper the page talks to.

use si_core::corpus::Corpus;
use si_core::featurize::{bucket_top_tokens, tfidf_hashed, FeatureMatrix, DEFAULT_DIMS};
use si_core::metric::WeightVector;
use si_core::wmds::{forward_project, invert_weights, InteractionBatch, Layout2D, Move, Point, DEFAULT_LAMBDA};
use si_core::{Error, Result};
use wasm_bindgen::prelude::*;

/// Short documents on three topics, bundled so the page needs no server.
pub const TOY_CORPUS: &str = include_str!("../data/toy.jsonl");

const SEED: u64 = 7;

pub struct Model {
    corpus: Corpus,
    features: FeatureMatrix,
    buckets: Vec<Vec<String>>,
    initial: Layout2D,
    weights: WeightVector,
    layout: Layout2D,
    pinned: Vec<(String, Point)>,
    lambda: f64,
    revision: u32,
}

impl Model {
    pub fn from_jsonl(content: &str, dims: usize) -> Result<Self> {
        let corpus = Corpus::from_jsonl_str(content, "corpus")?.tokenized();
        let features = tfidf_hashed(&corpus, dims)?;
        let weights = WeightVector::uniform(dims);
        let initial = forward_project(&features, &weights, None, SEED)?.layout;
        Ok(Self {
            buckets: bucket_top_tokens(&corpus, dims, 3),
            corpus,
            features,
            layout: initial.clone(),
            initial,
            weights,
            pinned: Vec::new(),
            lambda: DEFAULT_LAMBDA,
            revision: 0,
        })
    }

    pub fn toy() -> Self {
        Self::from_jsonl(TOY_CORPUS, DEFAULT_DIMS).expect("bundled corpus is valid")
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn layout(&self) -> &Layout2D {
        &self.layout
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    pub fn pinned(&self) -> &[(String, Point)] {
        &self.pinned
    }

    pub fn revision(&self) -> u32 {
        self.revision
    }

    pub fn set_lambda(&mut self, lambda: f64) -> Result<()> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be non-negative, got {lambda}"
            )));
        }
        self.lambda = lambda;
        Ok(())
    }

    /// Pins documents (by row) at new positions, learns weights from every
    /// pin so far and re-projects. Leaves the model untouched on error.
    pub fn apply(&mut self, moves: &[(usize, Point)]) -> Result<()> {
        let ids = self.features.doc_ids();
        let mut batch = InteractionBatch {
            moves: Vec::with_capacity(moves.len()),
        };
        for &(row, target) in moves {
            let doc_id = ids
                .get(row)
                .ok_or_else(|| Error::UnknownDocument(format!("row {row}")))?
                .clone();
            batch.moves.push(Move { doc_id, target });
        }
        if batch.is_empty() {
            return Err(Error::InvalidArgument("move at least one document".into()));
        }
        batch.validate()?;
        let mut pinned = self.pinned.clone();
        for m in batch.moves {
            match pinned.iter_mut().find(|(id, _)| *id == m.doc_id) {
                Some(slot) => slot.1 = m.target,
                None => pinned.push((m.doc_id, m.target)),
            }
        }
        if pinned.len() < 2 {
            return Err(Error::InvalidArgument("pin at least two documents".into()));
        }
        let weights = invert_weights(&self.features, &pinned, &self.weights, self.lambda)?.weights;
        let layout = forward_project(&self.features, &weights, Some(&self.layout), SEED)?.layout;
        self.weights = weights;
        self.layout = layout;
        self.pinned = pinned;
        self.revision += 1;
        Ok(())
    }

    pub fn reset(&mut self) {
        self.weights = WeightVector::uniform(self.features.dims());
        self.layout = self.initial.clone();
        self.pinned.clear();
        self.revision += 1;
    }

    /// The heaviest dimensions with the tokens most likely behind each.
    /// Buckets no token hashes into are skipped: they are zero for every
    /// document, so their weight says nothing.
    pub fn top_weights(&self, k: usize) -> Vec<(usize, f64, &[String])> {
        self.weights
            .top(self.weights.len())
            .into_iter()
            .filter(|&(d, _)| !self.buckets[d].is_empty())
            .take(k)
            .map(|(d, w)| (d, w, self.buckets[d].as_slice()))
            .collect()
    }
}

fn js_err(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Explorer {
    model: Model,
}

#[wasm_bindgen]
impl Explorer {
    /// Projects the bundled corpus with equal weights.
    #[wasm_bindgen(constructor)]
    pub fn new() -> Explorer {
        Explorer { model: Model::toy() }
    }

    pub fn len(&self) -> usize {
        self.model.corpus().len()
    }

    pub fn is_empty(&self) -> bool {
        self.model.corpus().is_empty()
    }

    #[wasm_bindgen(js_name = docId)]
    pub fn doc_id(&self, row: usize) -> Option<String> {
        self.model.corpus().documents().get(row).map(|d| d.id.clone())
    }

    pub fn text(&self, row: usize) -> Option<String> {
        self.model.corpus().documents().get(row).map(|d| d.text.clone())
    }

    /// Label of every document, in row order.
    pub fn labels(&self) -> Vec<String> {
        self.model
            .corpus()
            .documents()
            .iter()
            .map(|d| d.label.clone().unwrap_or_default())
            .collect()
    }

    /// `[x0, y0, x1, y1, ...]` in the unit square.
    pub fn positions(&self) -> Vec<f64> {
        self.model.layout().positions.iter().flatten().copied().collect()
    }

    #[wasm_bindgen(js_name = pinnedRows)]
    pub fn pinned_rows(&self) -> Vec<u32> {
        let corpus = self.model.corpus();
        self.model
            .pinned()
            .iter()
            .filter_map(|(id, _)| corpus.position(id).map(|i| i as u32))
            .collect()
    }

    pub fn revision(&self) -> u32 {
        self.model.revision()
    }

    #[wasm_bindgen(js_name = setLambda)]
    pub fn set_lambda(&mut self, lambda: f64) -> Result<(), JsError> {
        self.model.set_lambda(lambda).map_err(js_err)
    }

    /// Applies staged drags: `rows[i]` goes to `(xy[2i], xy[2i+1])`.
    /// Returns the new revision.
    #[wasm_bindgen(js_name = applyMoves)]
    pub fn apply_moves(&mut self, rows: Vec<u32>, xy: Vec<f64>) -> Result<u32, JsError> {
        if xy.len() != 2 * rows.len() {
            return Err(JsError::new("need one x,y pair per row"));
        }
        let moves: Vec<(usize, Point)> = rows
            .iter()
            .zip(xy.chunks_exact(2))
            .map(|(&r, p)| (r as usize, [p[0], p[1]]))
            .collect();
        self.model.apply(&moves).map_err(js_err)?;
        Ok(self.model.revision())
    }

    pub fn reset(&mut self) -> u32 {
        self.model.reset();
        self.model.revision()
    }

    /// JSON list of `{dim, weight, tokens}` for the `k` heaviest dimensions.
    #[wasm_bindgen(js_name = topWeights)]
    pub fn top_weights(&self, k: usize) -> String {
        let rows: Vec<serde_json::Value> = self
            .model
            .top_weights(k)
            .into_iter()
            .map(|(dim, weight, tokens)| serde_json::json!({"dim": dim, "weight": weight, "tokens": tokens}))
            .collect();
        serde_json::Value::Array(rows).to_string()
    }
}

impl Default for Explorer {
    fn default() -> Self {
        Self::new()
    }
}
