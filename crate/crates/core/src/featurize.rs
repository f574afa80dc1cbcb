//! Document feature matrices: signed hashed TF-IDF and averaged word embeddings.
//!
//! Both modes produce an `n × dims` matrix aligned to corpus order and
//! min-max normalized per column, so either can be fed to the same weighted
//! metric.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};

pub const DEFAULT_DIMS: usize = 300;

const FNV_OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureMode {
    #[serde(rename = "keyword", alias = "keyword_hashed")]
    KeywordHashed,
    #[serde(rename = "embedding", alias = "embedding_average")]
    EmbeddingAverage,
}

impl FeatureMode {
    /// Short name used in CSV output and on the command line.
    pub fn short_name(self) -> &'static str {
        match self {
            FeatureMode::KeywordHashed => "keyword",
            FeatureMode::EmbeddingAverage => "embedding",
        }
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "keyword" | "keyword_hashed" => Ok(FeatureMode::KeywordHashed),
            "embedding" | "embedding_average" => Ok(FeatureMode::EmbeddingAverage),
            other => Err(Error::invalid(format!(
                "unknown feature mode {other:?} (expected keyword or embedding)"
            ))),
        }
    }
}

/// Row-major document features with one row per document.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    mode: FeatureMode,
    dims: usize,
    data: Vec<f64>,
    doc_ids: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(mode: FeatureMode, dims: usize, data: Vec<f64>, doc_ids: Vec<String>) -> Result<Self> {
        if dims == 0 {
            return Err(Error::invalid("feature dimension must be at least 1"));
        }
        if data.len() != dims * doc_ids.len() {
            return Err(Error::DimensionMismatch {
                expected: dims * doc_ids.len(),
                actual: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature matrix"));
        }
        Ok(Self {
            mode,
            dims,
            data,
            doc_ids,
        })
    }

    pub fn mode(&self) -> FeatureMode {
        self.mode
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn n_rows(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dims..(i + 1) * self.dims]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dims)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn position(&self, doc_id: &str) -> Option<usize> {
        self.doc_ids.iter().position(|id| id == doc_id)
    }

    /// Writes `doc_id,f0,...,f{dims-1}` followed by one line per row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header = Vec::with_capacity(self.dims + 1);
        header.push("doc_id".to_owned());
        header.extend((0..self.dims).map(|k| format!("f{k}")));
        out.write_record(&header)?;
        for (id, row) in self.doc_ids.iter().zip(self.rows()) {
            let mut record = Vec::with_capacity(self.dims + 1);
            record.push(id.clone());
            record.extend(row.iter().map(|v| v.to_string()));
            out.write_record(&record)?;
        }
        out.flush().map_err(|e| Error::io("feature csv", e))?;
        Ok(())
    }
}

/// 64-bit FNV-1a over raw bytes.
pub fn fnv1a_64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET_BASIS, |hash, &b| {
        (hash ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

/// Bucket and sign for a token under signed feature hashing.
///
/// The bucket is the FNV-1a-64 hash of the UTF-8 bytes modulo `dims`; the sign
/// is `-1.0` when bit 63 of the hash is set.
pub fn hash_token(token: &str, dims: usize) -> (usize, f64) {
    debug_assert!(dims >= 1);
    let h = fnv1a_64(token.as_bytes());
    let bucket = (h % dims as u64) as usize;
    let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
    (bucket, sign)
}

/// Per-column min-max scaling of a row-major matrix; zero-spread columns become 0.
pub fn minmax_normalize(data: &[f64], dims: usize) -> Result<Vec<f64>> {
    if dims == 0 || data.is_empty() || !data.len().is_multiple_of(dims) {
        return Err(Error::invalid(format!(
            "cannot normalize {} values as rows of {dims}",
            data.len()
        )));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix to normalize"));
    }
    let mut lo = vec![f64::INFINITY; dims];
    let mut hi = vec![f64::NEG_INFINITY; dims];
    for row in data.chunks_exact(dims) {
        for (k, &v) in row.iter().enumerate() {
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }
    let mut out = Vec::with_capacity(data.len());
    for row in data.chunks_exact(dims) {
        for (k, &v) in row.iter().enumerate() {
            let spread = hi[k] - lo[k];
            out.push(if spread > 0.0 { (v - lo[k]) / spread } else { 0.0 });
        }
    }
    Ok(out)
}

fn check_tokenized(corpus: &Corpus) -> Result<()> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if !corpus.is_tokenized() {
        return Err(Error::Untokenized);
    }
    Ok(())
}

/// Hashed TF-IDF features.
///
/// Each distinct token with count `c` in a document of an `N`-document corpus
/// contributes `(1 + ln c) * (ln((1 + N) / (1 + df)) + 1)`, signed and placed
/// by [`hash_token`].
pub fn tfidf_hashed(corpus: &Corpus, dims: usize) -> Result<FeatureMatrix> {
    check_tokenized(corpus)?;
    if dims == 0 {
        return Err(Error::invalid("feature dimension must be at least 1"));
    }
    let n = corpus.len();

    let counts: Vec<HashMap<&str, u32>> = corpus
        .documents()
        .iter()
        .map(|doc| {
            let mut tf: HashMap<&str, u32> = HashMap::new();
            for t in &doc.tokens {
                *tf.entry(t.as_str()).or_default() += 1;
            }
            tf
        })
        .collect();

    let mut df: HashMap<&str, u32> = HashMap::new();
    for tf in &counts {
        for &token in tf.keys() {
            *df.entry(token).or_default() += 1;
        }
    }

    let mut raw = vec![0.0; n * dims];
    for (row, tf) in raw.chunks_exact_mut(dims).zip(&counts) {
        // Fixed accumulation order so bucket sums are bit-reproducible.
        let mut tokens: Vec<_> = tf.iter().collect();
        tokens.sort_unstable_by(|a, b| a.0.cmp(b.0));
        for (token, &c) in tokens {
            let idf = ((1.0 + n as f64) / (1.0 + f64::from(df[token]))).ln() + 1.0;
            let weight = (1.0 + f64::from(c).ln()) * idf;
            let (bucket, sign) = hash_token(token, dims);
            row[bucket] += sign * weight;
        }
    }
    let data = minmax_normalize(&raw, dims)?;
    FeatureMatrix::new(FeatureMode::KeywordHashed, dims, data, corpus.doc_ids())
}

/// The most frequent corpus tokens hashing into each bucket, best first.
///
/// Hash buckets mix unrelated words, so this is only an approximate reading of
/// what a keyword-mode dimension stands for.
pub fn bucket_top_tokens(corpus: &Corpus, dims: usize, per_bucket: usize) -> Vec<Vec<String>> {
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for doc in corpus.documents() {
        for t in &doc.tokens {
            *freq.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut buckets: Vec<Vec<(&str, usize)>> = vec![Vec::new(); dims];
    for (token, count) in freq {
        buckets[hash_token(token, dims).0].push((token, count));
    }
    buckets
        .into_iter()
        .map(|mut b| {
            b.sort_unstable_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(y.0)));
            b.into_iter().take(per_bucket).map(|(t, _)| t.to_owned()).collect()
        })
        .collect()
}

/// Word vectors keyed by token, e.g. a GloVe release.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingTable {
    dims: usize,
    entries: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dims: usize) -> Self {
        Self {
            dims,
            entries: HashMap::new(),
        }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.entries.get(token).map(Vec::as_slice)
    }

    /// Adds a vector unless the token is already present. Returns whether it was added.
    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f64>) -> Result<bool> {
        if vector.len() != self.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims,
                actual: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embedding vector"));
        }
        let token = token.into();
        if self.entries.contains_key(&token) {
            return Ok(false);
        }
        self.entries.insert(token, vector);
        Ok(true)
    }

    /// Loads a GloVe text file: a word followed by `dims` numbers per line.
    pub fn load(path: impl AsRef<Path>, dims: usize) -> Result<Self> {
        Self::load_filtered(path, dims, None)
    }

    /// Like [`EmbeddingTable::load`], but keeps only words in `vocabulary`.
    /// Every line is still validated.
    pub fn load_filtered(path: impl AsRef<Path>, dims: usize, vocabulary: Option<&HashSet<String>>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file), dims, vocabulary, &path.display().to_string())
    }

    pub fn read<R: BufRead>(
        reader: R,
        dims: usize,
        vocabulary: Option<&HashSet<String>>,
        source_name: &str,
    ) -> Result<Self> {
        if dims == 0 {
            return Err(Error::invalid("embedding dimension must be at least 1"));
        }
        let mut table = Self::new(dims);
        for (lineno, line) in reader.lines().enumerate() {
            let line_number = lineno + 1;
            let line = line.map_err(|e| Error::io(source_name, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                source_name: source_name.to_owned(),
                line: line_number,
                message,
            };
            let mut fields = line.split_ascii_whitespace();
            let word = fields.next().unwrap_or_default();
            let numbers: Vec<&str> = fields.collect();
            if numbers.len() != dims {
                return Err(parse_err(format!(
                    "expected {dims} numbers after {word:?}, found {}",
                    numbers.len()
                )));
            }
            if vocabulary.is_some_and(|v| !v.contains(word)) {
                continue;
            }
            let vector = numbers
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| parse_err(format!("invalid number {s:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if !table.insert(word, vector)? {
                log::warn!("{source_name}, line {line_number}: duplicate word {word:?} ignored");
            }
        }
        Ok(table)
    }
}

/// Averaged word-embedding features plus the ids of documents with no
/// in-vocabulary tokens (those rows are zero before normalization).
#[derive(Debug, Clone)]
pub struct AveragedEmbeddings {
    pub features: FeatureMatrix,
    pub empty_documents: Vec<String>,
}

/// Occurrence-weighted mean of the table vectors of each document's tokens.
pub fn embed_average(corpus: &Corpus, table: &EmbeddingTable, dims: usize) -> Result<AveragedEmbeddings> {
    check_tokenized(corpus)?;
    if table.dims() != dims {
        return Err(Error::DimensionMismatch {
            expected: dims,
            actual: table.dims(),
        });
    }
    let mut raw = vec![0.0; corpus.len() * dims];
    let mut empty_documents = Vec::new();
    for (row, doc) in raw.chunks_exact_mut(dims).zip(corpus.documents()) {
        let mut found = 0usize;
        for vector in doc.tokens.iter().filter_map(|t| table.get(t)) {
            for (acc, v) in row.iter_mut().zip(vector) {
                *acc += v;
            }
            found += 1;
        }
        if found == 0 {
            log::warn!("document {:?} has no tokens in the embedding table", doc.id);
            empty_documents.push(doc.id.clone());
        } else {
            let inv = 1.0 / found as f64;
            row.iter_mut().for_each(|v| *v *= inv);
        }
    }
    let data = minmax_normalize(&raw, dims)?;
    Ok(AveragedEmbeddings {
        features: FeatureMatrix::new(FeatureMode::EmbeddingAverage, dims, data, corpus.doc_ids())?,
        empty_documents,
    })
}

/// All distinct tokens of a tokenized corpus.
pub fn vocabulary(corpus: &Corpus) -> HashSet<String> {
    corpus
        .documents()
        .iter()
        .flat_map(|d| d.tokens.iter().cloned())
        .collect()
}
