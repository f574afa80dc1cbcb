//! Labeled document collections, tokenization and binary task subsets.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const STOPWORDS: &str = include_str!("../data/stopwords.txt");

/// Minimum token length in characters.
pub const MIN_TOKEN_CHARS: usize = 2;

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| STOPWORDS.lines().map(str::trim).filter(|w| !w.is_empty()).collect())
}

/// Returns true if `token` is in the bundled English stopword list.
pub fn is_stopword(token: &str) -> bool {
    stopwords().contains(token)
}

/// Splits text into lowercase runs of Unicode letters and digits, dropping
/// tokens shorter than two characters and stopwords. Order and repeats are kept.
pub fn tokenize(text: &str) -> Vec<String> {
    let lowered = text.to_lowercase();
    lowered
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= MIN_TOKEN_CHARS)
        .filter(|t| !is_stopword(t))
        .map(str::to_owned)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(skip)]
    pub tokens: Vec<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Option<&str>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            label: label.map(str::to_owned),
            tokens: Vec::new(),
        }
    }
}

#[derive(Deserialize)]
struct JsonlRecord {
    id: String,
    text: String,
    #[serde(default)]
    label: Option<String>,
}

/// An ordered, immutable collection of documents with unique ids.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    documents: Vec<Document>,
    label_set: BTreeSet<String>,
    index: HashMap<String, usize>,
    tokenized: bool,
}

impl Corpus {
    /// Builds a corpus, rejecting empty or duplicate ids.
    pub fn new(documents: Vec<Document>) -> Result<Self> {
        let mut index = HashMap::with_capacity(documents.len());
        for (i, doc) in documents.iter().enumerate() {
            if doc.id.is_empty() {
                return Err(Error::invalid(format!("document {} has an empty id", i + 1)));
            }
            if index.insert(doc.id.clone(), i).is_some() {
                return Err(Error::DuplicateId {
                    id: doc.id.clone(),
                    line: i + 1,
                });
            }
        }
        let label_set = documents.iter().filter_map(|d| d.label.clone()).collect();
        Ok(Self {
            documents,
            label_set,
            index,
            tokenized: false,
        })
    }

    /// Reads one `{"id", "text", "label"?}` object per line. Blank lines are skipped.
    pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_jsonl_str(&content, &path.display().to_string())
    }

    pub fn from_jsonl_str(content: &str, source_name: &str) -> Result<Self> {
        let mut documents = Vec::new();
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (lineno, line) in content.lines().enumerate() {
            let line_number = lineno + 1;
            if line.trim().is_empty() {
                continue;
            }
            let record: JsonlRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
                source_name: source_name.to_owned(),
                line: line_number,
                message: e.to_string(),
            })?;
            if record.id.is_empty() {
                return Err(Error::Parse {
                    source_name: source_name.to_owned(),
                    line: line_number,
                    message: "empty document id".into(),
                });
            }
            if seen.insert(record.id.clone(), line_number).is_some() {
                return Err(Error::DuplicateId {
                    id: record.id,
                    line: line_number,
                });
            }
            documents.push(Document {
                id: record.id,
                text: record.text,
                label: record.label,
                tokens: Vec::new(),
            });
        }
        Self::new(documents)
    }

    /// Fills every document's token list.
    pub fn tokenized(mut self) -> Self {
        for doc in &mut self.documents {
            doc.tokens = tokenize(&doc.text);
        }
        self.tokenized = true;
        self
    }

    pub fn is_tokenized(&self) -> bool {
        self.tokenized
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn label_set(&self) -> &BTreeSet<String> {
        &self.label_set
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.index.get(id).map(|&i| &self.documents[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn doc_ids(&self) -> Vec<String> {
        self.documents.iter().map(|d| d.id.clone()).collect()
    }

    /// Documents labeled `class_a` or `class_b`, in original order.
    pub fn task_subset(&self, class_a: &str, class_b: &str) -> Result<Corpus> {
        if class_a == class_b {
            return Err(Error::invalid(format!(
                "task classes must differ, both are {class_a:?}"
            )));
        }
        for label in [class_a, class_b] {
            if !self.label_set.contains(label) {
                return Err(Error::UnknownLabel {
                    label: label.to_owned(),
                    available: self.label_set.iter().cloned().collect(),
                });
            }
        }
        let documents = self
            .documents
            .iter()
            .filter(|d| matches!(d.label.as_deref(), Some(l) if l == class_a || l == class_b))
            .cloned()
            .collect();
        let mut subset = Corpus::new(documents)?;
        subset.tokenized = self.tokenized;
        Ok(subset)
    }
}
