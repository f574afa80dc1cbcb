//! Interactive distance-metric learning for text corpora.
//!
//! Documents are represented either by hashed TF-IDF vectors or by averaged
//! word embeddings ([`featurize`]). A per-dimension [`metric::WeightVector`]
//! defines a weighted Euclidean metric; [`wmds::forward_project`] lays the
//! corpus out in the unit square under that metric, and
//! [`wmds::invert_weights`] learns new weights from documents an analyst has
//! dragged to chosen positions. [`simharness`] replays that loop with a
//! simulated analyst and scores each step with cross-validated kNN accuracy.
//!
//! ```
//! use si_core::corpus::{Corpus, Document};
//! use si_core::featurize::tfidf_hashed;
//! use si_core::metric::WeightVector;
//! use si_core::wmds::forward_project;
//!
//! let docs = vec![
//!     Document::new("a", "engine oil and brakes", Some("autos")),
//!     Document::new("b", "brakes and tires for the sedan", Some("autos")),
//!     Document::new("c", "helmet and leathers for the ride", Some("moto")),
//! ];
//! let corpus = Corpus::new(docs).unwrap().tokenized();
//! let features = tfidf_hashed(&corpus, 16).unwrap();
//! let projection = forward_project(&features, &WeightVector::uniform(16), None, 7).unwrap();
//! assert_eq!(projection.layout.len(), 3);
//! ```

pub mod corpus;
pub mod crescent;
pub mod error;
pub mod featurize;
pub mod metric;
pub mod simharness;
pub mod wmds;

pub use error::{Error, Result};
