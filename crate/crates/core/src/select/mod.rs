//! Candidate selection: codes are represented by their definitions and the
//! most similar defined code is chosen. Selection is closed-world, so the
//! undefined Other label is never predicted.

mod cosine;
mod lesk;
mod porter;
mod projection;
mod stopwords;

pub use cosine::{combined_similarity, cosine_scores, cosine_select, CodeEmbeddingSet};
pub use lesk::{lesk_preprocess, lesk_select, LeskProfile};
pub use porter::porter_stem;
pub use projection::{ProjectionConfig, ProjectionInit, ProjectionModel, ScoreMode};
pub use stopwords::{is_stopword, ENGLISH_STOPWORDS, STOPWORDS_VERSION};

pub(crate) use cosine::argmax;
