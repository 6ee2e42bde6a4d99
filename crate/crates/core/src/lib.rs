//! Quality-gated synthetic oversampling and augmentation for imbalanced
//! multi-label text corpora.
//!
//! The pipeline has three stages:
//!
//! 1. [`generation`]: every source sentence yields `n` masked-fill variants
//!    whose character similarity to the source stays below a bound.
//! 2. [`scoring`]: each variant gets a quality score `q ∈ [0, 1]`, the
//!    clamped cosine between source and variant embeddings.
//! 3. [`selection`]: variants with `q ≥ QSYNT` are selected, either all of
//!    them (augmentation) or only as many as needed to bring each category
//!    to a positive-count target (oversampling), and merged with the
//!    original corpus.
//!
//! Model access goes through the [`FillBackend`] and [`EmbedBackend`]
//! traits. Deterministic corpus-statistics implementations are built in;
//! [`bridge::ExternalBackend`] talks to an external model service.

pub mod backend;
pub mod bridge;
pub mod corpus;
pub mod generation;
pub mod pipeline;
pub mod scoring;
pub mod selection;

pub use backend::{BackendError, Candidate, EmbedBackend, FillBackend};
pub use corpus::{
    class_stats, load_dataset, write_dataset, CategorySchema, ClassStats, Dataset, Format,
    LabelVector, LabeledComment, Language, Split,
};
pub use generation::{
    diversity_ratio, generate_corpus, generate_variants, GenerationConfig, NativeFillBackend,
    SyntheticSample,
};
pub use scoring::{quality_score, score_pool, NativeEmbedBackend, ScoredPool};
pub use selection::{
    compute_targets, merge, select_augmentation, select_oversampling, SelectionPolicy,
    SelectionResult, Strategy,
};
