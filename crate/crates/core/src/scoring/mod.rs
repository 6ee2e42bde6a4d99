//! Semantic-fidelity scoring of synthetic samples.
//!
//! `q = clamp(cos(embed(source), embed(variant)), 0, 1)`. Clamping happens
//! here, at the scoring boundary, never inside a backend.

mod native;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use native::{char_ngrams, fnv1a, NativeEmbedBackend, EMBED_DIM, NGRAM};

use crate::backend::{BackendError, EmbedBackend};
use crate::corpus::Dataset;
use crate::generation::SyntheticSample;

/// Texts sent to the backend per call in [`score_pool`].
pub const BATCH_SIZE: usize = 256;

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("zero-norm embedding for text {text:?}; quality is undefined")]
    ZeroNorm { text: String },
    #[error("embedding dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("backend returned {got} vectors for {expected} texts")]
    Count { expected: usize, got: usize },
    #[error("sample {index} references unknown source id {source_id:?}")]
    UnresolvedSource { index: usize, source_id: String },
    #[error("backend failure at sample {index}: {source}")]
    Backend {
        index: usize,
        #[source]
        source: BackendError,
    },
}

/// Cosine similarity computed as `dot / sqrt(|a|² · |b|²)`, which is exactly
/// 1 for identical vectors and exactly symmetric.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, ScoringError> {
    if a.len() != b.len() {
        return Err(ScoringError::DimensionMismatch(a.len(), b.len()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    Ok(dot / (na * nb).sqrt())
}

fn quality_from_vectors(
    source: &[f64],
    source_text: &str,
    variant: &[f64],
    variant_text: &str,
) -> Result<f64, ScoringError> {
    for (v, text) in [(source, source_text), (variant, variant_text)] {
        if v.iter().all(|&x| x == 0.0) {
            return Err(ScoringError::ZeroNorm {
                text: text.to_string(),
            });
        }
    }
    Ok(cosine(source, variant)?.clamp(0.0, 1.0))
}

/// Quality of `variant` relative to `source`, in [0, 1].
pub fn quality_score<B: EmbedBackend + ?Sized>(
    source: &str,
    variant: &str,
    backend: &B,
) -> Result<f64, ScoringError> {
    let vectors = backend
        .embed(&[source, variant])
        .map_err(|e| ScoringError::Backend {
            index: 0,
            source: e,
        })?;
    if vectors.len() != 2 {
        return Err(ScoringError::Count {
            expected: 2,
            got: vectors.len(),
        });
    }
    quality_from_vectors(&vectors[0], source, &vectors[1], variant)
}

/// Synthetic samples with `quality` set on each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPool {
    pub samples: Vec<SyntheticSample>,
    /// Identifies the generation settings and backends that produced the pool.
    pub fingerprint: String,
}

impl ScoredPool {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn qualities(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.quality.unwrap_or(0.0))
    }

    pub fn mean_quality(&self) -> Option<f64> {
        (!self.is_empty()).then(|| self.qualities().sum::<f64>() / self.len() as f64)
    }
}

fn embed_batch<B: EmbedBackend + ?Sized>(
    backend: &B,
    texts: &[&str],
    first_index: usize,
) -> Result<Vec<Vec<f64>>, ScoringError> {
    let vectors = backend.embed(texts).map_err(|e| ScoringError::Backend {
        index: first_index,
        source: e,
    })?;
    if vectors.len() != texts.len() {
        return Err(ScoringError::Count {
            expected: texts.len(),
            got: vectors.len(),
        });
    }
    Ok(vectors)
}

/// Scores every sample against its source sentence, preserving order.
/// Each distinct source is embedded once; variants go in batches of
/// [`BATCH_SIZE`].
pub fn score_pool<B: EmbedBackend + ?Sized>(
    samples: Vec<SyntheticSample>,
    dataset: &Dataset,
    backend: &B,
    fingerprint: impl Into<String>,
) -> Result<ScoredPool, ScoringError> {
    let by_id: HashMap<&str, &str> = dataset
        .items
        .iter()
        .map(|c| (c.id.as_str(), c.text.as_str()))
        .collect();

    let mut source_order: Vec<&str> = Vec::new();
    let mut source_slot: HashMap<&str, usize> = HashMap::new();
    for (index, s) in samples.iter().enumerate() {
        if !by_id.contains_key(s.source_id.as_str()) {
            return Err(ScoringError::UnresolvedSource {
                index,
                source_id: s.source_id.clone(),
            });
        }
        source_slot.entry(s.source_id.as_str()).or_insert_with(|| {
            source_order.push(s.source_id.as_str());
            source_order.len() - 1
        });
    }

    let mut source_vectors = Vec::with_capacity(source_order.len());
    for (b, chunk) in source_order.chunks(BATCH_SIZE).enumerate() {
        let texts: Vec<&str> = chunk.iter().map(|id| by_id[id]).collect();
        source_vectors.extend(embed_batch(backend, &texts, b * BATCH_SIZE)?);
    }

    let mut qualities = Vec::with_capacity(samples.len());
    for (b, chunk) in samples.chunks(BATCH_SIZE).enumerate() {
        let texts: Vec<&str> = chunk.iter().map(|s| s.text.as_str()).collect();
        let vectors = embed_batch(backend, &texts, b * BATCH_SIZE)?;
        for (s, v) in chunk.iter().zip(&vectors) {
            let slot = source_slot[s.source_id.as_str()];
            qualities.push(quality_from_vectors(
                &source_vectors[slot],
                by_id[s.source_id.as_str()],
                v,
                &s.text,
            )?);
        }
    }

    let samples = samples
        .into_iter()
        .zip(qualities)
        .map(|(mut s, q)| {
            s.quality = Some(q);
            s
        })
        .collect();
    Ok(ScoredPool {
        samples,
        fingerprint: fingerprint.into(),
    })
}
