//! Masked-fill variant generation with a diversity gate.
//!
//! For every source sentence, `n` variants are built by masking a fraction
//! of its tokens, asking a [`FillBackend`] for the top-k candidates per
//! slot, and drawing one candidate per slot uniformly. Variants whose
//! character similarity to the source exceeds the configured bound, or that
//! duplicate an earlier variant of the same source, are redrawn with fresh
//! masks. When the retry budget runs out the most diverse rejected attempt
//! is kept and flagged `degraded`, so the output always holds exactly
//! `n · |sources|` samples.

mod diversity;
mod native;
mod tokenize;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use diversity::{diversity_ratio, matched_chars};
pub use native::NativeFillBackend;
pub use tokenize::{detokenize, tokenize};

use crate::backend::{BackendError, FillBackend};
use crate::corpus::{Dataset, LabelVector, LabeledComment};

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("invalid generation config: {0}")]
    Config(String),
    #[error("cannot generate from an empty dataset")]
    EmptyDataset,
    #[error("source {source_id:?} has no tokens")]
    EmptySource { source_id: String },
    #[error("backend failure for source {source_id:?}: {source}")]
    Backend {
        source_id: String,
        #[source]
        source: BackendError,
    },
    #[error("generation failed for {} source(s): {}", .0.len(), failed_ids(.0))]
    Aggregate(Vec<GenerationError>),
}

fn failed_ids(errors: &[GenerationError]) -> String {
    errors
        .iter()
        .map(|e| match e {
            GenerationError::Backend { source_id, .. }
            | GenerationError::EmptySource { source_id } => source_id.as_str(),
            _ => "?",
        })
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    /// Fraction of tokens masked per attempt, in (0, 1].
    pub mask_ratio: f64,
    pub variants_per_source: usize,
    pub top_k: usize,
    /// Attempts more similar than this to their source are rejected.
    pub max_similarity: f64,
    pub retry_budget: usize,
    pub seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            mask_ratio: 0.25,
            variants_per_source: 10,
            top_k: 20,
            max_similarity: 0.95,
            retry_budget: 20,
            seed: 0,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), GenerationError> {
        let err = |m: &str| Err(GenerationError::Config(m.into()));
        if !(self.mask_ratio > 0.0 && self.mask_ratio <= 1.0) {
            return err("mask_ratio must be in (0, 1]");
        }
        if self.variants_per_source == 0 {
            return err("variants_per_source must be positive");
        }
        if self.top_k == 0 {
            return err("top_k must be positive");
        }
        if !(0.0..1.0).contains(&self.max_similarity) {
            return err("max_similarity must be in [0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedSequence {
    pub tokens: Vec<String>,
    /// Sorted, distinct, in range.
    pub masked_positions: Vec<usize>,
}

/// Number of slots masked in a sequence of `len` tokens.
pub fn mask_count(len: usize, mask_ratio: f64) -> usize {
    ((mask_ratio * len as f64).round() as usize).clamp(1, len.max(1))
}

/// Picks `max(1, round(μ·L))` positions uniformly without replacement.
pub fn mask_sequence<R: Rng + ?Sized>(
    tokens: &[String],
    mask_ratio: f64,
    rng: &mut R,
) -> MaskedSequence {
    assert!(!tokens.is_empty(), "cannot mask an empty sequence");
    let count = mask_count(tokens.len(), mask_ratio);
    let mut masked_positions = index::sample(rng, tokens.len(), count).into_vec();
    masked_positions.sort_unstable();
    MaskedSequence {
        tokens: tokens.to_vec(),
        masked_positions,
    }
}

/// One generated variant of a source sentence. The JSONL form is the
/// scored-pool record `{source_id, variant_index, text, similarity, q,
/// labels, degraded}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSample {
    pub source_id: String,
    pub variant_index: usize,
    pub text: String,
    #[serde(rename = "similarity")]
    pub similarity_to_source: f64,
    #[serde(rename = "q")]
    pub quality: Option<f64>,
    pub labels: LabelVector,
    pub degraded: bool,
}

/// Deterministic per-source stream keyed by `(seed, source id)`.
pub fn source_rng(seed: u64, source_id: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(source_id.as_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

struct Attempt {
    text: String,
    similarity: f64,
    duplicate: bool,
}

impl Attempt {
    /// Non-duplicates first, then lower similarity.
    fn more_diverse_than(&self, other: &Attempt) -> bool {
        (self.duplicate, self.similarity) < (other.duplicate, other.similarity)
    }
}

pub fn generate_variants<B, R>(
    source: &LabeledComment,
    cfg: &GenerationConfig,
    backend: &B,
    rng: &mut R,
) -> Result<Vec<SyntheticSample>, GenerationError>
where
    B: FillBackend + ?Sized,
    R: Rng + ?Sized,
{
    let tokens = tokenize(&source.text);
    if tokens.is_empty() {
        return Err(GenerationError::EmptySource {
            source_id: source.id.clone(),
        });
    }
    let reference = detokenize(&tokens);
    let mut samples: Vec<SyntheticSample> = Vec::with_capacity(cfg.variants_per_source);

    for variant_index in 0..cfg.variants_per_source {
        let mut best_rejected: Option<Attempt> = None;
        let mut accepted = None;
        for _ in 0..=cfg.retry_budget {
            let masked = mask_sequence(&tokens, cfg.mask_ratio, rng);
            let candidates = backend
                .fill(&masked.tokens, &masked.masked_positions, cfg.top_k)
                .map_err(|source_err| GenerationError::Backend {
                    source_id: source.id.clone(),
                    source: source_err,
                })?;
            if candidates.len() != masked.masked_positions.len() {
                return Err(GenerationError::Backend {
                    source_id: source.id.clone(),
                    source: BackendError::Protocol(format!(
                        "expected candidates for {} positions, got {}",
                        masked.masked_positions.len(),
                        candidates.len()
                    )),
                });
            }
            let mut filled = masked.tokens;
            for (&pos, options) in masked.masked_positions.iter().zip(&candidates) {
                if options.is_empty() {
                    return Err(GenerationError::Backend {
                        source_id: source.id.clone(),
                        source: BackendError::Protocol(
                            "no candidates for a masked position".into(),
                        ),
                    });
                }
                let pick = rng.gen_range(0..options.len());
                filled[pos] = options[pick].token.clone();
            }
            let text = detokenize(&filled);
            let similarity = diversity_ratio(&text, &reference);
            let duplicate = samples.iter().any(|s| s.text == text);
            let attempt = Attempt {
                text,
                similarity,
                duplicate,
            };
            if similarity <= cfg.max_similarity && !duplicate {
                accepted = Some(attempt);
                break;
            }
            if best_rejected
                .as_ref()
                .is_none_or(|best| attempt.more_diverse_than(best))
            {
                best_rejected = Some(attempt);
            }
        }
        let (attempt, degraded) = match accepted {
            Some(a) => (a, false),
            None => (best_rejected.expect("at least one attempt is made"), true),
        };
        samples.push(SyntheticSample {
            source_id: source.id.clone(),
            variant_index,
            text: attempt.text,
            similarity_to_source: attempt.similarity,
            quality: None,
            labels: source.labels.clone(),
            degraded,
        });
    }
    Ok(samples)
}

/// Generates `n` variants for every item, in source order. Sources are
/// processed in parallel; each uses its own [`source_rng`] stream, so the
/// output does not depend on scheduling.
pub fn generate_corpus<B>(
    d: &Dataset,
    cfg: &GenerationConfig,
    backend: &B,
) -> Result<Vec<SyntheticSample>, GenerationError>
where
    B: FillBackend + ?Sized,
{
    cfg.validate()?;
    if d.is_empty() {
        return Err(GenerationError::EmptyDataset);
    }
    let per_source: Vec<Result<Vec<SyntheticSample>, GenerationError>> = d
        .items
        .par_iter()
        .map(|item| {
            let mut rng = source_rng(cfg.seed, &item.id);
            generate_variants(item, cfg, backend, &mut rng)
        })
        .collect();

    let mut out = Vec::with_capacity(d.len() * cfg.variants_per_source);
    let mut failures = Vec::new();
    for result in per_source {
        match result {
            Ok(samples) => out.extend(samples),
            Err(e) => failures.push(e),
        }
    }
    if !failures.is_empty() {
        return Err(GenerationError::Aggregate(failures));
    }
    Ok(out)
}
