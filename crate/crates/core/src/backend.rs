//! Pluggable model interfaces: masked-token fill and sentence embedding.
//!
//! Both traits require `Send + Sync`; implementations that are not safe
//! for concurrent queries must serialize internally.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("backend protocol error: {0}")]
    Protocol(String),
    #[error("backend reported an error: {0}")]
    Remote(String),
    #[error("invalid backend request: {0}")]
    InvalidRequest(String),
}

/// One proposed token for a masked position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub token: String,
    pub score: f64,
    /// Set when this entry repeats the last real candidate to reach `k`.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub padded: bool,
}

pub trait FillBackend: Send + Sync {
    /// For every entry of `masked_positions`, return exactly `k`
    /// candidates ordered by descending score.
    fn fill(
        &self,
        tokens: &[String],
        masked_positions: &[usize],
        k: usize,
    ) -> Result<Vec<Vec<Candidate>>, BackendError>;
}

pub trait EmbedBackend: Send + Sync {
    /// Maps each text to a vector. All vectors from one backend share a
    /// dimension, and equal texts map to equal vectors.
    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, BackendError>;

    /// Short identifier used in run fingerprints.
    fn describe(&self) -> String;
}

impl<T: FillBackend + ?Sized> FillBackend for &T {
    fn fill(
        &self,
        tokens: &[String],
        masked_positions: &[usize],
        k: usize,
    ) -> Result<Vec<Vec<Candidate>>, BackendError> {
        (**self).fill(tokens, masked_positions, k)
    }
}

impl<T: EmbedBackend + ?Sized> EmbedBackend for &T {
    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, BackendError> {
        (**self).embed(texts)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

/// Sorts candidates by descending score (stable) and brings the list to
/// exactly `k` entries, repeating the last candidate with `padded = true`
/// when fewer are available.
pub fn normalize_candidates(
    mut candidates: Vec<Candidate>,
    k: usize,
) -> Result<Vec<Candidate>, BackendError> {
    if k == 0 {
        return Err(BackendError::InvalidRequest("k must be positive".into()));
    }
    if candidates.is_empty() {
        return Err(BackendError::Protocol(
            "no candidates for a masked position".into(),
        ));
    }
    candidates.sort_by(|a, b| b.score.total_cmp(&a.score));
    candidates.truncate(k);
    while candidates.len() < k {
        let mut last = candidates[candidates.len() - 1].clone();
        last.padded = true;
        candidates.push(last);
    }
    Ok(candidates)
}
