//! Corpus-statistics fill backend.
//!
//! Each vocabulary token `w` proposed for a masked slot is scored as
//!
//! ```text
//! score(w) = λ_left · P(w | left) + λ_right · P(w | right) + λ_uni · P(w)
//! ```
//!
//! where `P(w | left)` is the share of bigrams starting with the left
//! neighbour that continue with `w`, `P(w | right)` the share of bigrams
//! ending in the right neighbour that start with `w`, and `P(w)` the unigram
//! frequency. A neighbour that is missing (sequence boundary), masked
//! itself, or never seen in that role drops its term and the remaining
//! weights are renormalized. Equal scores are ordered by token.

use std::collections::HashMap;

use crate::backend::{normalize_candidates, BackendError, Candidate, FillBackend};
use crate::corpus::Dataset;

use super::tokenize::tokenize;

const LEFT_WEIGHT: f64 = 0.45;
const RIGHT_WEIGHT: f64 = 0.45;
const UNIGRAM_WEIGHT: f64 = 0.10;

type TokenId = u32;

#[derive(Debug, Clone)]
pub struct NativeFillBackend {
    vocab: Vec<String>,
    ids: HashMap<String, TokenId>,
    unigram: Vec<u64>,
    total_tokens: u64,
    /// Token ids by descending unigram count, ties by token text.
    by_frequency: Vec<TokenId>,
    /// left -> (next -> count)
    followers: HashMap<TokenId, HashMap<TokenId, u64>>,
    follower_totals: HashMap<TokenId, u64>,
    /// right -> (previous -> count)
    predecessors: HashMap<TokenId, HashMap<TokenId, u64>>,
    predecessor_totals: HashMap<TokenId, u64>,
}

impl NativeFillBackend {
    /// Counts unigrams and adjacent-token bigrams over every item text.
    pub fn train(d: &Dataset) -> Self {
        Self::from_texts(d.items.iter().map(|c| c.text.as_str()))
    }

    pub fn from_texts<'a, I: IntoIterator<Item = &'a str>>(texts: I) -> Self {
        let mut vocab = Vec::new();
        let mut ids: HashMap<String, TokenId> = HashMap::new();
        let mut unigram: Vec<u64> = Vec::new();
        let mut followers: HashMap<TokenId, HashMap<TokenId, u64>> = HashMap::new();
        let mut predecessors: HashMap<TokenId, HashMap<TokenId, u64>> = HashMap::new();
        let mut total_tokens = 0;

        for text in texts {
            let seq: Vec<TokenId> = tokenize(text)
                .into_iter()
                .map(|t| {
                    *ids.entry(t.clone()).or_insert_with(|| {
                        vocab.push(t);
                        unigram.push(0);
                        (vocab.len() - 1) as TokenId
                    })
                })
                .collect();
            for &t in &seq {
                unigram[t as usize] += 1;
                total_tokens += 1;
            }
            for pair in seq.windows(2) {
                *followers
                    .entry(pair[0])
                    .or_default()
                    .entry(pair[1])
                    .or_default() += 1;
                *predecessors
                    .entry(pair[1])
                    .or_default()
                    .entry(pair[0])
                    .or_default() += 1;
            }
        }

        let mut by_frequency: Vec<TokenId> = (0..vocab.len() as TokenId).collect();
        by_frequency.sort_by(|&a, &b| {
            unigram[b as usize]
                .cmp(&unigram[a as usize])
                .then_with(|| vocab[a as usize].cmp(&vocab[b as usize]))
        });
        let totals = |m: &HashMap<TokenId, HashMap<TokenId, u64>>| {
            m.iter()
                .map(|(&k, v)| (k, v.values().sum()))
                .collect::<HashMap<_, _>>()
        };

        Self {
            follower_totals: totals(&followers),
            predecessor_totals: totals(&predecessors),
            vocab,
            ids,
            unigram,
            total_tokens,
            by_frequency,
            followers,
            predecessors,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn context(&self, tokens: &[String], masked: &[usize], pos: isize) -> Option<TokenId> {
        if pos < 0 || pos as usize >= tokens.len() {
            return None;
        }
        let pos = pos as usize;
        if masked.binary_search(&pos).is_ok() {
            return None;
        }
        self.ids.get(&tokens[pos]).copied()
    }

    fn rank(&self, left: Option<TokenId>, right: Option<TokenId>, k: usize) -> Vec<Candidate> {
        let left = left.and_then(|l| Some((self.followers.get(&l)?, self.follower_totals[&l])));
        let right =
            right.and_then(|r| Some((self.predecessors.get(&r)?, self.predecessor_totals[&r])));
        let norm = UNIGRAM_WEIGHT
            + left.map_or(0.0, |_| LEFT_WEIGHT)
            + right.map_or(0.0, |_| RIGHT_WEIGHT);
        let unigram_score = |id: TokenId| {
            UNIGRAM_WEIGHT / norm * self.unigram[id as usize] as f64 / self.total_tokens as f64
        };

        // Tokens seen next to a context get the full interpolated score;
        // every other token only has its unigram term, so the top of the
        // frequency list covers the rest of the ranking.
        let mut scores: HashMap<TokenId, f64> = HashMap::new();
        if let Some((counts, total)) = left {
            for (&w, &c) in counts {
                *scores.entry(w).or_insert_with(|| unigram_score(w)) +=
                    LEFT_WEIGHT / norm * c as f64 / total as f64;
            }
        }
        if let Some((counts, total)) = right {
            for (&w, &c) in counts {
                *scores.entry(w).or_insert_with(|| unigram_score(w)) +=
                    RIGHT_WEIGHT / norm * c as f64 / total as f64;
            }
        }
        let mut ranked: Vec<(TokenId, f64)> = scores.iter().map(|(&w, &s)| (w, s)).collect();
        ranked.extend(
            self.by_frequency
                .iter()
                .filter(|w| !scores.contains_key(w))
                .take(k)
                .map(|&w| (w, unigram_score(w))),
        );
        ranked.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| self.vocab[a.0 as usize].cmp(&self.vocab[b.0 as usize]))
        });
        ranked.truncate(k);
        ranked
            .into_iter()
            .map(|(w, score)| Candidate {
                token: self.vocab[w as usize].clone(),
                score,
                padded: false,
            })
            .collect()
    }
}

impl FillBackend for NativeFillBackend {
    fn fill(
        &self,
        tokens: &[String],
        masked_positions: &[usize],
        k: usize,
    ) -> Result<Vec<Vec<Candidate>>, BackendError> {
        if k == 0 {
            return Err(BackendError::InvalidRequest("k must be positive".into()));
        }
        if self.vocab.is_empty() {
            return Err(BackendError::InvalidRequest(
                "backend has an empty vocabulary".into(),
            ));
        }
        let mut sorted = masked_positions.to_vec();
        sorted.sort_unstable();
        if let Some(&bad) = sorted.iter().find(|&&p| p >= tokens.len()) {
            return Err(BackendError::InvalidRequest(format!(
                "masked position {bad} out of range for {} tokens",
                tokens.len()
            )));
        }
        masked_positions
            .iter()
            .map(|&p| {
                let p = p as isize;
                let left = self.context(tokens, &sorted, p - 1);
                let right = self.context(tokens, &sorted, p + 1);
                normalize_candidates(self.rank(left, right, k), k)
            })
            .collect()
    }
}
