//! Hashed character 3-gram TF-IDF embedder.
//!
//! Texts are put in tokenizer form (tokens joined by single spaces, so
//! `"sum."` and `"sum ."` embed identically), lowercased, and split into
//! overlapping 3-character windows (texts shorter than 3 characters form a
//! single gram). Each gram is
//! weighted by its count times the smoothed inverse document frequency
//! `ln((1 + N) / (1 + df)) + 1` from the reference corpus, added into one of
//! 1024 buckets chosen by FNV-1a, and the vector is L2-normalized.

use std::collections::{HashMap, HashSet};

use crate::backend::{BackendError, EmbedBackend};
use crate::generation::{detokenize, tokenize};

pub const EMBED_DIM: usize = 1024;
pub const NGRAM: usize = 3;

/// Character n-grams of the canonicalized, lowercased text.
pub fn char_ngrams(text: &str) -> Vec<String> {
    let chars: Vec<char> = detokenize(&tokenize(text)).to_lowercase().chars().collect();
    if chars.is_empty() {
        return Vec::new();
    }
    if chars.len() < NGRAM {
        return vec![chars.iter().collect()];
    }
    chars.windows(NGRAM).map(|w| w.iter().collect()).collect()
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

#[derive(Debug, Clone)]
pub struct NativeEmbedBackend {
    idf: HashMap<String, f64>,
    unseen_idf: f64,
    documents: usize,
}

impl NativeEmbedBackend {
    pub fn build<'a, I: IntoIterator<Item = &'a str>>(corpus: I) -> Self {
        let mut df: HashMap<String, usize> = HashMap::new();
        let mut documents = 0;
        for text in corpus {
            documents += 1;
            let grams: HashSet<String> = char_ngrams(text).into_iter().collect();
            for g in grams {
                *df.entry(g).or_default() += 1;
            }
        }
        let n = documents as f64;
        let idf = df
            .into_iter()
            .map(|(g, d)| (g, smooth_idf(n, d as f64)))
            .collect();
        Self {
            idf,
            unseen_idf: smooth_idf(n, 0.0),
            documents,
        }
    }

    pub fn idf(&self, gram: &str) -> f64 {
        self.idf.get(gram).copied().unwrap_or(self.unseen_idf)
    }

    pub fn documents(&self) -> usize {
        self.documents
    }

    pub fn embed_one(&self, text: &str) -> Vec<f64> {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for g in char_ngrams(text) {
            *counts.entry(g).or_default() += 1;
        }
        // bucket sums in a fixed order so the float result does not depend on map iteration
        let mut grams: Vec<(String, usize)> = counts.into_iter().collect();
        grams.sort_unstable();
        let mut v = vec![0.0; EMBED_DIM];
        for (g, tf) in grams {
            let bucket = (fnv1a(g.as_bytes()) % EMBED_DIM as u64) as usize;
            v[bucket] += tf as f64 * self.idf(&g);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

fn smooth_idf(documents: f64, df: f64) -> f64 {
    ((1.0 + documents) / (1.0 + df)).ln() + 1.0
}

impl EmbedBackend for NativeEmbedBackend {
    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, BackendError> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }

    fn describe(&self) -> String {
        format!("native-char{NGRAM}-tfidf-{EMBED_DIM}")
    }
}
