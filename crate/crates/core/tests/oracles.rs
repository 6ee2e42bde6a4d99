//! Library behaviour checked against independent reference implementations
//! written here, plus values frozen from an external reference run.

mod common;

use std::collections::{HashMap, HashSet};

use proptest::prelude::*;
use qgate_core::backend::EmbedBackend;
use qgate_core::corpus::{CategorySchema, Dataset, LabelVector, LabeledComment, Language, Split};
use qgate_core::generation::SyntheticSample;
use qgate_core::selection::SelectionPolicy;
use qgate_core::{
    diversity_ratio, quality_score, select_augmentation, select_oversampling, NativeEmbedBackend,
    ScoredPool,
};

// ---- Ratcliff/Obershelp -------------------------------------------------

/// Cubic longest-common-block search; earliest in `a`, then earliest in `b`.
fn naive_longest(a: &[char], b: &[char]) -> (usize, usize, usize) {
    let mut best = (0, 0, 0);
    for i in 0..a.len() {
        for j in 0..b.len() {
            let mut k = 0;
            while i + k < a.len() && j + k < b.len() && a[i + k] == b[j + k] {
                k += 1;
            }
            if k > best.2 {
                best = (i, j, k);
            }
        }
    }
    best
}

fn naive_matches(a: &[char], b: &[char]) -> usize {
    let (i, j, k) = naive_longest(a, b);
    if k == 0 {
        return 0;
    }
    k + naive_matches(&a[..i], &b[..j]) + naive_matches(&a[i + k..], &b[j + k..])
}

fn naive_ratio(x: &str, y: &str) -> f64 {
    let (x, y) = if x <= y { (x, y) } else { (y, x) };
    let a: Vec<char> = x.chars().collect();
    let b: Vec<char> = y.chars().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    2.0 * naive_matches(&a, &b) as f64 / (a.len() + b.len()) as f64
}

#[test]
fn ratio_matches_frozen_reference_values() {
    let cases = [
        ("abcd", "bcde", 0.75),
        ("tide", "diet", 0.5),
        (
            "returns the sum of a and b",
            "returns the total of a and b",
            0.8518518518518519,
        ),
        (
            "I represent pending announcements for Morph .",
            "I represent all pending events for a Morph !",
            0.8089887640449438,
        ),
        (
            "each := TextMorph new .",
            "x : = Point new ; yourself .",
            0.43137254901960786,
        ),
        ("héllo wörld", "hello world", 0.8181818181818182),
    ];
    for (a, b, want) in cases {
        let got = diversity_ratio(a, b);
        assert!(
            (got - want).abs() < 1e-12,
            "{a:?} vs {b:?}: {got} != {want}"
        );
        assert!(
            (naive_ratio(a, b) - want).abs() < 1e-12,
            "oracle drifted on {a:?}"
        );
    }
}

proptest! {
    #[test]
    fn ratio_equals_naive_oracle(a in "[abc d]{0,14}", b in "[abc d]{0,14}") {
        prop_assert_eq!(diversity_ratio(&a, &b), naive_ratio(&a, &b));
    }

    #[test]
    fn ratio_equals_naive_oracle_on_words(
        a in proptest::collection::vec("(the|sum|of|a|b|returns|\\.)", 0..8),
        b in proptest::collection::vec("(the|sum|of|a|b|returns|\\.)", 0..8),
    ) {
        let (a, b) = (a.join(" "), b.join(" "));
        prop_assert_eq!(diversity_ratio(&a, &b), naive_ratio(&a, &b));
    }
}

// ---- hashed character 3-gram TF-IDF ----------------------------------------

fn oracle_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut word = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() || ch == '_' {
            word.push(ch);
            continue;
        }
        if !word.is_empty() {
            out.push(std::mem::take(&mut word));
        }
        if !ch.is_whitespace() {
            out.push(ch.to_string());
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
    out
}

fn oracle_grams(text: &str) -> Vec<String> {
    let chars: Vec<char> = oracle_tokens(text)
        .join(" ")
        .to_lowercase()
        .chars()
        .collect();
    match chars.len() {
        0 => vec![],
        1 | 2 => vec![chars.iter().collect()],
        _ => (0..chars.len() - 2)
            .map(|i| chars[i..i + 3].iter().collect())
            .collect(),
    }
}

fn oracle_fnv(bytes: &[u8]) -> u64 {
    bytes.iter().fold(14695981039346656037u64, |h, &b| {
        (h ^ b as u64).wrapping_mul(1099511628211)
    })
}

struct OracleTfIdf {
    docs: usize,
    df: HashMap<String, usize>,
}

impl OracleTfIdf {
    fn new(corpus: &[&str]) -> Self {
        let mut df = HashMap::new();
        for doc in corpus {
            for g in oracle_grams(doc).into_iter().collect::<HashSet<_>>() {
                *df.entry(g).or_insert(0) += 1;
            }
        }
        Self {
            docs: corpus.len(),
            df,
        }
    }

    fn vector(&self, text: &str) -> Vec<f64> {
        let mut tf: HashMap<String, f64> = HashMap::new();
        for g in oracle_grams(text) {
            *tf.entry(g).or_insert(0.0) += 1.0;
        }
        let mut keys: Vec<_> = tf.keys().cloned().collect();
        keys.sort();
        let mut v = vec![0.0; 1024];
        for g in keys {
            let df = *self.df.get(&g).unwrap_or(&0) as f64;
            let idf = ((1.0 + self.docs as f64) / (1.0 + df)).ln() + 1.0;
            v[(oracle_fnv(g.as_bytes()) % 1024) as usize] += tf[&g] * idf;
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / n).collect()
    }

    fn cosine(&self, a: &str, b: &str) -> f64 {
        let (x, y) = (self.vector(a), self.vector(b));
        x.iter().zip(&y).map(|(p, q)| p * q).sum()
    }
}

const REFERENCE: [&str; 3] = [
    "returns the sum of a and b",
    "returns the total of a and b",
    "opens the file for reading",
];

#[test]
fn quality_matches_frozen_reference_values() {
    let backend = NativeEmbedBackend::build(REFERENCE);
    let cases = [
        (REFERENCE[0], REFERENCE[1], 0.6224949338535618),
        (
            "Returns the sum.",
            "computes the total value",
            0.07660545336452,
        ),
    ];
    for (a, b, want) in cases {
        let got = quality_score(a, b, &backend).unwrap();
        assert!((got - want).abs() < 1e-12, "{a:?}/{b:?}: {got} != {want}");
    }
}

#[test]
fn embedder_matches_oracle_on_fixture() {
    let d = common::pharo_toy();
    let texts: Vec<&str> = d.items.iter().map(|c| c.text.as_str()).collect();
    let backend = NativeEmbedBackend::build(texts.iter().copied());
    let oracle = OracleTfIdf::new(&texts);
    for pair in texts.windows(2).take(60) {
        let got = quality_score(pair[0], pair[1], &backend).unwrap();
        let want = oracle.cosine(pair[0], pair[1]).clamp(0.0, 1.0);
        assert!((got - want).abs() < 1e-12, "{:?}: {got} vs {want}", pair);
    }
    for text in texts.iter().take(20) {
        let got = backend.embed(&[text]).unwrap().remove(0);
        let want = oracle.vector(text);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn quality_is_reflexive_symmetric_bounded(a in "[a-z .,]{1,40}", b in "[a-z .,]{1,40}") {
        prop_assume!(!a.trim().is_empty() && !b.trim().is_empty());
        let backend = NativeEmbedBackend::build(REFERENCE);
        let ab = quality_score(&a, &b, &backend).unwrap();
        let ba = quality_score(&b, &a, &backend).unwrap();
        prop_assert_eq!(quality_score(&a, &a, &backend).unwrap(), 1.0);
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0).contains(&ab));
    }
}

// ---- selection --------------------------------------------------------------

fn toy_dataset(counts: &[usize], width: usize) -> Dataset {
    let names = (0..width).map(|c| format!("c{c}")).collect();
    let schema = CategorySchema::new(Language::Java, names).unwrap();
    let mut items = Vec::new();
    for (c, &n) in counts.iter().enumerate() {
        for i in 0..n {
            let mut bits = vec![false; width];
            bits[c] = true;
            items.push(LabeledComment {
                id: format!("o{c}_{i}"),
                language: Language::Java,
                text: format!("original {c} {i}"),
                labels: LabelVector::new(bits),
            });
        }
    }
    Dataset::new(schema, items, Split::Train).unwrap()
}

fn scored(specs: &[(f64, Vec<bool>)]) -> ScoredPool {
    ScoredPool {
        samples: specs
            .iter()
            .enumerate()
            .map(|(i, (q, bits))| SyntheticSample {
                source_id: format!("s{:02}", i % 5),
                variant_index: i,
                text: format!("variant {i}"),
                similarity_to_source: 0.5,
                quality: Some(*q),
                labels: LabelVector::new(bits.clone()),
                degraded: false,
            })
            .collect(),
        fingerprint: String::new(),
    }
}

type PoolCase = (usize, Vec<usize>, Vec<(f64, Vec<bool>)>);

fn pool_strategy() -> impl Strategy<Value = PoolCase> {
    (1usize..=3).prop_flat_map(|w| {
        (
            Just(w),
            proptest::collection::vec(1usize..8, w),
            proptest::collection::vec(
                (
                    (0u32..=20).prop_map(|x| x as f64 / 20.0),
                    proptest::collection::vec(any::<bool>(), w)
                        .prop_filter("non-empty", |b| b.iter().any(|&x| x)),
                ),
                0..=20,
            ),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn selections_respect_threshold_and_nest(
        (w, counts, specs) in pool_strategy(),
        t1 in 0u32..=20,
        t2 in 0u32..=20,
    ) {
        let (lo, hi) = (t1.min(t2) as f64 / 20.0, t1.max(t2) as f64 / 20.0);
        let d = toy_dataset(&counts, w);
        let pool = scored(&specs);
        let targets: Vec<usize> = counts.iter().map(|c| c + 3).collect();
        let key = |s: &SyntheticSample| (s.source_id.clone(), s.variant_index);

        for t in [lo, hi] {
            let over = select_oversampling(&pool, &d, &SelectionPolicy::oversampling(t, targets.clone())).unwrap();
            prop_assert!(over.selected.iter().all(|s| s.quality.unwrap() >= t));
            let keys: HashSet<_> = over.selected.iter().map(key).collect();
            prop_assert_eq!(keys.len(), over.selected.len());
        }
        let over_lo = select_oversampling(&pool, &d, &SelectionPolicy::oversampling(lo, targets.clone())).unwrap();
        let over_hi = select_oversampling(&pool, &d, &SelectionPolicy::oversampling(hi, targets.clone())).unwrap();
        prop_assert!(over_hi.selected.len() <= over_lo.selected.len());
        prop_assert!(over_hi.synthetic_fraction <= over_lo.synthetic_fraction);

        let aug_lo = select_augmentation(&pool, &d, &SelectionPolicy::augmentation(lo)).unwrap();
        let aug_hi = select_augmentation(&pool, &d, &SelectionPolicy::augmentation(hi)).unwrap();
        let lo_keys: HashSet<_> = aug_lo.selected.iter().map(key).collect();
        prop_assert!(aug_hi.selected.iter().all(|s| lo_keys.contains(&key(s))));
        prop_assert!(aug_hi.selected.iter().all(|s| s.quality.unwrap() >= hi));
    }
}
