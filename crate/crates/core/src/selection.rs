//! Quality-gated selection of synthetic samples and merging with the
//! original corpus.
//!
//! *Augmentation* keeps every sample with `q ≥ threshold`. *Oversampling*
//! additionally fills per-category positive-count targets: categories are
//! visited from rarest to most common (by positive count in the original
//! corpus), and each takes eligible samples positive for it in descending
//! `q` order until its deficit is closed or eligible samples run out. A
//! selected multi-label sample counts toward every category it is positive
//! for.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{positive_counts, ClassStats, Dataset, LabeledComment};
use crate::generation::SyntheticSample;
use crate::scoring::ScoredPool;

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("threshold {0} is outside [0, 1]")]
    Threshold(f64),
    #[error("oversampling requires per-category targets")]
    MissingTargets,
    #[error("augmentation does not take per-category targets")]
    UnexpectedTargets,
    #[error("expected {expected} targets, got {got}")]
    TargetWidth { expected: usize, got: usize },
    #[error(
        "target {target} for category {category:?} is below its current positive count {current}"
    )]
    TargetBelowCurrent {
        category: String,
        target: usize,
        current: usize,
    },
    #[error("policy strategy is {0}, expected {1}")]
    WrongStrategy(Strategy, Strategy),
    #[error("sample {source_id}#{variant_index} has {found} labels, schema has {expected}")]
    SchemaMismatch {
        source_id: String,
        variant_index: usize,
        expected: usize,
        found: usize,
    },
    #[error("sample {source_id}#{variant_index} has no quality score")]
    Unscored {
        source_id: String,
        variant_index: usize,
    },
    #[error("synthetic id {0:?} collides with an existing id")]
    IdCollision(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Oversampling,
    Augmentation,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Oversampling => "oversampling",
            Strategy::Augmentation => "augmentation",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "oversampling" | "over" => Ok(Strategy::Oversampling),
            "augmentation" | "aug" => Ok(Strategy::Augmentation),
            other => Err(format!("unknown strategy {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionPolicy {
    pub strategy: Strategy,
    pub threshold: f64,
    /// Positive-count target per category, in schema order.
    pub targets: Option<Vec<usize>>,
}

impl SelectionPolicy {
    pub fn augmentation(threshold: f64) -> Self {
        Self {
            strategy: Strategy::Augmentation,
            threshold,
            targets: None,
        }
    }

    pub fn oversampling(threshold: f64, targets: Vec<usize>) -> Self {
        Self {
            strategy: Strategy::Oversampling,
            threshold,
            targets: Some(targets),
        }
    }

    fn validate(&self, original: &Dataset) -> Result<(), SelectionError> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(SelectionError::Threshold(self.threshold));
        }
        match (self.strategy, &self.targets) {
            (Strategy::Augmentation, Some(_)) => Err(SelectionError::UnexpectedTargets),
            (Strategy::Augmentation, None) => Ok(()),
            (Strategy::Oversampling, None) => Err(SelectionError::MissingTargets),
            (Strategy::Oversampling, Some(targets)) => {
                let width = original.schema.width();
                if targets.len() != width {
                    return Err(SelectionError::TargetWidth {
                        expected: width,
                        got: targets.len(),
                    });
                }
                let current = positive_counts(&original.items, width);
                for (c, (&target, &current)) in targets.iter().zip(&current).enumerate() {
                    if target < current {
                        return Err(SelectionError::TargetBelowCurrent {
                            category: original.schema.categories()[c].clone(),
                            target,
                            current,
                        });
                    }
                }
                Ok(())
            }
        }
    }
}

/// `N_c = min(max_c' count_c', floor(cap · count_c))`, never below
/// `count_c`.
pub fn compute_targets(stats: &ClassStats, cap_multiplier: f64) -> Vec<usize> {
    let counts = stats.counts();
    let majority = counts.iter().copied().max().unwrap_or(0);
    counts
        .iter()
        .map(|&c| {
            let capped = (cap_multiplier * c as f64).floor();
            let capped = if capped >= majority as f64 {
                majority
            } else {
                capped as usize
            };
            capped.max(c)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub strategy: Strategy,
    pub threshold: f64,
    /// Selected samples. Oversampling lists them in selection
    /// order; augmentation in pool order.
    pub selected: Vec<SyntheticSample>,
    pub targets: Option<Vec<usize>>,
    /// Positives added per category by the selected samples.
    pub added_positives: Vec<usize>,
    /// Remaining deficit per category (oversampling); zero when met.
    pub unmet: Vec<usize>,
    /// Class statistics of the merged dataset.
    pub stats: ClassStats,
    /// Selected count over merged dataset size.
    pub synthetic_fraction: f64,
}

fn quality_of(s: &SyntheticSample) -> Result<f64, SelectionError> {
    s.quality.ok_or_else(|| SelectionError::Unscored {
        source_id: s.source_id.clone(),
        variant_index: s.variant_index,
    })
}

fn check_pool(pool: &ScoredPool, width: usize) -> Result<Vec<f64>, SelectionError> {
    pool.samples
        .iter()
        .map(|s| {
            if s.labels.len() != width {
                return Err(SelectionError::SchemaMismatch {
                    source_id: s.source_id.clone(),
                    variant_index: s.variant_index,
                    expected: width,
                    found: s.labels.len(),
                });
            }
            quality_of(s)
        })
        .collect()
}

/// Descending quality, then ascending (source id, variant index).
pub fn selection_order(a: &SyntheticSample, b: &SyntheticSample) -> Ordering {
    let qa = a.quality.unwrap_or(f64::NEG_INFINITY);
    let qb = b.quality.unwrap_or(f64::NEG_INFINITY);
    qb.total_cmp(&qa)
        .then_with(|| a.source_id.cmp(&b.source_id))
        .then_with(|| a.variant_index.cmp(&b.variant_index))
}

fn finish(
    original: &Dataset,
    policy: &SelectionPolicy,
    selected: Vec<SyntheticSample>,
    unmet: Vec<usize>,
) -> SelectionResult {
    let width = original.schema.width();
    let mut added = vec![0usize; width];
    for s in &selected {
        for c in s.labels.positives() {
            added[c] += 1;
        }
    }
    let base = positive_counts(&original.items, width);
    let merged: Vec<usize> = base.iter().zip(&added).map(|(b, a)| b + a).collect();
    let total = original.len() + selected.len();
    SelectionResult {
        strategy: policy.strategy,
        threshold: policy.threshold,
        synthetic_fraction: if total == 0 {
            0.0
        } else {
            selected.len() as f64 / total as f64
        },
        stats: ClassStats::from_counts(&original.schema, &merged, total),
        targets: policy.targets.clone(),
        added_positives: added,
        unmet,
        selected,
    }
}

/// Class-balancing selection under per-category targets. Under-filled
/// targets are reported in [`SelectionResult::unmet`], not as errors.
pub fn select_oversampling(
    pool: &ScoredPool,
    original: &Dataset,
    policy: &SelectionPolicy,
) -> Result<SelectionResult, SelectionError> {
    if policy.strategy != Strategy::Oversampling {
        return Err(SelectionError::WrongStrategy(
            policy.strategy,
            Strategy::Oversampling,
        ));
    }
    policy.validate(original)?;
    let width = original.schema.width();
    let qualities = check_pool(pool, width)?;
    let targets = policy.targets.as_deref().expect("validated");

    let mut eligible: Vec<usize> = (0..pool.len())
        .filter(|&i| qualities[i] >= policy.threshold)
        .collect();
    eligible.sort_by(|&a, &b| selection_order(&pool.samples[a], &pool.samples[b]));

    let original_counts = positive_counts(&original.items, width);
    let mut current = original_counts.clone();
    let mut order: Vec<usize> = (0..width).collect();
    order.sort_by_key(|&c| (original_counts[c], c));

    let mut taken = vec![false; pool.len()];
    let mut selected = Vec::new();
    for &c in &order {
        for &i in &eligible {
            if current[c] >= targets[c] {
                break;
            }
            let sample = &pool.samples[i];
            if taken[i] || !sample.labels.get(c) {
                continue;
            }
            taken[i] = true;
            for p in sample.labels.positives() {
                current[p] += 1;
            }
            selected.push(sample.clone());
        }
    }
    let unmet = targets
        .iter()
        .zip(&current)
        .map(|(&t, &cur)| t.saturating_sub(cur))
        .collect();
    Ok(finish(original, policy, selected, unmet))
}

/// Every sample with `q ≥ threshold`, in pool order.
pub fn select_augmentation(
    pool: &ScoredPool,
    original: &Dataset,
    policy: &SelectionPolicy,
) -> Result<SelectionResult, SelectionError> {
    if policy.strategy != Strategy::Augmentation {
        return Err(SelectionError::WrongStrategy(
            policy.strategy,
            Strategy::Augmentation,
        ));
    }
    policy.validate(original)?;
    let qualities = check_pool(pool, original.schema.width())?;
    let selected = pool
        .samples
        .iter()
        .zip(&qualities)
        .filter(|(_, &q)| q >= policy.threshold)
        .map(|(s, _)| s.clone())
        .collect();
    let unmet = vec![0; original.schema.width()];
    Ok(finish(original, policy, selected, unmet))
}

pub fn select(
    pool: &ScoredPool,
    original: &Dataset,
    policy: &SelectionPolicy,
) -> Result<SelectionResult, SelectionError> {
    match policy.strategy {
        Strategy::Oversampling => select_oversampling(pool, original, policy),
        Strategy::Augmentation => select_augmentation(pool, original, policy),
    }
}

pub fn synthetic_id(source_id: &str, variant_index: usize) -> String {
    format!("{source_id}#{variant_index}")
}

/// Merged dataset: all originals in order, then the selected samples sorted by
/// (source id, variant index) with ids `<source_id>#<variant_index>`.
pub fn merge(d: &Dataset, result: &SelectionResult) -> Result<Dataset, SelectionError> {
    let width = d.schema.width();
    let mut ids: HashSet<String> = d.items.iter().map(|c| c.id.clone()).collect();
    let mut synthetic: Vec<&SyntheticSample> = result.selected.iter().collect();
    synthetic.sort_by(|a, b| {
        a.source_id
            .cmp(&b.source_id)
            .then_with(|| a.variant_index.cmp(&b.variant_index))
    });

    let mut items = d.items.clone();
    items.reserve(synthetic.len());
    for s in synthetic {
        if s.labels.len() != width {
            return Err(SelectionError::SchemaMismatch {
                source_id: s.source_id.clone(),
                variant_index: s.variant_index,
                expected: width,
                found: s.labels.len(),
            });
        }
        let id = synthetic_id(&s.source_id, s.variant_index);
        if !ids.insert(id.clone()) {
            return Err(SelectionError::IdCollision(id));
        }
        items.push(LabeledComment {
            id,
            language: d.schema.language(),
            text: s.text.clone(),
            labels: s.labels.clone(),
        });
    }
    Ok(Dataset {
        schema: d.schema.clone(),
        items,
        split: d.split,
    })
}
