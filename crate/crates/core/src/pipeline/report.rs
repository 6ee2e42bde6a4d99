//! Pool statistics and run reports (JSON and plain-text tables).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::ClassStats;
use crate::generation::tokenize;
use crate::scoring::ScoredPool;
use crate::selection::{SelectionResult, Strategy};

pub const QUALITY_BIN_WIDTH: f64 = 0.05;
pub const TOKEN_BIN_WIDTH: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    /// Lower edge of each bin; the last quality bin is closed at 1.0.
    pub lower_edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn mass(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Quality histogram over [0, 1] with bins of width 0.05.
pub fn quality_histogram<I: IntoIterator<Item = f64>>(qualities: I) -> Histogram {
    let bins = (1.0 / QUALITY_BIN_WIDTH).round() as usize;
    let mut counts = vec![0usize; bins];
    for q in qualities {
        // the epsilon keeps values like 0.95 out of the bin below after scaling
        let idx = ((q * bins as f64) + 1e-9).floor();
        counts[(idx.max(0.0) as usize).min(bins - 1)] += 1;
    }
    Histogram {
        bin_width: QUALITY_BIN_WIDTH,
        lower_edges: (0..bins).map(|i| i as f64 / bins as f64).collect(),
        counts,
    }
}

pub fn token_length_histogram<I: IntoIterator<Item = usize>>(lengths: I) -> Histogram {
    let mut counts: Vec<usize> = Vec::new();
    for len in lengths {
        let idx = len / TOKEN_BIN_WIDTH;
        if idx >= counts.len() {
            counts.resize(idx + 1, 0);
        }
        counts[idx] += 1;
    }
    Histogram {
        bin_width: TOKEN_BIN_WIDTH as f64,
        lower_edges: (0..counts.len())
            .map(|i| (i * TOKEN_BIN_WIDTH) as f64)
            .collect(),
        counts,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthQuality {
    pub tokens: usize,
    pub count: usize,
    pub mean_q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolReport {
    pub size: usize,
    pub degraded: usize,
    pub mean_q: Option<f64>,
    pub q_histogram: Histogram,
    pub token_length_histogram: Histogram,
    /// Mean quality per synthetic-sentence token length.
    pub length_quality: Vec<LengthQuality>,
}

pub fn report_stats(pool: &ScoredPool) -> PoolReport {
    let lengths: Vec<usize> = pool
        .samples
        .iter()
        .map(|s| tokenize(&s.text).len())
        .collect();
    let max_len = lengths.iter().copied().max().unwrap_or(0);
    let mut sums = vec![(0usize, 0.0f64); max_len + 1];
    for (len, q) in lengths.iter().zip(pool.qualities()) {
        sums[*len].0 += 1;
        sums[*len].1 += q;
    }
    PoolReport {
        size: pool.len(),
        degraded: pool.samples.iter().filter(|s| s.degraded).count(),
        mean_q: pool.mean_quality(),
        q_histogram: quality_histogram(pool.qualities()),
        token_length_histogram: token_length_histogram(lengths.iter().copied()),
        length_quality: sums
            .into_iter()
            .enumerate()
            .filter(|(_, (n, _))| *n > 0)
            .map(|(tokens, (count, sum))| LengthQuality {
                tokens,
                count,
                mean_q: sum / count as f64,
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub strategy: Strategy,
    pub qsynt: f64,
    pub selected: usize,
    pub degraded_selected: usize,
    pub merged_size: usize,
    pub synthetic_fraction: f64,
    pub ratios_before: Vec<f64>,
    pub ratios_after: Vec<f64>,
    pub targets: Option<Vec<usize>>,
    pub unmet: Vec<usize>,
    /// File name of the merged dataset, when written.
    pub output: Option<String>,
}

impl ThresholdReport {
    pub fn new(before: &ClassStats, result: &SelectionResult, output: Option<String>) -> Self {
        Self {
            strategy: result.strategy,
            qsynt: result.threshold,
            selected: result.selected.len(),
            degraded_selected: result.selected.iter().filter(|s| s.degraded).count(),
            merged_size: result.stats.total,
            synthetic_fraction: result.synthetic_fraction,
            ratios_before: before.ratios(),
            ratios_after: result.stats.ratios(),
            targets: result.targets.clone(),
            unmet: result.unmet.clone(),
            output,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub fingerprint: String,
    pub language: String,
    pub categories: Vec<String>,
    pub original: ClassStats,
    pub pool: PoolReport,
    pub selections: Vec<ThresholdReport>,
}

impl RunReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "run {} ({})", self.fingerprint, self.language);
        let _ = writeln!(s);
        let _ = writeln!(s, "original dataset");
        s.push_str(&self.original.to_table());
        let _ = writeln!(s);

        let p = &self.pool;
        let _ = writeln!(
            s,
            "pool: {} samples, {} degraded, mean q {}",
            p.size,
            p.degraded,
            p.mean_q.map_or("n/a".to_string(), |q| format!("{q:.4}"))
        );
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<13}  {:>7}", "q bin", "count");
        for (lo, n) in p.q_histogram.lower_edges.iter().zip(&p.q_histogram.counts) {
            let _ = writeln!(
                s,
                "[{:.2}, {:.2}{}  {:>7}",
                lo,
                lo + p.q_histogram.bin_width,
                if (lo + p.q_histogram.bin_width) >= 1.0 {
                    "]"
                } else {
                    ")"
                },
                n
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<13}  {:>7}", "tokens", "count");
        for (lo, n) in p
            .token_length_histogram
            .lower_edges
            .iter()
            .zip(&p.token_length_histogram.counts)
        {
            let hi = *lo as usize + TOKEN_BIN_WIDTH - 1;
            let _ = writeln!(s, "{:<13}  {:>7}", format!("{}-{}", *lo as usize, hi), n);
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{:>6}  {:>7}  {:>7}", "tokens", "count", "mean q");
        for row in &p.length_quality {
            let _ = writeln!(
                s,
                "{:>6}  {:>7}  {:>7.4}",
                row.tokens, row.count, row.mean_q
            );
        }

        if !self.selections.is_empty() {
            let _ = writeln!(s);
            let _ = writeln!(
                s,
                "{:<13}  {:>6}  {:>8}  {:>8}  {:>8}  {:>9}",
                "strategy", "qsynt", "selected", "degraded", "merged", "synth.fr"
            );
            for t in &self.selections {
                let _ = writeln!(
                    s,
                    "{:<13}  {:>6.3}  {:>8}  {:>8}  {:>8}  {:>9.4}",
                    t.strategy.to_string(),
                    t.qsynt,
                    t.selected,
                    t.degraded_selected,
                    t.merged_size,
                    t.synthetic_fraction
                );
            }
            let width = self
                .categories
                .iter()
                .map(String::len)
                .max()
                .unwrap_or(8)
                .max(8);
            for t in &self.selections {
                let _ = writeln!(s);
                let _ = writeln!(s, "{} @ {:.3}: positive ratios", t.strategy, t.qsynt);
                let _ = writeln!(
                    s,
                    "{:<width$}  {:>7}  {:>7}  {:>6}",
                    "category", "before", "after", "unmet"
                );
                for (i, name) in self.categories.iter().enumerate() {
                    let _ = writeln!(
                        s,
                        "{:<width$}  {:>7.4}  {:>7.4}  {:>6}",
                        name, t.ratios_before[i], t.ratios_after[i], t.unmet[i]
                    );
                }
            }
        }
        s
    }
}
