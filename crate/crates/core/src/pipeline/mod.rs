//! End-to-end orchestration: load → generate → score → select → merge,
//! threshold sweeps, and report emission.
//!
//! Every stage writes its artifact as soon as it finishes, so a later
//! failure keeps the expensive generation and scoring outputs. Selection
//! can resume from a scored-pool file.

mod report;

use std::fmt;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use report::{
    quality_histogram, report_stats, token_length_histogram, Histogram, LengthQuality, PoolReport,
    RunReport, ThresholdReport, QUALITY_BIN_WIDTH, TOKEN_BIN_WIDTH,
};

use crate::backend::{EmbedBackend, FillBackend};
use crate::bridge::{Endpoint, ExternalBackend};
use crate::corpus::{
    class_stats, load_dataset, write_dataset, CategorySchema, Dataset, Format, Language, Split,
};
use crate::generation::{generate_corpus, GenerationConfig, NativeFillBackend, SyntheticSample};
use crate::scoring::{score_pool, NativeEmbedBackend, ScoredPool};
use crate::selection::{
    compute_targets, merge, select, SelectionPolicy, SelectionResult, Strategy,
};

/// Quality thresholds evaluated by default in a sweep.
pub const DEFAULT_SWEEP: [f64; 6] = [0.70, 0.80, 0.90, 0.925, 0.95, 0.975];

pub const GENERATED_FILE: &str = "generated.jsonl";
pub const POOL_FILE: &str = "pool.jsonl";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TEXT: &str = "report.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Load,
    Backend,
    Generate,
    Score,
    Select,
    Merge,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Load => "load",
            Stage::Backend => "backend",
            Stage::Generate => "generate",
            Stage::Score => "score",
            Stage::Select => "select",
            Stage::Merge => "merge",
            Stage::Write => "write",
        })
    }
}

/// A failure tagged with the stage it happened in.
#[derive(Debug)]
pub struct PipelineError {
    pub stage: Stage,
    pub source: Box<dyn std::error::Error + Send + Sync>,
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.stage, self.source)
    }
}

impl std::error::Error for PipelineError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(self.source.as_ref())
    }
}

fn at<E>(stage: Stage) -> impl FnOnce(E) -> PipelineError
where
    E: Into<Box<dyn std::error::Error + Send + Sync>>,
{
    move |e| PipelineError {
        stage,
        source: e.into(),
    }
}

fn config_error(msg: impl Into<String>) -> PipelineError {
    PipelineError {
        stage: Stage::Config,
        source: msg.into().into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    #[default]
    Native,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub strategy: Strategy,
    /// Single threshold; when set it replaces the sweep in `run`.
    pub qsynt: Option<f64>,
    pub sweep: Vec<f64>,
    /// Oversampling targets are capped at this multiple of each category's
    /// original positive count.
    pub cap_multiplier: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Oversampling,
            qsynt: None,
            sweep: DEFAULT_SWEEP.to_vec(),
            cap_multiplier: 10.0,
        }
    }
}

impl SelectionConfig {
    pub fn thresholds(&self) -> Vec<f64> {
        match self.qsynt {
            Some(q) => vec![q],
            None => self.sweep.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    pub text: bool,
    pub write_datasets: bool,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            text: true,
            write_datasets: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub dataset: Option<PathBuf>,
    /// Input format; inferred from the dataset extension when unset.
    pub format: Option<Format>,
    pub schema: Option<Language>,
    pub split: Split,
    pub backend: BackendChoice,
    pub endpoint: Option<String>,
    pub out: PathBuf,
    pub generation: GenerationConfig,
    pub selection: SelectionConfig,
    pub report: ReportConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            format: None,
            schema: None,
            split: Split::Train,
            backend: BackendChoice::Native,
            endpoint: None,
            out: PathBuf::from("qgate-out"),
            generation: GenerationConfig::default(),
            selection: SelectionConfig::default(),
            report: ReportConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, PipelineError> {
        toml::from_str(s).map_err(at(Stage::Config))
    }

    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let body = fs::read_to_string(path)
            .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&body)
    }

    pub fn dataset_path(&self) -> Result<&Path, PipelineError> {
        self.dataset
            .as_deref()
            .ok_or_else(|| config_error("no dataset given"))
    }

    pub fn dataset_format(&self) -> Result<Format, PipelineError> {
        let path = self.dataset_path()?;
        self.format
            .or_else(|| Format::from_path(path))
            .ok_or_else(|| config_error(format!("cannot infer format of {}", path.display())))
    }

    pub fn schema(&self) -> Result<CategorySchema, PipelineError> {
        self.schema
            .map(CategorySchema::challenge)
            .ok_or_else(|| config_error("no schema given"))
    }

    /// Checks everything that does not need the dataset itself.
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.dataset_path()?;
        self.dataset_format()?;
        self.schema()?;
        self.generation.validate().map_err(at(Stage::Config))?;
        if self.selection.qsynt.is_none() && self.selection.sweep.is_empty() {
            return Err(config_error(
                "no selection threshold: empty sweep and no qsynt",
            ));
        }
        for &q in self.selection.qsynt.iter().chain(&self.selection.sweep) {
            if !(0.0..=1.0).contains(&q) {
                return Err(config_error(format!("threshold {q} is outside [0, 1]")));
            }
        }
        if self.selection.cap_multiplier.is_nan() || self.selection.cap_multiplier <= 0.0 {
            return Err(config_error("cap_multiplier must be positive"));
        }
        if self.backend == BackendChoice::External && self.endpoint.is_none() {
            return Err(config_error("external backend needs an endpoint"));
        }
        Ok(())
    }
}

/// Fill and embed backends for a run.
pub struct Backends {
    pub fill: Arc<dyn FillBackend>,
    pub embed: Arc<dyn EmbedBackend>,
}

impl Backends {
    pub fn native(d: &Dataset) -> Self {
        Self {
            fill: Arc::new(NativeFillBackend::train(d)),
            embed: Arc::new(NativeEmbedBackend::build(
                d.items.iter().map(|c| c.text.as_str()),
            )),
        }
    }

    pub fn for_config(cfg: &PipelineConfig, d: &Dataset) -> Result<Self, PipelineError> {
        match cfg.backend {
            BackendChoice::Native => Ok(Self::native(d)),
            BackendChoice::External => {
                let endpoint: Endpoint = cfg
                    .endpoint
                    .as_deref()
                    .ok_or_else(|| config_error("external backend needs an endpoint"))?
                    .parse()
                    .map_err(at(Stage::Backend))?;
                let backend =
                    Arc::new(ExternalBackend::connect(endpoint).map_err(at(Stage::Backend))?);
                Ok(Self {
                    fill: backend.clone(),
                    embed: backend,
                })
            }
        }
    }
}

pub fn load_source(cfg: &PipelineConfig) -> Result<Dataset, PipelineError> {
    let d = load_dataset(
        cfg.dataset_path()?,
        cfg.dataset_format()?,
        &cfg.schema()?,
        cfg.split,
    )
    .map_err(at(Stage::Load))?;
    if d.is_empty() {
        return Err(at(Stage::Load)("dataset is empty"));
    }
    Ok(d)
}

/// Stable identifier of (dataset content, generation settings, embedder).
pub fn fingerprint(d: &Dataset, gen: &GenerationConfig, embedder: &str) -> String {
    let mut h = Sha256::new();
    for item in &d.items {
        h.update(item.id.as_bytes());
        h.update([0]);
        h.update(item.text.as_bytes());
        h.update([0]);
        for &b in item.labels.bits() {
            h.update([u8::from(b)]);
        }
        h.update([0xff]);
    }
    h.update(serde_json::to_vec(gen).expect("config serializes"));
    h.update(embedder.as_bytes());
    h.finalize()[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn write_pool(path: &Path, samples: &[SyntheticSample]) -> Result<(), PipelineError> {
    let write = || -> std::io::Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        for s in samples {
            serde_json::to_writer(&mut out, s)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    };
    write().map_err(|e| at(Stage::Write)(format!("{}: {e}", path.display())))
}

pub fn read_pool(path: &Path) -> Result<Vec<SyntheticSample>, PipelineError> {
    let fail = |msg: String| at(Stage::Load)(format!("{}: {msg}", path.display()));
    let file = File::open(path).map_err(|e| fail(e.to_string()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| fail(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| fail(format!("record {}: {e}", i + 1)))?);
    }
    Ok(out)
}

/// Generates the pool and checks the `n · |D|` cardinality.
pub fn generate_stage(
    cfg: &PipelineConfig,
    d: &Dataset,
    backends: &Backends,
) -> Result<Vec<SyntheticSample>, PipelineError> {
    let samples =
        generate_corpus(d, &cfg.generation, backends.fill.as_ref()).map_err(at(Stage::Generate))?;
    let expected = cfg.generation.variants_per_source * d.len();
    if samples.len() != expected {
        return Err(at(Stage::Generate)(format!(
            "generated {} samples, expected {expected}",
            samples.len()
        )));
    }
    Ok(samples)
}

pub fn score_stage(
    cfg: &PipelineConfig,
    d: &Dataset,
    backends: &Backends,
    samples: Vec<SyntheticSample>,
) -> Result<ScoredPool, PipelineError> {
    let fp = fingerprint(d, &cfg.generation, &backends.embed.describe());
    score_pool(samples, d, backends.embed.as_ref(), fp).map_err(at(Stage::Score))
}

pub fn policy_for(
    d: &Dataset,
    strategy: Strategy,
    threshold: f64,
    cap_multiplier: f64,
) -> Result<SelectionPolicy, PipelineError> {
    Ok(match strategy {
        Strategy::Augmentation => SelectionPolicy::augmentation(threshold),
        Strategy::Oversampling => {
            let stats = class_stats(d).map_err(at(Stage::Select))?;
            SelectionPolicy::oversampling(threshold, compute_targets(&stats, cap_multiplier))
        }
    })
}

pub fn dsyo_file_name(strategy: Strategy, threshold: f64, format: Format) -> String {
    format!("dsyo_{strategy}_q{threshold:.3}.{}", format.extension())
}

/// Selects, merges and (optionally) writes the merged dataset for every
/// (strategy, threshold) pair.
pub fn select_stage(
    cfg: &PipelineConfig,
    d: &Dataset,
    pool: &ScoredPool,
    strategies: &[Strategy],
    thresholds: &[f64],
) -> Result<Vec<(SelectionResult, ThresholdReport)>, PipelineError> {
    let before = class_stats(d).map_err(at(Stage::Select))?;
    let format = cfg.dataset_format()?;
    let mut out = Vec::new();
    for &strategy in strategies {
        for &q in thresholds {
            let policy = policy_for(d, strategy, q, cfg.selection.cap_multiplier)?;
            let result = select(pool, d, &policy).map_err(at(Stage::Select))?;
            let merged = merge(d, &result).map_err(at(Stage::Merge))?;
            let output = if cfg.report.write_datasets {
                let name = dsyo_file_name(strategy, q, format);
                write_dataset(&merged, &cfg.out.join(&name), format).map_err(at(Stage::Write))?;
                Some(name)
            } else {
                None
            };
            let report = ThresholdReport::new(&before, &result, output);
            out.push((result, report));
        }
    }
    Ok(out)
}

pub fn build_report(
    d: &Dataset,
    pool: &ScoredPool,
    selections: Vec<ThresholdReport>,
) -> Result<RunReport, PipelineError> {
    Ok(RunReport {
        fingerprint: pool.fingerprint.clone(),
        language: d.schema.language().to_string(),
        categories: d.schema.categories().to_vec(),
        original: class_stats(d).map_err(at(Stage::Select))?,
        pool: report_stats(pool),
        selections,
    })
}

pub fn write_report(cfg: &PipelineConfig, report: &RunReport) -> Result<(), PipelineError> {
    let json_path = cfg.out.join(REPORT_JSON);
    let mut body = serde_json::to_string_pretty(report).map_err(at(Stage::Write))?;
    body.push('\n');
    fs::write(&json_path, body)
        .map_err(|e| at(Stage::Write)(format!("{}: {e}", json_path.display())))?;
    if cfg.report.text {
        let text_path = cfg.out.join(REPORT_TEXT);
        fs::write(&text_path, report.to_text())
            .map_err(|e| at(Stage::Write)(format!("{}: {e}", text_path.display())))?;
    }
    Ok(())
}

fn prepare_out(cfg: &PipelineConfig) -> Result<(), PipelineError> {
    fs::create_dir_all(&cfg.out)
        .map_err(|e| at(Stage::Write)(format!("{}: {e}", cfg.out.display())))
}

/// Loads a scored pool from `pool_path` when given, otherwise generates and
/// scores one (writing both stage files).
pub fn obtain_pool(
    cfg: &PipelineConfig,
    d: &Dataset,
    pool_path: Option<&Path>,
) -> Result<ScoredPool, PipelineError> {
    if let Some(path) = pool_path {
        let samples = read_pool(path)?;
        if let Some(s) = samples.iter().find(|s| s.quality.is_none()) {
            return Err(at(Stage::Load)(format!(
                "{}: sample {}#{} is not scored",
                path.display(),
                s.source_id,
                s.variant_index
            )));
        }
        return Ok(ScoredPool {
            samples,
            fingerprint: fingerprint(d, &cfg.generation, "resumed"),
        });
    }
    let backends = Backends::for_config(cfg, d)?;
    let samples = generate_stage(cfg, d, &backends)?;
    write_pool(&cfg.out.join(GENERATED_FILE), &samples)?;
    let pool = score_stage(cfg, d, &backends, samples)?;
    write_pool(&cfg.out.join(POOL_FILE), &pool.samples)?;
    Ok(pool)
}

/// Full pipeline with the configured strategy over the configured
/// thresholds (`qsynt` if set, else the sweep).
pub fn run(cfg: &PipelineConfig) -> Result<RunReport, PipelineError> {
    run_with(cfg, &[cfg.selection.strategy], None)
}

/// Both strategies over the sweep, optionally resuming from a scored pool.
pub fn sweep(cfg: &PipelineConfig, pool_path: Option<&Path>) -> Result<RunReport, PipelineError> {
    run_with(
        cfg,
        &[Strategy::Oversampling, Strategy::Augmentation],
        pool_path,
    )
}

fn run_with(
    cfg: &PipelineConfig,
    strategies: &[Strategy],
    pool_path: Option<&Path>,
) -> Result<RunReport, PipelineError> {
    cfg.validate()?;
    let d = load_source(cfg)?;
    prepare_out(cfg)?;
    let pool = obtain_pool(cfg, &d, pool_path)?;
    let selections = select_stage(cfg, &d, &pool, strategies, &cfg.selection.thresholds())?;
    let report = build_report(&d, &pool, selections.into_iter().map(|(_, r)| r).collect())?;
    write_report(cfg, &report)?;
    Ok(report)
}
