use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use qgate_core::corpus::{class_stats, Format, Language, Split};
use qgate_core::pipeline::{
    self, build_report, load_source, obtain_pool, read_pool, score_stage, select_stage, write_pool,
    write_report, BackendChoice, Backends, PipelineConfig, GENERATED_FILE, POOL_FILE,
};
use qgate_core::selection::Strategy;

#[derive(Parser)]
#[command(
    name = "qgate",
    version,
    about = "Quality-gated synthetic oversampling for multi-label text corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print per-category positive counts and ratios.
    Stats {
        #[command(flatten)]
        opts: Opts,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Generate the synthetic pool (OUT/generated.jsonl).
    Generate {
        #[command(flatten)]
        opts: Opts,
    },
    /// Score a generated pool (default OUT/generated.jsonl) into OUT/pool.jsonl.
    Score {
        #[command(flatten)]
        opts: Opts,
        #[arg(long)]
        pool: Option<PathBuf>,
    },
    /// Select from a scored pool (default OUT/pool.jsonl) and write merged datasets.
    Select {
        #[command(flatten)]
        opts: Opts,
        #[arg(long)]
        pool: Option<PathBuf>,
    },
    /// Generate, score, select and report with the configured strategy.
    Run {
        #[command(flatten)]
        opts: Opts,
    },
    /// Both strategies over the threshold sweep, optionally from a scored pool.
    Sweep {
        #[command(flatten)]
        opts: Opts,
        #[arg(long)]
        pool: Option<PathBuf>,
    },
}

/// Flags overriding the TOML config, one per scalar setting.
#[derive(Args, Default)]
struct Opts {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, value_parser = parse_with::<Format>)]
    format: Option<Format>,
    #[arg(long, value_parser = parse_with::<Language>)]
    schema: Option<Language>,
    #[arg(long, value_parser = ["train", "test"])]
    split: Option<String>,
    #[arg(long, value_parser = ["native", "external"])]
    backend: Option<String>,
    /// host:port, tcp://host:port or stdio:<command>.
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Single quality threshold (replaces the sweep).
    #[arg(long)]
    qsynt: Option<f64>,
    /// Comma-separated threshold list.
    #[arg(long, value_delimiter = ',')]
    sweep: Option<Vec<f64>>,
    #[arg(long, value_parser = parse_with::<Strategy>)]
    strategy: Option<Strategy>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    mask_ratio: Option<f64>,
    /// Variants per source sentence.
    #[arg(long)]
    variants: Option<usize>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    max_similarity: Option<f64>,
    #[arg(long)]
    retry_budget: Option<usize>,
    #[arg(long)]
    cap_multiplier: Option<f64>,
    /// Skip writing merged datasets.
    #[arg(long)]
    no_datasets: bool,
    /// Skip the plain-text report.
    #[arg(long)]
    no_text_report: bool,
}

fn parse_with<T>(s: &str) -> Result<T, String>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| e.to_string())
}

impl Opts {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::from_file(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = &self.dataset {
            cfg.dataset = Some(v.clone());
        }
        if let Some(v) = self.format {
            cfg.format = Some(v);
        }
        if let Some(v) = self.schema {
            cfg.schema = Some(v);
        }
        if let Some(v) = &self.split {
            cfg.split = if v == "test" {
                Split::Test
            } else {
                Split::Train
            };
        }
        if let Some(v) = &self.backend {
            cfg.backend = if v == "external" {
                BackendChoice::External
            } else {
                BackendChoice::Native
            };
        }
        if let Some(v) = &self.endpoint {
            cfg.endpoint = Some(v.clone());
        }
        if let Some(v) = self.seed {
            cfg.generation.seed = v;
        }
        if let Some(v) = self.qsynt {
            cfg.selection.qsynt = Some(v);
        }
        if let Some(v) = &self.sweep {
            cfg.selection.sweep = v.clone();
        }
        if let Some(v) = self.strategy {
            cfg.selection.strategy = v;
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(v) = self.mask_ratio {
            cfg.generation.mask_ratio = v;
        }
        if let Some(v) = self.variants {
            cfg.generation.variants_per_source = v;
        }
        if let Some(v) = self.top_k {
            cfg.generation.top_k = v;
        }
        if let Some(v) = self.max_similarity {
            cfg.generation.max_similarity = v;
        }
        if let Some(v) = self.retry_budget {
            cfg.generation.retry_budget = v;
        }
        if let Some(v) = self.cap_multiplier {
            cfg.selection.cap_multiplier = v;
        }
        if self.no_datasets {
            cfg.report.write_datasets = false;
        }
        if self.no_text_report {
            cfg.report.text = false;
        }
        Ok(cfg)
    }
}

fn create_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("[write] creating {}", dir.display()))
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Stats { opts, json } => {
            let cfg = opts.resolve()?;
            let d = load_source(&cfg)?;
            let stats = class_stats(&d)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&stats)?);
            } else {
                print!("{}", stats.to_table());
            }
        }
        Command::Generate { opts } => {
            let cfg = opts.resolve()?;
            cfg.validate()?;
            let d = load_source(&cfg)?;
            create_out(&cfg.out)?;
            let backends = Backends::for_config(&cfg, &d)?;
            let samples = pipeline::generate_stage(&cfg, &d, &backends)?;
            let path = cfg.out.join(GENERATED_FILE);
            write_pool(&path, &samples)?;
            let degraded = samples.iter().filter(|s| s.degraded).count();
            println!(
                "{} samples ({degraded} degraded) -> {}",
                samples.len(),
                path.display()
            );
        }
        Command::Score { opts, pool } => {
            let cfg = opts.resolve()?;
            cfg.validate()?;
            let d = load_source(&cfg)?;
            create_out(&cfg.out)?;
            let input = pool.unwrap_or_else(|| cfg.out.join(GENERATED_FILE));
            let samples = read_pool(&input)?;
            let backends = Backends::for_config(&cfg, &d)?;
            let scored = score_stage(&cfg, &d, &backends, samples)?;
            let path = cfg.out.join(POOL_FILE);
            write_pool(&path, &scored.samples)?;
            let mean = scored.mean_quality().unwrap_or(f64::NAN);
            println!(
                "{} samples, mean q {mean:.4} -> {}",
                scored.len(),
                path.display()
            );
        }
        Command::Select { opts, pool } => {
            let cfg = opts.resolve()?;
            cfg.validate()?;
            let d = load_source(&cfg)?;
            create_out(&cfg.out)?;
            let input = pool.unwrap_or_else(|| cfg.out.join(POOL_FILE));
            let scored = obtain_pool(&cfg, &d, Some(&input))?;
            let selections = select_stage(
                &cfg,
                &d,
                &scored,
                &[cfg.selection.strategy],
                &cfg.selection.thresholds(),
            )?;
            let report = build_report(
                &d,
                &scored,
                selections.into_iter().map(|(_, r)| r).collect(),
            )?;
            write_report(&cfg, &report)?;
            print_summary(&report);
        }
        Command::Run { opts } => {
            let cfg = opts.resolve()?;
            let report = pipeline::run(&cfg)?;
            print_summary(&report);
        }
        Command::Sweep { opts, pool } => {
            let cfg = opts.resolve()?;
            let report = pipeline::sweep(&cfg, pool.as_deref())?;
            print_summary(&report);
        }
    }
    Ok(())
}

fn print_summary(report: &pipeline::RunReport) {
    println!(
        "pool {} samples, {} degraded, mean q {}",
        report.pool.size,
        report.pool.degraded,
        report
            .pool
            .mean_q
            .map_or("n/a".into(), |q| format!("{q:.4}"))
    );
    for t in &report.selections {
        println!(
            "{:<12} qsynt {:.3}: {:>6} selected, synthetic fraction {:.4}",
            t.strategy.to_string(),
            t.qsynt,
            t.selected,
            t.synthetic_fraction
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
