//! `voxgauge` command-line front end.
//!
//! Every subcommand loads its inputs, makes one library call per item and
//! prints the result. Exit status is 0 on success, 1 on domain errors and 2 on
//! usage errors.

mod render;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use voxgauge::checkpoint::{self, CheckpointSeries, RankWeights, DEFAULT_MOS_DROP_THRESHOLD};
use voxgauge::dataset::{self, Manifest, MixSpec, MixTarget};
use voxgauge::latency::{self, BenchConfig, Schedule};
use voxgauge::report::{self, ConditionAggregates, ReportFormat};
use voxgauge::scores::{self, ScoreSet};
use voxgauge::{load_wav, FrameSpec, WadaTable};

const TABLE_ENV: &str = "VOXGAUGE_TABLE_PATH";

#[derive(Debug, Parser)]
#[command(name = "voxgauge", version, about = "Evaluation toolkit for fine-tuned TTS models", arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Blind WADA SNR estimate per WAV file.
    Snr {
        #[arg(required = true)]
        wavs: Vec<PathBuf>,
        #[command(flatten)]
        out: Output,
        #[command(flatten)]
        jobs: Jobs,
    },
    /// Frame-energy mean and spread per WAV file.
    Energy {
        #[arg(required = true)]
        wavs: Vec<PathBuf>,
        #[command(flatten)]
        framing: Framing,
        #[command(flatten)]
        out: Output,
        #[command(flatten)]
        jobs: Jobs,
    },
    /// Per-speaker dataset statistics, variability forecast and decoding advice.
    Analyze {
        manifest: PathBuf,
        /// Restrict to these speakers (default: every speaker, in manifest order).
        #[arg(long = "speaker")]
        speakers: Vec<String>,
        /// Score file supplying per-clip DNS-MOS.
        #[arg(long)]
        scores: Option<PathBuf>,
        #[command(flatten)]
        framing: Framing,
        #[command(flatten)]
        out: Output,
        #[command(flatten)]
        jobs: Jobs,
    },
    /// Aggregate score files per condition and compare them against `base`.
    Eval {
        #[arg(long)]
        speaker: String,
        /// `label=scores.json`; one condition must be labelled `base`.
        #[arg(long = "condition", required = true, value_parser = parse_condition)]
        conditions: Vec<(String, PathBuf)>,
        /// JSON array holding the reference speaker embedding.
        #[arg(long)]
        reference_embedding: Option<PathBuf>,
        /// Keep only score records whose clip belongs to `--speaker` in this manifest.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
        #[command(flatten)]
        jobs: Jobs,
    },
    /// Rank checkpoints by perceptual metrics and flag loss/MOS divergence.
    Select {
        series: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MOS_DROP_THRESHOLD)]
        mos_drop_threshold: f64,
        /// Weights for MOS, similarity and SNR z-scores.
        #[arg(long, default_value = "1,0,0", value_parser = parse_weights)]
        weights: RankWeights,
        #[command(flatten)]
        out: Output,
    },
    /// Build a mixed-speaker manifest, written as JSON lines.
    Mix {
        #[arg(required = true)]
        manifests: Vec<PathBuf>,
        /// `speaker=target`, e.g. `1=2h`, `1401=1/9`, `2=25%`.
        #[arg(long = "take", required = true, value_parser = parse_take)]
        takes: Vec<(String, MixTarget)>,
        /// Shuffle each speaker's clips with this seed before selection.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// First-chunk latency and per-chunk RTF of a streaming engine.
    Bench(BenchArgs),
    /// Re-render saved comparison reports.
    Report {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 1)]
    runs: usize,
    #[arg(long, default_value_t = latency::DEFAULT_TIMEOUT.as_secs_f64())]
    timeout_s: f64,
    /// Count the first run instead of discarding it as warm-up.
    #[arg(long)]
    include_warmup: bool,
    #[arg(long, default_value = "The quick brown fox jumps over the lazy dog.")]
    text: String,
    /// Replay an `<arrival_ms> <audio_ms>` schedule on a virtual clock instead of running an engine.
    #[arg(long, conflicts_with = "engine")]
    schedule: Option<PathBuf>,
    #[command(flatten)]
    out: Output,
    /// Engine command line, after `--`.
    #[arg(last = true, required_unless_present = "schedule")]
    engine: Vec<String>,
}

#[derive(Debug, Args)]
struct Framing {
    #[arg(long, default_value_t = 25.0)]
    frame_ms: f64,
    #[arg(long, default_value_t = 10.0)]
    hop_ms: f64,
}

#[derive(Debug, Args)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Jobs {
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    #[value(name = "table-text", alias = "table", alias = "text")]
    TableText,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
            Format::TableText => ReportFormat::TableText,
        }
    }
}

fn parse_condition(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((label, path)) if !label.is_empty() && !path.is_empty() => Ok((label.to_string(), PathBuf::from(path))),
        _ => Err(format!("expected label=path, got `{s}`")),
    }
}

fn parse_weights(s: &str) -> Result<RankWeights, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [mos, sim, snr] = parts.as_slice() else {
        return Err(format!("expected three comma-separated weights, got `{s}`"));
    };
    let num = |x: &str| x.parse::<f64>().map_err(|_| format!("bad weight `{x}`"));
    Ok(RankWeights::new(num(mos)?, num(sim)?, num(snr)?))
}

fn parse_take(s: &str) -> Result<(String, MixTarget), String> {
    let (speaker, target) = s.split_once('=').ok_or_else(|| format!("expected speaker=target, got `{s}`"))?;
    let target = target.parse::<MixTarget>().map_err(|e| e.to_string())?;
    Ok((speaker.trim().to_string(), target))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Snr { wavs, out, jobs } => {
            let table = wada_table()?;
            let rows = in_pool(jobs.jobs, || {
                wavs.par_iter()
                    .map(|path| -> Result<Value> {
                        let clip = load_wav(path).with_context(|| path.display().to_string())?;
                        let est = table.estimate(&clip).with_context(|| path.display().to_string())?;
                        Ok(json!({
                            "path": path.display().to_string(),
                            "value_db": est.value_db,
                            "method": est.method,
                            "clamped": est.clamped,
                        }))
                    })
                    .collect::<Result<Vec<_>>>()
            })??;
            emit(&out, &render::records(&rows, out.format, &["path", "value_db", "method", "clamped"]))
        }
        Command::Energy { wavs, framing, out, jobs } => {
            let spec = framing.spec()?;
            let rows = in_pool(jobs.jobs, || {
                wavs.par_iter()
                    .map(|path| -> Result<Value> {
                        let clip = load_wav(path).with_context(|| path.display().to_string())?;
                        let p = voxgauge::energy_profile(&clip, spec).with_context(|| path.display().to_string())?;
                        Ok(json!({
                            "path": path.display().to_string(),
                            "frames": p.frame_db.len(),
                            "mean_db": p.mean_db,
                            "std_db": p.std_db,
                        }))
                    })
                    .collect::<Result<Vec<_>>>()
            })??;
            emit(&out, &render::records(&rows, out.format, &["path", "frames", "mean_db", "std_db"]))
        }
        Command::Analyze { manifest, speakers, scores, framing, out, jobs } => {
            let spec = framing.spec()?;
            let manifest = Manifest::load(&manifest)?;
            let scores = scores.map(|p| ScoreSet::load(&p)).transpose()?;
            let speakers: Vec<String> = if speakers.is_empty() {
                manifest.speakers().into_iter().map(str::to_owned).collect()
            } else {
                speakers
            };
            let rows = in_pool(jobs.jobs, || -> Result<Vec<Value>> {
                speakers
                    .iter()
                    .map(|spk| {
                        let stats = dataset::speaker_stats(&manifest, spk, scores.as_ref(), spec)?;
                        let forecast = dataset::classify_variability(&stats);
                        let decoding = dataset::recommend_decoding(&forecast);
                        Ok(json!({ "stats": stats, "forecast": forecast, "decoding": decoding }))
                    })
                    .collect()
            })??;
            emit(&out, &render::analysis(&rows, out.format))
        }
        Command::Eval { speaker, conditions, reference_embedding, manifest, out, jobs } => {
            let reference = reference_embedding.map(|p| read_embedding(&p)).transpose()?;
            let keep = manifest
                .map(|p| -> Result<std::collections::HashSet<String>> {
                    let m = Manifest::load(&p)?;
                    Ok(m.for_speaker(&speaker).map(|e| e.clip_id.clone()).collect())
                })
                .transpose()?;
            let aggregates = in_pool(jobs.jobs, || {
                conditions
                    .par_iter()
                    .map(|(label, path)| -> Result<ConditionAggregates> {
                        let mut set = ScoreSet::load(path)?;
                        if let Some(keep) = &keep {
                            set = set.filter(|id| keep.contains(id));
                        }
                        let metrics = scores::aggregate(&set, reference.as_deref())
                            .with_context(|| format!("condition {label} ({})", path.display()))?;
                        Ok(ConditionAggregates::new(label.clone(), metrics))
                    })
                    .collect::<Result<Vec<_>>>()
            })??;
            let rep = report::comparison_report(speaker, aggregates)?;
            emit(&out, &report::render(&[rep], out.format.into()))
        }
        Command::Select { series, mos_drop_threshold, weights, out } => {
            let series = CheckpointSeries::load(&series)?;
            let ranking = checkpoint::rank_checkpoints(&series.points, weights)?;
            let divergence = match checkpoint::detect_divergence(&series.points, mos_drop_threshold) {
                Ok(finding) => Some(finding),
                Err(checkpoint::CheckpointError::InsufficientData(_)) => None,
                Err(e) => return Err(e.into()),
            };
            let result = json!({
                "selected_step": ranking.first().map(|r| r.step),
                "ranking": ranking,
                "divergence": divergence,
            });
            emit(&out, &render::selection(&result, out.format))
        }
        Command::Mix { manifests, takes, seed, out } => {
            let manifests = manifests.iter().map(Manifest::load).collect::<Result<Vec<_>, _>>()?;
            let spec = MixSpec { targets: takes, shuffle_seed: seed };
            let mixed = dataset::build_mix_manifest(&manifests, &spec)?;
            match out {
                Some(path) => Ok(mixed.write(path)?),
                None => {
                    print!("{}", mixed.to_jsonl());
                    Ok(())
                }
            }
        }
        Command::Bench(args) => {
            let report = match &args.schedule {
                Some(path) => latency::replay_schedule(&Schedule::load(path)?, args.runs)?,
                None => {
                    if !(args.timeout_s > 0.0 && args.timeout_s.is_finite()) {
                        bail!("--timeout-s must be positive");
                    }
                    let mut config = BenchConfig::new(args.engine.clone(), args.text.clone());
                    config.runs = args.runs;
                    config.include_warmup = args.include_warmup;
                    config.timeout = Duration::from_secs_f64(args.timeout_s);
                    latency::run_bench(&config)?
                }
            };
            emit(&args.out, &latency::render_latency(&report, args.out.format.into()))
        }
        Command::Report { reports, out } => {
            let mut all = Vec::new();
            for path in &reports {
                let text = std::fs::read_to_string(path).with_context(|| path.display().to_string())?;
                all.extend(report::parse_reports(&text).with_context(|| path.display().to_string())?);
            }
            emit(&out, &report::render(&all, out.format.into()))
        }
    }
}

impl Framing {
    fn spec(&self) -> Result<FrameSpec> {
        Ok(FrameSpec::new(self.frame_ms, self.hop_ms)?)
    }
}

fn wada_table() -> Result<WadaTable> {
    match std::env::var_os(TABLE_ENV) {
        Some(path) if !path.is_empty() => {
            WadaTable::from_file(&path).with_context(|| format!("{TABLE_ENV}={}", Path::new(&path).display()))
        }
        _ => Ok(WadaTable::builtin().clone()),
    }
}

fn read_embedding(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).with_context(|| path.display().to_string())?;
    serde_json::from_str(&text).with_context(|| format!("{}: expected a JSON array of numbers", path.display()))
}

fn in_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    Ok(pool.install(f))
}

fn emit(out: &Output, text: &str) -> Result<()> {
    match &out.out {
        Some(path) => std::fs::write(path, text).with_context(|| path.display().to_string()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
