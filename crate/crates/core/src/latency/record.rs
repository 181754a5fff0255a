//! Run records, report aggregation and schedule replay.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::LatencyError;
use crate::report::ReportFormat;
use crate::stats::{mean, MeanStd};

/// `elapsed / audio duration`.
pub fn rtf(elapsed_s: f64, audio_duration_s: f64) -> Result<f64, LatencyError> {
    if !(audio_duration_s > 0.0) {
        return Err(LatencyError::ZeroDuration);
    }
    Ok(elapsed_s / audio_duration_s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChunkEvent {
    /// 1-based.
    pub index: usize,
    /// Seconds since the request was sent.
    pub arrival_s: f64,
    pub audio_duration_s: f64,
}

/// Per-chunk RTFs: chunk 1 is `latency / duration`, later chunks use the gap
/// since the previous arrival.
pub fn chunk_rtfs(chunks: &[ChunkEvent]) -> Result<Vec<f64>, LatencyError> {
    let mut prev = 0.0;
    chunks
        .iter()
        .map(|c| {
            let r = rtf(c.arrival_s - prev, c.audio_duration_s);
            prev = c.arrival_s;
            r
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub sample_rate: u32,
    pub chunks: Vec<ChunkEvent>,
    pub chunk_rtf: Vec<f64>,
    pub first_chunk_latency_s: f64,
    /// Request to end marker.
    pub total_time_s: f64,
    /// Sum of chunk durations in arrival order.
    pub total_audio_s: f64,
}

impl RunRecord {
    pub fn new(sample_rate: u32, chunks: Vec<ChunkEvent>, total_time_s: f64) -> Result<Self, LatencyError> {
        let first = chunks.first().ok_or(LatencyError::NoChunks)?;
        let first_chunk_latency_s = first.arrival_s;
        let chunk_rtf = chunk_rtfs(&chunks)?;
        let total_audio_s = chunks.iter().map(|c| c.audio_duration_s).sum();
        Ok(Self {
            sample_rate,
            total_time_s: total_time_s.max(chunks[chunks.len() - 1].arrival_s),
            chunks,
            chunk_rtf,
            first_chunk_latency_s,
            total_audio_s,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub runs: usize,
    pub first_chunk_latency_s: MeanStd,
    /// Mean RTF by chunk position over the runs that reached that chunk.
    pub per_chunk_rtf: Vec<f64>,
    pub total_time_s: f64,
    pub total_audio_s: f64,
    pub run_records: Vec<RunRecord>,
}

impl LatencyReport {
    pub fn from_runs(run_records: Vec<RunRecord>) -> Result<Self, LatencyError> {
        if run_records.is_empty() {
            return Err(LatencyError::InvalidConfig("no measured runs".into()));
        }
        let latencies: Vec<f64> = run_records.iter().map(|r| r.first_chunk_latency_s).collect();
        let max_chunks = run_records.iter().map(|r| r.chunk_rtf.len()).max().unwrap_or(0);
        let per_chunk_rtf = (0..max_chunks)
            .map(|i| {
                let vals: Vec<f64> = run_records.iter().filter_map(|r| r.chunk_rtf.get(i).copied()).collect();
                mean(&vals).expect("at least one run reached this chunk")
            })
            .collect();
        let totals: Vec<f64> = run_records.iter().map(|r| r.total_time_s).collect();
        let audio: Vec<f64> = run_records.iter().map(|r| r.total_audio_s).collect();
        Ok(Self {
            runs: run_records.len(),
            first_chunk_latency_s: MeanStd::of(&latencies).expect("non-empty"),
            per_chunk_rtf,
            total_time_s: mean(&totals).expect("non-empty"),
            total_audio_s: mean(&audio).expect("non-empty"),
            run_records,
        })
    }
}

/// A virtual-clock script: `(arrival_ms, audio_ms)` per chunk.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub chunks: Vec<(f64, f64)>,
}

impl Schedule {
    /// One `<arrival_ms> <audio_ms>` pair per line; `#` comments and blank
    /// lines are skipped.
    pub fn parse(text: &str) -> Result<Self, LatencyError> {
        let mut chunks: Vec<(f64, f64)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: &str| LatencyError::Schedule { line: i + 1, reason: reason.into() };
            let cols: Vec<&str> = line.split_whitespace().collect();
            let [arrival, audio] = cols[..] else {
                return Err(err("expected `<arrival_ms> <audio_ms>`"));
            };
            let arrival: f64 = arrival.parse().map_err(|_| err("arrival is not a number"))?;
            let audio: f64 = audio.parse().map_err(|_| err("audio duration is not a number"))?;
            if !(arrival.is_finite() && arrival >= 0.0) {
                return Err(err("arrival must be finite and nonnegative"));
            }
            if !(audio.is_finite() && audio > 0.0) {
                return Err(err("audio duration must be positive"));
            }
            if chunks.last().is_some_and(|&(prev, _)| arrival <= prev) {
                return Err(err("arrivals must be strictly increasing"));
            }
            chunks.push((arrival, audio));
        }
        if chunks.is_empty() {
            return Err(LatencyError::Schedule { line: 0, reason: "no chunks".into() });
        }
        Ok(Self { chunks })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LatencyError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(LatencyError::Io)?;
        Self::parse(&text)
    }

    pub fn events(&self) -> Vec<ChunkEvent> {
        self.chunks
            .iter()
            .enumerate()
            .map(|(i, &(arrival, audio))| ChunkEvent {
                index: i + 1,
                arrival_s: arrival / 1000.0,
                audio_duration_s: audio / 1000.0,
            })
            .collect()
    }
}

/// Replays a schedule `runs` times on a virtual clock. Total time is the last
/// arrival. The output is fully deterministic.
pub fn replay_schedule(schedule: &Schedule, runs: usize) -> Result<LatencyReport, LatencyError> {
    if runs == 0 {
        return Err(LatencyError::InvalidConfig("runs must be at least 1".into()));
    }
    let events = schedule.events();
    let total = events[events.len() - 1].arrival_s;
    let record = RunRecord::new(0, events, total)?;
    LatencyReport::from_runs(vec![record; runs])
}

const LATENCY_CSV_HEADER: &str = "metric,chunk,value";

fn summary_rows(r: &LatencyReport) -> Vec<(&'static str, Option<usize>, String)> {
    let mut rows = vec![
        ("runs", None, r.runs.to_string()),
        ("first_chunk_latency_mean_s", None, format!("{:.4}", r.first_chunk_latency_s.mean)),
        ("first_chunk_latency_std_s", None, format!("{:.4}", r.first_chunk_latency_s.std)),
        ("total_time_s", None, format!("{:.4}", r.total_time_s)),
        ("total_audio_s", None, format!("{:.4}", r.total_audio_s)),
    ];
    for (i, v) in r.per_chunk_rtf.iter().enumerate() {
        rows.push(("chunk_rtf", Some(i + 1), format!("{v:.4}")));
    }
    rows
}

/// Renders a report. Text and CSV print four decimals, which is the
/// precision RTFs are usually quoted at; JSON keeps everything.
pub fn render_latency(report: &LatencyReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Csv => {
            let mut s = format!("{LATENCY_CSV_HEADER}\n");
            for (metric, chunk, value) in summary_rows(report) {
                let chunk = chunk.map(|c| c.to_string()).unwrap_or_default();
                let _ = writeln!(s, "{metric},{chunk},{value}");
            }
            s
        }
        ReportFormat::TableText => {
            let rows: Vec<(String, String)> = summary_rows(report)
                .into_iter()
                .map(|(m, c, v)| (c.map(|c| format!("{m}[{c}]")).unwrap_or_else(|| m.to_string()), v))
                .collect();
            let w = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            rows.iter().map(|(k, v)| format!("{k:<w$}  {v}\n")).collect()
        }
    }
}
