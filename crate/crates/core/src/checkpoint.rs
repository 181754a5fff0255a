//! Checkpoint advice: loss/quality divergence and perceptual ranking.
//!
//! Loss values are only used to find windows where training kept improving
//! by its own measure. They never enter the ranking score.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::stats::{mean, sample_std};

pub const DEFAULT_MOS_DROP_THRESHOLD: f64 = 0.2;

#[derive(Debug, Error, PartialEq)]
pub enum CheckpointError {
    #[error("need at least two points with both val_loss and mos, found {0}")]
    InsufficientData(usize),
    #[error("step {step} has no `{metric}` but its weight is nonzero")]
    MissingMetric { step: u64, metric: &'static str },
    #[error("weights must be finite, nonnegative and not all zero")]
    DegenerateWeights,
    #[error("steps must be strictly increasing (step {0} follows a later or equal step)")]
    NonMonotonicSteps(u64),
    #[error("step {step}: {reason}")]
    InvalidPoint { step: u64, reason: String },
    #[error("invalid threshold {0}")]
    InvalidThreshold(f64),
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
    #[error("checkpoint series: {0}")]
    Schema(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointPoint {
    pub step: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub val_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mos: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity_01: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
}

impl CheckpointPoint {
    pub fn new(step: u64) -> Self {
        Self { step, ..Self::default() }
    }

    pub fn with_val_loss(mut self, loss: f64) -> Self {
        self.val_loss = Some(loss);
        self
    }

    pub fn with_mos(mut self, mos: f64) -> Self {
        self.mos = Some(mos);
        self
    }

    pub fn with_similarity(mut self, sim: f64) -> Self {
        self.similarity_01 = Some(sim);
        self
    }

    pub fn with_snr(mut self, snr_db: f64) -> Self {
        self.snr_db = Some(snr_db);
        self
    }
}

/// Descriptive run metadata. Never used in any computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingRunMeta {
    pub adapter_rank: u32,
    pub adapter_alpha: f64,
    pub batch_size: u32,
    pub epochs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointSeries {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<TrainingRunMeta>,
    pub points: Vec<CheckpointPoint>,
}

impl CheckpointSeries {
    /// Accepts a bare array of points, an array whose first element is the
    /// run metadata, or `{"meta": ..., "points": [...]}`.
    pub fn parse(text: &str) -> Result<Self, CheckpointError> {
        let schema = |e: serde_json::Error| CheckpointError::Schema(e.to_string());
        let value: Value = serde_json::from_str(text).map_err(schema)?;
        let series = match value {
            Value::Array(mut items) => {
                let meta = match items.first() {
                    Some(Value::Object(o)) if !o.contains_key("step") => {
                        Some(serde_json::from_value(items.remove(0)).map_err(schema)?)
                    }
                    _ => None,
                };
                let points = serde_json::from_value(Value::Array(items)).map_err(schema)?;
                Self { meta, points }
            }
            other => serde_json::from_value(other).map_err(schema)?,
        };
        series.validate()?;
        Ok(series)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CheckpointError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| CheckpointError::Io { path: path.display().to_string(), reason: e.to_string() })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), CheckpointError> {
        if let Some(m) = &self.meta {
            if m.adapter_rank == 0 || m.batch_size == 0 || !(m.adapter_alpha > 0.0) || !(m.epochs > 0.0) {
                return Err(CheckpointError::Schema("run metadata values must be positive".into()));
            }
        }
        validate_points(&self.points)
    }
}

fn validate_points(points: &[CheckpointPoint]) -> Result<(), CheckpointError> {
    let mut prev = None;
    for p in points {
        validate_point(prev, p)?;
        prev = Some(p.step);
    }
    Ok(())
}

#[inline]
fn validate_point(prev_step: Option<u64>, p: &CheckpointPoint) -> Result<(), CheckpointError> {
    if prev_step.is_some_and(|s| p.step <= s) {
        return Err(CheckpointError::NonMonotonicSteps(p.step));
    }
    let bad_loss = |l: Option<f64>| l.is_some_and(|l| !(l.is_finite() && l >= 0.0));
    if bad_loss(p.train_loss) || bad_loss(p.val_loss) {
        return Err(CheckpointError::InvalidPoint { step: p.step, reason: "losses must be finite and nonnegative".into() });
    }
    let bad_metric = |v: Option<f64>| v.is_some_and(|v| !v.is_finite());
    if bad_metric(p.mos) || bad_metric(p.similarity_01) || bad_metric(p.snr_db) {
        return Err(CheckpointError::InvalidPoint { step: p.step, reason: "metrics must be finite".into() });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceFinding {
    pub diverged: bool,
    /// `(step_start, step_end)` of the reported window.
    pub window: Option<(u64, u64)>,
    pub mos_drop: f64,
    pub loss_drop: f64,
}

impl DivergenceFinding {
    fn none() -> Self {
        Self { diverged: false, window: None, mos_drop: 0.0, loss_drop: 0.0 }
    }
}

/// Looks for a window where validation loss never rises and falls overall
/// while MOS falls by at least `threshold`. A drop must also be strictly
/// positive, so a zero threshold still ignores flat MOS.
///
/// Only points carrying both `val_loss` and `mos` take part; windows are
/// contiguous over those points. Among qualifying windows the largest MOS
/// drop wins, then the earliest start, then the earliest end.
pub fn detect_divergence(series: &[CheckpointPoint], threshold: f64) -> Result<DivergenceFinding, CheckpointError> {
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(CheckpointError::InvalidThreshold(threshold));
    }
    // A point eligible to start a window: (step, loss, mos).
    type Start = (u64, f64, f64);
    // Keeps the earlier point on equal MOS, so starts stay earliest.
    fn higher(a: Option<Start>, b: Start) -> Start {
        match a {
            Some(a) if a.2 >= b.2 => a,
            _ => b,
        }
    }

    let mut usable = 0usize;
    let mut prev: Option<Start> = None;
    // Best start among points whose loss is strictly above the current
    // plateau, within the current non-rising run.
    let mut candidate: Option<Start> = None;
    // Best start within the current plateau of equal loss.
    let mut plateau: Option<Start> = None;
    let mut best: Option<(f64, Start, Start)> = None;
    let mut prev_step = None;
    for p in series {
        validate_point(prev_step, p)?;
        prev_step = Some(p.step);
        let (Some(loss), Some(mos)) = (p.val_loss, p.mos) else { continue };
        let here = (p.step, loss, mos);
        usable += 1;
        match prev {
            None => plateau = Some(here),
            Some((_, prev_loss, _)) if loss > prev_loss => {
                candidate = None;
                plateau = Some(here);
            }
            Some((_, prev_loss, _)) if loss < prev_loss => {
                candidate = plateau.map(|pl| higher(candidate, pl));
                plateau = Some(here);
            }
            Some(_) => plateau = Some(higher(plateau, here)),
        }
        if let Some(start) = candidate {
            let drop = start.2 - mos;
            if drop > 0.0 && drop >= threshold {
                let better = match best {
                    None => true,
                    Some((d, s, _)) => drop > d || (drop == d && start.0 < s.0),
                };
                if better {
                    best = Some((drop, start, here));
                }
            }
        }
        prev = Some(here);
    }
    if usable < 2 {
        return Err(CheckpointError::InsufficientData(usable));
    }

    Ok(match best {
        None => DivergenceFinding::none(),
        Some((drop, start, end)) => DivergenceFinding {
            diverged: true,
            window: Some((start.0, end.0)),
            mos_drop: drop,
            loss_drop: start.1 - end.1,
        },
    })
}

/// Nonnegative weights for MOS, similarity and SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankWeights {
    pub mos: f64,
    pub similarity: f64,
    pub snr: f64,
}

impl Default for RankWeights {
    fn default() -> Self {
        Self { mos: 1.0, similarity: 0.0, snr: 0.0 }
    }
}

impl RankWeights {
    pub fn new(mos: f64, similarity: f64, snr: f64) -> Self {
        Self { mos, similarity, snr }
    }

    fn validate(&self) -> Result<(), CheckpointError> {
        let w = [self.mos, self.similarity, self.snr];
        if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || w.iter().all(|x| *x == 0.0) {
            return Err(CheckpointError::DegenerateWeights);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedCheckpoint {
    pub step: u64,
    pub score: f64,
}

fn z_scores(values: &[f64]) -> Vec<f64> {
    let m = mean(values).unwrap_or(0.0);
    let s = sample_std(values).unwrap_or(0.0);
    values.iter().map(|v| if s > 0.0 { (v - m) / s } else { 0.0 }).collect()
}

/// Ranks checkpoints by a weighted sum of per-metric z-scores, best first.
/// Equal scores keep the earlier step first.
pub fn rank_checkpoints(
    series: &[CheckpointPoint],
    weights: RankWeights,
) -> Result<Vec<RankedCheckpoint>, CheckpointError> {
    weights.validate()?;
    validate_points(series)?;
    if series.is_empty() {
        return Err(CheckpointError::InsufficientData(0));
    }
    let mut scores = vec![0.0; series.len()];
    let metrics: [(&'static str, f64, fn(&CheckpointPoint) -> Option<f64>); 3] = [
        ("mos", weights.mos, |p| p.mos),
        ("similarity_01", weights.similarity, |p| p.similarity_01),
        ("snr_db", weights.snr, |p| p.snr_db),
    ];
    for (name, w, get) in metrics {
        if w == 0.0 {
            continue;
        }
        let values = series
            .iter()
            .map(|p| get(p).ok_or(CheckpointError::MissingMetric { step: p.step, metric: name }))
            .collect::<Result<Vec<_>, _>>()?;
        for (s, z) in scores.iter_mut().zip(z_scores(&values)) {
            *s += w * z;
        }
    }
    let mut ranked: Vec<RankedCheckpoint> =
        series.iter().zip(scores).map(|(p, score)| RankedCheckpoint { step: p.step, score }).collect();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.step.cmp(&b.step)));
    Ok(ranked)
}
