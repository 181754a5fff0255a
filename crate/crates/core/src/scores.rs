//! Score-file contract with the neural scoring sidecar, embedding similarity,
//! and aggregation of per-clip scores.
//!
//! A score file is a UTF-8 JSON array of records:
//!
//! ```json
//! [{"clip_id": "spk2_0001", "dnsmos_ovrl": 3.91, "snr_db": 31.2, "embedding": [0.12, -0.04]}]
//! ```
//!
//! Every field but `clip_id` is optional, but each record must carry at least
//! one of `dnsmos_ovrl`, `snr_db`, `embedding` or `error` (the sidecar's marker
//! for a clip it failed to score). The first embedding fixes the dimension for
//! the whole file. The array may also be wrapped in an object as
//! `{"records": [...], ...}`; the other keys are kept as metadata.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::stats;

#[derive(Debug, Error, PartialEq)]
pub enum ScoreError {
    #[error("schema error in record {index}: {reason}")]
    SchemaError { index: usize, reason: String },
    #[error("embedding dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("duplicate clip id {0}")]
    DuplicateClipId(String),
    #[error("zero-norm embedding")]
    ZeroVector,
    #[error("score set is empty")]
    EmptySet,
    #[error("no record carries {0}")]
    MissingField(String),
    #[error("cannot read score file {path}: {reason}")]
    Io { path: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRecord {
    pub clip_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dnsmos_ovrl: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ScoreRecord {
    pub fn new(clip_id: impl Into<String>) -> Self {
        Self { clip_id: clip_id.into(), dnsmos_ovrl: None, snr_db: None, embedding: None, error: None }
    }

    pub fn with_mos(mut self, mos: f64) -> Self {
        self.dnsmos_ovrl = Some(mos);
        self
    }

    pub fn with_snr(mut self, snr_db: f64) -> Self {
        self.snr_db = Some(snr_db);
        self
    }

    pub fn with_embedding(mut self, embedding: Vec<f64>) -> Self {
        self.embedding = Some(embedding);
        self
    }

    fn is_failed(&self) -> bool {
        self.error.is_some()
    }

    fn validate(&self, index: usize) -> Result<(), ScoreError> {
        let schema = |reason: &str| ScoreError::SchemaError { index, reason: reason.to_string() };
        if self.clip_id.is_empty() {
            return Err(schema("empty clip_id"));
        }
        if self.dnsmos_ovrl.is_none() && self.snr_db.is_none() && self.embedding.is_none() && self.error.is_none() {
            return Err(schema("record carries no score"));
        }
        if let Some(m) = self.dnsmos_ovrl {
            if !(1.0..=5.0).contains(&m) {
                return Err(schema("dnsmos_ovrl outside [1, 5]"));
            }
        }
        if self.snr_db.is_some_and(|s| !s.is_finite()) {
            return Err(schema("snr_db is not finite"));
        }
        if let Some(e) = &self.embedding {
            if e.is_empty() {
                return Err(schema("empty embedding"));
            }
            if e.iter().any(|v| !v.is_finite()) {
                return Err(schema("embedding has non-finite entries"));
            }
        }
        Ok(())
    }
}

/// Validated score records keyed by clip id, in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreSet {
    records: Vec<ScoreRecord>,
    index: HashMap<String, usize>,
    metadata: serde_json::Map<String, Value>,
}

impl ScoreSet {
    pub fn from_records(records: Vec<ScoreRecord>) -> Result<Self, ScoreError> {
        let mut index = HashMap::with_capacity(records.len());
        let mut dim = None;
        for (i, r) in records.iter().enumerate() {
            r.validate(i)?;
            if let Some(e) = &r.embedding {
                match dim {
                    None => dim = Some(e.len()),
                    Some(d) if d != e.len() => {
                        return Err(ScoreError::DimensionMismatch { expected: d, found: e.len() });
                    }
                    _ => {}
                }
            }
            if index.insert(r.clip_id.clone(), i).is_some() {
                return Err(ScoreError::DuplicateClipId(r.clip_id.clone()));
            }
        }
        Ok(Self { records, index, metadata: Default::default() })
    }

    pub fn parse(text: &str) -> Result<Self, ScoreError> {
        let top: Value = serde_json::from_str(text)
            .map_err(|e| ScoreError::SchemaError { index: 0, reason: format!("invalid JSON: {e}") })?;
        let (items, metadata) = match top {
            Value::Array(items) => (items, serde_json::Map::new()),
            Value::Object(mut obj) => match obj.remove("records") {
                Some(Value::Array(items)) => (items, obj),
                _ => {
                    return Err(ScoreError::SchemaError {
                        index: 0,
                        reason: "expected an array of records or an object with a `records` array".into(),
                    })
                }
            },
            _ => {
                return Err(ScoreError::SchemaError { index: 0, reason: "expected a JSON array".into() });
            }
        };
        let records = items
            .into_iter()
            .enumerate()
            .map(|(index, v)| {
                serde_json::from_value::<ScoreRecord>(v)
                    .map_err(|e| ScoreError::SchemaError { index, reason: e.to_string() })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut set = Self::from_records(records)?;
        set.metadata = metadata;
        Ok(set)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScoreError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScoreError::Io { path: path.display().to_string(), reason: e.to_string() })?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.records).expect("score records serialize")
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, clip_id: &str) -> Option<&ScoreRecord> {
        self.index.get(clip_id).map(|&i| &self.records[i])
    }

    pub fn records(&self) -> &[ScoreRecord] {
        &self.records
    }

    pub fn metadata(&self) -> &serde_json::Map<String, Value> {
        &self.metadata
    }

    /// Embedding dimension declared by the first record that has one.
    pub fn embedding_dim(&self) -> Option<usize> {
        self.records.iter().find_map(|r| r.embedding.as_ref().map(Vec::len))
    }

    /// Keeps only the records whose clip id satisfies `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&str) -> bool) -> ScoreSet {
        let records: Vec<_> = self.records.iter().filter(|r| keep(&r.clip_id)).cloned().collect();
        let mut set = ScoreSet::from_records(records).expect("subset of a valid set is valid");
        set.metadata = self.metadata.clone();
        set
    }
}

/// Cosine similarity mapped linearly from `[-1, 1]` onto `[0, 1]`.
pub fn similarity_01(a: &[f64], b: &[f64]) -> Result<f64, ScoreError> {
    if a.len() != b.len() {
        return Err(ScoreError::DimensionMismatch { expected: a.len(), found: b.len() });
    }
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(ScoreError::ZeroVector);
    }
    let cos = (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0);
    Ok((cos + 1.0) / 2.0)
}

/// Mean and spread of the scores of one condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub n: usize,
    #[serde(default)]
    pub mos_mean: Option<f64>,
    #[serde(default)]
    pub mos_std: Option<f64>,
    #[serde(default)]
    pub snr_mean_db: Option<f64>,
    #[serde(default)]
    pub similarity_mean: Option<f64>,
}

impl AggregateMetrics {
    /// Aggregates built from published means rather than raw scores.
    pub fn from_means(n: usize, mos: Option<f64>, snr_db: Option<f64>, similarity: Option<f64>) -> Self {
        Self { n, mos_mean: mos, mos_std: None, snr_mean_db: snr_db, similarity_mean: similarity }
    }
}

/// Means and sample deviations over the records that carry each field. Records
/// flagged with `error` are skipped. With a reference embedding, every
/// remaining record must carry an embedding.
pub fn aggregate(scores: &ScoreSet, reference_embedding: Option<&[f64]>) -> Result<AggregateMetrics, ScoreError> {
    let usable: Vec<&ScoreRecord> = scores.records().iter().filter(|r| !r.is_failed()).collect();
    if usable.is_empty() {
        return Err(ScoreError::EmptySet);
    }
    let mos: Vec<f64> = usable.iter().filter_map(|r| r.dnsmos_ovrl).collect();
    let snr: Vec<f64> = usable.iter().filter_map(|r| r.snr_db).collect();
    let similarity = match reference_embedding {
        None => None,
        Some(reference) => {
            let sims = usable
                .iter()
                .map(|r| {
                    let e = r.embedding.as_deref().ok_or_else(|| ScoreError::MissingField(format!("embedding for {}", r.clip_id)))?;
                    similarity_01(e, reference)
                })
                .collect::<Result<Vec<_>, _>>()?;
            stats::mean(&sims)
        }
    };
    if mos.is_empty() && snr.is_empty() && similarity.is_none() {
        return Err(ScoreError::MissingField("dnsmos_ovrl, snr_db or embedding".into()));
    }
    Ok(AggregateMetrics {
        n: usable.len(),
        mos_mean: stats::mean(&mos),
        mos_std: stats::sample_std(&mos),
        snr_mean_db: stats::mean(&snr),
        similarity_mean: similarity,
    })
}
