//! Training-data analysis: manifests, per-speaker statistics, variability
//! forecasts, decoding recommendations and mixed-data manifests.

mod forecast;
mod manifest;
mod mix;
mod speaker;

use std::path::PathBuf;

use thiserror::Error;

use crate::audio::AudioError;
use crate::signal::SignalError;

pub use forecast::{
    classify_energy_std, classify_variability, recommend_decoding, AdaptationForecast, DecodingParams, VariabilityClass,
    COLLAPSE_RISK_STD_DB, POSITIVE_EXPECTED_STD_DB,
};
pub use manifest::{Manifest, ManifestEntry};
pub use mix::{build_mix_manifest, MixSpec, MixTarget};
pub use speaker::{speaker_stats, tokenize, SpeakerDatasetStats};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: missing or invalid field `{field}`")]
    SchemaError { line: usize, field: String },
    #[error("duplicate clip id {0}")]
    DuplicateClipId(String),
    #[error("audio file not found: {}", .0.display())]
    MissingAudio(PathBuf),
    #[error("clip {clip_id}: {source}")]
    Audio {
        clip_id: String,
        #[source]
        source: AudioError,
    },
    #[error("clip {clip_id}: {source}")]
    Signal {
        clip_id: String,
        #[source]
        source: SignalError,
    },
    #[error("clip {0} has zero duration")]
    EmptyAudio(String),
    #[error("unknown speaker {0}")]
    UnknownSpeaker(String),
    #[error("no score records for speaker {0}")]
    MissingScores(String),
    #[error("mix selected no clips")]
    EmptyResult,
    #[error("invalid mix target: {0}")]
    InvalidMix(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
