//! Reference-free signal metrics: WADA blind SNR and frame-energy profiles.

mod energy;
mod wada;

use thiserror::Error;

pub use energy::{energy_profile, frame_levels_db, EnergyProfile, FrameSpec, SILENCE_FLOOR_DB};
pub use wada::{amplitude_statistic, wada_snr, SnrEstimate, WadaTable, MIN_DURATION_S};

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),
    #[error("clip too short: {samples} samples, frame needs {frame_len}")]
    ClipTooShort { samples: usize, frame_len: usize },
    #[error("invalid framing: {0}")]
    InvalidFraming(String),
    #[error("lookup table: {0}")]
    Table(String),
}
