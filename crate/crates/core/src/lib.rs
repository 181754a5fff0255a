//! Evaluation toolkit for fine-tuned LLM-backbone text-to-speech.
//!
//! The crate covers the signal side of speech quality assessment (WADA blind
//! SNR, frame-energy statistics), training-data curation (manifest statistics,
//! energy-variability forecasts, decoding recommendations, mixed-data
//! manifests), score aggregation and comparison reports over externally
//! produced DNS-MOS / speaker-embedding scores, perceptual checkpoint
//! selection, and first-chunk latency / real-time-factor benchmarking of
//! streaming engines.

pub mod audio;
pub mod checkpoint;
pub mod dataset;
pub mod latency;
pub mod report;
pub mod scores;
pub mod signal;
pub mod stats;

pub use audio::{load_wav, AudioClip, AudioError};
pub use signal::{energy_profile, wada_snr, EnergyProfile, FrameSpec, SignalError, SnrEstimate, WadaTable};
