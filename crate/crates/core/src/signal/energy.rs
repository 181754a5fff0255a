//! Frame-level RMS energy in dBFS.

use serde::{Deserialize, Serialize};

use super::SignalError;
use crate::audio::AudioClip;
use crate::stats;

/// Level assigned to frames whose RMS is below `1e-6`.
pub const SILENCE_FLOOR_DB: f64 = -120.0;
const RMS_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameSpec {
    pub frame_ms: f64,
    pub hop_ms: f64,
}

impl Default for FrameSpec {
    fn default() -> Self {
        Self { frame_ms: 25.0, hop_ms: 10.0 }
    }
}

impl FrameSpec {
    pub fn new(frame_ms: f64, hop_ms: f64) -> Result<Self, SignalError> {
        let spec = Self { frame_ms, hop_ms };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), SignalError> {
        if !(self.frame_ms.is_finite() && self.hop_ms.is_finite()) || self.hop_ms <= 0.0 || self.hop_ms > self.frame_ms {
            return Err(SignalError::InvalidFraming(format!(
                "need 0 < hop ({} ms) <= frame ({} ms)",
                self.hop_ms, self.frame_ms
            )));
        }
        Ok(())
    }

    /// Frame and hop lengths in samples at `sample_rate`.
    pub fn lengths(&self, sample_rate: u32) -> Result<(usize, usize), SignalError> {
        self.validate()?;
        let to_samples = |ms: f64| (ms * sample_rate as f64 / 1000.0).round() as usize;
        let (frame, hop) = (to_samples(self.frame_ms), to_samples(self.hop_ms));
        if hop == 0 {
            return Err(SignalError::InvalidFraming(format!(
                "hop of {} ms is shorter than one sample at {sample_rate} Hz",
                self.hop_ms
            )));
        }
        Ok((frame, hop))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyProfile {
    pub frame_db: Vec<f64>,
    pub mean_db: f64,
    pub std_db: f64,
    pub frame_ms: f64,
    pub hop_ms: f64,
}

impl EnergyProfile {
    /// Builds a profile from already computed frame levels, e.g. frames pooled
    /// over several clips.
    pub fn from_frames(frame_db: Vec<f64>, spec: FrameSpec) -> Option<Self> {
        let summary = stats::MeanStd::of(&frame_db)?;
        Some(Self { frame_db, mean_db: summary.mean, std_db: summary.std, frame_ms: spec.frame_ms, hop_ms: spec.hop_ms })
    }
}

/// Per-frame RMS levels. The trailing partial frame is dropped.
pub fn frame_levels_db(clip: &AudioClip, spec: FrameSpec) -> Result<Vec<f64>, SignalError> {
    let (frame_len, hop_len) = spec.lengths(clip.sample_rate())?;
    let samples = clip.samples();
    if frame_len == 0 || samples.len() < frame_len {
        return Err(SignalError::ClipTooShort { samples: samples.len(), frame_len });
    }
    let count = (samples.len() - frame_len) / hop_len + 1;
    Ok((0..count)
        .map(|i| {
            let frame = &samples[i * hop_len..i * hop_len + frame_len];
            let power = frame.iter().map(|&s| (s as f64) * (s as f64)).sum::<f64>() / frame_len as f64;
            20.0 * power.sqrt().max(RMS_FLOOR).log10()
        })
        .collect())
}

pub fn energy_profile(clip: &AudioClip, spec: FrameSpec) -> Result<EnergyProfile, SignalError> {
    let frames = frame_levels_db(clip, spec)?;
    Ok(EnergyProfile::from_frames(frames, spec).expect("at least one frame"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clip(samples: Vec<f32>, rate: u32) -> AudioClip {
        AudioClip::new(samples, rate, "t").unwrap()
    }

    #[test]
    fn full_scale_sine_is_minus_three_db() {
        let rate = 16_000;
        let s: Vec<f32> = (0..rate)
            .map(|i| (2.0 * std::f64::consts::PI * 1000.0 * i as f64 / rate as f64).sin() as f32)
            .collect();
        let p = energy_profile(&clip(s, rate), FrameSpec::default()).unwrap();
        assert!((p.mean_db + 3.0103).abs() < 0.05, "{}", p.mean_db);
        assert!(p.std_db <= 0.1);
    }

    #[test]
    fn silence_clamps_at_floor() {
        let p = energy_profile(&clip(vec![0.0; 8_000], 16_000), FrameSpec::default()).unwrap();
        assert!(p.frame_db.iter().all(|&d| d == SILENCE_FLOOR_DB));
        assert_eq!(p.std_db, 0.0);
    }

    #[test]
    fn frame_count_formula() {
        // 25 ms / 10 ms at 16 kHz = 400 / 160 samples.
        for n in [400usize, 401, 559, 560, 16_000, 16_123] {
            let p = energy_profile(&clip(vec![0.1; n], 16_000), FrameSpec::default()).unwrap();
            assert_eq!(p.frame_db.len(), (n - 400) / 160 + 1, "n = {n}");
        }
    }

    #[test]
    fn too_short_and_bad_framing() {
        let c = clip(vec![0.1; 399], 16_000);
        assert!(matches!(energy_profile(&c, FrameSpec::default()), Err(SignalError::ClipTooShort { .. })));
        assert!(FrameSpec::new(10.0, 20.0).is_err());
        assert!(FrameSpec::new(10.0, 0.0).is_err());
    }
}
