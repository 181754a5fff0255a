//! WADA blind SNR estimation.
//!
//! The estimator measures how far the waveform amplitude distribution is from
//! a Gaussian. For magnitudes `m` (normalized by the clip peak and floored at
//! `1e-10`) it computes `beta = ln(mean(m)) - mean(ln(m))`, which is invariant
//! to gain, and maps `beta` to an SNR through a lookup table built for
//! Gamma(0.4)-amplitude speech in Gaussian noise. Exact zero samples are
//! skipped so digital-silence padding does not dominate the statistic.

use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::SignalError;
use crate::audio::AudioClip;

/// Minimum clip duration accepted by [`wada_snr`].
pub const MIN_DURATION_S: f64 = 0.1;

const MAGNITUDE_FLOOR: f64 = 1e-10;

static BUILTIN_TABLE: &str = include_str!("../../data/wada_table.txt");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrEstimate {
    pub value_db: f64,
    pub method: String,
    /// True when `beta` fell on or outside the table span.
    pub clamped: bool,
}

/// Monotone `beta -> SNR` lookup table.
#[derive(Debug, Clone, PartialEq)]
pub struct WadaTable {
    snr_db: Vec<f64>,
    beta: Vec<f64>,
}

impl WadaTable {
    /// The table shipped with the crate.
    pub fn builtin() -> &'static WadaTable {
        static TABLE: OnceLock<WadaTable> = OnceLock::new();
        TABLE.get_or_init(|| WadaTable::parse(BUILTIN_TABLE).expect("shipped WADA table is valid"))
    }

    /// Parses the two-column text format (`snr_db beta` per line). Blank lines
    /// and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self, SignalError> {
        let mut snr_db = Vec::new();
        let mut beta = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || SignalError::Table(format!("line {}: expected `snr_db beta`", i + 1));
            let mut cols = line.split_whitespace();
            let s: f64 = cols.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let b: f64 = cols.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if cols.next().is_some() || !s.is_finite() || !b.is_finite() {
                return Err(bad());
            }
            snr_db.push(s);
            beta.push(b);
        }
        if snr_db.len() < 2 {
            return Err(SignalError::Table("table needs at least two rows".into()));
        }
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if !increasing(&snr_db) || !increasing(&beta) {
            return Err(SignalError::Table("columns must be strictly increasing".into()));
        }
        Ok(Self { snr_db, beta })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, SignalError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| SignalError::Table(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// `(snr_db, beta)` rows in ascending order.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.snr_db.iter().copied().zip(self.beta.iter().copied())
    }

    pub fn snr_range(&self) -> (f64, f64) {
        (self.snr_db[0], self.snr_db[self.snr_db.len() - 1])
    }

    /// Maps `beta` to SNR by linear interpolation, clamping at both ends.
    pub fn lookup(&self, beta: f64) -> (f64, bool) {
        let last = self.beta.len() - 1;
        if beta <= self.beta[0] {
            return (self.snr_db[0], true);
        }
        if beta >= self.beta[last] {
            return (self.snr_db[last], true);
        }
        let hi = self.beta.partition_point(|&b| b <= beta);
        let lo = hi - 1;
        let t = (beta - self.beta[lo]) / (self.beta[hi] - self.beta[lo]);
        (self.snr_db[lo] + t * (self.snr_db[hi] - self.snr_db[lo]), false)
    }

    pub fn estimate(&self, clip: &AudioClip) -> Result<SnrEstimate, SignalError> {
        let samples: Vec<f64> = clip.samples().iter().map(|&s| s as f64).collect();
        self.estimate_samples(&samples, clip.sample_rate())
    }

    /// Same as [`estimate`](Self::estimate) on raw `f64` samples.
    pub fn estimate_samples(&self, samples: &[f64], sample_rate: u32) -> Result<SnrEstimate, SignalError> {
        let beta = amplitude_statistic(samples, sample_rate)?;
        let (value_db, clamped) = self.lookup(beta);
        Ok(SnrEstimate { value_db, method: "wada".into(), clamped })
    }
}

/// The gain-invariant statistic `ln(mean(m)) - mean(ln(m))`.
pub fn amplitude_statistic(samples: &[f64], sample_rate: u32) -> Result<f64, SignalError> {
    if sample_rate == 0 || (samples.len() as f64) < MIN_DURATION_S * sample_rate as f64 {
        return Err(SignalError::DegenerateSignal(format!(
            "need at least {MIN_DURATION_S} s of audio, got {} samples",
            samples.len()
        )));
    }
    let peak = samples.iter().fold(0.0f64, |p, s| p.max(s.abs()));
    if peak == 0.0 || !peak.is_finite() {
        return Err(SignalError::DegenerateSignal("all samples are zero".into()));
    }
    let (mut sum, mut sum_ln, mut count) = (0.0f64, 0.0f64, 0usize);
    for m in samples.iter().filter(|s| **s != 0.0).map(|s| (s.abs() / peak).max(MAGNITUDE_FLOOR)) {
        sum += m;
        sum_ln += m.ln();
        count += 1;
    }
    let n = count as f64;
    Ok((sum / n).ln() - sum_ln / n)
}

/// WADA SNR with the built-in table.
pub fn wada_snr(clip: &AudioClip) -> Result<SnrEstimate, SignalError> {
    WadaTable::builtin().estimate(clip)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_table_spans_grid() {
        let t = WadaTable::builtin();
        assert_eq!(t.snr_range(), (-20.0, 100.0));
        assert_eq!(t.rows().count(), 121);
    }

    #[test]
    fn lookup_clamps_and_interpolates() {
        let t = WadaTable::parse("0 1.0\n10 2.0\n20 4.0\n").unwrap();
        assert_eq!(t.lookup(0.5), (0.0, true));
        assert_eq!(t.lookup(1.0), (0.0, true));
        assert_eq!(t.lookup(4.0), (20.0, true));
        assert_eq!(t.lookup(9.0), (20.0, true));
        assert_eq!(t.lookup(1.5), (5.0, false));
        assert_eq!(t.lookup(3.0), (15.0, false));
        assert_eq!(t.lookup(2.0), (10.0, false));
    }

    #[test]
    fn table_must_be_monotone() {
        assert!(WadaTable::parse("0 1.0\n1 0.9\n").is_err());
        assert!(WadaTable::parse("0 1.0\n").is_err());
        assert!(WadaTable::parse("0 1.0 3\n1 2\n").is_err());
    }

    #[test]
    fn silence_is_degenerate() {
        let clip = AudioClip::new(vec![0.0; 16_000], 16_000, "z").unwrap();
        assert!(matches!(wada_snr(&clip), Err(SignalError::DegenerateSignal(_))));
    }

    #[test]
    fn short_clip_is_degenerate() {
        let clip = AudioClip::new(vec![0.1; 1_599], 16_000, "z").unwrap();
        assert!(matches!(wada_snr(&clip), Err(SignalError::DegenerateSignal(_))));
    }
}
