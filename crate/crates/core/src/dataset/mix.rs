//! Mixed-data manifests: per-speaker hour or fraction budgets.

use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DatasetError, Manifest, ManifestEntry};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixTarget {
    Hours(f64),
    Fraction(f64),
}

impl MixTarget {
    fn validate(&self) -> Result<(), DatasetError> {
        match *self {
            MixTarget::Hours(h) if h > 0.0 && h.is_finite() => Ok(()),
            MixTarget::Fraction(f) if f > 0.0 && f <= 1.0 => Ok(()),
            other => Err(DatasetError::InvalidMix(format!("{other:?}"))),
        }
    }
}

impl FromStr for MixTarget {
    type Err = DatasetError;

    /// `2h` or `0.5h` for hours; `2/9`, `25%` or `0.25` for a fraction.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DatasetError::InvalidMix(s.to_string());
        let s = s.trim();
        let target = if let Some(h) = s.strip_suffix('h') {
            MixTarget::Hours(h.parse().map_err(|_| bad())?)
        } else if let Some(p) = s.strip_suffix('%') {
            MixTarget::Fraction(p.parse::<f64>().map_err(|_| bad())? / 100.0)
        } else if let Some((num, den)) = s.split_once('/') {
            let num: f64 = num.parse().map_err(|_| bad())?;
            let den: f64 = den.parse().map_err(|_| bad())?;
            MixTarget::Fraction(num / den)
        } else {
            MixTarget::Fraction(s.parse().map_err(|_| bad())?)
        };
        target.validate().map_err(|_| bad())?;
        Ok(target)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MixSpec {
    pub targets: Vec<(String, MixTarget)>,
    /// When set, each speaker's clips are shuffled with this seed before the
    /// first-fit selection.
    #[serde(default)]
    pub shuffle_seed: Option<u64>,
}

impl MixSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn take(mut self, speaker_id: impl Into<String>, target: MixTarget) -> Self {
        self.targets.push((speaker_id.into(), target));
        self
    }

    /// Parses `speaker=target` items such as `1=2h` or `1401=1/9`.
    pub fn parse_items<S: AsRef<str>>(items: &[S]) -> Result<Self, DatasetError> {
        let mut spec = Self::new();
        for item in items {
            let item = item.as_ref();
            let (speaker, target) =
                item.split_once('=').ok_or_else(|| DatasetError::InvalidMix(item.to_string()))?;
            spec.targets.push((speaker.trim().to_string(), target.parse()?));
        }
        Ok(spec)
    }
}

/// Selects clips per speaker and concatenates the selections in spec order.
///
/// Hour targets take clips in order until the cumulative duration first
/// reaches the target (or the speaker runs out). Fraction targets take the
/// first `ceil(fraction * clip_count)` clips.
pub fn build_mix_manifest(manifests: &[Manifest], spec: &MixSpec) -> Result<Manifest, DatasetError> {
    let mut out: Vec<ManifestEntry> = Vec::new();
    for (speaker, target) in &spec.targets {
        target.validate()?;
        let mut pool: Vec<&ManifestEntry> = manifests.iter().flat_map(|m| m.for_speaker(speaker)).collect();
        if pool.is_empty() {
            return Err(DatasetError::UnknownSpeaker(speaker.clone()));
        }
        if let Some(seed) = spec.shuffle_seed {
            pool.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        let take = match *target {
            MixTarget::Fraction(f) => ((f * pool.len() as f64).ceil() as usize).min(pool.len()),
            MixTarget::Hours(h) => {
                let goal_s = h * 3600.0;
                let mut total = 0.0;
                let mut n = 0;
                for e in &pool {
                    if total >= goal_s {
                        break;
                    }
                    total += e.duration_s;
                    n += 1;
                }
                n
            }
        };
        out.extend(pool.into_iter().take(take).cloned());
    }
    if out.is_empty() {
        return Err(DatasetError::EmptyResult);
    }
    Manifest::from_entries(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn entry(id: &str, speaker: &str, duration_s: f64) -> ManifestEntry {
        ManifestEntry {
            clip_id: id.into(),
            audio_path: PathBuf::from(format!("{id}.wav")),
            transcript: "x".into(),
            speaker_id: speaker.into(),
            duration_s,
        }
    }

    #[test]
    fn target_parsing() {
        assert_eq!("2h".parse::<MixTarget>().unwrap(), MixTarget::Hours(2.0));
        assert_eq!("1/9".parse::<MixTarget>().unwrap(), MixTarget::Fraction(1.0 / 9.0));
        assert_eq!("25%".parse::<MixTarget>().unwrap(), MixTarget::Fraction(0.25));
        assert_eq!("1".parse::<MixTarget>().unwrap(), MixTarget::Fraction(1.0));
        assert!("1.5".parse::<MixTarget>().is_err());
        assert!("-2h".parse::<MixTarget>().is_err());
        assert!("abc".parse::<MixTarget>().is_err());
        assert!(MixSpec::parse_items(&["1=2h", "2"]).is_err());
    }

    #[test]
    fn half_hour_clips_fill_two_hours_with_four() {
        let m = Manifest::from_entries((0..10).map(|i| entry(&format!("a{i}"), "A", 1800.0)).collect()).unwrap();
        let mix = build_mix_manifest(&[m], &MixSpec::new().take("A", MixTarget::Hours(2.0))).unwrap();
        assert_eq!(mix.len(), 4);
    }

    #[test]
    fn full_fraction_is_identity() {
        let entries: Vec<_> = (0..5).map(|i| entry(&format!("a{i}"), "A", 1.0 + i as f64)).collect();
        let m = Manifest::from_entries(entries.clone()).unwrap();
        let mix = build_mix_manifest(&[m], &MixSpec::new().take("A", MixTarget::Fraction(1.0))).unwrap();
        assert_eq!(mix.entries(), &entries[..]);
    }

    #[test]
    fn fraction_rounds_up() {
        let m = Manifest::from_entries((0..10).map(|i| entry(&format!("a{i}"), "A", 1.0)).collect()).unwrap();
        let mix = build_mix_manifest(&[m], &MixSpec::new().take("A", MixTarget::Fraction(1.0 / 9.0))).unwrap();
        assert_eq!(mix.len(), 2);
    }

    #[test]
    fn unknown_speaker() {
        let m = Manifest::from_entries(vec![entry("a", "A", 1.0)]).unwrap();
        let err = build_mix_manifest(&[m], &MixSpec::new().take("Z", MixTarget::Hours(1.0))).unwrap_err();
        assert!(matches!(err, DatasetError::UnknownSpeaker(s) if s == "Z"));
    }

    #[test]
    fn empty_spec_is_empty_result() {
        let m = Manifest::from_entries(vec![entry("a", "A", 1.0)]).unwrap();
        assert!(matches!(build_mix_manifest(&[m], &MixSpec::new()), Err(DatasetError::EmptyResult)));
    }

    #[test]
    fn speakers_follow_spec_order_across_manifests() {
        let m1 = Manifest::from_entries(vec![entry("a1", "A", 1.0), entry("b1", "B", 1.0)]).unwrap();
        let m2 = Manifest::from_entries(vec![entry("a2", "A", 1.0), entry("b2", "B", 1.0)]).unwrap();
        let spec = MixSpec::new().take("B", MixTarget::Fraction(1.0)).take("A", MixTarget::Fraction(1.0));
        let mix = build_mix_manifest(&[m1, m2], &spec).unwrap();
        let ids: Vec<_> = mix.entries().iter().map(|e| e.clip_id.as_str()).collect();
        assert_eq!(ids, ["b1", "b2", "a1", "a2"]);
    }

    #[test]
    fn seeded_shuffle_is_deterministic() {
        let m = Manifest::from_entries((0..20).map(|i| entry(&format!("a{i}"), "A", 1.0)).collect()).unwrap();
        let spec = MixSpec { targets: vec![("A".into(), MixTarget::Fraction(0.5))], shuffle_seed: Some(7) };
        let x = build_mix_manifest(std::slice::from_ref(&m), &spec).unwrap();
        let y = build_mix_manifest(std::slice::from_ref(&m), &spec).unwrap();
        assert_eq!(x, y);
        assert_eq!(x.len(), 10);
    }
}
