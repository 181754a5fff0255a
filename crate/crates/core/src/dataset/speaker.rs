//! Per-speaker dataset statistics.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};

use super::{DatasetError, Manifest};
use crate::audio;
use crate::scores::ScoreSet;
use crate::signal::{frame_levels_db, FrameSpec};
use crate::stats::{mean, sample_std, MeanStd};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerDatasetStats {
    pub speaker_id: String,
    pub clip_count: usize,
    pub total_hours: f64,
    pub clip_len_mean_s: f64,
    pub clip_len_std_s: f64,
    pub unique_words: usize,
    pub total_words: usize,
    pub avg_words_per_clip: f64,
    /// Mean and sample std over the frames of all the speaker's clips.
    pub energy_mean_db: f64,
    pub energy_std_db: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mos_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mos_std: Option<f64>,
}

fn is_punctuation(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

/// Lowercases, strips Unicode punctuation and splits on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    let cleaned: String = text.chars().filter(|&c| !is_punctuation(c)).flat_map(char::to_lowercase).collect();
    cleaned.split_whitespace().map(str::to_owned).collect()
}

/// Statistics for one speaker. Clip audio is decoded in parallel on the
/// current rayon pool; frames are pooled in manifest order.
pub fn speaker_stats(
    manifest: &Manifest,
    speaker_id: &str,
    scores: Option<&ScoreSet>,
    frame: FrameSpec,
) -> Result<SpeakerDatasetStats, DatasetError> {
    let clips: Vec<_> = manifest.for_speaker(speaker_id).collect();
    if clips.is_empty() {
        return Err(DatasetError::UnknownSpeaker(speaker_id.to_string()));
    }

    let durations: Vec<f64> = clips.iter().map(|e| e.duration_s).collect();
    let length = MeanStd::of(&durations).expect("non-empty");

    let mut vocabulary = HashSet::new();
    let mut total_words = 0usize;
    for entry in &clips {
        let tokens = tokenize(&entry.transcript);
        total_words += tokens.len();
        vocabulary.extend(tokens);
    }

    let per_clip: Vec<Vec<f64>> = clips
        .par_iter()
        .map(|entry| {
            let clip = audio::load_wav(&entry.audio_path)
                .map_err(|source| DatasetError::Audio { clip_id: entry.clip_id.clone(), source })?;
            frame_levels_db(&clip, frame).map_err(|source| DatasetError::Signal { clip_id: entry.clip_id.clone(), source })
        })
        .collect::<Result<_, _>>()?;
    let frames: Vec<f64> = per_clip.into_iter().flatten().collect();
    let energy = MeanStd::of(&frames).expect("every clip yields at least one frame");

    let (mos_mean, mos_std) = match scores {
        None => (None, None),
        Some(set) => {
            let mos: Vec<f64> = clips.iter().filter_map(|e| set.get(&e.clip_id).and_then(|r| r.dnsmos_ovrl)).collect();
            if mos.is_empty() {
                return Err(DatasetError::MissingScores(speaker_id.to_string()));
            }
            (mean(&mos), sample_std(&mos))
        }
    };

    Ok(SpeakerDatasetStats {
        speaker_id: speaker_id.to_string(),
        clip_count: clips.len(),
        total_hours: durations.iter().sum::<f64>() / 3600.0,
        clip_len_mean_s: length.mean,
        clip_len_std_s: length.std,
        unique_words: vocabulary.len(),
        total_words,
        avg_words_per_clip: total_words as f64 / clips.len() as f64,
        energy_mean_db: energy.mean,
        energy_std_db: energy.std,
        mos_mean,
        mos_std,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_strips_punctuation_and_case() {
        assert_eq!(tokenize("Hello, World!  It's \u{201C}fine\u{201D}."), vec!["hello", "world", "its", "fine"]);
        assert_eq!(tokenize("well-known -- dash"), vec!["wellknown", "dash"]);
        assert!(tokenize(" ... ").is_empty());
    }
}
