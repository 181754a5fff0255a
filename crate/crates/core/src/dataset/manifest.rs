//! Line-delimited JSON manifests of `(clip_id, audio_path, transcript,
//! speaker_id)` records.
//!
//! Relative audio paths are resolved against the manifest's directory when the
//! manifest is loaded. Durations come from WAV headers; payloads are not read.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::DatasetError;
use crate::audio::{self, AudioError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub clip_id: String,
    pub audio_path: PathBuf,
    pub transcript: String,
    pub speaker_id: String,
    pub duration_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<ManifestEntry>,
}

const REQUIRED: [&str; 4] = ["clip_id", "audio_path", "transcript", "speaker_id"];

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| DatasetError::Io { path: path.display().to_string(), source: e })?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        Self::parse(&text, base)
    }

    /// Parses manifest text, resolving relative audio paths against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, DatasetError> {
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let schema = |field: &str| DatasetError::SchemaError { line: line_no, field: field.to_string() };
            let value: Value = serde_json::from_str(line).map_err(|_| schema("<json>"))?;
            let obj = value.as_object().ok_or_else(|| schema("<object>"))?;
            let mut fields = REQUIRED.iter().map(|&name| {
                obj.get(name).and_then(Value::as_str).map(str::to_owned).ok_or_else(|| schema(name))
            });
            let clip_id = fields.next().unwrap()?;
            let raw_path = fields.next().unwrap()?;
            let transcript = fields.next().unwrap()?;
            let speaker_id = fields.next().unwrap()?;
            if clip_id.is_empty() {
                return Err(schema("clip_id"));
            }
            if !seen.insert(clip_id.clone()) {
                return Err(DatasetError::DuplicateClipId(clip_id));
            }
            let audio_path = base_dir.join(raw_path);
            let duration_s = header_duration(&clip_id, &audio_path)?;
            entries.push(ManifestEntry { clip_id, audio_path, transcript, speaker_id, duration_s });
        }
        Ok(Self { entries })
    }

    /// Builds a manifest from entries whose durations are already known.
    pub fn from_entries(entries: Vec<ManifestEntry>) -> Result<Self, DatasetError> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.clip_id.as_str()) {
                return Err(DatasetError::DuplicateClipId(e.clip_id.clone()));
            }
            if !(e.duration_s > 0.0) {
                return Err(DatasetError::EmptyAudio(e.clip_id.clone()));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Speaker ids in order of first appearance.
    pub fn speakers(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.entries
            .iter()
            .map(|e| e.speaker_id.as_str())
            .filter(|s| seen.insert(*s))
            .collect()
    }

    pub fn for_speaker<'a>(&'a self, speaker_id: &'a str) -> impl Iterator<Item = &'a ManifestEntry> + 'a {
        self.entries.iter().filter(move |e| e.speaker_id == speaker_id)
    }

    /// One JSON object per line, LF-terminated.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("manifest entries serialize"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), DatasetError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_jsonl()).map_err(|e| DatasetError::Io { path: path.display().to_string(), source: e })
    }
}

fn header_duration(clip_id: &str, path: &Path) -> Result<f64, DatasetError> {
    let info = audio::read_wav_info(path).map_err(|e| match e {
        AudioError::FileNotFound(_) => DatasetError::MissingAudio(path.to_path_buf()),
        other => DatasetError::Audio { clip_id: clip_id.to_string(), source: other },
    })?;
    if info.frames == 0 {
        return Err(DatasetError::EmptyAudio(clip_id.to_string()));
    }
    Ok(info.duration_seconds())
}
