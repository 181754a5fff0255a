//! RIFF/WAVE decoding into a canonical mono waveform.
//!
//! Supported encodings are integer PCM at 16, 24 or 32 bits and IEEE float at
//! 32 bits, with one or two channels and a sample rate between 8 kHz and
//! 48 kHz. Integer PCM is normalized by `2^(bits-1)`, so the most negative code
//! maps to exactly `-1.0`. Stereo input is mixed down to the arithmetic mean of
//! the two channels. No resampling happens here.

use std::fs::File;
use std::io::{BufReader, Read, Seek, SeekFrom, Write};
use std::path::Path;

use thiserror::Error;

pub const MIN_SAMPLE_RATE: u32 = 8_000;
pub const MAX_SAMPLE_RATE: u32 = 48_000;

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("unsupported format in {path}: {reason}")]
    UnsupportedFormat { path: String, reason: String },
    #[error("corrupt header in {path}: {reason}")]
    CorruptHeader { path: String, reason: String },
    #[error("non-finite sample at frame {frame} in {path}")]
    NonFiniteSample { path: String, frame: usize },
    #[error("invalid clip: {0}")]
    InvalidClip(String),
    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    SampleRateMismatch(u32, u32),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Decoded mono waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f32>,
    sample_rate: u32,
    channels: u16,
    source_id: String,
}

impl AudioClip {
    /// Builds a mono clip. Every sample must be finite and within `[-1, 1]`.
    pub fn new(samples: Vec<f32>, sample_rate: u32, source_id: impl Into<String>) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::InvalidClip("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite() || s.abs() > 1.0) {
            return Err(AudioError::InvalidClip(format!(
                "sample {i} ({}) outside [-1, 1]",
                samples[i]
            )));
        }
        Ok(Self { samples, sample_rate, channels: 1, source_id: source_id.into() })
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    /// Channel count of the source before mixdown.
    pub fn source_channels(&self) -> u16 {
        self.channels
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Appends `other` to this clip. Both clips must share a sample rate.
    pub fn concat(&self, other: &AudioClip) -> Result<AudioClip, AudioError> {
        if self.sample_rate != other.sample_rate {
            return Err(AudioError::SampleRateMismatch(self.sample_rate, other.sample_rate));
        }
        let mut samples = Vec::with_capacity(self.len() + other.len());
        samples.extend_from_slice(&self.samples);
        samples.extend_from_slice(&other.samples);
        Ok(AudioClip {
            samples,
            sample_rate: self.sample_rate,
            channels: 1,
            source_id: format!("{}+{}", self.source_id, other.source_id),
        })
    }

    /// Returns a copy with every sample multiplied by `gain`.
    pub fn scaled(&self, gain: f32) -> Result<AudioClip, AudioError> {
        AudioClip::new(
            self.samples.iter().map(|s| s * gain).collect(),
            self.sample_rate,
            self.source_id.clone(),
        )
    }
}

/// Averages interleaved frames of `channels` samples into one channel.
pub fn mixdown(interleaved: &[f32], channels: usize) -> Vec<f32> {
    match channels {
        0 => Vec::new(),
        1 => interleaved.to_vec(),
        n => interleaved
            .chunks_exact(n)
            .map(|frame| (frame.iter().map(|&s| s as f64).sum::<f64>() / n as f64) as f32)
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    Int,
    Float,
}

/// Header facts of a WAV file, available without decoding the payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WavInfo {
    pub format: SampleFormat,
    pub channels: u16,
    pub sample_rate: u32,
    pub bits_per_sample: u16,
    pub frames: u64,
    data_offset: u64,
}

impl WavInfo {
    pub fn duration_seconds(&self) -> f64 {
        self.frames as f64 / self.sample_rate as f64
    }

    fn block_align(&self) -> usize {
        self.channels as usize * self.bits_per_sample as usize / 8
    }
}

fn read_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn read_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn parse_header<R: Read + Seek>(reader: &mut R, file_len: u64, path: &str) -> Result<WavInfo, AudioError> {
    let corrupt = |reason: &str| AudioError::CorruptHeader { path: path.to_string(), reason: reason.to_string() };
    let unsupported = |reason: String| AudioError::UnsupportedFormat { path: path.to_string(), reason };
    let io = |source| AudioError::Io { path: path.to_string(), source };

    let mut riff = [0u8; 12];
    if file_len < 12 {
        return Err(corrupt("file shorter than RIFF header"));
    }
    reader.read_exact(&mut riff).map_err(io)?;
    if &riff[0..4] != b"RIFF" || &riff[8..12] != b"WAVE" {
        return Err(unsupported("not a RIFF/WAVE file".into()));
    }
    let riff_end = read_u32(&riff, 4) as u64 + 8;
    if riff_end > file_len {
        return Err(corrupt("RIFF size exceeds file length"));
    }

    let mut fmt: Option<(u16, u16, u32, u16, u16)> = None;
    let mut pos = 12u64;
    loop {
        if pos + 8 > riff_end {
            return Err(corrupt("no data chunk"));
        }
        let mut head = [0u8; 8];
        reader.read_exact(&mut head).map_err(io)?;
        let size = read_u32(&head, 4) as u64;
        let body = pos + 8;
        if body + size > riff_end {
            return Err(corrupt("chunk extends past end of RIFF data"));
        }
        match &head[0..4] {
            b"fmt " => {
                if size < 16 {
                    return Err(corrupt("fmt chunk shorter than 16 bytes"));
                }
                let mut raw = vec![0u8; size as usize];
                reader.read_exact(&mut raw).map_err(io)?;
                let mut tag = read_u16(&raw, 0);
                if tag == FORMAT_EXTENSIBLE {
                    if size < 40 {
                        return Err(corrupt("extensible fmt chunk shorter than 40 bytes"));
                    }
                    tag = read_u16(&raw, 24);
                }
                fmt = Some((tag, read_u16(&raw, 2), read_u32(&raw, 4), read_u16(&raw, 12), read_u16(&raw, 14)));
                if size % 2 == 1 {
                    reader.seek(SeekFrom::Current(1)).map_err(io)?;
                }
            }
            b"data" => {
                let (tag, channels, sample_rate, block_align, bits) =
                    fmt.ok_or_else(|| corrupt("data chunk before fmt chunk"))?;
                let format = match (tag, bits) {
                    (FORMAT_PCM, 16 | 24 | 32) => SampleFormat::Int,
                    (FORMAT_IEEE_FLOAT, 32) => SampleFormat::Float,
                    (FORMAT_PCM | FORMAT_IEEE_FLOAT, b) => {
                        return Err(unsupported(format!("{b}-bit samples")));
                    }
                    (t, _) => return Err(unsupported(format!("compression code {t}"))),
                };
                if !(1..=2).contains(&channels) {
                    return Err(unsupported(format!("{channels} channels")));
                }
                if !(MIN_SAMPLE_RATE..=MAX_SAMPLE_RATE).contains(&sample_rate) {
                    return Err(unsupported(format!("sample rate {sample_rate} Hz")));
                }
                let info = WavInfo { format, channels, sample_rate, bits_per_sample: bits, frames: 0, data_offset: body };
                if block_align as usize != info.block_align() {
                    return Err(corrupt("block align does not match channels and bit depth"));
                }
                if size % block_align as u64 != 0 {
                    return Err(corrupt("data size is not a whole number of frames"));
                }
                return Ok(WavInfo { frames: size / block_align as u64, ..info });
            }
            _ => {
                let skip = size + size % 2;
                reader.seek(SeekFrom::Current(skip as i64)).map_err(io)?;
            }
        }
        pos = body + size + size % 2;
    }
}

fn open(path: &Path) -> Result<(BufReader<File>, u64, String), AudioError> {
    let name = path.display().to_string();
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => AudioError::FileNotFound(name.clone()),
        _ => AudioError::Io { path: name.clone(), source: e },
    })?;
    let len = file.metadata().map_err(|e| AudioError::Io { path: name.clone(), source: e })?.len();
    Ok((BufReader::new(file), len, name))
}

/// Reads only the header of a WAV file.
pub fn read_wav_info(path: impl AsRef<Path>) -> Result<WavInfo, AudioError> {
    let (mut reader, len, name) = open(path.as_ref())?;
    parse_header(&mut reader, len, &name)
}

/// Decodes a WAV file into a mono clip whose `source_id` is the path.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip, AudioError> {
    let (mut reader, len, name) = open(path.as_ref())?;
    let info = parse_header(&mut reader, len, &name)?;
    reader
        .seek(SeekFrom::Start(info.data_offset))
        .map_err(|e| AudioError::Io { path: name.clone(), source: e })?;
    let mut payload = vec![0u8; info.frames as usize * info.block_align()];
    reader
        .read_exact(&mut payload)
        .map_err(|e| AudioError::Io { path: name.clone(), source: e })?;
    decode_payload(&info, &payload, name)
}

/// Decodes an in-memory WAV image.
pub fn decode_wav(bytes: &[u8], source_id: impl Into<String>) -> Result<AudioClip, AudioError> {
    let source_id = source_id.into();
    let mut cursor = std::io::Cursor::new(bytes);
    let info = parse_header(&mut cursor, bytes.len() as u64, &source_id)?;
    let start = info.data_offset as usize;
    let end = start + info.frames as usize * info.block_align();
    decode_payload(&info, &bytes[start..end], source_id)
}

fn decode_payload(info: &WavInfo, payload: &[u8], source_id: String) -> Result<AudioClip, AudioError> {
    let width = info.bits_per_sample as usize / 8;
    let interleaved: Vec<f32> = match (info.format, info.bits_per_sample) {
        (SampleFormat::Int, 16) => payload
            .chunks_exact(2)
            .map(|b| i16::from_le_bytes([b[0], b[1]]) as f32 / 32_768.0)
            .collect(),
        (SampleFormat::Int, 24) => payload
            .chunks_exact(3)
            .map(|b| (i32::from_le_bytes([0, b[0], b[1], b[2]]) >> 8) as f32 / 8_388_608.0)
            .collect(),
        (SampleFormat::Int, _) => payload
            .chunks_exact(width)
            .map(|b| (i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64 / 2_147_483_648.0) as f32)
            .collect(),
        (SampleFormat::Float, _) => payload
            .chunks_exact(width)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect(),
    };
    if let Some(i) = interleaved.iter().position(|s| !s.is_finite()) {
        return Err(AudioError::NonFiniteSample { path: source_id, frame: i / info.channels as usize });
    }
    let samples = mixdown(&interleaved, info.channels as usize)
        .into_iter()
        .map(|s| s.clamp(-1.0, 1.0))
        .collect();
    Ok(AudioClip { samples, sample_rate: info.sample_rate, channels: info.channels, source_id })
}

/// Encodes a clip as mono IEEE float-32 WAV.
pub fn encode_wav_f32(clip: &AudioClip) -> Vec<u8> {
    let data_len = (clip.len() * 4) as u32;
    let mut buf = Vec::with_capacity(44 + data_len as usize);
    buf.extend_from_slice(b"RIFF");
    buf.extend_from_slice(&(36 + data_len).to_le_bytes());
    buf.extend_from_slice(b"WAVE");
    buf.extend_from_slice(b"fmt ");
    buf.extend_from_slice(&16u32.to_le_bytes());
    buf.extend_from_slice(&FORMAT_IEEE_FLOAT.to_le_bytes());
    buf.extend_from_slice(&1u16.to_le_bytes());
    buf.extend_from_slice(&clip.sample_rate.to_le_bytes());
    buf.extend_from_slice(&(clip.sample_rate * 4).to_le_bytes());
    buf.extend_from_slice(&4u16.to_le_bytes());
    buf.extend_from_slice(&32u16.to_le_bytes());
    buf.extend_from_slice(b"data");
    buf.extend_from_slice(&data_len.to_le_bytes());
    for s in &clip.samples {
        buf.extend_from_slice(&s.to_le_bytes());
    }
    buf
}

pub fn write_wav_f32(clip: &AudioClip, path: impl AsRef<Path>) -> Result<(), AudioError> {
    let path = path.as_ref();
    let io = |source| AudioError::Io { path: path.display().to_string(), source };
    let mut file = File::create(path).map_err(io)?;
    file.write_all(&encode_wav_f32(clip)).map_err(io)
}
