//! Synthetic signals and on-disk fixtures for the voxgauge test suites.
//!
//! Nothing here depends on the library under test. Generators are seeded
//! and deterministic; WAV files are written with `hound`.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

/// Shape of the Gamma amplitude model for clean speech.
pub const SPEECH_GAMMA_SHAPE: f64 = 0.4;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn power(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// Gamma(0.4)-magnitude samples with random sign.
pub fn gamma_speech(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let g = Gamma::new(SPEECH_GAMMA_SHAPE, 1.0).unwrap();
    (0..n).map(|_| {
        let m: f64 = g.sample(&mut r);
        if r.gen::<bool>() { m } else { -m }
    }).collect()
}

pub fn gaussian_noise(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| StandardNormal.sample(&mut r)).collect()
}

pub fn uniform_noise(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()
}

/// Deterministic "noise" made of the standard normal quantiles at
/// `(i + 0.5) / n`, interleaved so neighbouring samples differ in sign.
pub fn quantile_gaussian(n: usize) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let q: Vec<f64> = (0..n).map(|i| normal.inverse_cdf((i as f64 + 0.5) / n as f64)).collect();
    let (lo, hi) = q.split_at(n / 2);
    let mut out = Vec::with_capacity(n);
    for i in 0..hi.len() {
        out.push(hi[i]);
        if let Some(v) = lo.get(lo.len().wrapping_sub(1 + i)) {
            out.push(*v);
        }
    }
    out
}

/// Speech plus noise where the measured ratio of sample powers is exactly
/// `snr_db`, peak-normalized to `peak`.
pub fn mixture_at_snr(n: usize, snr_db: f64, seed: u64, peak: f64) -> Vec<f64> {
    let speech = gamma_speech(n, seed.wrapping_mul(2).wrapping_add(1));
    let noise = gaussian_noise(n, seed.wrapping_mul(2).wrapping_add(2));
    let gain = (10f64.powf(snr_db / 10.0) * power(&noise) / power(&speech)).sqrt();
    let mix: Vec<f64> = speech.iter().zip(&noise).map(|(s, w)| gain * s + w).collect();
    let max = mix.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    mix.iter().map(|v| v * peak / max).collect()
}

/// A sine whose RMS equals `level_db` (dB re full scale RMS).
pub fn tone_at_level(n: usize, sample_rate: u32, freq_hz: f64, level_db: f64) -> Vec<f64> {
    let amp = 2f64.sqrt() * 10f64.powf(level_db / 20.0);
    (0..n).map(|i| amp * (2.0 * PI * freq_hz * i as f64 / sample_rate as f64).sin()).collect()
}

pub fn write_wav_i16(path: &Path, samples: &[f64], sample_rate: u32) {
    let spec = hound::WavSpec { channels: 1, sample_rate, bits_per_sample: 16, sample_format: hound::SampleFormat::Int };
    let mut w = hound::WavWriter::create(path, spec).unwrap();
    for s in samples {
        w.write_sample((s * 32767.0).round().clamp(-32768.0, 32767.0) as i16).unwrap();
    }
    w.finalize().unwrap();
}

pub fn write_wav_f32(path: &Path, samples: &[f64], sample_rate: u32) {
    let spec = hound::WavSpec { channels: 1, sample_rate, bits_per_sample: 32, sample_format: hound::SampleFormat::Float };
    let mut w = hound::WavWriter::create(path, spec).unwrap();
    for s in samples {
        w.write_sample(*s as f32).unwrap();
    }
    w.finalize().unwrap();
}

pub fn write_wav_stereo_i16(path: &Path, left: &[f64], right: &[f64], sample_rate: u32) {
    let spec = hound::WavSpec { channels: 2, sample_rate, bits_per_sample: 16, sample_format: hound::SampleFormat::Int };
    let mut w = hound::WavWriter::create(path, spec).unwrap();
    for (l, r) in left.iter().zip(right) {
        for s in [l, r] {
            w.write_sample((s * 32767.0).round().clamp(-32768.0, 32767.0) as i16).unwrap();
        }
    }
    w.finalize().unwrap();
}

/// Reference decode through `hound`, downmixing by channel average.
pub fn hound_mono(path: &Path) -> (Vec<f64>, u32) {
    let mut r = hound::WavReader::open(path).unwrap();
    let spec = r.spec();
    let ch = spec.channels as usize;
    let interleaved: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => r.samples::<f32>().map(|s| s.unwrap() as f64).collect(),
        hound::SampleFormat::Int => {
            let scale = (1i64 << (spec.bits_per_sample - 1)) as f64;
            r.samples::<i32>().map(|s| s.unwrap() as f64 / scale).collect()
        }
    };
    (interleaved.chunks(ch).map(|f| f.iter().sum::<f64>() / ch as f64).collect(), spec.sample_rate)
}

/// One row of the published per-speaker energy statistics together with the
/// observed outcome of fine-tuning on that speaker.
#[derive(Debug, Clone, Copy)]
pub struct SpeakerProfile {
    pub speaker_id: &'static str,
    pub energy_mean_db: f64,
    pub energy_std_db: f64,
    pub mos_std: f64,
    pub delta_mos: f64,
}

pub const ENERGY_TABLE: [SpeakerProfile; 6] = [
    SpeakerProfile { speaker_id: "2", energy_mean_db: -29.34, energy_std_db: 13.11, mos_std: 0.370, delta_mos: 0.424 },
    SpeakerProfile { speaker_id: "11614", energy_mean_db: -32.20, energy_std_db: 13.34, mos_std: 0.383, delta_mos: 0.138 },
    SpeakerProfile { speaker_id: "1", energy_mean_db: -29.73, energy_std_db: 12.93, mos_std: 0.321, delta_mos: 0.029 },
    SpeakerProfile { speaker_id: "1401", energy_mean_db: -32.11, energy_std_db: 11.89, mos_std: 0.255, delta_mos: -0.274 },
    SpeakerProfile { speaker_id: "1212", energy_mean_db: -28.41, energy_std_db: 9.91, mos_std: 0.248, delta_mos: -0.414 },
    SpeakerProfile { speaker_id: "1259", energy_mean_db: -31.18, energy_std_db: 8.25, mos_std: 0.293, delta_mos: -0.001 },
];

pub const FIXTURE_RATE: u32 = 16_000;
/// 1 kHz at 16 kHz: every 25 ms / 10 ms frame holds whole periods, so each
/// frame's RMS equals the tone's RMS.
pub const FIXTURE_TONE_HZ: f64 = 1000.0;
pub const FIXTURE_CLIP_SAMPLES: usize = 16_000;
/// Frames per fixture clip with 25 ms frames and a 10 ms hop.
pub const FIXTURE_FRAMES_PER_CLIP: usize = (FIXTURE_CLIP_SAMPLES - 400) / 160 + 1;

/// Per-clip tone levels whose pooled frames have exactly the requested mean
/// and sample std: half the clips sit at `mean + d`, half at `mean - d`.
pub fn clip_levels(mean_db: f64, std_db: f64, clips: usize) -> Vec<f64> {
    assert!(clips >= 2 && clips % 2 == 0);
    let total = (clips * FIXTURE_FRAMES_PER_CLIP) as f64;
    let d = std_db * ((total - 1.0) / total).sqrt();
    (0..clips).map(|i| if i % 2 == 0 { mean_db + d } else { mean_db - d }).collect()
}

const WORDS: [&str; 12] =
    ["the", "quiet", "river", "ran", "past", "an", "old", "mill", "while", "birds", "sang", "softly"];

/// A short deterministic transcript. Clip `i` uses `3 + i % 4` words.
pub fn transcript(i: usize) -> String {
    let n = 3 + i % 4;
    let words: Vec<&str> = (0..n).map(|k| WORDS[(i * 5 + k * 7) % WORDS.len()]).collect();
    let mut s = words.join(" ");
    s.push('.');
    s[..1].to_uppercase() + &s[1..]
}

#[derive(Debug, Clone)]
pub struct FixtureClip {
    pub clip_id: String,
    pub speaker_id: String,
    /// Relative to the fixture directory.
    pub audio_path: PathBuf,
    pub transcript: String,
    pub level_db: f64,
}

/// Writes `clips` tone clips for a speaker profile into `dir` as float WAVs.
pub fn write_speaker(dir: &Path, profile: &SpeakerProfile, clips: usize) -> Vec<FixtureClip> {
    clip_levels(profile.energy_mean_db, profile.energy_std_db, clips)
        .into_iter()
        .enumerate()
        .map(|(i, level)| {
            let clip_id = format!("spk{}_{i:03}", profile.speaker_id);
            let audio_path = PathBuf::from(format!("{clip_id}.wav"));
            let samples = tone_at_level(FIXTURE_CLIP_SAMPLES, FIXTURE_RATE, FIXTURE_TONE_HZ, level);
            write_wav_f32(&dir.join(&audio_path), &samples, FIXTURE_RATE);
            FixtureClip { clip_id, speaker_id: profile.speaker_id.into(), audio_path, transcript: transcript(i), level_db: level }
        })
        .collect()
}

/// JSONL manifest text for fixture clips (paths stay relative).
pub fn manifest_jsonl(clips: &[FixtureClip]) -> String {
    clips
        .iter()
        .map(|c| {
            serde_json::json!({
                "clip_id": c.clip_id,
                "audio_path": c.audio_path.to_string_lossy(),
                "transcript": c.transcript,
                "speaker_id": c.speaker_id,
            })
            .to_string()
                + "\n"
        })
        .collect()
}

/// MOS values with the requested mean and sample std: alternating
/// `mean ± d` over an even count.
pub fn mos_values(mean: f64, std: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && n % 2 == 0);
    let d = std * ((n as f64 - 1.0) / n as f64).sqrt();
    (0..n).map(|i| if i % 2 == 0 { mean + d } else { mean - d }).collect()
}

/// A score file (JSON array) giving each clip a MOS.
pub fn scores_json(clip_ids: &[&str], mos: &[f64]) -> String {
    let records: Vec<_> =
        clip_ids.iter().zip(mos).map(|(id, m)| serde_json::json!({"clip_id": id, "dnsmos_ovrl": m})).collect();
    serde_json::to_string_pretty(&records).unwrap()
}

/// Brute-force divergence verdict over every window `i < j`: loss never
/// rises inside the window and ends strictly lower, and MOS ends strictly
/// lower by at least `threshold`. Returns `(start, end, mos_drop)` of the
/// largest drop, earliest start, then earliest end.
pub fn divergence_oracle(loss: &[f64], mos: &[f64], threshold: f64) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..loss.len() {
        for j in i + 1..loss.len() {
            // Once loss rises, no longer window starting at `i` qualifies.
            if loss[j] > loss[j - 1] {
                break;
            }
            let drop = mos[i] - mos[j];
            if !(loss[j] < loss[i] && drop > 0.0 && drop >= threshold) {
                continue;
            }
            let better = match best {
                None => true,
                Some((bi, bj, bd)) => drop > bd || (drop == bd && (i, j) < (bi, bj)),
            };
            if better {
                best = Some((i, j, drop));
            }
        }
    }
    best
}

/// Calls `f` with every sequence of length `n` over `grid` (odometer order),
/// reusing one buffer.
pub fn for_each_sequence(grid: &[f64], n: usize, mut f: impl FnMut(&[f64])) {
    let mut idx = vec![0usize; n];
    let mut seq = vec![grid[0]; n];
    loop {
        f(&seq);
        let mut k = 0;
        loop {
            if k == n {
                return;
            }
            idx[k] += 1;
            if idx[k] < grid.len() {
                seq[k] = grid[idx[k]];
                break;
            }
            idx[k] = 0;
            seq[k] = grid[0];
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixture_hits_requested_power_ratio() {
        let n = 16_000;
        let speech = gamma_speech(n, 7);
        let noise = gaussian_noise(n, 8);
        let gain = (10f64.powf(2.0) * power(&noise) / power(&speech)).sqrt();
        let s: Vec<f64> = speech.iter().map(|v| v * gain).collect();
        assert!((10.0 * (power(&s) / power(&noise)).log10() - 20.0).abs() < 1e-9);
        let m = mixture_at_snr(n, 20.0, 3, 0.5);
        assert!((m.iter().fold(0.0f64, |a, v| a.max(v.abs())) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn quantiles_are_symmetric() {
        let q = quantile_gaussian(1000);
        assert_eq!(q.len(), 1000);
        assert!(q.iter().sum::<f64>().abs() < 1e-9);
        assert!((power(&q) - 1.0).abs() < 0.01);
    }

    #[test]
    fn levels_pool_to_target() {
        let levels = clip_levels(-30.0, 12.0, 4);
        let frames: Vec<f64> = levels.iter().flat_map(|l| std::iter::repeat(*l).take(FIXTURE_FRAMES_PER_CLIP)).collect();
        let n = frames.len() as f64;
        let m = frames.iter().sum::<f64>() / n;
        let s = (frames.iter().map(|f| (f - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((m + 30.0).abs() < 1e-9 && (s - 12.0).abs() < 1e-9);
    }

    #[test]
    fn oracle_picks_largest_then_earliest() {
        assert_eq!(divergence_oracle(&[2.0, 1.2], &[3.647, 3.233], 0.2).map(|b| (b.0, b.1)), Some((0, 1)));
        assert_eq!(divergence_oracle(&[2.0, 1.0, 0.5], &[4.0, 3.5, 4.0], 0.2).map(|b| (b.0, b.1)), Some((0, 1)));
        assert_eq!(divergence_oracle(&[1.0, 1.0], &[4.0, 3.0], 0.2), None);
        let mut count = 0;
        for_each_sequence(&[1.0, 2.0, 3.0], 3, |_| count += 1);
        assert_eq!(count, 27);
    }

    #[test]
    fn tone_rms() {
        let t = tone_at_level(400, 16_000, 1000.0, -20.0);
        assert!((10.0 * power(&t).log10() + 20.0).abs() < 1e-9);
    }
}
