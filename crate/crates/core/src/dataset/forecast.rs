//! Fine-tuning outcome forecast from training-data energy variability, and the
//! decoding parameters that go with it.

use serde::{Deserialize, Serialize};

use super::SpeakerDatasetStats;

/// Pooled energy std at or above which adaptation is expected to help.
pub const POSITIVE_EXPECTED_STD_DB: f64 = 13.0;
/// Pooled energy std at or below which perceptual collapse is likely.
pub const COLLAPSE_RISK_STD_DB: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VariabilityClass {
    PositiveExpected,
    Uncertain,
    CollapseRisk,
}

impl std::fmt::Display for VariabilityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::PositiveExpected => "PositiveExpected",
            Self::Uncertain => "Uncertain",
            Self::CollapseRisk => "CollapseRisk",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationForecast {
    pub class: VariabilityClass,
    pub energy_std_db: f64,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodingParams {
    pub temperature: f64,
    pub top_k: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advisory: Option<String>,
}

pub fn classify_energy_std(energy_std_db: f64) -> VariabilityClass {
    if energy_std_db >= POSITIVE_EXPECTED_STD_DB {
        VariabilityClass::PositiveExpected
    } else if energy_std_db <= COLLAPSE_RISK_STD_DB {
        VariabilityClass::CollapseRisk
    } else {
        VariabilityClass::Uncertain
    }
}

pub fn classify_variability(stats: &SpeakerDatasetStats) -> AdaptationForecast {
    let std = stats.energy_std_db;
    let class = classify_energy_std(std);
    let rationale = match class {
        VariabilityClass::PositiveExpected => format!(
            "pooled energy std {std:.2} dB >= {POSITIVE_EXPECTED_STD_DB:.1} dB: diverse recording conditions, \
             fine-tuning expected to improve perceptual quality"
        ),
        VariabilityClass::CollapseRisk => format!(
            "pooled energy std {std:.2} dB <= {COLLAPSE_RISK_STD_DB:.1} dB: acoustically homogeneous data, \
             fine-tuning risks amplifying recording artefacts"
        ),
        VariabilityClass::Uncertain => format!(
            "pooled energy std {std:.2} dB between {COLLAPSE_RISK_STD_DB:.1} and {POSITIVE_EXPECTED_STD_DB:.1} dB: \
             outcome uncertain, select checkpoints by perceptual metrics"
        ),
    };
    AdaptationForecast { class, energy_std_db: std, rationale }
}

pub fn recommend_decoding(forecast: &AdaptationForecast) -> DecodingParams {
    match forecast.class {
        VariabilityClass::CollapseRisk => DecodingParams { temperature: 0.8, top_k: 40, advisory: None },
        VariabilityClass::PositiveExpected => DecodingParams { temperature: 1.0, top_k: 50, advisory: None },
        VariabilityClass::Uncertain => DecodingParams {
            temperature: 1.0,
            top_k: 50,
            advisory: Some(
                "run a perceptual A/B between T=1.0/top_k=50 and T=0.8/top_k=40 before deploying".to_string(),
            ),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn forecast(std: f64) -> AdaptationForecast {
        AdaptationForecast { class: classify_energy_std(std), energy_std_db: std, rationale: String::new() }
    }

    #[test]
    fn thresholds_are_inclusive() {
        assert_eq!(classify_energy_std(13.0), VariabilityClass::PositiveExpected);
        assert_eq!(classify_energy_std(10.0), VariabilityClass::CollapseRisk);
        assert_eq!(classify_energy_std(12.999), VariabilityClass::Uncertain);
        assert_eq!(classify_energy_std(10.001), VariabilityClass::Uncertain);
    }

    #[test]
    fn decoding_per_class() {
        let d = recommend_decoding(&forecast(9.91));
        assert_eq!((d.temperature, d.top_k), (0.8, 40));
        assert!(d.advisory.is_none());
        let d = recommend_decoding(&forecast(13.11));
        assert_eq!((d.temperature, d.top_k), (1.0, 50));
        let d = recommend_decoding(&forecast(12.93));
        assert_eq!((d.temperature, d.top_k), (1.0, 50));
        assert!(d.advisory.is_some());
    }
}
