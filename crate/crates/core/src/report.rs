//! Comparison arithmetic and report rendering.
//!
//! A report holds the aggregates of each condition for one speaker, the
//! deltas of every non-base condition against `base`, and percent increase
//! rows of the form `X/base` and `X/ref`. Metrics missing on either side of a
//! comparison are left out rather than filled with zeros.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scores::AggregateMetrics;

pub const BASE_LABEL: &str = "base";
pub const REFERENCE_LABEL: &str = "ref";

/// Column order shared by the CSV and text renderers.
pub const CSV_HEADER: &str = "speaker_id,row,label,n,mos_mean,mos_std,snr_mean_db,similarity_mean";

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("percent increase against a zero base value")]
    DivisionByZero,
    #[error("speaker {0}: no `base` condition")]
    MissingBase(String),
    #[error("speaker {speaker_id}: duplicate condition label `{label}`")]
    DuplicateLabel { speaker_id: String, label: String },
    #[error("unknown report format `{0}` (expected table-text, csv or json)")]
    UnknownFormat(String),
    #[error("report json: {0}")]
    Parse(String),
}

/// `100 * (new - base) / base`.
pub fn pct_increase(new_value: f64, base_value: f64) -> Result<f64, ReportError> {
    if base_value == 0.0 {
        return Err(ReportError::DivisionByZero);
    }
    Ok(100.0 * (new_value - base_value) / base_value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionAggregates {
    pub label: String,
    pub metrics: AggregateMetrics,
}

impl ConditionAggregates {
    pub fn new(label: impl Into<String>, metrics: AggregateMetrics) -> Self {
        Self { label: label.into(), metrics }
    }
}

/// Per-metric values of a delta or percent row. Absent means one of the two
/// operands lacked the metric.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub mos_mean: Option<f64>,
    pub snr_mean_db: Option<f64>,
    pub similarity_mean: Option<f64>,
}

impl MetricRow {
    fn combine(
        a: &AggregateMetrics,
        b: &AggregateMetrics,
        f: impl Fn(f64, f64) -> Result<f64, ReportError>,
    ) -> Result<Self, ReportError> {
        let pair = |x: Option<f64>, y: Option<f64>| match (x, y) {
            (Some(x), Some(y)) => f(x, y).map(Some),
            _ => Ok(None),
        };
        Ok(Self {
            mos_mean: pair(a.mos_mean, b.mos_mean)?,
            snr_mean_db: pair(a.snr_mean_db, b.snr_mean_db)?,
            similarity_mean: pair(a.similarity_mean, b.similarity_mean)?,
        })
    }

    fn is_empty(&self) -> bool {
        self.mos_mean.is_none() && self.snr_mean_db.is_none() && self.similarity_mean.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    /// Condition compared against `base`.
    pub label: String,
    pub values: MetricRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PctRow {
    pub numerator: String,
    pub denominator: String,
    pub values: MetricRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub speaker_id: String,
    pub conditions: Vec<ConditionAggregates>,
    /// MOS of the first fine-tuned condition minus base MOS, when both exist.
    pub delta_mos_vs_base: Option<f64>,
    pub deltas: Vec<DeltaRow>,
    pub pct_rows: Vec<PctRow>,
}

impl ComparisonReport {
    pub fn condition(&self, label: &str) -> Option<&AggregateMetrics> {
        self.conditions.iter().find(|c| c.label == label).map(|c| &c.metrics)
    }

    pub fn delta(&self, label: &str) -> Option<&MetricRow> {
        self.deltas.iter().find(|d| d.label == label).map(|d| &d.values)
    }

    pub fn pct(&self, numerator: &str, denominator: &str) -> Option<&MetricRow> {
        self.pct_rows
            .iter()
            .find(|p| p.numerator == numerator && p.denominator == denominator)
            .map(|p| &p.values)
    }
}

/// Builds the report. Every condition other than `base` gets a delta row and
/// an `X/base` percent row; every condition other than `ref` also gets an
/// `X/ref` row when a reference exists. Rows with no shared metric are
/// dropped.
pub fn comparison_report(
    speaker_id: impl Into<String>,
    conditions: Vec<ConditionAggregates>,
) -> Result<ComparisonReport, ReportError> {
    let speaker_id = speaker_id.into();
    for (i, c) in conditions.iter().enumerate() {
        if conditions[..i].iter().any(|d| d.label == c.label) {
            return Err(ReportError::DuplicateLabel { speaker_id, label: c.label.clone() });
        }
    }
    let base = match conditions.iter().find(|c| c.label == BASE_LABEL) {
        Some(b) => b.metrics,
        None => return Err(ReportError::MissingBase(speaker_id)),
    };
    let reference = conditions.iter().find(|c| c.label == REFERENCE_LABEL).map(|c| c.metrics);

    let mut deltas = Vec::new();
    let mut pct_rows = Vec::new();
    for c in conditions.iter().filter(|c| c.label != BASE_LABEL && c.label != REFERENCE_LABEL) {
        let values = MetricRow::combine(&c.metrics, &base, |x, y| Ok(x - y))?;
        if !values.is_empty() {
            deltas.push(DeltaRow { label: c.label.clone(), values });
        }
    }
    let mut push_pct = |num: &ConditionAggregates, den_label: &str, den: &AggregateMetrics| -> Result<(), ReportError> {
        let values = MetricRow::combine(&num.metrics, den, pct_increase)?;
        if !values.is_empty() {
            pct_rows.push(PctRow { numerator: num.label.clone(), denominator: den_label.into(), values });
        }
        Ok(())
    };
    for c in conditions.iter().filter(|c| c.label != BASE_LABEL && c.label != REFERENCE_LABEL) {
        push_pct(c, BASE_LABEL, &base)?;
    }
    if let Some(reference) = reference {
        for c in conditions.iter().filter(|c| c.label != REFERENCE_LABEL) {
            push_pct(c, REFERENCE_LABEL, &reference)?;
        }
    }
    let delta_mos_vs_base = deltas.first().and_then(|d| d.values.mos_mean);

    Ok(ComparisonReport { speaker_id, conditions, delta_mos_vs_base, deltas, pct_rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    TableText,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table-text" | "table" | "text" => Ok(Self::TableText),
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(ReportError::UnknownFormat(other.into())),
        }
    }
}

struct Line {
    speaker_id: String,
    row: &'static str,
    label: String,
    n: Option<usize>,
    cells: [Option<f64>; 4],
}

fn lines(reports: &[ComparisonReport]) -> Vec<Line> {
    let mut out = Vec::new();
    for r in reports {
        for c in &r.conditions {
            let m = &c.metrics;
            out.push(Line {
                speaker_id: r.speaker_id.clone(),
                row: "condition",
                label: c.label.clone(),
                n: Some(m.n),
                cells: [m.mos_mean, m.mos_std, m.snr_mean_db, m.similarity_mean],
            });
        }
        for d in &r.deltas {
            let v = &d.values;
            out.push(Line {
                speaker_id: r.speaker_id.clone(),
                row: "delta",
                label: format!("{}-{BASE_LABEL}", d.label),
                n: None,
                cells: [v.mos_mean, None, v.snr_mean_db, v.similarity_mean],
            });
        }
        for p in &r.pct_rows {
            let v = &p.values;
            out.push(Line {
                speaker_id: r.speaker_id.clone(),
                row: "pct",
                label: format!("{}/{}", p.numerator, p.denominator),
                n: None,
                cells: [v.mos_mean, None, v.snr_mean_db, v.similarity_mean],
            });
        }
    }
    out
}

fn fixed(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Renders one or more reports. Table and CSV output round to three decimals;
/// JSON keeps full precision and loads back with [`parse_reports`].
pub fn render(reports: &[ComparisonReport], format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(reports).expect("reports serialize");
            s.push('\n');
            s
        }
        ReportFormat::Csv => {
            let mut s = String::from(CSV_HEADER);
            s.push('\n');
            for l in lines(reports) {
                let n = l.n.map(|n| n.to_string()).unwrap_or_default();
                let cells: Vec<String> = l.cells.iter().map(|c| fixed(*c)).collect();
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    csv_field(&l.speaker_id),
                    l.row,
                    csv_field(&l.label),
                    n,
                    cells.join(",")
                );
            }
            s
        }
        ReportFormat::TableText => {
            let header: Vec<String> = CSV_HEADER.split(',').map(str::to_string).collect();
            let mut rows = vec![header];
            for l in lines(reports) {
                let mut row = vec![
                    l.speaker_id,
                    l.row.to_string(),
                    l.label,
                    l.n.map(|n| n.to_string()).unwrap_or_else(|| "-".into()),
                ];
                row.extend(l.cells.iter().map(|c| c.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into())));
                rows.push(row);
            }
            let widths: Vec<usize> =
                (0..rows[0].len()).map(|i| rows.iter().map(|r| r[i].chars().count()).max().unwrap_or(0)).collect();
            let mut s = String::new();
            for row in &rows {
                let cells: Vec<String> = row
                    .iter()
                    .zip(&widths)
                    .enumerate()
                    .map(|(i, (c, w))| if i < 3 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                    .collect();
                s.push_str(cells.join("  ").trim_end());
                s.push('\n');
            }
            s
        }
    }
}

/// Loads reports written by [`render`] in JSON format.
pub fn parse_reports(text: &str) -> Result<Vec<ComparisonReport>, ReportError> {
    serde_json::from_str(text).map_err(|e| ReportError::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mos(label: &str, v: f64) -> ConditionAggregates {
        ConditionAggregates::new(label, AggregateMetrics::from_means(5, Some(v), None, None))
    }

    #[test]
    fn pct_examples() {
        assert!((pct_increase(55.854, 41.747).unwrap() - 33.79).abs() < 0.01);
        assert!((pct_increase(4.172, 3.717).unwrap() - 12.24).abs() < 0.02);
        assert_eq!(pct_increase(7.5, 7.5).unwrap(), 0.0);
        assert_eq!(pct_increase(1.0, 0.0), Err(ReportError::DivisionByZero));
    }

    #[test]
    fn delta_against_base() {
        let r = comparison_report("2", vec![mos("base", 3.717), mos("lora_1000", 4.141)]).unwrap();
        assert!((r.delta_mos_vs_base.unwrap() - 0.424).abs() < 1e-12);
        assert!(r.pct("lora_1000", "ref").is_none());
    }

    #[test]
    fn identical_conditions_give_zero_rows() {
        let m = AggregateMetrics::from_means(5, Some(4.0), Some(40.0), Some(0.9));
        let r = comparison_report("x", vec![ConditionAggregates::new("base", m), ConditionAggregates::new("lora", m)])
            .unwrap();
        assert_eq!(*r.delta("lora").unwrap(), MetricRow { mos_mean: Some(0.0), snr_mean_db: Some(0.0), similarity_mean: Some(0.0) });
        assert_eq!(*r.pct("lora", "base").unwrap(), MetricRow { mos_mean: Some(0.0), snr_mean_db: Some(0.0), similarity_mean: Some(0.0) });
    }

    #[test]
    fn absent_metrics_are_omitted() {
        let base = AggregateMetrics::from_means(5, Some(3.0), Some(30.0), None);
        let lora = AggregateMetrics::from_means(5, Some(3.5), None, Some(0.8));
        let r = comparison_report("x", vec![ConditionAggregates::new("base", base), ConditionAggregates::new("lora", lora)])
            .unwrap();
        let d = r.delta("lora").unwrap();
        assert_eq!(d.snr_mean_db, None);
        assert_eq!(d.similarity_mean, None);
        let csv = render(&[r], ReportFormat::Csv);
        assert!(csv.contains("x,delta,lora-base,,0.500,,,\n"), "{csv}");
    }

    #[test]
    fn base_is_required() {
        assert_eq!(comparison_report("s", vec![mos("lora", 4.0)]), Err(ReportError::MissingBase("s".into())));
        assert!(matches!(
            comparison_report("s", vec![mos("base", 4.0), mos("base", 4.1)]),
            Err(ReportError::DuplicateLabel { .. })
        ));
    }

    #[test]
    fn reference_rows() {
        let r = comparison_report("s", vec![mos("ref", 4.0), mos("base", 3.0), mos("lora", 3.5)]).unwrap();
        let labels: Vec<_> = r.pct_rows.iter().map(|p| format!("{}/{}", p.numerator, p.denominator)).collect();
        assert_eq!(labels, ["lora/base", "base/ref", "lora/ref"]);
        assert!((r.pct("base", "ref").unwrap().mos_mean.unwrap() + 25.0).abs() < 1e-12);
    }

    #[test]
    fn csv_header_and_format_names() {
        let r = comparison_report("s", vec![mos("base", 3.0)]).unwrap();
        assert!(render(&[r], ReportFormat::Csv).starts_with(CSV_HEADER));
        assert_eq!("table-text".parse::<ReportFormat>().unwrap(), ReportFormat::TableText);
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
