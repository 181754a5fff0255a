//! Comparison reports: arithmetic, rendering and round trips.

use proptest::prelude::*;
use voxgauge::report::{comparison_report, parse_reports, pct_increase, render, ConditionAggregates, ReportFormat};
use voxgauge::scores::AggregateMetrics;

fn cond(label: &str, mos: Option<f64>, snr: Option<f64>, sim: Option<f64>) -> ConditionAggregates {
    ConditionAggregates::new(label, AggregateMetrics::from_means(5, mos, snr, sim))
}

fn fixture() -> Vec<voxgauge::report::ComparisonReport> {
    vec![
        comparison_report(
            "1",
            vec![
                cond("ref", Some(3.481), Some(31.900), None),
                cond("base", Some(3.832), Some(41.747), Some(0.732)),
                cond("lora", Some(3.998), Some(55.854), Some(0.818)),
            ],
        )
        .unwrap(),
        comparison_report("2", vec![cond("base", Some(3.717), None, None), cond("lora_1000", Some(4.141), None, None)]).unwrap(),
    ]
}

#[test]
fn rendering_is_deterministic() {
    for format in [ReportFormat::TableText, ReportFormat::Csv, ReportFormat::Json] {
        assert_eq!(render(&fixture(), format), render(&fixture(), format));
    }
}

#[test]
fn csv_layout() {
    let csv = render(&fixture(), ReportFormat::Csv);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "speaker_id,row,label,n,mos_mean,mos_std,snr_mean_db,similarity_mean");
    assert!(lines.contains(&"1,condition,base,5,3.832,,41.747,0.732"));
    assert!(lines.contains(&"1,pct,lora/base,,4.332,,33.792,11.749"), "{csv}");
    assert!(lines.contains(&"2,delta,lora_1000-base,,0.424,,,"));
    assert!(!csv.contains('\r'));
    assert!(lines.iter().all(|l| l.split(',').count() == 8));
}

#[test]
fn json_round_trips_losslessly() {
    let reports = fixture();
    let text = render(&reports, ReportFormat::Json);
    assert_eq!(parse_reports(&text).unwrap(), reports);
}

#[test]
fn table_text_has_one_row_per_line() {
    let text = render(&fixture(), ReportFormat::TableText);
    let csv = render(&fixture(), ReportFormat::Csv);
    assert_eq!(text.lines().count(), csv.lines().count());
    assert!(text.lines().next().unwrap().starts_with("speaker_id"));
}

fn metrics() -> impl Strategy<Value = AggregateMetrics> {
    (1usize..20, prop::option::of(1.0f64..5.0), prop::option::of(0.0f64..2.0), prop::option::of(-10.0f64..60.0), prop::option::of(0.01f64..1.0))
        .prop_map(|(n, m, s, snr, sim)| AggregateMetrics { n, mos_mean: m, mos_std: s, snr_mean_db: snr, similarity_mean: sim })
}

proptest! {
    #[test]
    fn pct_inverts(b in prop::num::f64::NORMAL.prop_filter("moderate", |b| b.abs() > 1e-6 && b.abs() < 1e6), p in -1000.0f64..1000.0) {
        let new = b * (1.0 + p / 100.0);
        prop_assert!((pct_increase(new, b).unwrap() - p).abs() <= 1e-9);
    }

    #[test]
    fn any_report_round_trips(base in metrics(), lora in metrics(), reference in prop::option::of(metrics())) {
        let mut conditions = vec![ConditionAggregates::new("base", base), ConditionAggregates::new("lora", lora)];
        if let Some(r) = reference {
            conditions.push(ConditionAggregates::new("ref", r));
        }
        let report = comparison_report("s", conditions).unwrap();
        let text = render(std::slice::from_ref(&report), ReportFormat::Json);
        prop_assert_eq!(parse_reports(&text).unwrap(), vec![report.clone()]);
        // Deltas exist exactly where both sides carry the metric.
        let d = report.delta("lora");
        prop_assert_eq!(d.and_then(|d| d.mos_mean).is_some(), base.mos_mean.is_some() && lora.mos_mean.is_some());
        if let (Some(b), Some(l)) = (base.mos_mean, lora.mos_mean) {
            prop_assert_eq!(report.delta_mos_vs_base, Some(l - b));
        }
    }
}
