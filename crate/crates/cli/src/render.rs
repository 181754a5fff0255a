//! Output for the subcommands whose results are not comparison reports.
//!
//! JSON is the library value pretty-printed. CSV and text flatten it into one
//! row per item with floats printed to 4 decimals.

use serde_json::{json, Map, Value};

use crate::Format;

pub fn json(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

/// Renders flat objects, one per row, with the given column order.
pub fn records(rows: &[Value], format: Format, columns: &[&str]) -> String {
    match format {
        Format::Json => json(&Value::Array(rows.to_vec())),
        Format::Csv => csv(rows, columns),
        Format::TableText => table(rows, columns),
    }
}

const ANALYSIS_COLUMNS: [&str; 16] = [
    "speaker_id",
    "clip_count",
    "total_hours",
    "clip_len_mean_s",
    "clip_len_std_s",
    "unique_words",
    "total_words",
    "avg_words_per_clip",
    "energy_mean_db",
    "energy_std_db",
    "mos_mean",
    "mos_std",
    "class",
    "temperature",
    "top_k",
    "advisory",
];

/// `rows` holds `{stats, forecast, decoding}` objects.
pub fn analysis(rows: &[Value], format: Format) -> String {
    if format == Format::Json {
        return json(&Value::Array(rows.to_vec()));
    }
    let flat: Vec<Value> = rows
        .iter()
        .map(|r| {
            let mut obj = r["stats"].as_object().cloned().unwrap_or_default();
            obj.insert("class".into(), r["forecast"]["class"].clone());
            for key in ["temperature", "top_k", "advisory"] {
                obj.insert(key.into(), r["decoding"].get(key).cloned().unwrap_or(Value::Null));
            }
            Value::Object(obj)
        })
        .collect();
    records(&flat, format, &ANALYSIS_COLUMNS)
}

/// `result` holds `{selected_step, ranking, divergence}`.
pub fn selection(result: &Value, format: Format) -> String {
    if format == Format::Json {
        return json(result);
    }
    let window = result["divergence"]["window"].as_array().map(|w| (w[0].as_u64(), w[1].as_u64()));
    let ranking = result["ranking"].as_array().cloned().unwrap_or_default();
    let rows: Vec<Value> = ranking
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let step = r["step"].as_u64();
            let in_window = match window {
                Some((Some(a), Some(b))) => step.is_some_and(|s| a <= s && s <= b),
                _ => false,
            };
            json!({ "rank": i + 1, "step": r["step"], "score": r["score"], "in_divergence_window": in_window })
        })
        .collect();
    let columns = ["rank", "step", "score", "in_divergence_window"];
    let mut out = records(&rows, format, &columns);
    if format == Format::TableText {
        let d = &result["divergence"];
        let line = match d.get("diverged").and_then(Value::as_bool) {
            None => "divergence: not evaluated (fewer than two points carry val_loss and mos)".to_string(),
            Some(false) => "divergence: none".to_string(),
            Some(true) => format!(
                "divergence: steps {}..{}, mos drop {}, loss drop {}",
                cell(&d["window"][0]),
                cell(&d["window"][1]),
                cell(&d["mos_drop"]),
                cell(&d["loss_drop"])
            ),
        };
        out.push('\n');
        out.push_str(&line);
        out.push('\n');
    }
    out
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) if n.is_f64() => format!("{:.4}", n.as_f64().unwrap_or(f64::NAN)),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn get<'a>(row: &'a Value, column: &str) -> &'a Value {
    static NULL: Value = Value::Null;
    row.as_object().and_then(|o: &Map<String, Value>| o.get(column)).unwrap_or(&NULL)
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv(rows: &[Value], columns: &[&str]) -> String {
    let mut out = columns.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = columns.iter().map(|c| csv_escape(&cell(get(row, c)))).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn table(rows: &[Value], columns: &[&str]) -> String {
    let body: Vec<Vec<String>> =
        rows.iter().map(|row| columns.iter().map(|c| cell(get(row, c))).collect()).collect();
    let widths: Vec<usize> = columns
        .iter()
        .enumerate()
        .map(|(i, c)| body.iter().map(|r| r[i].chars().count()).chain([c.len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        format!("{}\n", padded.join("  ").trim_end())
    };
    let header: Vec<String> = columns.iter().map(|c| c.to_string()).collect();
    let mut out = line(&header);
    for r in &body {
        out.push_str(&line(r));
    }
    out
}
