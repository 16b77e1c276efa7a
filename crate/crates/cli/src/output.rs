//! Render a [`Report`] to CSV or JSON bytes.
//!
//! Both formats open with the effective config — CSV as `# `-prefixed TOML
//! lines above the header row, JSON under the top-level `"config"` key — so
//! any output file can be traced back to, and re-run from, the exact
//! configuration that produced it. Rendering is deterministic: the same
//! report yields the same bytes.

use std::io::Write;

use serde_json::{json, Map, Value};

use crate::commands::{Column, Report};
use crate::config::OutputFormat;
use crate::CliError;

pub fn render(report: &Report) -> Result<Vec<u8>, CliError> {
    match report.config.output.format {
        OutputFormat::Csv => render_csv(report),
        OutputFormat::Json => render_json(report),
    }
}

fn fmt_num(v: f64) -> String {
    // Shortest representation that parses back to the same double.
    format!("{v}")
}

pub fn render_csv(report: &Report) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    for line in report.config.to_toml()?.lines() {
        writeln!(buf, "# {line}").expect("writes to a Vec cannot fail");
    }
    let mut w = csv::Writer::from_writer(buf);
    if !report.series.is_empty() {
        w.write_record(report.series.iter().map(|(name, _)| name.as_str()))
            .map_err(|e| CliError::Config(format!("csv: {e}")))?;
        let rows = report.series[0].1.len();
        for k in 0..rows {
            let record: Vec<String> = report
                .series
                .iter()
                .map(|(_, col)| match col {
                    Column::Num(v) => fmt_num(v[k]),
                    Column::Text(v) => v[k].clone(),
                })
                .collect();
            w.write_record(&record)
                .map_err(|e| CliError::Config(format!("csv: {e}")))?;
        }
    } else {
        w.write_record(["check", "residual", "tolerance", "pass"])
            .map_err(|e| CliError::Config(format!("csv: {e}")))?;
        for c in &report.checks {
            w.write_record([
                c.name.as_str(),
                &fmt_num(c.residual),
                &fmt_num(c.tolerance),
                if c.pass { "true" } else { "false" },
            ])
            .map_err(|e| CliError::Config(format!("csv: {e}")))?;
        }
    }
    w.into_inner()
        .map_err(|e| CliError::Config(format!("csv: {e}")))
}

pub fn render_json(report: &Report) -> Result<Vec<u8>, CliError> {
    let config = serde_json::to_value(&report.config)
        .map_err(|e| CliError::Config(format!("json: {e}")))?;
    let mut series = Map::new();
    for (name, col) in &report.series {
        let arr = match col {
            Column::Num(v) => json!(v),
            Column::Text(v) => json!(v),
        };
        series.insert(name.clone(), arr);
    }
    let checks: Vec<Value> = report
        .checks
        .iter()
        .map(|c| {
            json!({
                "name": c.name,
                "residual": c.residual,
                "tolerance": c.tolerance,
                "pass": c.pass,
            })
        })
        .collect();
    let mut root = Map::new();
    root.insert("config".into(), config);
    root.insert(
        "grid".into(),
        json!({
            "t0": report.config.grid.t0,
            "t1": report.config.grid.t1,
            "steps": report.config.grid.steps,
        }),
    );
    root.insert("series".into(), Value::Object(series));
    root.insert("checks".into(), Value::Array(checks));
    let mut bytes = serde_json::to_vec_pretty(&Value::Object(root))
        .map_err(|e| CliError::Config(format!("json: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}
