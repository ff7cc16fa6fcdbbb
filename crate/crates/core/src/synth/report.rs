//! Flat CSV tables for benchmark reports.
//!
//! Every row may carry leading constant columns (for example a config
//! digest and seed) given as `(name, value)` pairs.

use std::io::Write;

use super::experiment::{MetricsReport, Summary};
use crate::error::Result;

const GROUPS: [&str; 4] = ["b1", "b2", "b3", "b4"];

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn header(prefix: &[(&str, String)], rest: Vec<String>) -> Vec<String> {
    prefix.iter().map(|(k, _)| k.to_string()).chain(rest).collect()
}

fn row(prefix: &[(&str, String)], rest: Vec<String>) -> Vec<String> {
    prefix.iter().map(|(_, v)| v.clone()).chain(rest).collect()
}

/// One row per (setting, replication, method), including failures.
pub fn write_replications_csv<W: Write>(
    reports: &[MetricsReport],
    prefix: &[(&str, String)],
    w: W,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut cols: Vec<String> = ["setting", "replication", "method", "status", "selected", "real_fraction", "dummy_fraction"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for g in GROUPS {
        cols.push(format!("ratio_{g}"));
        cols.push(format!("used_{g}"));
        cols.push(format!("missing_{g}"));
    }
    cols.extend(
        [
            "target",
            "predicted_mean",
            "predicted_variance",
            "constraint_residual",
            "converged",
            "achieved_mean",
            "achieved_variance",
            "optimum_variance",
            "abs_mean_error",
            "variance_ratio",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    let width = cols.len();
    out.write_record(header(prefix, cols))?;

    for rep in reports {
        let mut rows: Vec<(usize, usize, Vec<String>)> = Vec::new();
        for r in &rep.records {
            let m = &r.metrics;
            let mut v = vec![
                r.setting.to_string(),
                r.replication.to_string(),
                r.method.label().to_string(),
                "ok".to_string(),
                r.selected.join(" "),
                num(m.real_fraction),
                num(m.dummy_fraction),
            ];
            for g in &m.ratios {
                v.extend([opt(g.mean), g.used.to_string(), g.missing.to_string()]);
            }
            v.extend([
                num(r.target),
                num(r.predicted_mean),
                num(r.predicted_variance),
                num(r.constraint_residual),
                r.converged.to_string(),
                num(r.achieved_mean),
                num(r.achieved_variance),
                num(r.optimum_variance),
                num(r.abs_mean_error()),
                num(r.variance_ratio()),
            ]);
            rows.push((r.replication, r.method as usize, v));
        }
        for f in &rep.failures {
            let mut v = vec![
                f.setting.to_string(),
                f.replication.to_string(),
                f.method.label().to_string(),
                format!("failed: {}", f.message),
            ];
            v.resize(width, String::new());
            rows.push((f.replication, f.method as usize, v));
        }
        rows.sort_by_key(|(r, m, _)| (*r, *m));
        for (_, _, v) in rows {
            out.write_record(row(prefix, v))?;
        }
    }
    out.flush()?;
    Ok(())
}

fn summary_cols(name: &str) -> [String; 4] {
    [
        format!("{name}_mean"),
        format!("{name}_std"),
        format!("{name}_median"),
        format!("{name}_n"),
    ]
}

fn summary_vals(s: &Summary) -> [String; 4] {
    [num(s.mean), num(s.std), num(s.median), s.count.to_string()]
}

/// One row per (setting, method).
pub fn write_aggregates_csv<W: Write>(
    reports: &[MetricsReport],
    prefix: &[(&str, String)],
    w: W,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut cols: Vec<String> = ["setting", "method", "replications", "failed"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend(summary_cols("real_fraction"));
    cols.extend(summary_cols("dummy_fraction"));
    for g in GROUPS {
        cols.extend(summary_cols(&format!("ratio_{g}")));
        cols.push(format!("missing_{g}"));
    }
    cols.extend(summary_cols("abs_mean_error"));
    cols.extend(summary_cols("variance_ratio"));
    out.write_record(header(prefix, cols))?;

    for rep in reports {
        for a in &rep.aggregates {
            let mut v = vec![
                a.setting.to_string(),
                a.method.label().to_string(),
                a.replications.to_string(),
                a.failed.to_string(),
            ];
            v.extend(summary_vals(&a.real_fraction));
            v.extend(summary_vals(&a.dummy_fraction));
            for (s, miss) in a.ratios.iter().zip(a.ratio_missing) {
                v.extend(summary_vals(s));
                v.push(miss.to_string());
            }
            v.extend(summary_vals(&a.abs_mean_error));
            v.extend(summary_vals(&a.variance_ratio));
            out.write_record(row(prefix, v))?;
        }
    }
    out.flush()?;
    Ok(())
}
