use std::fs;
use std::path::Path;

use super::{ApSeries, EvalReport, MetricReport, SizeBucket, IOU_THRESHOLDS_PCT};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 5] = ["metric", "threshold", "scope", "category_id", "ap"];

fn fmt_ap(ap: Option<f64>) -> String {
    ap.map(|v| format!("{v:.6}")).unwrap_or_default()
}

fn push_series(
    w: &mut csv::Writer<Vec<u8>>,
    metric: &str,
    scope: &str,
    category: Option<i64>,
    s: &ApSeries,
    ti: usize,
) -> csv::Result<()> {
    let t = format!("{:.2}", IOU_THRESHOLDS_PCT[ti] as f64 / 100.0);
    let cat = category.map(|c| c.to_string()).unwrap_or_default();
    w.write_record([metric, &t, scope, &cat, &fmt_ap(s.per_threshold[ti])])
}

fn write_metric(w: &mut csv::Writer<Vec<u8>>, metric: &str, m: &MetricReport) -> csv::Result<()> {
    for ti in 0..IOU_THRESHOLDS_PCT.len() {
        push_series(w, metric, "all", None, &m.all, ti)?;
        for b in SizeBucket::ALL {
            push_series(w, metric, b.as_str(), None, m.bucket(b), ti)?;
        }
        for (&c, s) in &m.per_category {
            push_series(w, metric, "category", Some(c), s, ti)?;
        }
    }
    Ok(())
}

/// One row per (metric, threshold, scope) where scope is `all`, a size
/// bucket, or `category` with its id. Missing APs (no ground truth in the
/// scope) are left empty.
pub fn report_to_csv(r: &EvalReport) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let write = |w: &mut csv::Writer<Vec<u8>>| -> csv::Result<()> {
        w.write_record(CSV_HEADER)?;
        write_metric(w, "mask", &r.mask)?;
        write_metric(w, "boundary", &r.boundary)
    };
    write(&mut w).expect("writing to memory cannot fail");
    w.into_inner().expect("writing to memory cannot fail")
}

pub fn report_to_json(r: &EvalReport) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(r).expect("report serialization cannot fail");
    out.push(b'\n');
    out
}

/// Writes `<stem>.csv` and `<stem>.json` next to `path`, whatever its
/// extension.
pub fn emit_report(r: &EvalReport, path: &Path) -> Result<()> {
    if path.file_name().is_none() {
        return Err(Error::Validation(format!("not a file path: {}", path.display())));
    }
    fs::write(path.with_extension("csv"), report_to_csv(r))?;
    fs::write(path.with_extension("json"), report_to_json(r))?;
    Ok(())
}
