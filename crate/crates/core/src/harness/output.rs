use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::HarnessError;
use crate::formulas::FormulaReport;
use crate::paths::PathBundle;

pub const REPORTS_CSV: &str = "paths.csv";
pub const SUMMARY_JSON: &str = "summary.json";

/// 17 significant digits, round-trip exact.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// `path_id, lhs, term_<name>..., rhs, residual`, one row per report.
pub fn write_reports_csv(path: &Path, reports: &[FormulaReport]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    let names: Vec<&str> = reports.first().map(|r| r.term_names().collect()).unwrap_or_default();
    let mut header = vec!["path_id".to_string(), "lhs".to_string()];
    header.extend(names.iter().map(|n| format!("term_{n}")));
    header.extend(["rhs".to_string(), "residual".to_string()]);
    w.write_record(&header)?;
    for (i, r) in reports.iter().enumerate() {
        let mut row = vec![i.to_string(), num(r.lhs)];
        row.extend(r.terms.iter().map(|(_, v)| num(*v)));
        row.extend([num(r.rhs), num(r.residual)]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Long format: `path_id, k, t, jump, b, y, z, a, x, a_left, x_left`.
pub fn write_bundles_csv(out: impl Write, bundles: &[PathBundle]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["path_id", "k", "t", "jump", "b", "y", "z", "a", "x", "a_left", "x_left"])?;
    for (i, b) in bundles.iter().enumerate() {
        let g = b.grid();
        for k in 0..b.len() {
            w.write_record([
                i.to_string(),
                k.to_string(),
                num(g.time(k)),
                u8::from(g.is_jump(k)).to_string(),
                num(b.brownian()[k]),
                num(b.y()[k]),
                num(b.z()[k]),
                num(b.a()[k]),
                num(b.x()[k]),
                num(b.a_left(k)),
                num(b.x_left(k)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
