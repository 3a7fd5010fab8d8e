//! CSV and JSON writers. Output is a pure function of its inputs.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use cmarkov::{CheckReport, IndexSet};
use serde::Serialize;

use crate::config::CONFIG_VERSION;

/// Column labels; vector states get one column per component.
pub fn headers(sets: &[IndexSet<f64>], dim: usize) -> Vec<String> {
    sets.iter()
        .flat_map(|s| {
            let label = s.label();
            (0..dim).map(move |c| if dim == 1 { label.clone() } else { format!("{label}[{c}]") })
        })
        .collect()
}

pub fn csv(headers: &[String], rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    let quoted: Vec<String> = headers.iter().map(|h| format!("\"{h}\"")).collect();
    out.push_str(&quoted.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

#[derive(Serialize)]
pub struct SampleTable<'a> {
    pub version: u32,
    pub seed: u64,
    pub columns: &'a [String],
    pub rows: &'a [Vec<f64>],
}

#[derive(Serialize)]
pub struct Moments {
    pub version: u32,
    pub columns: Vec<String>,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

#[derive(Serialize)]
pub struct ReportSet<'a> {
    pub version: u32,
    pub command: &'a str,
    pub passed: bool,
    pub reports: &'a [CheckReport],
}

pub fn reports_json(command: &str, reports: &[CheckReport]) -> Result<String> {
    let set = ReportSet {
        version: CONFIG_VERSION,
        command,
        passed: reports.iter().all(|r| r.passed),
        reports,
    };
    to_json(&set)
}

pub fn to_json<S: Serialize>(value: &S) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes to `path`, or to stdout when absent.
pub fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_uses_set_labels() {
        let sets = vec![IndexSet::Rect(vec![2.0, 1.0])];
        let h = headers(&sets, 1);
        assert_eq!(h, vec!["A(2.0,1.0)".to_string()]);
        assert_eq!(csv(&h, &[vec![0.5]]), "\"A(2.0,1.0)\"\n0.5\n");
        assert_eq!(headers(&sets, 2)[1], "A(2.0,1.0)[1]");
    }
}
