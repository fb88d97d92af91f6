use std::io::Write;

use crate::args::Cli;
use crate::failure::{Failure, Outcome};

/// Writes `text` to `--output`, or to stdout.
pub fn emit(cli: &Cli, text: &str) -> Outcome<()> {
    match &cli.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::usage(format!("stdout: {e}")))
        }
    }
}

pub fn json<T: serde::Serialize>(value: &T) -> Outcome<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Failure::usage(format!("serializing output: {e}")))
}

pub fn csv(columns: &[&str], rows: &[Vec<String>]) -> Outcome<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Failure::usage(format!("writing csv: {e}"));
    w.write_record(columns).map_err(err)?;
    for row in rows {
        w.write_record(row).map_err(err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Failure::usage(format!("writing csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Failure::usage(e.to_string()))
}

/// Left-aligned ASCII columns separated by two spaces.
pub fn table(columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = columns.iter().map(|c| c.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        let text: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:<w$}"))
            .collect();
        text.join("  ").trim_end().to_string() + "\n"
    };
    let rules: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    let mut out = line(columns.to_vec());
    out += &line(rules.iter().map(String::as_str).collect());
    for row in rows {
        out += &line(row.iter().map(String::as_str).collect());
    }
    out
}

/// Shortest round-tripping text of a float; `inf`, `-inf` or `nan` when
/// not finite.
pub fn number(v: f64) -> String {
    if v.is_finite() {
        serde_json::Value::from(v).to_string()
    } else {
        v.to_string().to_ascii_lowercase()
    }
}
