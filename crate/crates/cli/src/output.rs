//! Rendering helpers shared by the subcommands.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use dpos_gov::{Rational, SystemConfig};

/// Output formats of every subcommand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

/// `15/7 (2.14)` — the exact value first, a two-decimal reading second.
pub fn fraction(r: &Rational) -> String {
    format!("{} ({})", r, r.two_decimals())
}

/// One comment line echoing every parameter that shaped the run.
pub fn run_header(config: &SystemConfig) -> String {
    format!(
        "# rule={} v={} n={} t={} lambda={} delta={}",
        config.rule,
        config.max_votes,
        config.committee_size,
        config.min_approvals,
        config.lambda,
        config.delta
    )
}

/// Plain aligned table: columns padded to their widest cell, two-space
/// gutter, no trailing spaces.
pub fn render_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let mut emit = |cells: &[String]| {
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            let _ = write!(out, "{cell:<width$}", width = widths[i]);
        }
        while out.ends_with(' ') {
            out.pop();
        }
        out.push('\n');
    };
    emit(&headers.iter().map(|h| h.to_string()).collect::<Vec<_>>());
    for row in rows {
        emit(row);
    }
    out
}

/// CSV text from a header and rows. Cells contain no commas, quotes, or
/// newlines by construction (ids, dates, integers).
pub fn render_csv(header: &str, rows: &[Vec<String>]) -> String {
    let mut out = String::with_capacity(rows.len() * 24 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn json_string<T: serde::Serialize>(value: &T) -> serde_json::Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)
}
