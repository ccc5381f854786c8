//! Deterministic report rendering: exact rationals everywhere, decimals only
//! at this boundary, CSV with minimal quoting, aligned text tables.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_rational::Ratio;
use shiftdrift_core::{Error, Result};

/// Six-digit decimal rendering of an exact rational.
pub fn dec(r: Ratio<i64>) -> String {
    format!("{:.6}", *r.numer() as f64 / *r.denom() as f64)
}

/// Exact rendering: `p/q`, or just `p` for integers. Exact zeros print as 0.
pub fn rat(r: Ratio<i64>) -> String {
    r.to_string()
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&'static str]) -> Table {
        Table { name: name.into(), header: header.to_vec(), rows: Vec::new() }
    }

    pub fn csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|f| csv_field(f)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn text(&self) -> String {
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
        for row in &self.rows {
            for (i, f) in row.iter().enumerate() {
                widths[i] = widths[i].max(f.len());
            }
        }
        let mut out = String::new();
        let render = |out: &mut String, cells: Vec<&str>| {
            let mut line = String::new();
            for (i, c) in cells.iter().enumerate() {
                if i > 0 {
                    line.push_str("  ");
                }
                let _ = write!(line, "{c:<width$}", width = widths[i]);
            }
            out.push_str(line.trim_end());
            out.push('\n');
        };
        render(&mut out, self.header.clone());
        for row in &self.rows {
            render(&mut out, row.iter().map(|s| s.as_str()).collect());
        }
        out
    }
}

/// One command's output: a titled sequence of note lines and tables.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub sections: Vec<Section>,
}

#[derive(Debug, Clone)]
pub struct Section {
    pub title: String,
    pub notes: Vec<String>,
    pub tables: Vec<Table>,
}

impl Section {
    pub fn new(title: impl Into<String>) -> Section {
        Section { title: title.into(), notes: Vec::new(), tables: Vec::new() }
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.notes.push(line.into());
    }
}

impl Report {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            out.push_str(&format!("== {} ==\n", s.title));
            for n in &s.notes {
                out.push_str(n);
                out.push('\n');
            }
            for t in &s.tables {
                out.push('\n');
                out.push_str(&format!("[{}]\n", t.name));
                out.push_str(&t.text());
            }
        }
        out
    }

    /// `(file stem, csv content)` per table, section-qualified.
    pub fn csv_parts(&self) -> Vec<(String, String)> {
        let mut parts = Vec::new();
        for s in &self.sections {
            for t in &s.tables {
                parts.push((sanitize(&format!("{}_{}", s.title, t.name)), t.csv()));
            }
        }
        parts
    }
}

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Csv,
}

/// Prints the report to stdout, or writes it under `out` with one file per
/// CSV table (`--format csv`) or a single text file. Emission is the only
/// side-effecting step; content is deterministic for identical inputs.
pub fn emit(report: &Report, command: &str, format: Format, out: Option<&Path>) -> Result<()> {
    match (out, format) {
        (None, Format::Text) => {
            print!("{}", report.render_text());
        }
        (None, Format::Csv) => {
            for (stem, csv) in report.csv_parts() {
                println!("# table: {stem}");
                print!("{csv}");
            }
        }
        (Some(dir), Format::Text) => {
            fs::create_dir_all(dir).map_err(|e| Error::input(format!("{}: {e}", dir.display())))?;
            let path = dir.join(format!("{command}.txt"));
            fs::write(&path, report.render_text())
                .map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
            println!("wrote {}", path.display());
        }
        (Some(dir), Format::Csv) => {
            fs::create_dir_all(dir).map_err(|e| Error::input(format!("{}: {e}", dir.display())))?;
            for (stem, csv) in report.csv_parts() {
                let path = dir.join(format!("{stem}.csv"));
                fs::write(&path, csv)
                    .map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}
