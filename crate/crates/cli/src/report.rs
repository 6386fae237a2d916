//! Human-readable summary of a finished run.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::CliError;
use crate::manifest::{sha256_hex, Manifest};

const MAX_ROWS: usize = 40;

fn render_csv(text: &str, out: &mut String) {
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    if rows.is_empty() {
        return;
    }
    let cols = rows.iter().map(|r| r.len()).max().unwrap_or(0);
    let mut width = vec![0; cols];
    for r in rows.iter().take(MAX_ROWS + 1) {
        for (i, c) in r.iter().enumerate() {
            width[i] = width[i].max(c.len());
        }
    }
    for r in rows.iter().take(MAX_ROWS + 1) {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{c:>w$}", w = width[i]))
            .collect();
        let _ = writeln!(out, "  {}", line.join("  "));
    }
    if rows.len() > MAX_ROWS + 1 {
        let _ = writeln!(out, "  ... {} more rows", rows.len() - MAX_ROWS - 1);
    }
}

/// Render the manifest of `dir`: run metadata, contract outcomes, file hash
/// checks and every top-level CSV table.
pub fn render(dir: &Path) -> Result<String, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Validation(format!(
            "{} is not a directory",
            dir.display()
        )));
    }
    let m = Manifest::read(dir)?;
    let mut s = String::new();
    let _ = writeln!(s, "experiment  {}", m.experiment);
    let _ = writeln!(s, "status      {}", m.status);
    if let Some(f) = &m.failure {
        let _ = writeln!(s, "failure     {}: {}", f.kind, f.message);
    }
    let _ = writeln!(s, "seed        {}", m.seed);
    let _ = writeln!(s, "threads     {}", m.threads);
    let _ = writeln!(s, "wall time   {:.3} s", m.wall_time_s);
    let _ = writeln!(s, "version     {} ({})", m.version, m.git_describe);
    if !m.contracts.is_empty() {
        let _ = writeln!(s, "\ncontracts");
        for c in &m.contracts {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "  [{tag}] {}: {}", c.name, c.detail);
        }
    }
    let _ = writeln!(s, "\nfiles");
    let mut tables = Vec::new();
    for f in &m.files {
        let status = match fs::read(dir.join(&f.path)) {
            Ok(bytes) if sha256_hex(&bytes) == f.sha256 => {
                if f.path.ends_with(".csv") && !f.path.contains('/') && f.path != "trajectory.csv" {
                    tables.push((f.path.clone(), String::from_utf8_lossy(&bytes).into_owned()));
                }
                "ok"
            }
            Ok(_) => "HASH MISMATCH",
            Err(_) => "MISSING",
        };
        let _ = writeln!(s, "  {:<32} {:>10} B  {status}", f.path, f.bytes);
    }
    for (name, text) in tables {
        let _ = writeln!(s, "\n{name}");
        render_csv(&text, &mut s);
    }
    Ok(s)
}
