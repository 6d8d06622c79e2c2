//! File formats: CSV matrix blocks, gamma vector lines, and JSONL records.
//!
//! CSV matrices are written as one block of n comma-separated lines per
//! matrix, blocks separated by a blank line. Numbers use the shortest
//! decimal representation that round-trips binary64, so CSV output is a
//! lossless interchange format.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use corrgen::linalg::SymMatrix;
use corrgen::{CorrError, Result};
use serde::Serialize;

/// Wrap an I/O error with the path it concerns (exit code 3 territory).
pub fn io_err(path: &Path, source: std::io::Error) -> CorrError {
    CorrError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

/// Either a file or standard output.
pub enum Sink {
    Stdout,
    File(PathBuf),
}

impl Sink {
    pub fn from_option(path: Option<&Path>) -> Sink {
        match path {
            Some(p) => Sink::File(p.to_path_buf()),
            None => Sink::Stdout,
        }
    }

    pub fn write_all(&self, content: &str) -> Result<()> {
        match self {
            Sink::Stdout => {
                let mut out = std::io::stdout().lock();
                out.write_all(content.as_bytes())
                    .map_err(|e| io_err(Path::new("<stdout>"), e))
            }
            Sink::File(path) => fs::write(path, content).map_err(|e| io_err(path, e)),
        }
    }
}

fn join_row(values: impl Iterator<Item = f64>) -> String {
    values
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Render matrices as CSV blocks separated by blank lines.
pub fn matrices_to_csv(mats: &[SymMatrix]) -> String {
    let mut out = String::new();
    for (k, m) in mats.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        let n = m.dim();
        for i in 0..n {
            out.push_str(&join_row((0..n).map(|j| m.get(i, j))));
            out.push('\n');
        }
    }
    out
}

/// Render one vector per comma-separated line.
pub fn vectors_to_csv(vectors: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for v in vectors {
        out.push_str(&join_row(v.iter().copied()));
        out.push('\n');
    }
    out
}

fn parse_row(line: &str, context: &str) -> Result<Vec<f64>> {
    line.split(',')
        .map(|tok| {
            tok.trim().parse::<f64>().map_err(|_| {
                CorrError::DomainError(format!("{context}: cannot parse '{}' as a number", tok.trim()))
            })
        })
        .collect()
}

/// Parse CSV matrix blocks (square, symmetric up to input precision).
pub fn parse_matrices_csv(content: &str) -> Result<Vec<SymMatrix>> {
    let mut blocks: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut current: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                blocks.push(std::mem::take(&mut current));
            }
            continue;
        }
        current.push(parse_row(line, &format!("line {}", lineno + 1))?);
    }
    if !current.is_empty() {
        blocks.push(current);
    }
    if blocks.is_empty() {
        return Err(CorrError::DomainError("no matrix blocks found in input".into()));
    }
    blocks
        .into_iter()
        .enumerate()
        .map(|(k, rows)| {
            let n = rows.len();
            if rows.iter().any(|r| r.len() != n) {
                return Err(CorrError::DimensionError(format!(
                    "matrix block {} is not square ({n} rows)",
                    k + 1
                )));
            }
            SymMatrix::from_rows(&rows)
        })
        .collect()
}

/// Parse one vector per line.
pub fn parse_vectors_csv(content: &str) -> Result<Vec<Vec<f64>>> {
    let vectors: Vec<Vec<f64>> = content
        .lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(lineno, line)| parse_row(line, &format!("line {}", lineno + 1)))
        .collect::<Result<_>>()?;
    if vectors.is_empty() {
        return Err(CorrError::DomainError("no vectors found in input".into()));
    }
    Ok(vectors)
}

/// Render serializable records as JSON lines.
pub fn to_jsonl<T: Serialize>(records: &[T]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        let line = serde_json::to_string(r)
            .map_err(|e| CorrError::InvalidState(format!("JSON encoding failed: {e}")))?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

/// Parse a comma-separated list of numbers from a flag value.
pub fn parse_list(s: &str, flag: &str) -> Result<Vec<f64>> {
    parse_row(s, flag)
}

/// Parse a comma-separated list of positive integers from a flag value.
pub fn parse_usize_list(s: &str, flag: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|tok| {
            tok.trim().parse::<usize>().map_err(|_| {
                CorrError::DomainError(format!("{flag}: cannot parse '{}' as an integer", tok.trim()))
            })
        })
        .collect()
}
