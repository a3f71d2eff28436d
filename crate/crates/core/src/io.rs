//! Plain-text formats.
//!
//! Matrices are header-free CSV, one row per line. Assignments are one
//! zero-based label per line. Spectra are `index,value,gap` with a header
//! and 1-based indices; the last row has an empty gap. Dendrograms are
//! `step,left,right,new_id,height` with a header.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::clustering::{Dendrogram, Merge};
use crate::{Assignment, Error, Matrix, Result, Spectrum};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Non-blank lines with their 1-based line numbers.
fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        let t = line.trim();
        if !t.is_empty() {
            out.push((i + 1, t.to_string()));
        }
    }
    Ok(out)
}

fn parse_f64(path: &Path, line: usize, s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("'{}' is not a number", s.trim())))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("'{}' is not finite", s.trim())));
    }
    Ok(v)
}

fn parse_usize(path: &Path, line: usize, s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("'{}' is not a nonnegative integer", s.trim())))
}

fn write_all(path: &Path, body: &str) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    w.write_all(body.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let lines = read_lines(path)?;
    if lines.is_empty() {
        return Err(parse_err(path, 1, "matrix file is empty"));
    }
    let mut cols = None;
    let mut data = Vec::new();
    for (no, line) in &lines {
        let row: Vec<f64> = line
            .split(',')
            .map(|f| parse_f64(path, *no, f))
            .collect::<Result<_>>()?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(parse_err(path, *no, format!("expected {c} fields, found {}", row.len())))
            }
            _ => {}
        }
        data.extend(row);
    }
    Matrix::new(lines.len(), cols.unwrap_or(0), data)
}

/// Values printed with Rust's shortest round-trip formatting.
pub fn matrix_csv(m: &Matrix) -> String {
    let mut s = String::new();
    for row in m.row_iter() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    write_all(path, &matrix_csv(m))
}

/// Labels are renumbered by first appearance only if some label in
/// `0..max` is unused.
pub fn read_assignment(path: &Path) -> Result<Assignment> {
    let lines = read_lines(path)?;
    if lines.is_empty() {
        return Err(parse_err(path, 1, "assignment file is empty"));
    }
    let labels = lines
        .iter()
        .map(|(no, l)| parse_usize(path, *no, l))
        .collect::<Result<Vec<_>>>()?;
    Assignment::from_labels(labels.clone())
        .or_else(|_| Ok(Assignment::relabel_by_first_appearance(&labels)))
}

pub fn assignment_csv(a: &Assignment) -> String {
    let mut s = String::with_capacity(a.n() * 3);
    for l in a.labels() {
        s.push_str(&l.to_string());
        s.push('\n');
    }
    s
}

pub fn write_assignment(path: &Path, a: &Assignment) -> Result<()> {
    write_all(path, &assignment_csv(a))
}

/// Accepts the three-column form written by [`write_spectrum`] or a bare
/// list of values, one per line.
pub fn read_spectrum(path: &Path) -> Result<Spectrum> {
    let lines = read_lines(path)?;
    let mut values = Vec::new();
    for (k, (no, line)) in lines.iter().enumerate() {
        if k == 0 && line.starts_with("index") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let v = match fields.len() {
            1 => parse_f64(path, *no, fields[0])?,
            3 => parse_f64(path, *no, fields[1])?,
            f => return Err(parse_err(path, *no, format!("expected 1 or 3 fields, found {f}"))),
        };
        values.push(v);
    }
    Spectrum::new(values)
}

pub fn spectrum_csv(s: &Spectrum) -> String {
    let mut out = String::from("index,value,gap\n");
    let gaps = s.gaps();
    for (i, v) in s.values().iter().enumerate() {
        match gaps.get(i) {
            Some(g) => out.push_str(&format!("{},{v:?},{g:?}\n", i + 1)),
            None => out.push_str(&format!("{},{v:?},\n", i + 1)),
        }
    }
    out
}

pub fn write_spectrum(path: &Path, s: &Spectrum) -> Result<()> {
    write_all(path, &spectrum_csv(s))
}

pub fn read_dendrogram(path: &Path) -> Result<Dendrogram> {
    let lines = read_lines(path)?;
    let mut merges = Vec::new();
    for (k, (no, line)) in lines.iter().enumerate() {
        if k == 0 && line.starts_with("step") {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(parse_err(path, *no, format!("expected 5 fields, found {}", f.len())));
        }
        merges.push(Merge {
            step: parse_usize(path, *no, f[0])?,
            left: parse_usize(path, *no, f[1])?,
            right: parse_usize(path, *no, f[2])?,
            new_id: parse_usize(path, *no, f[3])?,
            height: parse_f64(path, *no, f[4])?,
        });
    }
    Dendrogram::new(merges.len() + 1, merges)
}

pub fn dendrogram_csv(d: &Dendrogram) -> String {
    let mut s = String::from("step,left,right,new_id,height\n");
    for m in d.merges() {
        s.push_str(&format!(
            "{},{},{},{},{:?}\n",
            m.step, m.left, m.right, m.new_id, m.height
        ));
    }
    s
}

pub fn write_dendrogram(path: &Path, d: &Dendrogram) -> Result<()> {
    write_all(path, &dendrogram_csv(d))
}
