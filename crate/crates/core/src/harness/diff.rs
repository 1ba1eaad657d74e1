use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Largest relative deviation of one column between two tables.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnDiff {
    pub file: String,
    pub column: String,
    pub max_rel: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiffReport {
    pub columns: Vec<ColumnDiff>,
    /// Files present on one side only or with different shapes.
    pub mismatched: Vec<String>,
}

impl DiffReport {
    pub fn max_rel(&self) -> f64 {
        self.columns.iter().map(|c| c.max_rel).fold(0.0, f64::max)
    }

    pub fn within(&self, tol: f64) -> bool {
        self.mismatched.is_empty() && self.max_rel() <= tol
    }
}

struct Table {
    names: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn parse_table(text: &str, name: &str) -> Result<Table> {
    let mut names = Vec::new();
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(c) = line.strip_prefix('#') {
            // the last comment line before the data names the columns
            if rows.is_empty() {
                names = c.split_whitespace().map(str::to_string).collect();
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|x| x.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                line: k + 1,
                reason: format!("{name}: {e}"),
            })?;
        rows.push(row);
    }
    Ok(Table { names, rows })
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b || (a.is_nan() && b.is_nan()) {
        0.0
    } else if a.is_nan() || b.is_nan() {
        f64::INFINITY
    } else {
        (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }
}

/// Compares two numeric tables column by column.
pub fn diff_tables(a: &str, b: &str, name: &str, report: &mut DiffReport) -> Result<()> {
    let (ta, tb) = (parse_table(a, name)?, parse_table(b, name)?);
    let width = ta.rows.first().map_or(0, Vec::len);
    let same_shape = ta.rows.len() == tb.rows.len() && ta.rows.iter().chain(&tb.rows).all(|r| r.len() == width);
    if !same_shape {
        report.mismatched.push(name.to_string());
        return Ok(());
    }
    for c in 0..width {
        let max_rel = ta
            .rows
            .iter()
            .zip(&tb.rows)
            .map(|(x, y)| rel(x[c], y[c]))
            .fold(0.0, f64::max);
        let column = if ta.names.len() == width {
            ta.names[c].clone()
        } else {
            format!("col{c}")
        };
        report.columns.push(ColumnDiff {
            file: name.to_string(),
            column,
            max_rel,
        });
    }
    Ok(())
}

fn data_files(dir: &Path) -> Result<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    for e in fs::read_dir(dir)? {
        let name = e?.file_name().to_string_lossy().into_owned();
        if name.ends_with(".txt") && !name.ends_with("_equations.txt") {
            out.insert(name);
        }
    }
    Ok(out)
}

/// Diffs two result directories, or two single data files.
pub fn diff_paths(a: &Path, b: &Path) -> Result<DiffReport> {
    let mut report = DiffReport::default();
    if a.is_file() && b.is_file() {
        let name = a
            .file_name()
            .map_or("file".into(), |n| n.to_string_lossy().into_owned());
        diff_tables(&fs::read_to_string(a)?, &fs::read_to_string(b)?, &name, &mut report)?;
        return Ok(report);
    }
    if !(a.is_dir() && b.is_dir()) {
        return Err(Error::InvalidInput(format!(
            "diff needs two directories or two files: {} vs {}",
            a.display(),
            b.display()
        )));
    }
    let (fa, fb) = (data_files(a)?, data_files(b)?);
    for name in fa.symmetric_difference(&fb) {
        report.mismatched.push(name.clone());
    }
    for name in fa.intersection(&fb) {
        diff_tables(
            &fs::read_to_string(a.join(name))?,
            &fs::read_to_string(b.join(name))?,
            name,
            &mut report,
        )?;
    }
    Ok(report)
}
