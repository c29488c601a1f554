//! Plain-text moment table files.
//!
//! ```text
//! # free-form comment lines
//! format_version 1
//! k_max 34
//! s_max 1
//! placements_per_k 4000
//! samples_per_placement 30000
//! seed 2017
//! moments
//! <k_max rows of s_max values>
//! std_errs
//! <k_max rows of s_max values>
//! ```
//!
//! Values are written with 17 significant digits so a table survives a round
//! trip bit for bit. Loading re-checks every table invariant.

use std::fmt::Write as _;
use std::path::Path;

use aloha_core::geometry::TableSpec;
use aloha_core::MomentTable;
use sha2::{Digest, Sha256};

use crate::error::SimError;

pub const FORMAT_VERSION: u32 = 1;

pub fn render_table(table: &MomentTable) -> String {
    let spec = table.spec();
    let mut out = String::new();
    out.push_str("# normalized union-of-disks area moments E[alpha_k^s]\n");
    let _ = writeln!(out, "format_version {FORMAT_VERSION}");
    let _ = writeln!(out, "k_max {}", spec.k_max);
    let _ = writeln!(out, "s_max {}", spec.s_max);
    let _ = writeln!(out, "placements_per_k {}", spec.placements_per_k);
    let _ = writeln!(out, "samples_per_placement {}", spec.samples_per_placement);
    let _ = writeln!(out, "seed {}", spec.seed);
    for (name, values) in [("moments", table.moments()), ("std_errs", table.std_errs())] {
        out.push_str(name);
        out.push('\n');
        for row in values.chunks(spec.s_max) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
    }
    out
}

/// Hex SHA-256 of the rendered table.
pub fn checksum(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<(usize, &'a str), SimError> {
        for (i, raw) in self.inner.by_ref() {
            let line = raw.trim();
            self.last = i + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            return Ok((i + 1, line));
        }
        Err(SimError::format(self.last + 1, "unexpected end of file"))
    }

    fn header<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, SimError> {
        let (no, line) = self.next_line()?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(SimError::format(no, format!("expected `{key}`")));
        }
        let value = parts
            .next()
            .ok_or_else(|| SimError::format(no, format!("`{key}` has no value")))?;
        if parts.next().is_some() {
            return Err(SimError::format(no, format!("trailing data after `{key}`")));
        }
        value
            .parse()
            .map_err(|_| SimError::format(no, format!("bad value for `{key}`: {value}")))
    }

    fn section(&mut self, name: &str, rows: usize, cols: usize) -> Result<Vec<f64>, SimError> {
        let (no, line) = self.next_line()?;
        if line != name {
            return Err(SimError::format(no, format!("expected section `{name}`")));
        }
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (no, line) = self.next_line()?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| SimError::format(no, "unparsable number"))?;
            if row.len() != cols {
                return Err(SimError::format(
                    no,
                    format!("expected {cols} values, found {}", row.len()),
                ));
            }
            values.extend(row);
        }
        Ok(values)
    }
}

pub fn parse_table(text: &str) -> Result<MomentTable, SimError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let version: u32 = lines.header("format_version")?;
    if version != FORMAT_VERSION {
        return Err(SimError::format(
            lines.last,
            format!("unsupported format_version {version}"),
        ));
    }
    let spec = TableSpec {
        k_max: lines.header("k_max")?,
        s_max: lines.header("s_max")?,
        placements_per_k: lines.header("placements_per_k")?,
        samples_per_placement: lines.header("samples_per_placement")?,
        seed: lines.header("seed")?,
    };
    spec.validate()?;
    let moments = lines.section("moments", spec.k_max, spec.s_max)?;
    let std_errs = lines.section("std_errs", spec.k_max, spec.s_max)?;
    if let Ok((no, _)) = lines.next_line() {
        return Err(SimError::format(no, "trailing data after std_errs"));
    }
    Ok(MomentTable::from_parts(spec, moments, std_errs)?)
}

/// Reads a table file, returning it with the checksum of its bytes.
pub fn load_table(path: &Path) -> Result<(MomentTable, String), SimError> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    let table = parse_table(&text)?;
    Ok((table, checksum(&text)))
}
