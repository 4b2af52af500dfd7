//! Plain-text matrix archive for correlation profiles and pilot sets.
//!
//! ```text
//! # pilotforge matrix archive v1
//! matrix Q[0] 2 2
//! 1e0 0e0 5e-1 -2.5e-1
//! 5e-1 2.5e-1 2e0 0e0
//! ```
//!
//! Each row lists `re im` pairs. Numbers use Rust's shortest round-trip
//! exponent form, so a write/read cycle is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use crate::channel::{CorrelationProfile, DecayGrid};
use crate::error::{Error, Result};
use crate::estimator::PilotSet;
use crate::matlin::{c64, CMatrix};

pub const HEADER: &str = "# pilotforge matrix archive v1";

pub type NamedMatrix = (String, CMatrix);

pub fn to_archive_string(items: &[NamedMatrix]) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    for (name, m) in items {
        let _ = writeln!(out, "matrix {name} {} {}", m.nrows(), m.ncols());
        for r in 0..m.nrows() {
            let row: Vec<String> = m.row(r).iter().map(|z| format!("{:e} {:e}", z.re, z.im)).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out
}

pub fn from_archive_str(text: &str) -> Result<Vec<NamedMatrix>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, l)) if l.trim() == HEADER => {}
        _ => return Err(Error::Parse("missing archive header".into())),
    }
    let mut out = Vec::new();
    while let Some((no, line)) = lines.next() {
        let line = line.trim();
        if line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let (name, rows, cols) = match parts.as_slice() {
            ["matrix", name, r, c] => (
                name.to_string(),
                r.parse::<usize>().map_err(|e| Error::Parse(format!("line {}: {e}", no + 1)))?,
                c.parse::<usize>().map_err(|e| Error::Parse(format!("line {}: {e}", no + 1)))?,
            ),
            _ => return Err(Error::Parse(format!("line {}: expected `matrix <name> <rows> <cols>`", no + 1))),
        };
        let mut m = CMatrix::zeros(rows, cols);
        for r in 0..rows {
            let (no, row) = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("matrix {name}: expected {rows} rows")))?;
            let vals = row
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", no + 1))))
                .collect::<Result<Vec<f64>>>()?;
            if vals.len() != 2 * cols {
                return Err(Error::Parse(format!("line {}: expected {} numbers, got {}", no + 1, 2 * cols, vals.len())));
            }
            for c in 0..cols {
                m[(r, c)] = c64(vals[2 * c], vals[2 * c + 1]);
            }
        }
        out.push((name, m));
    }
    Ok(out)
}

pub fn write_archive(path: &Path, items: &[NamedMatrix]) -> Result<()> {
    std::fs::write(path, to_archive_string(items))?;
    Ok(())
}

pub fn read_archive(path: &Path) -> Result<Vec<NamedMatrix>> {
    from_archive_str(&std::fs::read_to_string(path)?)
}

fn find<'a>(items: &'a [NamedMatrix], name: &str) -> Result<&'a CMatrix> {
    items
        .iter()
        .find(|(n, _)| n == name)
        .map(|(_, m)| m)
        .ok_or_else(|| Error::Parse(format!("archive has no matrix `{name}`")))
}

fn count_prefixed(items: &[NamedMatrix], prefix: &str) -> usize {
    items.iter().filter(|(n, _)| n.starts_with(prefix)).count()
}

/// Fully separable: `Q[i]`, `P[j]`. Partially separable: `Q[i]`, `P[i,j]`.
/// MU-MIMO: `beta` (`M·K × M`, row `i·K + k`, column `j`) and a 1×1
/// `antennas`.
pub fn profile_to_archive(profile: &CorrelationProfile) -> Vec<NamedMatrix> {
    let m = profile.cells();
    match profile {
        CorrelationProfile::FullySeparable { receive, transmit } => receive
            .iter()
            .enumerate()
            .map(|(i, q)| (format!("Q[{i}]"), q.clone()))
            .chain(transmit.iter().enumerate().map(|(j, p)| (format!("P[{j}]"), p.clone())))
            .collect(),
        CorrelationProfile::PartiallySeparable { receive, transmit } => receive
            .iter()
            .enumerate()
            .map(|(i, q)| (format!("Q[{i}]"), q.clone()))
            .chain((0..m).flat_map(|i| (0..m).map(move |j| (format!("P[{i},{j}]"), transmit[i][j].clone()))))
            .collect(),
        CorrelationProfile::MuMimo { decay, antennas } => {
            let k = decay.users();
            let beta = CMatrix::from_fn(m * k, m, |r, j| c64(decay.get(r / k, r % k, j), 0.0));
            vec![("beta".into(), beta), ("antennas".into(), CMatrix::from_element(1, 1, c64(*antennas as f64, 0.0)))]
        }
    }
}

pub fn profile_from_archive(items: &[NamedMatrix]) -> Result<CorrelationProfile> {
    if let Ok(beta) = find(items, "beta") {
        let antennas = find(items, "antennas")?[(0, 0)].re;
        let m = beta.ncols();
        if m == 0 || beta.nrows() % m != 0 || !(antennas >= 1.0) || antennas.fract() != 0.0 {
            return Err(Error::Parse("malformed MU-MIMO archive".into()));
        }
        let k = beta.nrows() / m;
        let decay = DecayGrid::from_fn(m, k, |i, kk, j| beta[(i * k + kk, j)].re)?;
        return Ok(CorrelationProfile::MuMimo { decay, antennas: antennas as usize });
    }
    let m = count_prefixed(items, "Q[");
    if m == 0 {
        return Err(Error::Parse("archive holds no profile".into()));
    }
    let receive = (0..m).map(|i| find(items, &format!("Q[{i}]")).cloned()).collect::<Result<Vec<_>>>()?;
    let profile = if items.iter().any(|(n, _)| n.starts_with("P[") && n.contains(',')) {
        let transmit = (0..m)
            .map(|i| (0..m).map(|j| find(items, &format!("P[{i},{j}]")).cloned()).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        CorrelationProfile::PartiallySeparable { receive, transmit }
    } else {
        let transmit = (0..m).map(|j| find(items, &format!("P[{j}]")).cloned()).collect::<Result<Vec<_>>>()?;
        CorrelationProfile::FullySeparable { receive, transmit }
    };
    Ok(profile)
}

/// One `S[i]` (`τ × K`) per cell.
pub fn pilots_to_archive(pilots: &PilotSet) -> Vec<NamedMatrix> {
    (0..pilots.cells()).map(|i| (format!("S[{i}]"), pilots.cell(i))).collect()
}

pub fn pilots_from_archive(items: &[NamedMatrix]) -> Result<PilotSet> {
    let m = count_prefixed(items, "S[");
    let cells = (0..m).map(|i| find(items, &format!("S[{i}]")).cloned()).collect::<Result<Vec<_>>>()?;
    PilotSet::from_cells(&cells)
}
