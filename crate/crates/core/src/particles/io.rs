//! `FPP1` ensemble files.
//!
//! ```text
//! FPP1
//! N L t seed
//! m x v        (N lines)
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::ParticleEnsemble;
use crate::error::{FpaError, Result};
use crate::solver::{format_f64, write_atomic};

pub const ENSEMBLE_MAGIC: &str = "FPP1";

pub fn ensemble_to_string(ens: &ParticleEnsemble) -> String {
    let mut out = String::with_capacity(72 * ens.len() + 64);
    out.push_str(ENSEMBLE_MAGIC);
    out.push('\n');
    let _ = writeln!(
        out,
        "{} {} {} {}",
        ens.len(),
        format_f64(ens.length),
        format_f64(ens.t),
        ens.seed
    );
    for i in 0..ens.len() {
        let _ = writeln!(
            out,
            "{} {} {}",
            format_f64(ens.m[i]),
            format_f64(ens.x[i]),
            format_f64(ens.v[i])
        );
    }
    out
}

pub fn parse_ensemble(text: &str) -> Result<ParticleEnsemble> {
    let err = |line: usize, message: String| FpaError::Parse { line, message };
    let mut lines = text.lines();
    match lines.next() {
        Some(l) if l.trim() == ENSEMBLE_MAGIC => {}
        other => {
            return Err(err(
                1,
                format!("expected magic {ENSEMBLE_MAGIC}, found {:?}", other.unwrap_or("")),
            ))
        }
    }
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| err(2, "missing header".into()))?
        .split_whitespace()
        .collect();
    if header.len() != 4 {
        return Err(err(2, "header must be `N L t seed`".into()));
    }
    let n: usize = header[0].parse().map_err(|e| err(2, format!("N: {e}")))?;
    let length: f64 = header[1].parse().map_err(|e| err(2, format!("L: {e}")))?;
    let t: f64 = header[2].parse().map_err(|e| err(2, format!("t: {e}")))?;
    let seed: u64 = header[3].parse().map_err(|e| err(2, format!("seed: {e}")))?;

    let (mut m, mut x, mut v) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for (k, line) in lines.enumerate() {
        let lineno = k + 3;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(err(lineno, "expected `m x v`".into()));
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|e| err(lineno, format!("{s:?}: {e}")));
        m.push(parse(f[0])?);
        x.push(parse(f[1])?);
        v.push(parse(f[2])?);
    }
    if m.len() != n {
        return Err(err(2, format!("header declares {n} agents, found {}", m.len())));
    }
    let mut ens = ParticleEnsemble::with_masses(length, x, v, m, seed)?;
    ens.t = t;
    Ok(ens)
}

pub fn read_ensemble(path: &Path) -> Result<ParticleEnsemble> {
    parse_ensemble(&fs::read_to_string(path)?)
}

pub fn write_ensemble(path: &Path, ens: &ParticleEnsemble) -> Result<()> {
    write_atomic(path, ensemble_to_string(ens).as_bytes())
}
