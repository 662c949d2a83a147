//! `FPA1` text snapshots.
//!
//! ```text
//! FPA1
//! Nx Nv L Vmax t
//! f_00 f_01 ... (Nx*Nv values, x outer, v inner)
//! ```
//!
//! Values are written with 17 significant digits, which round-trips every
//! `f64` exactly.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use super::state::KineticState;
use crate::error::{FpaError, Result};
use crate::grid::Grid;

pub const SNAPSHOT_MAGIC: &str = "FPA1";

pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn snapshot_to_string(state: &KineticState) -> String {
    let g = &state.grid;
    let mut out = String::with_capacity(24 * g.len() + 64);
    out.push_str(SNAPSHOT_MAGIC);
    out.push('\n');
    let _ = writeln!(
        out,
        "{} {} {} {} {}",
        g.nx,
        g.nv,
        format_f64(g.length),
        format_f64(g.vmax),
        format_f64(state.t)
    );
    for i in 0..g.nx {
        let row = state.row(i);
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            out.push_str(&format_f64(*v));
        }
        out.push('\n');
    }
    out
}

pub fn parse_snapshot(text: &str) -> Result<KineticState> {
    let mut lines = text.lines().enumerate();
    let (_, magic) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    if magic.trim() != SNAPSHOT_MAGIC {
        return Err(parse_err(1, format!("expected magic {SNAPSHOT_MAGIC}, found {magic:?}")));
    }
    let (_, header) = lines.next().ok_or_else(|| parse_err(2, "missing header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 {
        return Err(parse_err(2, "header must be `Nx Nv L Vmax t`"));
    }
    let nx: usize = fields[0].parse().map_err(|e| parse_err(2, format!("Nx: {e}")))?;
    let nv: usize = fields[1].parse().map_err(|e| parse_err(2, format!("Nv: {e}")))?;
    let length: f64 = fields[2].parse().map_err(|e| parse_err(2, format!("L: {e}")))?;
    let vmax: f64 = fields[3].parse().map_err(|e| parse_err(2, format!("Vmax: {e}")))?;
    let t: f64 = fields[4].parse().map_err(|e| parse_err(2, format!("t: {e}")))?;
    let grid = Grid::new(nx, nv, length, vmax).map_err(|e| parse_err(2, e.to_string()))?;

    let mut f = Vec::with_capacity(grid.len());
    for (idx, line) in lines {
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|e| parse_err(idx + 1, format!("value {tok:?}: {e}")))?;
            f.push(v);
        }
    }
    if f.len() != grid.len() {
        return Err(parse_err(
            3,
            format!("expected {} values, found {}", grid.len(), f.len()),
        ));
    }
    Ok(KineticState { grid, f, t })
}

pub fn read_snapshot(path: &Path) -> Result<KineticState> {
    parse_snapshot(&fs::read_to_string(path)?)
}

/// Writes through a temporary file and renames it into place.
pub fn write_snapshot(path: &Path, state: &KineticState) -> Result<()> {
    write_atomic(path, snapshot_to_string(state).as_bytes())
}

/// Atomic file replacement: write `path.tmp`, flush, rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> FpaError {
    FpaError::Parse {
        line,
        message: message.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_magic_and_count() {
        assert!(matches!(parse_snapshot("FPA2\n"), Err(FpaError::Parse { line: 1, .. })));
        let text = "FPA1\n3 4 1.0 2.0 0.0\n1 2 3\n";
        assert!(matches!(parse_snapshot(text), Err(FpaError::Parse { .. })));
    }

    #[test]
    fn awkward_values_round_trip() {
        let grid = Grid::new(3, 4, 0.1 + 0.2, 1.0 / 3.0).unwrap();
        let mut s = KineticState::zeros(grid);
        s.t = std::f64::consts::PI * 1e-7;
        let vals = [
            f64::MIN_POSITIVE,
            5e-324,
            1.0 / 3.0,
            0.1 + 0.2,
            1e300,
            2.0f64.sqrt(),
        ];
        for (k, v) in s.f.iter_mut().enumerate() {
            *v = vals[k % vals.len()] * (k + 1) as f64;
        }
        let back = parse_snapshot(&snapshot_to_string(&s)).unwrap();
        assert_eq!(back.grid, s.grid);
        assert_eq!(back.t.to_bits(), s.t.to_bits());
        for (a, b) in back.f.iter().zip(&s.f) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
