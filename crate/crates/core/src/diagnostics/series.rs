use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DiagnosticsRecord;
use crate::error::{FpaError, Result};
use crate::solver::write_atomic;

pub const SERIES_COLUMNS: [&str; 17] = [
    "t",
    "mass",
    "H",
    "Ivv_w",
    "Ivv",
    "Ixv",
    "Ixx",
    "Dvv",
    "Dxv",
    "uV_norm2",
    "pairing",
    "gap_sup",
    "force_ratio",
    "ck_slack",
    "logsob_ratio",
    "dHdt_formula",
    "dHdt_fd",
];

/// One CSV row; missing values are NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t: f64,
    pub mass: f64,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "Ivv_w")]
    pub ivv_w: f64,
    #[serde(rename = "Ivv")]
    pub ivv: f64,
    #[serde(rename = "Ixv")]
    pub ixv: f64,
    #[serde(rename = "Ixx")]
    pub ixx: f64,
    #[serde(rename = "Dvv")]
    pub dvv: f64,
    #[serde(rename = "Dxv")]
    pub dxv: f64,
    #[serde(rename = "uV_norm2")]
    pub uv_norm2: f64,
    pub pairing: f64,
    pub gap_sup: f64,
    pub force_ratio: f64,
    pub ck_slack: f64,
    pub logsob_ratio: f64,
    #[serde(rename = "dHdt_formula")]
    pub dhdt_formula: f64,
    #[serde(rename = "dHdt_fd")]
    pub dhdt_fd: f64,
}

impl From<&DiagnosticsRecord> for SeriesRow {
    fn from(r: &DiagnosticsRecord) -> Self {
        Self {
            t: r.t,
            mass: r.mass,
            h: r.h,
            ivv_w: r.ivv_weighted,
            ivv: r.ivv,
            ixv: r.ixv,
            ixx: r.ixx,
            dvv: r.dvv,
            dxv: r.dxv,
            uv_norm2: r.uv_norm2,
            pairing: r.pairing,
            gap_sup: r.gap_sup,
            force_ratio: r.force_ratio,
            ck_slack: r.ck_slack,
            logsob_ratio: r.logsob_ratio,
            dhdt_formula: r.dhdt_formula,
            dhdt_fd: r.dhdt_fd,
        }
    }
}

impl SeriesRow {
    fn values(&self) -> [f64; 17] {
        [
            self.t,
            self.mass,
            self.h,
            self.ivv_w,
            self.ivv,
            self.ixv,
            self.ixx,
            self.dvv,
            self.dxv,
            self.uv_norm2,
            self.pairing,
            self.gap_sup,
            self.force_ratio,
            self.ck_slack,
            self.logsob_ratio,
            self.dhdt_formula,
            self.dhdt_fd,
        ]
    }
}

fn render(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        crate::solver::format_f64(v)
    }
}

pub fn series_to_string(records: &[DiagnosticsRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SERIES_COLUMNS)?;
    for r in records {
        w.write_record(SeriesRow::from(r).values().map(render))?;
    }
    let bytes = w.into_inner().map_err(|e| FpaError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

pub fn write_series(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    write_atomic(path, series_to_string(records)?.as_bytes())
}

/// Reads `(t, H)` from any CSV with `t` and `H` header columns.
pub fn read_series(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| FpaError::Parse {
            line: 1,
            message: format!("missing column `{name}`"),
        })
    };
    let (ct, ch) = (col("t")?, col("H")?);
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let get = |c: usize| -> Result<f64> {
            let raw = rec.get(c).unwrap_or("").trim();
            raw.parse().map_err(|e| FpaError::Parse {
                line: k + 2,
                message: format!("value {raw:?}: {e}"),
            })
        };
        out.push((get(ct)?, get(ch)?));
    }
    Ok(out)
}
