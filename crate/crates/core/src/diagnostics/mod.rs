//! Macroscopic fields, entropy and Fisher-type functionals of a kinetic
//! state, and monitors built on their time series.
//!
//! All functionals are grid quadratures with cell volume `dx dv`. Quotients
//! by `h = f / f_inf` and `log h` are only formed on the support region
//! `f >= 1e-30 max f`; the mass left out is reported with each evaluation.

mod monitors;
mod series;

use serde::{Deserialize, Serialize};

pub use monitors::{
    fit_decay, lemma_monitors, modified_functional, DecayFit, GammaMode, LemmaReport,
    ModifiedFunctional,
};
pub use series::{read_series, series_to_string, write_series, SeriesRow, SERIES_COLUMNS};

use crate::averaging::{
    check_assumption_iv, kappa_inner, spectral_gap, AveragingModel, Subspace, DENSITY_FLOOR,
};
use crate::error::{FpaError, Result};
use crate::exec::{map_range, Exec};
use crate::force::{EquilibriumTable, ForceParams};
use crate::solver::KineticState;

/// Relative support threshold for `1/h` and `log h`.
pub const SUPPORT_THRESHOLD: f64 = 1e-30;

/// Per-x-cell macroscopic quantities and the averaging outputs built from them.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroFields {
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub u_force: Vec<f64>,
    pub u_v: Vec<f64>,
    pub strength: Vec<f64>,
    pub average: Vec<f64>,
    /// `rho < 1e-30`: `u` and `u_force` are set to 0 there.
    pub vacuum: Vec<bool>,
}

impl MacroFields {
    pub fn vacuum_count(&self) -> usize {
        self.vacuum.iter().filter(|v| **v).count()
    }
}

pub fn macro_fields(state: &KineticState, model: &AveragingModel, force: &ForceParams) -> Result<MacroFields> {
    let values: Vec<f64> = state.grid.velocities().iter().map(|&v| force.force_1d(v)).collect();
    macro_fields_tabulated(state, model, &values)
}

/// As [`macro_fields`] with `F(v_j)` supplied.
pub fn macro_fields_tabulated(
    state: &KineticState,
    model: &AveragingModel,
    force_values: &[f64],
) -> Result<MacroFields> {
    let g = &state.grid;
    if force_values.len() != g.nv {
        return Err(FpaError::SizeMismatch {
            expected: g.nv,
            got: force_values.len(),
        });
    }
    let mut rho = vec![0.0; g.nx];
    let mut u = vec![0.0; g.nx];
    let mut u_force = vec![0.0; g.nx];
    let mut vacuum = vec![false; g.nx];
    for i in 0..g.nx {
        let row = state.row(i);
        rho[i] = row.iter().sum::<f64>() * g.dv;
        if rho[i] < DENSITY_FLOOR {
            vacuum[i] = true;
            continue;
        }
        u[i] = g.odd_moment(row, |j| g.v(j)) * g.dv / rho[i];
        u_force[i] = g.odd_moment(row, |j| force_values[j]) * g.dv / rho[i];
    }
    let u_v = u.iter().zip(&u_force).map(|(a, b)| a + b).collect();
    let averaged = model.strength_and_average(&rho, &u)?;
    Ok(MacroFields {
        rho,
        u,
        u_force,
        u_v,
        strength: averaged.strength,
        average: averaged.average,
        vacuum,
    })
}

/// `sum f log(f/f_inf) dx dv`, accumulated as `f log(f/f_inf) - f + f_inf`
/// so every cell is non-negative. The extra terms add `m_inf - m`, which is
/// zero for unit-mass states.
pub fn relative_entropy(state: &KineticState, table: &EquilibriumTable) -> f64 {
    let g = &state.grid;
    let mut acc = 0.0;
    for i in 0..g.nx {
        for (f, finf) in state.row(i).iter().zip(&table.density) {
            acc += entropy_density(*f, *finf);
        }
    }
    acc * g.cell_volume()
}

#[inline]
fn entropy_density(f: f64, finf: f64) -> f64 {
    if f < SUPPORT_THRESHOLD {
        finf - f
    } else {
        let h = f / finf;
        // f log h - f + finf = finf (h log h - h + 1), non-negative termwise.
        finf * (h * h.ln() - h + 1.0)
    }
}

/// `||f - f_inf||_{L^1}`.
pub fn l1_distance(state: &KineticState, table: &EquilibriumTable) -> f64 {
    let g = &state.grid;
    let mut acc = 0.0;
    for i in 0..g.nx {
        for (f, finf) in state.row(i).iter().zip(&table.density) {
            acc += (f - finf).abs();
        }
    }
    acc * g.cell_volume()
}

/// Csiszár–Kullback slack `2 H - ||f - f_inf||_1^2` (constant 2 for unit mass).
pub fn ck_check(state: &KineticState, table: &EquilibriumTable, h: f64) -> f64 {
    let d = l1_distance(state, table);
    2.0 * h - d * d
}

/// Partial Fisher informations. `ivv_weighted` carries the `s_rho` weight.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Fisher {
    pub ivv_weighted: f64,
    pub ivv: f64,
    pub ixv: f64,
    pub ixx: f64,
}

/// `D_vv = sum s h (d_vv log h)^2 dmu`, `D_xv = sum s h (d_xv log h)^2 dmu`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Dissipation {
    pub dvv: f64,
    pub dxv: f64,
}

/// Every grid functional of one state.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Functionals {
    pub fisher: Fisher,
    pub dissipation: Dissipation,
    /// Support cells skipped because a stencil neighbour is outside the support.
    pub masked_cells: usize,
    pub masked_mass: f64,
}

impl std::ops::Add for Functionals {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            fisher: Fisher {
                ivv_weighted: self.fisher.ivv_weighted + o.fisher.ivv_weighted,
                ivv: self.fisher.ivv + o.fisher.ivv,
                ixv: self.fisher.ixv + o.fisher.ixv,
                ixx: self.fisher.ixx + o.fisher.ixx,
            },
            dissipation: Dissipation {
                dvv: self.dissipation.dvv + o.dissipation.dvv,
                dxv: self.dissipation.dxv + o.dissipation.dxv,
            },
            masked_cells: self.masked_cells + o.masked_cells,
            masked_mass: self.masked_mass + o.masked_mass,
        }
    }
}

/// Fisher and dissipation functionals with centred differences of `h` and
/// `log h` (periodic in x, second-order one-sided at the velocity edges).
pub fn functionals(
    state: &KineticState,
    table: &EquilibriumTable,
    strength: &[f64],
    exec: Exec,
) -> Functionals {
    let g = state.grid;
    let (nx, nv) = (g.nx, g.nv);
    let peak = state.f.iter().cloned().fold(0.0, f64::max);
    let threshold = SUPPORT_THRESHOLD * peak;
    let finf = &table.density;
    let f = &state.f;
    let inside = |i: usize, j: usize| {
        let v = f[i * nv + j];
        v > 0.0 && v >= threshold
    };
    let h = |i: usize, j: usize| f[i * nv + j] / finf[j];
    let lh = |i: usize, j: usize| h(i, j).ln();
    let (dx, dv) = (g.dx, g.dv);

    // Velocity stencil for d/dv at row j: (indices, weights / dv).
    let dv_stencil = |j: usize| -> [(usize, f64); 3] {
        if j == 0 {
            [(0, -1.5), (1, 2.0), (2, -0.5)]
        } else if j == nv - 1 {
            [(nv - 1, 1.5), (nv - 2, -2.0), (nv - 3, 0.5)]
        } else {
            [(j - 1, -0.5), (j + 1, 0.5), (j, 0.0)]
        }
    };
    // Centre of the second-difference stencil in v.
    let vv_centre = |j: usize| j.clamp(1, nv - 2);

    let rows = map_range(exec, nx, |i| {
        let ip = (i + 1) % nx;
        let im = (i + nx - 1) % nx;
        let s = strength[i];
        let mut acc = Functionals::default();
        for j in 0..nv {
            if !inside(i, j) {
                continue;
            }
            let st = dv_stencil(j);
            let c = vv_centre(j);
            let needed = [
                (ip, j),
                (im, j),
                (i, st[0].0),
                (i, st[1].0),
                (i, st[2].0),
                (i, c - 1),
                (i, c),
                (i, c + 1),
                (ip, st[0].0),
                (ip, st[1].0),
                (ip, st[2].0),
                (im, st[0].0),
                (im, st[1].0),
                (im, st[2].0),
            ];
            if !needed.iter().all(|&(a, b)| inside(a, b)) {
                acc.masked_cells += 1;
                acc.masked_mass += f[i * nv + j] * dx * dv;
                continue;
            }
            let w = finf[j] * dx * dv;
            let hc = h(i, j);
            let hv: f64 = st.iter().map(|&(k, c)| c * h(i, k)).sum::<f64>() / dv;
            let hx = (h(ip, j) - h(im, j)) / (2.0 * dx);
            acc.fisher.ivv += hv * hv / hc * w;
            acc.fisher.ivv_weighted += s * hv * hv / hc * w;
            acc.fisher.ixv += hx * hv / hc * w;
            acc.fisher.ixx += hx * hx / hc * w;

            let lvv = (lh(i, c + 1) - 2.0 * lh(i, c) + lh(i, c - 1)) / (dv * dv);
            let lv = |row: usize| st.iter().map(|&(k, c)| c * lh(row, k)).sum::<f64>() / dv;
            let lxv = (lv(ip) - lv(im)) / (2.0 * dx);
            acc.dissipation.dvv += s * hc * lvv * lvv * w;
            acc.dissipation.dxv += s * hc * lxv * lxv * w;
        }
        acc
    });
    rows.into_iter().fold(Functionals::default(), |a, b| a + b)
}

pub fn fisher_functionals(state: &KineticState, table: &EquilibriumTable, strength: &[f64]) -> Fisher {
    functionals(state, table, strength, Exec::Sequential).fisher
}

pub fn dissipation_functionals(state: &KineticState, table: &EquilibriumTable, strength: &[f64]) -> Dissipation {
    functionals(state, table, strength, Exec::Sequential).dissipation
}

/// Terms of the entropy balance `dH/dt = -I_vv^s + <u_V, [u]>_kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyProduction {
    pub dhdt_formula: f64,
    pub uv_norm2: f64,
    pub u_norm2: f64,
    pub pairing: f64,
}

pub fn entropy_production(macro_: &MacroFields, ivv_weighted: f64, dx: f64) -> EntropyProduction {
    let k = |a: &[f64], b: &[f64]| kappa_inner(a, b, &macro_.rho, &macro_.strength, dx);
    let pairing = k(&macro_.u_v, &macro_.average);
    EntropyProduction {
        dhdt_formula: -ivv_weighted + pairing,
        uv_norm2: k(&macro_.u_v, &macro_.u_v),
        u_norm2: k(&macro_.u, &macro_.u),
        pairing,
    }
}

/// Guaranteed fraction `c3 = eps0 - eps1 / (1 - eps1)`, clamped at 0.
pub fn c3_bound(epsilon0: f64, epsilon1: f64) -> f64 {
    if !(epsilon1 < 1.0) {
        return 0.0;
    }
    (epsilon0 - epsilon1 / (1.0 - epsilon1)).max(0.0)
}

/// One row of the diagnostic time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub h: f64,
    pub ivv_weighted: f64,
    pub ivv: f64,
    pub ixv: f64,
    pub ixx: f64,
    pub dvv: f64,
    pub dxv: f64,
    pub uv_norm2: f64,
    pub u_norm2: f64,
    pub pairing: f64,
    pub gap_sup: f64,
    pub force_ratio: f64,
    pub ck_slack: f64,
    pub logsob_ratio: f64,
    pub dhdt_formula: f64,
    /// Central difference over neighbouring records; NaN at the ends.
    pub dhdt_fd: f64,
    /// `min s_rho`.
    pub c0: f64,
    pub c3: f64,
    /// `pairing <= (1 - c3) ||u_V||^2` with `c3` from the measured gap and force ratio.
    pub gap_check: bool,
    pub masked_cells: usize,
    pub masked_mass: f64,
    pub vacuum_cells: usize,
}

impl DiagnosticsRecord {
    /// `I = I_vv + I_xx`.
    pub fn fisher_total(&self) -> f64 {
        self.ivv + self.ixx
    }

    /// Non-negativity and Cauchy–Schwarz checks.
    pub fn invariants_hold(&self) -> bool {
        self.ivv >= 0.0
            && self.ixx >= 0.0
            && self.dvv >= 0.0
            && self.dxv >= 0.0
            && self.ixv.abs() <= (self.ixx * self.ivv).sqrt() + 1e-10
    }
}

/// Evaluates every diagnostic of one state.
pub fn evaluate(
    state: &KineticState,
    table: &EquilibriumTable,
    model: &AveragingModel,
    subspace: Subspace,
    exec: Exec,
) -> Result<DiagnosticsRecord> {
    let g = &state.grid;
    let m = macro_fields_tabulated(state, model, &table.force)?;
    let fun = functionals(state, table, &m.strength, exec);
    let h = relative_entropy(state, table);
    let ep = entropy_production(&m, fun.fisher.ivv_weighted, g.dx);
    let gap_sup = spectral_gap(&m.rho, model, subspace)?;
    let ratio = check_assumption_iv(&m.rho, &m.strength, &m.u, &m.u_force, g.dx);
    let c3 = c3_bound(1.0 - gap_sup, ratio.ratio);
    let fisher_total = fun.fisher.ivv + fun.fisher.ixx;
    Ok(DiagnosticsRecord {
        t: state.t,
        mass: state.mass(),
        h,
        ivv_weighted: fun.fisher.ivv_weighted,
        ivv: fun.fisher.ivv,
        ixv: fun.fisher.ixv,
        ixx: fun.fisher.ixx,
        dvv: fun.dissipation.dvv,
        dxv: fun.dissipation.dxv,
        uv_norm2: ep.uv_norm2,
        u_norm2: ep.u_norm2,
        pairing: ep.pairing,
        gap_sup,
        force_ratio: ratio.ratio,
        ck_slack: ck_check(state, table, h),
        logsob_ratio: if fisher_total > 0.0 { h / fisher_total } else { f64::NAN },
        dhdt_formula: ep.dhdt_formula,
        dhdt_fd: f64::NAN,
        c0: m.strength.iter().cloned().fold(f64::INFINITY, f64::min),
        c3,
        gap_check: ep.pairing <= (1.0 - c3) * ep.uv_norm2 + 1e-14,
        masked_cells: fun.masked_cells,
        masked_mass: fun.masked_mass,
        vacuum_cells: m.vacuum_count(),
    })
}

/// Fills `dhdt_fd` by central differences in time.
pub fn fill_time_derivative(records: &mut [DiagnosticsRecord]) {
    let n = records.len();
    for k in 0..n {
        records[k].dhdt_fd = if k == 0 || k + 1 == n {
            f64::NAN
        } else {
            (records[k + 1].h - records[k - 1].h) / (records[k + 1].t - records[k - 1].t)
        };
    }
}
