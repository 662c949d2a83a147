use std::f64::consts::TAU;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::snapshot::read_snapshot;
use crate::error::{invalid, FpaError, Result};
use crate::force::EquilibriumTable;
use crate::grid::Grid;

/// Phase-space density, row-major with x outer and v inner.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticState {
    pub grid: Grid,
    pub f: Vec<f64>,
    pub t: f64,
}

impl KineticState {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            f: vec![0.0; grid.len()],
            t: 0.0,
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.f[i * self.grid.nv..(i + 1) * self.grid.nv]
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.f[self.grid.index(i, j)]
    }

    /// `sum f dx dv`.
    pub fn mass(&self) -> f64 {
        self.f.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Per-x-cell column masses `sum_j f_ij dv`.
    pub fn column_masses(&self) -> Vec<f64> {
        (0..self.grid.nx)
            .map(|i| self.row(i).iter().sum::<f64>() * self.grid.dv)
            .collect()
    }

    /// `sum v f dx dv`.
    pub fn momentum(&self) -> f64 {
        let g = &self.grid;
        (0..g.nx)
            .map(|i| g.odd_moment(self.row(i), |j| g.v(j)))
            .sum::<f64>()
            * g.cell_volume()
    }

    /// `sum v^2/2 f dx dv`.
    pub fn kinetic_energy(&self) -> f64 {
        let g = &self.grid;
        let mut acc = 0.0;
        for i in 0..g.nx {
            for (j, f) in self.row(i).iter().enumerate() {
                let v = g.v(j);
                acc += 0.5 * v * v * f;
            }
        }
        acc * g.cell_volume()
    }

    pub fn min_value(&self) -> f64 {
        self.f.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.f.iter().all(|v| v.is_finite())
    }

    /// Largest cell-wise change relative to the largest value of `self`.
    pub fn relative_change(&self, other: &KineticState) -> f64 {
        let scale = self.f.iter().cloned().fold(0.0, f64::max);
        self.f
            .iter()
            .zip(&other.f)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / scale
    }

    fn normalise(mut self) -> Result<Self> {
        if let Some(v) = self.f.iter().find(|v| !(**v >= 0.0)) {
            return Err(FpaError::Domain(format!(
                "initial density must be non-negative and finite, found {v}"
            )));
        }
        let m = self.mass();
        if !(m > 0.0) {
            return Err(FpaError::Domain("initial density has zero mass".into()));
        }
        self.f.iter_mut().for_each(|v| *v /= m);
        Ok(self)
    }
}

/// Two-bump preset: a right-moving bump centred at `x = L/4` and its mirror
/// image moving left from `x = 3L/4`, each modulated in space by
/// `1 + beta cos(2 pi (x - x_c) / L)`.
pub const TWO_BUMP_SPEED: f64 = 1.2;
pub const TWO_BUMP_TEMPERATURE: f64 = 0.5;
pub const TWO_BUMP_MODULATION: f64 = 0.8;

/// Initial condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Preset {
    Equilibrium,
    ShiftedMaxwellian {
        a: f64,
        #[serde(rename = "T")]
        temperature: f64,
    },
    TwoBump,
    FromFile {
        path: PathBuf,
    },
}

impl Preset {
    /// Unnormalised continuous density for the analytic presets.
    pub fn density(&self, x: f64, v: f64, length: f64) -> Option<f64> {
        match *self {
            Preset::ShiftedMaxwellian { a, temperature } => {
                Some((-(v - a) * (v - a) / (2.0 * temperature)).exp())
            }
            Preset::TwoBump => {
                let bump = |xc: f64, vc: f64| {
                    (1.0 + TWO_BUMP_MODULATION * (TAU * (x - xc) / length).cos())
                        * (-(v - vc) * (v - vc) / (2.0 * TWO_BUMP_TEMPERATURE)).exp()
                };
                Some(0.5 * (bump(0.25 * length, TWO_BUMP_SPEED) + bump(0.75 * length, -TWO_BUMP_SPEED)))
            }
            Preset::Equilibrium | Preset::FromFile { .. } => None,
        }
    }
}

/// Builds a unit-mass initial state.
pub fn init_state(grid: &Grid, preset: &Preset, equilibrium: &EquilibriumTable) -> Result<KineticState> {
    let mut state = KineticState::zeros(*grid);
    match preset {
        Preset::Equilibrium => {
            if equilibrium.density.len() != grid.nv {
                return Err(FpaError::SizeMismatch {
                    expected: grid.nv,
                    got: equilibrium.density.len(),
                });
            }
            for i in 0..grid.nx {
                state.f[i * grid.nv..(i + 1) * grid.nv].copy_from_slice(&equilibrium.density);
            }
            Ok(state)
        }
        Preset::ShiftedMaxwellian { temperature, .. } if !(*temperature > 0.0) => {
            Err(invalid("T", format!("temperature must be positive, got {temperature}")))
        }
        Preset::FromFile { path } => {
            let loaded = read_snapshot(path)?;
            let g = loaded.grid;
            if g.nx != grid.nx || g.nv != grid.nv || g.length != grid.length || g.vmax != grid.vmax {
                return Err(FpaError::Domain(format!(
                    "snapshot grid {}x{} (L={}, Vmax={}) does not match configured grid {}x{} (L={}, Vmax={})",
                    g.nx, g.nv, g.length, g.vmax, grid.nx, grid.nv, grid.length, grid.vmax
                )));
            }
            // Unit-mass snapshots are restored bit for bit so restarts reproduce.
            if (loaded.mass() - 1.0).abs() <= 1e-12 && loaded.min_value() >= 0.0 {
                return Ok(loaded);
            }
            let t = loaded.t;
            let mut s = loaded.normalise()?;
            s.t = t;
            Ok(s)
        }
        analytic => {
            for i in 0..grid.nx {
                let x = grid.x(i);
                for j in 0..grid.nv {
                    state.f[grid.index(i, j)] = analytic
                        .density(x, grid.v(j), grid.length)
                        .expect("analytic preset");
                }
            }
            state.normalise()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::force::{equilibrium, ForceParams};

    #[test]
    fn equilibrium_preset_matches_table() {
        let grid = Grid::standard();
        let table = equilibrium(&grid, &ForceParams::default()).unwrap();
        let s = init_state(&grid, &Preset::Equilibrium, &table).unwrap();
        assert!((s.mass() - 1.0).abs() < 1e-12);
        assert_eq!(s.row(17), &table.density[..]);
        assert_eq!(s.momentum(), 0.0);
    }

    #[test]
    fn two_bump_is_normalised_and_positive() {
        let grid = Grid::standard();
        let table = equilibrium(&grid, &ForceParams::default()).unwrap();
        let s = init_state(&grid, &Preset::TwoBump, &table).unwrap();
        assert!((s.mass() - 1.0).abs() < 1e-12);
        assert!(s.min_value() >= 0.0);
        assert!(s.momentum().abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_temperature() {
        let grid = Grid::standard();
        let table = equilibrium(&grid, &ForceParams::default()).unwrap();
        let p = Preset::ShiftedMaxwellian {
            a: 0.0,
            temperature: -1.0,
        };
        assert!(init_state(&grid, &p, &table).is_err());
    }
}
