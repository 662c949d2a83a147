//! Velocity drift–diffusion `f_t = s (f_v + W'(v) f)_v` per x-cell with
//! `W(v) = V(v) - a v`, `a = [u]_rho(x)`.
//!
//! Fluxes use the Chang–Cooper (Scharfetter–Gummel) weights
//! `J = (s/dv) [B(-dW) f_{j+1} - B(dW) f_j]`, `B(x) = x / (e^x - 1)`, which
//! vanish identically on the discrete Gibbs state `exp(-W_j)`. Velocity edges
//! carry zero flux, so every column of the step matrix sums to one.

use serde::{Deserialize, Serialize};

use super::state::KineticState;
use crate::error::{FpaError, Result};
use crate::exec::{try_for_each_chunk, Exec};
use crate::force::EquilibriumTable;
use crate::grid::Grid;

/// Time discretisation of the collision sub-step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionScheme {
    /// First order, unconditionally positive.
    #[default]
    ImplicitEuler,
    /// Second order; positive while `s dt / dv^2` stays moderate.
    CrankNicolson,
}

impl CollisionScheme {
    fn theta(self) -> f64 {
        match self {
            CollisionScheme::ImplicitEuler => 1.0,
            CollisionScheme::CrankNicolson => 0.5,
        }
    }
}

/// Bernoulli function `x / (e^x - 1)`.
#[inline]
pub fn bernoulli(x: f64) -> f64 {
    if x.abs() < 1e-10 {
        1.0 - 0.5 * x
    } else {
        x / x.exp_m1()
    }
}

/// Velocity-only data shared by every x-cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionOperator {
    dv: f64,
    /// `V_{j+1} - V_j`.
    dpot: Vec<f64>,
    /// `v_{j+1} - v_j`.
    dvel: Vec<f64>,
}

impl CollisionOperator {
    pub fn new(grid: &Grid, table: &EquilibriumTable) -> Self {
        let nv = grid.nv;
        Self {
            dv: grid.dv,
            dpot: (0..nv - 1)
                .map(|j| table.potential[j + 1] - table.potential[j])
                .collect(),
            dvel: (0..nv - 1).map(|j| grid.v(j + 1) - grid.v(j)).collect(),
        }
    }

    /// Advances one velocity row with strength `s` and mean velocity `a`.
    /// `cell` is only used for error reporting.
    pub fn step_row(
        &self,
        row: &mut [f64],
        s: f64,
        a: f64,
        dt: f64,
        scheme: CollisionScheme,
        cell: usize,
    ) -> Result<()> {
        let nv = row.len();
        let r = s * dt / (self.dv * self.dv);
        // bp[j] = B(dW_j), bm[j] = B(-dW_j) on edge j+1/2.
        let mut bp = vec![0.0; nv - 1];
        let mut bm = vec![0.0; nv - 1];
        for j in 0..nv - 1 {
            let dw = self.dpot[j] - a * self.dvel[j];
            bp[j] = bernoulli(dw);
            bm[j] = bernoulli(-dw);
        }

        let theta = scheme.theta();
        let mut rhs = row.to_vec();
        if theta < 1.0 {
            let w = (1.0 - theta) * r;
            for j in 0..nv {
                let mut flux = 0.0;
                if j + 1 < nv {
                    flux += bm[j] * row[j + 1] - bp[j] * row[j];
                }
                if j > 0 {
                    flux -= bm[j - 1] * row[j] - bp[j - 1] * row[j - 1];
                }
                rhs[j] += w * flux;
            }
        }

        let w = theta * r;
        let lower = |j: usize| -w * bp[j - 1];
        let upper = |j: usize| -w * bm[j];
        let diag = |j: usize| {
            let mut d = 1.0;
            if j + 1 < nv {
                d += w * bp[j];
            }
            if j > 0 {
                d += w * bm[j - 1];
            }
            d
        };

        // Thomas algorithm; the matrix is a column-diagonally-dominant M-matrix.
        let mut c_star = vec![0.0; nv];
        let mut pivot = diag(0);
        if !(pivot > 0.0) {
            return Err(FpaError::Tridiagonal { cell, row: 0 });
        }
        c_star[0] = if nv > 1 { upper(0) / pivot } else { 0.0 };
        rhs[0] /= pivot;
        for j in 1..nv {
            let l = lower(j);
            pivot = diag(j) - l * c_star[j - 1];
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(FpaError::Tridiagonal { cell, row: j });
            }
            c_star[j] = if j + 1 < nv { upper(j) / pivot } else { 0.0 };
            rhs[j] = (rhs[j] - l * rhs[j - 1]) / pivot;
        }
        for j in (0..nv - 1).rev() {
            rhs[j] -= c_star[j] * rhs[j + 1];
        }
        row.copy_from_slice(&rhs);
        Ok(())
    }
}

/// Applies the collision step to every x-cell; returns the clipped mass.
pub fn collision_step(
    state: &mut KineticState,
    op: &CollisionOperator,
    strength: &[f64],
    average: &[f64],
    dt: f64,
    scheme: CollisionScheme,
    exec: Exec,
) -> Result<f64> {
    let grid = state.grid;
    if strength.len() != grid.nx || average.len() != grid.nx {
        return Err(FpaError::SizeMismatch {
            expected: grid.nx,
            got: strength.len().min(average.len()),
        });
    }
    try_for_each_chunk(exec, &mut state.f, grid.nv, |i, row| {
        op.step_row(row, strength[i], average[i], dt, scheme, i)
    })?;
    let mut clipped = 0.0;
    for v in state.f.iter_mut() {
        if *v < 0.0 {
            clipped -= *v;
            *v = 0.0;
        }
    }
    Ok(clipped * grid.cell_volume())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::force::{equilibrium, ForceParams};

    #[test]
    fn bernoulli_branches_agree() {
        for x in [1e-11f64, -1e-11, 1e-9, -1e-9, 0.3, -0.3] {
            let series = 1.0 - x / 2.0 + x * x / 12.0 - x.powi(4) / 720.0;
            assert!((bernoulli(x) - series).abs() < 1e-7);
        }
        assert_eq!(bernoulli(0.0), 1.0);
        assert!((bernoulli(-5.0) - 5.0f64.exp() * bernoulli(5.0)).abs() < 1e-12);
    }

    #[test]
    fn gibbs_row_is_stationary() {
        let grid = Grid::standard();
        let table = equilibrium(&grid, &ForceParams::default()).unwrap();
        let op = CollisionOperator::new(&grid, &table);
        for scheme in [CollisionScheme::ImplicitEuler, CollisionScheme::CrankNicolson] {
            let mut row = table.density.clone();
            op.step_row(&mut row, 0.3, 0.0, 0.01, scheme, 0).unwrap();
            let peak = table.density.iter().cloned().fold(0.0, f64::max);
            for (a, b) in row.iter().zip(&table.density) {
                assert!((a - b).abs() <= 1e-13 * peak);
            }
        }
    }

    #[test]
    fn column_mass_is_conserved() {
        let grid = Grid::standard();
        let table = equilibrium(&grid, &ForceParams::default()).unwrap();
        let op = CollisionOperator::new(&grid, &table);
        let mut row: Vec<f64> = (0..grid.nv)
            .map(|j| (-(grid.v(j) - 1.0).powi(2)).exp() * (1.0 + 0.3 * (j as f64).sin()))
            .collect();
        let before: f64 = row.iter().sum();
        op.step_row(&mut row, 0.7, 0.4, 0.05, CollisionScheme::ImplicitEuler, 0)
            .unwrap();
        let after: f64 = row.iter().sum();
        assert!((after - before).abs() < 1e-13 * before);
        assert!(row.iter().all(|v| *v >= 0.0));
    }
}
