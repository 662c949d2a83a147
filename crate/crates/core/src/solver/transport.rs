//! Free transport `f_t + v f_x = 0` by exact per-row shifts.
//!
//! Each velocity row moves by `v dt / dx` cells. The shifted cell average is
//! integrated exactly from a centred-slope linear reconstruction, which is
//! conservative and second order in `dx` with no time-step restriction.

use super::state::KineticState;
use crate::exec::{for_each_chunk, Exec};
use crate::grid::Grid;

/// Integer and fractional part of the shift for one velocity row.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Shift {
    cells: usize,
    alpha: f64,
}

fn shifts(grid: &Grid, dt: f64) -> Vec<Shift> {
    let nx = grid.nx as i64;
    (0..grid.nv)
        .map(|j| {
            let s = grid.v(j) * dt / grid.dx;
            let k = s.floor();
            Shift {
                cells: (k as i64).rem_euclid(nx) as usize,
                alpha: s - k,
            }
        })
        .collect()
}

/// Advances every velocity row by `dt`; returns the mass removed by clipping
/// negative cells.
pub fn transport_step(state: &mut KineticState, dt: f64, exec: Exec) -> f64 {
    let grid = state.grid;
    let (nx, nv) = (grid.nx, grid.nv);
    let shifts = shifts(&grid, dt);
    let old = state.f.clone();
    let old = &old[..];
    let at = |i: usize, j: usize| old[i * nv + j];

    for_each_chunk(exec, &mut state.f, nv, |i, row| {
        for (j, out) in row.iter_mut().enumerate() {
            let Shift { cells, alpha } = shifts[j];
            let c = (i + nx - cells) % nx;
            let cm1 = (c + nx - 1) % nx;
            let cm2 = (c + nx - 2) % nx;
            let cp1 = (c + 1) % nx;
            let (f0, fm1, fm2, fp1) = (at(c, j), at(cm1, j), at(cm2, j), at(cp1, j));
            *out = f0 + alpha * (fm1 - f0) + 0.25 * alpha * (1.0 - alpha) * (f0 - fm2 - fp1 + fm1);
        }
    });

    let mut clipped = 0.0;
    for v in state.f.iter_mut() {
        if *v < 0.0 {
            clipped -= *v;
            *v = 0.0;
        }
    }
    clipped * grid.cell_volume()
}
