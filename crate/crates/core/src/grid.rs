use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Uniform phase-space grid: periodic in x on `[0, L)`, truncated in v to
/// `[-Vmax, Vmax]`. Cell centres only; values are cell averages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub nv: usize,
    pub length: f64,
    pub vmax: f64,
    pub dx: f64,
    pub dv: f64,
}

impl Grid {
    pub fn new(nx: usize, nv: usize, length: f64, vmax: f64) -> Result<Self> {
        if nx < 3 {
            return Err(invalid("Nx", format!("need at least 3 cells, got {nx}")));
        }
        if nv < 4 || !nv.is_multiple_of(2) {
            return Err(invalid("Nv", format!("must be even and >= 4, got {nv}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(invalid("L", format!("must be positive, got {length}")));
        }
        if !(vmax > 0.0 && vmax.is_finite()) {
            return Err(invalid("Vmax", format!("must be positive, got {vmax}")));
        }
        Ok(Self {
            nx,
            nv,
            length,
            vmax,
            dx: length / nx as f64,
            dv: 2.0 * vmax / nv as f64,
        })
    }

    /// Default solver grid: 64 x 128 cells on `[0, 2pi) x [-6, 6]`.
    pub fn standard() -> Self {
        Self::new(64, 128, std::f64::consts::TAU, 6.0).expect("valid default grid")
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.nv
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nv + j
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    /// Velocity node `j`. Written as a half-integer multiple of `dv` so that
    /// `v(nv - 1 - j) == -v(j)` holds bitwise.
    #[inline]
    pub fn v(&self, j: usize) -> f64 {
        (j as f64 + 0.5 - (self.nv / 2) as f64) * self.dv
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn velocities(&self) -> Vec<f64> {
        (0..self.nv).map(|j| self.v(j)).collect()
    }

    /// Phase-space cell volume.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.dx * self.dv
    }

    /// Periodic cell index of a position.
    pub fn cell_of_x(&self, x: f64) -> usize {
        let r = x.rem_euclid(self.length);
        ((r / self.dx) as usize).min(self.nx - 1)
    }

    /// Velocity cell containing `v`, or `None` outside the truncation.
    pub fn cell_of_v(&self, v: f64) -> Option<usize> {
        let s = (v + self.vmax) / self.dv;
        if s < 0.0 || s >= self.nv as f64 {
            return None;
        }
        Some((s as usize).min(self.nv - 1))
    }

    /// Sum of `v_j * row[j]` over a velocity row, accumulated in mirror pairs
    /// so that an even row gives exactly zero.
    pub fn odd_moment(&self, row: &[f64], weight: impl Fn(usize) -> f64) -> f64 {
        let half = self.nv / 2;
        let mut acc = 0.0;
        for j in 0..half {
            let m = self.nv - 1 - j;
            acc += weight(m) * row[m] - weight(m) * row[j];
        }
        acc
    }
}
