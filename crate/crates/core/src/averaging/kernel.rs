use serde::{Deserialize, Serialize};

use crate::error::{invalid, FpaError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelShape {
    /// `phi(x) ~ max(1 - |x| / r0, 0)`.
    Tent,
    /// `phi = 1 / L`.
    Global,
}

/// Radial, non-negative, non-increasing communication kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub shape: KernelShape,
    /// Support radius (tent only).
    pub r0: f64,
}

impl Kernel {
    pub fn tent(r0: f64) -> Self {
        Self {
            shape: KernelShape::Tent,
            r0,
        }
    }

    pub fn global() -> Self {
        Self {
            shape: KernelShape::Global,
            r0: f64::INFINITY,
        }
    }

    pub fn validate(&self, length: f64) -> Result<()> {
        if self.shape == KernelShape::Tent && !(self.r0 > 0.0 && self.r0 <= 0.5 * length) {
            return Err(invalid(
                "r0",
                format!("tent radius must lie in (0, L/2] = (0, {}], got {}", 0.5 * length, self.r0),
            ));
        }
        Ok(())
    }

    /// Continuous kernel at periodic distance `d`, normalised so that
    /// `int_Omega phi = 1`.
    pub fn eval(&self, d: f64, length: f64) -> f64 {
        match self.shape {
            KernelShape::Global => 1.0 / length,
            KernelShape::Tent => (1.0 - d / self.r0).max(0.0) / self.r0,
        }
    }

    /// Largest distance with `phi > 0`, or `None` for full support.
    pub fn support(&self) -> Option<f64> {
        match self.shape {
            KernelShape::Global => None,
            KernelShape::Tent => Some(self.r0),
        }
    }

    /// Tabulates the kernel on a periodic grid of `nx` cells.
    pub fn tabulate(&self, nx: usize, length: f64) -> Result<KernelTable> {
        self.validate(length)?;
        let dx = length / nx as f64;
        match self.shape {
            KernelShape::Global => Ok(KernelTable {
                kernel: *self,
                nx,
                dx,
                stencil: Vec::new(),
                c0_floor: 1.0 / length,
            }),
            KernelShape::Tent => {
                let reach = (self.r0 / dx).floor() as isize;
                let mut dense = vec![0.0; nx];
                for k in -reach..=reach {
                    let w = (1.0 - (k as f64 * dx).abs() / self.r0).max(0.0);
                    dense[k.rem_euclid(nx as isize) as usize] += w;
                }
                let total: f64 = dense.iter().sum::<f64>() * dx;
                let mut stencil = Vec::new();
                for (k, w) in dense.iter().enumerate() {
                    if *w > 0.0 {
                        stencil.push((k, w / total));
                    }
                }
                let c0_floor = stencil
                    .iter()
                    .map(|&(_, w)| w)
                    .fold(f64::INFINITY, f64::min);
                Ok(KernelTable {
                    kernel: *self,
                    nx,
                    dx,
                    stencil,
                    c0_floor,
                })
            }
        }
    }
}

/// Kernel weights on a periodic grid, normalised so the discrete quadrature
/// `sum_k phi_k dx` is exactly one.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub kernel: Kernel,
    pub nx: usize,
    pub dx: f64,
    /// Non-zero weights as `(offset mod nx, phi)`; empty for the global kernel.
    stencil: Vec<(usize, f64)>,
    /// Smallest kernel value on grid offsets inside the support.
    pub c0_floor: f64,
}

impl KernelTable {
    pub fn is_global(&self) -> bool {
        self.kernel.shape == KernelShape::Global
    }

    pub fn length(&self) -> f64 {
        self.dx * self.nx as f64
    }

    /// Kernel weight at periodic cell offset `k`.
    pub fn weight(&self, k: usize) -> f64 {
        if self.is_global() {
            return 1.0 / self.length();
        }
        let k = k % self.nx;
        self.stencil
            .iter()
            .find(|&&(o, _)| o == k)
            .map_or(0.0, |&(_, w)| w)
    }

    pub fn stencil(&self) -> &[(usize, f64)] {
        &self.stencil
    }
}

/// Discrete periodic convolution `(phi * g)_i = sum_j phi_{i-j} g_j dx`.
///
/// Compactly supported kernels only visit their stencil; the global kernel
/// returns the mean of the field.
pub fn convolve_periodic(field: &[f64], kernel: &KernelTable) -> Result<Vec<f64>> {
    let n = kernel.nx;
    if field.len() != n {
        return Err(FpaError::SizeMismatch {
            expected: n,
            got: field.len(),
        });
    }
    if kernel.is_global() {
        let mean = field.iter().sum::<f64>() / n as f64;
        return Ok(vec![mean; n]);
    }
    let dx = kernel.dx;
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for &(k, w) in &kernel.stencil {
            acc += w * field[(i + n - k) % n];
        }
        *o = acc * dx;
    }
    Ok(out)
}
