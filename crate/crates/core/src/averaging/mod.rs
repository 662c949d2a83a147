//! Environmental averaging models `(s_rho, [.]_rho)`, the `kappa_rho`
//! pairing `d kappa = s_rho d rho`, and numeric checks of the four structural
//! assumptions on the averaging that drive exponential relaxation.
//!
//! Everything here acts on per-x-cell fields of a periodic uniform grid.
//! Averages are linear in the velocity field for a fixed density, so each
//! model is also available as an explicit `Nx x Nx` matrix for the spectral
//! checks.

mod assumptions;
mod kernel;
pub mod linalg;

use serde::{Deserialize, Serialize};

pub use assumptions::{assess, AssumptionConfig, AssumptionReport};
pub use kernel::{convolve_periodic, Kernel, KernelShape, KernelTable};

use crate::error::{FpaError, Result};
use linalg::{power_iteration, Dense};

/// Cells whose averaged density falls below this are treated as vacuum.
pub const DENSITY_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Cucker–Smale: `s = phi * rho`, `[u] = phi * (u rho) / (phi * rho)`.
    Cs,
    /// `s = phi * rho`, `[u] = phi * ( phi * (u rho) / (phi * rho) )`.
    DoubleConv,
    /// Diagnostic: `s = phi * rho`, `[u] = u`.
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AveragingModel {
    pub variant: Variant,
    pub kernel: KernelTable,
}

/// `s_rho` and `[u]_rho` per x-cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Averaged {
    pub strength: Vec<f64>,
    pub average: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subspace {
    Full,
    #[default]
    MeanZero,
}

/// Assumption (i) constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrengthBounds {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

/// Assumption (iv) ratio `||u_F|| / ||u||` in `L^2(kappa_rho)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceRatio {
    pub ratio: f64,
    /// Both norms vanish.
    pub vacuous: bool,
}

impl ForceRatio {
    pub fn passes(&self) -> bool {
        self.ratio < 1.0
    }
}

const VANISHING_NORM: f64 = 1e-14;

impl AveragingModel {
    pub fn new(variant: Variant, kernel: Kernel, nx: usize, length: f64) -> Result<Self> {
        Ok(Self {
            variant,
            kernel: kernel.tabulate(nx, length)?,
        })
    }

    pub fn nx(&self) -> usize {
        self.kernel.nx
    }

    pub fn dx(&self) -> f64 {
        self.kernel.dx
    }

    fn check_len(&self, field: &[f64]) -> Result<()> {
        if field.len() != self.nx() {
            return Err(FpaError::SizeMismatch {
                expected: self.nx(),
                got: field.len(),
            });
        }
        Ok(())
    }

    /// `s_rho = phi * rho`, failing on any vacuum cell in the kernel footprint.
    pub fn strength(&self, rho: &[f64]) -> Result<Vec<f64>> {
        self.check_len(rho)?;
        let s = convolve_periodic(rho, &self.kernel)?;
        if let Some((cell, &value)) = s
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= DENSITY_FLOOR))
        {
            return Err(FpaError::DegenerateDensity { cell, value });
        }
        Ok(s)
    }

    /// Communication strength and averaged velocity for density `rho` and
    /// velocity `u` (values of `u` in vacuum cells are ignored).
    pub fn strength_and_average(&self, rho: &[f64], u: &[f64]) -> Result<Averaged> {
        self.check_len(u)?;
        let strength = self.strength(rho)?;
        let momentum: Vec<f64> = rho.iter().zip(u).map(|(r, u)| r * u).collect();
        let average = match self.variant {
            Variant::Identity => u.to_vec(),
            Variant::Cs => {
                let m = convolve_periodic(&momentum, &self.kernel)?;
                m.iter().zip(&strength).map(|(m, s)| m / s).collect()
            }
            Variant::DoubleConv => {
                let m = convolve_periodic(&momentum, &self.kernel)?;
                let inner: Vec<f64> = m.iter().zip(&strength).map(|(m, s)| m / s).collect();
                convolve_periodic(&inner, &self.kernel)?
            }
        };
        Ok(Averaged { strength, average })
    }

    fn convolution_matrix(&self) -> Dense {
        let n = self.nx();
        let dx = self.dx();
        let mut phi = Dense::zeros(n);
        for i in 0..n {
            for j in 0..n {
                phi.set(i, j, self.kernel.weight((i + n - j) % n) * dx);
            }
        }
        phi
    }

    /// Matrix of `w -> [w]_rho` for the fixed density `rho`.
    pub fn average_matrix(&self, rho: &[f64]) -> Result<Dense> {
        let s = self.strength(rho)?;
        let n = self.nx();
        let phi = self.convolution_matrix();
        let mut t = Dense::zeros(n);
        match self.variant {
            Variant::Identity => {
                for i in 0..n {
                    t.set(i, i, 1.0);
                }
            }
            Variant::Cs => {
                for i in 0..n {
                    for j in 0..n {
                        t.set(i, j, phi.get(i, j) * rho[j] / s[i]);
                    }
                }
            }
            Variant::DoubleConv => {
                for i in 0..n {
                    for j in 0..n {
                        let mut acc = 0.0;
                        for k in 0..n {
                            acc += phi.get(i, k) * phi.get(k, j) / s[k];
                        }
                        t.set(i, j, acc * rho[j]);
                    }
                }
            }
        }
        Ok(t)
    }

    /// Matrix of `u -> s_rho [u]_rho`. For Cucker–Smale this is the plain
    /// weighted convolution `phi * (u rho)`, assembled without dividing by `s`.
    fn weighted_average_matrix(&self, rho: &[f64]) -> Result<Dense> {
        let n = self.nx();
        if self.variant == Variant::Cs {
            self.strength(rho)?;
            let phi = self.convolution_matrix();
            let mut m = Dense::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    m.set(i, j, phi.get(i, j) * rho[j]);
                }
            }
            return Ok(m);
        }
        let s = self.strength(rho)?;
        let mut t = self.average_matrix(rho)?;
        for i in 0..n {
            for j in 0..n {
                let v = t.get(i, j) * s[i];
                t.set(i, j, v);
            }
        }
        Ok(t)
    }
}

/// `<w1, w2>_kappa = sum w1 w2 s rho dx`.
pub fn kappa_inner(w1: &[f64], w2: &[f64], rho: &[f64], strength: &[f64], dx: f64) -> f64 {
    w1.iter()
        .zip(w2)
        .zip(rho.iter().zip(strength))
        .map(|((a, b), (r, s))| a * b * s * r)
        .sum::<f64>()
        * dx
}

/// Assumption (i): `c0 <= s_rho <= c1`, `|grad s_rho| <= c2` with centred
/// periodic differences.
pub fn check_assumption_i(rho: &[f64], model: &AveragingModel) -> Result<StrengthBounds> {
    model.check_len(rho)?;
    let s = convolve_periodic(rho, &model.kernel)?;
    let n = s.len();
    let dx = model.dx();
    let c0 = s.iter().cloned().fold(f64::INFINITY, f64::min);
    let c1 = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let c2 = (0..n)
        .map(|i| ((s[(i + 1) % n] - s[(i + n - 1) % n]) / (2.0 * dx)).abs())
        .fold(0.0, f64::max);
    Ok(StrengthBounds { c0, c1, c2 })
}

/// Matrix of `u -> grad_x (s_rho [u]_rho)` expressed in `L^2(rho)`-orthonormal
/// coordinates on the non-vacuum cells.
pub fn assumption_ii_matrix(rho: &[f64], model: &AveragingModel) -> Result<Dense> {
    let n = model.nx();
    let dx = model.dx();
    let weighted = model.weighted_average_matrix(rho)?;
    let active: Vec<usize> = (0..n).filter(|&i| rho[i] > DENSITY_FLOOR).collect();
    let m = active.len();
    let mut b = Dense::zeros(m);
    for (a, &i) in active.iter().enumerate() {
        let ip = (i + 1) % n;
        let im = (i + n - 1) % n;
        for (c, &j) in active.iter().enumerate() {
            let d = (weighted.get(ip, j) - weighted.get(im, j)) / (2.0 * dx);
            b.set(a, c, (rho[i] * dx).sqrt() * d / (rho[j] * dx).sqrt());
        }
    }
    Ok(b)
}

/// Assumption (ii): operator norm of `grad_x (s_rho [.]_rho)` on `L^2(rho)`,
/// by power iteration on `B^T B`.
pub fn check_assumption_ii(rho: &[f64], model: &AveragingModel) -> Result<f64> {
    let b = assumption_ii_matrix(rho, model)?;
    let n = b.n;
    let result = power_iteration(
        n,
        |x, y| {
            let mut t = vec![0.0; n];
            b.mul_vec(x, &mut t);
            b.mul_vec_transposed(&t, y);
        },
        None,
        1e-8,
        1000,
    )?;
    Ok(result.value.max(0.0).sqrt())
}

/// Symmetrised averaging operator in `kappa_rho`-orthonormal coordinates.
///
/// The pairing `<w, [w]>_kappa = w^T K T w` with `K = diag(s rho dx)` is a
/// quadratic form; its supremum over `||w||_kappa = 1` is the top eigenvalue
/// of `K^{-1/2} sym(K T) K^{-1/2}`.
#[derive(Debug, Clone)]
pub struct GapOperator {
    pub matrix: Dense,
    /// Asymmetry of `K T` before symmetrisation.
    pub pairing_asymmetry: f64,
    /// Unit vector along the constants, `K^{1/2} 1 / |K^{1/2} 1|`.
    constant_direction: Vec<f64>,
}

impl GapOperator {
    pub fn new(rho: &[f64], model: &AveragingModel) -> Result<Self> {
        let n = model.nx();
        let dx = model.dx();
        let s = model.strength(rho)?;
        let t = model.average_matrix(rho)?;
        let kappa: Vec<f64> = (0..n).map(|i| s[i] * rho[i] * dx).collect();
        let active: Vec<usize> = (0..n).filter(|&i| kappa[i] > 0.0).collect();
        if active.is_empty() {
            return Err(FpaError::DegenerateDensity { cell: 0, value: 0.0 });
        }
        let m = active.len();
        let mut pairing = Dense::zeros(m);
        for (a, &i) in active.iter().enumerate() {
            for (c, &j) in active.iter().enumerate() {
                pairing.set(a, c, kappa[i] * t.get(i, j));
            }
        }
        let pairing_asymmetry = pairing.max_asymmetry();
        let mut matrix = Dense::zeros(m);
        for (a, &i) in active.iter().enumerate() {
            for (c, &j) in active.iter().enumerate() {
                let sym = 0.5 * (pairing.get(a, c) + pairing.get(c, a));
                matrix.set(a, c, sym / (kappa[i] * kappa[j]).sqrt());
            }
        }
        if matrix.data.iter().any(|v| !v.is_finite()) {
            return Err(FpaError::DegenerateDensity {
                cell: active[0],
                value: f64::NAN,
            });
        }
        let root: Vec<f64> = active.iter().map(|&i| kappa[i].sqrt()).collect();
        let norm = root.iter().map(|r| r * r).sum::<f64>().sqrt();
        let constant_direction = root.iter().map(|r| r / norm).collect();
        Ok(Self {
            matrix,
            pairing_asymmetry,
            constant_direction,
        })
    }

    fn project(&self, x: &mut [f64]) {
        let e = &self.constant_direction;
        let dot: f64 = x.iter().zip(e).map(|(a, b)| a * b).sum();
        x.iter_mut().zip(e).for_each(|(a, b)| *a -= dot * b);
    }

    /// Supremum by a dense symmetric eigensolve.
    pub fn dense_sup(&self, subspace: Subspace) -> Result<f64> {
        match subspace {
            Subspace::Full => self.matrix.max_symmetric_eigenvalue(),
            Subspace::MeanZero => {
                // P A P - c e e^T: the constant direction is pushed below the
                // spectrum of the complement.
                let n = self.matrix.n;
                let e = &self.constant_direction;
                let frob = self.matrix.data.iter().map(|v| v * v).sum::<f64>().sqrt();
                let c = 1.0 + frob;
                let mut pa = Dense::zeros(n);
                let mut col = vec![0.0; n];
                let mut out = vec![0.0; n];
                for j in 0..n {
                    col.iter_mut().enumerate().for_each(|(i, v)| {
                        *v = if i == j { 1.0 } else { 0.0 } - e[i] * e[j]
                    });
                    self.matrix.mul_vec(&col, &mut out);
                    self.project(&mut out);
                    for i in 0..n {
                        pa.set(i, j, out[i] - c * e[i] * e[j]);
                    }
                }
                // Re-symmetrise against rounding in the projections.
                for i in 0..n {
                    for j in 0..i {
                        let v = 0.5 * (pa.get(i, j) + pa.get(j, i));
                        pa.set(i, j, v);
                        pa.set(j, i, v);
                    }
                }
                pa.max_symmetric_eigenvalue()
            }
        }
    }

    /// Supremum by shifted power iteration.
    pub fn power_sup(&self, subspace: Subspace, tol: f64, max_iter: usize) -> Result<f64> {
        let n = self.matrix.n;
        let gershgorin = (0..n)
            .map(|i| {
                let off: f64 = (0..n).filter(|&j| j != i).map(|j| self.matrix.get(i, j).abs()).sum();
                self.matrix.get(i, i) - off
            })
            .fold(f64::INFINITY, f64::min);
        let shift = (-gershgorin).max(0.0);
        let apply = |x: &[f64], y: &mut [f64]| {
            self.matrix.mul_vec(x, y);
            y.iter_mut().zip(x).for_each(|(a, b)| *a += shift * b);
        };
        let projector = |x: &mut [f64]| self.project(x);
        let project: Option<linalg::Projector<'_>> = match subspace {
            Subspace::Full => None,
            Subspace::MeanZero => Some(&projector),
        };
        let r = power_iteration(n, apply, project, tol, max_iter)?;
        Ok(r.value - shift)
    }
}

/// Largest value of `<w, [w]_rho>_kappa` over unit `w` in the subspace.
pub fn spectral_gap(rho: &[f64], model: &AveragingModel, subspace: Subspace) -> Result<f64> {
    let op = GapOperator::new(rho, model)?;
    if op.matrix.n <= 1024 {
        op.dense_sup(subspace)
    } else {
        op.power_sup(subspace, 1e-12, 100_000)
    }
}

/// Assumption (iv): `||u_F||_kappa / ||u||_kappa`.
pub fn check_assumption_iv(
    rho: &[f64],
    strength: &[f64],
    u: &[f64],
    u_force: &[f64],
    dx: f64,
) -> ForceRatio {
    let nu = kappa_inner(u, u, rho, strength, dx).max(0.0).sqrt();
    let nf = kappa_inner(u_force, u_force, rho, strength, dx).max(0.0).sqrt();
    if nu < VANISHING_NORM && nf < VANISHING_NORM {
        return ForceRatio {
            ratio: 0.0,
            vacuous: true,
        };
    }
    if nu < VANISHING_NORM {
        return ForceRatio {
            ratio: f64::INFINITY,
            vacuous: false,
        };
    }
    ForceRatio {
        ratio: nf / nu,
        vacuous: false,
    }
}
