//! Rayleigh-type friction / self-propulsion force, its potential, and the
//! Gibbs equilibrium it induces.
//!
//! The force is `F(v) = sigma (|v|^p - 1) v / eta(|v|)` with the cutoff
//! `eta(z) = (1 + max(z - R, 0)^2 / w^2)^(q/2)`: identically 1 on `[0, R]`,
//! C^1, non-decreasing and growing like `(z/w)^q`. The confining potential is
//! `V(v) = |v|^2/2 + G(|v|)` with `G' (z) = sigma (z^(p+1) - z) / eta(z)`, so
//! that `grad V = v + F(v)` and the equilibrium is `f_inf = exp(-V) / Z`.
//!
//! Vector quantities are written for any dimension `D` through const
//! generics; the solver itself uses `D = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, FpaError, Result};
use crate::grid::Grid;
use crate::quadrature::adaptive_simpson;

/// Absolute tolerance for the quadrature defining `G`.
pub const G_TOLERANCE: f64 = 1e-12;

/// Required ratio `f_inf(Vmax) / max f_inf` for a safe velocity truncation.
pub const TAIL_RATIO_LIMIT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForceParams {
    pub sigma: f64,
    pub p: f64,
    pub q: f64,
    /// Cutoff radius below which `eta = 1`.
    #[serde(rename = "R")]
    pub cutoff: f64,
    /// Transition width of `eta` above the cutoff.
    #[serde(rename = "w")]
    pub width: f64,
}

impl Default for ForceParams {
    fn default() -> Self {
        Self {
            sigma: 0.25,
            p: 2.0,
            q: 4.0,
            cutoff: 2.0,
            width: 2.5,
        }
    }
}

impl ForceParams {
    pub fn new(sigma: f64, p: f64, q: f64, cutoff: f64, width: f64) -> Result<Self> {
        let params = Self {
            sigma,
            p,
            q,
            cutoff,
            width,
        };
        params.validate()?;
        Ok(params)
    }

    /// Degenerate `sigma = 0` configuration: no force, Gaussian equilibrium.
    pub fn ornstein_uhlenbeck() -> Self {
        Self {
            sigma: 0.0,
            ..Self::default()
        }
    }

    /// `sigma = 0` is admitted as a test configuration.
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.sigma) {
            return Err(invalid("sigma", format!("must lie in [0, 1), got {}", self.sigma)));
        }
        if !(self.p > 0.0 && self.p.is_finite()) {
            return Err(invalid("p", format!("must be positive, got {}", self.p)));
        }
        if !(self.q > self.p && self.q.is_finite()) {
            return Err(invalid("q", format!("must exceed p = {}, got {}", self.p, self.q)));
        }
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return Err(invalid("R", format!("must be positive, got {}", self.cutoff)));
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(invalid("w", format!("must be positive, got {}", self.width)));
        }
        Ok(())
    }

    #[inline]
    fn eta_unchecked(&self, z: f64) -> f64 {
        let s = (z - self.cutoff).max(0.0) / self.width;
        (1.0 + s * s).powf(0.5 * self.q)
    }

    #[inline]
    fn eta_prime_unchecked(&self, z: f64) -> f64 {
        let s = (z - self.cutoff).max(0.0) / self.width;
        if s == 0.0 {
            return 0.0;
        }
        self.q * s / self.width * (1.0 + s * s).powf(0.5 * self.q - 1.0)
    }

    /// Radial profile `g(z) = sigma (z^p - 1) / eta(z)`, so that `F(v) = g(|v|) v`.
    #[inline]
    pub fn radial_factor(&self, z: f64) -> f64 {
        if self.sigma == 0.0 {
            return 0.0;
        }
        self.sigma * (z.powf(self.p) - 1.0) / self.eta_unchecked(z)
    }

    /// Scalar force for one velocity dimension.
    #[inline]
    pub fn force_1d(&self, v: f64) -> f64 {
        self.radial_factor(v.abs()) * v
    }

    /// Derivative of `G`, `sigma (z^(p+1) - z) / eta(z)`.
    #[inline]
    pub fn g_prime(&self, z: f64) -> f64 {
        self.radial_factor(z) * z
    }

    /// Hessian eigenvalues of `V` at speed `z`: `(radial, tangential)`.
    pub fn hessian_eigenvalues(&self, z: f64) -> (f64, f64) {
        let eta = self.eta_unchecked(z);
        let zp = z.powf(self.p);
        let tangential = 1.0 + self.sigma * (zp - 1.0) / eta;
        let radial = tangential + self.sigma * self.p * zp / eta
            - self.sigma * (zp - 1.0) * z * self.eta_prime_unchecked(z) / (eta * eta);
        (radial, tangential)
    }
}

/// Cutoff function `eta(z)`.
pub fn eta(z: f64, params: &ForceParams) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(FpaError::Domain(format!("eta requires z >= 0, got {z}")));
    }
    Ok(params.eta_unchecked(z))
}

/// Derivative `eta'(z)`.
pub fn eta_prime(z: f64, params: &ForceParams) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(FpaError::Domain(format!("eta' requires z >= 0, got {z}")));
    }
    Ok(params.eta_prime_unchecked(z))
}

fn norm<const D: usize>(v: &[f64; D]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `F(v) = sigma (|v|^p - 1) v / eta(|v|)`.
pub fn force<const D: usize>(v: [f64; D], params: &ForceParams) -> [f64; D] {
    let g = params.radial_factor(norm(&v));
    v.map(|x| g * x)
}

/// `G(z) = int_0^z sigma (y^(p+1) - y) / eta(y) dy`.
pub fn potential_g(z: f64, params: &ForceParams) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(FpaError::Domain(format!("G requires z >= 0, got {z}")));
    }
    if params.sigma == 0.0 || z == 0.0 {
        return Ok(0.0);
    }
    let integrand = |y: f64| params.g_prime(y);
    // eta'' jumps at the cutoff; integrate the two smooth pieces separately.
    let r = params.cutoff;
    if z <= r {
        adaptive_simpson(&integrand, 0.0, z, G_TOLERANCE)
    } else {
        Ok(adaptive_simpson(&integrand, 0.0, r, 0.5 * G_TOLERANCE)?
            + adaptive_simpson(&integrand, r, z, 0.5 * G_TOLERANCE)?)
    }
}

/// `V(v) = |v|^2 / 2 + G(|v|)`.
pub fn potential_v<const D: usize>(v: [f64; D], params: &ForceParams) -> Result<f64> {
    let z = norm(&v);
    Ok(0.5 * z * z + potential_g(z, params)?)
}

/// `grad V = v + F(v)`.
pub fn grad_v<const D: usize>(v: [f64; D], params: &ForceParams) -> [f64; D] {
    let f = force(v, params);
    let mut out = v;
    for k in 0..D {
        out[k] += f[k];
    }
    out
}

/// Hessian of `V`: `a I + b v_hat v_hat^T` with `a` the tangential and
/// `a + b` the radial eigenvalue. At `v = 0` it reduces to `(1 - sigma) I`.
pub fn hess_v<const D: usize>(v: [f64; D], params: &ForceParams) -> [[f64; D]; D] {
    let z = norm(&v);
    let (radial, tangential) = params.hessian_eigenvalues(z);
    let mut h = [[0.0; D]; D];
    for (k, row) in h.iter_mut().enumerate() {
        row[k] = tangential;
    }
    if z > 0.0 {
        let b = radial - tangential;
        for k in 0..D {
            for l in 0..D {
                h[k][l] += b * (v[k] / z) * (v[l] / z);
            }
        }
    }
    h
}

/// Uniform bounds `lambda |y|^2 <= y^T Hess V y <= Lambda |y|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoercivityBounds {
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub upper: f64,
    /// Speed at which the lower bound is attained.
    pub argmin: f64,
    /// Upper end of the searched speed range.
    pub z_max: f64,
}

const COERCIVITY_GRID: usize = 10_000;

/// Searches the Hessian spectrum over speeds for the coercivity constants.
///
/// Both radial and tangential eigenvalues enter, so the bounds hold in any
/// dimension. The coarse grid minimum/maximum is polished by golden-section
/// search on the bracketing cells. Beyond `z_max` the eigenvalues relax to 1
/// because `sigma z^p / eta(z) -> 0` for `q > p`; a geometric probe of the
/// tail verifies no new extremum appears there and widens the window if one
/// does.
pub fn coercivity_bounds(params: &ForceParams) -> Result<CoercivityBounds> {
    params.validate()?;
    let lower = |z: f64| {
        let (r, t) = params.hessian_eigenvalues(z);
        r.min(t)
    };
    let upper = |z: f64| {
        let (r, t) = params.hessian_eigenvalues(z);
        -r.max(t)
    };

    let mut z_max = (3.0 * params.cutoff).max(10.0);
    loop {
        let h = z_max / (COERCIVITY_GRID - 1) as f64;
        let (mut imin, mut imax) = (0usize, 0usize);
        let (mut vmin, mut vmax) = (f64::INFINITY, f64::INFINITY);
        for i in 0..COERCIVITY_GRID {
            let z = i as f64 * h;
            let lo = lower(z);
            let hi = upper(z);
            if lo < vmin {
                vmin = lo;
                imin = i;
            }
            if hi < vmax {
                vmax = hi;
                imax = i;
            }
        }
        let (zmin, lambda) = polish_minimum(&lower, imin, h, z_max);
        let (_, neg_upper) = polish_minimum(&upper, imax, h, z_max);
        let big_lambda = -neg_upper;

        let tail_ok = (1..=2000).all(|k| {
            let z = z_max * (1000.0f64).powf(k as f64 / 2000.0);
            let (r, t) = params.hessian_eigenvalues(z);
            r.min(t) >= lambda && r.max(t) <= big_lambda
        });
        if !tail_ok && z_max < 1e6 {
            z_max *= 10.0;
            continue;
        }
        if !(lambda > 0.0) {
            return Err(FpaError::CoercivityFails { lambda, at: zmin });
        }
        return Ok(CoercivityBounds {
            lambda,
            upper: big_lambda,
            argmin: zmin,
            z_max,
        });
    }
}

fn polish_minimum(f: &impl Fn(f64) -> f64, i: usize, h: f64, z_max: f64) -> (f64, f64) {
    let z0 = i as f64 * h;
    let mut a = (z0 - h).max(0.0);
    let mut b = (z0 + h).min(z_max);
    let gr = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    // Keep the best of the polished point and the grid endpoints.
    let mut best = (z0, f(z0));
    for z in [a, b, c, d, 0.5 * (a + b)] {
        let v = f(z);
        if v < best.1 {
            best = (z, v);
        }
    }
    best
}

/// Smallest speed (on a 0.05 lattice) at which `f_inf` has fallen by
/// `threshold` relative to its peak, i.e. `V(z) - V(0) >= -ln(threshold)`.
pub fn suggest_vmax(params: &ForceParams, threshold: f64) -> Result<f64> {
    let target = -threshold.ln();
    let mut z = 0.0;
    while z < 1e3 {
        z += 0.05;
        if potential_v([z], params)? >= target {
            return Ok(z);
        }
    }
    Err(FpaError::Domain("potential does not reach the tail threshold".into()))
}

/// `f_inf` tabulated on the velocity nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumTable {
    /// `V(v_j)`.
    pub potential: Vec<f64>,
    /// `f_inf(v_j) = exp(-V(v_j)) / Z`.
    pub density: Vec<f64>,
    /// `F(v_j)`.
    pub force: Vec<f64>,
    /// Partition constant: grid quadrature of `exp(-V)` over x and v.
    pub z: f64,
}

impl EquilibriumTable {
    /// Discrete mass of the table over the full phase-space grid.
    pub fn mass(&self, grid: &Grid) -> f64 {
        self.density.iter().sum::<f64>() * grid.dv * grid.length
    }
}

/// Tabulates the Gibbs equilibrium on `grid`.
///
/// `V` is evaluated on the non-negative half of the velocity nodes and
/// mirrored, so the table is exactly even.
pub fn equilibrium(grid: &Grid, params: &ForceParams) -> Result<EquilibriumTable> {
    params.validate()?;
    let nv = grid.nv;
    let half = nv / 2;
    let mut potential = vec![0.0; nv];
    for j in half..nv {
        let v = potential_v([grid.v(j)], params)?;
        potential[j] = v;
        potential[nv - 1 - j] = v;
    }

    let v_edge = potential_v([grid.vmax], params)?;
    let tail_ratio = (-(v_edge - potential_v([0.0], params)?)).exp();
    if tail_ratio >= TAIL_RATIO_LIMIT {
        let beyond = adaptive_simpson(
            &|z: f64| (-potential_v([z], params).unwrap_or(f64::INFINITY)).exp(),
            grid.vmax,
            grid.vmax + 20.0,
            1e-14,
        )
        .unwrap_or(f64::NAN);
        let inside: f64 = potential.iter().map(|v| (-v).exp()).sum::<f64>() * grid.dv;
        return Err(FpaError::Truncation {
            tail_ratio,
            tail_mass: 2.0 * beyond / (inside + 2.0 * beyond),
        });
    }

    let weights: Vec<f64> = potential.iter().map(|v| (-v).exp()).collect();
    // Pairwise sum keeps the normalisation symmetric.
    let mut velocity_integral = 0.0;
    for j in 0..half {
        velocity_integral += weights[j] + weights[nv - 1 - j];
    }
    velocity_integral *= grid.dv;
    let z = velocity_integral * grid.length;
    let density: Vec<f64> = weights.iter().map(|w| w / z).collect();
    let force = grid.velocities().iter().map(|&v| params.force_1d(v)).collect();
    Ok(EquilibriumTable {
        potential,
        density,
        force,
        z,
    })
}
