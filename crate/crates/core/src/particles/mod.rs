//! Euler–Maruyama simulation of the agent system with Cucker–Smale
//! alignment, Rayleigh-type self-propulsion, and strength-scaled noise.
//!
//! Positions live on the periodic interval `[0, L)`. Gaussian increments come
//! from a counter-based generator keyed by `(seed, step, agent)`, so
//! trajectories do not depend on the execution policy.

mod io;
mod observe;

use serde::{Deserialize, Serialize};

pub use io::{ensemble_to_string, parse_ensemble, read_ensemble, write_ensemble, ENSEMBLE_MAGIC};
pub use observe::{empirical_density, empirical_moments, DensityEstimate, Moments, Smoothing};

use crate::averaging::{Kernel, KernelShape, DENSITY_FLOOR};
use crate::error::{invalid, FpaError, Result};
use crate::exec::{map_range, Exec};
use crate::force::{potential_g, ForceParams};
use crate::rng::CounterRng;
use crate::solver::{Preset, TWO_BUMP_MODULATION, TWO_BUMP_SPEED, TWO_BUMP_TEMPERATURE};

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    pub length: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub m: Vec<f64>,
    pub seed: u64,
    pub t: f64,
    /// Completed steps; also the RNG stream of the next step.
    pub step: u64,
}

impl ParticleEnsemble {
    /// Equal masses `1/N`, positions reduced modulo `length`.
    pub fn new(length: f64, x: Vec<f64>, v: Vec<f64>, seed: u64) -> Result<Self> {
        let n = x.len();
        Self::with_masses(length, x, v, vec![1.0 / n.max(1) as f64; n], seed)
    }

    /// Masses are rescaled to sum to one.
    pub fn with_masses(length: f64, mut x: Vec<f64>, v: Vec<f64>, mut m: Vec<f64>, seed: u64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(invalid("L", format!("must be positive, got {length}")));
        }
        if x.is_empty() {
            return Err(invalid("N", "ensemble must contain at least one agent"));
        }
        if v.len() != x.len() || m.len() != x.len() {
            return Err(FpaError::SizeMismatch {
                expected: x.len(),
                got: v.len().min(m.len()),
            });
        }
        if let Some(bad) = m.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(invalid("m", format!("masses must be positive, got {bad}")));
        }
        if x.iter().chain(&v).any(|z| !z.is_finite()) {
            return Err(FpaError::Domain("non-finite agent position or velocity".into()));
        }
        let total: f64 = m.iter().sum();
        m.iter_mut().for_each(|w| *w /= total);
        x.iter_mut().for_each(|p| *p = wrap(*p, length));
        Ok(Self {
            length,
            x,
            v,
            m,
            seed,
            t: 0.0,
            step: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.m.iter().sum()
    }

    pub fn momentum(&self) -> f64 {
        self.m.iter().zip(&self.v).map(|(m, v)| m * v).sum()
    }
}

#[inline]
fn wrap(x: f64, length: f64) -> f64 {
    let r = x.rem_euclid(length);
    // rem_euclid can round up to `length` for tiny negative inputs.
    if r >= length {
        0.0
    } else {
        r
    }
}

/// Periodic distance `min(|x - y|, L - |x - y|)`.
#[inline]
pub fn periodic_distance(x: f64, y: f64, length: f64) -> f64 {
    let d = (x - y).abs() % length;
    d.min(length - d)
}

/// Whether the deterministic force enters as displayed for single agents or
/// weighted by the agent's communication strength like every other term of
/// the kinetic collision operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceScaling {
    #[default]
    Displayed,
    StrengthWeighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeParams {
    pub dt: f64,
    pub kernel: Kernel,
    pub force: ForceParams,
    pub noise_on: bool,
    pub force_scaling: ForceScaling,
}

impl SdeParams {
    pub fn validate(&self, length: f64) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        self.kernel.validate(length)?;
        self.force.validate()
    }
}

/// Per-agent communication strength `s_i` and local mean velocity `[v]_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Drift {
    pub strength: Vec<f64>,
    pub average: Vec<f64>,
}

/// Agents bucketed into periodic cells no narrower than the kernel radius.
struct CellList {
    cells: usize,
    width: f64,
    start: Vec<usize>,
    order: Vec<usize>,
}

impl CellList {
    fn build(x: &[f64], length: f64, radius: f64) -> Self {
        let cells = ((length / radius).floor() as usize).max(1);
        let width = length / cells as f64;
        let cell_of = |p: f64| ((p / width) as usize).min(cells - 1);
        let mut count = vec![0usize; cells + 1];
        for &p in x {
            count[cell_of(p) + 1] += 1;
        }
        for c in 0..cells {
            count[c + 1] += count[c];
        }
        let start = count.clone();
        let mut fill = count;
        let mut order = vec![0; x.len()];
        for (i, &p) in x.iter().enumerate() {
            let c = cell_of(p);
            order[fill[c]] = i;
            fill[c] += 1;
        }
        Self {
            cells,
            width,
            start,
            order,
        }
    }

    fn cell_of(&self, p: f64) -> usize {
        ((p / self.width) as usize).min(self.cells - 1)
    }

    /// Distinct cells within one cell of `c`.
    fn neighbours(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        let n = self.cells;
        let mut list = [c, (c + n - 1) % n, (c + 1) % n];
        let len = if n >= 3 {
            3
        } else if n == 2 {
            2
        } else {
            1
        };
        list[..len].sort_unstable();
        (0..len).map(move |k| list[k])
    }

    fn members(&self, c: usize) -> &[usize] {
        &self.order[self.start[c]..self.start[c + 1]]
    }
}

/// Cucker–Smale strength and average for every agent.
///
/// The global kernel is evaluated in `O(N)`; the tent kernel uses a cell list
/// so only agents in adjacent cells are visited.
pub fn cs_drift(ens: &ParticleEnsemble, kernel: &Kernel, exec: Exec) -> Result<Drift> {
    kernel.validate(ens.length)?;
    let n = ens.len();
    let length = ens.length;
    let (strength, average): (Vec<f64>, Vec<f64>) = match kernel.shape {
        KernelShape::Global => {
            let s = 1.0 / length * ens.total_mass();
            let avg = ens.momentum() / ens.total_mass();
            (vec![s; n], vec![avg; n])
        }
        KernelShape::Tent => {
            let cells = CellList::build(&ens.x, length, kernel.r0);
            let pairs = map_range(exec, n, |i| {
                let xi = ens.x[i];
                let (mut s, mut mv) = (0.0, 0.0);
                for c in cells.neighbours(cells.cell_of(xi)) {
                    for &j in cells.members(c) {
                        let w = ens.m[j] * kernel.eval(periodic_distance(xi, ens.x[j], length), length);
                        s += w;
                        mv += w * ens.v[j];
                    }
                }
                (s, mv)
            });
            pairs.into_iter().map(|(s, mv)| (s, mv / s)).unzip()
        }
    };
    if let Some((agent, &value)) = strength.iter().enumerate().find(|(_, s)| !(**s >= DENSITY_FLOOR)) {
        return Err(FpaError::IsolatedAgent { agent, value });
    }
    Ok(Drift { strength, average })
}

/// `sigma (1 - |v|^p) v / eta(|v|)`.
#[inline]
pub fn agent_force(v: f64, force: &ForceParams) -> f64 {
    -force.force_1d(v)
}

/// One Euler–Maruyama step.
pub fn em_step(ens: &mut ParticleEnsemble, params: &SdeParams, exec: Exec) -> Result<()> {
    let drift = cs_drift(ens, &params.kernel, exec)?;
    let dt = params.dt;
    let rng = CounterRng::new(ens.seed);
    let stream = ens.step;
    let v_old = &ens.v;
    let v_new = map_range(exec, ens.len(), |i| {
        let v = v_old[i];
        let s = drift.strength[i];
        let scale = match params.force_scaling {
            ForceScaling::Displayed => 1.0,
            ForceScaling::StrengthWeighted => s,
        };
        let mut next = v + s * (drift.average[i] - v) * dt + scale * agent_force(v, &params.force) * dt;
        if params.noise_on {
            next += (2.0 * s * dt).sqrt() * rng.normal(stream, i as u64);
        }
        next
    });
    let length = ens.length;
    for (x, v) in ens.x.iter_mut().zip(&ens.v) {
        *x = wrap(*x + v * dt, length);
    }
    ens.v = v_new;
    ens.step += 1;
    ens.t += dt;
    Ok(())
}

/// Streams reserved for initial sampling, far away from step streams.
const SAMPLE_STREAM: u64 = 1 << 63;

/// Draws `n` equal-mass agents from a preset density.
pub fn sample_preset(
    preset: &Preset,
    n: usize,
    length: f64,
    force: &ForceParams,
    seed: u64,
) -> Result<ParticleEnsemble> {
    if n == 0 {
        return Err(invalid("N", "must be at least 1"));
    }
    let rng = CounterRng::new(seed);
    // Uniforms/normals for agent i, attempt k.
    let uni = |i: usize, k: u64| rng.uniform_pair(SAMPLE_STREAM + 2 * k, i as u64);
    let nor = |i: usize, k: u64| rng.normal_pair(SAMPLE_STREAM + 2 * k + 1, i as u64);
    let mut x = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    match preset {
        Preset::FromFile { path } => {
            let mut ens = read_ensemble(path)?;
            ens.length = length;
            return Ok(ens);
        }
        Preset::ShiftedMaxwellian { a, temperature } => {
            if !(*temperature > 0.0) {
                return Err(invalid("T", format!("temperature must be positive, got {temperature}")));
            }
            for i in 0..n {
                x.push(uni(i, 0).0 * length);
                v.push(a + temperature.sqrt() * nor(i, 0).0);
            }
        }
        Preset::TwoBump => {
            for i in 0..n {
                let (pick, _) = uni(i, 0);
                let (xc, vc) = if pick < 0.5 {
                    (0.25 * length, TWO_BUMP_SPEED)
                } else {
                    (0.75 * length, -TWO_BUMP_SPEED)
                };
                let mut k = 1;
                let xi = loop {
                    let (u1, u2) = uni(i, k);
                    let cand = u1 * length;
                    let accept = (1.0 + TWO_BUMP_MODULATION * (std::f64::consts::TAU * (cand - xc) / length).cos())
                        / (1.0 + TWO_BUMP_MODULATION);
                    if u2 < accept {
                        break cand;
                    }
                    k += 1;
                };
                x.push(xi);
                v.push(vc + TWO_BUMP_TEMPERATURE.sqrt() * nor(i, 0).0);
            }
        }
        Preset::Equilibrium => {
            // exp(-V) <= exp(sigma/2) exp(-v^2/2) because G >= -sigma/2.
            for i in 0..n {
                x.push(uni(i, 0).0 * length);
                let mut k = 1;
                let vi = loop {
                    let cand = nor(i, k).0;
                    let g = potential_g(cand.abs(), force)?;
                    let (u, _) = uni(i, k);
                    if u < (-g - 0.5 * force.sigma).exp() {
                        break cand;
                    }
                    k += 1;
                };
                v.push(vi);
            }
        }
    }
    ParticleEnsemble::new(length, x, v, seed)
}
