use serde::{Deserialize, Serialize};

use super::ParticleEnsemble;
use crate::grid::Grid;
use crate::solver::KineticState;

/// Kernel smoothing applied to the phase-space histogram.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    #[default]
    None,
    /// Scott's rule per axis, `h = std * N^(-1/6)`.
    Scott,
    Fixed {
        hx: f64,
        hv: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub state: KineticState,
    /// Bandwidths actually used, `(hx, hv)`.
    pub bandwidth: Option<(f64, f64)>,
    /// Mass of agents with `|v| > Vmax`, dropped before normalising.
    pub outside_mass: f64,
}

/// Mass-weighted histogram on `grid`, normalised to unit mass.
pub fn empirical_density(ens: &ParticleEnsemble, grid: &Grid, smoothing: Smoothing) -> DensityEstimate {
    let mut state = KineticState::zeros(*grid);
    state.t = ens.t;
    let mut outside = 0.0;
    for k in 0..ens.len() {
        match grid.cell_of_v(ens.v[k]) {
            Some(j) => state.f[grid.index(grid.cell_of_x(ens.x[k]), j)] += ens.m[k],
            None => outside += ens.m[k],
        }
    }

    let bandwidth = match smoothing {
        Smoothing::None => None,
        Smoothing::Fixed { hx, hv } => Some((hx, hv)),
        Smoothing::Scott => {
            let factor = (ens.len() as f64).powf(-1.0 / 6.0);
            Some((circular_std(ens) * factor, weighted_std(&ens.v, &ens.m) * factor))
        }
    };
    if let Some((hx, hv)) = bandwidth {
        smooth(&mut state.f, grid, hx, hv);
    }

    let total: f64 = state.f.iter().sum();
    if total > 0.0 {
        let scale = 1.0 / (total * grid.cell_volume());
        state.f.iter_mut().for_each(|v| *v *= scale);
    }
    DensityEstimate {
        state,
        bandwidth,
        outside_mass: outside,
    }
}

fn weighted_std(values: &[f64], m: &[f64]) -> f64 {
    let total: f64 = m.iter().sum();
    let mean = values.iter().zip(m).map(|(v, w)| v * w).sum::<f64>() / total;
    (values.iter().zip(m).map(|(v, w)| w * (v - mean).powi(2)).sum::<f64>() / total).sqrt()
}

/// Spread of positions on the circle, scaled back to length units.
fn circular_std(ens: &ParticleEnsemble) -> f64 {
    let k = std::f64::consts::TAU / ens.length;
    let (mut c, mut s) = (0.0, 0.0);
    for (x, m) in ens.x.iter().zip(&ens.m) {
        c += m * (k * x).cos();
        s += m * (k * x).sin();
    }
    let r = (c * c + s * s).sqrt().clamp(1e-300, 1.0);
    let std = (-2.0 * r.ln()).sqrt() / k;
    // A uniform cloud has an unbounded circular std; cap at the uniform value.
    std.min(ens.length / 12f64.sqrt())
}

fn gaussian_weights(h: f64, step: f64, reach: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..=2 * reach)
        .map(|k| {
            let d = (k as f64 - reach as f64) * step;
            (-0.5 * (d / h).powi(2)).exp()
        })
        .collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// Separable Gaussian smoothing: periodic in x, zero-padded in v.
fn smooth(f: &mut [f64], grid: &Grid, hx: f64, hv: f64) {
    let (nx, nv) = (grid.nx, grid.nv);
    if hx > 0.0 {
        let reach = ((4.0 * hx / grid.dx).ceil() as usize).min(nx / 2);
        let w = gaussian_weights(hx, grid.dx, reach);
        let src = f.to_vec();
        for i in 0..nx {
            for j in 0..nv {
                let mut acc = 0.0;
                for (k, wk) in w.iter().enumerate() {
                    let ii = (i + nx * (reach + 1) + k - reach) % nx;
                    acc += wk * src[ii * nv + j];
                }
                f[i * nv + j] = acc;
            }
        }
    }
    if hv > 0.0 {
        let reach = ((4.0 * hv / grid.dv).ceil() as usize).min(nv);
        let w = gaussian_weights(hv, grid.dv, reach);
        let src = f.to_vec();
        for i in 0..nx {
            for j in 0..nv {
                let mut acc = 0.0;
                for (k, wk) in w.iter().enumerate() {
                    let jj = j as isize + k as isize - reach as isize;
                    if (0..nv as isize).contains(&jj) {
                        acc += wk * src[i * nv + jj as usize];
                    }
                }
                f[i * nv + j] = acc;
            }
        }
    }
}

/// Mass-weighted moments with Monte-Carlo standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub t: f64,
    pub momentum: f64,
    pub kinetic_energy: f64,
    pub momentum_se: f64,
    pub energy_se: f64,
    pub max_speed: f64,
    /// Bin edges `k * max_bin / bins`; the last bin also collects faster agents.
    pub speed_edges: Vec<f64>,
    pub speed_hist: Vec<f64>,
}

pub fn empirical_moments(ens: &ParticleEnsemble, bins: usize, max_bin: f64) -> Moments {
    let total: f64 = ens.m.iter().sum();
    let n_eff = total * total / ens.m.iter().map(|m| m * m).sum::<f64>();
    let momentum = ens.m.iter().zip(&ens.v).map(|(m, v)| m * v).sum::<f64>() / total;
    let kinetic_energy = ens.m.iter().zip(&ens.v).map(|(m, v)| 0.5 * m * v * v).sum::<f64>() / total;
    let (mut var_p, mut var_e) = (0.0, 0.0);
    for (m, v) in ens.m.iter().zip(&ens.v) {
        var_p += m * (v - momentum).powi(2);
        var_e += m * (0.5 * v * v - kinetic_energy).powi(2);
    }
    var_p /= total;
    var_e /= total;

    let bins = bins.max(1);
    let width = max_bin / bins as f64;
    let mut hist = vec![0.0; bins];
    let mut max_speed: f64 = 0.0;
    for (m, v) in ens.m.iter().zip(&ens.v) {
        let s = v.abs();
        max_speed = max_speed.max(s);
        let b = ((s / width) as usize).min(bins - 1);
        hist[b] += m / total;
    }
    Moments {
        t: ens.t,
        momentum,
        kinetic_energy,
        momentum_se: (var_p / n_eff).sqrt(),
        energy_se: (var_e / n_eff).sqrt(),
        max_speed,
        speed_edges: (0..=bins).map(|k| k as f64 * width).collect(),
        speed_hist: hist,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell_histogram() {
        let grid = Grid::new(4, 4, 4.0, 2.0).unwrap();
        let ens = ParticleEnsemble::new(4.0, vec![1.5, 1.2], vec![0.5, 0.6], 0).unwrap();
        let d = empirical_density(&ens, &grid, Smoothing::None);
        let j = grid.cell_of_v(0.5).unwrap();
        assert!((d.state.at(1, j) - 1.0 / grid.cell_volume()).abs() < 1e-12);
        assert!((d.state.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_pair_moments() {
        let ens = ParticleEnsemble::new(1.0, vec![0.1, 0.2], vec![1.0, -1.0], 0).unwrap();
        let m = empirical_moments(&ens, 4, 2.0);
        assert_eq!(m.momentum, 0.0);
        assert_eq!(m.kinetic_energy, 0.5);
        assert_eq!(m.speed_hist[2], 1.0);
    }

    #[test]
    fn smoothing_keeps_unit_mass() {
        let grid = Grid::new(16, 16, 1.0, 3.0).unwrap();
        let ens = ParticleEnsemble::new(1.0, vec![0.1, 0.5, 0.9], vec![0.0, 1.0, -2.9], 0).unwrap();
        let d = empirical_density(&ens, &grid, Smoothing::Scott);
        assert!(d.bandwidth.is_some());
        assert!((d.state.mass() - 1.0).abs() < 1e-12);
    }
}
