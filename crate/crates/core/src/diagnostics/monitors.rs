//! Time-series monitors: the three Fisher-derivative inequalities with fitted
//! constants, the modified functional `I~ + gamma H`, and exponential fits.

use serde::{Deserialize, Serialize};

use super::DiagnosticsRecord;
use crate::error::{invalid, FpaError, Result};

/// Numerators below this count as satisfied with `c = 0`.
const SLACK: f64 = 1e-14;

/// Smallest `c >= 0` with `numerator <= c * denominator`.
fn fitted_constant(numerator: f64, denominator: f64) -> f64 {
    if numerator <= SLACK {
        0.0
    } else if denominator > 0.0 {
        numerator / denominator
    } else {
        f64::INFINITY
    }
}

/// Fitted constants at one interior record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaSample {
    pub t: f64,
    pub d_ivv: f64,
    pub d_ixv: f64,
    pub d_ixx: f64,
    /// `dI_vv/dt <= -2 D_vv - lambda c0 I_vv - 2 I_xv + c ||u||^2`.
    pub c_vv: f64,
    /// `dI_xv/dt <= c I_vv - I_xx/2 + 2 D_vv + D_xv + c ||u||^2`.
    pub c_xv: f64,
    /// `dI_xx/dt <= c I_vv - D_xv + c ||u||^2`.
    pub c_xx: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub samples: Vec<LemmaSample>,
    /// Running maxima `(c_vv, c_xv, c_xx)` after the last sample.
    pub max: [f64; 3],
    /// Maxima and medians over the second half of the samples.
    pub max_second_half: [f64; 3],
    pub median_second_half: [f64; 3],
}

impl LemmaReport {
    /// Running maxima after each sample.
    pub fn running_max(&self) -> Vec<[f64; 3]> {
        let mut m = [0.0f64; 3];
        self.samples
            .iter()
            .map(|s| {
                m = [m[0].max(s.c_vv), m[1].max(s.c_xv), m[2].max(s.c_xx)];
                m
            })
            .collect()
    }

    /// `max <= 2 median` over the second half, per constant.
    pub fn stable(&self) -> [bool; 3] {
        std::array::from_fn(|k| {
            let (mx, md) = (self.max_second_half[k], self.median_second_half[k]);
            mx.is_finite() && (mx <= 2.0 * md || mx == 0.0)
        })
    }

    /// Constant used to weight `I_xx` in the modified functional: the
    /// largest fitted `I_xx` constant, or 1 when that is zero.
    pub fn default_c_lemma(&self) -> f64 {
        let c = self.max[2];
        if c > 0.0 && c.is_finite() {
            c
        } else {
            1.0
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Fits the three lemma constants at every interior record.
pub fn lemma_monitors(records: &[DiagnosticsRecord], lambda: f64) -> Result<LemmaReport> {
    if records.len() < 3 {
        return Err(FpaError::InsufficientSamples {
            needed: 3,
            have: records.len(),
        });
    }
    let samples: Vec<LemmaSample> = records
        .windows(3)
        .map(|w| {
            let (a, r, b) = (&w[0], &w[1], &w[2]);
            let dt = b.t - a.t;
            let d_ivv = (b.ivv - a.ivv) / dt;
            let d_ixv = (b.ixv - a.ixv) / dt;
            let d_ixx = (b.ixx - a.ixx) / dt;
            let lc0 = lambda * r.c0;
            LemmaSample {
                t: r.t,
                d_ivv,
                d_ixv,
                d_ixx,
                c_vv: fitted_constant(d_ivv + 2.0 * r.dvv + lc0 * r.ivv + 2.0 * r.ixv, r.u_norm2),
                c_xv: fitted_constant(
                    d_ixv + 0.5 * r.ixx - 2.0 * r.dvv - r.dxv,
                    r.ivv + r.u_norm2,
                ),
                c_xx: fitted_constant(d_ixx + r.dxv, r.ivv + r.u_norm2),
            }
        })
        .collect();

    let pick = |s: &LemmaSample, k: usize| [s.c_vv, s.c_xv, s.c_xx][k];
    let half = &samples[samples.len() / 2..];
    let max = std::array::from_fn(|k| samples.iter().map(|s| pick(s, k)).fold(0.0, f64::max));
    let max_second_half = std::array::from_fn(|k| half.iter().map(|s| pick(s, k)).fold(0.0, f64::max));
    let median_second_half = std::array::from_fn(|k| median(half.iter().map(|s| pick(s, k)).collect()));
    Ok(LemmaReport {
        samples,
        max,
        max_second_half,
        median_second_half,
    })
}

/// How `gamma` in `I~ + gamma H` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaMode {
    /// `gamma H_0 = I~_0` at the first record.
    #[default]
    MatchInitial,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModifiedFunctional {
    pub epsilon: f64,
    pub c_lemma: f64,
    pub gamma: f64,
    pub t: Vec<f64>,
    pub tilde: Vec<f64>,
    pub combined: Vec<f64>,
    /// Steps `k -> k+1` with `combined` rising by more than `1e-8`.
    pub increases: usize,
    /// Share of steps that are non-increasing within `1e-8`.
    pub nonincreasing_fraction: f64,
}

/// `I~ = I_vv + eps I_xv + (lambda c0 / c_lemma) I_xx` and `I~ + gamma H`.
///
/// Fails when `I~ < (I_vv + (lambda c0 / c_lemma) I_xx) / 2` at some record,
/// which means `epsilon` is too large for `I~` to be comparable to `I`.
pub fn modified_functional(
    records: &[DiagnosticsRecord],
    epsilon: f64,
    lambda: f64,
    c0: f64,
    c_lemma: f64,
    gamma_mode: GammaMode,
) -> Result<ModifiedFunctional> {
    if !(epsilon > 0.0) {
        return Err(invalid("epsilon_tilde", format!("must be positive, got {epsilon}")));
    }
    if !(c_lemma > 0.0 && c_lemma.is_finite()) {
        return Err(invalid("c_lemma", format!("must be positive and finite, got {c_lemma}")));
    }
    if records.is_empty() {
        return Err(FpaError::InsufficientSamples { needed: 1, have: 0 });
    }
    let weight = lambda * c0 / c_lemma;
    let mut tilde = Vec::with_capacity(records.len());
    for (k, r) in records.iter().enumerate() {
        let value = r.ivv + epsilon * r.ixv + weight * r.ixx;
        let floor = 0.5 * (r.ivv + weight * r.ixx);
        if value < floor - 1e-14 * floor.abs().max(1.0) {
            return Err(FpaError::EpsilonTooLarge { epsilon, record: k });
        }
        tilde.push(value);
    }
    let gamma = match gamma_mode {
        GammaMode::Fixed(g) => g,
        GammaMode::MatchInitial if records[0].h > 0.0 => tilde[0] / records[0].h,
        GammaMode::MatchInitial => 0.0,
    };
    let combined: Vec<f64> = tilde.iter().zip(records).map(|(t, r)| t + gamma * r.h).collect();
    let increases = combined.windows(2).filter(|w| w[1] > w[0] + 1e-8).count();
    let steps = combined.len().saturating_sub(1);
    Ok(ModifiedFunctional {
        epsilon,
        c_lemma,
        gamma,
        t: records.iter().map(|r| r.t).collect(),
        tilde,
        combined,
        increases,
        nonincreasing_fraction: if steps == 0 {
            1.0
        } else {
            (steps - increases) as f64 / steps as f64
        },
    })
}

/// Least-squares fit `log H = log C - delta t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub t0: f64,
    pub t1: f64,
    pub delta_fit: f64,
    #[serde(rename = "C_fit")]
    pub c_fit: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Smallest `H` used in a fit.
pub const FIT_FLOOR: f64 = 1e-14;
pub const FIT_MIN_SAMPLES: usize = 10;

/// Fits `(t, H)` pairs with `t0 <= t <= t1` and `H > 1e-14`.
pub fn fit_decay(series: &[(f64, f64)], t0: f64, t1: f64) -> Result<DecayFit> {
    if !(t0 < t1) {
        return Err(invalid("t0", format!("window must satisfy t0 < t1, got [{t0}, {t1}]")));
    }
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, h)| *t >= t0 && *t <= t1 && *h > FIT_FLOOR && h.is_finite())
        .map(|(t, h)| (*t, h.ln()))
        .collect();
    if pts.len() < FIT_MIN_SAMPLES {
        return Err(FpaError::InsufficientSamples {
            needed: FIT_MIN_SAMPLES,
            have: pts.len(),
        });
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for (t, y) in &pts {
        stt += (t - mt) * (t - mt);
        sty += (t - mt) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sty / stt;
    let intercept = my - slope * mt;
    let ss_res: f64 = pts
        .iter()
        .map(|(t, y)| {
            let e = y - (intercept + slope * t);
            e * e
        })
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(DecayFit {
        t0,
        t1,
        delta_fit: -slope,
        c_fit: intercept.exp(),
        r_squared,
        samples: pts.len(),
    })
}
