use serde::{Deserialize, Serialize};

use super::{
    check_assumption_i, check_assumption_ii, check_assumption_iv, spectral_gap, AveragingModel,
    Subspace,
};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionConfig {
    /// Assumption (i) fails when `min s_rho` is below this.
    pub c0_floor: f64,
    /// Assumption (iii) passes when the gap supremum is at most `1 - tol_gap`.
    pub tol_gap: f64,
    /// Subspace used for the (iii) verdict.
    pub subspace: Subspace,
}

impl Default for AssumptionConfig {
    fn default() -> Self {
        Self {
            c0_floor: 1e-12,
            tol_gap: 1e-3,
            subspace: Subspace::MeanZero,
        }
    }
}

/// Flat summary of the four structural assumptions for one density snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub op_norm_ii: f64,
    pub gap_sup_full: f64,
    pub gap_sup_mean_zero: f64,
    pub epsilon0: Option<f64>,
    pub force_ratio: f64,
    pub epsilon1: Option<f64>,
    pub pass_i: bool,
    pub pass_ii: bool,
    pub pass_iii: bool,
    pub pass_iv: bool,
    /// Both norms in (iv) vanished; the ratio is reported as 0.
    #[serde(skip)]
    pub force_ratio_vacuous: bool,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.pass_i && self.pass_ii && self.pass_iii && self.pass_iv
    }

    /// `(label, pass)` per assumption, in order.
    pub fn verdicts(&self) -> [(&'static str, bool); 4] {
        [
            ("i", self.pass_i),
            ("ii", self.pass_ii),
            ("iii", self.pass_iii),
            ("iv", self.pass_iv),
        ]
    }
}

/// Evaluates all four checks on a density `rho` with macroscopic velocity
/// `u` and force field `u_force`.
pub fn assess(
    rho: &[f64],
    u: &[f64],
    u_force: &[f64],
    model: &AveragingModel,
    cfg: &AssumptionConfig,
) -> Result<AssumptionReport> {
    let bounds = check_assumption_i(rho, model)?;
    let op_norm_ii = check_assumption_ii(rho, model)?;
    let gap_sup_full = spectral_gap(rho, model, Subspace::Full)?;
    let gap_sup_mean_zero = spectral_gap(rho, model, Subspace::MeanZero)?;
    let strength = model.strength(rho)?;
    let ratio = check_assumption_iv(rho, &strength, u, u_force, model.dx());

    let gap = match cfg.subspace {
        Subspace::Full => gap_sup_full,
        Subspace::MeanZero => gap_sup_mean_zero,
    };
    Ok(AssumptionReport {
        c0: bounds.c0,
        c1: bounds.c1,
        c2: bounds.c2,
        op_norm_ii,
        gap_sup_full,
        gap_sup_mean_zero,
        epsilon0: (gap < 1.0).then_some(1.0 - gap),
        force_ratio: ratio.ratio,
        epsilon1: ratio.passes().then_some(ratio.ratio),
        pass_i: bounds.c0 >= cfg.c0_floor && bounds.c1.is_finite() && bounds.c2.is_finite(),
        pass_ii: op_norm_ii.is_finite(),
        pass_iii: gap <= 1.0 - cfg.tol_gap,
        pass_iv: ratio.passes(),
        force_ratio_vacuous: ratio.vacuous,
    })
}
