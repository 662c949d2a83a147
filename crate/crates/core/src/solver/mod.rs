//! Finite-volume solver for the kinetic equation on the periodic
//! `x in [0, L)`, `v in [-Vmax, Vmax]` grid.
//!
//! One step is a Strang composition of half free transport, a macro-field
//! refresh, a full collision step with `s_rho` and `[u]_rho` frozen, and a
//! second half transport.

mod collision;
mod snapshot;
mod state;
mod transport;

use serde::{Deserialize, Serialize};

pub use collision::{bernoulli, collision_step, CollisionOperator, CollisionScheme};
pub use snapshot::{
    format_f64, parse_snapshot, read_snapshot, snapshot_to_string, write_atomic, write_snapshot,
    SNAPSHOT_MAGIC,
};
pub use state::{
    init_state, KineticState, Preset, TWO_BUMP_MODULATION, TWO_BUMP_SPEED, TWO_BUMP_TEMPERATURE,
};
pub use transport::transport_step;

use crate::averaging::{assess, AssumptionConfig, AssumptionReport, AveragingModel};
use crate::diagnostics::{self, macro_fields_tabulated, DiagnosticsRecord, MacroFields};
use crate::error::{FpaError, Result};
use crate::exec::Exec;
use crate::force::{coercivity_bounds, equilibrium, EquilibriumTable, ForceParams};
use crate::grid::Grid;

/// Everything that stays fixed over a run.
#[derive(Debug, Clone)]
pub struct Solver {
    pub grid: Grid,
    pub force: ForceParams,
    pub equilibrium: EquilibriumTable,
    pub model: AveragingModel,
    pub scheme: CollisionScheme,
    pub exec: Exec,
    /// Lower Hessian bound of `V`, used by the modified functional.
    pub lambda: f64,
    collision: CollisionOperator,
}

impl Solver {
    pub fn new(grid: Grid, force: ForceParams, model: AveragingModel) -> Result<Self> {
        if model.nx() != grid.nx || (model.kernel.length() - grid.length).abs() > 1e-12 * grid.length {
            return Err(FpaError::Domain(
                "averaging model was tabulated on a different grid".into(),
            ));
        }
        let table = equilibrium(&grid, &force)?;
        let lambda = coercivity_bounds(&force)?.lambda;
        let collision = CollisionOperator::new(&grid, &table);
        Ok(Self {
            grid,
            force,
            equilibrium: table,
            model,
            scheme: CollisionScheme::default(),
            exec: Exec::default(),
            lambda,
            collision,
        })
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn with_scheme(mut self, scheme: CollisionScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn init(&self, preset: &Preset) -> Result<KineticState> {
        init_state(&self.grid, preset, &self.equilibrium)
    }

    pub fn macro_fields(&self, state: &KineticState) -> Result<MacroFields> {
        macro_fields_tabulated(state, &self.model, &self.equilibrium.force)
    }

    /// Returns the mass clipped from negative cells.
    pub fn transport_step(&self, state: &mut KineticState, dt: f64) -> f64 {
        transport_step(state, dt, self.exec)
    }

    pub fn collision_step(&self, state: &mut KineticState, macro_: &MacroFields, dt: f64) -> Result<f64> {
        collision_step(
            state,
            &self.collision,
            &macro_.strength,
            &macro_.average,
            dt,
            self.scheme,
            self.exec,
        )
    }

    pub fn strang_step(&self, state: &mut KineticState, dt: f64) -> Result<StepOutcome> {
        let mut clipped = self.transport_step(state, 0.5 * dt);
        let macro_ = self.macro_fields(state)?;
        clipped += self.collision_step(state, &macro_, dt)?;
        clipped += self.transport_step(state, 0.5 * dt);
        state.t += dt;
        Ok(StepOutcome {
            macro_fields: macro_,
            clipped,
        })
    }

    pub fn diagnose(&self, state: &KineticState, cfg: &AssumptionConfig) -> Result<DiagnosticsRecord> {
        diagnostics::evaluate(state, &self.equilibrium, &self.model, cfg.subspace, self.exec)
    }

    pub fn assess(&self, state: &KineticState, cfg: &AssumptionConfig) -> Result<AssumptionReport> {
        let m = self.macro_fields(state)?;
        assess(&m.rho, &m.u, &m.u_force, &self.model, cfg)
    }

    /// Integrates `state` over `settings.duration`, recording diagnostics and
    /// passing snapshots to `on_snapshot`.
    pub fn run(
        &self,
        mut state: KineticState,
        settings: &RunSettings,
        mut on_snapshot: impl FnMut(&KineticState) -> Result<()>,
    ) -> Result<RunOutput> {
        settings.validate()?;
        let courant = self.grid.vmax * settings.dt / self.grid.dx;
        if settings.cfl_guard && courant > 1.0 {
            return Err(FpaError::Cfl { courant });
        }
        let steps = (settings.duration / settings.dt - 1e-9).ceil().max(0.0) as usize;
        let t_end = state.t + settings.duration;
        let snapshot_due = |k: usize| settings.snapshot_every > 0 && (k.is_multiple_of(settings.snapshot_every) || k == steps);
        let record_due = |k: usize| k.is_multiple_of(settings.record_every) || k == steps;

        let mut out = RunOutput {
            records: Vec::new(),
            final_state: state.clone(),
            status: RunStatus::Completed,
            steps: 0,
            max_step_change: 0.0,
            total_clipped: 0.0,
            max_clipped: 0.0,
            initial_mass: state.mass(),
        };

        out.records.push(self.diagnose(&state, &settings.assumptions)?);
        if settings.hard_gate {
            let report = self.assess(&state, &settings.assumptions)?;
            if !report.all_pass() {
                out.status = RunStatus::AssumptionGate { t: state.t, report };
                out.final_state = state;
                return Ok(out);
            }
        }
        if snapshot_due(0) {
            on_snapshot(&state)?;
        }

        let mut previous = state.clone();
        for k in 1..=steps {
            let dt = if k == steps { t_end - state.t } else { settings.dt };
            let outcome = match self.strang_step(&mut state, dt) {
                Ok(o) => o,
                // Non-finite values usually surface as a degenerate density
                // or a failed pivot before the explicit check below.
                Err(_) if !state.is_finite() => {
                    out.status = RunStatus::NonFinite { step: k, t: previous.t };
                    break;
                }
                Err(e) => return Err(e),
            };
            if !state.is_finite() {
                out.status = RunStatus::NonFinite { step: k, t: previous.t };
                break;
            }
            if k == steps {
                state.t = t_end;
            }
            out.steps = k;
            out.total_clipped += outcome.clipped;
            out.max_clipped = out.max_clipped.max(outcome.clipped);
            out.max_step_change = out.max_step_change.max(previous.relative_change(&state));

            if record_due(k) {
                out.records.push(self.diagnose(&state, &settings.assumptions)?);
                if settings.hard_gate {
                    let report = self.assess(&state, &settings.assumptions)?;
                    if !report.all_pass() {
                        out.status = RunStatus::AssumptionGate { t: state.t, report };
                        previous = state;
                        break;
                    }
                }
            }
            if snapshot_due(k) {
                on_snapshot(&state)?;
            }
            previous.f.copy_from_slice(&state.f);
            previous.t = state.t;
        }
        diagnostics::fill_time_derivative(&mut out.records);
        out.final_state = previous;
        Ok(out)
    }
}

/// Result of one Strang step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub macro_fields: MacroFields,
    pub clipped: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub dt: f64,
    /// Integration time added to the initial `t`.
    pub duration: f64,
    pub record_every: usize,
    /// 0 disables snapshots.
    pub snapshot_every: usize,
    pub cfl_guard: bool,
    pub hard_gate: bool,
    pub assumptions: AssumptionConfig,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            duration: 1.0,
            record_every: 10,
            snapshot_every: 0,
            cfl_guard: false,
            hard_gate: false,
            assumptions: AssumptionConfig::default(),
        }
    }
}

impl RunSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(crate::error::invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(crate::error::invalid(
                "T",
                format!("must be non-negative, got {}", self.duration),
            ));
        }
        if self.record_every == 0 {
            return Err(crate::error::invalid("record_every", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    /// A structural assumption failed while configured as a hard gate.
    AssumptionGate { t: f64, report: AssumptionReport },
    /// A NaN or infinity appeared; `final_state` is the last finite state.
    NonFinite { step: usize, t: f64 },
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<DiagnosticsRecord>,
    /// Last finite state reached.
    pub final_state: KineticState,
    pub status: RunStatus,
    pub steps: usize,
    /// Largest per-step change relative to the state maximum.
    pub max_step_change: f64,
    pub total_clipped: f64,
    pub max_clipped: f64,
    pub initial_mass: f64,
}

impl RunOutput {
    pub fn mass_drift(&self) -> f64 {
        (self.final_state.mass() - self.initial_mass).abs() / self.initial_mass
    }
}
