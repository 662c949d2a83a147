//! JSON run configuration. Every section and key is optional; unknown keys
//! are rejected.

use std::f64::consts::TAU;
use std::fmt;
use std::path::{Path, PathBuf};

use fpa_core::averaging::{AssumptionConfig, AveragingModel, Kernel, KernelShape, Subspace, Variant};
use fpa_core::diagnostics::GammaMode;
use fpa_core::force::ForceParams;
use fpa_core::particles::{ForceScaling, SdeParams};
use fpa_core::solver::{Preset, RunSettings};
use fpa_core::Grid;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub force: ForceParams,
    pub averaging: AveragingConfig,
    pub solver: SolverConfig,
    pub particles: ParticleConfig,
    pub diagnostics: DiagnosticsConfig,
    pub io: IoConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "Nx")]
    pub nx: usize,
    #[serde(rename = "Nv")]
    pub nv: usize,
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "Vmax")]
    pub vmax: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            nx: 64,
            nv: 128,
            length: TAU,
            vmax: 6.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AveragingConfig {
    pub variant: Variant,
    pub kernel: KernelShape,
    /// Tent support radius; ignored by the global kernel.
    pub r0: f64,
}

impl Default for AveragingConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Cs,
            kernel: KernelShape::Tent,
            r0: 1.0,
        }
    }
}

impl AveragingConfig {
    pub fn kernel(&self) -> Kernel {
        match self.kernel {
            KernelShape::Tent => Kernel::tent(self.r0),
            KernelShape::Global => Kernel::global(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
    /// Integration time.
    #[serde(rename = "T")]
    pub duration: f64,
    /// Steps between snapshots; 0 keeps only the final state.
    pub snapshot_every: usize,
    pub record_every: usize,
    pub cfl_guard: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            duration: 1.0,
            snapshot_every: 0,
            record_every: 10,
            cfl_guard: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParticleConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub dt: f64,
    pub noise_on: bool,
    pub seed: u64,
    pub force_scaling: ForceScaling,
}

impl Default for ParticleConfig {
    fn default() -> Self {
        Self {
            n: 10_000,
            dt: 1e-3,
            noise_on: true,
            seed: 1,
            force_scaling: ForceScaling::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    pub epsilon_tilde: f64,
    pub gamma_mode: GammaMode,
    pub gap_subspace: Subspace,
    pub hard_gate_assumptions: bool,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            epsilon_tilde: 0.1,
            gamma_mode: GammaMode::default(),
            gap_subspace: Subspace::default(),
            hard_gate_assumptions: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoConfig {
    pub out_dir: PathBuf,
    /// Initial condition. `from_file` reads an FPA1 snapshot for `solve` and
    /// `check`, and an FPP1 ensemble for `particles`.
    pub preset: Preset,
}

impl Default for IoConfig {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("out"),
            preset: Preset::TwoBump,
        }
    }
}

/// A configuration problem, reported on one line naming the key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.key.is_empty() {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "config key `{}`: {}", self.key, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn bad(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        key: key.to_string(),
        message: message.into(),
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            ConfigError {
                key: if key == "." { String::new() } else { key },
                message: single_line(&e.into_inner().to_string()),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad("", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Checks every parameter before anything is allocated.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = &self.grid;
        if g.nx < 3 {
            return Err(bad("grid.Nx", format!("need at least 3 cells, got {}", g.nx)));
        }
        if g.nv < 4 || !g.nv.is_multiple_of(2) {
            return Err(bad("grid.Nv", format!("must be even and at least 4, got {}", g.nv)));
        }
        if !(g.length > 0.0 && g.length.is_finite()) {
            return Err(bad("grid.L", format!("must be positive, got {}", g.length)));
        }
        if !(g.vmax > 0.0 && g.vmax.is_finite()) {
            return Err(bad("grid.Vmax", format!("must be positive, got {}", g.vmax)));
        }
        if let Err(fpa_core::FpaError::InvalidParameter { name, reason }) = self.force.validate() {
            return Err(bad(&format!("force.{name}"), reason));
        }
        if self.averaging.kernel == KernelShape::Tent
            && !(self.averaging.r0 > 0.0 && self.averaging.r0 <= 0.5 * g.length)
        {
            return Err(bad(
                "averaging.r0",
                format!("tent radius must lie in (0, L/2], got {}", self.averaging.r0),
            ));
        }
        let s = &self.solver;
        if !(s.dt > 0.0 && s.dt.is_finite()) {
            return Err(bad("solver.dt", format!("must be positive, got {}", s.dt)));
        }
        if !(s.duration >= 0.0 && s.duration.is_finite()) {
            return Err(bad("solver.T", format!("must be non-negative, got {}", s.duration)));
        }
        if s.record_every == 0 {
            return Err(bad("solver.record_every", "must be at least 1"));
        }
        let p = &self.particles;
        if p.n == 0 {
            return Err(bad("particles.N", "must be at least 1"));
        }
        if !(p.dt > 0.0 && p.dt.is_finite()) {
            return Err(bad("particles.dt", format!("must be positive, got {}", p.dt)));
        }
        if !(self.diagnostics.epsilon_tilde > 0.0 && self.diagnostics.epsilon_tilde.is_finite()) {
            return Err(bad(
                "diagnostics.epsilon_tilde",
                format!("must be positive, got {}", self.diagnostics.epsilon_tilde),
            ));
        }
        if let GammaMode::Fixed(gamma) = self.diagnostics.gamma_mode {
            if !(gamma >= 0.0 && gamma.is_finite()) {
                return Err(bad("diagnostics.gamma_mode", format!("fixed gamma must be non-negative, got {gamma}")));
            }
        }
        if let Preset::ShiftedMaxwellian { temperature, .. } = self.io.preset {
            if !(temperature > 0.0 && temperature.is_finite()) {
                return Err(bad("io.preset.T", format!("must be positive, got {temperature}")));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Grid {
        let g = &self.grid;
        Grid::new(g.nx, g.nv, g.length, g.vmax).expect("validated grid")
    }

    pub fn model(&self) -> fpa_core::Result<AveragingModel> {
        AveragingModel::new(self.averaging.variant, self.averaging.kernel(), self.grid.nx, self.grid.length)
    }

    pub fn assumptions(&self) -> AssumptionConfig {
        AssumptionConfig {
            subspace: self.diagnostics.gap_subspace,
            ..AssumptionConfig::default()
        }
    }

    pub fn run_settings(&self) -> RunSettings {
        RunSettings {
            dt: self.solver.dt,
            duration: self.solver.duration,
            record_every: self.solver.record_every,
            snapshot_every: self.solver.snapshot_every,
            cfl_guard: self.solver.cfl_guard,
            hard_gate: self.diagnostics.hard_gate_assumptions,
            assumptions: self.assumptions(),
        }
    }

    pub fn sde_params(&self) -> SdeParams {
        SdeParams {
            dt: self.particles.dt,
            kernel: self.averaging.kernel(),
            force: self.force,
            noise_on: self.particles.noise_on,
            force_scaling: self.particles.force_scaling,
        }
    }
}

fn single_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
