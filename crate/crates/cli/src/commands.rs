use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use fpa_core::averaging::{assess, AssumptionReport, AveragingModel, Variant};
use fpa_core::diagnostics::{
    fit_decay, lemma_monitors, macro_fields, modified_functional, read_series, write_series, DecayFit,
    DiagnosticsRecord, LemmaReport, ModifiedFunctional,
};
use fpa_core::particles::{
    em_step, empirical_density, empirical_moments, sample_preset, write_ensemble, Moments, Smoothing,
};
use fpa_core::solver::{format_f64, read_snapshot, write_atomic, write_snapshot, RunStatus, Solver};
use fpa_core::{Exec, FpaError};
use serde::Serialize;

use crate::config::{ConfigError, RunConfig};

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn io(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::io(e.to_string())
    }
}

impl From<FpaError> for Failure {
    fn from(e: FpaError) -> Self {
        let code = match e {
            FpaError::NonFinite { .. }
            | FpaError::DegenerateDensity { .. }
            | FpaError::IsolatedAgent { .. }
            | FpaError::Tridiagonal { .. }
            | FpaError::PowerIteration { .. } => 3,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<(), Failure>;

fn create_dir(path: &Path) -> Outcome {
    fs::create_dir_all(path).map_err(|e| Failure::io(format!("cannot create {}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl Serialize) -> Outcome {
    let mut text = serde_json::to_string_pretty(value).expect("serialisable output");
    text.push('\n');
    write_atomic(path, text.as_bytes()).map_err(Failure::from)
}

fn setup(cfg_path: &Path, out: Option<PathBuf>) -> Result<(RunConfig, PathBuf), Failure> {
    let cfg = RunConfig::load(cfg_path)?;
    let out_dir = out.unwrap_or_else(|| cfg.io.out_dir.clone());
    create_dir(&out_dir)?;
    write_atomic(&out_dir.join("config.json"), cfg.to_json().as_bytes())?;
    Ok((cfg, out_dir))
}

/// `fit.json` holds the fit or the reason none was possible.
#[derive(Serialize)]
#[serde(untagged)]
enum FitOutput {
    Fit(DecayFit),
    Unavailable { t0: f64, t1: f64, error: String },
}

#[derive(Serialize)]
struct Monitors {
    lambda: f64,
    c0_min: f64,
    lemma: Option<LemmaReport>,
    modified_functional: Option<ModifiedFunctional>,
    errors: Vec<String>,
}

fn monitors(records: &[DiagnosticsRecord], cfg: &RunConfig, lambda: f64) -> Monitors {
    let c0_min = records.iter().map(|r| r.c0).fold(f64::INFINITY, f64::min);
    let mut errors = Vec::new();
    let lemma = lemma_monitors(records, lambda).map_err(|e| errors.push(e.to_string())).ok();
    let c_lemma = lemma.as_ref().map_or(1.0, LemmaReport::default_c_lemma);
    let modified = modified_functional(
        records,
        cfg.diagnostics.epsilon_tilde,
        lambda,
        c0_min,
        c_lemma,
        cfg.diagnostics.gamma_mode,
    )
    .map_err(|e| errors.push(e.to_string()))
    .ok();
    Monitors {
        lambda,
        c0_min,
        lemma,
        modified_functional: modified,
        errors,
    }
}

fn print_report(report: &AssumptionReport) {
    let state = |ok: bool| if ok { "PASS" } else { "FAIL" };
    println!(
        "assumption i:   {}  c0 = {:.6e}, c1 = {:.6e}, c2 = {:.6e}",
        state(report.pass_i),
        report.c0,
        report.c1,
        report.c2
    );
    println!("assumption ii:  {}  op_norm = {:.6e}", state(report.pass_ii), report.op_norm_ii);
    println!(
        "assumption iii: {}  gap_sup mean_zero = {:.6e}, full = {:.6e}",
        state(report.pass_iii),
        report.gap_sup_mean_zero,
        report.gap_sup_full
    );
    println!("assumption iv:  {}  force_ratio = {:.6e}", state(report.pass_iv), report.force_ratio);
}

pub fn solve(cfg_path: &Path, out: Option<PathBuf>) -> Outcome {
    let (cfg, out_dir) = setup(cfg_path, out)?;
    let solver = Solver::new(cfg.grid(), cfg.force, cfg.model()?)?;
    let state = solver.init(&cfg.io.preset)?;
    let settings = cfg.run_settings();
    let t_start = state.t;

    let snap_dir = out_dir.join("snapshots");
    if settings.snapshot_every > 0 {
        create_dir(&snap_dir)?;
    }
    let run = solver.run(state, &settings, |s| {
        let step = ((s.t - t_start) / settings.dt).round() as u64;
        write_snapshot(&snap_dir.join(format!("snap_{step:08}.fpa")), s)
    })?;

    write_snapshot(&out_dir.join("final.fpa"), &run.final_state)?;
    write_series(&out_dir.join("series.csv"), &run.records)?;
    let report = solver.assess(&run.final_state, &settings.assumptions)?;
    write_json(&out_dir.join("assumptions.json"), &report)?;

    let t_end = run.final_state.t;
    let (t0, t1) = (t_start + 0.5 * (t_end - t_start), t_end);
    let series: Vec<(f64, f64)> = run.records.iter().map(|r| (r.t, r.h)).collect();
    let fit = match fit_decay(&series, t0, t1) {
        Ok(f) => FitOutput::Fit(f),
        Err(e) => FitOutput::Unavailable {
            t0,
            t1,
            error: e.to_string(),
        },
    };
    write_json(&out_dir.join("fit.json"), &fit)?;
    write_json(&out_dir.join("monitors.json"), &monitors(&run.records, &cfg, solver.lambda))?;

    let last = run.records.last().expect("at least the initial record");
    println!(
        "solve: {} steps to t = {}, H = {:.6e}, mass drift = {:.3e}, clipped = {:.3e}, outputs in {}",
        run.steps,
        t_end,
        last.h,
        run.mass_drift(),
        run.total_clipped,
        out_dir.display()
    );
    if !settings.hard_gate {
        let gap = run.records.iter().filter(|r| !r.gap_check).count();
        let force = run.records.iter().filter(|r| r.force_ratio.is_nan() || r.force_ratio >= 1.0).count();
        if gap + force > 0 {
            eprintln!(
                "warning: assumption monitors failed at some records (gap check {gap}, force ratio {force}) of {}",
                run.records.len()
            );
        }
    }
    if let FitOutput::Fit(f) = &fit {
        println!("fit: delta = {:.6e}, C = {:.6e}, r^2 = {:.6}", f.delta_fit, f.c_fit, f.r_squared);
    }

    match run.status {
        RunStatus::Completed => Ok(()),
        RunStatus::AssumptionGate { t, report } => {
            print_report(&report);
            write_json(&out_dir.join("assumptions.json"), &report)?;
            Err(Failure {
                code: 2,
                message: format!("structural assumption failed at t = {t}; run stopped"),
            })
        }
        RunStatus::NonFinite { step, t } => Err(Failure {
            code: 3,
            message: format!("non-finite state at step {step}; last finite state t = {t} written to final.fpa"),
        }),
    }
}

const MOMENT_COLUMNS: &str = "t,momentum,kinetic_energy,momentum_se,energy_se,max_speed";

fn moment_row(out: &mut String, m: &Moments) {
    let _ = writeln!(
        out,
        "{},{},{},{},{},{}",
        format_f64(m.t),
        format_f64(m.momentum),
        format_f64(m.kinetic_energy),
        format_f64(m.momentum_se),
        format_f64(m.energy_se),
        format_f64(m.max_speed)
    );
}

pub fn particles(cfg_path: &Path, out: Option<PathBuf>) -> Outcome {
    let (cfg, out_dir) = setup(cfg_path, out)?;
    if cfg.averaging.variant != Variant::Cs {
        return Err(ConfigError {
            key: "averaging.variant".into(),
            message: "the agent system is defined for the cs variant only".into(),
        }
        .into());
    }
    let grid = cfg.grid();
    let params = cfg.sde_params();
    params.validate(grid.length)?;
    let mut ens = sample_preset(
        &cfg.io.preset,
        cfg.particles.n,
        grid.length,
        &cfg.force,
        cfg.particles.seed,
    )?;

    let dt = params.dt;
    let duration = cfg.solver.duration;
    let steps = (duration / dt - 1e-9).ceil().max(0.0) as usize;
    let t_end = ens.t + duration;
    let record_every = cfg.solver.record_every;
    let snapshot_every = cfg.solver.snapshot_every;
    let snap_dir = out_dir.join("ensembles");
    if snapshot_every > 0 {
        create_dir(&snap_dir)?;
    }
    let snapshot = |ens: &fpa_core::particles::ParticleEnsemble, name: &str| -> Outcome {
        write_ensemble(&snap_dir.join(format!("{name}.fpp")), ens)?;
        let hist = empirical_density(ens, &grid, Smoothing::None);
        write_snapshot(&snap_dir.join(format!("{name}.fpa")), &hist.state)?;
        Ok(())
    };

    let mut csv = String::from(MOMENT_COLUMNS);
    csv.push('\n');
    moment_row(&mut csv, &empirical_moments(&ens, 10, grid.vmax));
    if snapshot_every > 0 {
        snapshot(&ens, &format!("ens_{:08}", 0))?;
    }
    for k in 1..=steps {
        let mut p = params;
        if k == steps {
            p.dt = t_end - ens.t;
        }
        em_step(&mut ens, &p, Exec::Parallel)?;
        if ens.v.iter().chain(&ens.x).any(|z| !z.is_finite()) {
            return Err(FpaError::NonFinite { step: k, t: ens.t }.into());
        }
        if k % record_every == 0 || k == steps {
            moment_row(&mut csv, &empirical_moments(&ens, 10, grid.vmax));
        }
        if snapshot_every > 0 && (k % snapshot_every == 0 || k == steps) {
            snapshot(&ens, &format!("ens_{k:08}"))?;
        }
    }
    write_atomic(&out_dir.join("moments.csv"), csv.as_bytes())?;
    write_ensemble(&out_dir.join("final.fpp"), &ens)?;
    let hist = empirical_density(&ens, &grid, Smoothing::None);
    write_snapshot(&out_dir.join("final_hist.fpa"), &hist.state)?;
    let m = empirical_moments(&ens, 10, grid.vmax);
    println!(
        "particles: {} agents, {steps} steps to t = {}, momentum = {:.6e} +- {:.1e}, kinetic energy = {:.6e} +- {:.1e}, outputs in {}",
        ens.len(),
        ens.t,
        m.momentum,
        m.momentum_se,
        m.kinetic_energy,
        m.energy_se,
        out_dir.display()
    );
    if hist.outside_mass > 0.0 {
        eprintln!("warning: mass {:.3e} beyond Vmax left out of the histogram", hist.outside_mass);
    }
    Ok(())
}

pub fn check(cfg_path: &Path, snapshot: Option<PathBuf>, out: Option<PathBuf>) -> Outcome {
    let (cfg, out_dir) = setup(cfg_path, out)?;
    let state = match snapshot {
        Some(path) => read_snapshot(&path)?,
        None => Solver::new(cfg.grid(), cfg.force, cfg.model()?)?.init(&cfg.io.preset)?,
    };
    let model = AveragingModel::new(
        cfg.averaging.variant,
        cfg.averaging.kernel(),
        state.grid.nx,
        state.grid.length,
    )?;
    let fields = macro_fields(&state, &model, &cfg.force)?;
    let report = assess(&fields.rho, &fields.u, &fields.u_force, &model, &cfg.assumptions())?;
    write_json(&out_dir.join("assumptions.json"), &report)?;
    print_report(&report);
    if cfg.diagnostics.hard_gate_assumptions && !report.all_pass() {
        return Err(Failure {
            code: 2,
            message: "structural assumption failed".into(),
        });
    }
    Ok(())
}

pub fn fit(series: &Path, t0: f64, t1: f64, out: Option<PathBuf>) -> Outcome {
    let data = read_series(series)?;
    let fit = fit_decay(&data, t0, t1)?;
    let dir = match out {
        Some(d) => d,
        None => series
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map_or_else(|| PathBuf::from("."), Path::to_path_buf),
    };
    create_dir(&dir)?;
    write_json(&dir.join("fit.json"), &fit)?;
    println!("{}", serde_json::to_string(&fit).expect("serialisable fit"));
    Ok(())
}
