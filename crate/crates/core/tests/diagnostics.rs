use std::f64::consts::TAU;

use fpa_core::averaging::{AveragingModel, Kernel, Subspace, Variant};
use fpa_core::diagnostics::{
    ck_check, evaluate, fit_decay, functionals, l1_distance, lemma_monitors, modified_functional, read_series,
    relative_entropy, write_series, GammaMode, SERIES_COLUMNS,
};
use fpa_core::force::{equilibrium, EquilibriumTable, ForceParams};
use fpa_core::rng::CounterRng;
use fpa_core::solver::{KineticState, Preset, RunSettings, Solver};
use fpa_core::{Exec, FpaError, Grid};

fn setup(grid: Grid, force: ForceParams) -> (EquilibriumTable, AveragingModel) {
    let table = equilibrium(&grid, &force).unwrap();
    let model = AveragingModel::new(Variant::Cs, Kernel::global(), grid.nx, grid.length).unwrap();
    (table, model)
}

fn gaussian_state(grid: Grid, a: f64) -> KineticState {
    let mut s = KineticState::zeros(grid);
    let norm = 1.0 / (grid.length * TAU.sqrt());
    for i in 0..grid.nx {
        for j in 0..grid.nv {
            let v = grid.v(j);
            s.f[grid.index(i, j)] = norm * (-(v - a) * (v - a) / 2.0).exp();
        }
    }
    s
}

/// Without force `f_inf` is the standard Gaussian and `f / f_inf` is a pure
/// exponential in `v`, so `Ivv = a^2` up to the `O(dv^2)` difference error.
#[test]
fn shifted_gaussian_fisher_information() {
    let grid = Grid::new(8, 256, TAU, 8.0).unwrap();
    let (table, model) = setup(grid, ForceParams::ornstein_uhlenbeck());
    let a = 0.7;
    let state = gaussian_state(grid, a);
    let strength = vec![1.0 / TAU; grid.nx];
    let f = functionals(&state, &table, &strength, Exec::Sequential);
    let mass = state.mass();
    let tol = a * a * grid.dv * grid.dv;
    assert!((f.fisher.ivv - a * a * mass).abs() < tol, "Ivv = {}", f.fisher.ivv);
    assert!((f.fisher.ivv_weighted - f.fisher.ivv / TAU).abs() < 1e-14);
    assert!(f.fisher.ixx.abs() < 1e-20 && f.fisher.ixv.abs() < 1e-20);
    assert_eq!(f.masked_cells, 0);

    let h = relative_entropy(&state, &table);
    assert!((h - 0.5 * a * a).abs() < 1e-10, "H = {h}");
    let r = evaluate(&state, &table, &model, Subspace::MeanZero, Exec::Sequential).unwrap();
    assert!(r.invariants_hold());
    assert!((r.u_norm2 - a * a / TAU).abs() < 1e-10);
}

#[test]
fn small_perturbation_entropy_is_quadratic() {
    let grid = Grid::new(32, 128, TAU, 6.0).unwrap();
    let (table, _) = setup(grid, ForceParams::default());
    // h has zero mean against f_inf, so mass stays one.
    let shape = |i: usize, j: usize| (TAU * grid.x(i) / grid.length).cos() * grid.v(j);
    for eps in [1e-2, 1e-3] {
        let mut s = KineticState::zeros(grid);
        let mut quad = 0.0;
        let mut exact = 0.0;
        for i in 0..grid.nx {
            for j in 0..grid.nv {
                let finf = table.density[j];
                let g = finf * (1.0 + eps * shape(i, j));
                s.f[grid.index(i, j)] = g;
                quad += finf * shape(i, j).powi(2);
                exact += g * (g / finf).ln() - g + finf;
            }
        }
        quad *= 0.5 * eps * eps * grid.cell_volume();
        exact *= grid.cell_volume();
        let h = relative_entropy(&s, &table);
        assert!((h - exact).abs() < 1e-14, "direct sum {exact} vs {h}");
        assert!((h - quad).abs() < 2.0 * eps * quad, "eps = {eps}: {h} vs {quad}");
    }
}

#[test]
fn csiszar_kullback_family() {
    let grid = Grid::new(8, 256, TAU, 8.0).unwrap();
    let (table, _) = setup(grid, ForceParams::ornstein_uhlenbeck());
    for a in [0.0, 0.1, 0.5, 1.0, 2.0, 3.0] {
        let s = gaussian_state(grid, a);
        let h = relative_entropy(&s, &table);
        let slack = ck_check(&s, &table, h);
        let d = l1_distance(&s, &table);
        assert!(slack >= -1e-12, "a = {a}");
        assert!((slack - (2.0 * h - d * d)).abs() < 1e-12);
    }
}

#[test]
fn random_states_satisfy_fisher_invariants() {
    let grid = Grid::new(24, 48, TAU, 6.0).unwrap();
    let (table, model) = setup(grid, ForceParams::default());
    let rng = CounterRng::new(77);
    for trial in 0..5 {
        let mut s = KineticState::zeros(grid);
        for (k, v) in s.f.iter_mut().enumerate() {
            *v = table.density[k % grid.nv] * (0.5 + rng.uniform_pair(trial, k as u64).0);
        }
        let m = s.mass();
        s.f.iter_mut().for_each(|v| *v /= m);
        let r = evaluate(&s, &table, &model, Subspace::MeanZero, Exec::Parallel).unwrap();
        assert!(r.invariants_hold(), "{r:?}");
        assert!(r.ck_slack >= -1e-12);
        assert!(r.h >= 0.0);
    }
}

#[test]
fn vacuum_cells_are_masked() {
    let grid = Grid::new(16, 32, TAU, 6.0).unwrap();
    let (table, _) = setup(grid, ForceParams::default());
    let mut s = KineticState::zeros(grid);
    for i in 0..grid.nx {
        for j in 0..grid.nv {
            if j != 5 {
                s.f[grid.index(i, j)] = table.density[j];
            }
        }
    }
    let f = functionals(&s, &table, &vec![1.0; grid.nx], Exec::Sequential);
    assert!(f.masked_cells > 0);
    assert!(f.fisher.ivv.is_finite());
}

#[test]
fn exact_exponential_fit() {
    let series: Vec<(f64, f64)> = (0..100).map(|k| 0.25 * k as f64).map(|t| (t, 2.5 * (-0.4 * t).exp())).collect();
    let fit = fit_decay(&series, 5.0, 20.0).unwrap();
    assert!((fit.delta_fit - 0.4).abs() < 1e-10);
    assert!((fit.c_fit - 2.5).abs() < 1e-10);
    assert!((fit.r_squared - 1.0).abs() < 1e-12);
    assert_eq!(fit.samples, 61);
}

#[test]
fn noisy_exponential_fit() {
    let rng = CounterRng::new(5);
    let series: Vec<(f64, f64)> = (0..400)
        .map(|k| {
            let t = 0.05 * k as f64;
            (t, 0.3 * (-1.3 * t + 0.01 * rng.normal(0, k)).exp())
        })
        .collect();
    let fit = fit_decay(&series, 0.0, 20.0).unwrap();
    assert!((fit.delta_fit - 1.3).abs() < 2e-3);
    assert!(fit.r_squared > 0.999);
}

#[test]
fn fit_rejects_bad_windows() {
    let series: Vec<(f64, f64)> = (0..5).map(|k| (k as f64, 1.0)).collect();
    assert!(matches!(
        fit_decay(&series, 0.0, 10.0),
        Err(FpaError::InsufficientSamples { .. })
    ));
    assert!(fit_decay(&series, 3.0, 1.0).is_err());
    // Values below the floor are dropped before fitting.
    let tiny: Vec<(f64, f64)> = (0..20).map(|k| (k as f64, 1e-20)).collect();
    assert!(fit_decay(&tiny, 0.0, 20.0).is_err());
}

fn short_run() -> (Solver, Vec<fpa_core::diagnostics::DiagnosticsRecord>) {
    let grid = Grid::standard();
    let model = AveragingModel::new(Variant::Cs, Kernel::global(), grid.nx, grid.length).unwrap();
    let solver = Solver::new(grid, ForceParams::default(), model).unwrap();
    let init = solver.init(&Preset::TwoBump).unwrap();
    let settings = RunSettings {
        dt: 1e-3,
        duration: 1.5,
        record_every: 10,
        ..Default::default()
    };
    let out = solver.run(init, &settings, |_| Ok(())).unwrap();
    (solver, out.records)
}

#[test]
fn entropy_production_matches_finite_differences() {
    let (_, records) = short_run();
    for r in records.iter().filter(|r| r.dhdt_fd.is_finite() && r.t > 0.2) {
        assert!(r.dhdt_formula < 0.0);
        let rel = (r.dhdt_formula - r.dhdt_fd).abs() / r.dhdt_fd.abs();
        assert!(rel < 0.05, "t = {}: {} vs {}", r.t, r.dhdt_formula, r.dhdt_fd);
    }
}

#[test]
fn modified_functional_and_monitors() {
    let (solver, records) = short_run();
    let lemma = lemma_monitors(&records, solver.lambda).unwrap();
    assert_eq!(lemma.samples.len(), records.len() - 2);
    let c0 = records.iter().map(|r| r.c0).fold(f64::INFINITY, f64::min);
    let c = lemma.default_c_lemma();
    assert!(c > 0.0);
    let m = modified_functional(&records, 0.05, solver.lambda, c0, c, GammaMode::MatchInitial).unwrap();
    assert!((m.combined[0] - 2.0 * m.tilde[0]).abs() < 1e-12 * m.tilde[0]);
    assert!(m.nonincreasing_fraction > 0.99);
    let fixed = modified_functional(&records, 0.05, solver.lambda, c0, c, GammaMode::Fixed(3.0)).unwrap();
    assert_eq!(fixed.gamma, 3.0);
    assert!(matches!(
        modified_functional(&records, 1e3, solver.lambda, c0, c, GammaMode::MatchInitial),
        Err(FpaError::EpsilonTooLarge { .. })
    ));
    assert!(lemma_monitors(&records[..2], solver.lambda).is_err());
}

#[test]
fn series_file_round_trip() {
    let (_, records) = short_run();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("series.csv");
    write_series(&path, &records).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next().unwrap(), SERIES_COLUMNS.join(","));
    assert!(text.lines().nth(1).unwrap().ends_with(",nan"));
    let back = read_series(&path).unwrap();
    assert_eq!(back.len(), records.len());
    for (b, r) in back.iter().zip(&records) {
        assert_eq!(b.0, r.t);
        assert_eq!(b.1, r.h);
    }
}
