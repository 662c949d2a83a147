#![allow(clippy::needless_range_loop)]

use std::f64::consts::TAU;

use fpa_core::averaging::{
    check_assumption_i, convolve_periodic, spectral_gap, AveragingModel, GapOperator, Kernel, Subspace, Variant,
};
use fpa_core::rng::CounterRng;
use fpa_core::FpaError;

fn random_density(n: usize, seed: u64) -> Vec<f64> {
    let rng = CounterRng::new(seed);
    (0..n).map(|i| 0.2 + rng.uniform_pair(0, i as u64).0).collect()
}

fn random_field(n: usize, seed: u64) -> Vec<f64> {
    let rng = CounterRng::new(seed);
    (0..n).map(|i| rng.normal(1, i as u64)).collect()
}

/// Direct `O(n^2)` sum with the tent weights normalised in the test.
fn direct_convolution(field: &[f64], r0: f64, length: f64) -> Vec<f64> {
    let n = field.len();
    let dx = length / n as f64;
    let raw = |k: usize| (1.0 - (k.min(n - k) as f64 * dx) / r0).max(0.0);
    let norm: f64 = (0..n).map(raw).sum::<f64>() * dx;
    (0..n)
        .map(|i| (0..n).map(|j| raw((i + n - j) % n) / norm * field[j] * dx).sum())
        .collect()
}

#[test]
fn one_hot_matches_direct_sum() {
    let n = 256;
    let table = Kernel::tent(TAU / 4.0).tabulate(n, TAU).unwrap();
    let mut field = vec![0.0; n];
    field[37] = 1.0;
    let fast = convolve_periodic(&field, &table).unwrap();
    let slow = direct_convolution(&field, TAU / 4.0, TAU);
    for (a, b) in fast.iter().zip(&slow) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn random_field_matches_direct_sum() {
    let field = random_field(96, 4);
    let table = Kernel::tent(0.9).tabulate(96, 5.0).unwrap();
    let fast = convolve_periodic(&field, &table).unwrap();
    let slow = direct_convolution(&field, 0.9, 5.0);
    for (a, b) in fast.iter().zip(&slow) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn convolution_is_translation_equivariant() {
    let n = 64;
    let field = random_field(n, 5);
    let table = Kernel::tent(1.1).tabulate(n, TAU).unwrap();
    let out = convolve_periodic(&field, &table).unwrap();
    for shift in [1, 7, 33] {
        let shifted: Vec<f64> = (0..n).map(|i| field[(i + n - shift) % n]).collect();
        let out_shifted = convolve_periodic(&shifted, &table).unwrap();
        for i in 0..n {
            assert_eq!(out_shifted[i], out[(i + n - shift) % n]);
        }
    }
}

#[test]
fn size_mismatch_is_reported() {
    let table = Kernel::tent(1.0).tabulate(16, TAU).unwrap();
    assert!(matches!(
        convolve_periodic(&[1.0; 15], &table),
        Err(FpaError::SizeMismatch { expected: 16, got: 15 })
    ));
}

#[test]
fn constants_are_fixed_points() {
    let n = 48;
    let rho = random_density(n, 6);
    for variant in [Variant::Cs, Variant::DoubleConv] {
        for kernel in [Kernel::tent(0.8), Kernel::global()] {
            let model = AveragingModel::new(variant, kernel, n, TAU).unwrap();
            let avg = model.strength_and_average(&rho, &vec![-0.7; n]).unwrap();
            assert!(avg.average.iter().all(|a| (a + 0.7).abs() < 1e-12));
        }
    }
}

#[test]
fn cs_average_times_strength_is_momentum_convolution() {
    let n = 64;
    let rho = random_density(n, 7);
    let u = random_field(n, 8);
    let model = AveragingModel::new(Variant::Cs, Kernel::tent(0.7), n, TAU).unwrap();
    let avg = model.strength_and_average(&rho, &u).unwrap();
    let momentum: Vec<f64> = rho.iter().zip(&u).map(|(r, u)| r * u).collect();
    let conv = convolve_periodic(&momentum, &model.kernel).unwrap();
    for i in 0..n {
        assert!((avg.strength[i] * avg.average[i] - conv[i]).abs() < 1e-12);
    }
}

#[test]
fn global_kernel_flattens_sine() {
    let n = 32;
    let model = AveragingModel::new(Variant::Cs, Kernel::global(), n, TAU).unwrap();
    let u: Vec<f64> = (0..n).map(|i| (TAU * (i as f64 + 0.5) / n as f64).sin()).collect();
    let avg = model.strength_and_average(&vec![1.0 / TAU; n], &u).unwrap();
    assert!(avg.average.iter().all(|a| a.abs() < 1e-15));
}

#[test]
fn vacuum_in_footprint_is_an_error() {
    let n = 32;
    let mut rho = vec![1.0; n];
    for r in rho.iter_mut().take(12) {
        *r = 0.0;
    }
    let model = AveragingModel::new(Variant::Cs, Kernel::tent(0.4), n, TAU).unwrap();
    assert!(matches!(model.strength(&rho), Err(FpaError::DegenerateDensity { .. })));
}

#[test]
fn global_strength_bounds_are_flat() {
    let n = 64;
    let mean = 1.0 / TAU;
    let rho: Vec<f64> = (0..n)
        .map(|i| mean * (1.0 + 0.5 * (TAU * (i as f64 + 0.5) / n as f64).cos()))
        .collect();
    let model = AveragingModel::new(Variant::Cs, Kernel::global(), n, TAU).unwrap();
    let b = check_assumption_i(&rho, &model).unwrap();
    assert!((b.c0 - mean).abs() < 1e-14 && (b.c1 - mean).abs() < 1e-14);
    assert_eq!(b.c2, 0.0);
}

#[test]
fn identity_gap_on_full_space_is_one() {
    let model = AveragingModel::new(Variant::Identity, Kernel::tent(1.0), 32, TAU).unwrap();
    let gap = spectral_gap(&random_density(32, 9), &model, Subspace::Full).unwrap();
    assert!((gap - 1.0).abs() < 1e-10);
}

#[test]
fn cs_full_gap_is_attained_by_constants() {
    let model = AveragingModel::new(Variant::Cs, Kernel::tent(1.0), 48, TAU).unwrap();
    let gap = spectral_gap(&random_density(48, 10), &model, Subspace::Full).unwrap();
    assert!((gap - 1.0).abs() < 1e-10);
}

#[test]
fn global_gap_vanishes_modulo_constants() {
    let model = AveragingModel::new(Variant::Cs, Kernel::global(), 64, TAU).unwrap();
    let gap = spectral_gap(&vec![1.0 / TAU; 64], &model, Subspace::MeanZero).unwrap();
    assert!(gap.abs() < 1e-10);
}

/// With uniform density the CS operator is the circulant convolution, whose
/// eigenvalues are the discrete Fourier coefficients of the kernel.
#[test]
fn tent_gap_matches_fourier_oracle() {
    let n = 64;
    let model = AveragingModel::new(Variant::Cs, Kernel::tent(0.9), n, TAU).unwrap();
    let gap = spectral_gap(&vec![1.0 / TAU; n], &model, Subspace::MeanZero).unwrap();
    let dx = TAU / n as f64;
    let fourier = |m: usize| -> f64 {
        (0..n)
            .map(|k| model.kernel.weight(k) * dx * (TAU * (m * k) as f64 / n as f64).cos())
            .sum()
    };
    let oracle = (1..n).map(fourier).fold(f64::NEG_INFINITY, f64::max);
    assert!(gap > 0.0 && gap < 1.0);
    assert!((gap - oracle).abs() < 1e-8, "gap {gap} vs {oracle}");
}

#[test]
fn dense_and_power_agree() {
    for n in [32, 96, 128] {
        let rho = random_density(n, n as u64);
        for variant in [Variant::Cs, Variant::DoubleConv] {
            let model = AveragingModel::new(variant, Kernel::tent(0.6), n, TAU).unwrap();
            let op = GapOperator::new(&rho, &model).unwrap();
            for sub in [Subspace::Full, Subspace::MeanZero] {
                let dense = op.dense_sup(sub).unwrap();
                let power = op.power_sup(sub, 1e-14, 1_000_000).unwrap();
                assert!((dense - power).abs() < 1e-8, "n={n} {variant:?} {sub:?}: {dense} vs {power}");
            }
        }
    }
}
