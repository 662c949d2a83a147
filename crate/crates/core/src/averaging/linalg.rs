//! Small dense helpers for the averaging operators.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{FpaError, Result};

/// Row-major dense square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Dense {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    pub fn mul_vec_transposed(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, xi) in x.iter().enumerate() {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * xi;
            }
        }
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }

    /// Largest eigenvalue of a symmetric matrix by a dense solve.
    pub fn max_symmetric_eigenvalue(&self) -> Result<f64> {
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(FpaError::Domain("non-finite matrix entry".into()));
        }
        let eig = SymmetricEigen::new(self.to_nalgebra());
        Ok(eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
    }
}

/// Outcome of a power iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerResult {
    pub value: f64,
    pub iterations: usize,
}

/// In-place projection onto an invariant subspace.
pub type Projector<'a> = &'a dyn Fn(&mut [f64]);

/// Dominant eigenvalue of a symmetric positive semi-definite operator.
///
/// `apply(x, y)` writes `A x` into `y`; `project`, when given, is applied to
/// every iterate to keep it inside an invariant subspace. Stops when the
/// Rayleigh quotient changes by less than `tol` relative.
pub fn power_iteration(
    n: usize,
    apply: impl Fn(&[f64], &mut [f64]),
    project: Option<Projector<'_>>,
    tol: f64,
    max_iter: usize,
) -> Result<PowerResult> {
    // Deterministic, non-symmetric start so no eigen-direction is excluded.
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_749_895).fract() + 1e-3 * i as f64)
        .collect();
    if let Some(p) = project {
        p(&mut x);
    }
    let mut norm = l2(&x);
    if norm == 0.0 {
        return Ok(PowerResult {
            value: 0.0,
            iterations: 0,
        });
    }
    x.iter_mut().for_each(|v| *v /= norm);
    let mut y = vec![0.0; n];
    let mut previous = f64::NAN;
    for it in 1..=max_iter {
        apply(&x, &mut y);
        if let Some(p) = project {
            p(&mut y);
        }
        let rayleigh: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        norm = l2(&y);
        if norm == 0.0 || rayleigh == 0.0 {
            return Ok(PowerResult {
                value: 0.0,
                iterations: it,
            });
        }
        if (rayleigh - previous).abs() <= tol * rayleigh.abs() {
            return Ok(PowerResult {
                value: rayleigh,
                iterations: it,
            });
        }
        previous = rayleigh;
        for (a, b) in x.iter_mut().zip(&y) {
            *a = b / norm;
        }
    }
    Err(FpaError::PowerIteration {
        iterations: max_iter,
        residual: (norm - previous).abs() / previous.abs().max(f64::MIN_POSITIVE),
    })
}

fn l2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
