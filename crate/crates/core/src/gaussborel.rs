//! Gauss–Borel factorization `M = S^{-1} H S̄^{-T}` without pivoting.

use crate::error::{Error, Result};
use crate::linalg;
use crate::measures::matrix_csv;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::ops::{Add, Div, Mul, Sub};
use twofloat::TwoFloat;

/// Default pivot threshold relative to the active Schur complement.
pub const PIVOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Double,
    /// Elimination carried out in double-double arithmetic.
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorOptions {
    pub pivot_tol: f64,
    pub precision: Precision,
}

impl Default for FactorOptions {
    fn default() -> Self {
        FactorOptions {
            pivot_tol: PIVOT_TOL,
            precision: Precision::Double,
        }
    }
}

/// Unit lower triangular `S`, `S̄` and diagonal `H` with `S M S̄^T = H`.
#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    pub s: DMatrix<f64>,
    pub sbar: DMatrix<f64>,
    pub h: DVector<f64>,
}

impl Factorization {
    pub fn trunc(&self) -> usize {
        self.h.len()
    }

    /// Factorization of `M^T`.
    pub fn transpose(&self) -> Factorization {
        Factorization {
            s: self.sbar.clone(),
            sbar: self.s.clone(),
            h: self.h.clone(),
        }
    }

    /// Leading `n x n` factorization.
    pub fn leading(&self, n: usize) -> Factorization {
        Factorization {
            s: self.s.view((0, 0), (n, n)).into_owned(),
            sbar: self.sbar.view((0, 0), (n, n)).into_owned(),
            h: self.h.rows(0, n).into_owned(),
        }
    }

    /// `S^{-1} H S̄^{-T}`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let l = linalg::unit_lower_inverse(&self.s);
        let lbar = linalg::unit_lower_inverse(&self.sbar);
        l * DMatrix::from_diagonal(&self.h) * lbar.transpose()
    }

    /// CSV exports of `S`, `S̄` and `H` (one value per line).
    pub fn to_csv(&self) -> (String, String, String) {
        let h: String = self.h.iter().map(|v| format!("{v:.16e}\n")).collect();
        (matrix_csv(&self.s), matrix_csv(&self.sbar), h)
    }
}

/// Arithmetic needed by the elimination kernel.
trait Field:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Field for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
}

impl Field for TwoFloat {
    fn from_f64(v: f64) -> Self {
        TwoFloat::from_f64(v)
    }
    fn to_f64(self) -> f64 {
        self.hi() + self.lo()
    }
}

/// Row elimination of `a` (row-major, `n x n`) with the same operations
/// applied to an identity block. Returns `(E, diag U)` with `E a = U`, or
/// the first failing pivot.
fn eliminate<T: Field>(a: &DMatrix<f64>, pivot_tol: f64) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let n = a.nrows();
    let mut u: Vec<T> = (0..n * n).map(|k| T::from_f64(a[(k / n, k % n)])).collect();
    let mut e: Vec<T> = (0..n * n)
        .map(|k| T::from_f64(if k / n == k % n { 1.0 } else { 0.0 }))
        .collect();
    let mut pivots = Vec::with_capacity(n);
    let mut prev_scale = 0.0f64;
    for k in 0..n {
        let mut scale = 0.0f64;
        for i in k..n {
            for j in k..n {
                scale = scale.max(u[i * n + j].to_f64().abs());
            }
        }
        let ref_scale = scale.max(prev_scale);
        prev_scale = scale;
        let piv = u[k * n + k];
        let pv = piv.to_f64();
        if !(pv.abs() > pivot_tol * ref_scale) {
            return Err(Error::QuasidefiniteFailure {
                order: k + 1,
                pivot: pv,
                scale: ref_scale,
            });
        }
        pivots.push(pv);
        for i in k + 1..n {
            let f = u[i * n + k] / piv;
            u[i * n + k] = T::from_f64(0.0);
            for j in k + 1..n {
                u[i * n + j] = u[i * n + j] - f * u[k * n + j];
            }
            for j in 0..=k {
                e[i * n + j] = e[i * n + j] - f * e[k * n + j];
            }
        }
    }
    Ok((DMatrix::from_fn(n, n, |i, j| e[i * n + j].to_f64()), pivots))
}

/// Doolittle elimination of `m` and `m^T`; pivots become `H`.
pub fn factorize(m: &DMatrix<f64>, opts: FactorOptions) -> Result<Factorization> {
    let run = |a: &DMatrix<f64>| match opts.precision {
        Precision::Double => eliminate::<f64>(a, opts.pivot_tol),
        Precision::Extended => eliminate::<TwoFloat>(a, opts.pivot_tol),
    };
    let (s, h) = run(m)?;
    let (sbar, _) = run(&m.transpose())?;
    Ok(Factorization {
        s,
        sbar,
        h: DVector::from_vec(h),
    })
}

/// `max |S M S̄^T - H| / max |M|`.
pub fn residual(f: &Factorization, m: &DMatrix<f64>) -> f64 {
    let d = &f.s * m * f.sbar.transpose() - DMatrix::from_diagonal(&f.h);
    d.amax() / m.amax().max(f64::MIN_POSITIVE)
}
