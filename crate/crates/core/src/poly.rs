//! Dense real polynomials stored lowest degree first.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

/// A real polynomial `c[0] + c[1] x + ...`.
///
/// Trailing zeros are allowed; [`Poly::degree`] ignores exact zeros and
/// [`Poly::trimmed`] drops coefficients that are negligible relative to the
/// largest one.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: vec![0.0] }
    }

    pub fn constant(c: f64) -> Self {
        Poly { coeffs: vec![c] }
    }

    /// `x - root`.
    pub fn linear_root(root: f64) -> Self {
        Poly {
            coeffs: vec![-root, 1.0],
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Coefficient of `x^k`, zero beyond the stored length.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    /// Index of the last nonzero coefficient (0 for the zero polynomial).
    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Drops trailing coefficients below `rel_tol` times the largest magnitude.
    pub fn trimmed(&self, rel_tol: f64) -> Poly {
        let cut = rel_tol * self.max_abs();
        let keep = self
            .coeffs
            .iter()
            .rposition(|c| c.abs() > cut)
            .map_or(1, |i| i + 1);
        Poly {
            coeffs: self.coeffs[..keep].to_vec(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Taylor coefficients `P^{(l)}(z) / l!` for `l = 0..=order`, by repeated
    /// synthetic division.
    pub fn taylor(&self, z: Complex64, order: usize) -> Vec<Complex64> {
        let mut work: Vec<Complex64> = self.coeffs.iter().map(|&c| c.into()).collect();
        let mut out = Vec::with_capacity(order + 1);
        for _ in 0..=order {
            if work.is_empty() {
                out.push(Complex64::new(0.0, 0.0));
                continue;
            }
            let mut acc = Complex64::new(0.0, 0.0);
            let mut quotient = vec![Complex64::new(0.0, 0.0); work.len().saturating_sub(1)];
            for k in (0..work.len()).rev() {
                acc = acc * z + work[k];
                if k > 0 {
                    quotient[k - 1] = acc;
                }
            }
            out.push(acc);
            work = quotient;
        }
        out
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        Poly {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Adds `s * other` in place.
    pub fn axpy(&mut self, s: f64, other: &Poly) {
        if self.coeffs.len() < other.coeffs.len() {
            self.coeffs.resize(other.coeffs.len(), 0.0);
        }
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += s * o;
        }
    }

    /// Largest absolute coefficient difference.
    pub fn max_diff(&self, other: &Poly) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n).fold(0.0, |m, k| m.max((self.coeff(k) - other.coeff(k)).abs()))
    }

    /// Monic polynomial with the given real roots.
    pub fn from_roots(roots: &[f64]) -> Poly {
        roots
            .iter()
            .fold(Poly::constant(1.0), |acc, &r| &acc * &Poly::linear_root(r))
    }
}

impl From<Vec<f64>> for Poly {
    fn from(coeffs: Vec<f64>) -> Self {
        Poly::new(coeffs)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.coeffs.is_empty() || rhs.coeffs.is_empty() {
            return Poly::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly { coeffs: out }
    }
}
