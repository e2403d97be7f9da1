//! Direct factorization of the perturbed moment matrix, compared against
//! the formula path.

use crate::christoffel::ConnectionData;
use crate::error::Result;
use crate::fixtures::Side;
use crate::gaussborel::{factorize, FactorOptions, Factorization};
use crate::matpoly::MatrixPolynomial;
use crate::measures::{left_multiply, right_multiply, MomentMatrix};
use crate::mmop::{build_family, OrthoFamily};
use crate::poly::Poly;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Factorization and families of the perturbed moment matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Direct {
    pub moments: MomentMatrix,
    pub factorization: Factorization,
    pub family: OrthoFamily,
}

pub fn direct_perturbed(
    m: &MomentMatrix,
    r: &MatrixPolynomial,
    side: Side,
    opts: FactorOptions,
) -> Result<Direct> {
    let moments = match side {
        Side::Right => right_multiply(m, r)?,
        Side::Left => left_multiply(m, r)?,
    };
    let factorization = factorize(&moments.entries, opts)?;
    let family = build_family(&factorization, m.q, m.p);
    Ok(Direct {
        moments,
        factorization,
        family,
    })
}

/// Residuals at one index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexResidual {
    pub n: usize,
    pub b_hat: f64,
    pub a_hat: f64,
    pub a_hat_raw: f64,
    pub h_hat: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub count: usize,
    pub b_hat: f64,
    /// `Â_n` normalized to a unit coefficient at interleaved index `n`.
    pub a_hat: f64,
    pub a_hat_raw: f64,
    pub h_hat: f64,
    /// Band of `S Ŝ^{-1}` against the solved columns.
    pub omega: f64,
    /// Largest entry of `S Ŝ^{-1}` below the band, relative to its column.
    pub omega_off_band: f64,
    pub worst: f64,
    pub tol: f64,
    pub pass: bool,
    pub per_index: Vec<IndexResidual>,
}

fn rel_diff(x: &[Poly], y: &[Poly]) -> f64 {
    let scale = y.iter().fold(0.0f64, |m, p| m.max(p.max_abs())).max(f64::MIN_POSITIVE);
    x.iter()
        .zip(y)
        .fold(0.0f64, |m, (a, b)| m.max(a.max_diff(b)))
        / scale
}

fn scaled(x: &[Poly], s: f64) -> Vec<Poly> {
    x.iter().map(|p| p.scale(s)).collect()
}

/// `S Ŝ^{-1}` on the leading `k x k` block (`S̄` for left perturbations).
pub fn omega_from_factors(s: &DMatrix<f64>, s_hat: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let s = s.view((0, 0), (k, k)).into_owned();
    let s_hat_t = s_hat.view((0, 0), (k, k)).transpose();
    // X Ŝ = S  <=>  Ŝ^T X^T = S^T
    let xt = s_hat_t
        .solve_upper_triangular(&s.transpose())
        .expect("unit diagonal");
    xt.transpose()
}

/// Compares the formula path `cd` against `direct` for every index both
/// provide. `base` is the unperturbed factorization.
pub fn compare(cd: &ConnectionData, direct: &Direct, base: &Factorization, tol: f64) -> ComparisonReport {
    let t_hat = direct.factorization.trunc();
    let count = cd.len().min(t_hat);
    let fam = &direct.family;
    let k = (count + cd.m_total + 1).min(t_hat).min(base.trunc());
    let (s, s_hat) = match cd.side {
        Side::Right => (&base.s, &direct.factorization.s),
        Side::Left => (&base.sbar, &direct.factorization.sbar),
    };
    let omega = omega_from_factors(s, s_hat, k);
    let mut per_index = Vec::with_capacity(count);
    let mut off_band: f64 = 0.0;
    for n in 0..count {
        let b_hat = rel_diff(&cd.b_hat[n], &fam.b[n]);
        let a_hat_raw = rel_diff(&cd.a_hat[n], &fam.a[n]);
        // compare leading coefficients 1/H directly so equal inputs give 0
        let lead = |a: &[Poly]| a[n % cd.a_hat[n].len()].coeff(n / cd.a_hat[n].len());
        let (c_cd, c_ref) = (lead(&cd.a_hat[n]), lead(&fam.a[n]));
        let a_hat = rel_diff(&scaled(&cd.a_hat[n], 1.0 / c_cd), &scaled(&fam.a[n], 1.0 / c_ref));
        let h_hat = (c_cd - c_ref).abs() / c_ref.abs();
        let col_scale = (n..k).fold(0.0f64, |m, i| m.max(omega[(i, n)].abs()));
        let mut om: f64 = 0.0;
        for i in n + 1..k {
            let d = i - n;
            let formula = if d <= cd.m_total { cd.omega[n][d - 1] } else { 0.0 };
            let diff = (omega[(i, n)] - formula).abs() / col_scale;
            if d <= cd.m_total {
                om = om.max(diff);
            } else {
                off_band = off_band.max(diff);
            }
        }
        per_index.push(IndexResidual {
            n,
            b_hat,
            a_hat,
            a_hat_raw,
            h_hat,
            omega: om,
        });
    }
    let fold = |f: fn(&IndexResidual) -> f64| per_index.iter().map(f).fold(0.0, f64::max);
    let b_hat = fold(|r| r.b_hat);
    let a_hat = fold(|r| r.a_hat);
    let a_hat_raw = fold(|r| r.a_hat_raw);
    let h_hat = fold(|r| r.h_hat);
    let omega_res = fold(|r| r.omega);
    let worst = [b_hat, a_hat, h_hat, omega_res, off_band]
        .into_iter()
        .fold(0.0, f64::max);
    ComparisonReport {
        count,
        b_hat,
        a_hat,
        a_hat_raw,
        h_hat,
        omega: omega_res,
        omega_off_band: off_band,
        worst,
        tol,
        pass: worst <= tol,
        per_index,
    }
}
