//! Weight grids, moments and moment matrices.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::matpoly::MatrixPolynomial;
use crate::poly::Poly;
use gauss_quad::GaussLegendre;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::num::NonZeroUsize;

/// Classical weights with closed-form moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Classical {
    /// `dx` on the grid interval.
    Lebesgue,
    /// `x^alpha (1 - x)^beta dx` on `[0, 1]`.
    Jacobi { alpha: f64, beta: f64 },
}

/// One entry `dmu_{b,a}` of the weight grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    /// Polynomial density on `support` (defaults to the grid interval).
    PolynomialDensity {
        coeffs: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        support: Option<[f64; 2]>,
    },
    MomentTable { moments: Vec<f64> },
    NamedClassical(Classical),
}

impl WeightSpec {
    pub fn lebesgue() -> Self {
        WeightSpec::NamedClassical(Classical::Lebesgue)
    }

    pub fn density_on(coeffs: Vec<f64>, lo: f64, hi: f64) -> Self {
        WeightSpec::PolynomialDensity {
            coeffs,
            support: Some([lo, hi]),
        }
    }

    /// Closed-form moments `0..=n_max`.
    pub fn moments(&self, interval: [f64; 2], n_max: usize) -> Result<Vec<f64>> {
        match self {
            WeightSpec::PolynomialDensity { coeffs, support } => {
                let [lo, hi] = support.unwrap_or(interval);
                Ok((0..=n_max)
                    .map(|n| {
                        coeffs
                            .iter()
                            .enumerate()
                            .map(|(k, c)| c * monomial_integral(n + k, lo, hi))
                            .sum()
                    })
                    .collect())
            }
            WeightSpec::MomentTable { moments } => {
                if moments.len() <= n_max {
                    Err(Error::InsufficientMomentTable {
                        b: 0,
                        a: 0,
                        needed: n_max + 1,
                        got: moments.len(),
                    })
                } else {
                    Ok(moments[..=n_max].to_vec())
                }
            }
            WeightSpec::NamedClassical(Classical::Lebesgue) => Ok((0..=n_max)
                .map(|n| monomial_integral(n, interval[0], interval[1]))
                .collect()),
            WeightSpec::NamedClassical(Classical::Jacobi { alpha, beta }) => {
                // B(n + alpha + 1, beta + 1) by the ratio recurrence.
                let mut out = Vec::with_capacity(n_max + 1);
                let mut cur = statrs::function::beta::beta(alpha + 1.0, beta + 1.0);
                for n in 0..=n_max {
                    out.push(cur);
                    let a = n as f64 + alpha + 1.0;
                    cur *= a / (a + beta + 1.0);
                }
                Ok(out)
            }
        }
    }

    /// Moments by Gauss–Legendre quadrature. Only polynomial densities and
    /// the Lebesgue weight have a quadrature path.
    pub fn quadrature_moments(&self, interval: [f64; 2], n_max: usize) -> Option<Vec<f64>> {
        let (coeffs, [lo, hi]) = match self {
            WeightSpec::PolynomialDensity { coeffs, support } => {
                (coeffs.clone(), support.unwrap_or(interval))
            }
            WeightSpec::NamedClassical(Classical::Lebesgue) => (vec![1.0], interval),
            _ => return None,
        };
        let density = Poly::new(coeffs);
        let nodes = (n_max + density.degree()).div_ceil(2) + 1;
        let rule = GaussLegendre::new(NonZeroUsize::new(nodes).expect("positive"));
        Some(
            (0..=n_max)
                .map(|n| rule.integrate(lo, hi, |x| x.powi(n as i32) * density.eval(x)))
                .collect(),
        )
    }

    /// `∫ f dmu` for a polynomial `f`, by quadrature where the weight is a
    /// polynomial density and by moments otherwise.
    pub fn integrate(&self, interval: [f64; 2], f: &Poly) -> Result<f64> {
        match self {
            WeightSpec::PolynomialDensity { coeffs, support } => {
                let [lo, hi] = support.unwrap_or(interval);
                let density = Poly::new(coeffs.clone());
                Ok(gauss(lo, hi, f.degree() + density.degree(), |x| {
                    f.eval(x) * density.eval(x)
                }))
            }
            WeightSpec::NamedClassical(Classical::Lebesgue) => {
                Ok(gauss(interval[0], interval[1], f.degree(), |x| f.eval(x)))
            }
            _ => {
                let mom = self.moments(interval, f.degree())?;
                Ok(f.coeffs().iter().zip(&mom).map(|(c, m)| c * m).sum())
            }
        }
    }

    pub fn validate(&self, interval: [f64; 2]) -> std::result::Result<(), String> {
        match self {
            WeightSpec::PolynomialDensity { coeffs, support } => {
                if coeffs.is_empty() {
                    return Err("empty density coefficients".into());
                }
                if let Some([lo, hi]) = support {
                    if !(lo < hi) || *lo < interval[0] || *hi > interval[1] {
                        return Err(format!(
                            "support [{lo}, {hi}] is not a sub-interval of [{}, {}]",
                            interval[0], interval[1]
                        ));
                    }
                }
                Ok(())
            }
            WeightSpec::MomentTable { moments } => {
                if moments.is_empty() {
                    Err("empty moment table".into())
                } else {
                    Ok(())
                }
            }
            WeightSpec::NamedClassical(Classical::Lebesgue) => Ok(()),
            WeightSpec::NamedClassical(Classical::Jacobi { alpha, beta }) => {
                if *alpha <= -1.0 || *beta <= -1.0 {
                    Err("jacobi parameters must exceed -1".into())
                } else if interval[0] > 0.0 || interval[1] < 1.0 {
                    Err("jacobi weight lives on [0, 1], which the interval must contain".into())
                } else {
                    Ok(())
                }
            }
        }
    }
}

fn monomial_integral(n: usize, lo: f64, hi: f64) -> f64 {
    let k = (n + 1) as i32;
    (hi.powi(k) - lo.powi(k)) / k as f64
}

/// Gauss–Legendre rule exact for polynomials of degree `deg`.
fn gauss(lo: f64, hi: f64, deg: usize, f: impl Fn(f64) -> f64) -> f64 {
    let nodes = (deg + 1).div_ceil(2) + 2;
    GaussLegendre::new(NonZeroUsize::new(nodes).expect("positive")).integrate(lo, hi, f)
}

/// A `q x p` grid of measures on a common interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightGrid {
    pub q: usize,
    pub p: usize,
    pub interval: [f64; 2],
    /// Row-major `q x p` entries.
    pub entries: Vec<WeightSpec>,
}

impl WeightGrid {
    pub fn new(q: usize, p: usize, interval: [f64; 2], entries: Vec<WeightSpec>) -> Result<Self> {
        let g = WeightGrid {
            q,
            p,
            interval,
            entries,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 || self.p == 0 {
            return Err(Error::InvalidGrid("q and p must be positive".into()));
        }
        if !(self.interval[0] < self.interval[1]) {
            return Err(Error::InvalidGrid(format!(
                "interval [{}, {}] is empty",
                self.interval[0], self.interval[1]
            )));
        }
        if self.entries.len() != self.q * self.p {
            return Err(Error::InvalidGrid(format!(
                "{} entries for a {}x{} grid",
                self.entries.len(),
                self.q,
                self.p
            )));
        }
        for (i, e) in self.entries.iter().enumerate() {
            e.validate(self.interval).map_err(|m| {
                Error::InvalidGrid(format!("entry ({}, {}): {m}", i / self.p + 1, i % self.p + 1))
            })?;
        }
        Ok(())
    }

    /// Entry `(b, a)`, both 1-based.
    pub fn entry(&self, b: usize, a: usize) -> &WeightSpec {
        &self.entries[(b - 1) * self.p + (a - 1)]
    }

    /// The `p x q` grid `dmu^T`.
    pub fn transpose(&self) -> WeightGrid {
        let entries = (0..self.p)
            .flat_map(|a| (0..self.q).map(move |b| (b, a)))
            .map(|(b, a)| self.entries[b * self.p + a].clone())
            .collect();
        WeightGrid {
            q: self.p,
            p: self.q,
            interval: self.interval,
            entries,
        }
    }

    /// Highest moment index needed for a `trunc x trunc` moment matrix.
    pub fn moments_needed(&self, trunc: usize) -> usize {
        (trunc - 1) / self.q + (trunc - 1) / self.p
    }
}

/// Moment sequences `mu_{b,a;0..=n_max}`, row-major over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentGrid {
    pub q: usize,
    pub p: usize,
    pub seqs: Vec<Vec<f64>>,
}

pub fn moments(grid: &WeightGrid, n_max: usize, exec: Execution) -> Result<MomentGrid> {
    let seqs = exec.try_map(grid.entries.len(), |i| {
        grid.entries[i]
            .moments(grid.interval, n_max)
            .map_err(|e| match e {
                Error::InsufficientMomentTable { needed, got, .. } => {
                    Error::InsufficientMomentTable {
                        b: i / grid.p + 1,
                        a: i % grid.p + 1,
                        needed,
                        got,
                    }
                }
                other => other,
            })
    })?;
    Ok(MomentGrid {
        q: grid.q,
        p: grid.p,
        seqs,
    })
}

/// Truncated moment matrix with interleaved rows (`q`) and columns (`p`).
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrix {
    pub q: usize,
    pub p: usize,
    pub entries: DMatrix<f64>,
}

impl MomentMatrix {
    pub fn trunc(&self) -> usize {
        self.entries.nrows()
    }

    pub fn transpose(&self) -> MomentMatrix {
        MomentMatrix {
            q: self.p,
            p: self.q,
            entries: self.entries.transpose(),
        }
    }

    /// Assembles the moment matrix of `grid` at truncation `trunc`.
    pub fn from_grid(grid: &WeightGrid, trunc: usize, exec: Execution) -> Result<MomentMatrix> {
        let mg = moments(grid, grid.moments_needed(trunc), exec)?;
        assemble(&mg, trunc)
    }

    /// CSV, row-major, 17 significant digits.
    pub fn to_csv(&self) -> String {
        matrix_csv(&self.entries)
    }
}

/// Row-major CSV of a matrix with 17 significant digits.
pub fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.16e}", m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Entry `(j, k) = mu_{b,a;l+m}` with `j = q l + b - 1`, `k = p m + a - 1`.
pub fn assemble(mg: &MomentGrid, trunc: usize) -> Result<MomentMatrix> {
    let (q, p) = (mg.q, mg.p);
    let needed = (trunc - 1) / q + (trunc - 1) / p + 1;
    for (i, s) in mg.seqs.iter().enumerate() {
        if s.len() < needed {
            return Err(Error::InsufficientMomentTable {
                b: i / p + 1,
                a: i % p + 1,
                needed,
                got: s.len(),
            });
        }
    }
    let entries = DMatrix::from_fn(trunc, trunc, |j, k| {
        let (l, b) = (j / q, j % q);
        let (m, a) = (k / p, k % p);
        mg.seqs[b * p + a][l + m]
    });
    Ok(MomentMatrix { q, p, entries })
}

/// `max |M(j + q, k) - M(j, k + p)|`.
pub fn hankel_residual(m: &MomentMatrix) -> f64 {
    let t = m.trunc();
    let mut worst: f64 = 0.0;
    for j in 0..t.saturating_sub(m.q) {
        for k in 0..t.saturating_sub(m.p) {
            worst = worst.max((m.entries[(j + m.q, k)] - m.entries[(j, k + m.p)]).abs());
        }
    }
    worst
}

/// Largest truncation of a perturbed matrix whose entries are all exact.
pub fn perturbed_trunc(trunc: usize, block: usize, degree: usize) -> usize {
    block * (trunc / block).saturating_sub(degree)
}

/// `M R(Λ_[p]^T)` truncated to the largest exact size.
pub fn right_multiply(m: &MomentMatrix, r: &MatrixPolynomial) -> Result<MomentMatrix> {
    if r.size() != m.p {
        return Err(Error::Shape(format!(
            "right perturbation has size {}, grid has p = {}",
            r.size(),
            m.p
        )));
    }
    let t = m.trunc();
    let shift = r.shift_image(m.p, t)?;
    let keep = perturbed_trunc(t, m.p, r.degree());
    log::debug!("right perturbation: truncation {t} -> {keep}");
    let full = &m.entries * shift;
    Ok(MomentMatrix {
        q: m.q,
        p: m.p,
        entries: full.view((0, 0), (keep, keep)).into_owned(),
    })
}

/// `L(Λ_[q]) M` truncated to the largest exact size.
pub fn left_multiply(m: &MomentMatrix, l: &MatrixPolynomial) -> Result<MomentMatrix> {
    if l.size() != m.q {
        return Err(Error::Shape(format!(
            "left perturbation has size {}, grid has q = {}",
            l.size(),
            m.q
        )));
    }
    let t = m.trunc();
    let shift = l.transpose().shift_image(m.q, t)?.transpose();
    let keep = perturbed_trunc(t, m.q, l.degree());
    log::debug!("left perturbation: truncation {t} -> {keep}");
    let full = shift * &m.entries;
    Ok(MomentMatrix {
        q: m.q,
        p: m.p,
        entries: full.view((0, 0), (keep, keep)).into_owned(),
    })
}
