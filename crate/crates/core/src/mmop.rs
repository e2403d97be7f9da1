//! Mixed multiple orthogonal families built from a factorization.

use crate::error::Result;
use crate::exec::Execution;
use crate::gaussborel::Factorization;
use crate::linalg;
use crate::measures::WeightGrid;
use crate::poly::Poly;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Families `B_n^{(b)}` (`q` components) and `A_n^{(a)}` (`p` components).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthoFamily {
    pub q: usize,
    pub p: usize,
    pub b: Vec<Vec<Poly>>,
    pub a: Vec<Vec<Poly>>,
    pub h: Vec<f64>,
}

/// Polynomial components of row `n` of `mat` under block interleaving `s`.
fn interleaved_row(mat: &DMatrix<f64>, n: usize, s: usize, scale: f64) -> Vec<Poly> {
    (0..s)
        .map(|c| {
            let coeffs: Vec<f64> = (c..=n).step_by(s).map(|j| mat[(n, j)] * scale).collect();
            if coeffs.is_empty() {
                Poly::zero()
            } else {
                Poly::new(coeffs)
            }
        })
        .collect()
}

impl OrthoFamily {
    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// Family of `M^T` (roles of the two sides swapped).
    pub fn transpose(&self) -> OrthoFamily {
        OrthoFamily {
            q: self.p,
            p: self.q,
            b: self
                .a
                .iter()
                .zip(&self.h)
                .map(|(row, h)| row.iter().map(|c| c.scale(*h)).collect())
                .collect(),
            a: self
                .b
                .iter()
                .zip(&self.h)
                .map(|(row, h)| row.iter().map(|c| c.scale(1.0 / h)).collect())
                .collect(),
            h: self.h.clone(),
        }
    }

    pub fn truncated(&self, n: usize) -> OrthoFamily {
        OrthoFamily {
            q: self.q,
            p: self.p,
            b: self.b[..n].to_vec(),
            a: self.a[..n].to_vec(),
            h: self.h[..n].to_vec(),
        }
    }

    pub fn eval_a(&self, n: usize, x: f64) -> Vec<f64> {
        self.a[n].iter().map(|c| c.eval(x)).collect()
    }

    pub fn eval_b(&self, n: usize, x: f64) -> Vec<f64> {
        self.b[n].iter().map(|c| c.eval(x)).collect()
    }

    /// Sampled value `sum_{l<=level} sum_a v_{level-l, a} A_n^{(a)(l)}(x0) / l!`.
    pub fn sample(&self, n: usize, x0: Complex64, chain: &[nalgebra::DVector<Complex64>], level: usize) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, comp) in self.a[n].iter().enumerate() {
            let t = comp.taylor(x0, level);
            for (l, tl) in t.iter().enumerate() {
                acc += chain[level - l][a] * tl;
            }
        }
        acc
    }

    /// Polynomial table as CSV rows `family,n,component,degree,coeffs...`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("family,n,component,degree,coefficients\n");
        for (tag, fam) in [("B", &self.b), ("A", &self.a)] {
            for (n, row) in fam.iter().enumerate() {
                for (c, poly) in row.iter().enumerate() {
                    let cs: Vec<String> = poly.coeffs().iter().map(|v| format!("{v:.16e}")).collect();
                    out.push_str(&format!("{tag},{n},{},{},{}\n", c + 1, poly.degree(), cs.join(",")));
                }
            }
        }
        out
    }
}

/// Reads `B` from the rows of `S` and `A` from the rows of `S̄` scaled by `1/H`.
pub fn build_family(f: &Factorization, q: usize, p: usize) -> OrthoFamily {
    let t = f.trunc();
    OrthoFamily {
        q,
        p,
        b: (0..t).map(|n| interleaved_row(&f.s, n, q, 1.0)).collect(),
        a: (0..t)
            .map(|n| interleaved_row(&f.sbar, n, p, 1.0 / f.h[n]))
            .collect(),
        h: f.h.iter().copied().collect(),
    }
}

/// `∫ sum_b sum_a B_n^{(b)} dmu_{b,a} A_m^{(a)}`.
fn pairing(grid: &WeightGrid, bn: &[Poly], am: &[Poly]) -> Result<f64> {
    let mut acc = 0.0;
    for (b, bp) in bn.iter().enumerate() {
        for (a, ap) in am.iter().enumerate() {
            acc += grid.entry(b + 1, a + 1).integrate(grid.interval, &(bp * ap))?;
        }
    }
    Ok(acc)
}

/// `max |∫ B_n dmu A_m - delta_{nm}|` over `n, m < upto`.
pub fn biorthogonality_residual(
    fam: &OrthoFamily,
    grid: &WeightGrid,
    upto: usize,
    exec: Execution,
) -> Result<f64> {
    let upto = upto.min(fam.len());
    let rows = exec.try_map(upto, |n| {
        (0..upto).try_fold(0.0f64, |w, m| {
            let v = pairing(grid, &fam.b[n], &fam.a[m])?;
            let target = if n == m { 1.0 } else { 0.0 };
            Ok(w.max((v - target).abs()))
        })
    })?;
    Ok(rows.into_iter().fold(0.0, f64::max))
}

fn monomial(l: usize) -> Poly {
    let mut c = vec![0.0; l + 1];
    c[l] = 1.0;
    Poly::new(c)
}

/// `∫ x^l sum_a dmu_{b,a} A_n^{(a)}`.
fn a_moment(grid: &WeightGrid, an: &[Poly], b: usize, l: usize) -> Result<f64> {
    let xl = monomial(l);
    an.iter().enumerate().try_fold(0.0, |acc, (a, ap)| {
        Ok(acc + grid.entry(b, a + 1).integrate(grid.interval, &(&xl * ap))?)
    })
}

/// `∫ sum_b B_n^{(b)} dmu_{b,a} x^m`.
fn b_moment(grid: &WeightGrid, bn: &[Poly], a: usize, m: usize) -> Result<f64> {
    let xm = monomial(m);
    bn.iter().enumerate().try_fold(0.0, |acc, (b, bp)| {
        Ok(acc + grid.entry(b + 1, a).integrate(grid.interval, &(bp * &xm))?)
    })
}

/// Number of strictly sub-diagonal moments of component `c` (1-based) under
/// interleaving `s`: `ceil((n - c + 1) / s)`.
fn strict_count(n: usize, c: usize, s: usize) -> usize {
    (n + 1).saturating_sub(c).div_ceil(s)
}

/// Largest violation of the quasi-diagonal orthogonality relations for
/// `n < upto`: the `A` side against `x^l dmu_{b,*}` for
/// `l < ceil((n-b+1)/q)`, the `B` side against `dmu_{*,a} x^m` for
/// `m < ceil((n-a+1)/p)`.
pub fn quasidiag_residual(fam: &OrthoFamily, grid: &WeightGrid, upto: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for n in 0..upto.min(fam.len()) {
        for b in 1..=fam.q {
            for l in 0..strict_count(n, b, fam.q) {
                worst = worst.max(a_moment(grid, &fam.a[n], b, l)?.abs());
            }
        }
        for a in 1..=fam.p {
            for m in 0..strict_count(n, a, fam.p) {
                worst = worst.max(b_moment(grid, &fam.b[n], a, m)?.abs());
            }
        }
    }
    Ok(worst)
}

/// An index where the literal range `l <= ceil((n-c+2)/s) - 1` reaches the
/// diagonal, with the integral found there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeFlag {
    pub side: char,
    pub n: usize,
    pub component: usize,
    pub power: usize,
    pub value: f64,
}

/// Evaluates the wider index range and flags every boundary term whose
/// integral is not zero to `tol`.
pub fn quasidiag_literal_flags(
    fam: &OrthoFamily,
    grid: &WeightGrid,
    upto: usize,
    tol: f64,
) -> Result<Vec<RangeFlag>> {
    let mut flags = Vec::new();
    for n in 0..upto.min(fam.len()) {
        for b in 1..=fam.q {
            let lo = strict_count(n, b, fam.q);
            let hi = (n + 2).saturating_sub(b).div_ceil(fam.q);
            for l in lo..hi {
                let v = a_moment(grid, &fam.a[n], b, l)?;
                if v.abs() > tol {
                    flags.push(RangeFlag { side: 'A', n, component: b, power: l, value: v });
                }
            }
        }
        for a in 1..=fam.p {
            let lo = strict_count(n, a, fam.p);
            let hi = (n + 2).saturating_sub(a).div_ceil(fam.p);
            for m in lo..hi {
                let v = b_moment(grid, &fam.b[n], a, m)?;
                if v.abs() > tol {
                    flags.push(RangeFlag { side: 'B', n, component: a, power: m, value: v });
                }
            }
        }
    }
    Ok(flags)
}

/// Leading `(T - q) x (T - q)` block of `S Λ_[q] S^{-1}`, all of whose
/// entries are unaffected by truncation.
pub fn recurrence_matrix(f: &Factorization, q: usize) -> DMatrix<f64> {
    let t = f.trunc();
    let k = t.saturating_sub(q);
    let l = linalg::unit_lower_inverse(&f.s);
    // (S Λ)_{i, m} = S_{i, m - q}
    let mut s_shift = DMatrix::zeros(k, t);
    for i in 0..k {
        for m in q..t {
            s_shift[(i, m)] = f.s[(i, m - q)];
        }
    }
    (s_shift * l).view((0, 0), (k, k)).into_owned()
}

/// Largest entry outside `p` subdiagonals and `q` superdiagonals.
pub fn off_band(t: &DMatrix<f64>, q: usize, p: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..t.nrows() {
        for j in 0..t.ncols() {
            if j > i + q || i > j + p {
                worst = worst.max(t[(i, j)].abs());
            }
        }
    }
    worst
}

/// `max |(T B)(x) - x B(x)|` over the rows whose sum stays inside the table,
/// relative to the size of the summands.
pub fn recurrence_residual(t: &DMatrix<f64>, fam: &OrthoFamily, xs: &[f64]) -> f64 {
    let rows = t.nrows().saturating_sub(fam.q);
    let mut worst: f64 = 0.0;
    for &x in xs {
        let bx: Vec<Vec<f64>> = (0..t.ncols()).map(|n| fam.eval_b(n, x)).collect();
        for i in 0..rows {
            for c in 0..fam.q {
                let mut acc = -x * bx[i][c];
                let mut scale = (x * bx[i][c]).abs();
                for k in 0..t.ncols() {
                    acc += t[(i, k)] * bx[k][c];
                    scale += (t[(i, k)] * bx[k][c]).abs();
                }
                worst = worst.max(acc.abs() / scale.max(1.0));
            }
        }
    }
    worst
}

/// Kernel slice `sum_{i<n} w_i B_i^{(b)}(y)` for one sampled row `w`, as
/// `q` polynomials in `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSlice {
    pub n: usize,
    pub components: Vec<Poly>,
}

/// Kernel slice from precomputed real sample weights `w_i`, `i < n`.
pub fn kernel_slice_from_weights(fam: &OrthoFamily, n: usize, weights: &[f64]) -> KernelSlice {
    let components = (0..fam.q)
        .map(|b| {
            let mut acc = Poly::zero();
            for i in 0..n {
                acc.axpy(weights[i], &fam.b[i][b]);
            }
            acc
        })
        .collect();
    KernelSlice { n, components }
}

/// Complex kernel slice at chain level `level`: coefficient lists per
/// component `b`.
pub fn kernel_slice(
    fam: &OrthoFamily,
    n: usize,
    x0: Complex64,
    chain: &[nalgebra::DVector<Complex64>],
    level: usize,
) -> Vec<Vec<Complex64>> {
    let weights: Vec<Complex64> = (0..n).map(|i| fam.sample(i, x0, chain, level)).collect();
    (0..fam.q)
        .map(|b| {
            let len = (0..n).map(|i| fam.b[i][b].coeffs().len()).max().unwrap_or(1);
            let mut acc = vec![Complex64::new(0.0, 0.0); len];
            for (i, w) in weights.iter().enumerate() {
                for (k, c) in fam.b[i][b].coeffs().iter().enumerate() {
                    acc[k] += w * c;
                }
            }
            acc
        })
        .collect()
}

/// Christoffel–Darboux kernel `sum_{i<n} A_i^{(a)}(x) B_i^{(b)}(y)` as a
/// `p x q` matrix.
pub fn cd_kernel(fam: &OrthoFamily, n: usize, x: f64, y: f64) -> DMatrix<f64> {
    let mut k = DMatrix::zeros(fam.p, fam.q);
    for i in 0..n {
        let ax = fam.eval_a(i, x);
        let by = fam.eval_b(i, y);
        for a in 0..fam.p {
            for b in 0..fam.q {
                k[(a, b)] += ax[a] * by[b];
            }
        }
    }
    k
}
