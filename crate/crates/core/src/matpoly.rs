//! Square matrix polynomials `R(x) = R_0 + R_1 x + ... + R_N x^N`.

use crate::error::{Error, Result};
use crate::linalg;
use crate::poly::Poly;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Relative threshold below which trailing coefficients are dropped.
pub const TRIM_TOL: f64 = 1e-12;

/// Square real matrix polynomial of size `p`, coefficients lowest degree first.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPolynomial {
    size: usize,
    coeffs: Vec<DMatrix<f64>>,
}

/// Result of checking the leading and subleading coefficient pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureReport {
    pub r: usize,
    pub satisfies_c2: bool,
    pub det_degree: usize,
}

/// `p x p` matrix with ones at `(i, i + r)` for `i < p - r`.
pub fn leading_pattern(p: usize, r: usize) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |i, j| if i + r < p && j == i + r { 1.0 } else { 0.0 })
}

impl MatrixPolynomial {
    /// Builds a polynomial from its coefficients, trimming negligible
    /// trailing ones.
    pub fn new(coeffs: Vec<DMatrix<f64>>) -> Result<Self> {
        let first = coeffs
            .first()
            .ok_or_else(|| Error::Shape("empty coefficient list".into()))?;
        let size = first.nrows();
        if size == 0 {
            return Err(Error::Shape("matrix polynomial of size 0".into()));
        }
        for (l, c) in coeffs.iter().enumerate() {
            if c.nrows() != size || c.ncols() != size {
                return Err(Error::Shape(format!(
                    "coefficient {l} is {}x{}, expected {size}x{size}",
                    c.nrows(),
                    c.ncols()
                )));
            }
        }
        let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.amax()));
        let cut = TRIM_TOL * scale;
        let keep = coeffs
            .iter()
            .rposition(|c| c.amax() > cut)
            .map_or(1, |l| l + 1);
        let mut coeffs = coeffs;
        coeffs.truncate(keep);
        Ok(MatrixPolynomial { size, coeffs })
    }

    /// Builds from row-major coefficient arrays.
    pub fn from_row_major(size: usize, coeffs: &[Vec<f64>]) -> Result<Self> {
        let mats = coeffs
            .iter()
            .enumerate()
            .map(|(l, c)| {
                if c.len() != size * size {
                    Err(Error::Shape(format!(
                        "coefficient {l} has {} entries, expected {}",
                        c.len(),
                        size * size
                    )))
                } else {
                    Ok(DMatrix::from_row_slice(size, size, c))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(mats)
    }

    pub fn identity(p: usize) -> Self {
        MatrixPolynomial {
            size: p,
            coeffs: vec![DMatrix::identity(p, p)],
        }
    }

    /// A `1 x 1` polynomial.
    pub fn scalar(coeffs: &[f64]) -> Result<Self> {
        Self::new(
            coeffs
                .iter()
                .map(|&c| DMatrix::from_element(1, 1, c))
                .collect(),
        )
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[DMatrix<f64>] {
        &self.coeffs
    }

    pub fn coeff(&self, l: usize) -> &DMatrix<f64> {
        &self.coeffs[l]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.iter().all(|&v| v == 0.0))
    }

    /// Largest absolute coefficient entry.
    pub fn norm_inf(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.amax()))
    }

    /// Row-major coefficient arrays, lowest degree first.
    pub fn to_row_major(&self) -> Vec<Vec<f64>> {
        self.coeffs
            .iter()
            .map(|c| c.transpose().iter().copied().collect())
            .collect()
    }

    /// Entry `(i, j)` as a scalar polynomial.
    pub fn entry(&self, i: usize, j: usize) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c[(i, j)]).collect())
    }

    /// The `order`-th derivative evaluated at `x`.
    pub fn evaluate(&self, x: f64, order: usize) -> DMatrix<f64> {
        let mut acc = DMatrix::zeros(self.size, self.size);
        for l in (order..self.coeffs.len()).rev() {
            let falling: f64 = (l - order + 1..=l).map(|k| k as f64).product();
            acc *= x;
            acc += &self.coeffs[l] * falling;
        }
        acc
    }

    /// Taylor coefficient `R^{(order)}(z) / order!`.
    pub fn taylor(&self, z: Complex64, order: usize) -> DMatrix<Complex64> {
        let mut acc = DMatrix::<Complex64>::zeros(self.size, self.size);
        for l in (order..self.coeffs.len()).rev() {
            let binom = binomial(l, order);
            acc *= z;
            acc += self.coeffs[l].map(|v| Complex64::from(v * binom));
        }
        acc
    }

    pub fn transpose(&self) -> Self {
        MatrixPolynomial {
            size: self.size,
            coeffs: self.coeffs.iter().map(|c| c.transpose()).collect(),
        }
    }

    /// Product `self * other`.
    pub fn mul(&self, other: &MatrixPolynomial) -> Result<Self> {
        if self.size != other.size {
            return Err(Error::Shape("size mismatch in product".into()));
        }
        let n = self.coeffs.len() + other.coeffs.len() - 1;
        let mut out = vec![DMatrix::zeros(self.size, self.size); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Right product with a constant matrix.
    pub fn mul_constant(&self, c: &DMatrix<f64>) -> Result<Self> {
        Self::new(self.coeffs.iter().map(|r| r * c).collect())
    }

    /// Coefficients of `det R(x)`, interpolated from `N p + 1` Chebyshev
    /// samples and trimmed at [`TRIM_TOL`].
    pub fn determinant(&self) -> Result<Poly> {
        let n = self.degree() * self.size + 1;
        let xs = linalg::chebyshev_points(n);
        let ys: Vec<f64> = xs.iter().map(|&x| linalg::det(&self.evaluate(x, 0))).collect();
        let scale = self.norm_inf().max(f64::MIN_POSITIVE).powi(self.size as i32);
        if ys.iter().all(|y| y.abs() <= TRIM_TOL * scale) {
            return Err(Error::NonRegular);
        }
        Ok(Poly::new(linalg::interpolate(&xs, &ys)).trimmed(TRIM_TOL))
    }

    /// Checks the leading coefficient against the rank-deficient shift
    /// pattern and the subleading lower-left identity block.
    pub fn structure(&self) -> StructureReport {
        match self.validate_structure() {
            Ok(rep) => rep,
            Err(_) => StructureReport {
                r: 0,
                satisfies_c2: false,
                det_degree: 0,
            },
        }
    }

    pub fn validate_structure(&self) -> Result<StructureReport> {
        let p = self.size;
        let n = self.degree();
        let lead = &self.coeffs[n];
        let tol = TRIM_TOL * self.norm_inf().max(1.0);
        let r = (0..p)
            .find(|&r| (lead - leading_pattern(p, r)).amax() <= tol)
            .ok_or_else(|| Error::StructureViolation {
                block: "leading coefficient".into(),
                detail: "not of the form [[0, I_(p-r)], [0, 0]]".into(),
            })?;
        if r > 0 {
            if n == 0 {
                return Err(Error::StructureViolation {
                    block: "leading coefficient".into(),
                    detail: format!("degree 0 with rank deficiency {r}"),
                });
            }
            let sub = &self.coeffs[n - 1];
            let block = sub.view((p - r, 0), (r, r));
            let dev = (block - DMatrix::<f64>::identity(r, r)).amax();
            if dev > tol {
                return Err(Error::StructureViolation {
                    block: format!("subleading coefficient rows {}..{}, columns 0..{}", p - r, p, r),
                    detail: format!("expected identity, deviation {dev:e}"),
                });
            }
        }
        Ok(StructureReport {
            r,
            satisfies_c2: true,
            det_degree: n * p - r,
        })
    }

    /// The `trunc x trunc` truncation of `R(Λ_[s]^T)`.
    ///
    /// With `s == p` block `(i, j)` is `R_{i-j}`. A scalar polynomial with
    /// `s > 1` acts as `R(x) I_s`.
    pub fn shift_image(&self, s: usize, trunc: usize) -> Result<DMatrix<f64>> {
        let p = self.size;
        if s != p && p != 1 {
            return Err(Error::Shape(format!(
                "shift block {s} incompatible with polynomial size {p}"
            )));
        }
        let needed = s * (self.degree() + 1);
        if trunc < needed {
            return Err(Error::TruncationTooSmall {
                needed,
                got: trunc,
            });
        }
        let n = self.degree();
        Ok(DMatrix::from_fn(trunc, trunc, |i, j| {
            if p == 1 {
                if i < j {
                    return 0.0;
                }
                let d = i - j;
                if d % s == 0 && d / s <= n {
                    self.coeffs[d / s][(0, 0)]
                } else {
                    0.0
                }
            } else {
                let (bi, bj) = (i / s, j / s);
                if bi < bj || bi - bj > n {
                    0.0
                } else {
                    self.coeffs[bi - bj][(i % s, j % s)]
                }
            }
        }))
    }

    /// Solves `R(x) Q(x) = G(x)` for a column of polynomials `Q` by matching
    /// coefficients. Returns the quotient and the largest absolute
    /// coefficient mismatch; fails when that exceeds `tol`.
    pub fn left_divide(&self, g: &[Poly], tol: f64) -> Result<(Vec<Poly>, f64)> {
        let p = self.size;
        if g.len() != p {
            return Err(Error::Shape(format!(
                "dividend has {} components, expected {p}",
                g.len()
            )));
        }
        let n = self.degree();
        let deg_g = g.iter().map(Poly::degree).max().unwrap_or(0);
        if n == 0 {
            return self.divide_constant(g, deg_g);
        }
        let d = (deg_g + 1).saturating_sub(n);
        let rows_per = deg_g.max(n + d) + 1;
        let mut a = DMatrix::zeros(p * rows_per, p * (d + 1));
        let mut b = DVector::zeros(p * rows_per);
        for i in 0..p {
            for k in 0..rows_per {
                b[i * rows_per + k] = g[i].coeff(k);
            }
        }
        // Row (i, k) collects sum_j sum_l R_l[i, j] Q_j[k - l].
        for (l, rl) in self.coeffs.iter().enumerate() {
            for i in 0..p {
                for j in 0..p {
                    let v = rl[(i, j)];
                    if v == 0.0 {
                        continue;
                    }
                    for m in 0..=d {
                        a[(i * rows_per + l + m, j * (d + 1) + m)] += v;
                    }
                }
            }
        }
        let x = linalg::lstsq_colpiv(&a, &b, 1e-13);
        let residual = (&a * &x - &b).amax();
        let quotient: Vec<Poly> = (0..p)
            .map(|j| Poly::new(x.rows(j * (d + 1), d + 1).iter().copied().collect()))
            .collect();
        if residual > tol {
            return Err(Error::DivisionFailure { residual, tol });
        }
        Ok((quotient, residual))
    }

    fn divide_constant(&self, g: &[Poly], deg_g: usize) -> Result<(Vec<Poly>, f64)> {
        let lu = self.coeffs[0].clone().lu();
        let mut cols = vec![Vec::with_capacity(deg_g + 1); self.size];
        for k in 0..=deg_g {
            let b = DVector::from_iterator(self.size, g.iter().map(|gi| gi.coeff(k)));
            let x = lu.solve(&b).ok_or(Error::NonRegular)?;
            for (c, v) in cols.iter_mut().zip(x.iter()) {
                c.push(*v);
            }
        }
        Ok((cols.into_iter().map(Poly::new).collect(), 0.0))
    }

    /// `R(x) Q(x)` for a column of scalar polynomials.
    pub fn apply(&self, q: &[Poly]) -> Vec<Poly> {
        (0..self.size)
            .map(|i| {
                let mut acc = Poly::zero();
                for (j, qj) in q.iter().enumerate() {
                    acc = &acc + &(&self.entry(i, j) * qj);
                }
                acc
            })
            .collect()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl Serialize for MatrixPolynomial {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_row_major().serialize(ser)
    }
}

impl<'de> Deserialize<'de> for MatrixPolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<Vec<f64>>::deserialize(de)?;
        let len = raw.first().map_or(0, Vec::len);
        let size = (len as f64).sqrt().round() as usize;
        MatrixPolynomial::from_row_major(size, &raw).map_err(serde::de::Error::custom)
    }
}
