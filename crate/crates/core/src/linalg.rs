//! Dense linear-algebra helpers on top of nalgebra.

use nalgebra::{ColPivQR, DMatrix, DVector, SVD};
use num_complex::Complex64;

/// Least-squares solution of `a x = b` by column-pivoted QR.
///
/// Columns whose pivot falls below `rel_tol * |r_00|` are treated as rank
/// deficient and their unknowns set to zero.
pub fn lstsq_colpiv(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> DVector<f64> {
    let n = a.ncols();
    if n == 0 {
        return DVector::zeros(0);
    }
    let qr = ColPivQR::new(a.clone());
    let mut rhs = b.clone();
    qr.q_tr_mul(&mut rhs);
    let r = qr.r();
    let k = r.nrows().min(n);
    let lead = r[(0, 0)].abs();
    let rank = (0..k)
        .take_while(|&i| r[(i, i)].abs() > rel_tol * lead && lead > 0.0)
        .count();
    let mut y = DVector::zeros(n);
    for i in (0..rank).rev() {
        let mut acc = rhs[i];
        for j in i + 1..rank {
            acc -= r[(i, j)] * y[j];
        }
        y[i] = acc / r[(i, i)];
    }
    qr.p().inv_permute_rows(&mut y);
    y
}

/// Inverse of a unit lower triangular matrix by forward substitution.
pub fn unit_lower_inverse(s: &DMatrix<f64>) -> DMatrix<f64> {
    let n = s.nrows();
    let mut inv = DMatrix::identity(n, n);
    for j in 0..n {
        for i in j + 1..n {
            let mut acc = 0.0;
            for k in j..i {
                acc += s[(i, k)] * inv[(k, j)];
            }
            inv[(i, j)] = -acc;
        }
    }
    inv
}

/// Determinant of a small real matrix (1 for the empty matrix).
pub fn det(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    m.clone().lu().determinant()
}

/// Basis of the left null space `{ v : v w = 0 }` of a square complex matrix,
/// one row vector per returned entry. Singular values up to `cutoff` count
/// as zero.
pub fn left_null_space(w: &DMatrix<Complex64>, cutoff: f64) -> Vec<DVector<Complex64>> {
    let n = w.nrows();
    if n == 0 {
        return Vec::new();
    }
    // v w = 0  <=>  w^T v^T = 0, so use the right null space of w^T.
    let svd = SVD::new(w.transpose(), false, true);
    let v_t = svd.v_t.expect("requested V^H");
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= cutoff)
        .map(|(i, _)| v_t.row(i).transpose().map(|c| c.conj()))
        .collect()
}

/// `n` Chebyshev points of the first kind on `[-1, 1]`.
pub fn chebyshev_points(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| (std::f64::consts::PI * (2 * k + 1) as f64 / (2 * n) as f64).cos())
        .collect()
}

/// Monomial coefficients of the polynomial of degree `< xs.len()` through the
/// given points.
pub fn interpolate(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let v = DMatrix::from_fn(n, n, |i, j| xs[i].powi(j as i32));
    let rhs = DVector::from_column_slice(ys);
    v.lu()
        .solve(&rhs)
        .map(|c| c.iter().copied().collect())
        .unwrap_or_else(|| vec![0.0; n])
}
