//! Christoffel formulas: sampled values, tau determinants, the connection
//! matrix and the perturbed families.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fixtures::Side;
use crate::gaussborel::Factorization;
use crate::linalg;
use crate::matpoly::{MatrixPolynomial, StructureReport};
use crate::mmop::{self, build_family, OrthoFamily};
use crate::poly::Poly;
use crate::spectral::{self, EigenData, JordanChainSet};
use crate::tolerances::Tolerances;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Which part of a complex sample a row carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Re,
    Im,
}

/// Origin of one row of the sample table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub root: Complex64,
    pub chain: usize,
    pub level: usize,
    pub part: Part,
}

/// Rows are spectral samples, columns the index `n`.
///
/// A real root contributes one row per chain vector. A conjugate pair
/// contributes the real and imaginary parts of the samples at the root in
/// the upper half plane; this multiplies every `tau` by the same nonzero
/// constant and leaves all ratios unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTable {
    pub rows: Vec<SampleRow>,
    pub values: DMatrix<f64>,
}

/// Fills the table for columns `0..ncols`.
pub fn sample_table(
    fam: &OrthoFamily,
    chains: &JordanChainSet,
    ncols: usize,
    exec: Execution,
) -> SampleTable {
    let mut rows = Vec::new();
    let mut sources = Vec::new();
    for rc in &chains.roots {
        if rc.root.im < 0.0 {
            continue;
        }
        let parts: &[Part] = if rc.root.im == 0.0 {
            &[Part::Re]
        } else {
            &[Part::Re, Part::Im]
        };
        for (j, chain) in rc.chains.iter().enumerate() {
            for level in 0..chain.len() {
                for &part in parts {
                    rows.push(SampleRow {
                        root: rc.root,
                        chain: j,
                        level,
                        part,
                    });
                    sources.push((rc.root, chain.clone(), level, part));
                }
            }
        }
    }
    let cols = exec.map(ncols, |n| {
        sources
            .iter()
            .map(|(x0, chain, level, part)| {
                let v = fam.sample(n, *x0, chain, *level);
                match part {
                    Part::Re => v.re,
                    Part::Im => v.im,
                }
            })
            .collect::<Vec<f64>>()
    });
    let m = rows.len();
    let values = DMatrix::from_fn(m, ncols, |i, n| cols[n][i]);
    SampleTable { rows, values }
}

impl SampleTable {
    pub fn m_total(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    fn columns(&self, idx: impl Iterator<Item = usize>) -> DMatrix<f64> {
        let idx: Vec<usize> = idx.collect();
        DMatrix::from_fn(self.m_total(), idx.len(), |i, j| self.values[(i, idx[j])])
    }

    /// Hadamard bound on the determinant of the given columns.
    fn hadamard(&self, idx: impl Iterator<Item = usize>) -> f64 {
        idx.map(|n| self.values.column(n).norm()).product()
    }
}

/// `tau_n = det [A_n .. A_{n+M-1}]` (1 when `M = 0`).
pub fn tau(table: &SampleTable, n: usize) -> f64 {
    let m = table.m_total();
    linalg::det(&table.columns(n..n + m))
}

/// `tau_n^{(k)}`: determinant of `[A_n .. A_{n+M}]` without column `n + k`.
pub fn tau_minor(table: &SampleTable, n: usize, k: usize) -> f64 {
    let m = table.m_total();
    linalg::det(&table.columns((n..=n + m).filter(|&c| c != n + k)))
}

/// Entries `Omega_{n+1+i, n}`, `i < M`, from
/// `[A_{n+1} .. A_{n+M}] w = -A_n`.
pub fn omega_column(table: &SampleTable, n: usize) -> Result<Vec<f64>> {
    let m = table.m_total();
    if m == 0 {
        return Ok(Vec::new());
    }
    let block = table.columns(n + 1..n + 1 + m);
    let bound = table.hadamard(n + 1..n + 1 + m);
    let lu = block.lu();
    if !(lu.determinant().abs() > 1e-14 * bound) {
        return Err(Error::SingularSystem { n });
    }
    let rhs = -table.values.column(n).into_owned();
    let w = lu.solve(&rhs).ok_or(Error::SingularSystem { n })?;
    Ok(w.iter().copied().collect())
}

/// `|Omega_{n+M,n} - (-1)^M tau_n / tau_{n+1}| / |tau_n / tau_{n+1}|`.
pub fn tau_consistency(table: &SampleTable, omega: &[f64], n: usize) -> f64 {
    let m = table.m_total();
    if m == 0 {
        return 0.0;
    }
    let ratio = tau(table, n) / tau(table, n + 1);
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    (omega[m - 1] - sign * ratio).abs() / ratio.abs()
}

/// Agreement of a solved column with the two readings of the Cramer
/// expressions for the subdiagonal entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CramerCheck {
    /// `(-1)^{i+1} tau_n^{(i+1)} / tau_{n+1}`.
    pub shifted: f64,
    /// `(-1)^{i+1} tau_n^{(i)} / tau_{n+1}`.
    pub literal: f64,
}

pub fn cramer_check(table: &SampleTable, omega: &[f64], n: usize) -> CramerCheck {
    let m = table.m_total();
    let den = tau_minor(table, n, 0);
    let scale = omega.iter().fold(0.0f64, |s, w| s.max(w.abs())).max(f64::MIN_POSITIVE);
    let mut shifted: f64 = 0.0;
    let mut literal: f64 = 0.0;
    for i in 0..m {
        let sign = if i % 2 == 0 { -1.0 } else { 1.0 };
        shifted = shifted.max((omega[i] - sign * tau_minor(table, n, i + 1) / den).abs() / scale);
        literal = literal.max((omega[i] - sign * tau_minor(table, n, i) / den).abs() / scale);
    }
    CramerCheck { shifted, literal }
}

/// `tau_n` values with zero flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauSequence {
    pub values: Vec<f64>,
    pub flags: Vec<bool>,
}

impl TauSequence {
    pub fn first_flag(&self) -> Option<usize> {
        self.flags.iter().position(|&f| f)
    }
}

/// `tau_n` for `n < count`; `tau_n` is flagged when it falls below
/// `tau_tol` times the geometric mean of its neighbours' magnitudes.
pub fn existence_scan(table: &SampleTable, count: usize, tau_tol: f64) -> TauSequence {
    let count = count.min(table.ncols() + 1 - table.m_total());
    let values: Vec<f64> = (0..count).map(|n| tau(table, n)).collect();
    let flags = (0..count)
        .map(|n| {
            let neigh: Vec<f64> = [n.checked_sub(1), Some(n + 1)]
                .into_iter()
                .flatten()
                .filter(|&k| k < count)
                .map(|k| values[k].abs())
                .collect();
            let scale = if neigh.is_empty() {
                1.0
            } else {
                (neigh.iter().map(|v| v.ln()).sum::<f64>() / neigh.len() as f64).exp()
            };
            !(values[n].abs() > tau_tol * scale)
        })
        .collect();
    TauSequence { values, flags }
}

/// `B̂_{n-1}^{(b)}` for all `b`, as `det [K | A_n .. A_{n+M-2}] / tau_{n-1}`
/// expanded along the kernel column.
pub fn perturbed_b(table: &SampleTable, fam: &OrthoFamily, n: usize) -> Result<Vec<Poly>> {
    let m = table.m_total();
    if m == 0 {
        return Ok(fam.b[n - 1].clone());
    }
    let rest = table.columns(n..n + m - 1);
    let cof: Vec<f64> = (0..m)
        .map(|r| {
            let minor = rest.clone().remove_row(r);
            let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
            sign * linalg::det(&minor)
        })
        .collect();
    let tau_prev: f64 = (0..m).map(|r| cof[r] * table.values[(r, n - 1)]).sum();
    let bound = table.hadamard(n - 1..n + m - 1);
    if !(tau_prev.abs() > 1e-14 * bound) {
        return Err(Error::ExistenceFailure { n: n - 1 });
    }
    let mut out = vec![Poly::zero(); fam.q];
    for r in 0..m {
        let weights: Vec<f64> = (0..n).map(|i| table.values[(r, i)]).collect();
        let slice = mmop::kernel_slice_from_weights(fam, n, &weights);
        for (o, s) in out.iter_mut().zip(&slice.components) {
            o.axpy(cof[r] / tau_prev, s);
        }
    }
    Ok(out)
}

/// Output of the `A` side formula at one index.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedA {
    /// `[R Â]_n = det [A | sampled block] / tau_{n+1}`.
    pub product: Vec<Poly>,
    pub quotient: Vec<Poly>,
    /// Scaled Jordan-chain residual of the product.
    pub divisibility: f64,
    /// Absolute coefficient mismatch of the left division.
    pub division_residual: f64,
}

/// Weights `(-1)^k tau_n^{(k)} / tau_{n+1}`, `k = 0..=M`, of `A_{n+k}` in
/// the product.
fn product_weights(table: &SampleTable, n: usize) -> Result<Vec<f64>> {
    let m = table.m_total();
    let den = tau_minor(table, n, 0);
    let bound = table.hadamard(n + 1..n + 1 + m);
    if !(den.abs() > 1e-14 * bound) {
        return Err(Error::ExistenceFailure { n: n + 1 });
    }
    Ok((0..=m)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            if k == 0 {
                1.0
            } else {
                sign * tau_minor(table, n, k) / den
            }
        })
        .collect())
}

pub fn perturbed_a(
    table: &SampleTable,
    fam: &OrthoFamily,
    chains: &JordanChainSet,
    r: &MatrixPolynomial,
    n: usize,
    division_tol: f64,
) -> Result<PerturbedA> {
    let w = product_weights(table, n)?;
    let mut product = vec![Poly::zero(); fam.p];
    for (k, wk) in w.iter().enumerate() {
        for (g, a) in product.iter_mut().zip(&fam.a[n + k]) {
            g.axpy(*wk, a);
        }
    }
    let column: Vec<Vec<Poly>> = product.iter().map(|g| vec![g.clone()]).collect();
    let divisibility = spectral::divisibility_check(&column, chains);
    let scale = product.iter().fold(0.0f64, |m, g| m.max(g.max_abs())).max(1.0);
    let (quotient, division_residual) = r.left_divide(&product, division_tol * scale)?;
    Ok(PerturbedA {
        product,
        quotient,
        divisibility,
        division_residual,
    })
}

/// `1 / [Â_n]` at interleaved index `n`.
pub fn h_hat_from(quotient: &[Poly], n: usize, p: usize) -> f64 {
    1.0 / quotient[n % p].coeff(n / p)
}

/// `Ĥ_n = H_{n+M} / Omega_{n+M, n}`, from the top coefficient of
/// `A(x) Omega = R(x) Â(x)`.
pub fn h_hat_from_omega(fam: &OrthoFamily, omega: &[f64], n: usize) -> f64 {
    match omega.last() {
        Some(w) => fam.h[n + omega.len()] / w,
        None => fam.h[n],
    }
}

/// Everything the formula path produces for one perturbation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionData {
    pub side: Side,
    pub structure: StructureReport,
    pub m_total: usize,
    pub eigen: EigenData,
    pub chains: JordanChainSet,
    pub tau: TauSequence,
    /// Column `n` holds `Omega_{n+1+i, n}`, `i < M`.
    pub omega: Vec<Vec<f64>>,
    pub b_hat: Vec<Vec<Poly>>,
    pub a_hat: Vec<Vec<Poly>>,
    pub h_hat: Vec<f64>,
    /// `[R Â]_n` before division.
    pub products: Vec<Vec<Poly>>,
    pub divisibility: Vec<f64>,
    pub division_residuals: Vec<f64>,
    pub tau_consistency: Vec<f64>,
    pub cramer: Vec<CramerCheck>,
    /// First index whose `tau` vanishes, if any; later entries are absent.
    pub existence_failure: Option<usize>,
}

impl ConnectionData {
    /// Number of complete perturbed indices (Ω column, B̂, Â and Ĥ).
    pub fn len(&self) -> usize {
        self.h_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h_hat.is_empty()
    }

    /// Dense unit lower triangular `Omega` of size `k`.
    pub fn omega_matrix(&self, k: usize) -> DMatrix<f64> {
        let mut o = DMatrix::identity(k, k);
        for (n, col) in self.omega.iter().enumerate().take(k) {
            for (i, w) in col.iter().enumerate() {
                if n + 1 + i < k {
                    o[(n + 1 + i, n)] = *w;
                }
            }
        }
        o
    }

    /// Families of the transposed problem: `Â <- B̂ / Ĥ`, `B̂ <- Ĥ Â`.
    /// Applying it twice gives back the original up to rounding. Indices
    /// lacking either family are dropped.
    pub fn mirrored(&self) -> ConnectionData {
        let k = self.h_hat.len().min(self.b_hat.len());
        let scale = |fam: &[Vec<Poly>], s: &dyn Fn(usize) -> f64| -> Vec<Vec<Poly>> {
            (0..k)
                .map(|n| fam[n].iter().map(|c| c.scale(s(n))).collect())
                .collect()
        };
        ConnectionData {
            a_hat: scale(&self.b_hat, &|n| 1.0 / self.h_hat[n]),
            b_hat: scale(&self.a_hat, &|n| self.h_hat[n]),
            ..self.clone()
        }
    }

    /// Number of nonzero subdiagonals in the solved band.
    pub fn band_width(&self) -> usize {
        self.omega
            .iter()
            .filter_map(|c| c.iter().rposition(|&w| w != 0.0).map(|i| i + 1))
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PipelineOptions {
    pub tol: Tolerances,
    pub exec: Execution,
}

/// Right perturbation `dmu R` for indices `0..count`. Needs
/// `fam.len() >= count + M`.
pub fn right_perturb(
    fam: &OrthoFamily,
    r: &MatrixPolynomial,
    count: usize,
    opts: PipelineOptions,
) -> Result<ConnectionData> {
    let structure = r.validate_structure()?;
    let eigen = spectral::det_roots(r, opts.tol.cluster_radius)?;
    let chains = spectral::left_jordan_chains(r, &eigen, opts.tol.rank_tol)?;
    connect(fam, r, structure, eigen, chains, count, opts)
}

/// Right pipeline with caller-supplied spectral data.
pub fn connect(
    fam: &OrthoFamily,
    r: &MatrixPolynomial,
    structure: StructureReport,
    eigen: EigenData,
    chains: JordanChainSet,
    count: usize,
    opts: PipelineOptions,
) -> Result<ConnectionData> {
    if r.size() != fam.p {
        return Err(Error::Shape(format!(
            "perturbation of size {} for p = {}",
            r.size(),
            fam.p
        )));
    }
    let m = structure.det_degree;
    if fam.len() < count + m {
        return Err(Error::TruncationTooSmall {
            needed: count + m,
            got: fam.len(),
        });
    }
    let table = sample_table(fam, &chains, count + m, opts.exec);
    debug_assert_eq!(table.m_total(), m);
    let tau = existence_scan(&table, count + 1, opts.tol.tau_tol);
    let failure = tau.first_flag();
    if let Some(n) = failure {
        log::warn!("tau vanishes at n = {n}");
    }
    // B̂_n needs tau_n; Ω column n and Â_n need tau_{n+1}.
    let n_b = failure.unwrap_or(count).min(count);
    let n_a = failure.map_or(count, |f| f.saturating_sub(1)).min(count);

    let b_hat = opts
        .exec
        .try_map(n_b, |n| perturbed_b(&table, fam, n + 1))?;
    let omega = opts.exec.try_map(n_a, |n| omega_column(&table, n))?;
    let a_side = opts
        .exec
        .try_map(n_a, |n| perturbed_a(&table, fam, &chains, r, n, opts.tol.division_tol))?;
    let tau_consistency = (0..n_a)
        .map(|n| tau_consistency(&table, &omega[n], n))
        .collect();
    let cramer = (0..n_a).map(|n| cramer_check(&table, &omega[n], n)).collect();
    let h_hat = omega
        .iter()
        .enumerate()
        .map(|(n, w)| h_hat_from_omega(fam, w, n))
        .collect();
    Ok(ConnectionData {
        side: Side::Right,
        structure,
        m_total: m,
        eigen,
        chains,
        tau,
        omega,
        b_hat,
        h_hat,
        divisibility: a_side.iter().map(|a| a.divisibility).collect(),
        division_residuals: a_side.iter().map(|a| a.division_residual).collect(),
        products: a_side.iter().map(|a| a.product.clone()).collect(),
        a_hat: a_side.into_iter().map(|a| a.quotient).collect(),
        tau_consistency,
        cramer,
        existence_failure: failure,
    })
}

/// Left perturbation `L dmu`, computed as the right perturbation of the
/// transposed grid by `L^T` and mapped back. `f` factors the unperturbed
/// `q x p` moment matrix. `omega` then holds the band of `S̄ Ŝ̄^{-1}`.
pub fn left_perturb(
    f: &Factorization,
    q: usize,
    p: usize,
    l: &MatrixPolynomial,
    count: usize,
    opts: PipelineOptions,
) -> Result<ConnectionData> {
    if q == 1 && p == 1 {
        // a scalar factor commutes with the measure
        let mut cd = right_perturb(&build_family(f, 1, 1), l, count, opts)?;
        cd.side = Side::Left;
        return Ok(cd);
    }
    let fam_t = build_family(&f.transpose(), p, q);
    let mut cd = right_perturb(&fam_t, &l.transpose(), count, opts)?.mirrored();
    cd.side = Side::Left;
    Ok(cd)
}

/// Runs the right pipeline for many perturbations of the same family.
pub fn scan_perturbations(
    fam: &OrthoFamily,
    rs: &[MatrixPolynomial],
    count: usize,
    opts: PipelineOptions,
) -> Vec<Result<ConnectionData>> {
    let inner = PipelineOptions {
        exec: Execution::Sequential,
        ..opts
    };
    opts.exec
        .map(rs.len(), |i| right_perturb(fam, &rs[i], count, inner))
}

/// Residual of `R(x) K̂^{[n]}(x, y) = K^{[n]}(x, y) + sum_{j<M}
/// sum_{i=1}^{M-j} A_{n+j}(x) Omega_{n+j, n-i} B̂_{n-i}(y)`, relative to
/// the magnitude of the right-hand side terms.
pub fn kernel_connection_residual(
    fam: &OrthoFamily,
    cd: &ConnectionData,
    r: &MatrixPolynomial,
    n: usize,
    x: f64,
    y: f64,
) -> f64 {
    let m = cd.m_total;
    let (p, q) = (fam.p, fam.q);
    // K̂^{[n]} from the perturbed families
    let mut khat = DMatrix::zeros(p, q);
    for i in 0..n {
        let a: Vec<f64> = cd.a_hat[i].iter().map(|c| c.eval(x)).collect();
        let b: Vec<f64> = cd.b_hat[i].iter().map(|c| c.eval(y)).collect();
        for s in 0..p {
            for t in 0..q {
                khat[(s, t)] += a[s] * b[t];
            }
        }
    }
    let lhs = r.evaluate(x, 0) * khat;
    let mut rhs = mmop::cd_kernel(fam, n, x, y);
    let mut scale = rhs.amax();
    for j in 0..m {
        let ax = fam.eval_a(n + j, x);
        for i in 1..=m - j {
            if i > n {
                continue;
            }
            let col = n - i;
            let w = cd.omega[col][j + i - 1];
            let b: Vec<f64> = cd.b_hat[col].iter().map(|c| c.eval(y)).collect();
            for s in 0..p {
                for t in 0..q {
                    let term = ax[s] * w * b[t];
                    rhs[(s, t)] += term;
                    scale = scale.max(term.abs());
                }
            }
        }
    }
    (lhs - rhs).amax() / scale.max(1.0)
}

/// `A(x) Omega` on columns `0..k` as a `p x k` table of polynomials.
pub fn a_times_omega(fam: &OrthoFamily, cd: &ConnectionData, k: usize) -> Vec<Vec<Poly>> {
    (0..fam.p)
        .map(|a| {
            (0..k)
                .map(|n| {
                    let mut acc = fam.a[n][a].clone();
                    for (i, w) in cd.omega[n].iter().enumerate() {
                        acc.axpy(*w, &fam.a[n + 1 + i][a]);
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// Largest `|(A Omega - R Â)(x)|` over `xs`, relative to `|A Omega|`.
pub fn a_connection_residual(
    fam: &OrthoFamily,
    cd: &ConnectionData,
    r: &MatrixPolynomial,
    xs: &[f64],
) -> f64 {
    let k = cd.a_hat.len();
    let aw = a_times_omega(fam, cd, k);
    let mut worst: f64 = 0.0;
    for &x in xs {
        let rx = r.evaluate(x, 0);
        for n in 0..k {
            let ah = DVector::from_iterator(fam.p, cd.a_hat[n].iter().map(|c| c.eval(x)));
            let rah = &rx * ah;
            let lhs: Vec<f64> = (0..fam.p).map(|a| aw[a][n].eval(x)).collect();
            let scale = lhs.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
            for a in 0..fam.p {
                worst = worst.max((lhs[a] - rah[a]).abs() / scale);
            }
        }
    }
    worst
}

/// Largest `|(Omega B̂ - B)(x)|` over rows whose band fits the data.
pub fn b_connection_residual(fam: &OrthoFamily, cd: &ConnectionData, xs: &[f64]) -> f64 {
    let k = cd.omega.len().min(cd.b_hat.len());
    let mut worst: f64 = 0.0;
    for &x in xs {
        for row in 0..k {
            for b in 0..fam.q {
                let mut acc = cd.b_hat[row][b].eval(x);
                let mut scale = acc.abs();
                for col in row.saturating_sub(cd.m_total)..row {
                    let w = cd.omega[col][row - col - 1];
                    let term = w * cd.b_hat[col][b].eval(x);
                    acc += term;
                    scale = scale.max(term.abs());
                }
                let target = fam.b[row][b].eval(x);
                worst = worst.max((acc - target).abs() / scale.max(target.abs()).max(1.0));
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::gaussborel::{factorize, FactorOptions};
    use crate::measures::MomentMatrix;
    use approx::assert_abs_diff_eq;

    const EX: Execution = Execution::Sequential;

    fn opts() -> PipelineOptions {
        PipelineOptions { exec: EX, ..Default::default() }
    }

    fn family(grid: &crate::measures::WeightGrid, t: usize) -> OrthoFamily {
        let m = MomentMatrix::from_grid(grid, t, EX).unwrap();
        build_family(&factorize(&m.entries, FactorOptions::default()).unwrap(), grid.q, grid.p)
    }

    #[test]
    fn legendre_shifted_by_two() {
        let fam = family(&fixtures::f1_grid(), 12);
        let r = fixtures::f1_perturbation();
        let cd = right_perturb(&fam, &r, 10, opts()).unwrap();
        assert_abs_diff_eq!(cd.tau.values[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(cd.tau.values[1], 3.0, epsilon = 1e-13);
        assert!(cd.tau.flags.iter().all(|f| !f));
        assert_abs_diff_eq!(cd.omega[0][0], -1.0 / 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(cd.b_hat[1][0].coeff(0), 1.0 / 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(cd.b_hat[1][0].coeff(1), 1.0, epsilon = 1e-14);
        assert_eq!(cd.b_hat[0][0].coeffs(), &[1.0]);
        assert_abs_diff_eq!(cd.products[0][0].coeff(0), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(cd.products[0][0].coeff(1), -0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(cd.a_hat[0][0].coeff(0), -0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(cd.h_hat[0], -4.0, epsilon = 1e-13);
        assert_abs_diff_eq!(cd.h_hat[1], -11.0 / 9.0, epsilon = 1e-13);
        assert_eq!(cd.band_width(), 1);
        for n in 0..10 {
            assert!(cd.tau_consistency[n] < 1e-13);
        }
    }

    #[test]
    fn engineered_tau_zero() {
        let fam = family(&fixtures::f1_grid(), 12);
        let r = MatrixPolynomial::scalar(&[-1.0 / 3f64.sqrt(), 1.0]).unwrap();
        let cd = right_perturb(&fam, &r, 8, opts()).unwrap();
        assert_eq!(cd.existence_failure, Some(2));
        assert_eq!(cd.tau.flags.iter().filter(|&&f| f).count(), 1);
        assert_eq!(cd.b_hat.len(), 2);
        assert_eq!(cd.h_hat.len(), 1);
    }

    #[test]
    fn identity_perturbation() {
        let fam = family(&fixtures::f2_grid(), 10);
        let cd = right_perturb(&fam, &MatrixPolynomial::identity(3), 8, opts()).unwrap();
        assert_eq!(cd.m_total, 0);
        assert!(cd.tau.values.iter().all(|&t| t == 1.0));
        assert!(cd.omega.iter().all(Vec::is_empty));
        assert_eq!(cd.omega_matrix(5), DMatrix::identity(5, 5));
        for n in 0..8 {
            assert_eq!(cd.b_hat[n], fam.b[n]);
            for (x, y) in cd.a_hat[n].iter().zip(&fam.a[n]) {
                assert_eq!(x.coeffs()[..y.coeffs().len()], y.coeffs()[..]);
            }
        }
    }

    #[test]
    fn f2_sample_rows() {
        let fam = family(&fixtures::f2_grid(), 10);
        let r = fixtures::f2_perturbation(2.0);
        let eig = spectral::det_roots(&r, 1e-6).unwrap();
        let ch = spectral::left_jordan_chains(&r, &eig, 1e-8).unwrap();
        let t = sample_table(&fam, &ch, 6, EX);
        assert_eq!(t.m_total(), 2);
        // compare with the hand-written rows for the chain (-1,-1,1), (0,1,0)
        // after normalization: chain = -(-1,-1,1), -(0,1,0) + c v0
        let v0 = &ch.roots[0].chains[0][0];
        let sign = v0[2].re;
        for n in 0..6 {
            let a: Vec<Poly> = fam.a[n].clone();
            let row0 = -a[0].eval(1.0) - a[1].eval(1.0) + a[2].eval(1.0);
            assert!((t.values[(0, n)] - sign * row0).abs() < 1e-9 * (1.0 + row0.abs()));
        }
    }

    #[test]
    fn f2_connection_identities() {
        let fam = family(&fixtures::f2_grid(), 15);
        let r = fixtures::f2_perturbation(2.0);
        let cd = right_perturb(&fam, &r, 9, opts()).unwrap();
        assert_eq!(cd.existence_failure, None);
        assert_eq!(cd.band_width(), 2);
        let xs = [-0.9, -0.3, 0.2, 0.8];
        assert!(a_connection_residual(&fam, &cd, &r, &xs) < 1e-8);
        assert!(b_connection_residual(&fam, &cd, &xs) < 1e-8);
        for n in 2..8 {
            assert!(kernel_connection_residual(&fam, &cd, &r, n, 0.4, -0.6) < 1e-7);
        }
        for c in &cd.cramer {
            assert!(c.shifted < 1e-8, "{c:?}");
        }
        for d in &cd.divisibility {
            assert!(*d < 1e-8);
        }
    }
}
