//! Eigenvalues of `det R(x)` and canonical left Jordan chains.

use crate::error::{Error, Result};
use crate::linalg;
use crate::matpoly::MatrixPolynomial;
use crate::poly::Poly;
use nalgebra::{DMatrix, DVector, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Default cluster radius, relative to the spectral scale `max(1, max |root|)`.
pub const CLUSTER_RADIUS: f64 = 1e-6;

/// A distinct eigenvalue and its algebraic multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub value: Complex64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenData {
    pub roots: Vec<Root>,
    pub total: usize,
}

/// Left Jordan chains at one root; each chain is a list of row vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootChains {
    pub root: Complex64,
    pub chains: Vec<Vec<DVector<Complex64>>>,
}

impl RootChains {
    pub fn partial_multiplicities(&self) -> Vec<usize> {
        self.chains.iter().map(Vec::len).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JordanChainSet {
    pub roots: Vec<RootChains>,
}

impl JordanChainSet {
    /// Sum of all chain lengths.
    pub fn total_length(&self) -> usize {
        self.roots
            .iter()
            .flat_map(|r| r.chains.iter())
            .map(Vec::len)
            .sum()
    }

    /// Multiplies chain `j` at root `i` by `factor`.
    pub fn rescaled(&self, i: usize, j: usize, factor: Complex64) -> Self {
        let mut out = self.clone();
        for v in &mut out.roots[i].chains[j] {
            *v *= factor;
        }
        out
    }

    /// JSON layout: list of `{root: [re, im], chains: [[vector, ...], ...]}`
    /// with vectors as lists of `[re, im]` pairs.
    pub fn to_json(&self) -> serde_json::Value {
        let pair = |c: &Complex64| serde_json::json!([c.re, c.im]);
        serde_json::Value::Array(
            self.roots
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "root": pair(&r.root),
                        "chains": r.chains.iter().map(|chain| {
                            chain.iter().map(|v| v.iter().map(pair).collect::<Vec<_>>()).collect::<Vec<_>>()
                        }).collect::<Vec<_>>(),
                    })
                })
                .collect(),
        )
    }
}

/// Roots of `det R(x)` from companion-matrix eigenvalues, clustered into
/// groups of diameter below `cluster_radius * max(1, max |root|)`.
pub fn det_roots(r: &MatrixPolynomial, cluster_radius: f64) -> Result<EigenData> {
    let det = r.determinant()?;
    let raw = poly_roots(&det);
    let expected = match r.validate_structure() {
        Ok(rep) => rep.det_degree,
        Err(_) => det.degree(),
    };
    if raw.len() != expected {
        return Err(Error::RootCountMismatch {
            expected,
            found: raw.len(),
        });
    }
    let scale = raw.iter().fold(1.0f64, |m, z| m.max(z.norm()));
    let radius = cluster_radius * scale;
    let roots = cluster(&raw, radius);
    Ok(EigenData {
        total: raw.len(),
        roots,
    })
}

/// Eigenvalues of the companion matrix of `p`.
pub fn poly_roots(p: &Poly) -> Vec<Complex64> {
    let d = p.degree();
    if d == 0 {
        return Vec::new();
    }
    let lead = p.coeff(d);
    let comp = DMatrix::from_fn(d, d, |i, j| {
        if i == 0 {
            -p.coeff(d - 1 - j) / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    comp.complex_eigenvalues().iter().copied().collect()
}

fn cluster(raw: &[Complex64], radius: f64) -> Vec<Root> {
    let n = raw.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut i = i;
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (raw[i] - raw[j]).norm() < radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: Vec<(usize, Vec<Complex64>)> = Vec::new();
    for i in 0..n {
        let g = find(&mut parent, i);
        match groups.iter_mut().find(|(k, _)| *k == g) {
            Some((_, v)) => v.push(raw[i]),
            None => groups.push((g, vec![raw[i]])),
        }
    }
    let mut roots: Vec<Root> = groups
        .into_iter()
        .map(|(_, v)| {
            let mut mean = v.iter().sum::<Complex64>() / v.len() as f64;
            if mean.im.abs() < radius {
                mean.im = 0.0;
            }
            Root {
                value: mean,
                multiplicity: v.len(),
            }
        })
        .collect();
    roots.sort_by(|a, b| {
        a.value
            .re
            .total_cmp(&b.value.re)
            .then(a.value.im.total_cmp(&b.value.im))
    });
    roots
}

/// Block upper triangular Toeplitz matrix with block `(i, j) = T_{j-i}`.
fn toeplitz(taylor: &[DMatrix<Complex64>], k: usize) -> DMatrix<Complex64> {
    let p = taylor[0].nrows();
    let mut w = DMatrix::zeros(k * p, k * p);
    for i in 0..k {
        for j in i..k {
            w.view_mut((i * p, j * p), (p, p)).copy_from(&taylor[j - i]);
        }
    }
    w
}

/// Canonical set of left Jordan chains `v_0, .., v_{k-1}` with
/// `sum_{l<=i} v_{i-l} R^{(l)}(x0) / l! = 0`, longest chains first.
pub fn left_jordan_chains(
    r: &MatrixPolynomial,
    eig: &EigenData,
    rank_tol: f64,
) -> Result<JordanChainSet> {
    let roots = eig
        .roots
        .iter()
        .map(|root| chains_at(r, root, rank_tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(JordanChainSet { roots })
}

fn chains_at(r: &MatrixPolynomial, root: &Root, rank_tol: f64) -> Result<RootChains> {
    let p = r.size();
    let k_max = root.multiplicity;
    let x0 = root.value;
    let taylor: Vec<DMatrix<Complex64>> = (0..k_max).map(|l| r.taylor(x0, l)).collect();
    let scale = taylor
        .iter()
        .flat_map(|t| t.iter())
        .fold(r.norm_inf(), |m, c| m.max(c.norm()));

    // d[k] = dim of the left null space of the k-block Toeplitz matrix.
    let mut nulls: Vec<Vec<DVector<Complex64>>> = vec![Vec::new()];
    for k in 1..=k_max {
        let basis = linalg::left_null_space(&toeplitz(&taylor, k), rank_tol * scale);
        let grew = basis.len() > nulls[k - 1].len();
        nulls.push(basis);
        if !grew {
            break;
        }
    }
    let d: Vec<usize> = nulls.iter().map(Vec::len).collect();
    let top = d.len() - 1;
    let g = |k: usize| if k > top { 0 } else { d[k] - d[k - 1] };

    let mut leading: Vec<DVector<Complex64>> = Vec::new();
    let mut chains: Vec<Vec<DVector<Complex64>>> = Vec::new();
    for k in (1..=top).rev() {
        let exact = g(k).saturating_sub(g(k + 1));
        if exact == 0 {
            continue;
        }
        let basis = &nulls[k];
        // Leading blocks, deflated against the leading vectors already used.
        let v0 = DMatrix::from_fn(basis.len(), p, |i, a| {
            let mut v = basis[i].rows(0, p).clone_owned();
            for u in &leading {
                let proj = u.dotc(&v);
                v -= u * proj;
            }
            v[a]
        });
        let svd = SVD::new(v0, true, false);
        let u = svd.u.expect("requested U");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        for &c in order.iter().take(exact) {
            let mut full = DVector::<Complex64>::zeros(k * p);
            for (i, b) in basis.iter().enumerate() {
                full += b * u[(i, c)].conj();
            }
            let chain = normalize((0..k).map(|l| full.rows(l * p, p).clone_owned()).collect());
            let mut lead = chain[0].clone();
            for u in &leading {
                let proj = u.dotc(&lead);
                lead -= u * proj;
            }
            let nrm = lead.norm();
            if nrm > 0.0 {
                leading.push(lead / Complex64::from(nrm));
            }
            chains.push(chain);
        }
    }
    let found: usize = chains.iter().map(Vec::len).sum();
    if found != root.multiplicity {
        return Err(Error::ChainDeficiency {
            root: format!("{}", x0),
            expected: root.multiplicity,
            found,
        });
    }
    Ok(RootChains { root: x0, chains })
}

/// Scales the chain so the leading vector has unit max-norm and its first
/// significant entry is positive real.
fn normalize(mut chain: Vec<DVector<Complex64>>) -> Vec<DVector<Complex64>> {
    let v0 = &chain[0];
    let amax = v0.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    if amax == 0.0 {
        return chain;
    }
    let first = *v0
        .iter()
        .find(|c| c.norm() > 1e-8 * amax)
        .expect("nonzero vector");
    let factor = first.conj() / (first.norm() * amax);
    for v in &mut chain {
        *v *= factor;
        for c in v.iter_mut() {
            if c.im.abs() < 1e-15 * amax {
                c.im = 0.0;
            }
        }
    }
    chain
}

/// Largest defining residual `|| sum_{l<=i} v_{i-l} R^{(l)}(x0) / l! ||_inf`.
pub fn verify_chain(r: &MatrixPolynomial, x0: Complex64, chain: &[DVector<Complex64>]) -> f64 {
    let taylor: Vec<DMatrix<Complex64>> = (0..chain.len()).map(|l| r.taylor(x0, l)).collect();
    let mut worst: f64 = 0.0;
    for i in 0..chain.len() {
        let mut acc = DVector::<Complex64>::zeros(r.size()).transpose();
        for l in 0..=i {
            acc += chain[i - l].transpose() * &taylor[l];
        }
        worst = worst.max(acc.iter().fold(0.0, |m, c| m.max(c.norm())));
    }
    worst
}

/// Applies every chain of `chains` to the `p x m` polynomial matrix `g` and
/// returns the largest residual, each column scaled by
/// `max(1, sum |v| |G|^{(l)}(|x0|)/l!)` where `|G|` has the absolute
/// coefficients of `G` (the rounding bound of evaluating `G` at `x0`). Near
/// zero certifies that `R` left-divides `G`.
pub fn divisibility_check(g: &[Vec<Poly>], chains: &JordanChainSet) -> f64 {
    let p = g.len();
    let m = g.first().map_or(0, Vec::len);
    let mut worst: f64 = 0.0;
    for rc in &chains.roots {
        for chain in &rc.chains {
            let len = chain.len();
            // taylor[a][j][l] = G_{a,j}^{(l)}(x0) / l!
            let taylor: Vec<Vec<Vec<Complex64>>> = g
                .iter()
                .map(|row| row.iter().map(|e| e.taylor(rc.root, len - 1)).collect())
                .collect();
            let at = Complex64::new(rc.root.norm(), 0.0);
            let bound: Vec<Vec<Vec<Complex64>>> = g
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|e| Poly::new(e.coeffs().iter().map(|c| c.abs()).collect()).taylor(at, len - 1))
                        .collect()
                })
                .collect();
            for i in 0..len {
                for j in 0..m {
                    let mut acc = Complex64::new(0.0, 0.0);
                    let mut scale = 0.0;
                    for l in 0..=i {
                        for a in 0..p {
                            acc += chain[i - l][a] * taylor[a][j][l];
                            scale += chain[i - l][a].norm() * bound[a][j][l].re;
                        }
                    }
                    worst = worst.max(acc.norm() / scale.max(1.0));
                }
            }
        }
    }
    worst
}

/// Entries of a square matrix polynomial as a `p x p` table of polynomials.
pub fn as_table(r: &MatrixPolynomial) -> Vec<Vec<Poly>> {
    (0..r.size())
        .map(|i| (0..r.size()).map(|j| r.entry(i, j)).collect())
        .collect()
}
