//! One line per acceptance criterion. Exits non-zero if any fails.

use mmop_core::christoffel::{
    connect, kernel_connection_residual, left_perturb, right_perturb, ConnectionData,
    PipelineOptions,
};
use mmop_core::exec::Execution;
use mmop_core::fixtures::{self, Side};
use mmop_core::gaussborel::{factorize, FactorOptions, Factorization};
use mmop_core::matpoly::leading_pattern;
use mmop_core::measures::{hankel_residual, MomentMatrix, WeightGrid};
use mmop_core::mmop::{
    biorthogonality_residual, build_family, off_band, recurrence_matrix, OrthoFamily,
};
use mmop_core::oracle::{compare, direct_perturbed, omega_from_factors};
use mmop_core::spectral::{det_roots, left_jordan_chains, verify_chain};
use mmop_core::{Error, MatrixPolynomial, Poly, Tolerances};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check, Option<Duration>);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err(e: Error) -> String {
    e.to_string()
}

fn opts() -> PipelineOptions {
    PipelineOptions::default()
}

fn setup(grid: &WeightGrid, trunc: usize) -> Result<(MomentMatrix, Factorization, OrthoFamily), String> {
    let m = MomentMatrix::from_grid(grid, trunc, Execution::default()).map_err(err)?;
    let f = factorize(&m.entries, FactorOptions::default()).map_err(err)?;
    let fam = build_family(&f, grid.q, grid.p);
    Ok((m, f, fam))
}

fn poly_diff(a: &[Poly], b: &[Poly]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max(x.max_diff(y)))
}

fn rel_poly_diff(a: &[Poly], b: &[Poly]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, p| m.max(p.max_abs())).max(f64::MIN_POSITIVE);
    poly_diff(a, b) / scale
}

fn c1_spectral() -> Check {
    let r = fixtures::f2_perturbation(2.0);
    let det = r.determinant().map_err(err)?;
    let want = Poly::new(vec![1.0, -2.0, 1.0]);
    ensure(det.max_diff(&want) < 1e-12, format!("det R = {:?}", det.coeffs()))?;
    let eig = det_roots(&r, 1e-6).map_err(err)?;
    ensure(eig.roots.len() == 1, format!("{} distinct roots", eig.roots.len()))?;
    let root = &eig.roots[0];
    ensure(
        (root.value - Complex64::new(1.0, 0.0)).norm() < 1e-6 && root.multiplicity == 2,
        format!("root {} multiplicity {}", root.value, root.multiplicity),
    )?;
    let ch = left_jordan_chains(&r, &eig, 1e-8).map_err(err)?;
    let rc = &ch.roots[0];
    ensure(rc.partial_multiplicities() == vec![2], format!("partial multiplicities {:?}", rc.partial_multiplicities()))?;
    let chain = &rc.chains[0];
    let res = verify_chain(&r, rc.root, chain);
    ensure(res < 1e-10, format!("chain residual {res:e}"))?;
    // same flag as ((-1,-1,1), (0,1,0))
    let e0 = DVector::from_vec(vec![-1.0, -1.0, 1.0]).map(Complex64::from);
    let e1 = DVector::from_vec(vec![0.0, 1.0, 0.0]).map(Complex64::from);
    let lead = DMatrix::from_columns(&[chain[0].clone(), e0.clone()]);
    let span = DMatrix::from_columns(&[chain[0].clone(), chain[1].clone(), e0, e1]);
    let rank = |m: &DMatrix<Complex64>| {
        let sv = m.clone().svd(false, false).singular_values;
        sv.iter().filter(|s| **s > 1e-9 * sv[0]).count()
    };
    ensure(rank(&lead) == 1 && rank(&span) == 2, "chain spans a different flag")?;
    Ok(format!("det = x^2-2x+1, root 1 (mult 2), chain residual {res:.1e}"))
}

fn c2_legendre() -> Check {
    let (m, base, fam) = setup(&fixtures::f1_grid(), 12)?;
    let r = fixtures::f1_perturbation();
    let cd = right_perturb(&fam, &r, 4, opts()).map_err(err)?;
    let d = direct_perturbed(&m, &r, Side::Right, FactorOptions::default()).map_err(err)?;
    let tol = 1e-10;
    let near = |got: f64, want: f64, what: &str| ensure((got - want).abs() < tol, format!("{what} = {got}, expected {want}"));
    near(cd.tau.values[0], 0.5, "tau_0")?;
    near(cd.tau.values[1], 3.0, "tau_1")?;
    near(cd.omega[0][0], -1.0 / 6.0, "formula Omega_10")?;
    let om = omega_from_factors(&base.s, &d.factorization.s, 3);
    near(om[(1, 0)], -1.0 / 6.0, "oracle Omega_10")?;
    let b1 = Poly::new(vec![1.0 / 6.0, 1.0]);
    ensure(cd.b_hat[1][0].max_diff(&b1) < tol, "formula B^_1")?;
    ensure(d.family.b[1][0].max_diff(&b1) < tol, "oracle B^_1")?;
    near(cd.a_hat[0][0].coeff(0), -0.25, "formula A^_0")?;
    near(d.family.a[0][0].coeff(0), -0.25, "oracle A^_0")?;
    for (n, h) in [-4.0, -11.0 / 9.0].into_iter().enumerate() {
        near(cd.h_hat[n], h, "formula H^")?;
        near(d.factorization.h[n], h, "oracle H^")?;
    }
    Ok("tau, Omega_10, B^_1, A^_0, H^ match on both paths".into())
}

fn c3_mixed() -> Check {
    let (m, base, fam) = setup(&fixtures::f2_grid(), 15)?;
    let r = fixtures::f2_perturbation(2.0);
    let cd = right_perturb(&fam, &r, 9, opts()).map_err(err)?;
    let d = direct_perturbed(&m, &r, Side::Right, FactorOptions::default()).map_err(err)?;
    let rep = compare(&cd, &d, &base, 1e-6);
    ensure(rep.count >= 9, format!("only {} indices compared", rep.count))?;
    ensure(rep.b_hat < 1e-6, format!("B^ residual {:e}", rep.b_hat))?;
    ensure(rep.a_hat < 1e-6, format!("A^ residual {:e}", rep.a_hat))?;
    ensure(rep.omega < 1e-8, format!("Omega residual {:e}", rep.omega))?;
    let div = cd.divisibility.iter().fold(0.0, |m: f64, d| m.max(*d));
    ensure(div < 1e-8, format!("chain inheritance {div:e}"))?;
    Ok(format!(
        "B^ {:.1e}, A^ {:.1e}, Omega {:.1e}, inheritance {div:.1e}",
        rep.b_hat, rep.a_hat, rep.omega
    ))
}

fn random_f1(rng: &mut ChaCha8Rng) -> MatrixPolynomial {
    let deg = rng.random_range(1..=2);
    let mut c: Vec<f64> = (0..deg).map(|_| rng.random_range(-3.0..3.0)).collect();
    c.push(1.0);
    MatrixPolynomial::scalar(&c).expect("monic")
}

fn random_f2(rng: &mut ChaCha8Rng) -> MatrixPolynomial {
    let p = 3;
    let r = rng.random_range(0..p);
    let mut r0 = DMatrix::from_fn(p, p, |_, _| rng.random_range(-2.0..2.0));
    for i in p - r..p {
        for j in 0..r {
            r0[(i, j)] = if i - (p - r) == j { 1.0 } else { 0.0 };
        }
    }
    MatrixPolynomial::new(vec![r0, leading_pattern(p, r)]).expect("valid")
}

fn c4_existence() -> Check {
    // (a) engineered zero
    let (m, _, fam) = setup(&fixtures::f1_grid(), 12)?;
    let r = MatrixPolynomial::scalar(&[-1.0 / 3f64.sqrt(), 1.0]).map_err(err)?;
    let cd = right_perturb(&fam, &r, 8, opts()).map_err(err)?;
    ensure(cd.existence_failure == Some(2), format!("tau flag at {:?}", cd.existence_failure))?;
    match direct_perturbed(&m, &r, Side::Right, FactorOptions::default()) {
        Err(Error::QuasidefiniteFailure { order: 2, .. }) => {}
        other => return Err(format!("oracle: {:?}", other.map(|_| ()))),
    }

    // (b) random admissible perturbations
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let grids = [
        (fixtures::f1_grid(), setup(&fixtures::f1_grid(), 14)?),
        (fixtures::f2_grid(), setup(&fixtures::f2_grid(), 15)?),
    ];
    let (mut accepted, mut tries, mut worst) = (0, 0, 0.0f64);
    while accepted < 30 {
        tries += 1;
        ensure(tries <= 300, format!("only {accepted} admissible draws in 300"))?;
        let which = accepted % 2;
        let (_, (m, base, fam)) = &grids[which];
        let r = if which == 0 { random_f1(&mut rng) } else { random_f2(&mut rng) };
        let Ok(cd) = right_perturb(fam, &r, 9, opts()) else {
            continue;
        };
        if cd.tau.values.iter().take(9).any(|t| t.abs() <= 1e-6) || cd.len() < 9 {
            continue;
        }
        accepted += 1;
        let d = direct_perturbed(m, &r, Side::Right, FactorOptions::default())
            .map_err(|e| format!("oracle failed for admissible draw {accepted}: {e}"))?;
        let rep = compare(&cd, &d, base, tol.compare_tol);
        worst = worst.max(rep.worst);
        ensure(rep.pass, format!("draw {accepted}: comparison worst {:e}", rep.worst))?;
    }
    Ok(format!("tau_2 flag and oracle pivot 2; 30/{tries} random draws pass, worst {worst:.1e}"))
}

fn c5_structure() -> Check {
    let exec = Execution::default();
    let mut msg = Vec::new();
    for (name, grid) in [("F1", fixtures::f1_grid()), ("F2", fixtures::f2_grid()), ("F3", fixtures::f3_grid())] {
        // indices n <= 12
        let (m, f, fam) = setup(&grid, 13)?;
        let h = hankel_residual(&m);
        ensure(h == 0.0, format!("{name} Hankel residual {h:e}"))?;
        let bo = biorthogonality_residual(&fam, &grid, 13, exec).map_err(err)?;
        ensure(bo < 1e-8, format!("{name} biorthogonality {bo:e}"))?;
        let t = recurrence_matrix(&f, grid.q);
        let ob = off_band(&t, grid.q, grid.p);
        ensure(ob < 1e-10, format!("{name} recurrence off-band {ob:e}"))?;
        msg.push(format!("{name} bo {bo:.0e} band {ob:.0e}"));
    }
    let (_, _, fam) = setup(&fixtures::f2_grid(), 15)?;
    let r = fixtures::f2_perturbation(2.0);
    let cd = right_perturb(&fam, &r, 10, opts()).map_err(err)?;
    let np_r = r.degree() * r.size() - cd.structure.r;
    ensure(cd.band_width() == np_r && cd.m_total == np_r, format!("band {} vs Np-r = {np_r}", cd.band_width()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut kc: f64 = 0.0;
    for _ in 0..5 {
        let (x, y) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        for n in 2..=8 {
            kc = kc.max(kernel_connection_residual(&fam, &cd, &r, n, x, y));
        }
    }
    ensure(kc < 1e-7, format!("kernel connection {kc:e}"))?;
    Ok(format!("{}, band {np_r}, kernel {kc:.1e}", msg.join(", ")))
}

fn max_entry_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max)
}

fn families_diff(a: &[Vec<Poly>], b: &[Vec<Poly>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| poly_diff(x, y)).fold(0.0, f64::max)
}

fn c6_duality() -> Check {
    let grid = fixtures::f3_grid();
    let l = fixtures::f3_perturbation(2.0);
    let (m, base, _) = setup(&grid, 14)?;
    let left = left_perturb(&base, grid.q, grid.p, &l, 9, opts()).map_err(err)?;

    // right pipeline built from scratch on the transposed grid
    let gt = grid.transpose();
    let (mt, _, fam_t) = setup(&gt, 14)?;
    let right = right_perturb(&fam_t, &l.transpose(), 9, opts()).map_err(err)?;
    ensure(left.len() == right.len(), "lengths differ")?;
    let mut worst = max_entry_diff(&left.omega, &right.omega);
    for n in 0..left.len() {
        let a_from_b: Vec<Poly> = right.b_hat[n].iter().map(|c| c.scale(1.0 / right.h_hat[n])).collect();
        let b_from_a: Vec<Poly> = right.a_hat[n].iter().map(|c| c.scale(right.h_hat[n])).collect();
        worst = worst
            .max(rel_poly_diff(&left.a_hat[n], &a_from_b))
            .max(rel_poly_diff(&left.b_hat[n], &b_from_a))
            .max((left.h_hat[n] - right.h_hat[n]).abs() / right.h_hat[n].abs());
    }
    let dl = direct_perturbed(&m, &l, Side::Left, FactorOptions::default()).map_err(err)?;
    let dr = direct_perturbed(&mt, &l.transpose(), Side::Right, FactorOptions::default()).map_err(err)?;
    worst = worst
        .max((&dl.factorization.s - &dr.factorization.sbar).amax())
        .max((&dl.factorization.sbar - &dr.factorization.s).amax())
        .max((&dl.factorization.h - &dr.factorization.h).amax());
    ensure(worst < 1e-12, format!("left vs transposed right {worst:e}"))?;

    // scalar: left and right coincide exactly
    let (m1, b1, fam1) = setup(&fixtures::f1_grid(), 12)?;
    let r = fixtures::f1_perturbation();
    let cr = right_perturb(&fam1, &r, 6, opts()).map_err(err)?;
    let cl = left_perturb(&b1, 1, 1, &r, 6, opts()).map_err(err)?;
    let scalar = max_entry_diff(&cl.omega, &cr.omega)
        .max(families_diff(&cl.b_hat, &cr.b_hat))
        .max(families_diff(&cl.a_hat, &cr.a_hat))
        .max(max_entry_diff(std::slice::from_ref(&cl.h_hat), std::slice::from_ref(&cr.h_hat)));
    let sl = direct_perturbed(&m1, &r, Side::Left, FactorOptions::default()).map_err(err)?;
    let sr = direct_perturbed(&m1, &r, Side::Right, FactorOptions::default()).map_err(err)?;
    ensure(sl.factorization == sr.factorization, "scalar oracle left != right")?;
    ensure(scalar == 0.0, format!("scalar formula left vs right {scalar:e}"))?;
    Ok(format!("F3 duality {worst:.1e}, scalar left = right exactly"))
}

fn rel_cd_diff(a: &ConnectionData, b: &ConnectionData) -> f64 {
    let mut worst: f64 = 0.0;
    for (x, y) in a.omega.iter().zip(&b.omega) {
        let scale = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (u, v) in x.iter().zip(y) {
            worst = worst.max((u - v).abs() / scale);
        }
    }
    for n in 0..a.len().min(b.len()) {
        worst = worst
            .max(rel_poly_diff(&a.b_hat[n], &b.b_hat[n]))
            .max(rel_poly_diff(&a.a_hat[n], &b.a_hat[n]));
    }
    worst
}

fn c7_invariance() -> Check {
    let (_, _, fam) = setup(&fixtures::f2_grid(), 15)?;
    let r = fixtures::f2_perturbation(2.0);
    let base = right_perturb(&fam, &r, 9, opts()).map_err(err)?;
    let mut worst: f64 = 0.0;
    for factor in [Complex64::new(-3.5, 0.0), Complex64::new(0.25, 1.75)] {
        let chains = base.chains.rescaled(0, 0, factor);
        let cd = connect(&fam, &r, base.structure, base.eigen.clone(), chains, 9, opts()).map_err(err)?;
        ensure(cd.len() == base.len(), "rescaled run lost indices")?;
        worst = worst.max(rel_cd_diff(&cd, &base));
    }
    ensure(worst < 1e-10, format!("rescaling changed outputs by {worst:e}"))?;

    let id = MatrixPolynomial::identity(3);
    let cd = right_perturb(&fam, &id, 9, opts()).map_err(err)?;
    ensure(cd.omega_matrix(9) == DMatrix::identity(9, 9), "Omega != I for R = I")?;
    ensure(cd.tau.values.iter().all(|t| *t == 1.0), "tau != 1 for R = I")?;
    for n in 0..cd.len() {
        ensure(poly_diff(&cd.b_hat[n], &fam.b[n]) == 0.0, format!("B^_{n} != B_{n}"))?;
        ensure(poly_diff(&cd.a_hat[n], &fam.a[n]) == 0.0, format!("A^_{n} != A_{n}"))?;
        ensure(cd.h_hat[n] == fam.h[n], format!("H^_{n} != H_{n}"))?;
    }
    Ok(format!("rescaling {worst:.1e}; R = I exact"))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("1 F2 spectral reproduction", c1_spectral, Some(Duration::from_millis(100))),
        ("2 scalar Christoffel end-to-end", c2_legendre, Some(Duration::from_millis(100))),
        ("3 mixed F2 pipeline vs oracle", c3_mixed, Some(Duration::from_secs(2))),
        ("4 existence criterion", c4_existence, Some(Duration::from_secs(10))),
        ("5 structural invariants", c5_structure, Some(Duration::from_secs(5))),
        ("6 left/right duality", c6_duality, Some(Duration::from_secs(1))),
        ("7 invariance checks", c7_invariance, None),
    ];
    let mut failed = 0;
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(l)) if elapsed > l => Err(format!("took {elapsed:.2?}, limit {l:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS  criterion {name}: {detail} [{elapsed:.2?}]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name}: {detail} [{elapsed:.2?}]");
            }
        }
    }
    println!("{} of 7 criteria passed", 7 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
