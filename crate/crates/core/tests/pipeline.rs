use mmop_core::christoffel::{
    a_connection_residual, b_connection_residual, left_perturb, right_perturb, scan_perturbations,
    PipelineOptions,
};
use mmop_core::exec::Execution;
use mmop_core::fixtures::{self, Fixture, Side};
use mmop_core::gaussborel::{factorize, FactorOptions, Precision};
use mmop_core::matpoly::leading_pattern;
use mmop_core::measures::MomentMatrix;
use mmop_core::mmop::build_family;
use mmop_core::oracle::{compare, direct_perturbed};
use mmop_core::MatrixPolynomial;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn family(fixture: Fixture, trunc: usize) -> (MomentMatrix, mmop_core::gaussborel::Factorization) {
    let grid = fixture.problem(2.0).grid;
    let m = MomentMatrix::from_grid(&grid, trunc, Execution::Sequential).unwrap();
    let f = factorize(&m.entries, FactorOptions::default()).unwrap();
    (m, f)
}

#[test]
fn sequential_and_parallel_agree() {
    let (_, f) = family(Fixture::F2, 15);
    let fam = build_family(&f, 1, 3);
    let r = fixtures::f2_perturbation(2.0);
    let seq = right_perturb(&fam, &r, 9, PipelineOptions { exec: Execution::Sequential, ..Default::default() }).unwrap();
    let par = right_perturb(&fam, &r, 9, PipelineOptions { exec: Execution::Parallel, ..Default::default() }).unwrap();
    assert_eq!(seq, par);
}

#[test]
fn extended_precision_oracle_agrees() {
    let (m, f) = family(Fixture::F2, 15);
    let ext = factorize(
        &m.entries,
        FactorOptions { precision: Precision::Extended, ..Default::default() },
    )
    .unwrap();
    assert!((&ext.s - &f.s).amax() < 1e-8);
    let rel = ext.h.zip_map(&f.h, |a, b| (a - b).abs() / a.abs()).amax();
    assert!(rel < 1e-8, "{rel}");
}

#[test]
fn f3_left_pipeline_matches_oracle() {
    let (m, f) = family(Fixture::F3, 14);
    let l = fixtures::f3_perturbation(2.0);
    let cd = left_perturb(&f, 2, 1, &l, 9, PipelineOptions::default()).unwrap();
    assert_eq!(cd.side, Side::Left);
    let d = direct_perturbed(&m, &l, Side::Left, FactorOptions::default()).unwrap();
    let rep = compare(&cd, &d, &f, 1e-7);
    assert!(rep.pass, "{rep:?}");
}

#[test]
fn connection_identities_for_other_b() {
    let (m, f) = family(Fixture::F2, 15);
    let fam = build_family(&f, 1, 3);
    let r = fixtures::f2_perturbation(1.5);
    let cd = right_perturb(&fam, &r, 8, PipelineOptions::default()).unwrap();
    let xs = [-0.7, 0.1, 0.9];
    assert!(a_connection_residual(&fam, &cd, &r, &xs) < 1e-8);
    assert!(b_connection_residual(&fam, &cd, &xs) < 1e-8);
    let d = direct_perturbed(&m, &r, Side::Right, FactorOptions::default()).unwrap();
    assert!(compare(&cd, &d, &f, 1e-6).pass);
}

#[test]
fn scan_matches_individual_runs() {
    let (_, f) = family(Fixture::F1, 14);
    let fam = build_family(&f, 1, 1);
    let rs: Vec<MatrixPolynomial> = [2.0, -1.5, 3.0]
        .iter()
        .map(|c| MatrixPolynomial::scalar(&[-c, 1.0]).unwrap())
        .collect();
    let scanned = scan_perturbations(&fam, &rs, 6, PipelineOptions::default());
    for (r, s) in rs.iter().zip(scanned) {
        let single = right_perturb(&fam, r, 6, PipelineOptions::default()).unwrap();
        assert_eq!(s.unwrap(), single);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_c2_perturbations_match_oracle(
        r in 0usize..3,
        entries in prop::collection::vec(-2.0f64..2.0, 9),
    ) {
        let (m, f) = family(Fixture::F2, 15);
        let fam = build_family(&f, 1, 3);
        let mut r0 = DMatrix::from_row_slice(3, 3, &entries);
        for i in 3 - r..3 {
            for j in 0..r {
                r0[(i, j)] = if i - (3 - r) == j { 1.0 } else { 0.0 };
            }
        }
        let rp = MatrixPolynomial::new(vec![r0, leading_pattern(3, r)]).unwrap();
        let Ok(cd) = right_perturb(&fam, &rp, 9, PipelineOptions::default()) else {
            return Ok(());
        };
        prop_assume!(cd.existence_failure.is_none());
        prop_assume!(cd.tau.values.iter().all(|t| t.abs() > 1e-6));
        let d = direct_perturbed(&m, &rp, Side::Right, FactorOptions::default()).unwrap();
        let rep = compare(&cd, &d, &f, 1e-6);
        prop_assert!(rep.pass, "{:?}", rep);
        prop_assert_eq!(cd.band_width(), cd.m_total);
    }
}
