//! Subcommand bodies. Each returns the report text, the files to write and
//! an outcome that decides the exit code.

use crate::config::Validated;
use crate::report::{band_csv, coeff_table, family_csv, sci, to_json, Table};
use mmop_core::christoffel::{
    a_connection_residual, b_connection_residual, kernel_connection_residual, left_perturb,
    right_perturb, ConnectionData, CramerCheck, PipelineOptions,
};
use mmop_core::exec::Execution;
use mmop_core::fixtures::Side;
use mmop_core::gaussborel::{factorize, FactorOptions, Factorization, Precision};
use mmop_core::matpoly::StructureReport;
use mmop_core::measures::{hankel_residual, perturbed_trunc, MomentMatrix};
use mmop_core::mmop::{
    biorthogonality_residual, build_family, off_band, quasidiag_residual, recurrence_matrix,
    recurrence_residual, OrthoFamily,
};
use mmop_core::oracle::{compare, direct_perturbed, ComparisonReport};
use mmop_core::{Error, MatrixPolynomial};
use serde::Serialize;

pub const BIORTHOGONALITY_TOL: f64 = 1e-8;
pub const RECURRENCE_BAND_TOL: f64 = 1e-10;
pub const CONNECTION_TOL: f64 = 1e-8;
pub const KERNEL_TOL: f64 = 1e-7;
pub const DIVISIBILITY_TOL: f64 = 1e-8;
pub const OMEGA_TOL: f64 = 1e-8;
/// Indices checked for biorthogonality.
const BIORTHOGONALITY_UPTO: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    /// A `tau` vanished or a pivot broke down.
    Existence,
    ChecksFailed,
    Invalid,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Pass => 0,
            Outcome::Invalid => 1,
            Outcome::Existence => 2,
            Outcome::ChecksFailed => 3,
        }
    }
}

/// How a core error maps onto the exit-code contract.
pub fn classify(e: &Error) -> Outcome {
    match e {
        Error::QuasidefiniteFailure { .. } | Error::ExistenceFailure { .. } | Error::SingularSystem { .. } => {
            Outcome::Existence
        }
        Error::DivisionFailure { .. } | Error::RootCountMismatch { .. } | Error::ChainDeficiency { .. } => {
            Outcome::ChecksFailed
        }
        _ => Outcome::Invalid,
    }
}

pub struct Artifacts {
    pub text: String,
    pub files: Vec<(String, String)>,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: &'static str, value: f64, tol: f64) -> Self {
        Check {
            name,
            value,
            tol,
            pass: value <= tol,
        }
    }
}

fn checks_table(checks: &[Check]) -> String {
    let mut t = Table::new(["check", "value", "tol", "status"]);
    for c in checks {
        t.row([
            c.name.to_string(),
            sci(c.value),
            sci(c.tol),
            if c.pass { "pass" } else { "FAIL" }.to_string(),
        ]);
    }
    t.render()
}

fn factor_options(v: &Validated) -> FactorOptions {
    FactorOptions {
        pivot_tol: v.config.tolerances.pivot_tol,
        precision: if v.config.extended_precision {
            Precision::Extended
        } else {
            Precision::Double
        },
    }
}

/// Evenly spaced interior sample points.
fn sample_points(interval: [f64; 2], k: usize) -> Vec<f64> {
    let [lo, hi] = interval;
    (0..k)
        .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / k as f64)
        .collect()
}

fn moment_matrix(v: &Validated) -> Result<MomentMatrix, Error> {
    MomentMatrix::from_grid(&v.grid, v.config.n_max, Execution::default())
}

pub fn moments(v: &Validated) -> Result<Artifacts, Error> {
    let m = moment_matrix(v)?;
    let hankel = hankel_residual(&m);
    #[derive(Serialize)]
    struct Report {
        command: &'static str,
        q: usize,
        p: usize,
        n_max: usize,
        hankel_residual: f64,
        entries: Vec<Vec<f64>>,
    }
    let entries = m.entries.row_iter().map(|r| r.iter().copied().collect()).collect();
    let report = Report {
        command: "moments",
        q: m.q,
        p: m.p,
        n_max: m.trunc(),
        hankel_residual: hankel,
        entries,
    };
    let text = format!(
        "moment matrix {0}x{0} (q = {1}, p = {2})\nhankel residual {3}\n",
        m.trunc(),
        m.q,
        m.p,
        sci(hankel)
    );
    Ok(Artifacts {
        text,
        files: vec![
            ("moments.csv".into(), m.to_csv()),
            ("moments.json".into(), to_json(&report)),
        ],
        outcome: Outcome::Pass,
    })
}

#[derive(Debug, Clone, Serialize)]
struct OrthoReport {
    command: &'static str,
    q: usize,
    p: usize,
    n_max: usize,
    h: Vec<f64>,
    b: Vec<Vec<Vec<f64>>>,
    a: Vec<Vec<Vec<f64>>>,
    recurrence_off_band: f64,
    recurrence_residual: f64,
    quasidiagonal_residual: f64,
    checks: Vec<Check>,
    pass: bool,
}

pub fn ortho(v: &Validated) -> Result<Artifacts, Error> {
    let m = moment_matrix(v)?;
    let f = factorize(&m.entries, factor_options(v))?;
    let fam = build_family(&f, m.q, m.p);
    let exec = Execution::default();
    let hankel = hankel_residual(&m);
    let bo = biorthogonality_residual(&fam, &v.grid, BIORTHOGONALITY_UPTO, exec)?;
    let qd = quasidiag_residual(&fam, &v.grid, BIORTHOGONALITY_UPTO)?;
    let t = recurrence_matrix(&f, m.q);
    let ob = off_band(&t, m.q, m.p);
    let rr = recurrence_residual(&t, &fam, &sample_points(v.grid.interval, 5));
    let checks = vec![
        Check::new("hankel", hankel, 0.0),
        Check::new("biorthogonality", bo, BIORTHOGONALITY_TOL),
        Check::new("recurrence_off_band", ob, RECURRENCE_BAND_TOL),
    ];
    let pass = checks.iter().all(|c| c.pass);
    let report = OrthoReport {
        command: "ortho",
        q: m.q,
        p: m.p,
        n_max: m.trunc(),
        h: f.h.iter().copied().collect(),
        b: fam.b.iter().map(|c| coeff_table(c)).collect(),
        a: fam.a.iter().map(|c| coeff_table(c)).collect(),
        recurrence_off_band: ob,
        recurrence_residual: rr,
        quasidiagonal_residual: qd,
        checks,
        pass,
    };
    let mut ht = Table::new(["n", "H_n"]);
    for (n, h) in f.h.iter().enumerate() {
        ht.row([n.to_string(), sci(*h)]);
    }
    let text = format!(
        "ortho: q = {}, p = {}, truncation {}\n\n{}\n{}\nrecurrence residual {}, quasi-diagonal residual {}\n",
        m.q,
        m.p,
        m.trunc(),
        ht.render(),
        checks_table(&report.checks),
        sci(rr),
        sci(qd)
    );
    let (s, sbar, h) = f.to_csv();
    Ok(Artifacts {
        files: vec![
            ("ortho.json".into(), to_json(&report)),
            ("ortho.txt".into(), text.clone()),
            ("S.csv".into(), s),
            ("Sbar.csv".into(), sbar),
            ("H.csv".into(), h),
            ("families.csv".into(), fam.to_csv()),
        ],
        text,
        outcome: if pass { Outcome::Pass } else { Outcome::ChecksFailed },
    })
}

#[derive(Debug, Clone, Serialize)]
struct RootReport {
    re: f64,
    im: f64,
    multiplicity: usize,
    partial_multiplicities: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
struct TauEntry {
    n: usize,
    value: f64,
    flagged: bool,
}

#[derive(Debug, Clone, Serialize)]
struct OracleReport {
    /// `ok` or `pivot_failure`.
    status: &'static str,
    failed_pivot: Option<usize>,
    comparison: Option<ComparisonReport>,
}

#[derive(Debug, Clone, Serialize)]
struct PerturbReport {
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    fixture: Option<String>,
    side: Side,
    q: usize,
    p: usize,
    n_max: usize,
    count: usize,
    structure: StructureReport,
    m_total: usize,
    determinant: Vec<f64>,
    roots: Vec<RootReport>,
    chains: serde_json::Value,
    tau: Vec<TauEntry>,
    existence_failure: Option<usize>,
    omega: Vec<Vec<f64>>,
    h_hat: Vec<f64>,
    b_hat: Vec<Vec<Vec<f64>>>,
    a_hat: Vec<Vec<Vec<f64>>>,
    cramer: Vec<CramerCheck>,
    cramer_convention: &'static str,
    oracle: OracleReport,
    checks: Vec<Check>,
    pass: bool,
}

/// The unperturbed family and connection data in right-perturbation form,
/// plus the perturbation acting on it.
struct RightView {
    fam: OrthoFamily,
    cd: ConnectionData,
    r: MatrixPolynomial,
}

fn view(f: &Factorization, q: usize, p: usize, r: &MatrixPolynomial, side: Side, cd: &ConnectionData) -> RightView {
    match side {
        Side::Right => RightView {
            fam: build_family(f, q, p),
            cd: cd.clone(),
            r: r.clone(),
        },
        Side::Left if q == 1 && p == 1 => RightView {
            fam: build_family(f, 1, 1),
            cd: cd.clone(),
            r: r.clone(),
        },
        Side::Left => RightView {
            fam: build_family(&f.transpose(), p, q),
            cd: cd.mirrored(),
            r: r.transpose(),
        },
    }
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, f64::max)
}

/// Full Christoffel pipeline. With `verify` the oracle comparison becomes
/// part of the pass criterion.
pub fn perturb(v: &Validated, verify: bool, fixture: Option<String>) -> Result<Artifacts, Error> {
    let Some((r, side)) = v.perturbation.clone() else {
        return Err(Error::Shape("configuration has no perturbation".into()));
    };
    let tol = v.config.tolerances;
    let (q, p) = (v.grid.q, v.grid.p);
    let m = moment_matrix(v)?;
    let fopts = factor_options(v);
    let f = factorize(&m.entries, fopts)?;
    let block = if side == Side::Right { p } else { q };
    let t_hat = perturbed_trunc(m.trunc(), block, r.degree());
    let count = v.config.count.unwrap_or(t_hat).min(t_hat);
    if count == 0 {
        return Err(Error::TruncationTooSmall {
            needed: block * (r.degree() + 1),
            got: m.trunc(),
        });
    }
    let opts = PipelineOptions {
        tol,
        exec: Execution::default(),
    };
    let cd = match side {
        Side::Right => right_perturb(&build_family(&f, q, p), &r, count, opts)?,
        Side::Left => left_perturb(&f, q, p, &r, count, opts)?,
    };
    let rv = view(&f, q, p, &r, side, &cd);

    let xs = sample_points(v.grid.interval, 10);
    let pairs: Vec<(f64, f64)> = (0..5).map(|i| (xs[2 * i], xs[(2 * i + 5) % xs.len()])).collect();
    let kernel = max_of((1..=cd.len().min(8)).flat_map(|n| {
        pairs
            .iter()
            .map(|&(x, y)| kernel_connection_residual(&rv.fam, &rv.cd, &rv.r, n, x, y))
            .collect::<Vec<_>>()
    }));
    let division = max_of(
        cd.division_residuals
            .iter()
            .zip(&cd.products)
            .map(|(res, g)| res / max_of(g.iter().map(|p| p.max_abs())).max(1.0)),
    );
    let mut checks = vec![
        Check::new("chain_inheritance", max_of(cd.divisibility.iter().copied()), DIVISIBILITY_TOL),
        Check::new("left_division", division, tol.division_tol),
        Check::new("a_connection", a_connection_residual(&rv.fam, &rv.cd, &rv.r, &xs), CONNECTION_TOL),
        Check::new("b_connection", b_connection_residual(&rv.fam, &rv.cd, &xs), CONNECTION_TOL),
        Check::new("kernel_connection", kernel, KERNEL_TOL),
        Check::new("tau_ratio", max_of(cd.tau_consistency.iter().copied()), OMEGA_TOL),
    ];

    let direct = direct_perturbed(&m, &r, side, fopts);
    let oracle = match direct {
        Ok(d) => OracleReport {
            status: "ok",
            failed_pivot: None,
            comparison: verify.then(|| compare(&cd, &d, &f, tol.compare_tol)),
        },
        Err(Error::QuasidefiniteFailure { order, .. }) => OracleReport {
            status: "pivot_failure",
            failed_pivot: Some(order),
            comparison: None,
        },
        Err(e) => return Err(e),
    };
    if let Some(c) = &oracle.comparison {
        checks.push(Check::new("oracle_comparison", c.worst, tol.compare_tol));
        checks.push(Check::new("oracle_omega", c.omega, OMEGA_TOL));
    }
    let existence = cd.existence_failure.is_some() || oracle.failed_pivot.is_some();
    let pass = !existence && checks.iter().all(|c| c.pass);

    let shifted = max_of(cd.cramer.iter().map(|c| c.shifted));
    let literal = max_of(cd.cramer.iter().map(|c| c.literal));
    let convention = if cd.cramer.is_empty() {
        "none"
    } else if shifted <= literal {
        "shifted"
    } else {
        "literal"
    };
    let report = PerturbReport {
        command: if verify { "verify" } else { "perturb" },
        fixture,
        side,
        q,
        p,
        n_max: m.trunc(),
        count,
        structure: cd.structure,
        m_total: cd.m_total,
        determinant: r.determinant()?.coeffs().to_vec(),
        roots: cd
            .eigen
            .roots
            .iter()
            .zip(&cd.chains.roots)
            .map(|(root, rc)| RootReport {
                re: root.value.re,
                im: root.value.im,
                multiplicity: root.multiplicity,
                partial_multiplicities: rc.partial_multiplicities(),
            })
            .collect(),
        chains: cd.chains.to_json(),
        tau: cd
            .tau
            .values
            .iter()
            .zip(&cd.tau.flags)
            .enumerate()
            .map(|(n, (v, f))| TauEntry {
                n,
                value: *v,
                flagged: *f,
            })
            .collect(),
        existence_failure: cd.existence_failure,
        omega: cd.omega.clone(),
        h_hat: cd.h_hat.clone(),
        b_hat: cd.b_hat.iter().map(|c| coeff_table(c)).collect(),
        a_hat: cd.a_hat.iter().map(|c| coeff_table(c)).collect(),
        cramer: cd.cramer.clone(),
        cramer_convention: convention,
        oracle,
        checks,
        pass,
    };
    let text = render_perturb(&report);
    let outcome = if existence {
        Outcome::Existence
    } else if pass {
        Outcome::Pass
    } else {
        Outcome::ChecksFailed
    };
    Ok(Artifacts {
        files: vec![
            ("report.json".into(), to_json(&report)),
            ("report.txt".into(), text.clone()),
            ("omega.csv".into(), band_csv(&cd.omega)),
            ("b_hat.csv".into(), family_csv(&cd.b_hat)),
            ("a_hat.csv".into(), family_csv(&cd.a_hat)),
        ],
        text,
        outcome,
    })
}

fn render_perturb(r: &PerturbReport) -> String {
    let mut out = r.command.to_string();
    if let Some(f) = &r.fixture {
        out += &format!(" ({f})");
    }
    out += &format!(
        ": {:?} perturbation, q = {}, p = {}, truncation {}, {} indices\n",
        r.side, r.q, r.p, r.n_max, r.count
    );
    out += &format!(
        "structure r = {}, det degree = {}, M = {}\n\n",
        r.structure.r, r.structure.det_degree, r.m_total
    );
    let mut roots = Table::new(["root (re)", "root (im)", "multiplicity", "chains"]);
    for root in &r.roots {
        roots.row([
            sci(root.re),
            sci(root.im),
            root.multiplicity.to_string(),
            format!("{:?}", root.partial_multiplicities),
        ]);
    }
    out += &roots.render();
    out += "\n";
    let mut header = vec!["n".to_string(), "tau_n".into(), "flag".into(), "H^_n".into()];
    header.extend((1..=r.m_total).map(|i| format!("Omega[n+{i},n]")));
    let mut t = Table::new(header);
    for e in &r.tau {
        let mut row = vec![
            e.n.to_string(),
            sci(e.value),
            if e.flagged { "zero" } else { "" }.to_string(),
            r.h_hat.get(e.n).map_or(String::new(), |h| sci(*h)),
        ];
        if let Some(col) = r.omega.get(e.n) {
            row.extend(col.iter().map(|w| sci(*w)));
        }
        t.row(row);
    }
    out += &t.render();
    out += &format!("\ncramer convention: {}\n", r.cramer_convention);
    match r.oracle.failed_pivot {
        Some(k) => out += &format!("oracle: pivot breakdown at index {k}\n"),
        None => out += "oracle: factorization ok\n",
    }
    if let Some(n) = r.existence_failure {
        out += &format!("existence failure: tau vanishes at n = {n}\n");
    }
    out += "\n";
    out += &checks_table(&r.checks);
    out += if r.pass { "\nPASS\n" } else { "\nFAIL\n" };
    out
}
