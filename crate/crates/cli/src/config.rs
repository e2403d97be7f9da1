//! Run configuration: a single JSON document.

use mmop_core::fixtures::{Fixture, Side};
use mmop_core::measures::{WeightGrid, WeightSpec};
use mmop_core::{MatrixPolynomial, Tolerances};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};

/// Default truncation for the built-in fixtures.
pub const FIXTURE_NMAX: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    #[serde(default)]
    pub side: Side,
    /// Row-major coefficient matrices, lowest degree first.
    pub coefficients: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub q: usize,
    pub p: usize,
    pub interval: [f64; 2],
    /// Row-major `q x p` grid.
    pub weights: Vec<WeightSpec>,
    #[serde(default)]
    pub perturbation: Option<PerturbationConfig>,
    /// Truncation of the moment matrix.
    pub n_max: usize,
    /// Perturbed indices to compute; defaults to all the truncation allows.
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub extended_precision: bool,
    #[serde(default)]
    pub output: OutputConfig,
}

/// A validation problem located by JSON pointer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub pointer: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = if self.pointer.is_empty() { "/" } else { &self.pointer };
        write!(f, "{at}: {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

fn fail<T>(pointer: impl Into<String>, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        pointer: pointer.into(),
        message: message.into(),
    })
}

fn escape(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    path.iter()
        .filter_map(|seg| match seg {
            Segment::Seq { index } => Some(index.to_string()),
            Segment::Map { key } => Some(escape(key)),
            Segment::Enum { variant } => Some(escape(variant)),
            Segment::Unknown => None,
        })
        .map(|t| format!("/{t}"))
        .collect()
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Validated {
    pub config: RunConfig,
    pub grid: WeightGrid,
    pub perturbation: Option<(MatrixPolynomial, Side)>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Validated, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| ConfigError {
            pointer: pointer(e.path()),
            message: e.inner().to_string(),
        })?;
        config.validate()
    }

    pub fn load(path: &Path) -> Result<Validated, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            pointer: String::new(),
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        RunConfig::parse(&text)
    }

    pub fn from_fixture(fixture: Fixture, b: f64) -> RunConfig {
        let problem = fixture.problem(b);
        let g = problem.grid;
        RunConfig {
            q: g.q,
            p: g.p,
            interval: g.interval,
            weights: g.entries,
            perturbation: Some(PerturbationConfig {
                side: problem.side,
                coefficients: problem.perturbation.to_row_major(),
            }),
            n_max: FIXTURE_NMAX,
            count: None,
            tolerances: Tolerances::default(),
            extended_precision: false,
            output: OutputConfig::default(),
        }
    }

    pub fn validate(self) -> Result<Validated, ConfigError> {
        if self.q == 0 {
            return fail("/q", "must be positive");
        }
        if self.p == 0 {
            return fail("/p", "must be positive");
        }
        let [lo, hi] = self.interval;
        // also rejects NaN endpoints
        if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
            return fail("/interval", format!("[{lo}, {hi}] is empty"));
        }
        if self.weights.len() != self.q * self.p {
            return fail(
                "/weights",
                format!("{} entries for a {}x{} grid", self.weights.len(), self.q, self.p),
            );
        }
        for (k, w) in self.weights.iter().enumerate() {
            if let Err(m) = w.validate(self.interval) {
                return fail(format!("/weights/{k}"), m);
            }
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("pivot_tol", t.pivot_tol),
            ("rank_tol", t.rank_tol),
            ("tau_tol", t.tau_tol),
            ("compare_tol", t.compare_tol),
            ("cluster_radius", t.cluster_radius),
            ("division_tol", t.division_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("/tolerances/{name}"), "must be positive and finite");
            }
        }
        let grid = WeightGrid::new(self.q, self.p, self.interval, self.weights.clone())
            .map_err(|e| ConfigError {
                pointer: "/weights".into(),
                message: e.to_string(),
            })?;
        let mut min_trunc = 1;
        let perturbation = match &self.perturbation {
            None => None,
            Some(pc) => {
                let block = match pc.side {
                    Side::Right => self.p,
                    Side::Left => self.q,
                };
                if pc.coefficients.is_empty() {
                    return fail("/perturbation/coefficients", "no coefficient matrices");
                }
                for (k, c) in pc.coefficients.iter().enumerate() {
                    if c.len() != block * block {
                        return fail(
                            format!("/perturbation/coefficients/{k}"),
                            format!("{} entries, expected {block}x{block}", c.len()),
                        );
                    }
                }
                let r = MatrixPolynomial::from_row_major(block, &pc.coefficients).map_err(|e| {
                    ConfigError {
                        pointer: "/perturbation/coefficients".into(),
                        message: e.to_string(),
                    }
                })?;
                // a left factor is checked through the transposed right problem
                let oriented = match pc.side {
                    Side::Right => r.clone(),
                    Side::Left => r.transpose(),
                };
                oriented.validate_structure().map_err(|e| ConfigError {
                    pointer: "/perturbation/coefficients".into(),
                    message: e.to_string(),
                })?;
                min_trunc = block * (r.degree() + 1) + 2;
                Some((r, pc.side))
            }
        };
        if self.n_max < min_trunc.max(2) {
            return fail(
                "/n_max",
                format!("{} is below the minimum {}", self.n_max, min_trunc.max(2)),
            );
        }
        let needed = grid.moments_needed(self.n_max) + 1;
        for (k, w) in self.weights.iter().enumerate() {
            if let WeightSpec::MomentTable { moments } = w {
                if moments.len() < needed {
                    return fail(
                        format!("/weights/{k}/moments"),
                        format!("{} moments, truncation {} needs {needed}", moments.len(), self.n_max),
                    );
                }
            }
        }
        if self.count == Some(0) {
            return fail("/count", "must be positive");
        }
        Ok(Validated {
            config: self,
            grid,
            perturbation,
        })
    }
}
