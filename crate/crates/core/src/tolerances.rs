use serde::{Deserialize, Serialize};

/// Numerical thresholds shared by the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Pivot threshold relative to the active Schur complement.
    pub pivot_tol: f64,
    /// Relative singular-value cutoff for null spaces in chain extraction.
    pub rank_tol: f64,
    /// A `tau` counts as zero below this fraction of its neighbours.
    pub tau_tol: f64,
    /// Formula-versus-oracle comparison threshold.
    pub compare_tol: f64,
    /// Root clustering radius relative to the spectral scale.
    pub cluster_radius: f64,
    /// Left-division residual threshold relative to the dividend.
    pub division_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            pivot_tol: 1e-10,
            rank_tol: 1e-8,
            tau_tol: 1e-9,
            compare_tol: 1e-6,
            cluster_radius: 1e-6,
            division_tol: 1e-8,
        }
    }
}
