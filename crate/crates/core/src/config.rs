//! Global numeric tolerances and resource caps.
//!
//! Every report echoes the [`Tolerances`] block it was produced with.

use serde::{Deserialize, Serialize};

/// Series solvers refuse instances whose estimated radius exceeds `1 - RADIUS_MARGIN`.
pub const RADIUS_MARGIN: f64 = 0.005;
/// Relative commutator tolerance between operators of different factors.
pub const TOL_COMM: f64 = 1e-10;
/// PSD tests use `PSD_REL_TOL * max(1, ||X||)`.
pub const PSD_REL_TOL: f64 = 1e-9;
/// Eigenvalue clip for square roots and range/kernel splits, relative to the norm.
pub const EIG_CLIP_REL: f64 = 1e-12;
/// Rank cutoff for spanning sets, relative to the largest scale.
pub const SPAN_CUTOFF_REL: f64 = 1e-10;
/// Hard cap on the number of enumerated words.
pub const WORD_CAP: usize = 200_000;
/// Default cap on the truncated Fock dimension, overridable by `POLYDOM_MAX_DIM`.
pub const DEFAULT_MAX_FOCK_DIM: usize = 20_000;
/// Cap on `d^2` for matricized maps.
pub const MAX_MATRICIZED_DIM: usize = 4096;
/// Hard cap on the number of series terms per factor.
pub const MAX_SERIES_TERMS: usize = 200_000;

pub fn max_fock_dim() -> usize {
    std::env::var("POLYDOM_MAX_DIM")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_FOCK_DIM)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub radius_margin: f64,
    pub tol_comm: f64,
    pub psd_rel: f64,
    /// Strict positivity threshold used for the C> cone and positive-definite checks.
    pub pd_abs: f64,
    pub eig_clip_rel: f64,
    pub span_cutoff_rel: f64,
    /// Target accuracy of truncated series, relative to the norm of the input.
    pub series_rel: f64,
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            radius_margin: RADIUS_MARGIN,
            tol_comm: TOL_COMM,
            psd_rel: PSD_REL_TOL,
            pd_abs: 1e-9,
            eig_clip_rel: EIG_CLIP_REL,
            span_cutoff_rel: SPAN_CUTOFF_REL,
            series_rel: 1e-13,
            residual: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn psd_tol(&self, norm: f64) -> f64 {
        self.psd_rel * norm.max(1.0)
    }

    pub fn radius_limit(&self) -> f64 {
        1.0 - self.radius_margin
    }
}
