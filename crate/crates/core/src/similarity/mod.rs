//! Similarity solvers and their certificates.
//!
//! Every solver rebuilds its residuals from the returned matrices before handing the
//! certificate back, and a certificate whose checks fail is returned with status
//! [`Status::Failed`] rather than dropped.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cpmap::{multi_indices_upto, CpTuple, OperatorTuple, RadiusEntry};
use crate::error::Result;
use crate::linalg::{self, min_eig, op_norm, CMat};
use crate::poly::NcPoly;

mod cpsim;
mod defect;
mod rota;
mod sznagy;
mod variety;

pub use cpsim::{cpmap_similarity, CpSimMode, CpSimResult};
pub use defect::{solve_defect_equation, DefectSolution};
pub use rota::{model_embed, rota_conjugate, ModelEmbedding, RotaResult};
pub use sznagy::{sznagy_solve, SzNagyOptions, SzNagyResult};
pub use variety::{similarity_to_variety, VarietyOptions, VarietyResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertKind {
    ModelEmbed,
    StrictConjugation,
    IsometricConjugation,
    CpmapSimilarity,
    DefectSolution,
    VarietySimilarity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Inconclusive,
    Failed,
}

impl Status {
    pub fn worst(self, other: Status) -> Status {
        self.max(other)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    AtMost,
    AtLeast,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub value: f64,
    pub bound: f64,
    pub sense: Sense,
    /// A failed soft check makes the certificate inconclusive instead of failed.
    pub soft: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimilarityCertificate {
    pub kind: CertKind,
    #[serde(with = "crate::linalg::cmat_serde")]
    pub matrix: CMat,
    pub checks: BTreeMap<String, Check>,
    pub cond: f64,
    pub claimed_bound: Option<f64>,
    pub constants: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub status: Status,
}

impl SimilarityCertificate {
    pub fn new(kind: CertKind, matrix: CMat) -> Self {
        SimilarityCertificate {
            kind,
            matrix,
            checks: BTreeMap::new(),
            cond: f64::NAN,
            claimed_bound: None,
            constants: BTreeMap::new(),
            notes: Vec::new(),
            status: Status::Pass,
        }
    }

    fn record(&mut self, name: &str, value: f64, bound: f64, sense: Sense, soft: bool) {
        let pass = match sense {
            Sense::AtMost => value <= bound,
            Sense::AtLeast => value >= bound,
        };
        self.checks.insert(
            name.to_string(),
            Check {
                value,
                bound,
                sense,
                soft,
                pass,
            },
        );
    }

    pub fn at_most(&mut self, name: &str, value: f64, bound: f64) {
        self.record(name, value, bound, Sense::AtMost, false);
    }

    pub fn at_least(&mut self, name: &str, value: f64, bound: f64) {
        self.record(name, value, bound, Sense::AtLeast, false);
    }

    pub fn soft_at_most(&mut self, name: &str, value: f64, bound: f64) {
        self.record(name, value, bound, Sense::AtMost, true);
    }

    pub fn constant(&mut self, name: &str, value: f64) {
        self.constants.insert(name.to_string(), value);
    }

    pub fn residual(&self, name: &str) -> Option<f64> {
        self.checks.get(name).map(|c| c.value)
    }

    /// Sets the status from the recorded checks and the condition bound.
    pub fn finalize(&mut self) {
        let mut status = Status::Pass;
        for c in self.checks.values() {
            if !c.pass {
                status = status.worst(if c.soft { Status::Inconclusive } else { Status::Failed });
            }
        }
        if let Some(b) = self.claimed_bound {
            if !(self.cond <= b * (1.0 + 1e-8)) {
                status = Status::Failed;
            }
        }
        self.status = status;
    }
}

/// `max ||q(T)||` over the constraint set.
pub(crate) fn variety_residual(t: &OperatorTuple, q_polys: &[NcPoly]) -> Result<f64> {
    let mut out = 0.0_f64;
    for q in q_polys {
        q.check_letters(&t.arities())?;
        out = out.max(op_norm(&q.eval(t.families(), t.d())));
    }
    Ok(out)
}

/// Minimum eigenvalue of `Δ^p(X)` over all `0 != p <= m`.
pub(crate) fn min_defect_eig(phi: &CpTuple, m: &[u32], x: &CMat) -> f64 {
    multi_indices_upto(m)
        .into_iter()
        .filter(|p| p.iter().any(|&v| v > 0))
        .map(|p| min_eig(&phi.defect(&p, x)))
        .fold(f64::INFINITY, f64::min)
}

/// `||X|| ||X^{-1}||` for a positive definite `X`.
pub(crate) fn pd_cond(x: &CMat) -> f64 {
    let e = linalg::herm_eigen(x);
    e.values[e.values.len() - 1] / e.values[0]
}

/// Radii, decay of `||Φ_i^s(I)||` and the agreement between "radius < 1" and "decays to 0".
pub fn spectral_radius_equivalences(phi: &CpTuple, s_max: usize) -> Result<Vec<RadiusEntry>> {
    phi.radius_report(s_max)
}
