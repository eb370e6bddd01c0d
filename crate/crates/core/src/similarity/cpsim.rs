use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::cpmap::CpTuple;
use crate::error::{Error, Result};
use crate::linalg::{self, op_norm, CMat};

use super::{
    min_defect_eig, model_embed, pd_cond, sznagy_solve, CertKind, SimilarityCertificate, SzNagyOptions,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CpSimMode {
    PureCone,
    Strict,
    Unital,
}

#[derive(Clone, Debug)]
pub struct CpSimResult {
    pub certificate: SimilarityCertificate,
    pub q: CMat,
    /// Kraus families of `λ_i(X) = Q^{-1/2} φ_i(Q^{1/2} X Q^{1/2}) Q^{-1/2}` (strict and unital modes).
    pub lambda: Option<CpTuple>,
}

/// Joint similarity of a commuting tuple of Kraus-represented maps to pure, strict or
/// unital maps.
pub fn cpmap_similarity(
    phi: &CpTuple,
    m: &[u32],
    mode: CpSimMode,
    r: Option<&CMat>,
    degree: usize,
    tol: &Tolerances,
) -> Result<CpSimResult> {
    let d = phi.d();
    let id = CMat::identity(d, d);
    match mode {
        CpSimMode::Strict => {
            let ws = phi.weighted_series(m, &id, tol)?;
            let q = linalg::hermitian_part(&ws.value);
            let half = linalg::pd_sqrt(&q)?;
            let inv_half = linalg::pd_inv_sqrt(&q)?;
            let lambda = phi.with_operators(phi.operators().map(|c| &inv_half * c * &half))?;
            let mut cert = SimilarityCertificate::new(CertKind::CpmapSimilarity, q.clone());
            cert.at_least("lambda_min_defect_eig", min_defect_eig(&lambda, m, &id), tol.pd_abs);
            // Δ_Λ^m(I) = Q^{-1/2} Δ_Φ^m(Q) Q^{-1/2}
            let lhs = lambda.defect(m, &id);
            let rhs = &inv_half * phi.defect(m, &q) * &inv_half;
            cert.at_most("covariance", op_norm(&(lhs - rhs)), tol.residual);
            let bound: f64 = ws.operator_bounds.iter().product();
            cert.cond = pd_cond(&q).sqrt();
            cert.claimed_bound = Some(bound.sqrt());
            cert.constant("b", bound);
            cert.finalize();
            Ok(CpSimResult {
                certificate: cert,
                q,
                lambda: Some(lambda),
            })
        }
        CpSimMode::Unital => {
            let res = sznagy_solve(phi, &SzNagyOptions::default(), tol)?;
            let lambda = phi.with_operators(res.t.clone())?;
            let mut cert = res.certificate;
            cert.kind = CertKind::CpmapSimilarity;
            Ok(CpSimResult {
                certificate: cert,
                q: res.q,
                lambda: Some(lambda),
            })
        }
        CpSimMode::PureCone => {
            if !phi.operators_commute() {
                return Err(Error::Precondition(
                    "the polyball kernel needs commuting Kraus operators across factors".into(),
                ));
            }
            let r = r.cloned().unwrap_or_else(|| id.clone());
            let emb = model_embed(phi, m, &r, &[], degree, tol)?;
            let q = emb.kernel.gram();
            let mut cert = emb.certificate;
            cert.kind = CertKind::CpmapSimilarity;
            cert.matrix = q.clone();
            Ok(CpSimResult {
                certificate: cert,
                q,
                lambda: None,
            })
        }
    }
}
