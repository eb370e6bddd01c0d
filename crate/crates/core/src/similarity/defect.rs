use crate::cone::membership;
use crate::config::Tolerances;
use crate::cpmap::CpTuple;
use crate::error::{Error, Result};
use crate::linalg::{self, herm_to_real, min_eig, op_norm, real_to_herm, CMat, RMat};

use super::{CertKind, SimilarityCertificate};

#[derive(Clone, Debug)]
pub struct DefectSolution {
    pub x: CMat,
    /// Solution of the matricized linear system.
    pub x_linear: CMat,
    pub certificate: SimilarityCertificate,
}

/// `Π_i (I − M_i)^{m_i}` on Hermitian coordinates.
pub(crate) fn defect_matrix(phi: &CpTuple, m: &[u32]) -> Result<RMat> {
    let n = phi.d() * phi.d();
    let mut l = RMat::identity(n, n);
    for (i, &mi) in m.iter().enumerate() {
        let step = RMat::identity(n, n) - phi.matricize_real(i)?;
        for _ in 0..mi {
            l = &step * l;
        }
    }
    Ok(l)
}

/// The unique positive solution of `Δ_{f,A}^m(X) = R`.
pub fn solve_defect_equation(phi: &CpTuple, m: &[u32], r: &CMat, tol: &Tolerances) -> Result<DefectSolution> {
    if !linalg::is_hermitian(r, 1e-10) || min_eig(r) < tol.pd_abs {
        return Err(Error::Precondition("R must be positive definite".into()));
    }
    let ws = phi.weighted_series(m, r, tol)?;
    let x = linalg::hermitian_part(&ws.value);
    let d = phi.d();
    let l = defect_matrix(phi, m)?;
    let sol = l
        .lu()
        .solve(&herm_to_real(r))
        .ok_or_else(|| Error::Numerical("matricized defect system is singular although the radius is below 1".into()))?;
    let x_linear = real_to_herm(&sol, d);

    let rn = op_norm(r).max(1.0);
    let mut cert = SimilarityCertificate::new(CertKind::DefectSolution, x.clone());
    cert.at_most("defect_equation", op_norm(&(phi.defect(m, &x) - r)) / rn, tol.residual);
    cert.at_most(
        "linear_oracle",
        op_norm(&(&x - &x_linear)) / op_norm(&x_linear).max(f64::MIN_POSITIVE),
        tol.residual,
    );
    let xmin = min_eig(&x);
    cert.at_least("min_eig", xmin, tol.pd_abs);
    let cone = membership(phi, m, &x, tol, 0)?;
    cert.at_least("cone_min_eig", cone.min_over_nonzero_p(), -cone.tol_psd);
    cert.cond = super::pd_cond(&x);
    cert.constant("series_error", ws.error_bound);
    cert.finalize();
    Ok(DefectSolution {
        x,
        x_linear,
        certificate: cert,
    })
}
