use crate::berezin::{compatible, constrained_kernel, intertwine_check_compressed, kernel, BerezinKernel};
use crate::cone::{is_pure_element, membership};
use crate::config::Tolerances;
use crate::cpmap::{CpTuple, OperatorTuple};
use crate::error::{Error, Result};
use crate::fock::{build_model, compress, variety_subspace};
use crate::linalg::{self, max_eig, op_norm, singular_values, CMat};
use crate::poly::NcPoly;

use super::{min_defect_eig, pd_cond, variety_residual, CertKind, SimilarityCertificate};

#[derive(Clone, Debug)]
pub struct RotaResult {
    pub certificate: SimilarityCertificate,
    pub t: OperatorTuple,
    /// `P = Σ C(…) Φ^{s_1} ∘ ⋯ ∘ Φ^{s_k}(I)`
    pub p: CMat,
    /// Row norms `||[T_{i,1} … T_{i,n_i}]||`.
    pub row_norms: Vec<f64>,
}

/// `T_{i,j} = P^{-1/2} A_{i,j} P^{1/2}` with `P` the weighted series of `I`.
pub fn rota_conjugate(phi: &CpTuple, m: &[u32], q_polys: &[NcPoly], tol: &Tolerances) -> Result<RotaResult> {
    let d = phi.d();
    let id = CMat::identity(d, d);
    let ws = phi.weighted_series(m, &id, tol)?;
    let p = linalg::hermitian_part(&ws.value);
    let p_half = linalg::pd_sqrt(&p)?;
    let p_inv_half = linalg::pd_inv_sqrt(&p)?;
    let t = phi.operators().map(|a| &p_inv_half * a * &p_half);
    let phi_t = phi.with_operators(t.clone())?;

    let mut cert = SimilarityCertificate::new(CertKind::StrictConjugation, p_half.clone());
    let rebuilt = t.map(|x| &p_half * x * &p_inv_half);
    let back = phi
        .operators()
        .families()
        .iter()
        .flatten()
        .zip(rebuilt.families().iter().flatten())
        .map(|(a, b)| op_norm(&(a - b)) / op_norm(a).max(1.0))
        .fold(0.0, f64::max);
    cert.at_most("conjugation", back, tol.residual);
    cert.at_most("variety", variety_residual(&t, q_polys)?, tol.residual);
    cert.at_least("domain_min_eig", min_defect_eig(&phi_t, m, &id), tol.pd_abs);
    // Back-conversion: Δ_{f,A}^p(P) = P^{1/2} Δ_{f,T}^p(I) P^{1/2} > 0.
    cert.at_least("back_conversion_min_eig", min_defect_eig(phi, m, &p), tol.pd_abs);
    let defect_p = phi.defect(m, &p);
    cert.at_most("series_defect", op_norm(&(defect_p - &id)), tol.residual);
    let bound: f64 = ws.operator_bounds.iter().product();
    let cond_sq = pd_cond(&p);
    cert.at_most("cond_squared", cond_sq, bound * (1.0 + 1e-8));
    cert.cond = cond_sq.sqrt();
    cert.claimed_bound = Some(bound.sqrt());
    cert.constant("b", bound);
    cert.constant("series_error", ws.error_bound);
    let row_norms: Vec<f64> = t
        .families()
        .iter()
        .map(|fam| {
            let mut s = CMat::zeros(d, d);
            for x in fam {
                s += x * x.adjoint();
            }
            max_eig(&linalg::hermitian_part(&s)).max(0.0).sqrt()
        })
        .collect();
    cert.finalize();
    Ok(RotaResult {
        certificate: cert,
        t,
        p,
        row_norms,
    })
}

#[derive(Clone, Debug)]
pub struct ModelEmbedding {
    pub certificate: SimilarityCertificate,
    /// `K_ω` in the coordinates of `N_Q ⊗ R̄`.
    pub kernel: BerezinKernel,
    /// Orthonormal basis of the range `G` of `Y`.
    pub range_basis: CMat,
    pub a: f64,
    pub b: f64,
}

/// `Y = K_ω`, with `A_{i,j}^* = Y^{-1} (S_{i,j}^* ⊗ I)|_G Y`.
pub fn model_embed(
    phi: &CpTuple,
    m: &[u32],
    r: &CMat,
    q_polys: &[NcPoly],
    degree: usize,
    tol: &Tolerances,
) -> Result<ModelEmbedding> {
    let omega = compatible(phi, m, r, q_polys, tol)?;
    if omega.a <= tol.pd_abs {
        return Err(Error::Precondition(format!(
            "weighted series of R is not bounded below (a = {:.3e})",
            omega.a
        )));
    }
    let model = build_model(phi.symbols(), m, degree)?;
    let sub = variety_subspace(&model, q_polys, tol)?;
    let comp = compress(&model, &sub);
    let full = kernel(&omega, &model, tol)?;
    let ck = constrained_kernel(&omega, &full, &sub);
    let y = &ck.kernel;
    let inter = intertwine_check_compressed(phi, &model, &sub, &comp, y);

    // Mass of Y on coordinates at the degree cap, where the truncated shift drops terms.
    let cap = model.fock.degree;
    let boundary_rows: Vec<usize> = (0..sub.dim())
        .filter(|&nu| sub.degrees[nu].iter().any(|&g| g >= cap))
        .flat_map(|nu| nu * y.rank..(nu + 1) * y.rank)
        .collect();
    let boundary = if boundary_rows.is_empty() {
        0.0
    } else {
        op_norm(&y.matrix.select_rows(boundary_rows.iter()))
    };

    let gram = y.gram();
    let g = y.gram_residual;
    let sv = singular_values(&y.matrix);
    let cond = sv[0] / sv[sv.len() - 1];
    let range = y.matrix.clone().svd(true, false).u.expect("left singular vectors");
    let range_basis = range.columns(0, sv.len()).into_owned();

    let mut cert = SimilarityCertificate::new(CertKind::ModelEmbed, y.matrix.clone());
    for e in &inter.entries {
        cert.at_most(&format!("intertwine_{}_{}", e.factor, e.index), e.interior, tol.residual);
    }
    cert.at_most("range", ck.range_residual, tol.residual);
    cert.at_most("gram_vs_series", g, tol.residual.max(10.0 * omega.series_error));
    cert.soft_at_most("truncation_mass", boundary, tol.residual);
    let q = gram.clone();
    let cone = membership(phi, m, &q, tol, 0)?;
    cert.at_least("witness_min_defect_eig", cone.min_over_nonzero_p(), -cone.tol_psd);
    let pure = is_pure_element(phi, &q, 1e-10, 20_000);
    cert.at_least("witness_pure", if pure.pure { 1.0 } else { 0.0 }, 1.0);
    cert.cond = cond;
    let a_eff = omega.a - g;
    cert.claimed_bound = Some(if a_eff > 0.0 {
        ((omega.b + g) / a_eff).sqrt()
    } else {
        f64::INFINITY
    });
    cert.constant("a", omega.a);
    cert.constant("b", omega.b);
    cert.constant("sqrt_b_over_a", (omega.b / omega.a).sqrt());
    cert.constant("n_q_dim", sub.dim() as f64);
    cert.constant("fock_dim", model.dim() as f64);
    cert.finalize();
    Ok(ModelEmbedding {
        certificate: cert,
        kernel: ck.kernel,
        range_basis,
        a: omega.a,
        b: omega.b,
    })
}
