//! Membership, purity and factorization tests for the cones `C_≥(Δ^m)^+`.

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::cpmap::{multi_indices_upto, CpTuple, OperatorTuple};
use crate::error::{Error, Result};
use crate::linalg::{self, c64, is_hermitian, min_eig, op_norm, CMat};
use crate::poly::NcPoly;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    InCone,
    Boundary,
    Outside,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DefectEntry {
    pub p: Vec<u32>,
    pub min_eig: f64,
    pub norm: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConeReport {
    pub m: Vec<u32>,
    /// One entry per `0 <= p <= m`, `p = 0` first.
    pub defects: Vec<DefectEntry>,
    pub tol_psd: f64,
    pub verdict: Verdict,
    /// All defects (including `X` itself) at least `pd_abs`.
    pub strict: bool,
    /// `||Φ_i^s(X)||` for `s = 1..=s_max`, per factor.
    pub purity: Vec<Vec<f64>>,
}

impl ConeReport {
    pub fn in_cone(&self) -> bool {
        self.verdict != Verdict::Outside
    }

    pub fn min_over_nonzero_p(&self) -> f64 {
        self.defects
            .iter()
            .filter(|e| e.p.iter().any(|&v| v > 0))
            .map(|e| e.min_eig)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Evaluates `Δ^p(X)` for every `0 <= p <= m` and classifies `X`.
pub fn membership(phi: &CpTuple, m: &[u32], x: &CMat, tol: &Tolerances, s_max: usize) -> Result<ConeReport> {
    if m.len() != phi.k() {
        return Err(Error::Dimension(format!("multi-degree has {} entries, expected {}", m.len(), phi.k())));
    }
    if !is_hermitian(x, 1e-10) {
        return Err(Error::Invalid("cone membership needs a Hermitian matrix".into()));
    }
    let x = linalg::hermitian_part(x);
    let tol_psd = tol.psd_tol(op_norm(&x));
    let mut defects = Vec::new();
    for p in multi_indices_upto(m) {
        let dp = phi.defect(&p, &x);
        defects.push(DefectEntry {
            p,
            min_eig: min_eig(&dp),
            norm: op_norm(&dp),
        });
    }
    let lowest = defects.iter().map(|e| e.min_eig).fold(f64::INFINITY, f64::min);
    let verdict = if lowest < -tol_psd {
        Verdict::Outside
    } else if lowest <= tol_psd {
        Verdict::Boundary
    } else {
        Verdict::InCone
    };
    let strict = lowest >= tol.pd_abs;
    let purity = (0..phi.k())
        .map(|i| {
            let mut y = x.clone();
            (0..s_max)
                .map(|_| {
                    y = phi.apply(i, &y);
                    op_norm(&y)
                })
                .collect()
        })
        .collect();
    Ok(ConeReport {
        m: m.to_vec(),
        defects,
        tol_psd,
        verdict,
        strict,
        purity,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PurityFactor {
    pub factor: usize,
    pub pure: bool,
    /// First `s` with `||Φ_i^s(X)|| <= tol`.
    pub reached_at: Option<usize>,
    pub decay: Vec<f64>,
    /// Geometric rate fitted to the tail of the decay log.
    pub fitted_rate: Option<f64>,
    /// Steps the fitted rate predicts to reach the tolerance, when not reached.
    pub extrapolated_steps: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PurityReport {
    pub pure: bool,
    pub factors: Vec<PurityFactor>,
}

/// `X` is pure when every `Φ_i^s(X)` falls below `tol · max(1, ||X||)` within `s_max` steps.
pub fn is_pure_element(phi: &CpTuple, x: &CMat, tol: f64, s_max: usize) -> PurityReport {
    let threshold = tol * op_norm(x).max(1.0);
    let mut factors = Vec::with_capacity(phi.k());
    for i in 0..phi.k() {
        let mut y = x.clone();
        let mut decay = Vec::new();
        let mut reached_at = None;
        for s in 1..=s_max {
            y = phi.apply(i, &y);
            let n = op_norm(&y);
            decay.push(n);
            if n <= threshold {
                reached_at = Some(s);
                break;
            }
        }
        let fitted_rate = fit_rate(&decay);
        let extrapolated_steps = match (reached_at, fitted_rate, decay.last()) {
            (None, Some(rate), Some(&last)) if rate < 1.0 && rate > 0.0 && last > 0.0 => {
                Some(decay.len() as f64 + (threshold / last).ln() / rate.ln())
            }
            _ => None,
        };
        factors.push(PurityFactor {
            factor: i + 1,
            pure: reached_at.is_some(),
            reached_at,
            decay,
            fitted_rate,
            extrapolated_steps,
        });
    }
    PurityReport {
        pure: factors.iter().all(|f| f.pure),
        factors,
    }
}

/// Geometric mean of successive ratios over the last half of the positive part of the log.
fn fit_rate(decay: &[f64]) -> Option<f64> {
    let pos: Vec<f64> = decay.iter().copied().take_while(|&v| v > 0.0).collect();
    if pos.len() < 4 {
        return None;
    }
    let start = pos.len() / 2;
    let steps = (pos.len() - 1 - start) as f64;
    Some((pos[pos.len() - 1] / pos[start]).powf(1.0 / steps))
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub value: CMat,
    pub residual: f64,
    pub series_error_bound: f64,
}

/// `weighted_series(Φ, m, Δ^m(X))` and its distance to `X`.
pub fn reconstruct(phi: &CpTuple, m: &[u32], x: &CMat, tol: &Tolerances) -> Result<Reconstruction> {
    let dm = phi.defect(m, x);
    let s = phi.weighted_series(m, &dm, tol)?;
    let residual = op_norm(&(&s.value - x));
    Ok(Reconstruction {
        value: s.value,
        residual,
        series_error_bound: s.error_bound,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlatReport {
    pub full_defect_vanishes: bool,
    pub unit_defect_vanishes: bool,
    pub full_defect_norm: f64,
    pub unit_defect_norm: f64,
    /// The two flags agree.
    pub consistent: bool,
}

/// `(||Δ^m(Y)|| <= tol, ||Δ^{(1,…,1)}(Y)|| <= tol)` for `Y` in the cone with power bounded maps.
pub fn flat_equivalence(phi: &CpTuple, m: &[u32], y: &CMat, tol: &Tolerances) -> Result<FlatReport> {
    for i in 0..phi.k() {
        let r = phi.joint_spectral_radius(i)?;
        if r > 1.0 + 1e-8 {
            return Err(Error::Precondition(format!(
                "factor {} is not power bounded (radius {r:.6})",
                i + 1
            )));
        }
    }
    let report = membership(phi, m, y, tol, 0)?;
    if !report.in_cone() {
        return Err(Error::Precondition("Y is not in the cone".into()));
    }
    let t = tol.psd_tol(op_norm(y));
    let full = op_norm(&phi.defect(m, y));
    let ones = vec![1u32; phi.k()];
    let unit = op_norm(&phi.defect(&ones, y));
    let a = full <= t;
    let b = unit <= t;
    Ok(FlatReport {
        full_defect_vanishes: a,
        unit_defect_vanishes: b,
        full_defect_norm: full,
        unit_defect_norm: unit,
        consistent: a == b,
    })
}

#[derive(Clone, Debug)]
pub struct Factorization {
    pub t: OperatorTuple,
    pub rank: usize,
    /// `max_{i,j} ||A_{i,j} Γ^{1/2} − Γ^{1/2} T_{i,j}||`.
    pub intertwining_residual: f64,
    /// `max_{i,j} ||Λ G − G A^*||` on the range coordinates.
    pub consistency_residual: f64,
    pub variety_residual: f64,
    /// Minimum eigenvalue of `Δ_{f,T}^p(I)` over `0 != p <= m`.
    pub domain_min_eig: f64,
}

/// Builds `T` with `A Γ^{1/2} = Γ^{1/2} T`, `T = Λ^* ⊕ 0` on `range(Γ) ⊕ ker(Γ)`.
pub fn factor_through(
    phi: &CpTuple,
    m: &[u32],
    gamma: &CMat,
    q_polys: &[NcPoly],
    tol: &Tolerances,
) -> Result<Factorization> {
    let report = membership(phi, m, gamma, tol, 0)?;
    if !report.in_cone() {
        return Err(Error::Precondition("Γ is not in the cone".into()));
    }
    let ops = phi.operators();
    let d = phi.d();
    let mut qa = 0.0_f64;
    for q in q_polys {
        q.check_letters(&ops.arities())?;
        qa = qa.max(op_norm(&q.eval(ops.families(), d)));
    }
    if qa > tol.residual {
        return Err(Error::Precondition(format!("q(A) != 0 (residual {qa:.3e})")));
    }
    let split = linalg::psd_range(gamma, tol.eig_clip_rel);
    let r = split.rank();
    let v = &split.basis;
    // G = diag(√λ) V^*, G^+ = V diag(1/√λ)
    let mut g = v.adjoint();
    let mut g_pinv = v.clone();
    for (row, &l) in split.values.iter().enumerate() {
        let s = l.sqrt();
        for c in 0..d {
            g[(row, c)] *= s;
            g_pinv[(c, row)] /= s;
        }
    }
    let sqrt_gamma = linalg::psd_sqrt(gamma, tol.eig_clip_rel);
    let mut consistency = 0.0_f64;
    let mut inter = 0.0_f64;
    let t = ops.map(|a| {
        let lam = &g * a.adjoint() * &g_pinv;
        consistency = consistency.max(op_norm(&(&lam * &g - &g * a.adjoint())));
        let t = v * lam.adjoint() * v.adjoint();
        inter = inter.max(op_norm(&(a * &sqrt_gamma - &sqrt_gamma * &t)));
        t
    });
    let mut variety = 0.0_f64;
    for q in q_polys {
        variety = variety.max(op_norm(&q.eval(t.families(), d)));
    }
    let phi_t = phi.with_operators(t.clone())?;
    let id = CMat::identity(d, d);
    let domain_min_eig = multi_indices_upto(m)
        .into_iter()
        .filter(|p| p.iter().any(|&v| v > 0))
        .map(|p| min_eig(&phi_t.defect(&p, &id)))
        .fold(f64::INFINITY, f64::min);
    Ok(Factorization {
        t,
        rank: r,
        intertwining_residual: inter,
        consistency_residual: consistency,
        variety_residual: variety,
        domain_min_eig,
    })
}

/// `Δ_Φ^p(R X R^*)` and `R Δ_Λ^p(X) R^*` where `Λ_i` has Kraus operators `R^{-1} B R`.
pub fn similarity_covariance(phi: &CpTuple, p: &[u32], r: &CMat, x: &CMat) -> Result<(CMat, CMat)> {
    let lambda = phi.with_operators(phi.operators().conjugated(r)?)?;
    let lhs = phi.defect(p, &(r * x * r.adjoint()));
    let rhs = r * lambda.defect(p, x) * r.adjoint();
    Ok((lhs, rhs))
}

/// `Δ_{f,rA}^m(Y)`
pub fn radial_defect(phi: &CpTuple, m: &[u32], r: f64, y: &CMat) -> Result<CMat> {
    let scaled = phi.scaled(r)?;
    Ok(scaled.defect(m, y))
}

/// `lim_q (id − Φ_k^{q_k}) ∘ ⋯ ∘ (id − Φ_1^{q_1})(X)` at finite `q`, factor 1 applied first.
pub fn double_limit_surrogate(phi: &CpTuple, q: &[usize], x: &CMat) -> CMat {
    let mut y = x.clone();
    for (i, &qi) in q.iter().enumerate() {
        let shifted = phi.apply_pow(i, qi, &y);
        y = &y - shifted;
    }
    y
}

/// `Σ_i m_i Φ_i(Y) ⪯ Y`, the sufficient condition for cone membership of a positive `Y`.
pub fn exemp_condition(phi: &CpTuple, m: &[u32], y: &CMat, tol: &Tolerances) -> (bool, f64) {
    let mut acc = y.clone();
    for (i, &mi) in m.iter().enumerate() {
        acc -= phi.apply(i, y) * c64(mi as f64, 0.0);
    }
    let e = min_eig(&acc);
    (e >= -tol.psd_tol(op_norm(y)), e)
}
