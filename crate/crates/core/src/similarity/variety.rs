use nalgebra::DVector;

use crate::cone::{membership, ConeReport};
use crate::config::Tolerances;
use crate::cpmap::{multi_indices_upto, CpTuple, OperatorTuple};
use crate::error::{Error, Result};
use crate::linalg::{self, herm_to_real, min_eig, real_to_herm, CMat, RMat};
use crate::poly::NcPoly;

use super::{variety_residual, Status};

#[derive(Clone, Copy, Debug)]
pub struct VarietyOptions {
    pub max_iters: usize,
    /// Eigenvalue floor imposed on each `Δ^p(R)` in the cone step.
    pub margin: f64,
}

impl Default for VarietyOptions {
    fn default() -> Self {
        VarietyOptions {
            max_iters: 5000,
            margin: 1e-7,
        }
    }
}

#[derive(Clone, Debug)]
pub struct VarietyResult {
    pub status: Status,
    pub r: Option<CMat>,
    pub t: Option<OperatorTuple>,
    pub membership: Option<ConeReport>,
    pub iterations: usize,
    /// Smallest eigenvalue of `Δ^p(R)` over `0 != p <= m` at the returned or last iterate.
    pub min_defect_eig: f64,
    pub variety_residual: f64,
    pub note: String,
}

/// Real matrix of `Δ^p` on Hermitian coordinates.
fn defect_op(ms: &[RMat], p: &[u32]) -> RMat {
    let n = ms[0].nrows();
    let mut l = RMat::identity(n, n);
    for (i, &pi) in p.iter().enumerate() {
        let step = RMat::identity(n, n) - &ms[i];
        for _ in 0..pi {
            l = &step * l;
        }
    }
    l
}

fn clip_below(v: &DVector<f64>, d: usize, floor: f64) -> DVector<f64> {
    let x = real_to_herm(v, d);
    herm_to_real(&linalg::herm_function(&x, |l| l.max(floor)))
}

fn min_defect(ls: &[RMat], r: &DVector<f64>, d: usize) -> f64 {
    ls.iter()
        .map(|l| min_eig(&real_to_herm(&(l * r), d)))
        .fold(f64::INFINITY, f64::min)
}

/// Searches for a positive invertible `R` with `Δ^p(R) ⪰ 0` for all `p <= m`, then returns
/// `T = R^{-1/2} A R^{1/2}`. The search alternates projections between the affine graph of the
/// maps `Δ^p` and the cones `R ⪰ I`, `Δ^p(R) ⪰ margin`; the problem is convex but this solver
/// is a heuristic and reports inconclusive when its budget runs out.
pub fn similarity_to_variety(
    phi: &CpTuple,
    m: &[u32],
    q_polys: &[NcPoly],
    opts: &VarietyOptions,
    tol: &Tolerances,
) -> Result<VarietyResult> {
    let qa = variety_residual(phi.operators(), q_polys)?;
    if qa > tol.residual {
        return Err(Error::Precondition(format!("q(A) != 0 (residual {qa:.3e})")));
    }
    let d = phi.d();
    let ms: Vec<RMat> = (0..phi.k()).map(|i| phi.matricize_real(i)).collect::<Result<_>>()?;
    let ps: Vec<Vec<u32>> = multi_indices_upto(m).into_iter().filter(|p| p.iter().any(|&v| v > 0)).collect();
    let ls: Vec<RMat> = ps.iter().map(|p| defect_op(&ms, p)).collect();
    let n = d * d;

    let accept = |r: &DVector<f64>, iterations: usize, note: &str| -> Result<VarietyResult> {
        let rm = linalg::hermitian_part(&real_to_herm(r, d));
        let half = linalg::pd_sqrt(&rm)?;
        let inv_half = linalg::pd_inv_sqrt(&rm)?;
        let t = phi.operators().map(|a| &inv_half * a * &half);
        let phi_t = phi.with_operators(t.clone())?;
        let report = membership(&phi_t, m, &CMat::identity(d, d), tol, 0)?;
        let status = if report.in_cone() { Status::Pass } else { Status::Inconclusive };
        Ok(VarietyResult {
            status,
            min_defect_eig: min_defect(&ls, r, d),
            variety_residual: variety_residual(&t, q_polys)?,
            r: Some(rm),
            t: Some(t),
            membership: Some(report),
            iterations,
            note: note.into(),
        })
    };

    let id = herm_to_real(&CMat::identity(d, d));
    let psd_tol = tol.psd_tol(1.0);
    if min_defect(&ls, &id, d) >= -psd_tol {
        return accept(&id, 0, "R = I is feasible");
    }

    // (I + Σ L_p^T L_p)^{-1} for the affine projection.
    let mut normal = RMat::identity(n, n);
    for l in &ls {
        normal += l.transpose() * l;
    }
    let solver = normal
        .cholesky()
        .ok_or_else(|| Error::Numerical("normal matrix of the affine projection is not positive definite".into()))?;

    let mut r = id.clone();
    let mut zs: Vec<DVector<f64>> = ls.iter().map(|l| l * &r).collect();
    let mut last = f64::NEG_INFINITY;
    for it in 1..=opts.max_iters {
        // Cone step.
        let r_c = clip_below(&r, d, 1.0);
        let z_c: Vec<DVector<f64>> = zs.iter().map(|z| clip_below(z, d, opts.margin)).collect();
        // Affine step.
        let mut rhs = r_c.clone();
        for (l, z) in ls.iter().zip(&z_c) {
            rhs += l.transpose() * z;
        }
        r = solver.solve(&rhs);
        zs = ls.iter().map(|l| l * &r).collect();
        let rmin = min_eig(&real_to_herm(&r, d));
        last = min_defect(&ls, &r, d);
        if rmin > 0.0 && last >= -psd_tol * (r.norm().max(1.0)) {
            return accept(&r, it, "alternating projections reached a feasible point");
        }
    }
    Ok(VarietyResult {
        status: Status::Inconclusive,
        r: None,
        t: None,
        membership: None,
        iterations: opts.max_iters,
        min_defect_eig: last,
        variety_residual: qa,
        note: "no feasible R found within the iteration budget; the feasibility problem is convex \
               but this alternating-projection search is heuristic, so this is not a proof of infeasibility"
            .into(),
    })
}
