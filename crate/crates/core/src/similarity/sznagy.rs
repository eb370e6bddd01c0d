use nalgebra::{Complex, DVector};

use crate::config::Tolerances;
use crate::cpmap::{CpTuple, OperatorTuple};
use crate::error::{Error, Result};
use crate::linalg::{self, herm_to_real, max_eig, min_eig, op_norm, real_to_herm, CMat, RMat};

use super::{CertKind, SimilarityCertificate, Status};

#[derive(Clone, Copy, Debug)]
pub struct SzNagyOptions {
    /// Longest iterate used when sampling the two-sided bound, and the cap on outer Cesàro rounds.
    pub max_iters: usize,
    /// Relative change at which the doubling stage and the outer rounds stop.
    pub tol: f64,
    /// Tolerance for `||Φ_i(Q) − Q||` and the conjugated identities.
    pub residual_tol: f64,
}

impl Default for SzNagyOptions {
    fn default() -> Self {
        SzNagyOptions {
            max_iters: 4096,
            tol: 1e-9,
            residual_tol: 1e-7,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SzNagyResult {
    pub certificate: SimilarityCertificate,
    pub q: CMat,
    pub t: OperatorTuple,
    pub c: f64,
    pub d: f64,
    /// Doubling exponent reached per factor and outer rounds used.
    pub doublings: Vec<u32>,
    pub rounds: Vec<usize>,
    pub fixed_space_dim: usize,
    /// `||Q − Π Q|| / ||Q||` for the projection `Π` onto the common fixed space.
    pub oracle_distance: f64,
    /// Relative distance from `Q` to the span of words in `A`, `A^*`.
    pub algebra_distance: f64,
}

const MAX_DOUBLINGS: u32 = 12;
const ROUND_TOL: f64 = 1e-12;

fn mat_pow(m: &RMat, mut e: usize) -> RMat {
    let n = m.nrows();
    let mut base = m.clone();
    let mut acc = RMat::identity(n, n);
    while e > 0 {
        if e & 1 == 1 {
            acc = &acc * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    acc
}

/// Lengths `0..=16` and powers of two from 32 up to `max_iters`.
fn sample_lengths(max_iters: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..=16).collect();
    let mut p = 32;
    while p <= max_iters {
        out.push(p);
        p *= 2;
    }
    out
}

/// `c = min λ_min`, `d = max λ_max` of `Φ_1^{s_1} ∘ ⋯ ∘ Φ_k^{s_k}(I)` over the sample grid.
fn sampled_bounds(ms: &[RMat], dim: usize, max_iters: usize) -> (f64, f64) {
    let lengths = sample_lengths(max_iters);
    let pows: Vec<Vec<RMat>> = ms.iter().map(|m| lengths.iter().map(|&s| mat_pow(m, s)).collect()).collect();
    let id = herm_to_real(&CMat::identity(dim, dim));
    let mut c = f64::INFINITY;
    let mut d = 0.0_f64;
    let k = ms.len();
    let mut idx = vec![0usize; k];
    loop {
        let mut v = id.clone();
        for i in (0..k).rev() {
            v = &pows[i][idx[i]] * v;
        }
        let x = real_to_herm(&v, dim);
        let e = linalg::herm_eigen(&x);
        c = c.min(e.values[0]);
        d = d.max(e.values[dim - 1]);
        let mut pos = 0;
        while pos < k {
            idx[pos] += 1;
            if idx[pos] < lengths.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
        if pos == k {
            break;
        }
    }
    (c, d)
}

/// Averages `x` over the iterates of `m` until the Cesàro means stabilize.
///
/// The doubling `A_{2p} = A_p (I + M^p)/2` runs to `2^12`; after that the mean operator
/// `A_p` is applied repeatedly, which contracts every non-fixed mode geometrically, until the
/// change is negligible or stops shrinking.
fn cesaro_limit(m: &RMat, x: &DVector<f64>, opts: &SzNagyOptions) -> (DVector<f64>, u32, usize, bool) {
    let n = m.nrows();
    let mut a = RMat::identity(n, n);
    let mut pw = m.clone();
    let mut cur = x.clone();
    let mut j = 0;
    let mut converged = false;
    while j < MAX_DOUBLINGS {
        let half = (RMat::identity(n, n) + &pw) * 0.5;
        a = &a * half;
        pw = &pw * &pw;
        j += 1;
        let next = &a * x;
        let change = (&next - &cur).norm();
        cur = next;
        if change <= opts.tol * cur.norm() {
            converged = true;
            break;
        }
    }
    let mut rounds = 0;
    let mut last_change = f64::INFINITY;
    while !converged && rounds < opts.max_iters {
        let next = &a * &cur;
        let change = (&next - &cur).norm();
        cur = next;
        rounds += 1;
        // Either the change is negligible, or it has hit the roundoff floor of `a`.
        let stalled = change <= opts.tol * cur.norm() && change > 0.5 * last_change;
        if change <= ROUND_TOL * cur.norm() || stalled {
            converged = true;
        }
        last_change = change;
    }
    (cur, j, rounds, converged)
}

/// Null space of the stacked `M_i − I`, orthonormal columns.
fn fixed_space(ms: &[RMat]) -> RMat {
    let n = ms[0].nrows();
    let mut stacked = RMat::zeros(n * ms.len(), n);
    for (i, m) in ms.iter().enumerate() {
        stacked.view_mut((i * n, 0), (n, n)).copy_from(&(m - RMat::identity(n, n)));
    }
    // Null space of the stack equals that of its Gram matrix.
    let gram = stacked.transpose() * &stacked;
    let eig = gram.symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(1.0_f64, |a, &b| a.max(b.abs()));
    let cols: Vec<usize> = (0..n).filter(|&c| eig.eigenvalues[c].abs() <= 1e-14 * scale).collect();
    eig.eigenvectors.select_columns(cols.iter())
}

/// Relative distance from `q` to `span{words in A, A^*}`.
fn algebra_distance(ops: &OperatorTuple, q: &CMat) -> f64 {
    let d = ops.d();
    let gens: Vec<CMat> = ops
        .families()
        .iter()
        .flatten()
        .flat_map(|a| [a.clone(), a.adjoint()])
        .collect();
    let mut basis: Vec<DVector<Complex<f64>>> = Vec::new();
    let mut frontier = vec![CMat::identity(d, d)];
    let add = |basis: &mut Vec<DVector<Complex<f64>>>, x: &CMat| -> bool {
        let mut v = linalg::vec_col(x);
        let n0 = v.norm();
        if n0 == 0.0 {
            return false;
        }
        for _ in 0..2 {
            for b in basis.iter() {
                let c = b.dotc(&v);
                v -= b * c;
            }
        }
        let n1 = v.norm();
        if n1 <= 1e-10 * n0 {
            return false;
        }
        basis.push(v / Complex::new(n1, 0.0));
        true
    };
    add(&mut basis, &frontier[0]);
    while !frontier.is_empty() && basis.len() < d * d {
        let mut next = Vec::new();
        for w in &frontier {
            for g in &gens {
                let x = g * w;
                if add(&mut basis, &x) {
                    next.push(x);
                }
            }
        }
        frontier = next;
    }
    let mut v = linalg::vec_col(q);
    let n0 = v.norm();
    for b in &basis {
        let c = b.dotc(&v);
        v -= b * c;
    }
    v.norm() / n0.max(f64::MIN_POSITIVE)
}

/// A positive invertible `Q` with `Φ_i(Q) = Q` for every `i`, and `T = Q^{-1/2} A Q^{1/2}`.
pub fn sznagy_solve(phi: &CpTuple, opts: &SzNagyOptions, tol: &Tolerances) -> Result<SzNagyResult> {
    let d = phi.d();
    let k = phi.k();
    let ms: Vec<RMat> = (0..k).map(|i| phi.matricize_real(i)).collect::<Result<_>>()?;
    let (c, dd) = sampled_bounds(&ms, d, opts.max_iters);
    if c <= tol.pd_abs {
        return Err(Error::Precondition(format!(
            "two-sided bound fails: sampled lower constant c = {c:.3e}"
        )));
    }
    let mut x = herm_to_real(&CMat::identity(d, d));
    let mut doublings = Vec::with_capacity(k);
    let mut rounds = Vec::with_capacity(k);
    let mut converged = true;
    for m in &ms {
        let (next, j, r, ok) = cesaro_limit(m, &x, opts);
        x = next;
        doublings.push(j);
        rounds.push(r);
        converged &= ok;
    }
    let q = linalg::hermitian_part(&real_to_herm(&x, d));
    let qmin = min_eig(&q);
    if qmin <= 0.0 {
        return Err(Error::Numerical(format!("Cesàro limit is not positive definite (min eig {qmin:.3e})")));
    }
    let q_half = linalg::pd_sqrt(&q)?;
    let q_inv_half = linalg::pd_inv_sqrt(&q)?;
    let t = phi.operators().map(|a| &q_inv_half * a * &q_half);
    let phi_t = phi.with_operators(t.clone())?;

    let mut cert = SimilarityCertificate::new(CertKind::IsometricConjugation, q.clone());
    let qn = op_norm(&q);
    let fixed = (0..k).map(|i| op_norm(&(phi.apply(i, &q) - &q))).fold(0.0, f64::max);
    cert.at_most("fixed_point", fixed / qn.max(1.0), opts.residual_tol);
    let id = CMat::identity(d, d);
    let unital = (0..k).map(|i| op_norm(&(phi_t.apply(i, &id) - &id))).fold(0.0, f64::max);
    cert.at_most("unital", unital, opts.residual_tol);
    // Single-letter factors with unit coefficient: finite-dimensional coisometries are unitary.
    let unitary: Vec<f64> = (0..k)
        .filter(|&i| {
            let f = &phi.symbols()[i];
            f.arity == 1 && f.max_degree() == 1 && f.coeff(&crate::words::Word::letter(1)) == 1.0
        })
        .map(|i| op_norm(&(t.op(i, 0).adjoint() * t.op(i, 0) - &id)))
        .collect();
    if !unitary.is_empty() {
        cert.at_most("isometry", unitary.iter().copied().fold(0.0, f64::max), opts.residual_tol);
    }
    let slack = 1e-6;
    cert.at_least("lower_bound", qmin, c * (1.0 - slack));
    cert.at_most("upper_bound", max_eig(&q), dd * (1.0 + slack));

    let fs = fixed_space(&ms);
    let qv = herm_to_real(&q);
    let proj = &fs * (fs.transpose() * &qv);
    let oracle_distance = (&qv - proj).norm() / qv.norm();
    if fs.ncols() == 1 {
        cert.at_most("nullspace_oracle", oracle_distance, 1e-6);
    }
    let algebra = algebra_distance(phi.operators(), &q);
    cert.cond = super::pd_cond(&q).sqrt();
    cert.claimed_bound = Some((dd / c).sqrt());
    cert.constant("c", c);
    cert.constant("d", dd);
    cert.constant("fixed_space_dim", fs.ncols() as f64);
    cert.constant("oracle_distance", oracle_distance);
    cert.constant("algebra_distance", algebra);
    cert.finalize();
    if !converged {
        // Without a settled limit a failed check says nothing definite about the tuple.
        cert.status = Status::Inconclusive;
        cert.notes.push("Cesàro means did not stabilize within the iteration budget".into());
    }
    Ok(SzNagyResult {
        certificate: cert,
        q,
        t,
        c,
        d: dd,
        doublings,
        rounds,
        fixed_space_dim: fs.ncols(),
        oracle_distance,
        algebra_distance: algebra,
    })
}
