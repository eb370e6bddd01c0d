//! Berezin kernels `K_{f,A}^R`, their compressions `K_ω` to the variety subspace, the
//! transforms `χ ↦ K_ω^*(χ ⊗ I)K_ω` and von Neumann type inequality checks.

use serde::{Deserialize, Serialize};

use crate::cone::membership;
use crate::config::Tolerances;
use crate::cpmap::{tail_bound, CpTuple, OperatorTuple};
use crate::error::{Error, Result};
use crate::fock::{build_model, compress, variety_subspace, Compressed, Model, VarietySubspace};
use crate::linalg::{self, c64, max_eig, min_eig, op_norm, to_complex, CMat, RMat};
use crate::poly::NcPoly;
use crate::words::Word;

/// The data `ω = (f, m, A, R, Q)` together with the weighted series of `R`.
#[derive(Clone, Debug)]
pub struct Compatible {
    pub phi: CpTuple,
    pub m: Vec<u32>,
    pub r: CMat,
    pub q_polys: Vec<NcPoly>,
    /// `Σ_s C(…) Φ^s(R)`
    pub series: CMat,
    pub series_error: f64,
    /// Lower and upper constants with `a I ⪯ series ⪯ b I`, widened by the series error.
    pub a: f64,
    pub b: f64,
    pub variety_residual: f64,
}

/// Checks `R ⪰ 0`, `q(A) = 0` and that the weighted series of `R` converges.
pub fn compatible(phi: &CpTuple, m: &[u32], r: &CMat, q_polys: &[NcPoly], tol: &Tolerances) -> Result<Compatible> {
    let rn = op_norm(r);
    if !linalg::is_hermitian(r, 1e-10) || min_eig(r) < -tol.psd_tol(rn) {
        return Err(Error::Precondition("R must be positive semidefinite".into()));
    }
    let ops = phi.operators();
    let mut qa = 0.0_f64;
    for q in q_polys {
        q.check_letters(&ops.arities())?;
        qa = qa.max(op_norm(&q.eval(ops.families(), phi.d())));
    }
    let scale = ops.families().iter().flatten().map(op_norm).fold(1.0, f64::max);
    if qa > tol.residual * scale.powi(q_polys.iter().map(|q| q.degree()).max().unwrap_or(0) as i32) {
        return Err(Error::Precondition(format!("q(A) != 0 (residual {qa:.3e})")));
    }
    let ws = phi.weighted_series(m, r, tol)?;
    let series = linalg::hermitian_part(&ws.value);
    let a = min_eig(&series) - ws.error_bound;
    let b = max_eig(&series) + ws.error_bound;
    Ok(Compatible {
        phi: phi.clone(),
        m: m.to_vec(),
        r: r.clone(),
        q_polys: q_polys.to_vec(),
        series,
        series_error: ws.error_bound,
        a,
        b,
        variety_residual: qa,
    })
}

/// `R̂ = diag(√λ) V^*` on the positive eigenspace of `R`, so that `R̂^* R̂ = R` up to the clip.
pub fn root_factor(r: &CMat, clip_rel: f64) -> CMat {
    let split = linalg::psd_range(r, clip_rel);
    let mut g = split.basis.adjoint();
    for (row, &l) in split.values.iter().enumerate() {
        let s = l.sqrt();
        for c in 0..g.ncols() {
            g[(row, c)] *= s;
        }
    }
    g
}

/// A kernel stored with rows `fock_index · rank + ρ`.
#[derive(Clone, Debug)]
pub struct BerezinKernel {
    pub matrix: CMat,
    pub rank: usize,
    /// Number of coordinates on the Fock side (Fock dimension, or `dim N_Q` once constrained).
    pub fock_dim: usize,
    pub r_hat: CMat,
    /// Certified bound on `||K_true^* K_true − K^* K||`.
    pub tail_bound: f64,
    /// `||K^*K − series||` as computed.
    pub gram_residual: f64,
}

impl BerezinKernel {
    pub fn gram(&self) -> CMat {
        linalg::hermitian_part(&(self.matrix.adjoint() * &self.matrix))
    }

    /// Rows belonging to the Fock coordinate `idx`.
    pub fn block(&self, idx: usize) -> CMat {
        self.matrix.rows(idx * self.rank, self.rank).into_owned()
    }

    /// `(X ⊗ I_rank) K` for a real matrix `X` acting on the Fock coordinates.
    pub fn left_mul(&self, x: &RMat) -> CMat {
        left_mul(x, &self.matrix, self.rank)
    }

    /// `K^* (χ ⊗ I) K`
    pub fn transform(&self, chi: &CMat) -> CMat {
        let d = self.matrix.ncols();
        let mut out = CMat::zeros(d, d);
        for rho in 0..self.rank {
            let kr = slice_rho(&self.matrix, self.rank, rho);
            out += kr.adjoint() * chi * &kr;
        }
        out
    }
}

fn slice_rho(k: &CMat, rank: usize, rho: usize) -> CMat {
    let n = k.nrows() / rank;
    CMat::from_fn(n, k.ncols(), |a, c| k[(a * rank + rho, c)])
}

fn left_mul(x: &RMat, k: &CMat, rank: usize) -> CMat {
    let xc = to_complex(x);
    let mut out = CMat::zeros(x.nrows() * rank, k.ncols());
    for rho in 0..rank {
        let y = &xc * slice_rho(k, rank, rho);
        for a in 0..y.nrows() {
            for c in 0..y.ncols() {
                out[(a * rank + rho, c)] = y[(a, c)];
            }
        }
    }
    out
}

/// Products `A_{i,β}` for every word of factor `i` in the model's order.
fn word_products(ops: &OperatorTuple, model: &Model, i: usize) -> Vec<CMat> {
    let words = model.fock.factor_words(i);
    let n = model.fock.arities[i];
    let d = ops.d();
    let mut out: Vec<CMat> = Vec::with_capacity(words.len());
    for w in words {
        if w.is_empty() {
            out.push(CMat::identity(d, d));
            continue;
        }
        let (head, rest) = w.split_at(1);
        let ri = crate::words::word_index(n, &rest);
        out.push(ops.op(i, head.letters()[0] as usize - 1) * &out[ri]);
    }
    out
}

fn check_model(phi: &CpTuple, model: &Model, m: &[u32]) -> Result<()> {
    if model.fock.arities != phi.operators().arities() || model.fock.m != m {
        return Err(Error::Dimension("model does not match the operator tuple".into()));
    }
    Ok(())
}

/// Row block `(β_1..β_k)` is `√(Π b_{i,β_i}) R̂ A_{1,β_1}^* ⋯ A_{k,β_k}^*`.
pub fn kernel(omega: &Compatible, model: &Model, tol: &Tolerances) -> Result<BerezinKernel> {
    let phi = &omega.phi;
    check_model(phi, model, &omega.m)?;
    let ops = phi.operators();
    let d = phi.d();
    let r_hat = root_factor(&omega.r, tol.eig_clip_rel);
    let rank = r_hat.nrows();
    let fock = &model.fock;
    let prods: Vec<Vec<CMat>> = (0..fock.k()).map(|i| word_products(ops, model, i)).collect();
    let mut matrix = CMat::zeros(fock.dim() * rank, d);
    for idx in 0..fock.dim() {
        let parts = fock.decompose(idx);
        let mut p = CMat::identity(d, d);
        for (i, &pi) in parts.iter().enumerate() {
            p = p * &prods[i][pi];
        }
        let block = &r_hat * p.adjoint() * c64(fock.weight_product(idx).sqrt(), 0.0);
        matrix.rows_mut(idx * rank, rank).copy_from(&block);
    }
    let mut k = BerezinKernel {
        matrix,
        rank,
        fock_dim: fock.dim(),
        r_hat,
        tail_bound: 0.0,
        gram_residual: 0.0,
    };
    k.gram_residual = op_norm(&(k.gram() - &omega.series));
    k.tail_bound = k.gram_residual + omega.series_error;
    Ok(k)
}

#[derive(Clone, Debug)]
pub struct ConstrainedKernel {
    /// `(B^T ⊗ I) K` in the orthonormal coordinates of `N_Q`.
    pub kernel: BerezinKernel,
    /// `||K − (P_N ⊗ I) K||`
    pub range_residual: f64,
}

/// `K_ω = (P_N ⊗ I) K`, expressed in the basis of `N_Q`.
pub fn constrained_kernel(omega: &Compatible, full: &BerezinKernel, sub: &VarietySubspace) -> ConstrainedKernel {
    let bt = sub.basis.transpose();
    let kn = left_mul(&bt, &full.matrix, full.rank);
    let back = left_mul(&sub.basis, &kn, full.rank);
    let range_residual = op_norm(&(&full.matrix - back));
    let mut kernel = BerezinKernel {
        matrix: kn,
        rank: full.rank,
        fock_dim: sub.dim(),
        r_hat: full.r_hat.clone(),
        tail_bound: 0.0,
        gram_residual: 0.0,
    };
    kernel.gram_residual = op_norm(&(kernel.gram() - &omega.series));
    kernel.tail_bound = kernel.gram_residual + omega.series_error;
    ConstrainedKernel { kernel, range_residual }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IntertwineEntry {
    pub factor: usize,
    pub index: usize,
    /// Residual over rows whose `i`-th degree is below the cap.
    pub interior: f64,
    /// Residual over all rows.
    pub full: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IntertwineReport {
    pub entries: Vec<IntertwineEntry>,
    pub max_interior: f64,
    pub max_full: f64,
}

fn rows_norm(diff: &CMat, rank: usize, keep: &dyn Fn(usize) -> bool) -> f64 {
    let n = diff.nrows() / rank;
    let mut sel = CMat::zeros(0, diff.ncols());
    let rows: Vec<usize> = (0..n).filter(|&a| keep(a)).flat_map(|a| a * rank..(a + 1) * rank).collect();
    if !rows.is_empty() {
        sel = diff.select_rows(rows.iter());
    }
    if sel.nrows() == 0 {
        0.0
    } else {
        op_norm(&sel)
    }
}

fn finish(entries: Vec<IntertwineEntry>) -> IntertwineReport {
    let max_interior = entries.iter().map(|e| e.interior).fold(0.0, f64::max);
    let max_full = entries.iter().map(|e| e.full).fold(0.0, f64::max);
    IntertwineReport {
        entries,
        max_interior,
        max_full,
    }
}

/// `||K A_{i,j}^* − (W_{i,j}^* ⊗ I) K||`
pub fn intertwine_check(phi: &CpTuple, model: &Model, k: &BerezinKernel) -> IntertwineReport {
    let rank = k.rank;
    let fock = &model.fock;
    let mut entries = Vec::new();
    for (i, fam) in model.ops().iter().enumerate() {
        for (j, w) in fam.iter().enumerate() {
            let lhs = &k.matrix * phi.operators().op(i, j).adjoint();
            let mut rhs = CMat::zeros(k.matrix.nrows(), k.matrix.ncols());
            for c in 0..fock.dim() {
                if let Some((t, v)) = w.entry(c) {
                    let blk = k.matrix.rows(t * rank, rank) * c64(v, 0.0);
                    rhs.rows_mut(c * rank, rank).copy_from(&blk);
                }
            }
            let diff = lhs - rhs;
            let interior = rows_norm(&diff, rank, &|a| fock.degrees_at(a)[i] < fock.degree);
            entries.push(IntertwineEntry {
                factor: i + 1,
                index: j + 1,
                interior,
                full: op_norm(&diff),
            });
        }
    }
    finish(entries)
}

/// `||K_ω A_{i,j}^* − (S_{i,j}^* ⊗ I) K_ω||`
pub fn intertwine_check_compressed(
    phi: &CpTuple,
    model: &Model,
    sub: &VarietySubspace,
    comp: &Compressed,
    k: &BerezinKernel,
) -> IntertwineReport {
    let mut entries = Vec::new();
    for (i, fam) in comp.s.iter().enumerate() {
        for (j, s) in fam.iter().enumerate() {
            let lhs = &k.matrix * phi.operators().op(i, j).adjoint();
            let rhs = left_mul(&s.transpose(), &k.matrix, k.rank);
            let diff = lhs - rhs;
            let interior = rows_norm(&diff, k.rank, &|a| sub.degrees[a][i] < model.fock.degree);
            entries.push(IntertwineEntry {
                factor: i + 1,
                index: j + 1,
                interior,
                full: op_norm(&diff),
            });
        }
    }
    finish(entries)
}

/// `B_ω[χ] = K_ω^*(χ ⊗ I) K_ω`
pub fn transform(k: &BerezinKernel, chi: &CMat) -> Result<CMat> {
    if chi.nrows() != k.fock_dim || chi.ncols() != k.fock_dim {
        return Err(Error::Dimension(format!(
            "χ is {}x{}, expected {}x{}",
            chi.nrows(),
            chi.ncols(),
            k.fock_dim,
            k.fock_dim
        )));
    }
    Ok(k.transform(chi))
}

/// A pair of multi-words `((α), (β))` selecting `χ = S_{(α)} S_{(β)}^*`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordPair {
    pub alpha: Vec<Word>,
    pub beta: Vec<Word>,
}

impl WordPair {
    pub fn total_len(&self) -> usize {
        self.alpha.iter().chain(&self.beta).map(|w| w.len()).sum()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepPoint {
    pub r: f64,
    /// `||K^*K − D||`
    pub gram_residual: f64,
    pub tail_bound: f64,
    /// Per word pair, `||B[S_α S_β^*] − r^{|α|+|β|} A_α D A_β^*||`.
    pub ksk_residuals: Vec<f64>,
    /// Operator norm of the change of each transform value since the previous grid point.
    pub cauchy: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    pub values: Vec<Vec<CMat>>,
    pub max_gram_residual: f64,
    pub max_ksk_residual: f64,
}

/// Evaluates `K_{ω_r}^*(χ ⊗ I)K_{ω_r}` for `ω_r = (f, m, rA, Δ_{f,rA}^m(D), Q)` along `r_grid`.
pub fn extended_transform_sweep(
    phi: &CpTuple,
    m: &[u32],
    d_pos: &CMat,
    q_polys: &[NcPoly],
    r_grid: &[f64],
    pairs: &[WordPair],
    degree: usize,
    tol: &Tolerances,
) -> Result<SweepReport> {
    let k = phi.k();
    for q in q_polys {
        if !q.is_homogeneous(k) {
            return Err(Error::Precondition("the sweep needs homogeneous constraint polynomials".into()));
        }
    }
    let cone = membership(phi, m, d_pos, tol, 0)?;
    if !cone.in_cone() {
        return Err(Error::Precondition("D is not in the cone".into()));
    }
    for &r in r_grid {
        if !(0.0..1.0).contains(&r) {
            return Err(Error::Invalid(format!("sweep radius {r} outside [0, 1)")));
        }
    }
    let model = build_model(phi.symbols(), m, degree)?;
    let sub = variety_subspace(&model, q_polys, tol)?;
    let comp = compress(&model, &sub);
    let chis: Vec<CMat> = pairs
        .iter()
        .map(|p| to_complex(&(comp.multi_word(&p.alpha) * comp.multi_word(&p.beta).transpose())))
        .collect();
    let mut points: Vec<SweepPoint> = Vec::new();
    let mut values: Vec<Vec<CMat>> = Vec::new();
    for &r in r_grid {
        let phi_r = phi.scaled(r)?;
        let r_mat = linalg::hermitian_part(&phi_r.defect(m, d_pos));
        // Tiny negative eigenvalues from roundoff are clipped by the root factor.
        let omega = Compatible {
            series: d_pos.clone(),
            ..compatible(&phi_r, m, &clip_psd(&r_mat), q_polys, tol)?
        };
        let full = kernel(&omega, &model, tol)?;
        let ck = constrained_kernel(&omega, &full, &sub).kernel;
        let gram_residual = op_norm(&(ck.gram() - d_pos));
        let ops_r = phi_r.operators();
        let mut vals = Vec::with_capacity(pairs.len());
        let mut ksk = Vec::with_capacity(pairs.len());
        for (p, chi) in pairs.iter().zip(&chis) {
            let v = ck.transform(chi);
            let want = ops_r.multi_product(&p.alpha) * d_pos * ops_r.multi_product(&p.beta).adjoint();
            ksk.push(op_norm(&(&v - want)));
            vals.push(v);
        }
        let cauchy = match values.last() {
            Some(prev) => prev.iter().zip(&vals).map(|(a, b)| op_norm(&(b - a))).collect(),
            None => Vec::new(),
        };
        points.push(SweepPoint {
            r,
            gram_residual,
            tail_bound: omega.series_error + op_norm(&(ck.gram() - &omega.series)),
            ksk_residuals: ksk,
            cauchy,
        });
        values.push(vals);
    }
    let max_gram_residual = points.iter().map(|p| p.gram_residual).fold(0.0, f64::max);
    let max_ksk_residual = points
        .iter()
        .flat_map(|p| p.ksk_residuals.iter().copied())
        .fold(0.0, f64::max);
    Ok(SweepReport {
        points,
        values,
        max_gram_residual,
        max_ksk_residual,
    })
}

fn clip_psd(x: &CMat) -> CMat {
    linalg::herm_function(x, |l| l.max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VnVerdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VnReport {
    pub mode: String,
    pub lhs: f64,
    /// Sound lower bound of the right-hand side.
    pub rhs_lower: f64,
    /// Upper bound of the right-hand side (polydisc mode only; model mode repeats the largest truncation).
    pub rhs_upper: f64,
    /// Polydisc: `b` partial sum and its tail; model: `||D||`.
    pub constant: f64,
    pub constant_tail: f64,
    /// Polydisc: coarse and refined grid maxima; model: truncated norms at `D, D+1, D+2`.
    pub samples: Vec<f64>,
    pub stabilized: bool,
    pub verdict: VnVerdict,
}

/// A matrix of polynomials evaluated blockwise.
pub type PolyMatrix = Vec<Vec<NcPoly>>;

fn check_square_poly(q: &PolyMatrix) -> Result<usize> {
    let p = q.len();
    if p == 0 || q.iter().any(|row| row.len() != p) {
        return Err(Error::Invalid("polynomial matrix must be square and nonempty".into()));
    }
    Ok(p)
}

fn block_eval(q: &PolyMatrix, d: usize, eval: &dyn Fn(&NcPoly) -> CMat) -> CMat {
    let p = q.len();
    let mut out = CMat::zeros(p * d, p * d);
    for (s, row) in q.iter().enumerate() {
        for (t, poly) in row.iter().enumerate() {
            out.view_mut((s * d, t * d), (d, d)).copy_from(&eval(poly));
        }
    }
    out
}

/// `Σ_s ||C^s||²` with a certified tail.
fn power_norm_sum(c: &CMat) -> (f64, f64) {
    let d = c.nrows();
    let mut norms = vec![1.0];
    let mut pw = CMat::identity(d, d);
    let mut sum = 0.0;
    loop {
        pw = &pw * c;
        let exact_zero = pw.iter().all(|z| z.re == 0.0 && z.im == 0.0);
        norms.push(if exact_zero { 0.0 } else { op_norm(&pw).powi(2) });
        // norms now holds ν_0..ν_{s+1}; the partial sum runs to s.
        let s = norms.len() - 2;
        sum += norms[s];
        let tail = tail_bound(&norms, 1, s);
        if tail <= 1e-15 * sum || norms.len() > 100_000 {
            return (sum, tail);
        }
    }
}

/// Checks of `||[q_{s,t}(A)] (I ⊗ D)|| ≤ ||D|| ||[q_{s,t}(S)]||` (model mode) and
/// `||[q_{s,t}(C)]|| ≤ √b sup_{T^k} ||[q_{s,t}(z)]||` (polydisc mode).
pub fn vn_check_polydisc(phi: &CpTuple, q: &PolyMatrix, grid: usize, rel_tol: f64) -> Result<VnReport> {
    let p = check_square_poly(q)?;
    let ops = phi.operators();
    let k = phi.k();
    if ops.arities().iter().any(|&n| n != 1) {
        return Err(Error::Precondition("polydisc mode needs n_i = 1 for every factor".into()));
    }
    for row in q {
        for poly in row {
            poly.check_letters(&ops.arities())?;
        }
    }
    let points = (grid as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if points > 1 << 24 {
        return Err(Error::Resource {
            what: "torus grid points",
            requested: points.min(usize::MAX as u128) as usize,
            cap: 1 << 24,
        });
    }
    let d = phi.d();
    let lhs = op_norm(&block_eval(q, d, &|poly| poly.eval(ops.families(), d)));
    let mut b = 1.0;
    let mut b_upper = 1.0;
    for i in 0..k {
        let (s, t) = power_norm_sum(ops.op(i, 0));
        b *= s;
        b_upper *= s + t;
    }
    // Commutative symbol: coefficient matrices M_a indexed by exponent vectors.
    let mut coeffs: std::collections::BTreeMap<Vec<usize>, CMat> = std::collections::BTreeMap::new();
    for (s, row) in q.iter().enumerate() {
        for (t, poly) in row.iter().enumerate() {
            for term in &poly.terms {
                let e = NcPoly::profile(&term.monomial, k);
                let mref = coeffs.entry(e).or_insert_with(|| CMat::zeros(p, p));
                mref[(s, t)] += c64(term.coeff, 0.0);
            }
        }
    }
    let coeffs: Vec<(Vec<usize>, CMat)> = coeffs.into_iter().collect();
    let lipschitz: f64 = coeffs
        .iter()
        .map(|(e, mm)| op_norm(mm) * e.iter().sum::<usize>() as f64)
        .sum();
    let eval_at = |theta: &[f64]| -> f64 {
        let mut acc = CMat::zeros(p, p);
        for (e, mm) in &coeffs {
            let phase: f64 = e.iter().zip(theta).map(|(&a, &t)| a as f64 * t).sum();
            acc += mm * c64(phase.cos(), phase.sin());
        }
        op_norm(&acc)
    };
    let h = 2.0 * std::f64::consts::PI / grid as f64;
    let mut best: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut grid_max = 0.0_f64;
    let mut idx = vec![0usize; k];
    loop {
        let theta: Vec<f64> = idx.iter().map(|&v| v as f64 * h).collect();
        let v = eval_at(&theta);
        grid_max = grid_max.max(v);
        best.push((v, theta));
        if best.len() > 64 {
            best.sort_by(|a, b| b.0.total_cmp(&a.0));
            best.truncate(16);
        }
        let mut pos = 0;
        loop {
            if pos == k {
                break;
            }
            idx[pos] += 1;
            if idx[pos] < grid {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
        if pos == k {
            break;
        }
    }
    let coarse = grid_max;
    let lower = |gm: f64| b.sqrt() * gm;
    let upper = |gm: f64, hh: f64| b_upper.sqrt() * (gm + 0.5 * hh * lipschitz);
    let mut samples = vec![coarse];
    let mut verdict = decide(lhs, lower(grid_max), upper(grid_max, h), rel_tol);
    let mut hh = h;
    if verdict == VnVerdict::Inconclusive {
        // Local refinement around the best coarse points.
        best.sort_by(|a, b| b.0.total_cmp(&a.0));
        best.truncate(8);
        for _ in 0..3 {
            let sub = 8usize;
            let fine = hh / sub as f64;
            let mut next: Vec<(f64, Vec<f64>)> = Vec::new();
            for (_, centre) in &best {
                let mut off = vec![0usize; k];
                loop {
                    let theta: Vec<f64> = centre
                        .iter()
                        .zip(&off)
                        .map(|(&c, &o)| c + (o as f64 - sub as f64 / 2.0) * fine)
                        .collect();
                    let v = eval_at(&theta);
                    grid_max = grid_max.max(v);
                    next.push((v, theta));
                    let mut pos = 0;
                    while pos < k {
                        off[pos] += 1;
                        if off[pos] <= sub {
                            break;
                        }
                        off[pos] = 0;
                        pos += 1;
                    }
                    if pos == k {
                        break;
                    }
                }
            }
            next.sort_by(|a, b| b.0.total_cmp(&a.0));
            next.truncate(8);
            best = next;
            hh = fine;
            samples.push(grid_max);
            verdict = decide(lhs, lower(grid_max), upper(coarse, h), rel_tol);
            if verdict != VnVerdict::Inconclusive {
                break;
            }
        }
    }
    Ok(VnReport {
        mode: "polydisc".into(),
        lhs,
        rhs_lower: lower(grid_max),
        rhs_upper: upper(coarse, h),
        constant: b,
        constant_tail: b_upper - b,
        samples,
        stabilized: true,
        verdict,
    })
}

fn decide(lhs: f64, lower: f64, upper: f64, rel_tol: f64) -> VnVerdict {
    if lhs <= lower * (1.0 + rel_tol) + f64::EPSILON {
        VnVerdict::Pass
    } else if lhs > upper * (1.0 + rel_tol) {
        VnVerdict::Fail
    } else {
        VnVerdict::Inconclusive
    }
}

/// Model mode: `LHS = ||[q_{s,t}(A) D]||`, `RHS = ||D|| ||[q_{s,t}(S)]||` at truncations `D, D+1, D+2`.
pub fn vn_check_model(
    phi: &CpTuple,
    m: &[u32],
    d_pos: &CMat,
    q_constraints: &[NcPoly],
    q: &PolyMatrix,
    degree: usize,
    tol: &Tolerances,
) -> Result<VnReport> {
    check_square_poly(q)?;
    let ops = phi.operators();
    for row in q {
        for poly in row {
            poly.check_letters(&ops.arities())?;
        }
    }
    let cone = membership(phi, m, d_pos, tol, 0)?;
    if !cone.in_cone() {
        return Err(Error::Precondition("D is not in the cone".into()));
    }
    let d = phi.d();
    let lhs = op_norm(&block_eval(q, d, &|poly| poly.eval(ops.families(), d) * d_pos));
    let dn = op_norm(d_pos);
    let mut samples = Vec::with_capacity(3);
    for deg in degree..=degree + 2 {
        let model = build_model(phi.symbols(), m, deg)?;
        let sub = variety_subspace(&model, q_constraints, tol)?;
        let comp = compress(&model, &sub);
        let r = sub.dim();
        let block = block_eval(q, r, &|poly| to_complex(&comp.eval_poly(poly)));
        samples.push(op_norm(&block));
    }
    let last = samples[2];
    let stabilized = (samples[2] - samples[0]).abs() <= 1e-6 * last.max(1e-300);
    let bound = dn * last;
    let verdict = if !stabilized {
        VnVerdict::Inconclusive
    } else if lhs <= bound * (1.0 + tol.residual) + f64::EPSILON {
        VnVerdict::Pass
    } else {
        VnVerdict::Fail
    };
    Ok(VnReport {
        mode: "model".into(),
        lhs,
        rhs_lower: bound,
        rhs_upper: bound,
        constant: dn,
        constant_tail: 0.0,
        samples,
        stabilized,
        verdict,
    })
}
