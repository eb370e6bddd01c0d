//! Truncated tensor products of full Fock spaces, the weighted creation operators `W_{i,j}`,
//! variety subspaces `N_Q` and compressed models `S_{i,j}`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::config::{max_fock_dim, Tolerances};
use crate::error::{Error, Result};
use crate::linalg::RMat;
use crate::poly::{Letter, NcPoly};
use crate::words::{enumerate_words, weight_table, word_count, word_index, PositiveSymbol, WeightTable, Word};

/// Basis `e_{β_1} ⊗ ⋯ ⊗ e_{β_k}` with `|β_i| <= D`, factor 1 most significant.
#[derive(Clone, Debug)]
pub struct TruncatedFock {
    pub arities: Vec<usize>,
    pub degree: usize,
    pub m: Vec<u32>,
    words: Vec<Vec<Word>>,
    sizes: Vec<usize>,
    strides: Vec<usize>,
    weights: Vec<WeightTable>,
    dim: usize,
}

impl TruncatedFock {
    pub fn new(symbols: &[PositiveSymbol], m: &[u32], degree: usize) -> Result<Self> {
        if symbols.len() != m.len() || symbols.is_empty() {
            return Err(Error::Dimension("need one weight order per symbol".into()));
        }
        let arities: Vec<usize> = symbols.iter().map(|f| f.arity).collect();
        let cap = max_fock_dim();
        let mut dim: usize = 1;
        let mut sizes = Vec::with_capacity(arities.len());
        for &n in &arities {
            let s = word_count(n, degree).unwrap_or(usize::MAX);
            sizes.push(s);
            dim = dim.saturating_mul(s);
        }
        if dim > cap {
            return Err(Error::Resource {
                what: "truncated Fock dimension",
                requested: dim,
                cap,
            });
        }
        let mut words = Vec::with_capacity(arities.len());
        let mut weights = Vec::with_capacity(arities.len());
        for (f, &mi) in symbols.iter().zip(m) {
            words.push(enumerate_words(f.arity, degree)?);
            weights.push(weight_table(f, mi, degree)?);
        }
        let k = arities.len();
        let mut strides = vec![1; k];
        for i in (0..k.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * sizes[i + 1];
        }
        Ok(TruncatedFock {
            arities,
            degree,
            m: m.to_vec(),
            words,
            sizes,
            strides,
            weights,
            dim,
        })
    }

    pub fn k(&self) -> usize {
        self.arities.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn factor_size(&self, i: usize) -> usize {
        self.sizes[i]
    }

    pub fn factor_words(&self, i: usize) -> &[Word] {
        &self.words[i]
    }

    pub fn weight(&self, i: usize) -> &WeightTable {
        &self.weights[i]
    }

    /// Global index from per-factor word indices.
    pub fn index(&self, parts: &[usize]) -> usize {
        parts.iter().zip(&self.strides).map(|(p, s)| p * s).sum()
    }

    pub fn index_of_words(&self, words: &[Word]) -> Option<usize> {
        let mut parts = Vec::with_capacity(self.k());
        for (i, w) in words.iter().enumerate() {
            if w.len() > self.degree || !w.in_range(self.arities[i]) {
                return None;
            }
            parts.push(word_index(self.arities[i], w));
        }
        Some(self.index(&parts))
    }

    pub fn decompose(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.k()];
        for i in 0..self.k() {
            out[i] = idx / self.strides[i];
            idx %= self.strides[i];
        }
        out
    }

    pub fn words_at(&self, idx: usize) -> Vec<Word> {
        self.decompose(idx)
            .into_iter()
            .enumerate()
            .map(|(i, p)| self.words[i][p].clone())
            .collect()
    }

    pub fn degrees_at(&self, idx: usize) -> Vec<usize> {
        self.decompose(idx)
            .into_iter()
            .enumerate()
            .map(|(i, p)| self.words[i][p].len())
            .collect()
    }

    /// Product of the per-factor weights `Π_i b_{i,β_i}` at a basis index.
    pub fn weight_product(&self, idx: usize) -> f64 {
        self.decompose(idx)
            .into_iter()
            .enumerate()
            .map(|(i, p)| self.weights[i].by_index(p))
            .product()
    }
}

/// A matrix with at most one nonzero per column: `W e_c = value[c] e_{target[c]}`.
#[derive(Clone, Debug)]
pub struct ShiftOp {
    target: Vec<usize>,
    value: Vec<f64>,
}

const NONE: usize = usize::MAX;

impl ShiftOp {
    pub fn dim(&self) -> usize {
        self.target.len()
    }

    pub fn entry(&self, col: usize) -> Option<(usize, f64)> {
        if self.target[col] == NONE {
            None
        } else {
            Some((self.target[col], self.value[col]))
        }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (c, &x) in v.iter().enumerate() {
            let t = self.target[c];
            if t != NONE && x != 0.0 {
                out[t] += self.value[c] * x;
            }
        }
        out
    }

    pub fn apply_adjoint(&self, v: &[f64]) -> Vec<f64> {
        (0..v.len())
            .map(|c| {
                let t = self.target[c];
                if t == NONE {
                    0.0
                } else {
                    self.value[c] * v[t]
                }
            })
            .collect()
    }

    /// `W B` for a dense `dim × r` matrix.
    pub fn apply_mat(&self, b: &RMat) -> RMat {
        let mut out = RMat::zeros(b.nrows(), b.ncols());
        for c in 0..self.dim() {
            let t = self.target[c];
            if t == NONE {
                continue;
            }
            for col in 0..b.ncols() {
                out[(t, col)] += self.value[c] * b[(c, col)];
            }
        }
        out
    }

    /// `W^T B`
    pub fn apply_adjoint_mat(&self, b: &RMat) -> RMat {
        let mut out = RMat::zeros(b.nrows(), b.ncols());
        for c in 0..self.dim() {
            let t = self.target[c];
            if t == NONE {
                continue;
            }
            for col in 0..b.ncols() {
                out[(c, col)] = self.value[c] * b[(t, col)];
            }
        }
        out
    }

    pub fn to_dense(&self) -> RMat {
        let n = self.dim();
        let mut out = RMat::zeros(n, n);
        for c in 0..n {
            if let Some((t, v)) = self.entry(c) {
                out[(t, c)] = v;
            }
        }
        out
    }

    /// `(row, col, value)` triplets in column order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.dim())
            .filter_map(|c| self.entry(c).map(|(t, v)| (t, c, v)))
            .collect()
    }
}

/// The weighted creation operators `W_{i,j}` on the truncated space.
#[derive(Clone, Debug)]
pub struct Model {
    pub fock: TruncatedFock,
    pub symbols: Vec<PositiveSymbol>,
    ops: Vec<Vec<ShiftOp>>,
}

impl Model {
    pub fn op(&self, i: usize, j: usize) -> &ShiftOp {
        &self.ops[i][j]
    }

    pub fn ops(&self) -> &[Vec<ShiftOp>] {
        &self.ops
    }

    pub fn dim(&self) -> usize {
        self.fock.dim()
    }

    pub fn apply_letter(&self, l: Letter, v: &[f64]) -> Vec<f64> {
        self.ops[l.factor][l.index].apply(v)
    }

    /// `q(W) v`
    pub fn apply_poly(&self, q: &NcPoly, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for t in &q.terms {
            let mut w = v.to_vec();
            for l in t.monomial.iter().rev() {
                w = self.apply_letter(*l, &w);
            }
            for (o, x) in out.iter_mut().zip(&w) {
                *o += t.coeff * x;
            }
        }
        out
    }

    /// `W_{(α)}` applied to `v`, for a multi-word `(α_1, …, α_k)`.
    pub fn apply_multi_word(&self, words: &[Word], v: &[f64]) -> Vec<f64> {
        let mut w = v.to_vec();
        for (i, word) in words.iter().enumerate().rev() {
            for &j in word.letters().iter().rev() {
                w = self.ops[i][j as usize - 1].apply(&w);
            }
        }
        w
    }

    /// Diagonal of `Φ_{f_i,W_i}(D)` for diagonal `D`.
    ///
    /// `(Φ_i(D))_γ = Σ_{α β = γ_i, |α| >= 1} a_α (b_β / b_{γ_i}) D_{γ[i ↦ β]}`.
    pub fn phi_diagonal(&self, i: usize, diag: &[f64]) -> Vec<f64> {
        let fock = &self.fock;
        let n = fock.arities[i];
        let wt = fock.weight(i);
        let terms: Vec<(Word, f64)> = self.symbols[i].terms().map(|(w, a)| (w.clone(), a)).collect();
        let mut out = vec![0.0; fock.dim()];
        for (idx, o) in out.iter_mut().enumerate() {
            let mut parts = fock.decompose(idx);
            let gamma = &fock.words[i][parts[i]];
            let bg = wt.by_index(parts[i]);
            let mut acc = 0.0;
            for (alpha, a) in &terms {
                let al = alpha.len();
                if al > gamma.len() || gamma.letters()[..al] != alpha.letters()[..] {
                    continue;
                }
                let beta = Word(gamma.letters()[al..].to_vec());
                let bi = word_index(n, &beta);
                let saved = parts[i];
                parts[i] = bi;
                acc += a * wt.by_index(bi) / bg * diag[fock.index(&parts)];
                parts[i] = saved;
            }
            *o = acc;
        }
        out
    }

    /// Diagonal of `Δ_{f,W}^p(I)`.
    pub fn defect_diagonal(&self, p: &[u32]) -> Vec<f64> {
        let mut diag = vec![1.0; self.dim()];
        for i in (0..self.fock.k()).rev() {
            for _ in 0..p[i] {
                let ph = self.phi_diagonal(i, &diag);
                for (d, x) in diag.iter_mut().zip(ph) {
                    *d -= x;
                }
            }
        }
        diag
    }

    /// Dense `Φ_{f_i,W_i}(X) = Σ a_α W_α X W_α^T`, for cross-checks on small models.
    pub fn phi_dense(&self, i: usize, x: &RMat) -> RMat {
        let mut out = RMat::zeros(x.nrows(), x.ncols());
        for (alpha, a) in self.symbols[i].terms() {
            let mut wx = x.clone();
            for &j in alpha.letters().iter().rev() {
                wx = self.ops[i][j as usize - 1].apply_mat(&wx);
            }
            let mut wxw = wx.transpose();
            for &j in alpha.letters().iter().rev() {
                wxw = self.ops[i][j as usize - 1].apply_mat(&wxw);
            }
            out += wxw.transpose() * a;
        }
        out
    }
}

/// Builds `W_{i,j} e_α = √(b_α / b_{g_j α}) e_{g_j α}` on factor `i`, zero at `|α| = D`.
pub fn build_model(symbols: &[PositiveSymbol], m: &[u32], degree: usize) -> Result<Model> {
    for f in symbols {
        f.ensure_valid()?;
    }
    let fock = TruncatedFock::new(symbols, m, degree)?;
    let k = fock.k();
    let mut ops = Vec::with_capacity(k);
    for i in 0..k {
        let n = fock.arities[i];
        let wt = fock.weight(i);
        let mut fam = Vec::with_capacity(n);
        for j in 1..=n as u32 {
            // Single-factor action, then lifted to the tensor product.
            let local: Vec<Option<(usize, f64)>> = fock.words[i]
                .iter()
                .enumerate()
                .map(|(ai, alpha)| {
                    if alpha.len() >= degree {
                        None
                    } else {
                        let ja = alpha.prepend(j);
                        let ti = word_index(n, &ja);
                        Some((ti, (wt.by_index(ai) / wt.by_index(ti)).sqrt()))
                    }
                })
                .collect();
            let mut target = vec![NONE; fock.dim()];
            let mut value = vec![0.0; fock.dim()];
            for c in 0..fock.dim() {
                let mut parts = fock.decompose(c);
                if let Some((ti, v)) = local[parts[i]] {
                    parts[i] = ti;
                    target[c] = fock.index(&parts);
                    value[c] = v;
                }
            }
            fam.push(ShiftOp { target, value });
        }
        ops.push(fam);
    }
    Ok(Model {
        fock,
        symbols: symbols.to_vec(),
        ops,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DomainEntry {
    pub p: Vec<u32>,
    pub min_interior: f64,
    pub diagonal: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DomainReport {
    pub interior_degree: usize,
    pub entries: Vec<DomainEntry>,
    pub pass: bool,
}

/// Checks `⟨Δ_{f,W}^p(I) v, v⟩ >= −tol` on basis vectors of per-factor degree `<= interior_degree`.
pub fn domain_check_model(model: &Model, m: &[u32], interior_degree: usize, tol: f64) -> Result<DomainReport> {
    let fock = &model.fock;
    let reach = model
        .symbols
        .iter()
        .zip(m)
        .map(|(f, &mi)| mi as usize * f.max_degree())
        .max()
        .unwrap_or(0);
    if interior_degree + reach > fock.degree {
        return Err(Error::Precondition(format!(
            "interior degree {interior_degree} exceeds D - m·deg f = {}",
            fock.degree as i64 - reach as i64
        )));
    }
    let interior: Vec<usize> = (0..fock.dim())
        .filter(|&idx| fock.degrees_at(idx).iter().all(|&g| g <= interior_degree))
        .collect();
    let mut entries = Vec::new();
    let mut pass = true;
    for p in crate::cpmap::multi_indices_upto(m) {
        if p.iter().all(|&v| v == 0) {
            continue;
        }
        let diag = model.defect_diagonal(&p);
        let d: Vec<f64> = interior.iter().map(|&i| diag[i]).collect();
        let min_interior = d.iter().copied().fold(f64::INFINITY, f64::min);
        if min_interior < -tol {
            pass = false;
        }
        entries.push(DomainEntry {
            p,
            min_interior,
            diagonal: d,
        });
    }
    Ok(DomainReport {
        interior_degree,
        entries,
        pass,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Two passes of modified Gram-Schmidt against `basis`.
fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(v, b);
            if c != 0.0 {
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
        }
    }
}

/// `N_Q = (M_Q)^⊥` in the truncated space, with an orthonormal basis of each.
#[derive(Clone, Debug)]
pub struct VarietySubspace {
    /// `dim × r`, orthonormal columns spanning `N_Q`.
    pub basis: RMat,
    /// Per-factor degree of each basis vector of `N_Q` (largest over its support).
    pub degrees: Vec<Vec<usize>>,
    pub m_dim: usize,
    pub q_polys: Vec<NcPoly>,
}

impl VarietySubspace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn projector(&self) -> RMat {
        &self.basis * self.basis.transpose()
    }
}

/// `M_Q = span{W_{(α)} q(W) W_{(β)} 1}` closed under all `W_{i,j}`, and its orthocomplement.
pub fn variety_subspace(model: &Model, q_polys: &[NcPoly], tol: &Tolerances) -> Result<VarietySubspace> {
    let fock = &model.fock;
    let dim = fock.dim();
    for q in q_polys {
        q.check_letters(&fock.arities)?;
    }
    let mut m_basis: Vec<Vec<f64>> = Vec::new();
    if !q_polys.is_empty() {
        let mut queue: VecDeque<Vec<f64>> = VecDeque::new();
        // W_{(β)} 1 is a nonzero multiple of e_β for every basis index β.
        for beta in 0..dim {
            let mut e = vec![0.0; dim];
            e[beta] = 1.0;
            for q in q_polys {
                queue.push_back(model.apply_poly(q, &e));
            }
        }
        while let Some(mut v) = queue.pop_front() {
            if m_basis.len() == dim {
                break;
            }
            let n0 = norm(&v);
            if n0 == 0.0 {
                continue;
            }
            orthogonalize(&mut v, &m_basis);
            let n1 = norm(&v);
            if n1 <= tol.span_cutoff_rel * n0 {
                continue;
            }
            v.iter_mut().for_each(|x| *x /= n1);
            for fam in model.ops() {
                for w in fam {
                    queue.push_back(w.apply(&v));
                }
            }
            m_basis.push(v);
        }
    }
    let m_dim = m_basis.len();
    let mut n_basis: Vec<Vec<f64>> = Vec::new();
    let mut degrees = Vec::new();
    for gamma in 0..dim {
        if m_basis.len() + n_basis.len() == dim {
            break;
        }
        let mut e = vec![0.0; dim];
        e[gamma] = 1.0;
        orthogonalize(&mut e, &m_basis);
        orthogonalize(&mut e, &n_basis);
        let n1 = norm(&e);
        if n1 <= 1e-6 {
            continue;
        }
        e.iter_mut().for_each(|x| *x /= n1);
        let mut deg = vec![0; fock.k()];
        for (idx, x) in e.iter().enumerate() {
            if x.abs() > 1e-12 {
                for (dg, g) in deg.iter_mut().zip(fock.degrees_at(idx)) {
                    *dg = (*dg).max(g);
                }
            }
        }
        degrees.push(deg);
        n_basis.push(e);
    }
    if n_basis.is_empty() {
        return Err(Error::EmptyVariety);
    }
    let mut basis = RMat::zeros(dim, n_basis.len());
    for (c, v) in n_basis.iter().enumerate() {
        for (r, x) in v.iter().enumerate() {
            basis[(r, c)] = *x;
        }
    }
    Ok(VarietySubspace {
        basis,
        degrees,
        m_dim,
        q_polys: q_polys.to_vec(),
    })
}

#[derive(Clone, Debug)]
pub struct Compressed {
    /// `S_{i,j} = B^T W_{i,j} B`.
    pub s: Vec<Vec<RMat>>,
    /// Per `q`, `max ||q(S) e_ν||` over basis vectors with degree room for `q`.
    pub q_residuals: Vec<f64>,
    /// `max ||(I − P_N) W_{i,j}^T b||` over basis vectors `b` with degree room for every `q`.
    pub invariance_residual: f64,
}

impl Compressed {
    pub fn apply_letter(&self, l: Letter, v: &nalgebra::DVector<f64>) -> nalgebra::DVector<f64> {
        &self.s[l.factor][l.index] * v
    }

    /// Dense `S_{(α)}` for a multi-word.
    pub fn multi_word(&self, words: &[Word]) -> RMat {
        let r = self.s[0][0].nrows();
        let mut out = RMat::identity(r, r);
        for (i, w) in words.iter().enumerate() {
            for &j in w.letters() {
                out = out * &self.s[i][j as usize - 1];
            }
        }
        out
    }

    pub fn eval_poly(&self, q: &NcPoly) -> RMat {
        let r = self.s[0][0].nrows();
        let mut out = RMat::zeros(r, r);
        for t in &q.terms {
            let mut prod = RMat::identity(r, r);
            for l in &t.monomial {
                prod = prod * &self.s[l.factor][l.index];
            }
            out += prod * t.coeff;
        }
        out
    }
}

pub fn compress(model: &Model, sub: &VarietySubspace) -> Compressed {
    let b = &sub.basis;
    let bt = b.transpose();
    let k = model.fock.k();
    let s: Vec<Vec<RMat>> = model
        .ops()
        .iter()
        .map(|fam| fam.iter().map(|w| &bt * w.apply_mat(b)).collect())
        .collect();
    let comp = Compressed {
        s,
        q_residuals: Vec::new(),
        invariance_residual: 0.0,
    };
    let d_cap = model.fock.degree;
    let q_residuals = sub
        .q_polys
        .iter()
        .map(|q| {
            let qd = q.factor_degrees(k);
            let qs = comp.eval_poly(q);
            (0..sub.dim())
                .filter(|&nu| sub.degrees[nu].iter().zip(&qd).all(|(g, h)| g + h <= d_cap))
                .map(|nu| qs.column(nu).norm())
                .fold(0.0, f64::max)
        })
        .collect();
    let room: Vec<usize> = (0..k)
        .map(|i| sub.q_polys.iter().map(|q| q.factor_degrees(k)[i]).max().unwrap_or(0))
        .collect();
    let mut inv = 0.0_f64;
    for fam in model.ops() {
        for w in fam {
            let wt_b = w.apply_adjoint_mat(b);
            let proj = b * (&bt * &wt_b);
            let diff = wt_b - proj;
            for nu in 0..sub.dim() {
                if sub.degrees[nu].iter().zip(&room).all(|(g, h)| g + h <= d_cap) {
                    inv = inv.max(diff.column(nu).norm());
                }
            }
        }
    }
    Compressed {
        q_residuals,
        invariance_residual: inv,
        ..comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unweighted_shift() {
        let model = build_model(&[PositiveSymbol::single()], &[1], 4).unwrap();
        let w = model.op(0, 0).to_dense();
        for r in 0..5 {
            for c in 0..5 {
                let want = if r == c + 1 { 1.0 } else { 0.0 };
                assert_eq!(w[(r, c)], want);
            }
        }
    }

    #[test]
    fn m2_shift_weights() {
        let model = build_model(&[PositiveSymbol::single()], &[2], 6).unwrap();
        for s in 0..6 {
            let (t, v) = model.op(0, 0).entry(s).unwrap();
            assert_eq!(t, s + 1);
            assert!((v - ((s as f64 + 1.0) / (s as f64 + 2.0)).sqrt()).abs() < 1e-15);
        }
        assert!(model.op(0, 0).entry(6).is_none());
    }

    #[test]
    fn vacuum_projection_defect() {
        let model = build_model(&[PositiveSymbol::single()], &[1], 5).unwrap();
        let rep = domain_check_model(&model, &[1], 4, 1e-12).unwrap();
        let diag = &rep.entries[0].diagonal;
        assert_eq!(diag[0], 1.0);
        assert!(diag[1..].iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn diagonal_phi_matches_dense() {
        let f = PositiveSymbol::new(2, [(Word(vec![1]), 0.5), (Word(vec![2]), 0.25), (Word(vec![1, 2]), 0.125)]);
        let model = build_model(&[f, PositiveSymbol::single()], &[2, 1], 3).unwrap();
        let n = model.dim();
        let diag: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64).collect();
        for i in 0..2 {
            let fast = model.phi_diagonal(i, &diag);
            let dense = model.phi_dense(i, &RMat::from_diagonal(&nalgebra::DVector::from_vec(diag.clone())));
            for r in 0..n {
                for c in 0..n {
                    let want = if r == c { fast[r] } else { 0.0 };
                    assert!((dense[(r, c)] - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn single_variable_variety() {
        let model = build_model(&[PositiveSymbol::single()], &[1], 4).unwrap();
        let q = NcPoly::new([(vec![(0, 0)], 1.0)]);
        let sub = variety_subspace(&model, &[q], &Tolerances::default()).unwrap();
        assert_eq!(sub.dim(), 1);
        assert_eq!(sub.basis[(0, 0)].abs(), 1.0);
        let c = compress(&model, &sub);
        assert_eq!(c.s[0][0][(0, 0)], 0.0);
    }

    #[test]
    fn empty_q_gives_whole_space() {
        let model = build_model(&[PositiveSymbol::polyball(2)], &[1], 2).unwrap();
        let sub = variety_subspace(&model, &[], &Tolerances::default()).unwrap();
        assert_eq!(sub.dim(), 7);
        let p = sub.projector();
        assert!((p - RMat::identity(7, 7)).norm() < 1e-15);
    }

    #[test]
    fn symmetric_fock_dimension() {
        for d in 1..=5 {
            let model = build_model(&[PositiveSymbol::polyball(2)], &[1], d).unwrap();
            let q = NcPoly::commutator((0, 0), (0, 1));
            let sub = variety_subspace(&model, &[q], &Tolerances::default()).unwrap();
            assert_eq!(sub.dim(), (0..=d).map(|x| x + 1).sum::<usize>());
            let c = compress(&model, &sub);
            assert!(c.q_residuals[0] < 1e-10);
            assert!(c.invariance_residual < 1e-10);
        }
    }
}
