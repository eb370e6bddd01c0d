//! Completely positive maps `Φ_{f,A}(X) = Σ a_α A_α X A_α^*`, their defects,
//! weighted binomial series, Cesàro means and joint spectral radii.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::config::{Tolerances, MAX_MATRICIZED_DIM, MAX_SERIES_TERMS};
use crate::error::{Error, Result};
use crate::linalg::{
    self, c64, herm_to_real, is_hermitian, kron, op_norm, real_to_herm, spectral_radius_real,
    CMat, RMat,
};
use crate::words::{series_coeff, PositiveSymbol, Word};

/// `k` families of `d × d` matrices; entries of different families commute.
#[derive(Clone, Debug)]
pub struct OperatorTuple {
    d: usize,
    ops: Vec<Vec<CMat>>,
}

impl OperatorTuple {
    /// Checks shapes, finiteness and cross-family commutation.
    pub fn new(ops: Vec<Vec<CMat>>, tol_comm: f64) -> Result<Self> {
        let t = Self::new_unchecked(ops)?;
        t.check_commutation(tol_comm)?;
        Ok(t)
    }

    /// Checks shapes and finiteness only.
    pub fn new_unchecked(ops: Vec<Vec<CMat>>) -> Result<Self> {
        if ops.is_empty() || ops.iter().any(|f| f.is_empty()) {
            return Err(Error::Invalid("operator tuple needs k >= 1 nonempty families".into()));
        }
        let d = ops[0][0].nrows();
        for (i, fam) in ops.iter().enumerate() {
            for (j, a) in fam.iter().enumerate() {
                if a.nrows() != d || a.ncols() != d {
                    return Err(Error::Dimension(format!(
                        "A[{}][{}] is {}x{}, expected {d}x{d}",
                        i + 1,
                        j + 1,
                        a.nrows(),
                        a.ncols()
                    )));
                }
                if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::Invalid(format!("A[{}][{}] has non-finite entries", i + 1, j + 1)));
                }
            }
        }
        Ok(OperatorTuple { d, ops })
    }

    pub fn k(&self) -> usize {
        self.ops.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn arities(&self) -> Vec<usize> {
        self.ops.iter().map(Vec::len).collect()
    }

    pub fn op(&self, i: usize, j: usize) -> &CMat {
        &self.ops[i][j]
    }

    pub fn family(&self, i: usize) -> &[CMat] {
        &self.ops[i]
    }

    pub fn families(&self) -> &[Vec<CMat>] {
        &self.ops
    }

    /// Largest `||[A_{s,j}, A_{t,l}]||_F / (||A_{s,j}|| ||A_{t,l}||)` over `s != t`, with its location.
    pub fn commutation_residual(&self) -> (f64, Option<(usize, usize, usize, usize)>) {
        let mut worst = 0.0;
        let mut at = None;
        for s in 0..self.k() {
            for t in (s + 1)..self.k() {
                for (j, a) in self.ops[s].iter().enumerate() {
                    for (l, b) in self.ops[t].iter().enumerate() {
                        let scale = a.norm() * b.norm();
                        if scale == 0.0 {
                            continue;
                        }
                        let r = linalg::commutator(a, b).norm() / scale;
                        if r > worst {
                            worst = r;
                            at = Some((s, j, t, l));
                        }
                    }
                }
            }
        }
        (worst, at)
    }

    pub fn check_commutation(&self, tol_comm: f64) -> Result<()> {
        let (r, at) = self.commutation_residual();
        if r > tol_comm {
            let (s, j, t, l) = at.unwrap_or_default();
            return Err(Error::Commutation {
                s: s + 1,
                j: j + 1,
                t: t + 1,
                l: l + 1,
                residual: r,
            });
        }
        Ok(())
    }

    /// `A_{i,α} = A_{i,j1} ⋯ A_{i,jp}`.
    pub fn word_product(&self, i: usize, w: &Word) -> CMat {
        let mut out = CMat::identity(self.d, self.d);
        for &j in w.letters() {
            out = out * &self.ops[i][j as usize - 1];
        }
        out
    }

    /// `A_{(α)} = A_{1,α_1} ⋯ A_{k,α_k}`.
    pub fn multi_product(&self, words: &[Word]) -> CMat {
        let mut out = CMat::identity(self.d, self.d);
        for (i, w) in words.iter().enumerate() {
            out = out * self.word_product(i, w);
        }
        out
    }

    pub fn map(&self, mut g: impl FnMut(&CMat) -> CMat) -> OperatorTuple {
        let mut ops = Vec::with_capacity(self.ops.len());
        for fam in &self.ops {
            ops.push(fam.iter().map(&mut g).collect());
        }
        OperatorTuple { d: self.d, ops }
    }

    pub fn scaled(&self, r: f64) -> OperatorTuple {
        self.map(|a| a * c64(r, 0.0))
    }

    /// `Y^{-1} A Y` for every entry.
    pub fn conjugated(&self, y: &CMat) -> Result<OperatorTuple> {
        let yi = linalg::inverse(y)?;
        Ok(self.map(|a| &yi * a * y))
    }
}

#[derive(Clone, Debug)]
pub struct KrausTerm {
    pub weight: f64,
    pub op: CMat,
}

/// `(Φ_{f_1,A_1}, …, Φ_{f_k,A_k})`, or raw Kraus families with `f_i = Z_{i,1} + … + Z_{i,n_i}`.
#[derive(Debug)]
pub struct CpTuple {
    symbols: Vec<PositiveSymbol>,
    ops: OperatorTuple,
    terms: Vec<Vec<KrausTerm>>,
    kraus_mode: bool,
    ops_commute: bool,
    radii: OnceLock<Vec<f64>>,
    nilpotency: OnceLock<Vec<Option<usize>>>,
}

impl Clone for CpTuple {
    fn clone(&self) -> Self {
        CpTuple {
            symbols: self.symbols.clone(),
            ops: self.ops.clone(),
            terms: self.terms.clone(),
            kraus_mode: self.kraus_mode,
            ops_commute: self.ops_commute,
            radii: OnceLock::new(),
            nilpotency: OnceLock::new(),
        }
    }
}

fn build_terms(symbols: &[PositiveSymbol], ops: &OperatorTuple) -> Vec<Vec<KrausTerm>> {
    symbols
        .iter()
        .enumerate()
        .map(|(i, f)| {
            f.terms()
                .map(|(w, a)| KrausTerm {
                    weight: a,
                    op: ops.word_product(i, w),
                })
                .collect()
        })
        .collect()
}

impl CpTuple {
    /// Operator-tuple mode. `ops` must already satisfy the commutation invariant.
    pub fn new(symbols: Vec<PositiveSymbol>, ops: OperatorTuple) -> Result<Self> {
        if symbols.len() != ops.k() {
            return Err(Error::Dimension(format!(
                "{} symbols for {} operator families",
                symbols.len(),
                ops.k()
            )));
        }
        for (i, f) in symbols.iter().enumerate() {
            f.ensure_valid()?;
            if f.arity != ops.family(i).len() {
                return Err(Error::Dimension(format!(
                    "symbol {} has arity {} but family has {} operators",
                    i + 1,
                    f.arity,
                    ops.family(i).len()
                )));
            }
        }
        let terms = build_terms(&symbols, &ops);
        Ok(CpTuple {
            symbols,
            ops,
            terms,
            kraus_mode: false,
            ops_commute: true,
            radii: OnceLock::new(),
            nilpotency: OnceLock::new(),
        })
    }

    /// Convenience: validates commutation with `tol.tol_comm` and builds the tuple.
    pub fn from_parts(symbols: Vec<PositiveSymbol>, ops: Vec<Vec<CMat>>, tol: &Tolerances) -> Result<Self> {
        Self::new(symbols, OperatorTuple::new(ops, tol.tol_comm)?)
    }

    /// Kraus mode: `φ_i(X) = Σ_j C_{i,j} X C_{i,j}^*`. The maps must commute; the
    /// operators need not, and [`CpTuple::operators_commute`] records whether they do.
    pub fn from_kraus(families: Vec<Vec<CMat>>, tol_comm: f64) -> Result<Self> {
        let ops = OperatorTuple::new_unchecked(families)?;
        let symbols: Vec<PositiveSymbol> = ops.arities().into_iter().map(PositiveSymbol::polyball).collect();
        let ops_commute = ops.commutation_residual().0 <= tol_comm;
        let terms = build_terms(&symbols, &ops);
        let t = CpTuple {
            symbols,
            ops,
            terms,
            kraus_mode: true,
            ops_commute,
            radii: OnceLock::new(),
            nilpotency: OnceLock::new(),
        };
        let (res, at) = t.map_commutation_residual()?;
        if res > tol_comm {
            let (s, t2) = at.unwrap_or_default();
            return Err(Error::Commutation {
                s: s + 1,
                j: 0,
                t: t2 + 1,
                l: 0,
                residual: res,
            });
        }
        Ok(t)
    }

    pub fn k(&self) -> usize {
        self.ops.k()
    }

    pub fn d(&self) -> usize {
        self.ops.d()
    }

    pub fn symbols(&self) -> &[PositiveSymbol] {
        &self.symbols
    }

    pub fn operators(&self) -> &OperatorTuple {
        &self.ops
    }

    pub fn terms(&self, i: usize) -> &[KrausTerm] {
        &self.terms[i]
    }

    pub fn is_kraus_mode(&self) -> bool {
        self.kraus_mode
    }

    pub fn operators_commute(&self) -> bool {
        self.ops_commute
    }

    /// Same symbols, new operators (e.g. `rA` or `Y^{-1}AY`).
    pub fn with_operators(&self, ops: OperatorTuple) -> Result<CpTuple> {
        if self.kraus_mode {
            CpTuple::from_kraus(ops.families().to_vec(), 1e-8)
        } else {
            CpTuple::new(self.symbols.clone(), ops)
        }
    }

    /// Same operators, new symbols.
    pub fn with_symbols(&self, symbols: Vec<PositiveSymbol>) -> Result<CpTuple> {
        CpTuple::new(symbols, self.ops.clone())
    }

    /// Evaluation-only variant that skips symbol validation (zero or scaled symbols).
    pub fn with_symbols_unchecked(&self, symbols: Vec<PositiveSymbol>) -> CpTuple {
        let terms = build_terms(&symbols, &self.ops);
        CpTuple {
            symbols,
            ops: self.ops.clone(),
            terms,
            kraus_mode: self.kraus_mode,
            ops_commute: self.ops_commute,
            radii: OnceLock::new(),
            nilpotency: OnceLock::new(),
        }
    }

    pub fn scaled(&self, r: f64) -> Result<CpTuple> {
        self.with_operators(self.ops.scaled(r))
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.k() {
            return Err(Error::Dimension(format!("factor index {} out of range 1..{}", i + 1, self.k())));
        }
        Ok(())
    }

    fn check_square(&self, x: &CMat) -> Result<()> {
        if x.nrows() != self.d() || x.ncols() != self.d() {
            return Err(Error::Dimension(format!(
                "matrix is {}x{}, expected {}x{}",
                x.nrows(),
                x.ncols(),
                self.d(),
                self.d()
            )));
        }
        Ok(())
    }

    /// `Φ_i(X)`, symmetrized when `X` is Hermitian.
    pub fn apply(&self, i: usize, x: &CMat) -> CMat {
        let d = self.d();
        let mut out = CMat::zeros(d, d);
        for t in &self.terms[i] {
            let bx = &t.op * x;
            out += (bx * t.op.adjoint()) * c64(t.weight, 0.0);
        }
        if is_hermitian(x, 1e-12) {
            out = linalg::hermitian_part(&out);
        }
        out
    }

    pub fn try_apply(&self, i: usize, x: &CMat) -> Result<CMat> {
        self.check_index(i)?;
        self.check_square(x)?;
        Ok(self.apply(i, x))
    }

    pub fn apply_pow(&self, i: usize, s: usize, x: &CMat) -> CMat {
        let mut y = x.clone();
        for _ in 0..s {
            y = self.apply(i, &y);
        }
        y
    }

    /// `Φ_1^{s_1} ∘ ⋯ ∘ Φ_k^{s_k}(X)`
    pub fn apply_multi(&self, s: &[usize], x: &CMat) -> CMat {
        let mut y = x.clone();
        for i in (0..self.k()).rev() {
            y = self.apply_pow(i, s[i], &y);
        }
        y
    }

    /// `M_i` with `vec(Φ_i(X)) = M_i vec(X)` under column stacking: `M_i = Σ a_α conj(A_α) ⊗ A_α`.
    pub fn matricize(&self, i: usize) -> Result<CMat> {
        self.check_index(i)?;
        let d = self.d();
        if d * d > MAX_MATRICIZED_DIM {
            return Err(Error::Resource {
                what: "matricized dimension d^2",
                requested: d * d,
                cap: MAX_MATRICIZED_DIM,
            });
        }
        let mut m = CMat::zeros(d * d, d * d);
        for t in &self.terms[i] {
            m += kron(&t.op.map(|z| z.conj()), &t.op) * c64(t.weight, 0.0);
        }
        Ok(m)
    }

    /// Real `d^2 × d^2` matrix of `Φ_i` restricted to Hermitian matrices,
    /// in the coordinates of [`linalg::herm_to_real`].
    pub fn matricize_real(&self, i: usize) -> Result<RMat> {
        self.check_index(i)?;
        let d = self.d();
        let n = d * d;
        if n > MAX_MATRICIZED_DIM {
            return Err(Error::Resource {
                what: "matricized dimension d^2",
                requested: n,
                cap: MAX_MATRICIZED_DIM,
            });
        }
        let mut m = RMat::zeros(n, n);
        let mut e = nalgebra::DVector::<f64>::zeros(n);
        for col in 0..n {
            e.fill(0.0);
            e[col] = 1.0;
            let x = real_to_herm(&e, d);
            m.set_column(col, &herm_to_real(&self.apply(i, &x)));
        }
        Ok(m)
    }

    /// Max over pairs of `||M_s M_t - M_t M_s||_F / (||M_s|| ||M_t||)`.
    pub fn map_commutation_residual(&self) -> Result<(f64, Option<(usize, usize)>)> {
        let ms: Vec<RMat> = (0..self.k()).map(|i| self.matricize_real(i)).collect::<Result<_>>()?;
        let mut worst = 0.0;
        let mut at = None;
        for s in 0..ms.len() {
            for t in (s + 1)..ms.len() {
                let scale = ms[s].norm() * ms[t].norm();
                if scale == 0.0 {
                    continue;
                }
                let r = (&ms[s] * &ms[t] - &ms[t] * &ms[s]).norm() / scale;
                if r > worst {
                    worst = r;
                    at = Some((s, t));
                }
            }
        }
        Ok((worst, at))
    }

    /// `Δ^p(X) = (id − Φ_1)^{p_1} ∘ ⋯ ∘ (id − Φ_k)^{p_k}(X)`; factor `k` acts first.
    pub fn defect(&self, p: &[u32], x: &CMat) -> CMat {
        let mut y = x.clone();
        for i in (0..self.k()).rev() {
            for _ in 0..p[i] {
                y = &y - self.apply(i, &y);
            }
        }
        y
    }

    /// Same as [`CpTuple::defect`] with the factors applied in the opposite order.
    pub fn defect_reversed(&self, p: &[u32], x: &CMat) -> CMat {
        let mut y = x.clone();
        for i in 0..self.k() {
            for _ in 0..p[i] {
                y = &y - self.apply(i, &y);
            }
        }
        y
    }

    /// `r_{f_i}(A_i)`: square root of the spectral radius of the matricized map.
    pub fn joint_spectral_radius(&self, i: usize) -> Result<f64> {
        self.check_index(i)?;
        if let Some(r) = self.radii.get() {
            return Ok(r[i]);
        }
        let mut radii = Vec::with_capacity(self.k());
        for f in 0..self.k() {
            radii.push(spectral_radius_real(&self.matricize_real(f)?).max(0.0).sqrt());
        }
        let _ = self.radii.set(radii);
        Ok(self.radii.get().expect("radii set")[i])
    }

    /// Smallest `s <= d` with `Φ_i^s(I) = 0` exactly, if any.
    pub fn nilpotency_order(&self, i: usize) -> Option<usize> {
        let orders = self.nilpotency.get_or_init(|| {
            (0..self.k())
                .map(|f| {
                    let d = self.d();
                    let mut y = CMat::identity(d, d);
                    for s in 1..=d.max(1) {
                        y = self.apply(f, &y);
                        if y.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
                            return Some(s);
                        }
                    }
                    None
                })
                .collect()
        });
        orders[i]
    }

    /// Errors with [`Error::Divergence`] when `r_{f_i}(A_i)` exceeds `1 − margin`
    /// and the factor is not nilpotent.
    pub fn check_radius(&self, i: usize, tol: &Tolerances) -> Result<f64> {
        if self.nilpotency_order(i).is_some() {
            return Ok(0.0);
        }
        let r = self.joint_spectral_radius(i)?;
        if r > tol.radius_limit() {
            return Err(Error::Divergence {
                radius: r,
                limit: tol.radius_limit(),
            });
        }
        Ok(r)
    }

    /// Gelfand-formula estimate `||Φ_i^s(I)||^{1/2s}` along `s = 2^j` by repeated squaring.
    pub fn radius_power_check(&self, i: usize) -> Result<PowerRadius> {
        let m = self.matricize_real(i)?;
        let d = self.d();
        let id = herm_to_real(&CMat::identity(d, d));
        let mut p = m;
        let mut log_scale = 0.0_f64;
        let mut prev: Option<f64> = None;
        let mut history = Vec::new();
        for j in 0..62u32 {
            let s = 2f64.powi(j as i32);
            let v = &p * &id;
            let n = op_norm(&real_to_herm(&v, d));
            if n == 0.0 {
                history.push(0.0);
                return Ok(PowerRadius {
                    value: 0.0,
                    log2_steps: j,
                    stabilized: true,
                    history,
                });
            }
            let est = ((n.ln() + log_scale) / (2.0 * s)).exp();
            history.push(est);
            if let Some(pv) = prev {
                if (est - pv).abs() <= 1e-6 * est.max(1e-300) && j >= 4 {
                    return Ok(PowerRadius {
                        value: est,
                        log2_steps: j,
                        stabilized: true,
                        history,
                    });
                }
            }
            prev = Some(est);
            // Square and renormalize; log_scale tracks the discarded factor of p^{2^{j+1}}.
            p = &p * &p;
            log_scale *= 2.0;
            let mx = p.amax();
            if mx == 0.0 {
                history.push(0.0);
                return Ok(PowerRadius {
                    value: 0.0,
                    log2_steps: j + 1,
                    stabilized: true,
                    history,
                });
            }
            p /= mx;
            log_scale += mx.ln();
        }
        Ok(PowerRadius {
            value: prev.unwrap_or(0.0),
            log2_steps: 62,
            stabilized: false,
            history,
        })
    }

    /// `Σ_s C(s+m−1, m−1) Φ_i^s(Y)` truncated at a certified relative accuracy `rel_tol`
    /// with respect to `||Y||`.
    pub fn factor_series(&self, i: usize, m: u32, y: &CMat, rel_tol: f64, tol: &Tolerances) -> Result<FactorSeries> {
        self.check_index(i)?;
        self.check_square(y)?;
        if m == 0 {
            return Ok(FactorSeries {
                value: y.clone(),
                error_bound: 0.0,
                terms: 1,
                operator_bound: 1.0,
            });
        }
        self.check_radius(i, tol)?;
        let d = self.d();
        let ynorm = op_norm(y);
        let mut norms = NormSequence::new(d);
        let mut sum = CMat::zeros(d, d);
        let mut z = y.clone();
        let mut s = 0usize;
        loop {
            sum += &z * c64(series_coeff(s as u64, m as u64), 0.0);
            norms.extend_to(self, i, s + 1);
            let tail = tail_bound(&norms.values, m, s);
            if tail * ynorm <= rel_tol * ynorm || ynorm == 0.0 {
                let partial: f64 = (0..=s)
                    .map(|t| series_coeff(t as u64, m as u64) * norms.values[t])
                    .sum();
                return Ok(FactorSeries {
                    value: sum,
                    error_bound: tail * ynorm,
                    terms: s + 1,
                    operator_bound: partial + tail,
                });
            }
            s += 1;
            if s > MAX_SERIES_TERMS {
                return Err(Error::Numerical(format!(
                    "series for factor {} did not reach tolerance within {} terms",
                    i + 1,
                    MAX_SERIES_TERMS
                )));
            }
            z = self.apply(i, &z);
        }
    }

    /// `Σ_{s ∈ Z_+^k} Π_i C(s_i+m_i−1, m_i−1) Φ_1^{s_1} ∘ ⋯ ∘ Φ_k^{s_k}(R)` with a certified error bound.
    pub fn weighted_series(&self, m: &[u32], r: &CMat, tol: &Tolerances) -> Result<SeriesResult> {
        if m.len() != self.k() {
            return Err(Error::Dimension(format!("multi-degree has {} entries, expected {}", m.len(), self.k())));
        }
        self.check_square(r)?;
        let k = self.k();
        let share = tol.series_rel / k as f64;
        let mut y = r.clone();
        let mut errs = vec![0.0; k];
        let mut bounds = vec![1.0; k];
        let mut terms = vec![0; k];
        for i in (0..k).rev() {
            let fs = self.factor_series(i, m[i], &y, share, tol)?;
            errs[i] = fs.error_bound;
            bounds[i] = fs.operator_bound;
            terms[i] = fs.terms;
            y = fs.value;
        }
        // The outer factors amplify inner truncation errors by at most their full series norm.
        let mut error_bound = 0.0;
        for i in 0..k {
            let amp: f64 = bounds[..i].iter().product();
            error_bound += amp * errs[i];
        }
        Ok(SeriesResult {
            value: y,
            error_bound,
            terms,
            operator_bounds: bounds,
        })
    }

    /// `Λ_i^{[p]}(X) = Σ_s C(s+p−1, p−1) Φ_i^s(X)`, the `p`-fold iterated geometric sum.
    pub fn iterated_sum(&self, i: usize, p: u32, x: &CMat, tol: &Tolerances) -> Result<FactorSeries> {
        self.factor_series(i, p, x, tol.series_rel, tol)
    }

    /// `(1/Π p_i) Σ_{s_i < p_i} Φ_k^{s_k} ∘ ⋯ ∘ Φ_1^{s_1}(X)`
    pub fn cesaro_mean(&self, p: &[usize], x: &CMat) -> Result<CMat> {
        if p.len() != self.k() || p.contains(&0) {
            return Err(Error::Invalid("Cesàro lengths must be k positive integers".into()));
        }
        self.check_square(x)?;
        let mut y = x.clone();
        for (i, &pi) in p.iter().enumerate() {
            let mut acc = CMat::zeros(self.d(), self.d());
            let mut z = y.clone();
            for s in 0..pi {
                acc += &z;
                if s + 1 < pi {
                    z = self.apply(i, &z);
                }
            }
            y = acc * c64(1.0 / pi as f64, 0.0);
        }
        Ok(y)
    }

    /// `r_{f_i}(A_i)`, the decay `||Φ_i^s(I)||` for `s <= s_max` and the consistency verdict
    /// between "radius < 1" and "`Φ_i^s(I) → 0`".
    pub fn radius_report(&self, s_max: usize) -> Result<Vec<RadiusEntry>> {
        let d = self.d();
        let mut out = Vec::with_capacity(self.k());
        for i in 0..self.k() {
            let radius = self.joint_spectral_radius(i)?;
            let power = self.radius_power_check(i)?;
            let mut decay = Vec::with_capacity(s_max);
            let mut y = CMat::identity(d, d);
            for _ in 0..s_max {
                y = self.apply(i, &y);
                decay.push(op_norm(&y));
            }
            let gelfand = decay
                .last()
                .map(|&n| if n > 0.0 { n.powf(1.0 / (2.0 * s_max as f64)) } else { 0.0 })
                .unwrap_or(radius);
            let nilpotency_order = self.nilpotency_order(i);
            let radius_below_one = nilpotency_order.is_some() || radius < 1.0 - 1e-9;
            // Decay to zero is judged from the repeated-squaring power estimate.
            let decays = nilpotency_order.is_some() || power.value < 1.0 - 1e-9;
            out.push(RadiusEntry {
                factor: i + 1,
                radius,
                power_estimate: power.value,
                power_log2_steps: power.log2_steps,
                power_stabilized: power.stabilized,
                gelfand_at_s_max: gelfand,
                nilpotency_order,
                decay,
                radius_below_one,
                decays_to_zero: decays,
                consistent: radius_below_one == decays,
            });
        }
        Ok(out)
    }
}

/// `||Φ^s(I)||` for `s = 0, 1, …`, extended on demand.
struct NormSequence {
    values: Vec<f64>,
    current: CMat,
}

impl NormSequence {
    fn new(d: usize) -> Self {
        NormSequence {
            values: vec![1.0],
            current: CMat::identity(d, d),
        }
    }

    fn extend_to(&mut self, phi: &CpTuple, i: usize, s: usize) {
        while self.values.len() <= s {
            if self.values.last() == Some(&0.0) {
                self.values.push(0.0);
                continue;
            }
            self.current = phi.apply(i, &self.current);
            let exact_zero = self.current.iter().all(|z| z.re == 0.0 && z.im == 0.0);
            self.values.push(if exact_zero { 0.0 } else { op_norm(&self.current) });
        }
    }
}

/// Upper bound on `Σ_{t > n} C(t+m−1, m−1) ν_t` given `ν_0..ν_{n+1}` with `ν` submultiplicative.
///
/// For `L` with `ν_L < 1` and `q = ν_L^{1/L}`, `ν_t <= (max_{r<L} ν_r / q^{L−1}) q^t`; the
/// binomial-weighted geometric tail is then bounded by its first term over `1 − ratio`.
pub fn tail_bound(norms: &[f64], m: u32, n: usize) -> f64 {
    if norms.iter().skip(1).any(|&v| v == 0.0) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    let mut run_max = norms[0];
    let c_next = series_coeff(n as u64 + 1, m as u64);
    let growth = (n as f64 + 1.0 + m as f64) / (n as f64 + 2.0);
    for (l, &nl) in norms.iter().enumerate().skip(1) {
        if nl < 1.0 {
            let q = nl.powf(1.0 / l as f64);
            let ratio = q * growth;
            if ratio < 1.0 {
                let lead = run_max / q.powi(l as i32 - 1);
                let b = lead * c_next * q.powi(n as i32 + 1) / (1.0 - ratio);
                if b < best {
                    best = b;
                }
            }
        }
        run_max = run_max.max(nl);
    }
    best
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PowerRadius {
    pub value: f64,
    pub log2_steps: u32,
    pub stabilized: bool,
    pub history: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct FactorSeries {
    pub value: CMat,
    pub error_bound: f64,
    pub terms: usize,
    /// Upper bound on `Σ_s C(s+m−1, m−1) ||Φ^s||`.
    pub operator_bound: f64,
}

#[derive(Clone, Debug)]
pub struct SeriesResult {
    pub value: CMat,
    pub error_bound: f64,
    pub terms: Vec<usize>,
    pub operator_bounds: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RadiusEntry {
    pub factor: usize,
    pub radius: f64,
    pub power_estimate: f64,
    pub power_log2_steps: u32,
    pub power_stabilized: bool,
    pub gelfand_at_s_max: f64,
    pub nilpotency_order: Option<usize>,
    pub decay: Vec<f64>,
    pub radius_below_one: bool,
    pub decays_to_zero: bool,
    pub consistent: bool,
}

/// All `p` with `0 <= p <= m` componentwise, lexicographic with factor 1 most significant.
pub fn multi_indices_upto(m: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for &mi in m {
        let mut next = Vec::with_capacity(out.len() * (mi as usize + 1));
        for p in &out {
            for v in 0..=mi {
                let mut q = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, max_abs_diff};

    fn single(c: CMat) -> CpTuple {
        CpTuple::new(
            vec![PositiveSymbol::single()],
            OperatorTuple::new(vec![vec![c]], 1e-10).unwrap(),
        )
        .unwrap()
    }

    fn jordan(d: usize, scale: f64) -> CMat {
        CMat::from_fn(d, d, |i, j| if j == i + 1 { c64(scale, 0.0) } else { c64(0.0, 0.0) })
    }

    #[test]
    fn scalar_map() {
        let c = c64(0.6, 0.3);
        let phi = single(identity(3) * c);
        let x = CMat::from_fn(3, 3, |i, j| c64(i as f64, j as f64));
        let y = phi.apply(0, &x);
        assert!(max_abs_diff(&y, &(&x * c64(c.norm_sqr(), 0.0))) < 1e-14);
        let m = phi.matricize(0).unwrap();
        assert!(max_abs_diff(&m, &(identity(9) * c64(c.norm_sqr(), 0.0))) < 1e-14);
    }

    #[test]
    fn unit_pair_sums_to_identity() {
        let mut e12 = CMat::zeros(2, 2);
        e12[(0, 1)] = c64(1.0, 0.0);
        let e21 = e12.transpose();
        let phi = CpTuple::new(
            vec![PositiveSymbol::polyball(2)],
            OperatorTuple::new(vec![vec![e12, e21]], 1e-10).unwrap(),
        )
        .unwrap();
        assert!(max_abs_diff(&phi.apply(0, &identity(2)), &identity(2)) == 0.0);
    }

    #[test]
    fn geometric_series_scalar() {
        let c = 0.7;
        let phi = single(identity(2) * c64(c, 0.0));
        let tol = Tolerances::default();
        let s = phi.weighted_series(&[1], &identity(2), &tol).unwrap();
        let want = 1.0 / (1.0 - c * c);
        assert!(max_abs_diff(&s.value, &(identity(2) * c64(want, 0.0))) < 1e-12 * want);
        assert!(s.error_bound <= 1e-12 * want);
        let d = phi.defect(&[2], &identity(2));
        assert!((d[(0, 0)].re - (1.0 - c * c).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn nilpotent_series_is_finite() {
        let phi = single(jordan(4, 0.9));
        assert_eq!(phi.nilpotency_order(0), Some(4));
        let tol = Tolerances::default();
        let s = phi.weighted_series(&[2], &identity(4), &tol).unwrap();
        assert_eq!(s.error_bound, 0.0);
        assert!(s.terms[0] <= 5);
        assert_eq!(phi.joint_spectral_radius(0).unwrap(), 0.0);
    }

    #[test]
    fn radius_equals_classical_spectral_radius() {
        let c = CMat::from_fn(3, 3, |i, j| c64(0.2 * (i as f64 + 1.0) - 0.1 * j as f64, 0.05 * (i * j) as f64));
        let phi = single(c.clone());
        let r = phi.joint_spectral_radius(0).unwrap();
        assert!((r - linalg::spectral_radius(&c)).abs() < 1e-9);
        let p = phi.radius_power_check(0).unwrap();
        assert!(p.stabilized);
        assert!((p.value - r).abs() < 1e-6 * r.max(1e-3));
    }

    #[test]
    fn unital_pair_radius_one() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phi = CpTuple::new(
            vec![PositiveSymbol::polyball(2)],
            OperatorTuple::new(vec![vec![identity(2) * c64(h, 0.0), identity(2) * c64(h, 0.0)]], 1e-10).unwrap(),
        )
        .unwrap();
        assert!((phi.joint_spectral_radius(0).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            phi.weighted_series(&[1], &identity(2), &Tolerances::default()),
            Err(Error::Divergence { .. })
        ));
    }

    #[test]
    fn cesaro_of_fixed_point() {
        let u = CMat::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)]);
        let phi = single(u);
        let m = phi.cesaro_mean(&[7], &identity(2)).unwrap();
        assert!(max_abs_diff(&m, &identity(2)) < 1e-15);
        let x = CMat::from_fn(2, 2, |i, j| c64(i as f64 + 1.0, j as f64));
        assert_eq!(phi.cesaro_mean(&[1], &x).unwrap(), x);
    }

    #[test]
    fn multi_index_enumeration() {
        let v = multi_indices_upto(&[1, 2]);
        assert_eq!(v.len(), 6);
        assert_eq!(v[0], vec![0, 0]);
        assert_eq!(v[5], vec![1, 2]);
    }

    #[test]
    fn non_commuting_families_rejected() {
        let a = jordan(2, 1.0);
        let b = a.transpose();
        let err = OperatorTuple::new(vec![vec![a], vec![b]], 1e-10).unwrap_err();
        assert!(matches!(err, Error::Commutation { .. }));
    }
}
