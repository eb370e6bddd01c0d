//! Words over the free monoid, positive symbols and the weight coefficients `b_α^{(m)}`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::config::WORD_CAP;
use crate::error::{Error, Result};

/// A word `g_{j1} ⋯ g_{jp}` stored as its 1-based letters. The empty word is the identity.
///
/// Ordering is graded-lexicographic: shorter words first, then lexicographic.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(pub Vec<u32>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letter(j: u32) -> Self {
        Word(vec![j])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[u32] {
        &self.0
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// `g_j · self`
    pub fn prepend(&self, j: u32) -> Word {
        let mut v = Vec::with_capacity(self.len() + 1);
        v.push(j);
        v.extend_from_slice(&self.0);
        Word(v)
    }

    pub fn split_at(&self, k: usize) -> (Word, Word) {
        (Word(self.0[..k].to_vec()), Word(self.0[k..].to_vec()))
    }

    pub fn in_range(&self, n: usize) -> bool {
        self.0.iter().all(|&j| j >= 1 && (j as usize) <= n)
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            write!(f, "∅")
        } else {
            write!(f, "{:?}", self.0)
        }
    }
}

/// Number of words of length `<= max_len` over `n` letters, or `None` on overflow.
pub fn word_count(n: usize, max_len: usize) -> Option<usize> {
    let mut total: usize = 0;
    let mut layer: usize = 1;
    for len in 0..=max_len {
        total = total.checked_add(layer)?;
        if len < max_len {
            layer = layer.checked_mul(n)?;
        }
    }
    Some(total)
}

/// All words of length `<= max_len` in graded-lex order, identity first.
pub fn enumerate_words(n: usize, max_len: usize) -> Result<Vec<Word>> {
    enumerate_words_capped(n, max_len, WORD_CAP)
}

pub fn enumerate_words_capped(n: usize, max_len: usize, cap: usize) -> Result<Vec<Word>> {
    if n == 0 {
        return Err(Error::Invalid("arity must be at least 1".into()));
    }
    let count = word_count(n, max_len).unwrap_or(usize::MAX);
    if count > cap {
        return Err(Error::Resource {
            what: "enumerated words",
            requested: count,
            cap,
        });
    }
    let mut out = Vec::with_capacity(count);
    out.push(Word::empty());
    let mut start = 0;
    for _ in 0..max_len {
        let end = out.len();
        for idx in start..end {
            for j in 1..=n as u32 {
                let mut v = out[idx].0.clone();
                v.push(j);
                out.push(Word(v));
            }
        }
        start = end;
    }
    Ok(out)
}

/// Position of `w` in [`enumerate_words`] order for arity `n`.
pub fn word_index(n: usize, w: &Word) -> usize {
    let mut offset = 0;
    let mut layer = 1;
    for _ in 0..w.len() {
        offset += layer;
        layer *= n;
    }
    let mut rank = 0;
    for &j in w.letters() {
        rank = rank * n + (j as usize - 1);
    }
    offset + rank
}

/// A clause of the positive-symbol definition that failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolViolation {
    pub clause: String,
    pub word: Option<Word>,
}

impl SymbolViolation {
    fn new(clause: &str, word: Option<Word>) -> Self {
        SymbolViolation {
            clause: clause.to_string(),
            word,
        }
    }
}

/// Truncated positive regular free holomorphic function `f = Σ a_α Z_α`.
#[derive(Clone, Debug, PartialEq)]
pub struct PositiveSymbol {
    pub arity: usize,
    pub coeffs: BTreeMap<Word, f64>,
}

impl PositiveSymbol {
    pub fn new(arity: usize, terms: impl IntoIterator<Item = (Word, f64)>) -> Self {
        let mut coeffs = BTreeMap::new();
        for (w, a) in terms {
            *coeffs.entry(w).or_insert(0.0) += a;
        }
        PositiveSymbol { arity, coeffs }
    }

    /// `Z_1 + … + Z_n`
    pub fn polyball(n: usize) -> Self {
        Self::new(n, (1..=n as u32).map(|j| (Word::letter(j), 1.0)))
    }

    /// `f = Z` in one variable.
    pub fn single() -> Self {
        Self::polyball(1)
    }

    pub fn coeff(&self, w: &Word) -> f64 {
        self.coeffs.get(w).copied().unwrap_or(0.0)
    }

    pub fn max_degree(&self) -> usize {
        self.coeffs
            .iter()
            .filter(|(_, &a)| a != 0.0)
            .map(|(w, _)| w.len())
            .max()
            .unwrap_or(0)
    }

    /// Nonzero terms in graded-lex order.
    pub fn terms(&self) -> impl Iterator<Item = (&Word, f64)> {
        self.coeffs.iter().filter(|(_, &a)| a != 0.0).map(|(w, &a)| (w, a))
    }

    pub fn validate(&self) -> Vec<SymbolViolation> {
        let mut out = Vec::new();
        if self.arity == 0 {
            out.push(SymbolViolation::new("arity must be positive", None));
            return out;
        }
        for (w, &a) in &self.coeffs {
            if !w.in_range(self.arity) {
                out.push(SymbolViolation::new("letter out of range", Some(w.clone())));
            }
            if !a.is_finite() {
                out.push(SymbolViolation::new("coefficient not finite", Some(w.clone())));
            } else if a < 0.0 {
                out.push(SymbolViolation::new("negative coefficient", Some(w.clone())));
            }
        }
        if self.coeff(&Word::empty()) != 0.0 {
            out.push(SymbolViolation::new("constant term nonzero", Some(Word::empty())));
        }
        for j in 1..=self.arity as u32 {
            let w = Word::letter(j);
            if !(self.coeff(&w) > 0.0) {
                out.push(SymbolViolation::new("linear coefficient zero", Some(w)));
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            let msg: Vec<String> = v
                .iter()
                .map(|x| match &x.word {
                    Some(w) => format!("{} at {:?}", x.clause, w),
                    None => x.clause.clone(),
                })
                .collect();
            Err(Error::Invalid(format!("symbol rejected: {}", msg.join("; "))))
        }
    }

    /// Coefficients `a_α r^{|α|}`. At `r = 0` the result is the zero symbol, which
    /// fails validation and is only meant for evaluation.
    pub fn scale_action(&self, r: f64) -> PositiveSymbol {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(w, &a)| (w.clone(), a * r.powi(w.len() as i32)))
            .collect();
        PositiveSymbol {
            arity: self.arity,
            coeffs,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CoeffJson {
    word: Word,
    a: f64,
}

#[derive(Serialize, Deserialize)]
struct SymbolJson {
    arity: usize,
    coeffs: Vec<CoeffJson>,
}

impl Serialize for PositiveSymbol {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SymbolJson {
            arity: self.arity,
            coeffs: self
                .coeffs
                .iter()
                .map(|(w, &a)| CoeffJson { word: w.clone(), a })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PositiveSymbol {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = SymbolJson::deserialize(d)?;
        Ok(PositiveSymbol::new(
            raw.arity,
            raw.coeffs.into_iter().map(|c| (c.word, c.a)),
        ))
    }
}

/// Exact binomial coefficient, `None` on overflow.
pub fn binomial_u128(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Binomial coefficient in floating point (exact while it fits in 53 bits).
pub fn binomial_f64(n: u64, k: u64) -> f64 {
    match binomial_u128(n, k) {
        Some(v) => v as f64,
        None => {
            let k = k.min(n - k);
            (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
        }
    }
}

/// `C(s + m - 1, m - 1)`, the coefficient of `z^s` in `(1 - z)^{-m}`; for `m = 0` it is `[s = 0]`.
pub fn series_coeff(s: u64, m: u64) -> f64 {
    if m == 0 {
        return if s == 0 { 1.0 } else { 0.0 };
    }
    binomial_f64(s + m - 1, m - 1)
}

/// The factorization recursion shared by the floating and rational paths.
/// Returns `b_α` for every word of length `<= max_len`, indexed by [`word_index`].
fn factorization_weights<T>(
    n: usize,
    words: &[Word],
    coeff: impl Fn(&Word) -> T,
    m: u64,
    binom: impl Fn(u64, u64) -> T,
) -> Vec<T>
where
    T: Clone + Zero + One,
{
    let max_len = words.last().map(Word::len).unwrap_or(0);
    // c[idx][p - 1] = c^{(p)}_α
    let mut c: Vec<Vec<T>> = Vec::with_capacity(words.len());
    let mut b = Vec::with_capacity(words.len());
    // Nonzero coefficients of f, to keep the splitting loop sparse.
    let support: Vec<(Word, T)> = enumerate_words_capped(n, max_len, usize::MAX)
        .unwrap_or_default()
        .into_iter()
        .skip(1)
        .map(|w| {
            let a = coeff(&w);
            (w, a)
        })
        .filter(|(_, a)| !a.is_zero())
        .collect();
    for w in words {
        let len = w.len();
        if len == 0 {
            c.push(Vec::new());
            b.push(T::one());
            continue;
        }
        let mut row = vec![T::zero(); len];
        row[0] = coeff(w);
        for (beta, a) in &support {
            let bl = beta.len();
            if bl >= len || w.letters()[..bl] != beta.letters()[..] {
                continue;
            }
            let gamma = Word(w.letters()[bl..].to_vec());
            let gi = word_index(n, &gamma);
            let cg = &c[gi];
            for p in 2..=len {
                if p - 1 <= cg.len() && !cg[p - 2].is_zero() {
                    row[p - 1] = row[p - 1].clone() + a.clone() * cg[p - 2].clone();
                }
            }
        }
        let mut total = T::zero();
        for (p, v) in row.iter().enumerate() {
            if !v.is_zero() {
                total = total + v.clone() * binom(p as u64 + 1 + m - 1, m - 1);
            }
        }
        c.push(row);
        b.push(total);
    }
    b
}

/// Weight coefficients `b_α^{(m)}` for every word of length `<= max_len`.
#[derive(Clone, Debug)]
pub struct WeightTable {
    pub arity: usize,
    pub m: u32,
    pub max_len: usize,
    values: Vec<f64>,
    /// Set when a binomial factor overflowed `u128` and was formed in floating point.
    pub binomial_overflow: bool,
    /// A priori bound on the relative rounding error of each entry.
    pub rel_error_bound: f64,
}

impl WeightTable {
    pub fn get(&self, w: &Word) -> f64 {
        self.values[word_index(self.arity, w)]
    }

    pub fn by_index(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub fn weight_table(f: &PositiveSymbol, m: u32, max_len: usize) -> Result<WeightTable> {
    f.ensure_valid()?;
    if m == 0 {
        return Err(Error::Invalid("weight order m must be at least 1".into()));
    }
    let words = enumerate_words(f.arity, max_len)?;
    let top = max_len as u64 + m as u64;
    let binomial_overflow = binomial_u128(top, (m as u64 - 1).min(top / 2)).is_none();
    let values = factorization_weights(f.arity, &words, |w| f.coeff(w), m as u64, |n, k| {
        binomial_f64(n, k)
    });
    // Sums of nonnegative products: each entry has at most ~2^len factorizations of
    // depth <= len, each contributing a relative error of (len + 2) ulps.
    let len = max_len as f64;
    let rel_error_bound = (2.0 * len + 4.0) * f64::EPSILON * (1.0 + len);
    Ok(WeightTable {
        arity: f.arity,
        m,
        max_len,
        values,
        binomial_overflow,
        rel_error_bound,
    })
}

/// Exact weights for rational coefficients, keyed by word. Used to anchor the floating path.
pub fn weight_table_rational(
    arity: usize,
    coeffs: &BTreeMap<Word, BigRational>,
    m: u32,
    max_len: usize,
) -> Result<BTreeMap<Word, BigRational>> {
    if m == 0 {
        return Err(Error::Invalid("weight order m must be at least 1".into()));
    }
    let words = enumerate_words(arity, max_len)?;
    let vals = factorization_weights(
        arity,
        &words,
        |w| coeffs.get(w).cloned().unwrap_or_else(BigRational::zero),
        m as u64,
        |n, k| {
            let mut acc = BigInt::one();
            for i in 0..k {
                acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
            }
            BigRational::from_integer(acc)
        },
    );
    Ok(words.into_iter().zip(vals).collect())
}
