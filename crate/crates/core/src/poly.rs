//! Noncommutative polynomials in the letters `Z_{i,j}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, CMat};

/// A letter `Z_{i,j}`, stored 0-based; JSON uses 1-based `[i, j]` pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    pub factor: usize,
    pub index: usize,
}

impl Serialize for Letter {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.factor + 1, self.index + 1].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Letter {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [i, j] = <[usize; 2]>::deserialize(d)?;
        if i == 0 || j == 0 {
            return Err(serde::de::Error::custom("letters are 1-based"));
        }
        Ok(Letter {
            factor: i - 1,
            index: j - 1,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    /// `Z_{l1} Z_{l2} ⋯`, leftmost letter applied last.
    pub monomial: Vec<Letter>,
    pub coeff: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NcPoly {
    pub terms: Vec<Term>,
}

impl NcPoly {
    pub fn new(terms: impl IntoIterator<Item = (Vec<(usize, usize)>, f64)>) -> Self {
        NcPoly {
            terms: terms
                .into_iter()
                .map(|(mono, coeff)| Term {
                    monomial: mono
                        .into_iter()
                        .map(|(factor, index)| Letter { factor, index })
                        .collect(),
                    coeff,
                })
                .collect(),
        }
    }

    /// `Z_a Z_b − Z_b Z_a` (0-based letters).
    pub fn commutator(a: (usize, usize), b: (usize, usize)) -> Self {
        Self::new([(vec![a, b], 1.0), (vec![b, a], -1.0)])
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|t| t.monomial.len()).max().unwrap_or(0)
    }

    /// Number of letters from each factor in a monomial.
    pub fn profile(mono: &[Letter], k: usize) -> Vec<usize> {
        let mut p = vec![0; k];
        for l in mono {
            if l.factor < k {
                p[l.factor] += 1;
            }
        }
        p
    }

    /// Largest per-factor degree over all monomials.
    pub fn factor_degrees(&self, k: usize) -> Vec<usize> {
        let mut out = vec![0; k];
        for t in &self.terms {
            for (o, v) in out.iter_mut().zip(Self::profile(&t.monomial, k)) {
                *o = (*o).max(v);
            }
        }
        out
    }

    /// Every monomial with a nonzero coefficient has the same per-factor degree profile.
    pub fn is_homogeneous(&self, k: usize) -> bool {
        let mut first: Option<Vec<usize>> = None;
        for t in self.terms.iter().filter(|t| t.coeff != 0.0) {
            let p = Self::profile(&t.monomial, k);
            match &first {
                None => first = Some(p),
                Some(q) if *q != p => return false,
                _ => {}
            }
        }
        true
    }

    pub fn check_letters(&self, arities: &[usize]) -> Result<()> {
        for t in &self.terms {
            for l in &t.monomial {
                if l.factor >= arities.len() || l.index >= arities[l.factor] {
                    return Err(Error::Invalid(format!(
                        "polynomial letter Z[{}][{}] outside the arities {:?}",
                        l.factor + 1,
                        l.index + 1,
                        arities
                    )));
                }
            }
        }
        Ok(())
    }

    /// `q(A)` for `ops[i][j] = A_{i,j}`.
    pub fn eval(&self, ops: &[Vec<CMat>], d: usize) -> CMat {
        let mut out = CMat::zeros(d, d);
        for t in &self.terms {
            let mut prod = CMat::identity(d, d);
            for l in &t.monomial {
                prod = prod * &ops[l.factor][l.index];
            }
            out += prod * c64(t.coeff, 0.0);
        }
        out
    }

    /// Applies `q` through a callback `apply(letter, v)` computing `Z_letter v`.
    pub fn apply_with<V: Clone>(
        &self,
        v: &V,
        zero: V,
        apply: &mut dyn FnMut(Letter, &V) -> V,
        axpy: &mut dyn FnMut(&mut V, f64, &V),
    ) -> V {
        let mut out = zero;
        for t in &self.terms {
            let mut w = v.clone();
            for l in t.monomial.iter().rev() {
                w = apply(*l, &w);
            }
            axpy(&mut out, t.coeff, &w);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_letters_are_one_based() {
        let q = NcPoly::commutator((0, 0), (0, 1));
        let s = serde_json::to_string(&q).unwrap();
        assert_eq!(
            s,
            r#"[{"monomial":[[1,1],[1,2]],"coeff":1.0},{"monomial":[[1,2],[1,1]],"coeff":-1.0}]"#
        );
        let back: NcPoly = serde_json::from_str(&s).unwrap();
        assert_eq!(back, q);
    }

    #[test]
    fn homogeneity() {
        assert!(NcPoly::commutator((0, 0), (0, 1)).is_homogeneous(1));
        let q = NcPoly::new([(vec![(0, 0)], 1.0), (vec![(0, 0), (0, 0)], 1.0)]);
        assert!(!q.is_homogeneous(1));
        let q = NcPoly::new([(vec![(0, 0), (1, 0)], 1.0), (vec![(1, 0), (0, 0)], -1.0)]);
        assert!(q.is_homogeneous(2));
    }

    #[test]
    fn evaluation_of_commutator_vanishes_on_commuting_pair() {
        let a = CMat::from_fn(3, 3, |i, j| c64((i + 2 * j) as f64, 0.0));
        let b = &a * &a + &a * c64(0.5, 0.0);
        let q = NcPoly::commutator((0, 0), (0, 1));
        assert!(q.eval(&[vec![a, b]], 3).norm() < 1e-9);
    }
}
