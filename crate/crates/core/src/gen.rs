//! Seeded random instance families.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cone::membership;
use crate::config::Tolerances;
use crate::cpmap::{CpTuple, OperatorTuple};
use crate::error::{Error, Result};
use crate::linalg::{self, c64, kron, op_norm, CMat};
use crate::poly::NcPoly;
use crate::words::{PositiveSymbol, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    CommutingPolynomials,
    ConjugatedUnitaries,
    Nilpotent,
    PolyballRandom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleBy {
    /// Joint spectral radius `r_{f_i}(A_i)`.
    Radius,
    /// Largest operator norm in each family.
    Norm,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct GenParams {
    pub family: Family,
    pub seed: u64,
    pub target_radius: f64,
    pub arities: Vec<usize>,
    pub dim: usize,
    pub m: Vec<u32>,
    pub scale_by: ScaleBy,
    /// Nilpotent family: halve the operators until `I` is in the cone.
    pub into_domain: bool,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            family: Family::CommutingPolynomials,
            seed: 0,
            target_radius: 0.8,
            arities: vec![2, 1],
            dim: 4,
            m: vec![1, 1],
            scale_by: ScaleBy::Radius,
            into_domain: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub symbols: Vec<PositiveSymbol>,
    pub m: Vec<u32>,
    pub ops: Vec<Vec<CMat>>,
    pub constraints: Vec<NcPoly>,
}

impl Instance {
    pub fn cp_tuple(&self, tol: &Tolerances) -> Result<CpTuple> {
        CpTuple::from_parts(self.symbols.clone(), self.ops.clone(), tol)
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn cnormal(rng: &mut ChaCha8Rng) -> num_complex::Complex64 {
    c64(normal(rng), normal(rng)) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_matrix(rng: &mut ChaCha8Rng, d: usize) -> CMat {
    CMat::from_fn(d, d, |_, _| cnormal(rng))
}

pub fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> CMat {
    random_matrix(rng, d).qr().q()
}

/// `V_1 diag(σ) V_2` with `σ` log-uniform in `[1, cond]`, smallest 1 and largest `cond`.
pub fn random_invertible(rng: &mut ChaCha8Rng, d: usize, cond: f64) -> CMat {
    let v1 = random_unitary(rng, d);
    let v2 = random_unitary(rng, d);
    let sig: Vec<f64> = (0..d)
        .map(|l| match l {
            0 => 1.0,
            l if l == d - 1 => cond,
            _ => cond.powf(rng.random::<f64>()),
        })
        .collect();
    let s = CMat::from_diagonal(&nalgebra::DVector::from_iterator(d, sig.into_iter().map(|v| c64(v, 0.0))));
    v1 * s * v2
}

/// Degree-one symbol `Σ_j a_j Z_j` with `a_j` uniform in `[0.5, 1.5]`.
pub fn random_linear_symbol(rng: &mut ChaCha8Rng, n: usize) -> PositiveSymbol {
    PositiveSymbol::new(n, (1..=n as u32).map(|j| (Word::letter(j), rng.random_range(0.5..1.5))))
}

/// Random symbol of degree at most `deg` with positive linear part.
pub fn random_symbol(rng: &mut ChaCha8Rng, n: usize, deg: usize) -> PositiveSymbol {
    let mut terms = Vec::new();
    for w in crate::words::enumerate_words(n, deg).expect("small word set") {
        if w.is_empty() {
            continue;
        }
        if w.len() == 1 {
            terms.push((w, rng.random_range(0.1..1.0)));
        } else if rng.random::<f64>() < 0.5 {
            terms.push((w, rng.random_range(0.0..1.0)));
        }
    }
    PositiveSymbol::new(n, terms)
}

/// `c_1 X + c_2 X^2`, plus `c_0 I` when `constant`.
fn random_poly_of(rng: &mut ChaCha8Rng, x: &CMat, constant: bool) -> CMat {
    let d = x.nrows();
    let mut out = x * cnormal(rng) + x * x * (cnormal(rng) * 0.5);
    if constant {
        out += CMat::identity(d, d) * cnormal(rng);
    }
    out
}

fn commutator_constraints(arities: &[usize]) -> Vec<NcPoly> {
    let mut out = Vec::new();
    for (i, &n) in arities.iter().enumerate() {
        for a in 0..n {
            for b in (a + 1)..n {
                out.push(NcPoly::commutator((i, a), (i, b)));
            }
        }
    }
    out
}

fn check_params(p: &GenParams) -> Result<()> {
    if p.arities.is_empty() || p.arities.contains(&0) || p.dim == 0 {
        return Err(Error::Invalid("generator needs positive arities and dimension".into()));
    }
    if p.m.len() != p.arities.len() || p.m.contains(&0) {
        return Err(Error::Invalid("generator needs one positive weight order per factor".into()));
    }
    if !(p.target_radius > 0.0 && p.target_radius.is_finite()) {
        return Err(Error::Invalid("target radius must be positive".into()));
    }
    Ok(())
}

fn rescale(symbols: &[PositiveSymbol], ops: &mut [Vec<CMat>], p: &GenParams) -> Result<()> {
    for (i, fam) in ops.iter_mut().enumerate() {
        let current = match p.scale_by {
            ScaleBy::Norm => fam.iter().map(op_norm).fold(0.0, f64::max),
            ScaleBy::Radius => {
                let phi = CpTuple::new(vec![symbols[i].clone()], OperatorTuple::new_unchecked(vec![fam.clone()])?)?;
                phi.joint_spectral_radius(0)?
            }
        };
        if current > 1e-12 {
            let s = c64(p.target_radius / current, 0.0);
            for a in fam.iter_mut() {
                *a *= s;
            }
        }
    }
    Ok(())
}

pub fn generate(p: &GenParams) -> Result<Instance> {
    check_params(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let d = p.dim;
    match p.family {
        Family::CommutingPolynomials => {
            let x = random_matrix(&mut rng, d);
            let symbols: Vec<PositiveSymbol> = p.arities.iter().map(|&n| random_linear_symbol(&mut rng, n)).collect();
            let mut ops: Vec<Vec<CMat>> = p
                .arities
                .iter()
                .map(|&n| (0..n).map(|_| random_poly_of(&mut rng, &x, true)).collect())
                .collect();
            rescale(&symbols, &mut ops, p)?;
            Ok(Instance {
                symbols,
                m: p.m.clone(),
                ops,
                constraints: commutator_constraints(&p.arities),
            })
        }
        Family::ConjugatedUnitaries => {
            // one unitary per factor; only the number of factors is taken from `arities`
            let v = random_unitary(&mut rng, d);
            let cond = rng.random_range(2.0..10.0);
            let xi = random_invertible(&mut rng, d, cond);
            let xi_inv = linalg::inverse(&xi)?;
            let step = 2.0 * std::f64::consts::PI / d as f64;
            let ops = (0..p.arities.len())
                .map(|_| {
                    let offset = rng.random_range(0.0..step);
                    let diag = nalgebra::DVector::from_iterator(
                        d,
                        (0..d).map(|l| {
                            let th = offset + step * (l as f64 + rng.random_range(-0.2..0.2));
                            c64(th.cos(), th.sin())
                        }),
                    );
                    let u = &v * CMat::from_diagonal(&diag) * v.adjoint();
                    vec![&xi * u * &xi_inv]
                })
                .collect();
            Ok(Instance {
                symbols: vec![PositiveSymbol::single(); p.arities.len()],
                m: p.m.clone(),
                ops,
                constraints: Vec::new(),
            })
        }
        Family::Nilpotent => {
            let nmat = CMat::from_fn(d, d, |r, c| if c > r { cnormal(&mut rng) } else { c64(0.0, 0.0) });
            let symbols: Vec<PositiveSymbol> = p.arities.iter().map(|&n| random_linear_symbol(&mut rng, n)).collect();
            let mut ops: Vec<Vec<CMat>> = p
                .arities
                .iter()
                .map(|&n| (0..n).map(|_| random_poly_of(&mut rng, &nmat, false)).collect())
                .collect();
            let mut scale = 1.0 / ops.iter().flatten().map(op_norm).fold(1e-300, f64::max);
            if p.into_domain {
                let tol = Tolerances::default();
                let id = CMat::identity(d, d);
                for _ in 0..200 {
                    let scaled: Vec<Vec<CMat>> =
                        ops.iter().map(|f| f.iter().map(|a| a * c64(scale, 0.0)).collect()).collect();
                    let phi = CpTuple::new(symbols.clone(), OperatorTuple::new_unchecked(scaled)?)?;
                    let rep = membership(&phi, &p.m, &id, &tol, 0)?;
                    if rep.min_over_nonzero_p() > tol.pd_abs {
                        break;
                    }
                    scale *= 0.5;
                }
            }
            for a in ops.iter_mut().flatten() {
                *a *= c64(scale, 0.0);
            }
            Ok(Instance {
                symbols,
                m: p.m.clone(),
                ops,
                constraints: commutator_constraints(&p.arities),
            })
        }
        Family::PolyballRandom => {
            let k = p.arities.len();
            let e = (d as f64).powf(1.0 / k as f64).round() as usize;
            if e.pow(k as u32) != d {
                return Err(Error::Invalid(format!("dimension {d} is not a {k}-th power")));
            }
            let mut ops = Vec::with_capacity(k);
            for (i, &n) in p.arities.iter().enumerate() {
                let local: Vec<CMat> = (0..n).map(|_| random_matrix(&mut rng, e)).collect();
                let mut row = CMat::zeros(e, e);
                for a in &local {
                    row += a * a.adjoint();
                }
                let s = c64(p.target_radius / op_norm(&row).sqrt(), 0.0);
                let fam = local
                    .into_iter()
                    .map(|a| {
                        let mut out = CMat::identity(1, 1);
                        for t in 0..k {
                            out = kron(&out, &if t == i { &a * s } else { CMat::identity(e, e) });
                        }
                        out
                    })
                    .collect();
                ops.push(fam);
            }
            Ok(Instance {
                symbols: p.arities.iter().map(|&n| PositiveSymbol::polyball(n)).collect(),
                m: p.m.clone(),
                ops,
                constraints: Vec::new(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let p = GenParams::default();
        let a = generate(&p).unwrap();
        let b = generate(&p).unwrap();
        assert_eq!(a.ops, b.ops);
    }

    #[test]
    fn commuting_instance_radius() {
        let p = GenParams {
            target_radius: 0.7,
            ..GenParams::default()
        };
        let inst = generate(&p).unwrap();
        let phi = inst.cp_tuple(&Tolerances::default()).unwrap();
        for i in 0..2 {
            assert!((phi.joint_spectral_radius(i).unwrap() - 0.7).abs() < 1e-8);
        }
    }

    #[test]
    fn nilpotent_powers_vanish_exactly() {
        let p = GenParams {
            family: Family::Nilpotent,
            seed: 1,
            dim: 5,
            ..GenParams::default()
        };
        let inst = generate(&p).unwrap();
        let ops = OperatorTuple::new(inst.ops.clone(), 1e-10).unwrap();
        let w = Word(vec![1; 5]);
        assert!(ops.word_product(0, &w).iter().all(|z| z.re == 0.0 && z.im == 0.0));
    }

    #[test]
    fn polyball_tensor_factors_commute() {
        let p = GenParams {
            family: Family::PolyballRandom,
            arities: vec![2, 2],
            m: vec![1, 1],
            dim: 4,
            target_radius: 0.6,
            ..GenParams::default()
        };
        let inst = generate(&p).unwrap();
        assert!(OperatorTuple::new(inst.ops, 1e-12).is_ok());
    }
}
