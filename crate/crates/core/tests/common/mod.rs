#![allow(dead_code)]

use polydom_core::cpmap::CpTuple;
use polydom_core::gen::{generate, random_matrix, Family, GenParams, Instance, ScaleBy};
use polydom_core::linalg::{c64, op_norm, CMat};
use polydom_core::words::{PositiveSymbol, Word};
use polydom_core::Tolerances;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn tol() -> Tolerances {
    Tolerances::default()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `f = Z` with the single operator `c I_d`.
pub fn scalar(c: f64, d: usize) -> CpTuple {
    CpTuple::from_parts(vec![PositiveSymbol::single()], vec![vec![CMat::identity(d, d) * c64(c, 0.0)]], &tol()).unwrap()
}

pub fn single(a: CMat) -> CpTuple {
    CpTuple::from_parts(vec![PositiveSymbol::single()], vec![vec![a]], &tol()).unwrap()
}

pub fn instance(family: Family, seed: u64, radius: f64, arities: Vec<usize>, dim: usize, m: Vec<u32>) -> (Instance, CpTuple) {
    let inst = generate(&GenParams {
        family,
        seed,
        target_radius: radius,
        arities,
        dim,
        m,
        scale_by: ScaleBy::Radius,
        into_domain: true,
    })
    .unwrap();
    let phi = inst.cp_tuple(&tol()).unwrap();
    (inst, phi)
}

pub fn commuting(seed: u64, radius: f64) -> (Instance, CpTuple) {
    instance(Family::CommutingPolynomials, seed, radius, vec![2, 1], 4, vec![1, 1])
}

pub fn nilpotent(seed: u64, dim: usize, m: Vec<u32>) -> (Instance, CpTuple) {
    instance(Family::Nilpotent, seed, 0.8, vec![2, 1], dim, m)
}

pub fn word_product(fam: &[CMat], w: &Word, d: usize) -> CMat {
    let mut p = CMat::identity(d, d);
    for &l in w.letters() {
        p *= &fam[l as usize - 1];
    }
    p
}

/// `Σ_α a_α A_α X A_α^*` from raw instance data.
pub fn apply(symbols: &[PositiveSymbol], ops: &[Vec<CMat>], i: usize, x: &CMat) -> CMat {
    let d = x.nrows();
    let mut out = CMat::zeros(d, d);
    for (w, a) in symbols[i].terms() {
        let aw = word_product(&ops[i], w, d);
        out += &aw * x * aw.adjoint() * c64(a, 0.0);
    }
    out
}

pub fn defect(symbols: &[PositiveSymbol], ops: &[Vec<CMat>], p: &[u32], x: &CMat) -> CMat {
    let mut y = x.clone();
    for (i, &pi) in p.iter().enumerate() {
        for _ in 0..pi {
            y = &y - apply(symbols, ops, i, &y);
        }
    }
    y
}

pub fn random_psd(rng: &mut ChaCha8Rng, d: usize) -> CMat {
    let b = random_matrix(rng, d);
    &b * b.adjoint() + CMat::identity(d, d) * c64(0.1, 0.0)
}

pub fn dist(a: &CMat, b: &CMat) -> f64 {
    op_norm(&(a - b))
}

/// Nilpotent Jordan block `J` with ones on the superdiagonal, times `c`.
pub fn jordan(d: usize, c: f64) -> CMat {
    CMat::from_fn(d, d, |r, col| if col == r + 1 { c64(c, 0.0) } else { c64(0.0, 0.0) })
}
