mod common;

use common::*;
use polydom_core::berezin::{
    compatible, constrained_kernel, extended_transform_sweep, intertwine_check, intertwine_check_compressed, kernel,
    transform, vn_check_model, vn_check_polydisc, VnVerdict, WordPair,
};
use polydom_core::cpmap::CpTuple;
use polydom_core::fock::{build_model, compress, variety_subspace};
use polydom_core::linalg::{c64, op_norm, CMat};
use polydom_core::poly::NcPoly;
use polydom_core::words::{PositiveSymbol, Word};
use proptest::prelude::*;

fn zero_tuple(d: usize) -> CpTuple {
    CpTuple::from_parts(
        vec![PositiveSymbol::polyball(2), PositiveSymbol::single()],
        vec![vec![CMat::zeros(d, d); 2], vec![CMat::zeros(d, d)]],
        &tol(),
    )
    .unwrap()
}

fn letter(f: usize, j: usize) -> NcPoly {
    NcPoly::new([(vec![(f, j)], 1.0)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn zero_tuple_gram_is_r(seed in 0u64..1000) {
        let phi = zero_tuple(3);
        let mut r = rng(seed);
        let rr = random_psd(&mut r, 3);
        let omega = compatible(&phi, &[2, 1], &rr, &[], &tol()).unwrap();
        let model = build_model(phi.symbols(), &[2, 1], 2).unwrap();
        let k = kernel(&omega, &model, &tol()).unwrap();
        prop_assert!(dist(&k.gram(), &rr) <= 1e-12 * op_norm(&rr));
        // only the vacuum block is nonzero
        prop_assert!((1..model.dim()).all(|i| k.block(i).norm() == 0.0));
    }
}

#[test]
fn letter_constraints_keep_only_the_vacuum() {
    let phi = zero_tuple(3);
    let mut r = rng(1);
    let rr = random_psd(&mut r, 3);
    let q = vec![letter(0, 0), letter(0, 1), letter(1, 0)];
    let omega = compatible(&phi, &[1, 1], &rr, &q, &tol()).unwrap();
    let model = build_model(phi.symbols(), &[1, 1], 3).unwrap();
    let sub = variety_subspace(&model, &q, &tol()).unwrap();
    assert_eq!(sub.dim(), 1);
    let full = kernel(&omega, &model, &tol()).unwrap();
    let ck = constrained_kernel(&omega, &full, &sub);
    assert!(ck.range_residual <= 1e-14);
    assert!(dist(&ck.kernel.gram(), &rr) <= 1e-12 * op_norm(&rr));
}

#[test]
fn constraints_need_a_zero_on_the_tuple() {
    let (inst, phi) = commuting(0, 0.5);
    assert!(compatible(&phi, &inst.m, &CMat::identity(4, 4), &[letter(0, 0)], &tol()).is_err());
    assert!(compatible(&phi, &inst.m, &(-CMat::identity(4, 4)), &[], &tol()).is_err());
}

#[test]
fn commuting_kernel_lands_in_variety() {
    for seed in 0..4 {
        let (inst, phi) = commuting(seed, 0.6);
        let mut r = rng(seed);
        let rr = random_psd(&mut r, 4);
        let omega = compatible(&phi, &inst.m, &rr, &inst.constraints, &tol()).unwrap();
        let model = build_model(phi.symbols(), &inst.m, 4).unwrap();
        let sub = variety_subspace(&model, &inst.constraints, &tol()).unwrap();
        let full = kernel(&omega, &model, &tol()).unwrap();
        let ck = constrained_kernel(&omega, &full, &sub);
        let scale = op_norm(&full.matrix);
        assert!(ck.range_residual <= 1e-10 * scale, "seed {seed}: {}", ck.range_residual);
        let comp = compress(&model, &sub);
        let rep = intertwine_check_compressed(&phi, &model, &sub, &comp, &ck.kernel);
        assert!(rep.max_interior <= 1e-10 * scale, "seed {seed}: {}", rep.max_interior);
    }
}

#[test]
fn nilpotent_defect_kernel_is_isometric() {
    for seed in 0..4 {
        let (inst, phi) = nilpotent(seed, 4, vec![1, 1]);
        let id = CMat::identity(4, 4);
        let rr = phi.defect(&inst.m, &id);
        let omega = compatible(&phi, &inst.m, &rr, &[], &tol()).unwrap();
        let model = build_model(phi.symbols(), &inst.m, 4).unwrap();
        let k = kernel(&omega, &model, &tol()).unwrap();
        assert!(dist(&k.gram(), &id) <= 1e-12, "seed {seed}: {}", dist(&k.gram(), &id));
        assert!(intertwine_check(&phi, &model, &k).max_full <= 1e-12);
    }
}

#[test]
fn interior_intertwining_and_truncation_decay() {
    let (inst, phi) = commuting(2, 0.9);
    let mut r = rng(2);
    let rr = random_psd(&mut r, 4);
    let omega = compatible(&phi, &inst.m, &rr, &[], &tol()).unwrap();
    let mut last = f64::INFINITY;
    for degree in [2, 4, 6] {
        let model = build_model(phi.symbols(), &inst.m, degree).unwrap();
        let k = kernel(&omega, &model, &tol()).unwrap();
        let rep = intertwine_check(&phi, &model, &k);
        assert!(rep.max_interior <= 1e-10 * op_norm(&k.matrix));
        assert!(k.gram_residual <= k.tail_bound);
        assert!(k.gram_residual < last);
        // the truncated Gram matrix is a partial sum of a positive series
        assert!(polydom_core::linalg::min_eig(&(&omega.series - k.gram())) >= -1e-10);
        last = k.gram_residual;
    }
}

#[test]
fn transform_examples() {
    let (inst, phi) = nilpotent(3, 4, vec![1, 1]);
    let id = CMat::identity(4, 4);
    let rr = phi.defect(&inst.m, &id);
    let omega = compatible(&phi, &inst.m, &rr, &[], &tol()).unwrap();
    let model = build_model(phi.symbols(), &inst.m, 4).unwrap();
    let k = kernel(&omega, &model, &tol()).unwrap();
    let n = model.dim();
    assert_eq!(op_norm(&transform(&k, &CMat::zeros(n, n)).unwrap()), 0.0);
    assert!(dist(&transform(&k, &CMat::identity(n, n)).unwrap(), &id) <= 1e-12);
    assert!(transform(&k, &CMat::zeros(n - 1, n - 1)).is_err());
    // B[W_1 W_1^*] = A_1 A_1^*
    let w = polydom_core::linalg::to_complex(&model.op(0, 0).to_dense());
    let a = &inst.ops[0][0];
    let got = transform(&k, &(&w * w.adjoint())).unwrap();
    assert!(dist(&got, &(a * a.adjoint())) <= 1e-12);
}

fn multi_word_product(inst: &polydom_core::gen::Instance, words: &[Word], r: f64) -> CMat {
    let mut p = CMat::identity(4, 4);
    for (i, w) in words.iter().enumerate() {
        p *= word_product(&inst.ops[i], w, 4) * c64(r.powi(w.len() as i32), 0.0);
    }
    p
}

#[test]
fn sweep_scales_with_word_length() {
    let (inst, phi) = nilpotent(5, 4, vec![1, 1]);
    let mut r = rng(5);
    // D = weighted series of a PSD matrix lies in the cone
    let d_pos = phi.weighted_series(&inst.m, &random_psd(&mut r, 4), &tol()).unwrap().value;
    let pairs = vec![
        WordPair { alpha: vec![Word::empty(), Word::empty()], beta: vec![Word::empty(), Word::empty()] },
        WordPair { alpha: vec![Word(vec![1, 2]), Word::empty()], beta: vec![Word::empty(), Word(vec![1])] },
        WordPair { alpha: vec![Word(vec![2]), Word(vec![1])], beta: vec![Word(vec![1]), Word::empty()] },
    ];
    let grid = [0.0, 0.3, 0.6, 0.9];
    let rep = extended_transform_sweep(&phi, &inst.m, &d_pos, &inst.constraints, &grid, &pairs, 5, &tol()).unwrap();
    let scale = op_norm(&d_pos);
    assert!(rep.max_ksk_residual <= 1e-8 * scale, "{}", rep.max_ksk_residual);
    for (vals, &rad) in rep.values.iter().zip(&grid) {
        assert!(dist(&vals[0], &d_pos) <= 1e-8 * scale);
        for (p, v) in pairs.iter().zip(vals) {
            let want = multi_word_product(&inst, &p.alpha, rad) * &d_pos * multi_word_product(&inst, &p.beta, rad).adjoint();
            assert!(dist(v, &want) <= 1e-8 * scale);
        }
    }
    assert!(extended_transform_sweep(&phi, &inst.m, &d_pos, &[], &[1.0], &pairs, 5, &tol()).is_err());
    let inhom = NcPoly::new([(vec![(0, 0)], 1.0), (vec![], -1.0)]);
    assert!(extended_transform_sweep(&phi, &inst.m, &d_pos, &[inhom], &grid, &pairs, 5, &tol()).is_err());
}

#[test]
fn polydisc_inequality_examples() {
    let one = vec![vec![NcPoly::new([(vec![], 1.0)])]];
    let z = vec![vec![letter(0, 0)]];
    for c in [0.0, 0.3, 0.9] {
        let phi = scalar(c, 2);
        let rep = vn_check_polydisc(&phi, &one, 32, 1e-9).unwrap();
        assert_eq!(rep.verdict, VnVerdict::Pass);
        assert!((rep.lhs - 1.0).abs() < 1e-15);
        // b = 1 / (1 − c²) for a scalar contraction
        assert!((rep.constant - 1.0 / (1.0 - c * c)).abs() <= 1e-12 / (1.0 - c * c));
        let rep = vn_check_polydisc(&phi, &z, 32, 1e-9).unwrap();
        assert_eq!(rep.verdict, VnVerdict::Pass);
        assert!((rep.lhs - c).abs() < 1e-15);
        assert!(rep.rhs_lower >= 1.0);
    }
    let (_, poly) = commuting(0, 0.5);
    assert!(vn_check_polydisc(&poly, &one, 16, 1e-9).is_err());
}

#[test]
fn model_inequality_on_jordan_block() {
    let phi = single(jordan(4, 0.8));
    let id = CMat::identity(4, 4);
    let q = vec![vec![letter(0, 0), NcPoly::new([(vec![(0, 0), (0, 0)], 2.0)])], vec![NcPoly::new([(vec![], 1.0)]), letter(0, 0)]];
    let rep = vn_check_model(&phi, &[1], &id, &[], &q, 5, &tol()).unwrap();
    assert_eq!(rep.verdict, VnVerdict::Pass, "{rep:?}");
    assert!(rep.lhs <= rep.rhs_lower);
    assert!(vn_check_model(&phi, &[1], &(-&id), &[], &q, 5, &tol()).is_err());
}
