mod common;

use common::*;
use nalgebra::DMatrix;
use polydom_core::fock::{build_model, compress, domain_check_model, variety_subspace, Model};
use polydom_core::gen::random_symbol;
use polydom_core::poly::NcPoly;
use polydom_core::words::{word_count, PositiveSymbol};
use proptest::prelude::*;

type RMat = DMatrix<f64>;

fn dense(model: &Model) -> Vec<Vec<RMat>> {
    model.ops().iter().map(|f| f.iter().map(|w| w.to_dense()).collect()).collect()
}

/// `Σ_α a_α W_α X W_α^T` from dense matrices.
fn phi_oracle(model: &Model, w: &[Vec<RMat>], i: usize, x: &RMat) -> RMat {
    let n = x.nrows();
    let mut out = RMat::zeros(n, n);
    for (alpha, a) in model.symbols[i].terms() {
        let mut p = RMat::identity(n, n);
        for &j in alpha.letters() {
            p *= &w[i][j as usize - 1];
        }
        out += &p * x * p.transpose() * a;
    }
    out
}

fn defect_oracle(model: &Model, w: &[Vec<RMat>], p: &[u32]) -> RMat {
    let n = model.dim();
    let mut y = RMat::identity(n, n);
    for (i, &pi) in p.iter().enumerate() {
        for _ in 0..pi {
            y = &y - phi_oracle(model, w, i, &y);
        }
    }
    y
}

#[test]
fn dimensions_and_weights() {
    let model = build_model(&[PositiveSymbol::polyball(2), PositiveSymbol::single()], &[1, 1], 3).unwrap();
    assert_eq!(model.dim(), 15 * 4);
    assert_eq!(word_count(2, 3), Some(15));
    // polyball with m = 1 has unit weights, so W_j are partial isometries
    let w = dense(&model);
    for f in &w {
        for a in f {
            let ata = a.transpose() * a;
            for (r, v) in ata.diagonal().iter().enumerate() {
                assert!(*v == 0.0 || (*v - 1.0).abs() < 1e-15, "row {r}: {v}");
            }
        }
    }
}

#[test]
fn factors_commute() {
    let model = build_model(&[PositiveSymbol::polyball(2), PositiveSymbol::polyball(2)], &[2, 1], 3).unwrap();
    let w = dense(&model);
    for a in &w[0] {
        for b in &w[1] {
            assert_eq!(a * b, b * a);
        }
    }
    assert_ne!(&w[0][0] * &w[0][1], &w[0][1] * &w[0][0]);
}

#[test]
fn row_isometry_relation() {
    for m in 1..=3u32 {
        let d = 6;
        let model = build_model(&[PositiveSymbol::polyball(2)], &[m], d).unwrap();
        let w = dense(&model);
        let full = defect_oracle(&model, &w, &[m]);
        for idx in 0..model.dim() {
            let deg = model.fock.degrees_at(idx)[0];
            if deg + m as usize > d {
                continue;
            }
            // Δ^m(I) is the vacuum projection away from the cut
            let want = if idx == 0 { 1.0 } else { 0.0 };
            assert!((full[(idx, idx)] - want).abs() < 1e-12, "m {m} idx {idx}: {}", full[(idx, idx)]);
            for c in 0..model.dim() {
                if c != idx {
                    assert!(full[(idx, c)].abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn vacuum_is_killed_by_adjoints() {
    let model = build_model(&[PositiveSymbol::polyball(3), PositiveSymbol::single()], &[2, 1], 2).unwrap();
    let mut vac = vec![0.0; model.dim()];
    vac[0] = 1.0;
    for f in model.ops() {
        for w in f {
            assert!(w.apply_adjoint(&vac).iter().all(|&x| x == 0.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn interior_defects_are_positive(seed in 0u64..1000, m1 in 1u32..3, m2 in 1u32..3, n in 1usize..3) {
        let mut r = rng(seed);
        let symbols = vec![random_symbol(&mut r, n, 2), random_symbol(&mut r, 1, 2)];
        let m = [m1, m2];
        let d = 6;
        let model = build_model(&symbols, &m, d).unwrap();
        let reach = symbols.iter().zip(&m).map(|(f, &mi)| mi as usize * f.max_degree()).max().unwrap();
        let interior = d - reach.min(d);
        let rep = domain_check_model(&model, &m, interior, 1e-10).unwrap();
        prop_assert!(rep.pass);
        prop_assert!(domain_check_model(&model, &m, interior + 1, 1e-10).is_err());
        if model.dim() <= 200 {
            let w = dense(&model);
            for e in &rep.entries {
                let full = defect_oracle(&model, &w, &e.p);
                let diag = model.defect_diagonal(&e.p);
                for (idx, v) in diag.iter().enumerate() {
                    prop_assert!((full[(idx, idx)] - v).abs() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn diagonal_action_matches_dense(seed in 0u64..1000) {
        let mut r = rng(seed);
        let symbols = vec![random_symbol(&mut r, 2, 2)];
        let model = build_model(&symbols, &[2], 4).unwrap();
        let w = dense(&model);
        let diag: Vec<f64> = (0..model.dim()).map(|i| 1.0 + i as f64 / 7.0).collect();
        let x = RMat::from_diagonal(&nalgebra::DVector::from_vec(diag.clone()));
        let want = phi_oracle(&model, &w, 0, &x);
        prop_assert!((model.phi_dense(0, &x) - &want).norm() <= 1e-10);
        for (i, v) in model.phi_diagonal(0, &diag).iter().enumerate() {
            prop_assert!((want[(i, i)] - v).abs() <= 1e-10);
        }
    }
}

#[test]
fn letters_as_constraints_leave_the_vacuum() {
    let symbols = [PositiveSymbol::polyball(2), PositiveSymbol::single()];
    let model = build_model(&symbols, &[1, 1], 3).unwrap();
    let q = vec![
        NcPoly::new([(vec![(0, 0)], 1.0)]),
        NcPoly::new([(vec![(0, 1)], 1.0)]),
        NcPoly::new([(vec![(1, 0)], 1.0)]),
    ];
    let sub = variety_subspace(&model, &q, &tol()).unwrap();
    assert_eq!(sub.dim(), 1);
    assert!((sub.basis[(0, 0)].abs() - 1.0).abs() < 1e-15);
    let c = compress(&model, &sub);
    for s in c.s.iter().flatten() {
        assert_eq!(s[(0, 0)], 0.0);
    }
}

#[test]
fn no_constraints_keeps_everything() {
    let model = build_model(&[PositiveSymbol::polyball(2)], &[2], 3).unwrap();
    let sub = variety_subspace(&model, &[], &tol()).unwrap();
    assert_eq!((sub.dim(), sub.m_dim), (model.dim(), 0));
    let c = compress(&model, &sub);
    let w = dense(&model);
    let b = &sub.basis;
    assert!((&c.s[0][1] - b.transpose() * &w[0][1] * b).norm() < 1e-14);
    assert!((b.transpose() * b - RMat::identity(model.dim(), model.dim())).norm() < 1e-12);
}

#[test]
fn commutator_variety_is_symmetric_fock_space() {
    for m in 1..=2u32 {
        let d = 5;
        let model = build_model(&[PositiveSymbol::polyball(2)], &[m], d).unwrap();
        let q = NcPoly::commutator((0, 0), (0, 1));
        let sub = variety_subspace(&model, &[q.clone()], &tol()).unwrap();
        // one symmetric tensor per commutative monomial of degree <= d
        assert_eq!(sub.dim(), (0..=d).map(|s| s + 1).sum::<usize>());
        let c = compress(&model, &sub);
        let comm = &c.s[0][0] * &c.s[0][1] - &c.s[0][1] * &c.s[0][0];
        for nu in 0..sub.dim() {
            if sub.degrees[nu][0] + 2 <= d {
                assert!(comm.column(nu).norm() <= 1e-10, "m {m} nu {nu}");
            }
        }
        assert!(c.q_residuals[0] <= 1e-10);
        // N_Q is invariant under the adjoints W^T
        let b = &sub.basis;
        let p = sub.projector();
        let w = dense(&model);
        for a in &w[0] {
            let wt_b = a.transpose() * b;
            assert!((&wt_b - &p * &wt_b).norm() <= 1e-10);
        }
        assert!(c.invariance_residual <= 1e-10);
    }
}
