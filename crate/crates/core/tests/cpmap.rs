mod common;

use common::*;
use nalgebra::DMatrix;
use polydom_core::cpmap::{multi_indices_upto, tail_bound, CpTuple};
use polydom_core::gen::{random_matrix, random_unitary, Family};
use polydom_core::linalg::{c64, herm_to_real, max_eig, min_eig, op_norm, real_to_herm, spectral_radius, vec_col, CMat};
use polydom_core::similarity::spectral_radius_equivalences;
use polydom_core::words::PositiveSymbol;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn apply_matches_kraus_sum(seed in 0u64..1000) {
        let (inst, phi) = commuting(seed, 0.7);
        let mut r = rng(seed);
        let x = random_matrix(&mut r, 4);
        for i in 0..2 {
            prop_assert!(dist(&phi.apply(i, &x), &apply(&inst.symbols, &inst.ops, i, &x)) <= 1e-12 * op_norm(&x));
        }
    }

    #[test]
    fn positivity_and_hermiticity_preserved(seed in 0u64..1000) {
        let (_, phi) = commuting(seed, 0.9);
        let mut r = rng(seed + 1);
        let x = random_psd(&mut r, 4);
        for i in 0..2 {
            let y = phi.apply(i, &x);
            prop_assert!(dist(&y, &y.adjoint()) == 0.0);
            prop_assert!(min_eig(&y) >= -1e-12 * op_norm(&y));
        }
    }

    #[test]
    fn matricized_maps_act_on_vectorizations(seed in 0u64..1000) {
        let (_, phi) = commuting(seed, 0.8);
        let mut r = rng(seed + 2);
        let x = random_matrix(&mut r, 4);
        let h = random_psd(&mut r, 4);
        for i in 0..2 {
            let m = phi.matricize(i).unwrap();
            let lhs = &m * vec_col(&x);
            prop_assert!((lhs - vec_col(&phi.apply(i, &x))).norm() <= 1e-11 * op_norm(&x));
            let mr = phi.matricize_real(i).unwrap();
            let back = real_to_herm(&(&mr * herm_to_real(&h)), 4);
            prop_assert!(dist(&back, &phi.apply(i, &h)) <= 1e-11 * op_norm(&h));
        }
    }

    #[test]
    fn defects_compose_in_any_order(seed in 0u64..1000, p1 in 0u32..3, p2 in 0u32..3) {
        let (inst, phi) = commuting(seed, 0.8);
        let mut r = rng(seed + 3);
        let x = random_psd(&mut r, 4);
        let a = phi.defect(&[p1, p2], &x);
        let b = phi.defect_reversed(&[p1, p2], &x);
        let c = defect(&inst.symbols, &inst.ops, &[p1, p2], &x);
        prop_assert!(dist(&a, &b) <= 1e-10 * op_norm(&x));
        prop_assert!(dist(&a, &c) <= 1e-10 * op_norm(&x));
    }

    #[test]
    fn series_inverts_defect_and_respects_its_bound(seed in 0u64..1000, m1 in 1u32..3, m2 in 1u32..3) {
        let (inst, phi) = commuting(seed, 0.85);
        let mut r = rng(seed + 4);
        let rr = random_psd(&mut r, 4);
        let ws = phi.weighted_series(&[m1, m2], &rr, &tol()).unwrap();
        let back = defect(&inst.symbols, &inst.ops, &[m1, m2], &ws.value);
        prop_assert!(dist(&back, &rr) <= 1e-9 * op_norm(&rr));
        // linear-solve oracle on the column-stacked maps
        let d = 4;
        let mut big = CMat::identity(d * d, d * d);
        for (i, &mi) in [m1, m2].iter().enumerate() {
            let mm = phi.matricize(i).unwrap();
            for _ in 0..mi {
                big = (CMat::identity(d * d, d * d) - &mm) * big;
            }
        }
        let sol = big.lu().solve(&DMatrix::from_column_slice(d * d, 1, rr.as_slice())).unwrap();
        let exact = CMat::from_column_slice(d, d, sol.as_slice());
        prop_assert!(dist(&ws.value, &exact) <= ws.error_bound + 1e-10 * op_norm(&exact));
        for (i, &b) in ws.operator_bounds.iter().enumerate() {
            prop_assert!(b >= 1.0 && b.is_finite(), "factor {i}: {b}");
        }
    }

    #[test]
    fn radius_matches_gelfand_oracle(seed in 0u64..1000, target in 0.2f64..0.95) {
        let (inst, phi) = commuting(seed, target);
        for i in 0..2 {
            prop_assert!((phi.joint_spectral_radius(i).unwrap() - target).abs() <= 1e-8);
            // ‖Φ^s(I)‖^{1/2s} at s = 2^10 by repeated application
            let mut y = CMat::identity(4, 4);
            let mut log = 0.0;
            for _ in 0..1024 {
                y = apply(&inst.symbols, &inst.ops, i, &y);
                let n = op_norm(&y);
                log += n.ln();
                y /= c64(n, 0.0);
            }
            let g = (log / 2048.0).exp();
            prop_assert!((g - target).abs() <= 5e-3 * target, "gelfand {g} vs {target}");
        }
    }

    #[test]
    fn tail_bound_is_sound_for_scalars(c in 0.05f64..0.95, m in 1u32..4, n in 0usize..20) {
        let q = c * c;
        let norms: Vec<f64> = (0..=n + 1).map(|s| q.powi(s as i32)).collect();
        let exact: f64 = (n + 1..5000).map(|s| polydom_core::words::series_coeff(s as u64, m as u64) * q.powi(s as i32)).sum();
        prop_assert!(tail_bound(&norms, m, n) >= exact * (1.0 - 1e-12));
    }
}

#[test]
fn scalar_examples() {
    let c = 0.6;
    let phi = scalar(c, 3);
    let id = CMat::identity(3, 3);
    assert!(dist(&phi.apply(0, &id), &(&id * c64(c * c, 0.0))) < 1e-15);
    let m = phi.matricize(0).unwrap();
    assert!(dist(&m, &(CMat::identity(9, 9) * c64(c * c, 0.0))) < 1e-15);
    assert!(dist(&phi.defect(&[2], &id), &(&id * c64((1.0 - c * c).powi(2), 0.0))) < 1e-15);
    assert_eq!(phi.defect(&[0], &id), id);
    let s = phi.iterated_sum(0, 1, &id, &tol()).unwrap();
    assert!(dist(&s.value, &(&id * c64(1.0 / (1.0 - c * c), 0.0))) < 1e-12);
    let w = phi.weighted_series(&[1], &CMat::zeros(3, 3), &tol()).unwrap();
    assert_eq!(op_norm(&w.value), 0.0);
}

#[test]
fn matrix_unit_pair_sums_to_identity() {
    let mut e12 = CMat::zeros(2, 2);
    e12[(0, 1)] = c64(1.0, 0.0);
    let e21 = e12.transpose();
    let phi = CpTuple::from_parts(vec![PositiveSymbol::polyball(2)], vec![vec![e12, e21]], &tol()).unwrap();
    assert_eq!(phi.apply(0, &CMat::identity(2, 2)), CMat::identity(2, 2));
}

#[test]
fn fixed_points_and_unit_defect() {
    let mut r = rng(3);
    let u = random_unitary(&mut r, 4);
    let phi = single(u);
    let id = CMat::identity(4, 4);
    for p in 0..4 {
        let want = if p == 0 { id.clone() } else { CMat::zeros(4, 4) };
        assert!(dist(&phi.defect(&[p], &id), &want) < 1e-13);
    }
    assert!(phi.weighted_series(&[1], &id, &tol()).is_err());
}

#[test]
fn radius_examples() {
    let mut r = rng(4);
    let a = random_matrix(&mut r, 5);
    assert!((single(a.clone()).joint_spectral_radius(0).unwrap() - spectral_radius(&a)).abs() < 1e-10);
    assert_eq!(single(jordan(4, 1.0)).nilpotency_order(0), Some(4));
    let h = CMat::identity(3, 3) * c64(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let pair = CpTuple::from_parts(vec![PositiveSymbol::polyball(2)], vec![vec![h.clone(), h]], &tol()).unwrap();
    assert!((pair.joint_spectral_radius(0).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn unimodular_spectrum_radius_terminates() {
    // conjugated unitaries give a matricized map whose whole spectrum lies on the unit circle
    for seed in 0..10 {
        let (_, phi) = instance(Family::ConjugatedUnitaries, seed, 1.0, vec![1, 1], 6, vec![1, 1]);
        for i in 0..2 {
            assert!((phi.joint_spectral_radius(i).unwrap() - 1.0).abs() < 1e-8);
        }
    }
}

#[test]
fn radius_report_examples() {
    let nil = single(jordan(4, 0.9));
    let e = &spectral_radius_equivalences(&nil, 8).unwrap()[0];
    assert_eq!(e.radius, 0.0);
    assert_eq!(e.nilpotency_order, Some(4));
    assert!(e.decay[3..].iter().all(|&v| v == 0.0));

    let c = 0.7;
    let e = &spectral_radius_equivalences(&scalar(c, 2), 16).unwrap()[0];
    for (s, v) in e.decay.iter().enumerate() {
        assert!((v - c.powi(2 * (s as i32 + 1))).abs() < 1e-14);
    }

    for seed in 0..10 {
        let (_, phi) = commuting(seed, 0.8);
        for e in spectral_radius_equivalences(&phi, 64).unwrap() {
            assert!(e.consistent && e.radius_below_one && e.decays_to_zero);
            assert!((e.power_estimate - e.radius).abs() < 1e-3, "{} vs {}", e.power_estimate, e.radius);
        }
    }
}

#[test]
fn cesaro_mean_averages_iterates() {
    let (inst, phi) = commuting(9, 0.8);
    let mut r = rng(9);
    let x = random_psd(&mut r, 4);
    let got = phi.cesaro_mean(&[3, 2], &x).unwrap();
    let mut want = CMat::zeros(4, 4);
    for s1 in 0..3 {
        let mut y = x.clone();
        for _ in 0..s1 {
            y = apply(&inst.symbols, &inst.ops, 0, &y);
        }
        for s2 in 0..2 {
            let mut z = y.clone();
            for _ in 0..s2 {
                z = apply(&inst.symbols, &inst.ops, 1, &z);
            }
            want += z;
        }
    }
    want /= c64(6.0, 0.0);
    assert!(dist(&got, &want) < 1e-12);
    assert_eq!(multi_indices_upto(&[1, 2]).len(), 6);
    assert!(max_eig(&got) > 0.0);
}
