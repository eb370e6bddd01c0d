use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use polydom_core::words::{
    binomial_u128, enumerate_words, series_coeff, weight_table, weight_table_rational, word_count, word_index,
    PositiveSymbol, Word,
};
use proptest::prelude::*;

/// Sum over all ways of cutting `alpha` into nonempty consecutive blocks.
fn brute(f: &PositiveSymbol, alpha: &Word, m: u64) -> f64 {
    let n = alpha.len();
    if n == 0 {
        return 1.0;
    }
    let mut total = 0.0;
    for mask in 0u32..(1 << (n - 1)) {
        let mut prod = 1.0;
        let mut start = 0;
        let mut parts = 0;
        for cut in 0..n {
            if cut == n - 1 || mask & (1 << cut) != 0 {
                prod *= f.coeff(&Word(alpha.letters()[start..=cut].to_vec()));
                start = cut + 1;
                parts += 1;
            }
        }
        total += prod * series_coeff(parts, m);
    }
    total
}

fn symbol_strategy() -> impl Strategy<Value = PositiveSymbol> {
    (1usize..=2, 1usize..=3)
        .prop_flat_map(|(n, deg)| {
            let words: Vec<Word> = enumerate_words(n, deg).unwrap().into_iter().skip(1).collect();
            let len = words.len();
            (Just(n), Just(words), prop::collection::vec(0.0f64..1.0, len), prop::collection::vec(any::<bool>(), len))
        })
        .prop_map(|(n, words, vals, keep)| {
            PositiveSymbol::new(
                n,
                words
                    .into_iter()
                    .zip(vals.into_iter().zip(keep))
                    .filter(|(w, (_, k))| w.len() == 1 || *k)
                    .map(|(w, (v, _))| (w.clone(), if w.len() == 1 { 0.1 + v } else { v })),
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn weights_match_factorization_oracle(f in symbol_strategy(), m in 1u32..=4) {
        let table = weight_table(&f, m, 5).unwrap();
        for w in enumerate_words(f.arity, 5).unwrap() {
            let want = brute(&f, &w, m as u64);
            let got = table.get(&w);
            prop_assert!((got - want).abs() <= 1e-13 * want.max(1.0), "{w:?}: {got} vs {want}");
            prop_assert!(got > 0.0 || want == 0.0);
        }
    }

    #[test]
    fn weights_convolve(f in symbol_strategy(), m1 in 1u32..=3, m2 in 1u32..=3) {
        let (a, b, ab) = (
            weight_table(&f, m1, 5).unwrap(),
            weight_table(&f, m2, 5).unwrap(),
            weight_table(&f, m1 + m2, 5).unwrap(),
        );
        for w in enumerate_words(f.arity, 5).unwrap() {
            let conv: f64 = (0..=w.len()).map(|c| {
                let (x, y) = w.split_at(c);
                a.get(&x) * b.get(&y)
            }).sum();
            prop_assert!((ab.get(&w) - conv).abs() <= 1e-12 * conv);
        }
    }

    #[test]
    fn rational_and_float_tables_agree(num in prop::collection::vec(1i64..20, 6), m in 1u32..=3) {
        let words: Vec<Word> = enumerate_words(2, 2).unwrap().into_iter().skip(1).collect();
        let coeffs: BTreeMap<Word, BigRational> = words
            .iter()
            .zip(&num)
            .map(|(w, &p)| (w.clone(), BigRational::new(BigInt::from(p), BigInt::from(8))))
            .collect();
        let f = PositiveSymbol::new(2, coeffs.iter().map(|(w, r)| (w.clone(), r.to_f64().unwrap())));
        let exact = weight_table_rational(2, &coeffs, m, 5).unwrap();
        let float = weight_table(&f, m, 5).unwrap();
        for (w, v) in &exact {
            let v = v.to_f64().unwrap();
            prop_assert!((float.get(w) - v).abs() <= float.rel_error_bound * v.max(1.0), "{w:?}");
        }
    }

    #[test]
    fn word_index_is_a_bijection(n in 1usize..=3, len in 0usize..=4) {
        let words = enumerate_words(n, len).unwrap();
        prop_assert_eq!(Some(words.len()), word_count(n, len));
        for (i, w) in words.iter().enumerate() {
            prop_assert_eq!(word_index(n, w), i);
            prop_assert!(w.in_range(n));
        }
    }

    #[test]
    fn scaling_composes(f in symbol_strategy(), r in 0.05f64..1.0, s in 0.05f64..1.0) {
        let a = f.scale_action(r).scale_action(s);
        let b = f.scale_action(r * s);
        for (w, c) in a.terms() {
            prop_assert!((c - b.coeff(w)).abs() <= 1e-15 * c.max(1e-300) + 1e-300);
        }
        prop_assert!(f.scale_action(r).is_valid());
    }
}

#[test]
fn linear_symbol_closed_form_in_exact_arithmetic() {
    for n in 1..=3usize {
        let coeffs: BTreeMap<Word, BigRational> =
            (1..=n as u32).map(|j| (Word::letter(j), BigRational::from_integer(1.into()))).collect();
        for m in 1..=4u32 {
            for (w, v) in weight_table_rational(n, &coeffs, m, 6).unwrap() {
                let c = binomial_u128(w.len() as u64 + m as u64 - 1, m as u64 - 1).unwrap();
                assert_eq!(v, BigRational::from_integer(BigInt::from(c)), "{w:?}");
            }
        }
    }
}

#[test]
fn single_variable_m2_degree3_is_four() {
    let t = weight_table(&PositiveSymbol::single(), 2, 3).unwrap();
    assert_eq!(t.get(&Word(vec![1, 1, 1])), 4.0);
    assert_eq!(t.get(&Word::empty()), 1.0);
}

#[test]
fn zero_linear_coefficient_rejected() {
    let f = PositiveSymbol::new(2, [(Word::letter(1), 1.0), (Word(vec![1, 2]), 0.5)]);
    let v = f.validate();
    assert!(v.iter().any(|x| x.word == Some(Word::letter(2))));
    assert!(weight_table(&f, 1, 2).is_err());
    let rational: BTreeMap<Word, BigRational> = BTreeMap::new();
    assert!(weight_table_rational(1, &rational, 1, 2).unwrap().values().skip(1).all(|v| v.is_zero()));
}
