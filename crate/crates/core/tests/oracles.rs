mod common;

use atm::measures::uniform_measure;
use atm::mobius::{mobius_polynomial, series_inverse};
use atm::presentation;
use common::*;
use num_rational::BigRational;
use num_traits::ToPrimitive;

#[test]
fn free2_class_counts_are_powers_of_two() {
    let o = enumerate_classes(&presentation::free(2).unwrap(), 3);
    assert_eq!((0..=3).map(|k| o.count(k)).collect::<Vec<_>>(), vec![1, 2, 4, 8]);
}

#[test]
fn braid3_class_counts_match_series_inversion() {
    let g = braid(3);
    let o = enumerate_classes(g.presentation(), 6);
    let mu = mobius_polynomial(&g);
    assert_eq!(mu.format(), "1 - 2T + T^3");
    let series = series_inverse(&mu.as_rational(), 6).unwrap();
    for k in 0..=6 {
        assert_eq!(BigRational::from_integer(o.count(k).into()), series[k], "k = {k}");
    }
    assert_eq!((0..=4).map(|k| o.count(k)).collect::<Vec<_>>(), vec![1, 2, 4, 7, 12]);
}

#[test]
fn a2_class_counts_up_to_four() {
    let g = a2();
    let o = enumerate_classes(g.presentation(), 4);
    let series = series_inverse(&mobius_polynomial(&g).as_rational(), 4).unwrap();
    for k in 0..=4 {
        assert_eq!(BigRational::from_integer(o.count(k).into()), series[k]);
    }
}

#[test]
fn oracle_classes_of_known_words() {
    let g = braid(3);
    let o = enumerate_classes(g.presentation(), 4);
    assert_eq!(o.members(&word(&g, "aba")), &[word(&g, "aba"), word(&g, "bab")]);
    assert!(o.left_divides(&word(&g, "b"), &word(&g, "aba")));
    assert!(!o.left_divides(&word(&g, "b"), &word(&g, "ab")));
    assert!(o.right_divides(&word(&g, "a"), &word(&g, "aba")));
}

#[test]
fn brute_arrow_unit_conventions() {
    for g in [braid(3), a2(), dual3()] {
        let o = enumerate_classes(g.presentation(), 2 * g.max_simple_len());
        let s = g.simples().to_vec();
        for x in 0..g.len() {
            assert!(brute_arrow(&o, &s, g.word(x), &[]));
            if x != 0 {
                assert!(!brute_arrow(&o, &s, &[], g.word(x)));
            }
        }
    }
}

#[test]
fn brute_arrow_matches_library_on_all_pairs() {
    for g in [braid(3), a2(), dual3()] {
        let o = enumerate_classes(g.presentation(), 2 * g.max_simple_len());
        let s = g.simples().to_vec();
        for x in 0..g.len() {
            for y in 0..g.len() {
                assert_eq!(
                    g.arrow(x, y),
                    brute_arrow(&o, &s, g.word(x), g.word(y)),
                    "{} -> {}",
                    g.format_simple(x),
                    g.format_simple(y)
                );
            }
        }
    }
}

#[test]
fn brute_measure_of_unit_and_generators() {
    let g = free(2);
    let (bc, p0) = uniform_measure(&g).unwrap();
    assert!((p0 - 0.5).abs() < 1e-14);
    let o = enumerate_classes(g.presentation(), 2);
    assert!((brute_measure_check(&g, &bc, &o, &[], 1) - 1.0).abs() < 1e-12);
    for s in ["a", "b"] {
        let m = brute_measure_check(&g, &bc, &o, &word(&g, s), 1);
        assert!((m - 0.5).abs() < 1e-12);
    }
}

#[test]
fn brute_measure_on_braid3_height_two() {
    let g = braid(3);
    let (bc, p0) = uniform_measure(&g).unwrap();
    let o = enumerate_classes(g.presentation(), 6);
    let mut seen = 0;
    for k in 2..=4 {
        for w in &o.classes[k] {
            let w = &w[0];
            if g.normal_form(w).height() != 2 {
                continue;
            }
            seen += 1;
            let m = brute_measure_check(&g, &bc, &o, w, 2);
            let target = p0.powi(k as i32);
            assert!((m - target).abs() < 1e-9, "{w:?}: {m} vs {target}");
        }
    }
    assert!(seen > 5);
    assert!(p0.to_f64().unwrap() > 0.6);
}
