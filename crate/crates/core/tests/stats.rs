mod common;

use std::collections::HashMap;

use atm::cwg::build_cwg;
use atm::garside::Element;
use atm::measures::{uniform_measure, Valuation};
use atm::presentation::{param_classes, Gen};
use atm::stats::*;
use common::*;
use num_rational::BigRational;
use num_traits::One;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn histogram(xs: &[Element]) -> HashMap<Element, usize> {
    let mut h = HashMap::new();
    for x in xs {
        *h.entry(x.clone()).or_insert(0) += 1;
    }
    h
}

/// Upper tail probability of Pearson's statistic against `law`.
fn chi_square_p(counts: &HashMap<Element, usize>, law: &[(Element, f64)], n: usize) -> f64 {
    let stat: f64 = law
        .iter()
        .map(|(x, p)| {
            let e = p * n as f64;
            let o = *counts.get(x).unwrap_or(&0) as f64;
            (o - e).powi(2) / e
        })
        .sum();
    let dof = (law.len() - 1) as f64;
    1.0 - ChiSquared::new(dof).unwrap().cdf(stat)
}

#[test]
fn free2_uniform_on_words_of_length_five() {
    let g = free(2);
    let c = build_cwg(&g, &Valuation::uniform(g.presentation())).unwrap();
    let xs = sample_exact(&c, 5, 100_000, 3).unwrap();
    let counts = histogram(&xs);
    assert_eq!(counts.len(), 32);
    let law = exact_law(&g, &Valuation::uniform(g.presentation()), 5).unwrap();
    assert_eq!(law.len(), 32);
    assert!(law.iter().all(|(_, p)| (p - 1.0 / 32.0).abs() < 1e-15));
    assert!(xs.iter().all(|x| g.length(x) == 5));
    assert!(chi_square_p(&counts, &law, xs.len()) > 0.001);
}

#[test]
fn braid3_length_four_matches_enumeration() {
    let g = braid(3);
    let w = Valuation::uniform(g.presentation());
    let o = enumerate_classes(g.presentation(), 4);
    let c = build_cwg(&g, &w).unwrap();
    let n = 100_000;
    let counts = histogram(&sample_exact(&c, 4, n, 11).unwrap());
    let classes = &o.classes[4];
    assert_eq!(counts.len(), classes.len());
    let tv: f64 = classes
        .iter()
        .map(|members| {
            let x = g.normal_form(&members[0]);
            let f = *counts.get(&x).unwrap_or(&0) as f64 / n as f64;
            (f - 1.0 / classes.len() as f64).abs()
        })
        .sum::<f64>()
        / 2.0;
    assert!(tv <= 0.01, "tv = {tv}");
}

#[test]
fn weighted_free2_letter_frequencies() {
    let g = free(2);
    let w = Valuation::new(g.presentation(), vec![q(1, 1), q(2, 1)]).unwrap();
    let c = build_cwg(&g, &w).unwrap();
    let xs = sample_exact(&c, 10, 20_000, 5).unwrap();
    let a = word(&g, "a")[0];
    let total = (xs.len() * 10) as f64;
    let count_a: usize = xs
        .iter()
        .map(|x| g.element_word(x).iter().filter(|&&s| s == a).count())
        .sum();
    let fa = count_a as f64 / total;
    assert!((fa - 1.0 / 3.0).abs() < 0.005, "{fa}");
}

#[test]
fn height_examples() {
    let g = braid(3);
    let h = height_statistic(&g);
    let d2 = g.normal_form(&word(&g, "abaaba"));
    assert_eq!(h.eval(&d2), 2.0);
    let a2 = a2();
    assert_eq!(height_statistic(&a2).eval(&a2.normal_form(&word(&a2, "abc"))), 2.0);
    let f = free(2);
    let x = f.normal_form(&word(&f, "abbab"));
    assert_eq!(height_statistic(&f).eval(&x), 5.0);
    assert_eq!(h.eval(&Element::unit()), 0.0);
}

#[test]
fn count_examples() {
    let g = braid(3);
    let a = word(&g, "a")[0];
    let ca = generator_count_statistic(&g, a);
    assert_eq!(ca.name, "count:a");
    assert_eq!(ca.eval(&g.normal_form(&word(&g, "aba"))), 2.0);
    assert_eq!(ca.eval(&g.normal_form(&word(&g, "bab"))), 2.0);
    // Additivity on products where letter counts are class invariants.
    let h = heap3();
    let cc = generator_count_statistic(&h, word(&h, "c")[0]);
    let x = h.normal_form(&word(&h, "acbc"));
    let y = h.normal_form(&word(&h, "cbac"));
    assert_eq!(cc.eval(&h.multiply(&x, &y)), cc.eval(&x) + cc.eval(&y));
    assert!(matches!(Statistic::parse(&g, "count:z"), Err(atm::Error::Word { .. })));
    assert!(Statistic::parse(&g, "width").is_err());
    assert_eq!(Statistic::parse(&g, "height").unwrap().name, "height");
}

#[test]
fn statistics_agree_with_word_level_counts() {
    for g in [braid(3), a2(), heap3(), dual3()] {
        let o = enumerate_classes(g.presentation(), 6);
        let h = height_statistic(&g);
        for k in 0..=6 {
            for members in &o.classes[k] {
                let x = g.normal_form(&members[0]);
                let classes = param_classes(g.presentation()).unwrap();
                let count = |m: &[Gen], s: Gen| m.iter().filter(|&&t| t == s).count();
                for class in &classes.classes {
                    let total: f64 = class.iter().map(|&s| generator_count_statistic(&g, s).eval(&x)).sum();
                    let direct: usize = class.iter().map(|&s| count(&members[0], s)).sum();
                    assert_eq!(total, direct as f64);
                    for m in members {
                        assert_eq!(class.iter().map(|&s| count(m, s)).sum::<usize>(), direct);
                    }
                    if let [s] = class.as_slice() {
                        assert!(members.iter().all(|m| count(m, *s) as f64 == generator_count_statistic(&g, *s).eval(&x)));
                    }
                }
                // Height is the least number of simples whose product is the class.
                let least = (0..=k)
                    .find(|&j| {
                        members.iter().any(|m| splits_into_simples(&g, m, j))
                    })
                    .unwrap();
                assert_eq!(h.eval(&x), least as f64);
            }
        }
    }
}

fn splits_into_simples(g: &atm::garside::GarsideStructure, w: &[Gen], j: usize) -> bool {
    if w.is_empty() {
        return j == 0;
    }
    if j == 0 {
        return false;
    }
    (1..=w.len()).any(|i| {
        matches!(g.simple_index(&w[..i]), Ok(Some(_))) && splits_into_simples(g, &w[i..], j - 1)
    })
}

#[test]
fn path_probabilities_are_exact() {
    let g = braid(3);
    let w = Valuation::uniform(g.presentation());
    let c = build_cwg(&g, &w).unwrap();
    let k = 5;
    let sampler = ExactSampler::new(&c, k).unwrap();
    assert!(sampler.is_exact());
    let z = c.partition_function_exact(k).unwrap();
    let mut total = BigRational::from_integer(0.into());
    for x in g.elements_up_to(k).into_iter().filter(|x| g.length(x) == k) {
        let mut path = Vec::new();
        for b in x.blocks() {
            for i in 1..=g.simple_len(b) {
                path.push(c.state_of(b, i).unwrap());
            }
        }
        let p = sampler.path_probability(&path).unwrap();
        assert_eq!(p, w.eval_element(&g, &x) / &z);
        assert_eq!(sampler.path_to_element(&path).unwrap(), x);
        total += p;
    }
    assert!(total.is_one());
}

#[test]
fn two_block_prefix_converges_to_boundary_chain() {
    let g = braid(3);
    let (bc, _) = uniform_measure(&g).unwrap();
    let c = build_cwg(&g, &Valuation::uniform(g.presentation())).unwrap();
    let n = 100_000;
    let xs = sample_exact(&c, 200, n, 8).unwrap();
    let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
    for x in &xs {
        let s = x.normal_sequence();
        *counts.entry((s[0], s[1])).or_insert(0) += 1;
    }
    let mut tv = 0.0;
    for a in 1..g.len() {
        for b in 1..g.len() {
            let p = bc.h[a] * bc.transition(a, b);
            let f = *counts.get(&(a, b)).unwrap_or(&0) as f64 / n as f64;
            tv += (p - f).abs();
        }
    }
    assert!(tv / 2.0 <= 0.02, "tv = {}", tv / 2.0);
}

#[test]
fn free2_height_is_degenerate() {
    let g = free(2);
    let exp = concentration_experiment(&g, &Valuation::uniform(g.presentation()), &height_statistic(&g), 40, 500, 1)
        .unwrap();
    let r = &exp.report;
    assert!(r.degenerate);
    assert_eq!(r.target_s2, 0.0);
    assert_eq!(r.empirical_mean, 1.0);
    assert_eq!(r.empirical_variance, 0.0);
    assert!(r.caveats.iter().any(|c| c.contains("proportional")));
    let d = delta_method_check(&exp);
    assert!(d.degenerate);
    assert_eq!(d.empirical_mean, 1.0);
    assert_eq!(d.target_variance, 0.0);
}

#[test]
fn braid3_concentration_and_delta_method() {
    let g = braid(3);
    let exp = concentration_experiment(&g, &Valuation::uniform(g.presentation()), &height_statistic(&g), 300, 20_000, 17)
        .unwrap();
    let r = &exp.report;
    assert!(r.exact_sampling);
    assert!((r.target_gamma - 1.0 / 1.3819660112501055).abs() < 1e-9);
    assert!((r.empirical_mean - r.target_gamma).abs() < 0.005);
    assert!((r.empirical_variance / r.target_s2 - 1.0).abs() < 0.1);
    assert!(r.caveats.iter().any(|c| c.contains("two generators")));
    let d = delta_method_check(&exp);
    assert!((d.target_mean - 1.3819660112501055).abs() < 1e-9);
    assert!((d.empirical_variance / d.target_variance - 1.0).abs() < 0.15, "{d:?}");
    assert!((d.empirical_variance / d.alternative_target - 1.0).abs() > 0.5);
}

#[test]
fn heap3_count_statistic_experiment() {
    let g = heap3();
    let c = generator_count_statistic(&g, word(&g, "c")[0]);
    let exp = concentration_experiment(&g, &Valuation::uniform(g.presentation()), &c, 200, 10_000, 2).unwrap();
    let r = &exp.report;
    assert!(!r.degenerate);
    assert!(r.s2_relative_gap <= 1e-6);
    assert!((r.empirical_mean - r.target_gamma).abs() < 0.01);
    assert!((r.empirical_variance / r.target_s2 - 1.0).abs() < 0.1);
}

#[test]
fn reproducible_across_thread_counts() {
    let g = a2();
    let c = build_cwg(&g, &Valuation::uniform(g.presentation())).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sample_paths(&c, 60, 300, 99).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_ne!(one, sample_paths(&c, 60, 300, 100).unwrap());
    let exp = |seed| {
        concentration_experiment(&g, &Valuation::uniform(g.presentation()), &height_statistic(&g), 30, 200, seed)
            .unwrap()
            .csv()
    };
    assert_eq!(exp(4), exp(4));
}

#[test]
fn ks_helpers() {
    assert!(ks_normal(&[], 1.0).is_nan());
    assert!(ks_normal(&[0.0], 0.0).is_nan());
    let v: Vec<f64> = (1..1000).map(|i| i as f64 / 1000.0).collect();
    let d = ks_normal(&v, 1.0);
    assert!((d - 0.5).abs() < 0.002);
    // F ≡ 0 against N(0, s²): the lattice CDF at ½ is Φ(½/s).
    let ints = vec![0i64; 50];
    let d = ks_lattice(&ints, 1, 0.0, 1.0);
    let phi = statrs::distribution::Normal::new(0.0, 1.0).unwrap().cdf(0.5);
    assert!((d - (1.0 - phi)).abs() < 1e-12);
}
