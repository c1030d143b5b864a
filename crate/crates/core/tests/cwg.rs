mod common;

use atm::cwg::*;
use atm::measures::{uniform_measure, Valuation};
use atm::mobius::{mobius_polynomial, smallest_root_p0};
use atm::stats::{ks_lattice, sample_paths};
use atm::Error;
use common::*;
use num_rational::BigRational;
use num_traits::ToPrimitive;

fn uniform_cwg(g: &atm::garside::GarsideStructure) -> Cwg {
    build_cwg(g, &Valuation::uniform(g.presentation())).unwrap()
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

#[test]
fn build_examples() {
    let c = uniform_cwg(&braid(3));
    assert_eq!(c.len(), 9);
    let f = uniform_cwg(&free(2));
    assert_eq!(f.len(), 2);
    for i in 0..2 {
        for j in 0..2 {
            assert_eq!(f.entry(i, j), 1.0);
        }
    }
    assert!(matches!(build_cwg(&free(1), &Valuation::uniform(free(1).presentation())), Err(Error::TooFewGenerators)));
    let r = garside(&atm::presentation::heap(2, &[(0, 1)]).unwrap());
    assert!(matches!(build_cwg(&r, &Valuation::uniform(r.presentation())), Err(Error::Reducible(_))));
}

#[test]
fn weighted_edges_follow_valuation() {
    let g = heap3();
    let w = Valuation::new(g.presentation(), vec![q(1, 2), q(2, 3), q(3, 1)]).unwrap();
    let c = build_cwg(&g, &w).unwrap();
    let ab = simple(&g, "ab");
    let (s1, s2) = (c.state_of(ab, 1).unwrap(), c.state_of(ab, 2).unwrap());
    assert_eq!(c.entry(s1, s2), 1.0);
    assert_eq!(c.w_minus()[s1], 1.0 / 3.0);
    assert_eq!(c.w_plus()[s2], 1.0);
    assert_eq!(c.w_plus()[s1], 0.0);
    let cs = c.state_of(simple(&g, "c"), 1).unwrap();
    assert_eq!(c.entry(s2, cs), 3.0);
}

#[test]
fn partition_functions_count_elements() {
    for g in [braid(3), a2(), heap3(), dual3()] {
        let c = uniform_cwg(&g);
        let o = enumerate_classes(g.presentation(), 6);
        let z = c.partition_functions_exact(6).unwrap();
        for k in 1..=6 {
            assert_eq!(z[k], BigRational::from_integer(o.count(k).into()));
        }
    }
    let f = uniform_cwg(&free(2));
    assert_eq!(f.partition_function(10), 1024.0);
}

#[test]
fn partition_function_asymptotics() {
    for g in [braid(3), a2(), heap3()] {
        let c = uniform_cwg(&g);
        let pd = perron(&c, PerronOptions::default()).unwrap();
        let wr: f64 = c.w_minus().iter().zip(&pd.right).map(|(a, b)| a * b).sum();
        let lw: f64 = pd.left.iter().zip(c.w_plus()).map(|(a, b)| a * b).sum();
        let k = 50;
        let approx = wr * lw * pd.lambda.powi(k as i32 - 1);
        let z = c.partition_function(k);
        assert!((z / approx - 1.0).abs() < 0.01, "{z} vs {approx}");
        let zf = c.log_partition_function(k).exp();
        assert!((zf / z - 1.0).abs() < 1e-12);
    }
}

#[test]
fn perron_free2() {
    let pd = perron(&uniform_cwg(&free(2)), PerronOptions::default()).unwrap();
    assert!((pd.lambda - 2.0).abs() < 1e-12);
    assert!((pd.left[0] - pd.left[1]).abs() < 1e-12);
    assert!((pd.right[0] - pd.right[1]).abs() < 1e-12);
    assert!((pd.pi[0] - 0.5).abs() < 1e-12);
    assert_eq!(pd.case, SpectralCase::A);
}

#[test]
fn perron_braid3_is_case_b_with_delta_block() {
    let g = braid(3);
    let c = uniform_cwg(&g);
    let pd = perron(&c, PerronOptions::default()).unwrap();
    let p0 = smallest_root_p0(&mobius_polynomial(&g)).unwrap();
    assert!((pd.lambda - 1.0 / p0).abs() < 1e-10);
    assert_eq!(pd.case.block_split(), 3);
    let d = g.delta().unwrap();
    if let SpectralCase::B { others, .. } = &pd.case {
        let mut delta_states: Vec<usize> = (1..=3).map(|i| c.state_of(d, i).unwrap()).collect();
        delta_states.sort();
        let mut o = others.clone();
        o.sort();
        assert_eq!(o, delta_states);
    } else {
        panic!("expected case B");
    }
    for i in 1..=3 {
        assert_eq!(pd.pi[c.state_of(d, i).unwrap()], 0.0);
    }
}

#[test]
fn case_b_block_is_delta_on_spherical_monoids() {
    for g in [braid(3), braid(4), dihedral(5), dual3()] {
        let c = uniform_cwg(&g);
        let pd = perron(&c, PerronOptions::default()).unwrap();
        assert_eq!(pd.case.block_split(), g.simple_len(g.delta().unwrap()));
    }
}

#[test]
fn perron_a2_is_primitive() {
    let c = uniform_cwg(&a2());
    let pd = perron(&c, PerronOptions::default()).unwrap();
    assert_eq!(pd.case, SpectralCase::A);
    assert!(pd.lambda > 1.0);
}

#[test]
fn spectral_residuals_and_convergence() {
    for g in [braid(3), braid(4), a2(), heap3(), dual3(), dihedral(4)] {
        let c = uniform_cwg(&g);
        let pd = perron(&c, PerronOptions::default()).unwrap();
        assert!(pd.residual_left <= 1e-10 && pd.residual_right <= 1e-10);
        let lr: f64 = pd.left.iter().zip(&pd.right).map(|(a, b)| a * b).sum();
        assert!((lr - 1.0).abs() < 1e-12);
        let mut v = c.w_plus().to_vec();
        for _ in 0..200 {
            v = c.apply(&v);
            let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= n);
        }
        let rn: f64 = pd.right.iter().map(|x| x * x).sum::<f64>().sqrt();
        let cos: f64 = v.iter().zip(&pd.right).map(|(a, b)| a * b).sum::<f64>() / rn;
        assert!(1.0 - cos <= 1e-8);
    }
}

#[test]
fn perron_rejects_periodic_and_degenerate_dominant_classes() {
    let cycle = Cwg::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]], vec![1.0, 0.0], vec![1.0, 1.0]).unwrap();
    assert!(matches!(perron(&cycle, PerronOptions::default()), Err(Error::Structural(_))));
    let two = Cwg::from_dense(
        &[
            vec![1.0, 1.0, 0.0, 0.0],
            vec![1.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 1.0],
            vec![0.0, 0.0, 1.0, 1.0],
        ],
        vec![1.0; 4],
        vec![1.0; 4],
    )
    .unwrap();
    assert!(perron(&two, PerronOptions::default()).is_err());
    assert!(Cwg::from_dense(&[vec![-1.0]], vec![1.0], vec![1.0]).is_err());
}

#[test]
fn limit_chain_examples() {
    let f = uniform_cwg(&free(2));
    let lc = limit_chain(&perron(&f, PerronOptions::default()).unwrap(), &f);
    for i in 0..2 {
        assert!((lc.h[i] - 0.5).abs() < 1e-12);
        for j in 0..2 {
            assert!((lc.transition(i, j) - 0.5).abs() < 1e-12);
        }
    }
    for g in [braid(3), a2(), braid(4)] {
        let c = uniform_cwg(&g);
        let pd = perron(&c, PerronOptions::default()).unwrap();
        let lc = limit_chain(&pd, &c);
        assert!(lc.row_sum_error() <= 1e-12);
        assert!(lc.stationarity_error(&pd.pi) <= 1e-12);
        assert!((lc.h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // States never visited under h have r = 0.
        for i in 0..c.len() {
            if lc.unreachable[i] {
                assert_eq!(lc.h[i], 0.0);
            }
        }
    }
}

#[test]
fn survival_process_matches_limit_chain() {
    let qm = vec![vec![0.2, 0.3, 0.1], vec![0.4, 0.1, 0.3], vec![0.1, 0.5, 0.2]];
    let c = Cwg::from_dense(&qm, vec![0.5, 0.3, 0.2], vec![1.0; 3]).unwrap();
    let pd = perron(&c, PerronOptions::default()).unwrap();
    let lc = limit_chain(&pd, &c);
    // Survival probabilities s_n = Q^n 1, conditioned transition
    // Q_ij s_n(j) / Σ_l Q_il s_n(l) for large n.
    let mut s = vec![1.0; 3];
    for _ in 0..2000 {
        let next: Vec<f64> = (0..3).map(|i| (0..3).map(|j| qm[i][j] * s[j]).sum()).collect();
        let m = next.iter().cloned().fold(0.0, f64::max);
        s = next.iter().map(|x| x / m).collect();
    }
    for i in 0..3 {
        let z: f64 = (0..3).map(|l| qm[i][l] * s[l]).sum();
        for j in 0..3 {
            assert!((lc.transition(i, j) - qm[i][j] * s[j] / z).abs() < 1e-12);
        }
    }
    // Initial law of the survival process: a(i) s_n(i) normalised.
    let a = [0.5, 0.3, 0.2];
    let z: f64 = (0..3).map(|i| a[i] * s[i]).sum();
    for i in 0..3 {
        assert!((lc.h[i] - a[i] * s[i] / z).abs() < 1e-12);
    }
}

#[test]
fn window_distributions() {
    let f = uniform_cwg(&free(2));
    let pd = perron(&f, PerronOptions::default()).unwrap();
    let lc = limit_chain(&pd, &f);
    let w = window_distribution(&f, 30, 0).unwrap();
    let tv: f64 = w.iter().map(|(p, m)| (m - lc.h[p[0]]).abs()).sum::<f64>() / 2.0;
    assert!(tv <= 1e-6);
    for (g, k) in [(braid(3), 40), (a2(), 40)] {
        let c = uniform_cwg(&g);
        let pd = perron(&c, PerronOptions::default()).unwrap();
        let lc = limit_chain(&pd, &c);
        let w = window_distribution(&c, k, 1).unwrap();
        let total: f64 = w.iter().map(|e| e.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let mut err: f64 = 0.0;
        for (p, m) in &w {
            err = err.max((m - lc.h[p[0]] * lc.transition(p[0], p[1])).abs());
        }
        assert!(err <= 1e-4, "{err}");
    }
    let gap = Cwg::from_dense(
        &[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 1.0]],
        vec![1.0, 0.0, 0.0],
        vec![0.0, 0.0, 1.0],
    )
    .unwrap();
    assert!(window_distribution(&gap, 1, 0).is_err());
    assert!(window_distribution(&gap, 3, 1).is_ok());
}

#[test]
fn asymptotic_means() {
    let g = braid(3);
    let c = uniform_cwg(&g);
    let pd = perron(&c, PerronOptions::default()).unwrap();
    assert!((asymptotic_mean(&pd, &vec![1.0; c.len()]) - 1.0).abs() < 1e-12);
    let (bc, _) = uniform_measure(&g).unwrap();
    let gamma = asymptotic_mean(&pd, &c.block_starts().unwrap());
    assert!((gamma - 1.0 / bc.kappa).abs() < 1e-10);
    let f = uniform_cwg(&free(2));
    let pf = perron(&f, PerronOptions::default()).unwrap();
    assert!((asymptotic_mean(&pf, &[1.0, 0.0]) - 0.5).abs() < 1e-12);
}

#[test]
fn asymptotic_variances() {
    let g = braid(3);
    let c = uniform_cwg(&g);
    let pd = perron(&c, PerronOptions::default()).unwrap();
    let v = asymptotic_variance(&c, &pd, &vec![2.5; c.len()]).unwrap();
    assert!(v.degenerate);
    assert_eq!(v.sigma2, 0.0);

    let f = uniform_cwg(&free(2));
    let pf = perron(&f, PerronOptions::default()).unwrap();
    let v = asymptotic_variance(&f, &pf, &[1.0, 0.0]).unwrap();
    assert!((v.sigma2 - 0.25).abs() < 1e-9);
    assert!(v.relative_gap <= 1e-6);

    let height = c.lift(&g, &vec![1.0; g.len()]).unwrap();
    let v = asymptotic_variance(&c, &pd, &height).unwrap();
    assert!(!v.degenerate && v.sigma2 > 0.0);
    assert!((v.sigma2 - 1.0 / (5.0 * 5f64.sqrt())).abs() < 1e-9);
    assert!(v.relative_gap <= 1e-6);

    // Frozen values from the dual-route computation.
    let a = a2();
    let ca = uniform_cwg(&a);
    let pa = perron(&ca, PerronOptions::default()).unwrap();
    let va = asymptotic_variance(&ca, &pa, &ca.lift(&a, &vec![1.0; a.len()]).unwrap()).unwrap();
    assert!((va.sigma2 - 0.13904401420357654).abs() < 1e-9);
    assert!(va.relative_gap <= 1e-6);
}

#[test]
fn exact_and_float_paths_agree() {
    let m = vec![
        vec![q(1, 2), q(1, 3), q(1, 1)],
        vec![q(1, 1), q(1, 4), q(2, 3)],
        vec![q(1, 5), q(1, 1), q(1, 2)],
    ];
    let c = Cwg::from_dense_exact(&m, vec![q(1, 1), q(1, 2), q(0, 1)], vec![q(1, 1); 3]).unwrap();
    let z = c.partition_function_exact(40).unwrap().to_f64().unwrap();
    assert!((c.log_partition_function(40).exp() / z - 1.0).abs() < 1e-12);
    let dump = c.dump_matrix();
    assert!(dump.lines().next().unwrap().starts_with("0 0 1/2"));
    assert_eq!(dump.lines().count(), 9);
}

#[test]
fn clt_for_additive_functional_on_small_cwg() {
    let m = vec![
        vec![q(1, 2), q(1, 3), q(1, 1)],
        vec![q(1, 1), q(1, 4), q(2, 3)],
        vec![q(1, 5), q(1, 1), q(1, 2)],
    ];
    let c = Cwg::from_dense_exact(&m, vec![q(1, 1); 3], vec![q(1, 1); 3]).unwrap();
    let pd = perron(&c, PerronOptions::default()).unwrap();
    let f = [1.0, 0.0, 0.0];
    let v = asymptotic_variance(&c, &pd, &f).unwrap();
    let k = 300;
    let paths = sample_paths(&c, k, 100_000, 21).unwrap();
    let sums: Vec<i64> = paths.iter().map(|p| p.iter().filter(|&&s| s == 0).count() as i64).collect();
    let n = sums.len() as f64;
    let z: Vec<f64> = sums.iter().map(|&s| (s as f64 - k as f64 * v.gamma) / (k as f64).sqrt()).collect();
    let mean = z.iter().sum::<f64>() / n;
    let var = z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((var / v.sigma2 - 1.0).abs() < 0.10, "{var} vs {}", v.sigma2);
    let ks = ks_lattice(&sums, k, v.gamma, v.sigma2);
    assert!(ks <= 0.02, "{ks}");
}
