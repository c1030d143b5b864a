//! Exact sampling of μ_k, normal-additive statistics and Monte-Carlo checks
//! of concentration and of the central limit theorem.

use std::time::Instant;

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::cwg::{asymptotic_mean, asymptotic_variance, build_cwg, perron, Cwg, PerronOptions};
use crate::error::{Error, Result};
use crate::garside::{Element, GarsideStructure};
use crate::measures::{boundary_chain, normalize_to_mobius, ChainOptions, Valuation};
use crate::presentation::Gen;

/// Paths longer than this are sampled with renormalized floats.
pub const EXACT_SAMPLING_LIMIT: usize = 500;

/// Per-walker generator: ChaCha8 seeded by `seed`, stream = walker index.
pub fn walker_rng(seed: u64, walker: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(walker);
    rng
}

/// A normal-additive statistic given by its values on simples.
#[derive(Clone, Debug, Serialize)]
pub struct Statistic {
    pub name: String,
    pub values: Vec<f64>,
}

pub fn height_statistic(g: &GarsideStructure) -> Statistic {
    Statistic {
        name: "height".into(),
        values: (0..g.len()).map(|x| if x == 0 { 0.0 } else { 1.0 }).collect(),
    }
}

/// Occurrences of `sigma` in the canonical word of each simple.
pub fn generator_count_statistic(g: &GarsideStructure, sigma: Gen) -> Statistic {
    Statistic {
        name: format!("count:{}", g.presentation().symbol(sigma)),
        values: (0..g.len())
            .map(|x| g.word(x).iter().filter(|&&s| s == sigma).count() as f64)
            .collect(),
    }
}

impl Statistic {
    /// Parses `height` or `count:<σ>`.
    pub fn parse(g: &GarsideStructure, text: &str) -> Result<Statistic> {
        if text == "height" {
            return Ok(height_statistic(g));
        }
        if let Some(sym) = text.strip_prefix("count:") {
            let s = g
                .presentation()
                .index_of(sym)
                .ok_or_else(|| Error::Word {
                    word: sym.into(),
                    message: "unknown generator".into(),
                })?;
            return Ok(generator_count_statistic(g, s));
        }
        Err(Error::Family(format!("unknown statistic `{text}`")))
    }

    pub fn eval(&self, x: &Element) -> f64 {
        x.blocks().map(|b| self.values[b]).sum()
    }

    /// True when all values are integers.
    pub fn is_integer(&self) -> bool {
        self.values.iter().all(|v| v.fract() == 0.0)
    }

    /// The constant c with F(x) = c|x| on every simple, if any.
    pub fn length_ratio(&self, g: &GarsideStructure) -> Option<f64> {
        let c = self.values[1] / g.simple_len(1) as f64;
        (1..g.len())
            .all(|x| (self.values[x] - c * g.simple_len(x) as f64).abs() < 1e-12)
            .then_some(c)
    }
}

enum Weights {
    Exact {
        rows: Vec<Vec<(usize, BigUint)>>,
        back: Vec<Vec<BigUint>>,
        first: Vec<BigUint>,
    },
    Float {
        back: Vec<Vec<f64>>,
        first: Vec<f64>,
    },
}

/// Sampler of paths of length k under μ_k, by backward dynamic programming.
pub struct ExactSampler<'a> {
    cwg: &'a Cwg,
    k: usize,
    weights: Weights,
}

fn common_denominator<'b>(it: impl Iterator<Item = &'b BigRational>) -> num_bigint::BigInt {
    it.fold(num_bigint::BigInt::from(1), |acc, q| acc.lcm(q.denom()))
}

fn scaled(q: &BigRational, d: &num_bigint::BigInt) -> BigUint {
    let v = q * BigRational::from_integer(d.clone());
    v.to_integer().to_biguint().expect("non-negative weight")
}

fn draw_big<R: Rng + ?Sized>(items: &[(usize, BigUint)], rng: &mut R) -> usize {
    if items.len() == 1 {
        return items[0].0;
    }
    let total: BigUint = items.iter().map(|e| &e.1).sum();
    let mut u = rng.gen_biguint_below(&total);
    for (t, w) in items {
        if &u < w {
            return *t;
        }
        u -= w;
    }
    unreachable!("draw below the total")
}

fn draw_float<R: Rng + ?Sized>(items: &[(usize, f64)], rng: &mut R) -> usize {
    if items.len() == 1 {
        return items[0].0;
    }
    let total: f64 = items.iter().map(|e| e.1).sum();
    let mut u = rng.gen::<f64>() * total;
    for &(t, w) in items {
        if u < w {
            return t;
        }
        u -= w;
    }
    items.last().expect("non-empty").0
}

impl<'a> ExactSampler<'a> {
    pub fn new(cwg: &'a Cwg, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Structural("paths have at least one state".into()));
        }
        let weights = match (cwg.exact_rows(), cwg.exact_w_minus(), cwg.exact_w_plus()) {
            (Some(rows), Some(wm), Some(wp)) if k <= EXACT_SAMPLING_LIMIT => {
                let dm = common_denominator(rows.iter().flatten().map(|e| &e.1));
                let dl = common_denominator(wm.iter());
                let dp = common_denominator(wp.iter());
                let rows: Vec<Vec<(usize, BigUint)>> = rows
                    .iter()
                    .map(|r| r.iter().map(|(j, q)| (*j, scaled(q, &dm))).collect())
                    .collect();
                let mut back = vec![wp.iter().map(|q| scaled(q, &dp)).collect::<Vec<_>>()];
                for m in 1..k {
                    let prev = &back[m - 1];
                    let next = rows
                        .iter()
                        .map(|r| r.iter().map(|(j, w)| w * &prev[*j]).sum())
                        .collect();
                    back.push(next);
                }
                let first: Vec<BigUint> = wm
                    .iter()
                    .zip(&back[k - 1])
                    .map(|(q, b)| scaled(q, &dl) * b)
                    .collect();
                if first.iter().all(|w| w.is_zero()) {
                    return Err(Error::Structural(format!("Z({k}) = 0")));
                }
                Weights::Exact { rows, back, first }
            }
            _ => {
                let back = cwg.backward_vectors(k);
                let first: Vec<f64> = cwg
                    .w_minus()
                    .iter()
                    .zip(&back[k - 1])
                    .map(|(a, b)| a * b)
                    .collect();
                if first.iter().all(|&w| w == 0.0) {
                    return Err(Error::Structural(format!("Z({k}) = 0")));
                }
                Weights::Float { back, first }
            }
        };
        Ok(ExactSampler { cwg, k, weights })
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.weights, Weights::Exact { .. })
    }

    /// Probability that [`sample_path`](Self::sample_path) returns `path`,
    /// as the product of the exact per-step draw probabilities.
    pub fn path_probability(&self, path: &[usize]) -> Option<BigRational> {
        let Weights::Exact { rows, back, first } = &self.weights else {
            return None;
        };
        if path.len() != self.k {
            return Some(BigRational::zero());
        }
        let big = |u: &BigUint| BigRational::from_integer(u.clone().into());
        let total: BigUint = first.iter().sum();
        let mut p = big(&first[path[0]]) / big(&total);
        for (m, pair) in path.windows(2).enumerate() {
            let (s, t) = (pair[0], pair[1]);
            let b = &back[self.k - 2 - m];
            let denom: BigUint = rows[s].iter().map(|(j, w)| w * &b[*j]).sum();
            let Some(e) = rows[s].iter().find(|e| e.0 == t) else {
                return Some(BigRational::zero());
            };
            if denom.is_zero() {
                return Some(BigRational::zero());
            }
            p = p * big(&(&e.1 * &b[t])) / big(&denom);
        }
        Some(p)
    }

    pub fn sample_path<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let k = self.k;
        let mut path = Vec::with_capacity(k);
        match &self.weights {
            Weights::Exact { rows, back, first } => {
                let init: Vec<(usize, BigUint)> = first
                    .iter()
                    .enumerate()
                    .filter(|e| !e.1.is_zero())
                    .map(|(i, w)| (i, w.clone()))
                    .collect();
                let mut s = draw_big(&init, rng);
                path.push(s);
                for m in 1..k {
                    let b = &back[k - 1 - m];
                    let cand: Vec<(usize, BigUint)> = rows[s]
                        .iter()
                        .filter(|e| !b[e.0].is_zero())
                        .map(|(t, w)| (*t, w * &b[*t]))
                        .collect();
                    s = draw_big(&cand, rng);
                    path.push(s);
                }
            }
            Weights::Float { back, first } => {
                let init: Vec<(usize, f64)> = first
                    .iter()
                    .copied()
                    .enumerate()
                    .filter(|e| e.1 > 0.0)
                    .collect();
                let mut s = draw_float(&init, rng);
                path.push(s);
                for m in 1..k {
                    let b = &back[k - 1 - m];
                    let cand: Vec<(usize, f64)> = self.cwg.rows()[s]
                        .iter()
                        .filter(|e| b[e.0] > 0.0)
                        .map(|&(t, w)| (t, w * b[t]))
                        .collect();
                    s = draw_float(&cand, rng);
                    path.push(s);
                }
            }
        }
        path
    }

    /// Cuts a monoid path at its block starts.
    pub fn path_to_element(&self, path: &[usize]) -> Result<Element> {
        let labels = self
            .cwg
            .labels()
            .ok_or_else(|| Error::Structural("not a monoid CWG".into()))?;
        let blocks: Vec<usize> = path
            .iter()
            .map(|&s| labels[s])
            .filter(|l| l.1 == 1)
            .map(|l| l.0)
            .collect();
        Ok(Element::from_normal(&blocks))
    }
}

/// `count` independent paths of length `k`; walker i uses stream i.
pub fn sample_paths(c: &Cwg, k: usize, count: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let sampler = ExactSampler::new(c, k)?;
    Ok((0..count as u64)
        .into_par_iter()
        .map(|i| sampler.sample_path(&mut walker_rng(seed, i)))
        .collect())
}

/// `count` elements of length `k` drawn from μ_k.
pub fn sample_exact(c: &Cwg, k: usize, count: usize, seed: u64) -> Result<Vec<Element>> {
    let sampler = ExactSampler::new(c, k)?;
    (0..count as u64)
        .into_par_iter()
        .map(|i| sampler.path_to_element(&sampler.sample_path(&mut walker_rng(seed, i))))
        .collect()
}

/// sup |F_n − Φ(·/σ)| for a continuous target.
pub fn ks_normal(values: &[f64], sigma: f64) -> f64 {
    if sigma <= 0.0 || values.is_empty() {
        return f64::NAN;
    }
    let normal = Normal::new(0.0, sigma).expect("positive sigma");
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j < v.len() && v[j] == v[i] {
            j += 1;
        }
        let cdf = normal.cdf(v[i]);
        d = d.max((cdf - i as f64 / n).abs()).max((j as f64 / n - cdf).abs());
        i = j;
    }
    d
}

/// KS distance for an integer statistic F against N(kγ, ks²), with the
/// normal CDF read at half-integers: max over m of
/// |P̂(F ≤ m) − Φ((m + ½ − kγ)/(s√k))|.
pub fn ks_lattice(values: &[i64], k: usize, gamma: f64, s2: f64) -> f64 {
    if s2 <= 0.0 || values.is_empty() {
        return f64::NAN;
    }
    let normal = Normal::new(k as f64 * gamma, (s2 * k as f64).sqrt()).expect("positive sigma");
    let mut v = values.to_vec();
    v.sort_unstable();
    let n = v.len() as f64;
    let (lo, hi) = (v[0] - 1, *v.last().unwrap());
    let mut d: f64 = 0.0;
    let mut idx = 0;
    for m in lo..=hi {
        while idx < v.len() && v[idx] <= m {
            idx += 1;
        }
        d = d.max((idx as f64 / n - normal.cdf(m as f64 + 0.5)).abs());
    }
    d
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleRow {
    pub sample_id: usize,
    pub length: usize,
    pub height: usize,
    pub stat_value: f64,
    pub normalized_value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub k: usize,
    pub count: usize,
    pub statistic: String,
    pub seed: u64,
    pub exact_sampling: bool,
    /// Mean of F/|x|.
    pub empirical_mean: f64,
    /// γ = Σ π F̃ on the CWG.
    pub target_gamma: f64,
    /// γ = (1/κ) Σ θ F from the boundary chain.
    pub gamma_boundary_chain: f64,
    pub kappa: f64,
    /// Sample variance of (F − kγ)/√k.
    pub empirical_variance: f64,
    pub target_s2: f64,
    pub s2_by_formula: f64,
    pub s2_by_differences: f64,
    pub s2_relative_gap: f64,
    pub ks_raw: f64,
    pub ks_lattice: Option<f64>,
    pub degenerate: bool,
    pub caveats: Vec<String>,
    #[serde(skip)]
    pub runtime_secs: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaReport {
    /// Mean of k/F.
    pub empirical_mean: f64,
    pub target_mean: f64,
    /// Sample variance of √k(k/F − 1/γ).
    pub empirical_variance: f64,
    /// s²/γ⁴.
    pub target_variance: f64,
    /// s²γ⁴, the alternative scaling.
    pub alternative_target: f64,
    pub degenerate: bool,
}

#[derive(Clone, Debug)]
pub struct Experiment {
    pub report: ExperimentReport,
    pub rows: Vec<SampleRow>,
}

impl Experiment {
    pub fn csv(&self) -> String {
        let mut s = String::from("sample_id,length,height,stat_value,normalized_value\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.sample_id, r.length, r.height, r.stat_value, r.normalized_value
            ));
        }
        s
    }
}

/// Samples `count` elements of length `k` under m_{ω,k} and compares the
/// law of the statistic with its spectral limits.
pub fn concentration_experiment(
    g: &GarsideStructure,
    w: &Valuation,
    stat: &Statistic,
    k: usize,
    count: usize,
    seed: u64,
) -> Result<Experiment> {
    let start = Instant::now();
    let c = build_cwg(g, w)?;
    let pd = perron(&c, PerronOptions::default())?;
    let lifted = c.lift(g, &stat.values)?;
    let var = asymptotic_variance(&c, &pd, &lifted)?;
    let gamma = asymptotic_mean(&pd, &lifted);

    let (f, _) = normalize_to_mobius(g, &w.to_real())?;
    let bc = boundary_chain(g, &f, ChainOptions::default())?;
    let gamma_bc = (1..g.len()).map(|x| bc.theta[x] * stat.values[x]).sum::<f64>() / bc.kappa;
    if (gamma - gamma_bc).abs() > 1e-8 * gamma.abs().max(1.0) {
        return Err(Error::Consistency(format!(
            "γ from the CWG ({gamma}) and from the boundary chain ({gamma_bc}) differ"
        )));
    }

    let sampler = ExactSampler::new(&c, k)?;
    let elements: Vec<Element> = (0..count as u64)
        .into_par_iter()
        .map(|i| sampler.path_to_element(&sampler.sample_path(&mut walker_rng(seed, i))))
        .collect::<Result<_>>()?;

    let sk = (k as f64).sqrt();
    let rows: Vec<SampleRow> = elements
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let v = stat.eval(x);
            SampleRow {
                sample_id: i,
                length: g.length(x),
                height: x.block_count(),
                stat_value: v,
                normalized_value: (v - k as f64 * gamma) / sk,
            }
        })
        .collect();
    let ratios: Vec<f64> = rows.iter().map(|r| r.stat_value / r.length as f64).collect();
    let normalized: Vec<f64> = rows.iter().map(|r| r.normalized_value).collect();
    let (empirical_mean, _) = mean_var(&ratios);
    let (_, empirical_variance) = mean_var(&normalized);
    let sigma = var.sigma2.sqrt();
    let ks_raw = if var.degenerate { f64::NAN } else { ks_normal(&normalized, sigma) };
    let ks_lat = (stat.is_integer() && !var.degenerate).then(|| {
        let ints: Vec<i64> = rows.iter().map(|r| r.stat_value.round() as i64).collect();
        ks_lattice(&ints, k, gamma, var.sigma2)
    });

    let mut caveats = Vec::new();
    if let Some(ratio) = stat.length_ratio(g) {
        caveats.push(format!(
            "statistic is proportional to the length (F = {ratio}·|x|): no fluctuations"
        ));
    }
    let axioms = g.check_axioms();
    if axioms.two_generator_spherical {
        caveats.push(axioms.caveat.clone().unwrap_or_else(|| {
            "spherical type with two generators: the central limit clause may degenerate".into()
        }));
    }
    if var.degenerate {
        caveats.push("limit variance vanishes: the central limit clause is degenerate".into());
    }
    if !sampler.is_exact() {
        caveats.push(format!(
            "k > {EXACT_SAMPLING_LIMIT}: floating-point backward weights, renormalized per step"
        ));
    }

    let report = ExperimentReport {
        k,
        count,
        statistic: stat.name.clone(),
        seed,
        exact_sampling: sampler.is_exact(),
        empirical_mean,
        target_gamma: gamma,
        gamma_boundary_chain: gamma_bc,
        kappa: bc.kappa,
        empirical_variance,
        target_s2: var.sigma2,
        s2_by_formula: var.by_formula,
        s2_by_differences: var.by_differences,
        s2_relative_gap: var.relative_gap,
        ks_raw,
        ks_lattice: ks_lat,
        degenerate: var.degenerate,
        caveats,
        runtime_secs: start.elapsed().as_secs_f64(),
    };
    Ok(Experiment { report, rows })
}

/// Delta-method prediction for k/F: variance s²/γ⁴ around 1/γ.
pub fn delta_method_check(exp: &Experiment) -> DeltaReport {
    let r = &exp.report;
    let k = r.k as f64;
    let inv: Vec<f64> = exp.rows.iter().map(|row| k / row.stat_value).collect();
    let scaled: Vec<f64> = inv
        .iter()
        .map(|v| k.sqrt() * (v - 1.0 / r.target_gamma))
        .collect();
    let (empirical_mean, _) = mean_var(&inv);
    let (_, empirical_variance) = mean_var(&scaled);
    DeltaReport {
        empirical_mean,
        target_mean: 1.0 / r.target_gamma,
        empirical_variance,
        target_variance: r.target_s2 / r.target_gamma.powi(4),
        alternative_target: r.target_s2 * r.target_gamma.powi(4),
        degenerate: r.degenerate,
    }
}

/// Exact μ_k over all elements of length `k`, enumerated from normal forms.
pub fn exact_law(g: &GarsideStructure, w: &Valuation, k: usize) -> Result<Vec<(Element, f64)>> {
    let c = build_cwg(g, w)?;
    let z = c.partition_function_exact(k)?;
    if z.is_zero() {
        return Err(Error::Structural(format!("Z({k}) = 0")));
    }
    Ok(g.elements_up_to(k)
        .into_iter()
        .filter(|x| g.length(x) == k)
        .map(|x| {
            let p = w.eval_element(g, &x) / &z;
            (x, p.to_f64().unwrap_or(f64::NAN))
        })
        .collect())
}
