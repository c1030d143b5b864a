//! Valuations, Möbius valuations, the boundary Markov chain on S∖{e} and
//! the speedup κ.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::Serialize;

use crate::cwg::{build_cwg_real, perron, PerronOptions};
use crate::error::{Error, Result};
use crate::garside::{Element, GarsideStructure};
use crate::mobius::{mobius_polynomial, smallest_root_p0, DSets};
use crate::presentation::{param_classes, Gen, MonoidPresentation};

/// A positive rational weight per generator, extended multiplicatively.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Valuation {
    weights: Vec<BigRational>,
}

fn check_relations<T: PartialEq>(p: &MonoidPresentation, eval: impl Fn(&[Gen]) -> T) -> Result<()> {
    for r in p.relations() {
        if eval(&r.lhs) != eval(&r.rhs) {
            return Err(Error::Valuation(format!(
                "not constant on the relation {} = {}",
                p.format_word(&r.lhs),
                p.format_word(&r.rhs)
            )));
        }
    }
    Ok(())
}

impl Valuation {
    pub fn uniform(p: &MonoidPresentation) -> Self {
        Valuation {
            weights: vec![BigRational::one(); p.rank()],
        }
    }

    /// Validates positivity and compatibility with every relation pair.
    pub fn new(p: &MonoidPresentation, weights: Vec<BigRational>) -> Result<Self> {
        if weights.len() != p.rank() {
            return Err(Error::Valuation("one weight per generator expected".into()));
        }
        if weights.iter().any(|w| !w.is_positive()) {
            return Err(Error::Valuation("weights must be positive".into()));
        }
        let v = Valuation { weights };
        check_relations(p, |w| v.eval_word(w))?;
        Ok(v)
    }

    /// One weight per parameter class.
    pub fn from_class_weights(p: &MonoidPresentation, class_weights: &[BigRational]) -> Result<Self> {
        let pc = param_classes(p)?;
        if class_weights.len() != pc.count() {
            return Err(Error::Valuation(format!("{} class weights expected", pc.count())));
        }
        let w = (0..p.rank())
            .map(|g| class_weights[pc.class_of[g]].clone())
            .collect();
        Valuation::new(p, w)
    }

    /// Parses `a=0.3,b=7/10`. Generators left out take the weight given to
    /// another member of their class.
    pub fn parse(p: &MonoidPresentation, text: &str) -> Result<Self> {
        let mut given: Vec<Option<BigRational>> = vec![None; p.rank()];
        for item in text.split(',').filter(|s| !s.trim().is_empty()) {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Valuation(format!("expected sym=value, got `{item}`")))?;
            let g = p
                .index_of(name.trim())
                .ok_or_else(|| Error::Valuation(format!("unknown generator `{}`", name.trim())))?;
            given[g as usize] = Some(parse_rational(value.trim())?);
        }
        let pc = param_classes(p)?;
        let mut weights = Vec::with_capacity(p.rank());
        for g in 0..p.rank() {
            let w = match &given[g] {
                Some(w) => w.clone(),
                None => pc.classes[pc.class_of[g]]
                    .iter()
                    .find_map(|&h| given[h as usize].clone())
                    .ok_or_else(|| Error::Valuation(format!("no weight for `{}`", p.symbol(g as Gen))))?,
            };
            weights.push(w);
        }
        Valuation::new(p, weights)
    }

    pub fn weight(&self, g: Gen) -> &BigRational {
        &self.weights[g as usize]
    }

    pub fn weights(&self) -> &[BigRational] {
        &self.weights
    }

    pub fn eval_word(&self, w: &[Gen]) -> BigRational {
        w.iter()
            .fold(BigRational::one(), |acc, &g| acc * &self.weights[g as usize])
    }

    pub fn eval_element(&self, g: &GarsideStructure, x: &Element) -> BigRational {
        self.eval_word(&g.element_word(x))
    }

    pub fn is_uniform(&self) -> bool {
        self.weights.iter().all(|w| w.is_one())
    }

    pub fn to_real(&self) -> RealValuation {
        RealValuation {
            weights: self.weights.iter().map(|w| w.to_f64().unwrap_or(f64::NAN)).collect(),
        }
    }

    pub fn format(&self, p: &MonoidPresentation) -> String {
        (0..p.rank())
            .map(|g| format!("{}={}", p.symbol(g as Gen), self.weights[g]))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Parses an exact rational from `3`, `7/10` or a decimal such as `0.35`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::Valuation(format!("invalid number `{s}`"));
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().map_err(|_| bad())?;
        let b: BigInt = b.trim().parse().map_err(|_| bad())?;
        if b.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(a, b));
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if frac.chars().any(|c| !c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let num: BigInt = digits.parse().map_err(|_| bad())?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    Ok(BigRational::new(num, den))
}

/// A positive real weight per generator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RealValuation {
    pub weights: Vec<f64>,
}

impl RealValuation {
    pub fn constant(p: &MonoidPresentation, c: f64) -> Self {
        RealValuation {
            weights: vec![c; p.rank()],
        }
    }

    pub fn new(p: &MonoidPresentation, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != p.rank() || weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Valuation("one positive weight per generator expected".into()));
        }
        let v = RealValuation { weights };
        for r in p.relations() {
            let (a, b) = (v.eval_word(&r.lhs), v.eval_word(&r.rhs));
            if (a - b).abs() > 1e-12 * a.abs().max(b.abs()) {
                return Err(Error::Valuation(format!(
                    "not constant on the relation {} = {}",
                    p.format_word(&r.lhs),
                    p.format_word(&r.rhs)
                )));
            }
        }
        Ok(v)
    }

    pub fn eval_word(&self, w: &[Gen]) -> f64 {
        w.iter().map(|&g| self.weights[g as usize]).product()
    }

    pub fn eval_element(&self, g: &GarsideStructure, x: &Element) -> f64 {
        self.eval_word(&g.element_word(x))
    }
}

/// h = T f on S for a real valuation.
pub fn mobius_transform_on_simples(g: &GarsideStructure, ds: &DSets, f: &RealValuation) -> Vec<f64> {
    (0..g.len())
        .map(|x| {
            let fx = f.eval_word(g.word(x));
            let mut s = 0.0;
            for &(odd, j) in ds.signed_joins(x) {
                let v = f.eval_word(g.word(j));
                s += if odd { -v } else { v };
            }
            fx * s
        })
        .collect()
}

/// h = T f on S in exact arithmetic.
pub fn mobius_transform_on_simples_exact(
    g: &GarsideStructure,
    ds: &DSets,
    f: &Valuation,
) -> Vec<BigRational> {
    (0..g.len())
        .map(|x| {
            let mut s = BigRational::zero();
            for &(odd, j) in ds.signed_joins(x) {
                let xj = g
                    .simple_product(x, j)
                    .expect("x times a join of D(x) is simple");
                let v = f.eval_word(g.word(xj));
                if odd {
                    s -= v;
                } else {
                    s += v;
                }
            }
            s
        })
        .collect()
}

/// Outcome of the Möbius test h(e) = 0, h > 0 on S∖{e}.
#[derive(Clone, Debug, Serialize)]
pub struct MobiusCheck {
    pub is_mobius: bool,
    pub h_unit: f64,
    pub h: Vec<f64>,
}

pub fn is_mobius_valuation(g: &GarsideStructure, f: &RealValuation, tol: f64) -> MobiusCheck {
    let ds = DSets::new(g);
    let h = mobius_transform_on_simples(g, &ds, f);
    let ok = h[0].abs() <= tol && h[1..].iter().all(|&v| v > tol);
    MobiusCheck {
        is_mobius: ok,
        h_unit: h[0],
        h,
    }
}

/// Exact variant for rational valuations: returns h and the verdict.
pub fn is_mobius_valuation_exact(g: &GarsideStructure, f: &Valuation) -> (bool, Vec<BigRational>) {
    let ds = DSets::new(g);
    let h = mobius_transform_on_simples_exact(g, &ds, f);
    let ok = h[0].is_zero() && h[1..].iter().all(|v| v.is_positive());
    (ok, h)
}

/// f = λ⁻¹ω, the unique Möbius valuation on the half-line through ω.
pub fn normalize_to_mobius(g: &GarsideStructure, w: &RealValuation) -> Result<(RealValuation, f64)> {
    let c = build_cwg_real(g, w)?;
    let pd = perron(&c, PerronOptions::default())?;
    let f = RealValuation {
        weights: w.weights.iter().map(|x| x / pd.lambda).collect(),
    };
    Ok((f, pd.lambda))
}

/// The boundary chain of a Möbius valuation.
#[derive(Clone, Debug, Serialize)]
pub struct BoundaryChain {
    pub f: Vec<f64>,
    pub h: Vec<f64>,
    /// Transition rows indexed by simple; row 0 (the unit) is empty.
    pub rows: Vec<Vec<(usize, f64)>>,
    pub theta: Vec<f64>,
    pub kappa: f64,
    pub ergodic: Vec<usize>,
    pub delta: Option<usize>,
    pub lengths: Vec<usize>,
}

#[derive(Clone, Copy, Debug)]
pub struct ChainOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions {
            tol: 1e-10,
            max_iter: 1_000_000,
        }
    }
}

pub fn boundary_chain(g: &GarsideStructure, f: &RealValuation, opts: ChainOptions) -> Result<BoundaryChain> {
    g.require_irreducible()?;
    let check = is_mobius_valuation(g, f, opts.tol);
    if !check.is_mobius {
        return Err(Error::Structural(format!(
            "valuation is not Möbius (h(e) = {:e})",
            check.h_unit
        )));
    }
    let n = g.len();
    let h = check.h;
    let fv: Vec<f64> = (0..n).map(|x| f.eval_word(g.word(x))).collect();
    let mut rows = vec![Vec::new(); n];
    for x in 1..n {
        for y in 1..n {
            if g.arrow(x, y) {
                rows[x].push((y, fv[x] * h[y] / h[x]));
            }
        }
    }
    let ergodic = g.charney_vertices();
    let theta = stationary_on(&rows, &ergodic, n, opts.max_iter)?;
    let kappa = (0..n).map(|x| g.simple_len(x) as f64 * theta[x]).sum();
    Ok(BoundaryChain {
        f: fv,
        h,
        rows,
        theta,
        kappa,
        ergodic,
        delta: g.delta(),
        lengths: (0..n).map(|x| g.simple_len(x)).collect(),
    })
}

/// Stationary law of the chain restricted to `support`, by power iteration
/// of the lazy chain (I+P)/2.
fn stationary_on(rows: &[Vec<(usize, f64)>], support: &[usize], n: usize, max_iter: usize) -> Result<Vec<f64>> {
    let mut inside = vec![false; n];
    for &x in support {
        inside[x] = true;
    }
    let mut theta = vec![0.0; n];
    for &x in support {
        theta[x] = 1.0 / support.len() as f64;
    }
    for _ in 0..max_iter {
        let mut next = vec![0.0; n];
        for &x in support {
            next[x] += 0.5 * theta[x];
            for &(y, p) in &rows[x] {
                if inside[y] {
                    next[y] += 0.5 * theta[x] * p;
                }
            }
        }
        let s: f64 = next.iter().sum();
        let mut diff = 0.0;
        for x in 0..n {
            next[x] /= s;
            diff += (next[x] - theta[x]).abs();
        }
        theta = next;
        if diff < 1e-15 {
            return Ok(theta);
        }
    }
    Err(Error::Spectral("stationary law did not converge".into()))
}

impl BoundaryChain {
    pub fn speedup(&self) -> f64 {
        self.kappa
    }

    /// ν(𝒞_y): h(y₁)·P(y₁,y₂)…, which equals f(y₁⋯y_{k−1})·h(y_k).
    pub fn cylinder_mass(&self, y: &Element) -> f64 {
        let blocks: Vec<usize> = y.blocks().collect();
        if blocks.is_empty() {
            return 0.0;
        }
        let mut m = self.h[blocks[0]];
        for w in blocks.windows(2) {
            m *= self.transition(w[0], w[1]);
        }
        m
    }

    pub fn transition(&self, x: usize, y: usize) -> f64 {
        self.rows[x].iter().find(|e| e.0 == y).map_or(0.0, |e| e.1)
    }

    /// Maximal deviation of row sums from one.
    pub fn row_sum_error(&self) -> f64 {
        self.rows[1..]
            .iter()
            .map(|r| (r.iter().map(|e| e.1).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// ‖θP − θ‖∞.
    pub fn stationarity_error(&self) -> f64 {
        let n = self.theta.len();
        let mut tp = vec![0.0; n];
        for x in 1..n {
            for &(y, p) in &self.rows[x] {
                tp[y] += self.theta[x] * p;
            }
        }
        (0..n).map(|x| (tp[x] - self.theta[x]).abs()).fold(0.0, f64::max)
    }

    fn draw<R: Rng + ?Sized>(items: &[(usize, f64)], rng: &mut R) -> usize {
        let total: f64 = items.iter().map(|e| e.1).sum();
        let mut u = rng.gen::<f64>() * total;
        for &(y, p) in items {
            if u < p {
                return y;
            }
            u -= p;
        }
        items.last().expect("non-empty row").0
    }

    /// Simulates the first `j` blocks of a boundary point.
    pub fn sample_prefix<R: Rng + ?Sized>(&self, j: usize, rng: &mut R) -> Vec<usize> {
        let init: Vec<(usize, f64)> = (1..self.h.len()).map(|x| (x, self.h[x])).collect();
        let mut out = Vec::with_capacity(j);
        if j == 0 {
            return out;
        }
        let mut x = Self::draw(&init, rng);
        out.push(x);
        for _ in 1..j {
            x = Self::draw(&self.rows[x], rng);
            out.push(x);
        }
        out
    }
}

/// The uniform measure: f = p₀^{|·|}.
pub fn uniform_measure(g: &GarsideStructure) -> Result<(BoundaryChain, f64)> {
    if g.presentation().rank() < 2 {
        return Err(Error::TooFewGenerators);
    }
    g.require_irreducible()?;
    let p0 = smallest_root_p0(&mobius_polynomial(g))?;
    let f = RealValuation::constant(g.presentation(), p0);
    Ok((boundary_chain(g, &f, ChainOptions::default())?, p0))
}

/// m_{ω,k}(↑x) = ω(x)·Z_ω(k−|x|)/Z_ω(k), exactly, from the growth
/// coefficients `z` (with z[0] = 1).
pub fn upper_mass_exact(
    g: &GarsideStructure,
    w: &Valuation,
    z: &[BigRational],
    x: &Element,
    k: usize,
) -> Result<BigRational> {
    let len = g.length(x);
    if len > k {
        return Ok(BigRational::zero());
    }
    if k >= z.len() || z[k].is_zero() {
        return Err(Error::Structural(format!("Z({k}) unavailable or zero")));
    }
    Ok(w.eval_element(g, x) * &z[k - len] / &z[k])
}
