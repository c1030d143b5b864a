//! Conditioned weighted graphs: construction, Perron data, the limit chain,
//! window laws and asymptotic mean and variance of additive functionals.

use std::collections::VecDeque;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::garside::GarsideStructure;
use crate::measures::{RealValuation, Valuation};

/// Above this length exact partition functions fall back to floats.
pub const EXACT_LENGTH_LIMIT: usize = 200;

#[derive(Clone, Debug)]
struct ExactData {
    rows: Vec<Vec<(usize, BigRational)>>,
    w_minus: Vec<BigRational>,
    w_plus: Vec<BigRational>,
}

/// A triple (M, w⁻, w⁺) with M stored by sparse rows.
#[derive(Clone, Debug)]
pub struct Cwg {
    rows: Vec<Vec<(usize, f64)>>,
    w_minus: Vec<f64>,
    w_plus: Vec<f64>,
    exact: Option<ExactData>,
    labels: Option<Vec<(usize, usize)>>,
}

fn monoid_states(g: &GarsideStructure) -> Result<(Vec<(usize, usize)>, Vec<usize>)> {
    if g.presentation().rank() < 2 {
        return Err(Error::TooFewGenerators);
    }
    g.require_irreducible()?;
    let mut labels = Vec::new();
    let mut first = vec![usize::MAX; g.len()];
    for x in 1..g.len() {
        first[x] = labels.len();
        for i in 1..=g.simple_len(x) {
            labels.push((x, i));
        }
    }
    Ok((labels, first))
}

fn monoid_graph<T: Clone>(
    g: &GarsideStructure,
    weight: impl Fn(usize) -> T,
    one: T,
    zero: T,
) -> Result<(Vec<(usize, usize)>, Vec<Vec<(usize, T)>>, Vec<T>, Vec<T>)> {
    let (labels, first) = monoid_states(g)?;
    let n = labels.len();
    let mut rows = vec![Vec::new(); n];
    let mut w_minus = vec![zero.clone(); n];
    let mut w_plus = vec![zero; n];
    for x in 1..g.len() {
        let len = g.simple_len(x);
        let s = first[x];
        for i in 0..len - 1 {
            rows[s + i].push((s + i + 1, one.clone()));
        }
        for y in 1..g.len() {
            if g.arrow(x, y) {
                rows[s + len - 1].push((first[y], weight(y)));
            }
        }
        w_minus[s] = weight(x);
        w_plus[s + len - 1] = one.clone();
    }
    Ok((labels, rows, w_minus, w_plus))
}

/// The CWG of a monoid with a rational valuation.
pub fn build_cwg(g: &GarsideStructure, w: &Valuation) -> Result<Cwg> {
    let (labels, rows, wm, wp) = monoid_graph(
        g,
        |y| w.eval_word(g.word(y)),
        BigRational::one(),
        BigRational::zero(),
    )?;
    let mut c = Cwg::from_exact(rows, wm, wp)?;
    c.labels = Some(labels);
    Ok(c)
}

/// The CWG of a monoid with a real valuation.
pub fn build_cwg_real(g: &GarsideStructure, w: &RealValuation) -> Result<Cwg> {
    let (labels, rows, wm, wp) = monoid_graph(g, |y| w.eval_word(g.word(y)), 1.0, 0.0)?;
    let mut c = Cwg::from_sparse(rows, wm, wp)?;
    c.labels = Some(labels);
    Ok(c)
}

fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

impl Cwg {
    pub fn from_sparse(rows: Vec<Vec<(usize, f64)>>, w_minus: Vec<f64>, w_plus: Vec<f64>) -> Result<Self> {
        let n = rows.len();
        if w_minus.len() != n || w_plus.len() != n {
            return Err(Error::Structural("vector sizes do not match the matrix".into()));
        }
        let bad = |v: f64| !(v.is_finite() && v >= 0.0);
        if rows.iter().flatten().any(|&(j, v)| j >= n || bad(v))
            || w_minus.iter().chain(&w_plus).any(|&v| bad(v))
        {
            return Err(Error::Structural("entries must be finite and non-negative".into()));
        }
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().filter(|e| e.1 > 0.0).collect())
            .collect();
        Ok(Cwg {
            rows,
            w_minus,
            w_plus,
            exact: None,
            labels: None,
        })
    }

    pub fn from_dense(m: &[Vec<f64>], w_minus: Vec<f64>, w_plus: Vec<f64>) -> Result<Self> {
        if m.iter().any(|r| r.len() != m.len()) {
            return Err(Error::Structural("matrix must be square".into()));
        }
        let rows = m
            .iter()
            .map(|r| r.iter().copied().enumerate().filter(|e| e.1 != 0.0).collect())
            .collect();
        Cwg::from_sparse(rows, w_minus, w_plus)
    }

    pub fn from_exact(
        rows: Vec<Vec<(usize, BigRational)>>,
        w_minus: Vec<BigRational>,
        w_plus: Vec<BigRational>,
    ) -> Result<Self> {
        if rows.iter().flatten().any(|e| e.1.is_negative())
            || w_minus.iter().chain(&w_plus).any(|v| v.is_negative())
        {
            return Err(Error::Structural("entries must be non-negative".into()));
        }
        let rows: Vec<Vec<(usize, BigRational)>> = rows
            .into_iter()
            .map(|r| r.into_iter().filter(|e| !e.1.is_zero()).collect())
            .collect();
        let mut c = Cwg::from_sparse(
            rows.iter()
                .map(|r| r.iter().map(|(j, v)| (*j, to_f64(v))).collect())
                .collect(),
            w_minus.iter().map(to_f64).collect(),
            w_plus.iter().map(to_f64).collect(),
        )?;
        c.exact = Some(ExactData { rows, w_minus, w_plus });
        Ok(c)
    }

    pub fn from_dense_exact(
        m: &[Vec<BigRational>],
        w_minus: Vec<BigRational>,
        w_plus: Vec<BigRational>,
    ) -> Result<Self> {
        let rows = m
            .iter()
            .map(|r| r.iter().cloned().enumerate().filter(|e| !e.1.is_zero()).collect())
            .collect();
        Cwg::from_exact(rows, w_minus, w_plus)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.rows[i].iter().find(|e| e.0 == j).map_or(0.0, |e| e.1)
    }

    pub fn w_minus(&self) -> &[f64] {
        &self.w_minus
    }

    pub fn w_plus(&self) -> &[f64] {
        &self.w_plus
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn exact_rows(&self) -> Option<&[Vec<(usize, BigRational)>]> {
        self.exact.as_ref().map(|e| e.rows.as_slice())
    }

    pub fn exact_w_minus(&self) -> Option<&[BigRational]> {
        self.exact.as_ref().map(|e| e.w_minus.as_slice())
    }

    pub fn exact_w_plus(&self) -> Option<&[BigRational]> {
        self.exact.as_ref().map(|e| e.w_plus.as_slice())
    }

    /// `(simple, position)` per state for monoid CWGs.
    pub fn labels(&self) -> Option<&[(usize, usize)]> {
        self.labels.as_deref()
    }

    pub fn state_of(&self, x: usize, i: usize) -> Option<usize> {
        self.labels.as_ref()?.iter().position(|&l| l == (x, i))
    }

    /// F̃(x,i) = F(x) if i = |x|, else 0.
    pub fn lift(&self, g: &GarsideStructure, values: &[f64]) -> Result<Vec<f64>> {
        let labels = self
            .labels
            .as_ref()
            .ok_or_else(|| Error::Structural("not a monoid CWG".into()))?;
        Ok(labels
            .iter()
            .map(|&(x, i)| if i == g.simple_len(x) { values[x] } else { 0.0 })
            .collect())
    }

    /// Indicator of the states (x,1).
    pub fn block_starts(&self) -> Result<Vec<f64>> {
        let labels = self
            .labels
            .as_ref()
            .ok_or_else(|| Error::Structural("not a monoid CWG".into()))?;
        Ok(labels.iter().map(|l| if l.1 == 1 { 1.0 } else { 0.0 }).collect())
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(j, m)| m * v[j]).sum())
            .collect()
    }

    pub fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, m) in r {
                out[j] += v[i] * m;
            }
        }
        out
    }

    fn apply_exact(rows: &[Vec<(usize, BigRational)>], v: &[BigRational]) -> Vec<BigRational> {
        rows.iter()
            .map(|r| {
                r.iter()
                    .fold(BigRational::zero(), |acc, (j, m)| acc + m * &v[*j])
            })
            .collect()
    }

    /// Z(k) = w⁻·M^{k−1}·w⁺ for k = 0..=kmax, with Z(0) = 1.
    pub fn partition_functions_exact(&self, kmax: usize) -> Result<Vec<BigRational>> {
        let ex = self
            .exact
            .as_ref()
            .ok_or_else(|| Error::Structural("no exact weights".into()))?;
        let mut out = vec![BigRational::one()];
        let mut v = ex.w_plus.clone();
        for k in 1..=kmax {
            if k > 1 {
                v = Self::apply_exact(&ex.rows, &v);
            }
            out.push(
                ex.w_minus
                    .iter()
                    .zip(&v)
                    .fold(BigRational::zero(), |acc, (a, b)| acc + a * b),
            );
        }
        Ok(out)
    }

    pub fn partition_function_exact(&self, k: usize) -> Result<BigRational> {
        Ok(self.partition_functions_exact(k)?.pop().expect("non-empty"))
    }

    /// ln Z(k) in floating point, renormalizing at each step.
    pub fn log_partition_function(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        let mut v = self.w_plus.clone();
        let mut log_scale = 0.0;
        for _ in 1..k {
            v = self.apply(&v);
            let s: f64 = v.iter().sum();
            if s == 0.0 {
                return f64::NEG_INFINITY;
            }
            v.iter_mut().for_each(|x| *x /= s);
            log_scale += s.ln();
        }
        let z: f64 = self.w_minus.iter().zip(&v).map(|(a, b)| a * b).sum();
        z.ln() + log_scale
    }

    /// Z(k), exact when available and k ≤ [`EXACT_LENGTH_LIMIT`].
    pub fn partition_function(&self, k: usize) -> f64 {
        if self.exact.is_some() && k <= EXACT_LENGTH_LIMIT {
            if let Ok(z) = self.partition_function_exact(k) {
                return to_f64(&z);
            }
        }
        self.log_partition_function(k).exp()
    }

    /// Backward vectors b_m = M^m w⁺ for m < count, each scaled to unit sum.
    pub fn backward_vectors(&self, count: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(count);
        let mut v = self.w_plus.clone();
        for m in 0..count {
            if m > 0 {
                v = self.apply(&v);
            }
            let s: f64 = v.iter().sum();
            if s > 0.0 {
                v.iter_mut().for_each(|x| *x /= s);
            }
            out.push(v.clone());
        }
        out
    }

    /// Coordinate-format listing, one `row col value` line per entry.
    pub fn dump_matrix(&self) -> String {
        let mut s = String::new();
        if let Some(ex) = &self.exact {
            for (i, r) in ex.rows.iter().enumerate() {
                for (j, v) in r {
                    let _ = writeln!(s, "{i} {j} {v}");
                }
            }
        } else {
            for (i, r) in self.rows.iter().enumerate() {
                for (j, v) in r {
                    let _ = writeln!(s, "{i} {j} {v:e}");
                }
            }
        }
        s
    }

    fn graph(&self) -> DiGraph<(), ()> {
        let mut gr = DiGraph::new();
        let nodes: Vec<_> = (0..self.len()).map(|_| gr.add_node(())).collect();
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, _) in r {
                gr.add_edge(nodes[i], nodes[j], ());
            }
        }
        gr
    }

    /// States reachable from `start` (forward) or reaching it (`reverse`).
    fn reach(&self, start: &[usize], reverse: bool) -> Vec<bool> {
        let n = self.len();
        let mut adj = vec![Vec::new(); n];
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, _) in r {
                if reverse {
                    adj[j].push(i);
                } else {
                    adj[i].push(j);
                }
            }
        }
        let mut seen = vec![false; n];
        let mut q: VecDeque<usize> = start.iter().copied().collect();
        for &s in start {
            seen[s] = true;
        }
        while let Some(i) = q.pop_front() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    q.push_back(j);
                }
            }
        }
        seen
    }
}

/// Block structure of M with respect to its dominant class.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum SpectralCase {
    /// M primitive.
    A,
    /// A dominant primitive class plus states of smaller spectral radius;
    /// `closed` is true when no edge leaves the dominant class.
    B {
        dominant: Vec<usize>,
        others: Vec<usize>,
        closed: bool,
    },
}

impl SpectralCase {
    /// Number of states outside the dominant class.
    pub fn block_split(&self) -> usize {
        match self {
            SpectralCase::A => 0,
            SpectralCase::B { others, .. } => others.len(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PerronOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PerronOptions {
    fn default() -> Self {
        PerronOptions {
            tol: 1e-12,
            max_iter: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PerronData {
    pub lambda: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub pi: Vec<f64>,
    pub case: SpectralCase,
    pub residual_left: f64,
    pub residual_right: f64,
    pub iterations: usize,
}

fn normalize1(v: &mut [f64]) -> f64 {
    let s: f64 = v.iter().map(|x| x.abs()).sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
    s
}

/// Power iteration for v ↦ op(v) on non-negative vectors; stops when the
/// angle between successive unit-sum iterates drops below `tol`, then keeps
/// iterating while the steps still shrink, to reach rounding level.
fn power_iterate(
    mut v: Vec<f64>,
    op: impl Fn(&[f64]) -> Vec<f64>,
    opts: PerronOptions,
) -> Result<(Vec<f64>, usize)> {
    let step = |v: &[f64]| -> Result<(Vec<f64>, f64)> {
        let mut w = op(v);
        if normalize1(&mut w) == 0.0 {
            return Err(Error::Spectral("iterate vanished (nilpotent part)".into()));
        }
        let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nw: f64 = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        let angle = v
            .iter()
            .zip(&w)
            .map(|(a, b)| (a / nv - b / nw).powi(2))
            .sum::<f64>()
            .sqrt();
        Ok((w, angle))
    };
    normalize1(&mut v);
    for it in 1..=opts.max_iter {
        let (w, angle) = step(&v)?;
        v = w;
        if angle <= opts.tol {
            let mut best = angle;
            let mut stalled = 0;
            for extra in 1..=it {
                let (w, angle) = step(&v)?;
                v = w;
                if angle < 0.9 * best {
                    best = angle;
                    stalled = 0;
                } else {
                    stalled += 1;
                }
                if best == 0.0 || stalled >= 5 {
                    return Ok((v, it + extra));
                }
            }
            return Ok((v, 2 * it));
        }
    }
    Err(Error::Spectral(format!(
        "power iteration did not converge within {} iterations",
        opts.max_iter
    )))
}

fn scc_radius(c: &Cwg, comp: &[usize], opts: PerronOptions) -> Result<f64> {
    if comp.len() == 1 {
        return Ok(c.entry(comp[0], comp[0]));
    }
    let n = c.len();
    let mut inside = vec![false; n];
    for &i in comp {
        inside[i] = true;
    }
    let op = |v: &[f64]| {
        let mut w = v.to_vec();
        for &i in comp {
            for &(j, m) in &c.rows[i] {
                if inside[j] {
                    w[i] += m * v[j];
                }
            }
        }
        w
    };
    let mut start = vec![0.0; n];
    for &i in comp {
        start[i] = 1.0;
    }
    let loose = PerronOptions {
        tol: opts.tol.max(1e-13),
        max_iter: opts.max_iter,
    };
    let (v, _) = power_iterate(start, op, loose)?;
    let w = op(&v);
    Ok(w.iter().sum::<f64>() / v.iter().sum::<f64>() - 1.0)
}

fn period_of(c: &Cwg, comp: &[usize]) -> u64 {
    let n = c.len();
    let mut level = vec![usize::MAX; n];
    let mut inside = vec![false; n];
    for &i in comp {
        inside[i] = true;
    }
    level[comp[0]] = 0;
    let mut q = VecDeque::from([comp[0]]);
    let mut gcd: u64 = 0;
    while let Some(i) = q.pop_front() {
        for &(j, _) in &c.rows[i] {
            if !inside[j] {
                continue;
            }
            if level[j] == usize::MAX {
                level[j] = level[i] + 1;
                q.push_back(j);
            } else {
                let d = (level[i] as i64 + 1 - level[j] as i64).unsigned_abs();
                gcd = gcd.gcd(&d);
            }
        }
    }
    gcd
}

/// Dominant eigenvalue, eigenvectors and stationary vector.
pub fn perron(c: &Cwg, opts: PerronOptions) -> Result<PerronData> {
    let n = c.len();
    if n == 0 {
        return Err(Error::Structural("empty graph".into()));
    }
    let sccs = tarjan_scc(&c.graph());
    let mut radii = Vec::with_capacity(sccs.len());
    for comp in &sccs {
        let idx: Vec<usize> = comp.iter().map(|v| v.index()).collect();
        let rho = scc_radius(c, &idx, opts)?;
        radii.push((rho, idx));
    }
    let rho_max = radii.iter().map(|r| r.0).fold(0.0, f64::max);
    if rho_max <= 0.0 {
        return Err(Error::Spectral("spectral radius is zero".into()));
    }
    let dominant: Vec<&(f64, Vec<usize>)> = radii
        .iter()
        .filter(|r| (r.0 - rho_max).abs() <= 1e-9 * rho_max)
        .collect();
    if dominant.len() > 1 {
        return Err(Error::Structural(format!(
            "{} classes share the dominant eigenvalue {rho_max}",
            dominant.len()
        )));
    }
    let mut dom = dominant[0].1.clone();
    dom.sort_unstable();
    let period = period_of(c, &dom);
    if period != 1 {
        return Err(Error::Structural(format!(
            "dominant class has period {period}: several eigenvalues of maximal modulus"
        )));
    }
    let case = if dom.len() == n {
        SpectralCase::A
    } else {
        let mut inside = vec![false; n];
        for &i in &dom {
            inside[i] = true;
        }
        let closed = dom.iter().all(|&i| c.rows[i].iter().all(|e| inside[e.0]));
        SpectralCase::B {
            others: (0..n).filter(|&i| !inside[i]).collect(),
            dominant: dom.clone(),
            closed,
        }
    };

    let reach_dom = c.reach(&dom, true);
    let from_dom = c.reach(&dom, false);
    let start_r: Vec<f64> = reach_dom.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let start_l: Vec<f64> = from_dom.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let (mut r, it_r) = power_iterate(start_r, |v| c.apply(v), opts)?;
    let (mut l, it_l) = power_iterate(start_l, |v| c.apply_transpose(v), opts)?;
    for i in 0..n {
        if !reach_dom[i] {
            r[i] = 0.0;
        }
        if !from_dom[i] {
            l[i] = 0.0;
        }
    }
    let mr = c.apply(&r);
    let lm = c.apply_transpose(&l);
    let lr: f64 = l.iter().zip(&r).map(|(a, b)| a * b).sum();
    if lr <= 0.0 {
        return Err(Error::Spectral("ℓ·r vanishes".into()));
    }
    let lambda = l.iter().zip(&mr).map(|(a, b)| a * b).sum::<f64>() / lr;
    normalize1(&mut r);
    let lr: f64 = l.iter().zip(&r).map(|(a, b)| a * b).sum();
    l.iter_mut().for_each(|x| *x /= lr);
    let mr = c.apply(&r);
    let lm2 = c.apply_transpose(&l);
    let _ = lm;
    let residual_right = mr.iter().zip(&r).map(|(a, b)| (a - lambda * b).abs()).fold(0.0, f64::max);
    let residual_left = lm2.iter().zip(&l).map(|(a, b)| (a - lambda * b).abs()).fold(0.0, f64::max)
        / l.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let pi: Vec<f64> = l.iter().zip(&r).map(|(a, b)| a * b).collect();
    let wr: f64 = c.w_minus.iter().zip(&r).map(|(a, b)| a * b).sum();
    let lw: f64 = l.iter().zip(&c.w_plus).map(|(a, b)| a * b).sum();
    if wr <= 0.0 || lw <= 0.0 {
        return Err(Error::Structural("w⁻·r and ℓ·w⁺ must be positive".into()));
    }
    Ok(PerronData {
        lambda,
        left: l,
        right: r,
        pi,
        case,
        residual_left,
        residual_right,
        iterations: it_r.max(it_l),
    })
}

/// Initial law and transition matrix of the limit of μ_k.
#[derive(Clone, Debug, Serialize)]
pub struct LimitChain {
    pub h: Vec<f64>,
    pub rows: Vec<Vec<(usize, f64)>>,
    /// States with r(i) = 0, whose rows are uniform over out-neighbors.
    pub unreachable: Vec<bool>,
}

impl LimitChain {
    pub fn transition(&self, i: usize, j: usize) -> f64 {
        self.rows[i].iter().find(|e| e.0 == j).map_or(0.0, |e| e.1)
    }

    pub fn row_sum_error(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| !r.is_empty())
            .map(|r| (r.iter().map(|e| e.1).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// ‖πP − π‖∞.
    pub fn stationarity_error(&self, pi: &[f64]) -> f64 {
        let mut out = vec![0.0; pi.len()];
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, p) in r {
                out[j] += pi[i] * p;
            }
        }
        out.iter().zip(pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

pub fn limit_chain(pd: &PerronData, c: &Cwg) -> LimitChain {
    let n = c.len();
    let wr: f64 = c.w_minus.iter().zip(&pd.right).map(|(a, b)| a * b).sum();
    let h: Vec<f64> = (0..n).map(|i| c.w_minus[i] * pd.right[i] / wr).collect();
    let mut rows = Vec::with_capacity(n);
    let mut unreachable = vec![false; n];
    for i in 0..n {
        if pd.right[i] > 0.0 {
            rows.push(
                c.rows[i]
                    .iter()
                    .filter(|e| pd.right[e.0] > 0.0)
                    .map(|&(j, m)| (j, m * pd.right[j] / (pd.lambda * pd.right[i])))
                    .collect(),
            );
        } else {
            unreachable[i] = true;
            let d = c.rows[i].len() as f64;
            rows.push(c.rows[i].iter().map(|&(j, _)| (j, 1.0 / d)).collect());
        }
    }
    LimitChain { h, rows, unreachable }
}

/// Law under μ_k of the first `j+1` states of a path of length `k`.
pub fn window_distribution(c: &Cwg, k: usize, j: usize) -> Result<Vec<(Vec<usize>, f64)>> {
    if k == 0 || j >= k {
        return Err(Error::Structural("window must be shorter than the paths".into()));
    }
    if c.is_exact() && k <= EXACT_LENGTH_LIMIT && c.partition_function_exact(k)?.is_zero() {
        return Err(Error::Structural(format!("Z({k}) = 0")));
    }
    let back = c.backward_vectors(k - j);
    let b = &back[k - 1 - j];
    let mut paths: Vec<(Vec<usize>, f64)> = (0..c.len())
        .filter(|&s| c.w_minus[s] > 0.0)
        .map(|s| (vec![s], c.w_minus[s]))
        .collect();
    for _ in 0..j {
        let mut next = Vec::new();
        for (p, w) in &paths {
            let last = *p.last().unwrap();
            for &(t, m) in &c.rows[last] {
                let mut q = p.clone();
                q.push(t);
                next.push((q, w * m));
            }
        }
        paths = next;
    }
    let mut out: Vec<(Vec<usize>, f64)> = paths
        .into_iter()
        .map(|(p, w)| {
            let last = *p.last().unwrap();
            (p, w * b[last])
        })
        .filter(|e| e.1 > 0.0)
        .collect();
    let total: f64 = out.iter().map(|e| e.1).sum();
    if total <= 0.0 {
        return Err(Error::Structural(format!("Z({k}) = 0")));
    }
    out.iter_mut().for_each(|e| e.1 /= total);
    Ok(out)
}

/// γ_f = Σ π(j) f(j).
pub fn asymptotic_mean(pd: &PerronData, f: &[f64]) -> f64 {
    pd.pi.iter().zip(f).map(|(a, b)| a * b).sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct VarianceReport {
    pub gamma: f64,
    pub sigma2: f64,
    pub by_formula: f64,
    pub by_differences: f64,
    pub relative_gap: f64,
    pub degenerate: bool,
}

const DEGENERACY_TOL: f64 = 1e-10;

/// Double-double value `hi + lo`.
#[derive(Clone, Copy, Debug)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (hi, lo) = two_sum(s, e + self.lo + o.lo);
        Dd { hi, lo }
    }

    fn sub(self, o: Dd) -> Dd {
        self.add(Dd { hi: -o.hi, lo: -o.lo })
    }

    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let (hi, lo) = two_sum(p, e + self.hi * o.lo + self.lo * o.hi);
        Dd { hi, lo }
    }

    fn div(self, o: Dd) -> Dd {
        let q = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::from(q)));
        let (hi, lo) = two_sum(q, r.hi / o.hi);
        Dd { hi, lo }
    }
}

/// Dominant eigenvalue of Diag(e^{u f})·M. The eigenvectors come from f64
/// power iteration; the Rayleigh quotient is evaluated in double-double.
fn perturbed_lambda(c: &Cwg, pd: &PerronData, f: &[f64], u: f64) -> Result<Dd> {
    let scale: Vec<Dd> = f
        .iter()
        .map(|x| {
            let (hi, lo) = two_sum(1.0, (u * x).exp_m1());
            Dd { hi, lo }
        })
        .collect();
    let op_r = |v: &[f64]| {
        let w = c.apply(v);
        w.iter().zip(&scale).map(|(a, s)| a * s.hi).collect::<Vec<f64>>()
    };
    let op_l = |v: &[f64]| {
        let w: Vec<f64> = v.iter().zip(&scale).map(|(a, s)| a * s.hi).collect();
        c.apply_transpose(&w)
    };
    let opts = PerronOptions {
        tol: 1e-15,
        max_iter: 200_000,
    };
    let (r, _) = power_iterate(pd.right.clone(), op_r, opts)?;
    let (l, _) = power_iterate(pd.left.clone(), op_l, opts)?;
    let mut num = Dd::ZERO;
    let mut den = Dd::ZERO;
    for i in 0..c.len() {
        let mut mr = Dd::ZERO;
        for &(j, m) in &c.rows[i] {
            mr = mr.add(Dd::from(m).mul(Dd::from(r[j])));
        }
        num = num.add(Dd::from(l[i]).mul(scale[i]).mul(mr));
        den = den.add(Dd::from(l[i]).mul(Dd::from(r[i])));
    }
    Ok(num.div(den))
}

/// (ln λ(h) − 2 ln λ(0) + ln λ(−h))/h², evaluated as ln of a ratio.
fn second_difference(c: &Cwg, pd: &PerronData, f: &[f64], h: f64) -> Result<f64> {
    let lp = perturbed_lambda(c, pd, f, h)?;
    let l0 = perturbed_lambda(c, pd, f, 0.0)?;
    let lm = perturbed_lambda(c, pd, f, -h)?;
    let x = lp.mul(lm).div(l0.mul(l0)).sub(Dd::from(1.0));
    Ok((x.hi + x.lo).ln_1p() / (h * h))
}

/// Limit variance of (S_k f − kγ)/√k, by the λ''(0) formula and by finite
/// differences of ln λ(u), cross-checked.
pub fn asymptotic_variance(c: &Cwg, pd: &PerronData, f: &[f64]) -> Result<VarianceReport> {
    let n = c.len();
    let gamma = asymptotic_mean(pd, f);
    if f.iter().all(|&x| x == f[0]) {
        return Ok(VarianceReport {
            gamma,
            sigma2: 0.0,
            by_formula: 0.0,
            by_differences: 0.0,
            relative_gap: 0.0,
            degenerate: true,
        });
    }
    let fc: Vec<f64> = f.iter().map(|x| x - gamma).collect();
    let lambda = pd.lambda;
    let (l, r) = (&pd.left, &pd.right);

    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] += lambda;
        for &(j, m) in &c.rows[i] {
            a[(i, j)] -= m;
        }
        for j in 0..n {
            a[(i, j)] += lambda * r[i] * l[j];
        }
    }
    let rhs = DVector::from_iterator(n, (0..n).map(|i| lambda * fc[i] * r[i]));
    let rp = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Spectral("singular perturbation system".into()))?;
    let gfun: Vec<f64> = (0..n)
        .map(|i| if r[i] > 0.0 { rp[i] / r[i] } else { 0.0 })
        .collect();
    let mut second = 0.0;
    for i in 0..n {
        if l[i] == 0.0 {
            continue;
        }
        for &(j, m) in &c.rows[i] {
            let d = fc[i] - gfun[i] + gfun[j];
            second += l[i] * d * d * m * r[j];
        }
    }
    let by_formula = second / lambda;

    let (h1, h2) = (1e-3, 1e-4);
    let (a1, a2) = (
        second_difference(c, pd, &fc, h1)?,
        second_difference(c, pd, &fc, h2)?,
    );
    let by_differences = (h1 * h1 * a2 - h2 * h2 * a1) / (h1 * h1 - h2 * h2);

    let scale = by_formula.abs().max(by_differences.abs());
    let relative_gap = if scale > 0.0 {
        (by_formula - by_differences).abs() / scale
    } else {
        0.0
    };
    let degenerate = by_formula.abs() <= DEGENERACY_TOL;
    let both_tiny = by_formula.abs() <= DEGENERACY_TOL && by_differences.abs() <= 1e-6;
    if relative_gap > 1e-6 && !both_tiny {
        return Err(Error::Consistency(format!(
            "variance routes disagree: formula {by_formula}, differences {by_differences}"
        )));
    }
    Ok(VarianceReport {
        gamma,
        sigma2: if degenerate { 0.0 } else { by_formula },
        by_formula,
        by_differences,
        relative_gap,
        degenerate,
    })
}

/// Law under μ_k of S_k f = Σ f(sᵢ) for an integer state function, as
/// probabilities indexed by value from the returned offset.
pub fn additive_distribution(c: &Cwg, f: &[i64], k: usize) -> Result<(i64, Vec<f64>)> {
    if k == 0 {
        return Err(Error::Structural("paths have at least one state".into()));
    }
    let lo = f.iter().copied().min().unwrap_or(0).min(0);
    let hi = f.iter().copied().max().unwrap_or(0).max(0);
    let width = ((hi - lo) as usize) * k + 1;
    let offset = lo * k as i64;
    let n = c.len();
    // cur[s][v]: weight of prefixes ending at s with S = v + offset
    let mut cur = vec![vec![0.0; width]; n];
    for s in 0..n {
        if c.w_minus[s] > 0.0 {
            cur[s][(f[s] - offset) as usize] = c.w_minus[s];
        }
    }
    for _ in 1..k {
        let mut next = vec![vec![0.0; width]; n];
        for s in 0..n {
            for &(t, m) in &c.rows[s] {
                let shift = f[t];
                for v in 0..width {
                    let x = cur[s][v];
                    if x != 0.0 {
                        next[t][(v as i64 + shift) as usize] += x * m;
                    }
                }
            }
        }
        let total: f64 = next.iter().flatten().sum();
        if total == 0.0 {
            return Err(Error::Structural(format!("Z({k}) = 0")));
        }
        next.iter_mut().flatten().for_each(|x| *x /= total);
        cur = next;
    }
    let mut law = vec![0.0; width];
    for s in 0..n {
        for v in 0..width {
            law[v] += cur[s][v] * c.w_plus[s];
        }
    }
    let total: f64 = law.iter().sum();
    if total == 0.0 {
        return Err(Error::Structural(format!("Z({k}) = 0")));
    }
    law.iter_mut().for_each(|x| *x /= total);
    Ok((offset, law))
}
