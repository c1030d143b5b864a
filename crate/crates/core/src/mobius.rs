//! Exact combinatorial transforms over the Garside structure: the sets D(x),
//! Garside bases A[x], the graded Möbius transform and its inverse, Möbius
//! polynomials, growth series and the root p₀.

use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::cwg::build_cwg;
use crate::error::{Error, Result};
use crate::garside::{Element, GarsideStructure};
use crate::measures::Valuation;

/// Values a transform can be computed in: exact rationals or floats.
pub trait Scalar:
    Clone + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
}

impl<T> Scalar for T where
    T: Clone + Zero + One + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Neg<Output = T>
{
}

/// D(u) for every simple u, with the signed joins of its subsets.
#[derive(Clone, Debug)]
pub struct DSets {
    sets: Vec<Vec<usize>>,
    subsets: Vec<Vec<(bool, usize)>>,
}

impl DSets {
    pub fn new(g: &GarsideStructure) -> Self {
        let sets: Vec<Vec<usize>> = (0..g.len()).map(|u| d_set(g, u)).collect();
        let subsets = sets.iter().map(|d| signed_joins(g, d)).collect();
        DSets { sets, subsets }
    }

    /// D(u) as simple indices.
    pub fn of_simple(&self, u: usize) -> &[usize] {
        &self.sets[u]
    }

    /// D(x) = D(u) where u is the last block of x.
    pub fn of_element(&self, x: &Element) -> &[usize] {
        &self.sets[x.last_simple()]
    }

    /// Pairs `(odd, ⋁D)` for the subsets D of D(u) whose join exists.
    pub fn signed_joins(&self, u: usize) -> &[(bool, usize)] {
        &self.subsets[u]
    }
}

/// Minimal elements of E(u) = {z ≠ e : τ(u·z) ≤ τ(u)}. Such z make u·z
/// simple, so they are right divisors of simples and the search runs over S.
pub fn d_set(g: &GarsideStructure, u: usize) -> Vec<usize> {
    let e: Vec<usize> = (1..g.len())
        .filter(|&z| g.simple_product(u, z).is_some())
        .collect();
    e.iter()
        .copied()
        .filter(|&z| !e.iter().any(|&y| y != z && g.leq_left(y, z)))
        .collect()
}

/// Subsets of `items` whose join exists, as `(odd cardinality, join)`.
pub fn signed_joins(g: &GarsideStructure, items: &[usize]) -> Vec<(bool, usize)> {
    let mut out = Vec::new();
    fn rec(
        g: &GarsideStructure,
        items: &[usize],
        start: usize,
        join: usize,
        odd: bool,
        out: &mut Vec<(bool, usize)>,
    ) {
        out.push((odd, join));
        for i in start..items.len() {
            if let Some(j) = g.join(join, items[i]) {
                rec(g, items, i + 1, j, !odd, out);
            }
        }
    }
    rec(g, items, 0, 0, false, &mut out);
    out
}

/// The Garside base A[x]: the elements y ≥ₗ x of height at most τ(x) that
/// are minimal for the cylinder order, i.e. no proper normal prefix of y is
/// above x. A[e] is the whole of S.
pub fn garside_base(g: &GarsideStructure, x: &Element) -> Vec<Element> {
    if x.is_unit() {
        return (0..g.len()).map(|s| Element::from_normal(&[s])).collect();
    }
    let k = x.block_count();
    let x1 = x.first_simple();
    let mut out = Vec::new();
    let mut stack: Vec<Vec<usize>> = g
        .upper_set(x1)
        .filter(|&y| y != 0)
        .map(|y| vec![y])
        .collect();
    while let Some(seq) = stack.pop() {
        let y = Element::from_normal(&seq);
        if g.element_leq_left(x, &y) {
            out.push(y);
            continue;
        }
        if seq.len() < k {
            let last = *seq.last().unwrap();
            let target = x.prefix(seq.len() + 1);
            for z in 1..g.len() {
                if g.arrow(last, z) {
                    let mut s = seq.clone();
                    s.push(z);
                    // x ≤ y forces the first j blocks of x below those of y.
                    if g.element_leq_left(&target, &Element::from_normal(&s)) {
                        stack.push(s);
                    }
                }
            }
        }
    }
    out.sort();
    out
}

/// Membership test y ∈ A[x] straight from the definition.
pub fn in_garside_base(g: &GarsideStructure, x: &Element, y: &Element) -> bool {
    if x.is_unit() {
        return y.block_count() <= 1;
    }
    if y.block_count() > x.block_count() || !g.element_leq_left(x, y) {
        return false;
    }
    (1..y.block_count()).all(|j| !g.element_leq_left(x, &y.prefix(j)))
}

/// T f(x) = Σ_{D ⋐ D(x)} (−1)^{|D|} f(x·⋁D).
pub fn graded_mobius<T: Scalar>(
    g: &GarsideStructure,
    ds: &DSets,
    f: &dyn Fn(&Element) -> T,
    x: &Element,
) -> T {
    let mut acc = T::zero();
    for &(odd, j) in ds.signed_joins(x.last_simple()) {
        let v = f(&g.right_multiply_simple(x, j));
        acc = if odd { acc - v } else { acc + v };
    }
    acc
}

/// T* h(x) = Σ_{y ∈ A[x]} h(y), enumerating A[x].
pub fn inverse_graded_mobius<T: Scalar>(
    g: &GarsideStructure,
    h: &dyn Fn(&Element) -> T,
    x: &Element,
) -> T {
    garside_base(g, x)
        .iter()
        .fold(T::zero(), |acc, y| acc + h(y))
}

/// T* h(x) for a finitely supported h, testing membership in A[x] over the
/// support.
pub fn inverse_graded_mobius_sparse<T: Scalar>(
    g: &GarsideStructure,
    h: &HashMap<Element, T>,
    x: &Element,
) -> T {
    h.iter()
        .filter(|(y, _)| in_garside_base(g, x, y))
        .fold(T::zero(), |acc, (_, v)| acc + v.clone())
}

/// Coefficients of a Möbius polynomial, lowest degree first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MobiusPolynomial {
    pub coefficients: Vec<BigInt>,
}

impl MobiusPolynomial {
    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn eval(&self, t: f64) -> f64 {
        horner(&self.as_f64(), t)
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.coefficients
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    pub fn as_rational(&self) -> Vec<BigRational> {
        self.coefficients
            .iter()
            .map(|c| BigRational::from_integer(c.clone()))
            .collect()
    }

    /// Human-readable form such as `1 - 2T + T^3`.
    pub fn format(&self) -> String {
        format_poly(&self.as_rational())
    }
}

pub fn format_poly(c: &[BigRational]) -> String {
    let mut s = String::new();
    for (k, a) in c.iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        let neg = a.is_negative();
        let mag = a.abs();
        if s.is_empty() {
            if neg {
                s.push('-');
            }
        } else {
            s.push_str(if neg { " - " } else { " + " });
        }
        let unit = mag.is_one();
        if k == 0 || !unit {
            s.push_str(&mag.to_string());
        }
        match k {
            0 => {}
            1 => s.push('T'),
            _ => s.push_str(&format!("T^{k}")),
        }
    }
    if s.is_empty() {
        s.push('0');
    }
    s
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * t + a)
}

fn trim<T: Zero>(mut v: Vec<T>) -> Vec<T> {
    while v.len() > 1 && v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
    v
}

/// μ_A = Σ_{D ⋐ Σ} (−1)^{|D|} T^{|⋁D|}.
pub fn mobius_polynomial(g: &GarsideStructure) -> MobiusPolynomial {
    let gens: Vec<usize> = (0..g.presentation().rank())
        .map(|s| g.generator(s as u16))
        .collect();
    let mut c = vec![BigInt::zero(); g.max_simple_len() + 1];
    for (odd, j) in signed_joins(g, &gens) {
        let d = g.simple_len(j);
        if odd {
            c[d] -= 1;
        } else {
            c[d] += 1;
        }
    }
    MobiusPolynomial {
        coefficients: trim(c),
    }
}

/// Which subsets enter the weighted Möbius polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubsetRange {
    /// Subsets of Σ.
    Generators,
    /// Subsets of S∖{e}.
    Simples,
}

/// μ_ω = Σ_D (−1)^{|D|} ω(⋁D) T^{|⋁D|} over the chosen range.
///
/// Over S∖{e} the coefficient of a simple z is the value μ(e, z) of the
/// Möbius function of (S, ≤ₗ), obtained by the usual recursion.
pub fn weighted_mobius_polynomial(
    g: &GarsideStructure,
    w: &Valuation,
    range: SubsetRange,
) -> Vec<BigRational> {
    let mut c = vec![BigRational::zero(); g.max_simple_len() + 1];
    match range {
        SubsetRange::Generators => {
            let gens: Vec<usize> = (0..g.presentation().rank())
                .map(|s| g.generator(s as u16))
                .collect();
            for (odd, j) in signed_joins(g, &gens) {
                let v = w.eval_word(g.word(j));
                let d = g.simple_len(j);
                if odd {
                    c[d] -= v;
                } else {
                    c[d] += v;
                }
            }
        }
        SubsetRange::Simples => {
            let mu = poset_mobius_from_unit(g);
            for z in 0..g.len() {
                if !mu[z].is_zero() {
                    c[g.simple_len(z)] +=
                        BigRational::from_integer(mu[z].clone()) * w.eval_word(g.word(z));
                }
            }
        }
    }
    trim(c)
}

/// μ(e, z) for the poset (S, ≤ₗ); simples are stored in length order.
pub fn poset_mobius_from_unit(g: &GarsideStructure) -> Vec<BigInt> {
    let mut mu = vec![BigInt::zero(); g.len()];
    mu[0] = BigInt::one();
    for z in 1..g.len() {
        let mut s = BigInt::zero();
        for y in 0..z {
            if g.leq_left(y, z) {
                s += &mu[y];
            }
        }
        mu[z] = -s;
    }
    mu
}

/// First `kmax + 1` coefficients of 1/p for a power series with p₀ ≠ 0.
pub fn series_inverse(p: &[BigRational], kmax: usize) -> Result<Vec<BigRational>> {
    let c0 = p
        .first()
        .filter(|c| !c.is_zero())
        .ok_or_else(|| Error::Structural("series with zero constant term".into()))?;
    let inv0 = c0.recip();
    let mut out: Vec<BigRational> = Vec::with_capacity(kmax + 1);
    out.push(inv0.clone());
    for k in 1..=kmax {
        let mut s = BigRational::zero();
        for i in 1..=k.min(p.len() - 1) {
            s += &p[i] * &out[k - i];
        }
        out.push(-s * &inv0);
    }
    Ok(out)
}

/// Growth coefficients Z_ω(0..=kmax), by series inversion of μ_ω and
/// cross-checked against w⁻·M^{k−1}·w⁺ on the monoid CWG.
pub fn growth_coefficients(
    g: &GarsideStructure,
    w: &Valuation,
    kmax: usize,
) -> Result<Vec<BigRational>> {
    let mu = weighted_mobius_polynomial(g, w, SubsetRange::Generators);
    let series = series_inverse(&mu, kmax)?;
    let cwg = build_cwg(g, w)?;
    let z = cwg.partition_functions_exact(kmax)?;
    for k in 1..=kmax {
        if z[k] != series[k] {
            return Err(Error::Consistency(format!(
                "growth coefficient {k}: series {} vs matrix {}",
                series[k], z[k]
            )));
        }
    }
    Ok(series)
}

/// Smallest root of a polynomial in (0, 1), located by a sign change on a
/// grid, then bisection and a Newton polish.
pub fn smallest_root_in_unit_interval(c: &[f64]) -> Result<f64> {
    let f = |t: f64| horner(c, t);
    let steps = 20_000;
    let mut a = 0.0;
    let mut fa = f(a);
    if fa == 0.0 {
        return Err(Error::Structural("polynomial vanishes at 0".into()));
    }
    for i in 1..steps {
        let b = i as f64 / steps as f64;
        let fb = f(b);
        if fb == 0.0 {
            return Ok(b);
        }
        if fa.signum() != fb.signum() {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if f(mid).signum() == fa.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let mut t = 0.5 * (lo + hi);
            let d: Vec<f64> = c.iter().enumerate().skip(1).map(|(k, a)| *a * k as f64).collect();
            for _ in 0..3 {
                let dv = horner(&d, t);
                if dv != 0.0 {
                    let next = t - f(t) / dv;
                    if next > a && next < b {
                        t = next;
                    }
                }
            }
            return Ok(t);
        }
        a = b;
        fa = fb;
    }
    Err(Error::Structural("no sign change of the Möbius polynomial in (0,1)".into()))
}

/// p₀ for the unweighted Möbius polynomial.
pub fn smallest_root_p0(mu: &MobiusPolynomial) -> Result<f64> {
    let p0 = smallest_root_in_unit_interval(&mu.as_f64())?;
    if mu.eval(p0).abs() > 1e-9 {
        return Err(Error::Consistency(format!("residual {} at p0", mu.eval(p0))));
    }
    Ok(p0)
}
