//! Brute-force reference implementations shared by the integration tests.
//!
//! Nothing here goes through `WordEngine`: word classes come from exhaustive
//! enumeration of all words of a given length and a union-find over single
//! relation moves.

#![allow(dead_code)]

use std::collections::HashMap;

use atm::garside::{compute_garside, GarsideConfig, GarsideStructure};
use atm::measures::BoundaryChain;
use atm::presentation::{self, Gen, MonoidPresentation};

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect() }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn encode(w: &[Gen], rank: usize) -> usize {
    w.iter().fold(0, |acc, &g| acc * rank + g as usize)
}

fn decode(mut code: usize, len: usize, rank: usize) -> Vec<Gen> {
    let mut w = vec![0; len];
    for i in (0..len).rev() {
        w[i] = (code % rank) as Gen;
        code /= rank;
    }
    w
}

/// All equivalence classes of words up to a fixed length.
pub struct BfsEnumeration {
    pub rank: usize,
    pub max_len: usize,
    /// `classes[k]` lists the classes of length k, each as its sorted members.
    pub classes: Vec<Vec<Vec<Vec<Gen>>>>,
    class_of: Vec<Vec<usize>>,
}

pub fn enumerate_classes(p: &MonoidPresentation, max_len: usize) -> BfsEnumeration {
    let rank = p.rank();
    let mut moves: Vec<(Vec<Gen>, Vec<Gen>)> = Vec::new();
    for r in p.relations() {
        moves.push((r.lhs.clone(), r.rhs.clone()));
        moves.push((r.rhs.clone(), r.lhs.clone()));
    }
    let mut classes = Vec::new();
    let mut class_of = Vec::new();
    for k in 0..=max_len {
        let total = rank.pow(k as u32);
        let mut dsu = Dsu::new(total);
        for code in 0..total {
            let w = decode(code, k, rank);
            for (u, v) in &moves {
                if u.len() > k {
                    continue;
                }
                for i in 0..=k - u.len() {
                    if &w[i..i + u.len()] == u.as_slice() {
                        let mut x = w.clone();
                        x[i..i + u.len()].copy_from_slice(v);
                        dsu.union(code, encode(&x, rank));
                    }
                }
            }
        }
        let mut ids: HashMap<usize, usize> = HashMap::new();
        let mut members: Vec<Vec<Vec<Gen>>> = Vec::new();
        let mut of = vec![0; total];
        for code in 0..total {
            let root = dsu.find(code);
            let next = ids.len();
            let id = *ids.entry(root).or_insert(next);
            if id == members.len() {
                members.push(Vec::new());
            }
            members[id].push(decode(code, k, rank));
            of[code] = id;
        }
        classes.push(members);
        class_of.push(of);
    }
    BfsEnumeration {
        rank,
        max_len,
        classes,
        class_of,
    }
}

impl BfsEnumeration {
    pub fn count(&self, k: usize) -> usize {
        self.classes[k].len()
    }

    pub fn class_id(&self, w: &[Gen]) -> usize {
        assert!(w.len() <= self.max_len, "oracle enumerated only up to {}", self.max_len);
        self.class_of[w.len()][encode(w, self.rank)]
    }

    pub fn members(&self, w: &[Gen]) -> &[Vec<Gen>] {
        &self.classes[w.len()][self.class_id(w)]
    }

    pub fn equal(&self, u: &[Gen], v: &[Gen]) -> bool {
        u.len() == v.len() && self.class_id(u) == self.class_id(v)
    }

    pub fn canonical(&self, w: &[Gen]) -> Vec<Gen> {
        self.members(w)[0].clone()
    }

    pub fn left_divides(&self, u: &[Gen], v: &[Gen]) -> bool {
        if u.len() > v.len() {
            return false;
        }
        let cu = self.class_id(u);
        self.members(v).iter().any(|m| self.class_id(&m[..u.len()]) == cu)
    }

    pub fn right_divides(&self, u: &[Gen], v: &[Gen]) -> bool {
        if u.len() > v.len() {
            return false;
        }
        let cu = self.class_id(u);
        let off = v.len() - u.len();
        self.members(v).iter().any(|m| self.class_id(&m[off..]) == cu)
    }

    /// Classes of left divisors of `w`, by canonical word.
    pub fn left_divisor_classes(&self, w: &[Gen]) -> Vec<Vec<Gen>> {
        let mut out: Vec<Vec<Gen>> = Vec::new();
        for m in self.members(w) {
            for i in 0..=m.len() {
                let c = self.canonical(&m[..i]);
                if !out.contains(&c) {
                    out.push(c);
                }
            }
        }
        out.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
        out
    }
}

/// Whether `x → y`: `x` is the join of all simples left-dividing `x·y`.
pub fn brute_arrow(o: &BfsEnumeration, simples: &[Vec<Gen>], x: &[Gen], y: &[Gen]) -> bool {
    let xy: Vec<Gen> = x.iter().chain(y).copied().collect();
    let divisors: Vec<&Vec<Gen>> = simples.iter().filter(|z| o.left_divides(z, &xy)).collect();
    let uppers: Vec<&Vec<Gen>> = simples
        .iter()
        .filter(|z| divisors.iter().all(|d| o.left_divides(d, z)))
        .collect();
    let join = uppers
        .iter()
        .find(|z| uppers.iter().all(|u| o.left_divides(z, u)));
    match join {
        Some(z) => o.equal(z, x),
        None => false,
    }
}

/// ν(↑x) as the chain probability that `x` left-divides the product of the
/// first J blocks, J at least the height of `x`. Normal sequences are
/// enumerated with the library's arrow relation; divisibility goes through
/// the oracle.
pub fn brute_measure_check(
    g: &GarsideStructure,
    bc: &BoundaryChain,
    o: &BfsEnumeration,
    x: &[Gen],
    blocks: usize,
) -> f64 {
    if x.is_empty() {
        return (1..g.len()).map(|s| bc.h[s]).sum();
    }
    let mut total = 0.0;
    let mut stack: Vec<(Vec<usize>, f64)> = (1..g.len()).map(|s| (vec![s], bc.h[s])).collect();
    while let Some((seq, p)) = stack.pop() {
        if p == 0.0 {
            continue;
        }
        if seq.len() == blocks {
            let w: Vec<Gen> = seq.iter().flat_map(|&s| g.word(s).to_vec()).collect();
            if o.left_divides(x, &w) {
                total += p;
            }
            continue;
        }
        let last = *seq.last().unwrap();
        for y in 1..g.len() {
            if g.arrow(last, y) {
                let mut next = seq.clone();
                next.push(y);
                stack.push((next, p * bc.transition(last, y)));
            }
        }
    }
    total
}

pub fn garside(p: &MonoidPresentation) -> GarsideStructure {
    compute_garside(p, GarsideConfig::default()).expect("garside closure")
}

pub fn a2() -> GarsideStructure {
    garside(&presentation::affine_a2().unwrap())
}

pub fn braid(n: usize) -> GarsideStructure {
    garside(&presentation::braid(n).unwrap())
}

pub fn free(n: usize) -> GarsideStructure {
    garside(&presentation::free(n).unwrap())
}

/// Irreducible heap on a, b, c with only a and b commuting.
pub fn heap3() -> GarsideStructure {
    garside(&presentation::heap(3, &[(0, 1)]).unwrap())
}

pub fn dual3() -> GarsideStructure {
    garside(&presentation::dual_a(3).unwrap())
}

pub fn dihedral(m: u32) -> GarsideStructure {
    garside(&presentation::dihedral(m).unwrap())
}

pub fn word(g: &GarsideStructure, s: &str) -> Vec<Gen> {
    g.presentation().parse_word(s).unwrap()
}

pub fn simple(g: &GarsideStructure, s: &str) -> usize {
    g.simple_by_name(s).unwrap().unwrap_or_else(|| panic!("{s} is not simple"))
}

/// Sorted canonical words of a list of simple indices.
pub fn names(g: &GarsideStructure, items: &[usize]) -> Vec<String> {
    let mut v: Vec<String> = items.iter().map(|&s| g.format_simple(s)).collect();
    v.sort();
    v
}

use atm::garside::Element;
use atm::mobius::{graded_mobius, inverse_graded_mobius, inverse_graded_mobius_sparse, DSets};
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;

/// A random rational function supported on `count` elements of length at
/// most `max_len`.
pub fn random_function<R: Rng>(
    g: &GarsideStructure,
    elements: &[Element],
    count: usize,
    rng: &mut R,
) -> HashMap<Element, BigRational> {
    let mut f = HashMap::new();
    while f.len() < count.min(elements.len()) {
        let x = elements[rng.gen_range(0..elements.len())].clone();
        let num: i64 = rng.gen_range(-9..=9);
        let den: i64 = rng.gen_range(1..=5);
        if num != 0 {
            f.insert(x, BigRational::new(num.into(), den.into()));
        }
    }
    let _ = g;
    f
}

fn lookup(f: &HashMap<Element, BigRational>, x: &Element) -> BigRational {
    f.get(x).cloned().unwrap_or_else(BigRational::zero)
}

/// Checks T(T*h) = h and T*(T f) = f on every element of `domain`, for a
/// finitely supported `f` whose support lies in `domain`.
pub fn mobius_roundtrip(
    g: &GarsideStructure,
    ds: &DSets,
    f: &HashMap<Element, BigRational>,
    domain: &[Element],
) -> (bool, bool) {
    let tf: HashMap<Element, BigRational> = domain
        .iter()
        .map(|x| (x.clone(), graded_mobius(g, ds, &|y: &Element| lookup(f, y), x)))
        .filter(|(_, v)| !v.is_zero())
        .collect();
    let inverse_of_t = domain
        .iter()
        .all(|x| inverse_graded_mobius(g, &|y: &Element| lookup(&tf, y), x) == lookup(f, x));
    let t_of_inverse = domain.iter().all(|x| {
        graded_mobius(g, ds, &|y: &Element| inverse_graded_mobius_sparse(g, f, y), x) == lookup(f, x)
    });
    (t_of_inverse, inverse_of_t)
}
