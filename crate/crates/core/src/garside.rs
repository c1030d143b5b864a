//! The smallest Garside set S, the normality relation, greedy normal forms,
//! the Charney graph and structural checks.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use fixedbitset::FixedBitSet;
use num_integer::Integer;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::presentation::{is_irreducible, CoxeterLength, Gen, MonoidPresentation};
use crate::words::{LcmSearch, WordClass, WordEngine, DEFAULT_CLASS_CAP};

const NONE: u32 = u32::MAX;

/// Default cap on |S|.
pub const DEFAULT_SIZE_CAP: usize = 5000;

#[derive(Clone, Copy, Debug)]
pub struct GarsideConfig {
    pub class_cap: usize,
    pub size_cap: usize,
}

impl Default for GarsideConfig {
    fn default() -> Self {
        GarsideConfig {
            class_cap: DEFAULT_CLASS_CAP,
            size_cap: DEFAULT_SIZE_CAP,
        }
    }
}

/// A left divisor `word` of a simple, with the simple quotient.
#[derive(Clone, Debug)]
pub struct LeftDivisor {
    pub word: Vec<Gen>,
    pub simple: Option<usize>,
    pub quotient: usize,
}

/// An element stored as its normal sequence of non-unit simple indices;
/// the unit has no blocks.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Element {
    blocks: Vec<u32>,
}

impl Element {
    pub fn unit() -> Self {
        Element { blocks: Vec::new() }
    }

    /// Wraps a normal sequence. Unit entries are dropped; consecutive pairs
    /// must satisfy the arrow relation (not checked here).
    pub fn from_normal(blocks: &[usize]) -> Self {
        Element {
            blocks: blocks.iter().filter(|&&b| b != 0).map(|&b| b as u32).collect(),
        }
    }

    pub fn is_unit(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.blocks.iter().map(|&b| b as usize)
    }

    /// The normal sequence, `(e)` for the unit.
    pub fn normal_sequence(&self) -> Vec<usize> {
        if self.blocks.is_empty() {
            vec![0]
        } else {
            self.blocks().collect()
        }
    }

    /// Height τ: number of blocks of the normal form, the unit counting as
    /// the one-block sequence `(e)`.
    pub fn height(&self) -> usize {
        self.blocks.len().max(1)
    }

    /// Number of non-unit blocks.
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn last_simple(&self) -> usize {
        self.blocks.last().map_or(0, |&b| b as usize)
    }

    pub fn first_simple(&self) -> usize {
        self.blocks.first().map_or(0, |&b| b as usize)
    }

    /// Prefix made of the first `j` blocks.
    pub fn prefix(&self, j: usize) -> Element {
        Element {
            blocks: self.blocks[..j.min(self.blocks.len())].to_vec(),
        }
    }

    /// Everything except the last block.
    pub fn without_last(&self) -> Element {
        let n = self.blocks.len().saturating_sub(1);
        self.prefix(n)
    }

    fn tail(&self) -> Element {
        Element {
            blocks: self.blocks.get(1..).map_or(Vec::new(), |s| s.to_vec()),
        }
    }
}

/// L(x), R(x) and the letter set of a simple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LrSets {
    pub left: Vec<Gen>,
    pub right: Vec<Gen>,
    pub letters: Vec<Gen>,
}

/// Charney graph with its strong-connectivity verdict.
#[derive(Clone, Debug)]
pub struct CharneyGraph {
    pub vertices: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    pub components: Vec<Vec<usize>>,
    pub strongly_connected: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomReport {
    pub checks: Vec<AxiomCheck>,
    /// Spherical type with exactly two generators.
    pub two_generator_spherical: bool,
    pub caveat: Option<String>,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub struct GarsideStructure {
    presentation: MonoidPresentation,
    engine: WordEngine,
    simples: Vec<Vec<Gen>>,
    index: HashMap<Vec<Gen>, usize>,
    generators: Vec<usize>,
    max_len: usize,
    left_divs: Vec<Vec<LeftDivisor>>,
    down_l: Vec<FixedBitSet>,
    up_l: Vec<FixedBitSet>,
    down_r: Vec<FixedBitSet>,
    lq: Vec<u32>,
    head: Vec<u32>,
    tail: Vec<u32>,
    join: Vec<u32>,
    delta: Option<usize>,
    unresolved_lcm: usize,
}

fn letters_pairwise_finite(p: &MonoidPresentation, c: &WordClass) -> bool {
    let mut seen = BTreeSet::new();
    for &g in c.representative() {
        seen.insert(g);
    }
    let v: Vec<Gen> = seen.into_iter().collect();
    for i in 0..v.len() {
        for j in (i + 1)..v.len() {
            if p.coxeter_length(v[i], v[j]) == Some(CoxeterLength::Infinite) {
                return false;
            }
        }
    }
    true
}

/// Computes S as the closure of Σ ∪ {e} under right divisors and existing
/// left lcms.
///
/// For Coxeter presentations the lcm search only walks through square-free
/// multiples whose letters are pairwise linked by finite lengths: both
/// properties are inherited by left divisors and hold on S, so the pruning
/// never hides a simple lcm.
pub fn compute_garside(p: &MonoidPresentation, cfg: GarsideConfig) -> Result<GarsideStructure> {
    let engine = WordEngine::new(p, cfg.class_cap);
    let prune = p.is_coxeter();
    let keep = |c: &WordClass| !prune || (!c.has_square() && letters_pairwise_finite(p, c));

    let mut set: HashSet<Vec<Gen>> = HashSet::new();
    set.insert(Vec::new());
    for g in 0..p.rank() as Gen {
        set.insert(vec![g]);
    }
    let mut memo: HashMap<(Vec<Gen>, Vec<Gen>), (usize, LcmSearch)> = HashMap::new();
    loop {
        let mut changed = false;
        let snapshot: Vec<Vec<Gen>> = set.iter().cloned().collect();
        for x in &snapshot {
            for (d, _) in engine.right_divisors(x)? {
                if set.insert(d) {
                    changed = true;
                }
            }
        }
        let mut members: Vec<Vec<Gen>> = set.iter().filter(|w| !w.is_empty()).cloned().collect();
        members.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
        let longest = members.iter().map(Vec::len).max().unwrap_or(0);
        let bound = (2 * longest).max(p.max_relation_length()).min(cfg.class_cap);
        for i in 0..members.len() {
            for j in (i + 1)..members.len() {
                let key = (members[i].clone(), members[j].clone());
                let result = match memo.get(&key) {
                    Some((_, LcmSearch::Found(z))) => LcmSearch::Found(z.clone()),
                    Some((b, LcmSearch::NotFound)) if *b >= bound => continue,
                    _ => {
                        let r = engine.left_lcm_search(&key.1, &key.0, bound, &keep)?;
                        memo.insert(key, (bound, r.clone()));
                        r
                    }
                };
                if let LcmSearch::Found(z) = result {
                    if set.insert(z) {
                        changed = true;
                        if set.len() > cfg.size_cap {
                            return Err(Error::GarsideCap {
                                cap: cfg.size_cap,
                                found: set.len(),
                                unresolved: memo
                                    .values()
                                    .filter(|(_, r)| *r == LcmSearch::NotFound)
                                    .count(),
                            });
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let unresolved = memo
        .values()
        .filter(|(_, r)| *r == LcmSearch::NotFound)
        .count();
    let mut simples: Vec<Vec<Gen>> = set.into_iter().collect();
    simples.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
    GarsideStructure::assemble(p.clone(), engine, simples, unresolved)
}

impl GarsideStructure {
    fn assemble(
        presentation: MonoidPresentation,
        engine: WordEngine,
        simples: Vec<Vec<Gen>>,
        unresolved_lcm: usize,
    ) -> Result<Self> {
        let n = simples.len();
        let index: HashMap<Vec<Gen>, usize> =
            simples.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        let max_len = simples.iter().map(Vec::len).max().unwrap_or(0);
        let generators = (0..presentation.rank())
            .map(|g| index[&vec![g as Gen]])
            .collect();

        let mut left_divs = Vec::with_capacity(n);
        let mut down_l = vec![FixedBitSet::with_capacity(n); n];
        let mut up_l = vec![FixedBitSet::with_capacity(n); n];
        let mut down_r = vec![FixedBitSet::with_capacity(n); n];
        let mut lq = vec![NONE; n * n];
        for (x, w) in simples.iter().enumerate() {
            let mut list = Vec::new();
            for (d, q) in engine.left_divisors(w)? {
                let quotient = *index.get(&q).ok_or_else(|| {
                    Error::Consistency("right divisor of a simple is not simple".into())
                })?;
                let simple = index.get(&d).copied();
                if let Some(a) = simple {
                    down_l[x].insert(a);
                    up_l[a].insert(x);
                    lq[a * n + x] = quotient as u32;
                }
                list.push(LeftDivisor {
                    word: d,
                    simple,
                    quotient,
                });
            }
            left_divs.push(list);
            for (d, _) in engine.right_divisors(w)? {
                let a = *index.get(&d).ok_or_else(|| {
                    Error::Consistency("right divisor of a simple is not simple".into())
                })?;
                down_r[x].insert(a);
            }
        }

        let mut head = vec![NONE; n * n];
        let mut tail = vec![NONE; n * n];
        for s in 0..n {
            for x in 0..n {
                let mut best: Option<(usize, usize, usize)> = None;
                for d in &left_divs[x] {
                    let len = simples[s].len() + d.word.len();
                    if len > max_len || best.is_some_and(|b| b.0 >= d.word.len()) {
                        continue;
                    }
                    let mut w = simples[s].clone();
                    w.extend_from_slice(&d.word);
                    if let Some(&h) = index.get(&engine.canonical(&w)?) {
                        best = Some((d.word.len(), h, d.quotient));
                    }
                }
                let (_, h, t) = best.ok_or_else(|| Error::Consistency("empty head".into()))?;
                head[s * n + x] = h as u32;
                tail[s * n + x] = t as u32;
            }
        }

        let mut join = vec![NONE; n * n];
        for a in 0..n {
            for b in a..n {
                let mut common = up_l[a].clone();
                common.intersect_with(&up_l[b]);
                let Some(m) = common.ones().min_by_key(|&z| simples[z].len()) else {
                    continue;
                };
                if !common.is_subset(&up_l[m]) {
                    return Err(Error::Consistency(format!(
                        "no least common multiple in S for {:?} and {:?}",
                        simples[a], simples[b]
                    )));
                }
                join[a * n + b] = m as u32;
                join[b * n + a] = m as u32;
            }
        }

        let delta = (0..n).find(|&x| down_l[x].count_ones(..) == n);

        Ok(GarsideStructure {
            presentation,
            engine,
            simples,
            index,
            generators,
            max_len,
            left_divs,
            down_l,
            up_l,
            down_r,
            lq,
            head,
            tail,
            join,
            delta,
            unresolved_lcm,
        })
    }

    pub fn presentation(&self) -> &MonoidPresentation {
        &self.presentation
    }

    pub fn engine(&self) -> &WordEngine {
        &self.engine
    }

    /// Number of simples, unit included.
    pub fn len(&self) -> usize {
        self.simples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simples.is_empty()
    }

    pub fn simples(&self) -> &[Vec<Gen>] {
        &self.simples
    }

    pub fn word(&self, x: usize) -> &[Gen] {
        &self.simples[x]
    }

    pub fn simple_len(&self, x: usize) -> usize {
        self.simples[x].len()
    }

    pub fn max_simple_len(&self) -> usize {
        self.max_len
    }

    pub fn generator(&self, g: Gen) -> usize {
        self.generators[g as usize]
    }

    /// Index of the simple represented by `w`, if `w` is simple.
    pub fn simple_index(&self, w: &[Gen]) -> Result<Option<usize>> {
        if w.len() > self.max_len {
            return Ok(None);
        }
        Ok(self.index.get(&self.engine.canonical(w)?).copied())
    }

    pub fn simple_by_name(&self, text: &str) -> Result<Option<usize>> {
        let w = self.presentation.parse_word(text)?;
        self.simple_index(&w)
    }

    pub fn left_divisors(&self, x: usize) -> &[LeftDivisor] {
        &self.left_divs[x]
    }

    pub fn delta(&self) -> Option<usize> {
        self.delta
    }

    pub fn is_spherical(&self) -> bool {
        self.delta.is_some()
    }

    /// Number of pairs whose lcm search ended without a result.
    pub fn unresolved_lcm_searches(&self) -> usize {
        self.unresolved_lcm
    }

    pub fn leq_left(&self, a: usize, b: usize) -> bool {
        self.down_l[b].contains(a)
    }

    pub fn leq_right(&self, a: usize, b: usize) -> bool {
        self.down_r[b].contains(a)
    }

    /// Simples above `a` for ≤ₗ.
    pub fn upper_set(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        self.up_l[a].ones()
    }

    /// The simple `r` with `a·r = b`, when `a ≤ₗ b`.
    pub fn left_quotient(&self, a: usize, b: usize) -> Option<usize> {
        let r = self.lq[a * self.len() + b];
        (r != NONE).then_some(r as usize)
    }

    /// Left lcm of two simples, when it exists.
    pub fn join(&self, a: usize, b: usize) -> Option<usize> {
        let r = self.join[a * self.len() + b];
        (r != NONE).then_some(r as usize)
    }

    pub fn join_all(&self, items: &[usize]) -> Option<usize> {
        items.iter().try_fold(0usize, |acc, &x| self.join(acc, x))
    }

    /// Product `s·x` of two simples, when it is simple.
    pub fn simple_product(&self, s: usize, x: usize) -> Option<usize> {
        let (h, t) = self.normalize_pair(s, x);
        (t == 0).then_some(h)
    }

    /// Normal form `(head, tail)` of the product of two simples.
    pub fn normalize_pair(&self, s: usize, x: usize) -> (usize, usize) {
        let k = s * self.len() + x;
        (self.head[k] as usize, self.tail[k] as usize)
    }

    /// x → y: x is the head of x·y.
    pub fn arrow(&self, x: usize, y: usize) -> bool {
        self.normalize_pair(x, y).0 == x
    }

    pub fn element_from_simple(&self, x: usize) -> Element {
        Element::from_normal(&[x])
    }

    /// Normal form of s·x for a simple s.
    pub fn left_multiply_simple(&self, s: usize, x: &Element) -> Element {
        let mut carry = s;
        let mut out = Vec::with_capacity(x.blocks.len() + 1);
        for b in x.blocks() {
            let (h, t) = self.normalize_pair(carry, b);
            out.push(h as u32);
            carry = t;
        }
        if carry != 0 {
            out.push(carry as u32);
        }
        Element { blocks: out }
    }

    pub fn right_multiply_simple(&self, x: &Element, s: usize) -> Element {
        self.multiply(x, &self.element_from_simple(s))
    }

    pub fn multiply(&self, x: &Element, y: &Element) -> Element {
        let mut acc = y.clone();
        for b in x.blocks.iter().rev() {
            acc = self.left_multiply_simple(*b as usize, &acc);
        }
        acc
    }

    /// Normal form of a word, absorbing one generator at a time.
    pub fn normal_form(&self, w: &[Gen]) -> Element {
        let mut acc = Element::unit();
        for &g in w.iter().rev() {
            acc = self.left_multiply_simple(self.generator(g), &acc);
        }
        acc
    }

    pub fn parse_element(&self, text: &str) -> Result<Element> {
        Ok(self.normal_form(&self.presentation.parse_word(text)?))
    }

    /// Total length |x|.
    pub fn length(&self, x: &Element) -> usize {
        x.blocks().map(|b| self.simples[b].len()).sum()
    }

    /// A representative word: concatenated canonical words of the blocks.
    pub fn element_word(&self, x: &Element) -> Vec<Gen> {
        x.blocks()
            .flat_map(|b| self.simples[b].iter().copied())
            .collect()
    }

    pub fn format_simple(&self, x: usize) -> String {
        self.presentation.format_word(&self.simples[x])
    }

    /// Blocks separated by ` | `, or `e` for the unit.
    pub fn format_element(&self, x: &Element) -> String {
        if x.is_unit() {
            return "e".into();
        }
        x.blocks()
            .map(|b| self.format_simple(b))
            .collect::<Vec<_>>()
            .join(" | ")
    }

    /// When `x ≤ₗ y`, the quotient `z` with `x·z = y`.
    pub fn element_left_divides(&self, x: &Element, y: &Element) -> Option<Element> {
        let mut cur = y.clone();
        for b in x.blocks() {
            let h = cur.first_simple();
            let r = self.left_quotient(b, h)?;
            cur = self.left_multiply_simple(r, &cur.tail());
        }
        Some(cur)
    }

    pub fn element_leq_left(&self, x: &Element, y: &Element) -> bool {
        self.length(x) <= self.length(y) && self.element_left_divides(x, y).is_some()
    }

    pub fn is_normal_sequence(&self, blocks: &[usize]) -> bool {
        blocks.iter().all(|&b| b != 0) && blocks.windows(2).all(|p| self.arrow(p[0], p[1]))
    }

    /// All elements of length at most `max_len`, in depth-first order of
    /// normal sequences.
    pub fn elements_up_to(&self, max_len: usize) -> Vec<Element> {
        let mut out = vec![Element::unit()];
        let mut stack: Vec<(Vec<u32>, usize)> = Vec::new();
        for x in 1..self.len() {
            if self.simples[x].len() <= max_len {
                stack.push((vec![x as u32], self.simples[x].len()));
            }
        }
        while let Some((blocks, len)) = stack.pop() {
            let last = *blocks.last().unwrap() as usize;
            for y in 1..self.len() {
                let l = len + self.simples[y].len();
                if l <= max_len && self.arrow(last, y) {
                    let mut b = blocks.clone();
                    b.push(y as u32);
                    stack.push((b, l));
                }
            }
            out.push(Element { blocks });
        }
        out.sort_by_key(|e| (self.length(e), e.clone()));
        out
    }

    pub fn lr_sets(&self, x: usize) -> LrSets {
        let rank = self.presentation.rank() as Gen;
        let letters: Vec<Gen> = self.simples[x]
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let left = (0..rank)
            .filter(|&g| self.leq_left(self.generator(g), x))
            .collect();
        let right = (0..rank)
            .filter(|&s| {
                self.leq_right(self.generator(s), x)
                    || letters.iter().any(|&eta| {
                        eta != s && self.join(self.generator(s), self.generator(eta)).is_none()
                    })
            })
            .collect();
        LrSets {
            left,
            right,
            letters,
        }
    }

    /// Sufficient condition L(y) ⊆ R(x) for x → y.
    pub fn normality_criterion(&self, x: usize, y: usize) -> bool {
        let r = self.lr_sets(x).right;
        self.lr_sets(y).left.iter().all(|g| r.contains(g))
    }

    /// Vertices of the Charney graph: S∖{e,Δ} in spherical type, S∖{e}
    /// otherwise.
    pub fn charney_vertices(&self) -> Vec<usize> {
        (1..self.len()).filter(|&x| Some(x) != self.delta).collect()
    }

    /// Charney graph; refuses reducible monoids.
    pub fn charney_graph(&self) -> Result<CharneyGraph> {
        self.require_irreducible()?;
        Ok(self.charney_graph_unchecked())
    }

    pub fn charney_graph_unchecked(&self) -> CharneyGraph {
        let vertices = self.charney_vertices();
        let mut g = DiGraph::<usize, ()>::new();
        let nodes: Vec<_> = vertices.iter().map(|&v| g.add_node(v)).collect();
        let mut edges = Vec::new();
        for (i, &x) in vertices.iter().enumerate() {
            for (j, &y) in vertices.iter().enumerate() {
                if self.arrow(x, y) {
                    edges.push((x, y));
                    g.add_edge(nodes[i], nodes[j], ());
                }
            }
        }
        let mut components: Vec<Vec<usize>> = tarjan_scc(&g)
            .into_iter()
            .map(|c| {
                let mut v: Vec<usize> = c.into_iter().map(|n| g[n]).collect();
                v.sort();
                v
            })
            .collect();
        components.sort();
        CharneyGraph {
            strongly_connected: components.len() == 1,
            vertices,
            edges,
            components,
        }
    }

    pub fn require_irreducible(&self) -> Result<()> {
        let irr = is_irreducible(&self.presentation);
        if irr.irreducible {
            Ok(())
        } else {
            Err(Error::Reducible(
                irr.components
                    .iter()
                    .map(|c| c.iter().map(|&g| self.presentation.symbol(g).to_string()).collect())
                    .collect(),
            ))
        }
    }

    /// Type FC: every left divisor of a simple is simple.
    pub fn is_type_fc(&self) -> bool {
        self.left_divs
            .iter()
            .all(|l| l.iter().all(|d| d.simple.is_some()))
    }

    /// gcd of the lengths Σ|zᵢ| of the cycles of the Charney graph, computed
    /// from a spanning tree and its chords. `None` when the graph is not
    /// strongly connected.
    pub fn charney_cycle_gcd(&self) -> Option<u64> {
        let cg = self.charney_graph_unchecked();
        if !cg.strongly_connected || cg.vertices.is_empty() {
            return None;
        }
        let mut pot: HashMap<usize, i64> = HashMap::new();
        let root = cg.vertices[0];
        pot.insert(root, 0);
        let mut queue = std::collections::VecDeque::from([root]);
        let mut out: HashMap<usize, Vec<usize>> = HashMap::new();
        for &(x, y) in &cg.edges {
            out.entry(x).or_default().push(y);
        }
        while let Some(x) = queue.pop_front() {
            for &y in out.get(&x).map_or(&[][..], |v| v.as_slice()) {
                if !pot.contains_key(&y) {
                    pot.insert(y, pot[&x] + self.simples[x].len() as i64);
                    queue.push_back(y);
                }
            }
        }
        let mut g: u64 = 0;
        for &(x, y) in &cg.edges {
            let d = pot[&x] + self.simples[x].len() as i64 - pot[&y];
            g = g.gcd(&d.unsigned_abs());
        }
        Some(g)
    }

    /// Bounded checks of the axioms P1–P7.
    pub fn check_axioms(&self) -> AxiomReport {
        let sample_len = 4usize.min(self.engine.cap());
        let mut checks = Vec::new();

        let p1 = self.check_length_function(sample_len);
        checks.push(AxiomCheck {
            name: "P1",
            passed: p1.is_ok(),
            detail: p1.unwrap_or_else(|e| e),
        });
        let p2 = self.check_cancellativity(sample_len);
        checks.push(AxiomCheck {
            name: "P2",
            passed: p2.is_ok(),
            detail: p2.unwrap_or_else(|e| e),
        });
        let p3 = self.check_gcds(3.min(sample_len));
        checks.push(AxiomCheck {
            name: "P3",
            passed: p3.is_ok(),
            detail: p3.unwrap_or_else(|e| e),
        });
        checks.push(AxiomCheck {
            name: "P4",
            passed: true,
            detail: format!(
                "finite Garside set with {} simples ({} lcm searches unresolved within bound)",
                self.len(),
                self.unresolved_lcm
            ),
        });
        let cg = self.charney_graph_unchecked();
        let irreducible = is_irreducible(&self.presentation).irreducible;
        checks.push(AxiomCheck {
            name: "P5",
            passed: cg.strongly_connected && irreducible,
            detail: format!(
                "Charney graph: {} vertices, {} strongly connected components{}",
                cg.vertices.len(),
                cg.components.len(),
                if irreducible { "" } else { ", presentation reducible" }
            ),
        });
        let gcd = self.charney_cycle_gcd();
        checks.push(AxiomCheck {
            name: "P6",
            passed: gcd == Some(1),
            detail: match gcd {
                Some(g) => format!("gcd of cycle lengths = {g}"),
                None => "Charney graph not strongly connected".into(),
            },
        });
        let p7 = if self.is_spherical() {
            let max_out = cg
                .vertices
                .iter()
                .map(|&x| cg.edges.iter().filter(|e| e.0 == x).count())
                .max()
                .unwrap_or(0);
            (max_out >= 2, format!("maximal out-degree in the Charney graph = {max_out}"))
        } else {
            (true, "S has no maximum".into())
        };
        checks.push(AxiomCheck {
            name: "P7",
            passed: p7.0,
            detail: p7.1,
        });
        let two = self.is_spherical() && self.presentation.rank() == 2;
        AxiomReport {
            checks,
            two_generator_spherical: two,
            caveat: two.then(|| {
                "spherical type with two generators: the central limit theorem degenerates for \
                 statistics that are combinations of the length and the alternating function"
                    .to_string()
            }),
        }
    }

    fn check_length_function(&self, max: usize) -> std::result::Result<String, String> {
        for r in self.presentation.relations() {
            if r.lhs.len() != r.rhs.len() {
                return Err("a relation changes the length".into());
            }
        }
        let mut count = 0;
        for k in 1..=max {
            for w in self.engine.elements_of_length(k).map_err(|e| e.to_string())? {
                let c = self.engine.class(&w).map_err(|e| e.to_string())?;
                if c.members().iter().any(|m| m.len() != k) {
                    return Err(format!("class of {w:?} mixes lengths"));
                }
                count += 1;
            }
        }
        Ok(format!("length additive on {count} classes up to length {max}"))
    }

    fn check_cancellativity(&self, max: usize) -> std::result::Result<String, String> {
        let mut count = 0;
        for k in 2..=max {
            for w in self.engine.elements_of_length(k).map_err(|e| e.to_string())? {
                let c = self.engine.class(&w).map_err(|e| e.to_string())?;
                for first in [true, false] {
                    let mut groups: HashMap<Gen, Vec<&[Gen]>> = HashMap::new();
                    for m in c.members() {
                        if first {
                            groups.entry(m[0]).or_default().push(&m[1..]);
                        } else {
                            groups.entry(m[k - 1]).or_default().push(&m[..k - 1]);
                        }
                    }
                    for rest in groups.values() {
                        let c0 = self.engine.class(rest[0]).map_err(|e| e.to_string())?;
                        if rest.iter().any(|r| !c0.contains(r)) {
                            return Err(format!(
                                "{} cancellativity fails on {}",
                                if first { "left" } else { "right" },
                                self.presentation.format_word(&w)
                            ));
                        }
                    }
                }
                count += 1;
            }
        }
        Ok(format!("left and right cancellation verified on {count} classes up to length {max}"))
    }

    fn check_gcds(&self, max: usize) -> std::result::Result<String, String> {
        let mut elems = Vec::new();
        for k in 1..=max {
            elems.extend(self.engine.elements_of_length(k).map_err(|e| e.to_string())?);
        }
        let mut divs: Vec<HashSet<Vec<Gen>>> = Vec::new();
        for w in &elems {
            let d = self.engine.left_divisors(w).map_err(|e| e.to_string())?;
            divs.push(d.into_iter().map(|p| p.0).collect());
        }
        let mut pairs = 0;
        for i in 0..elems.len() {
            for j in (i + 1)..elems.len() {
                let common: Vec<&Vec<Gen>> = divs[i].intersection(&divs[j]).collect();
                let top = common.iter().max_by_key(|d| d.len()).unwrap();
                let top_divs: HashSet<Vec<Gen>> = self
                    .engine
                    .left_divisors(top)
                    .map_err(|e| e.to_string())?
                    .into_iter()
                    .map(|p| p.0)
                    .collect();
                if common.iter().any(|d| !top_divs.contains(*d)) {
                    return Err(format!(
                        "no greatest common left divisor for {} and {}",
                        self.presentation.format_word(&elems[i]),
                        self.presentation.format_word(&elems[j])
                    ));
                }
                pairs += 1;
            }
        }
        Ok(format!("greatest common left divisors exist for {pairs} pairs up to length {max}"))
    }

    /// `--dump` output: simples then the arrow relation.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# simples: index word length");
        for x in 0..self.len() {
            let _ = writeln!(s, "{} {} {}", x, self.format_simple(x), self.simple_len(x));
        }
        let _ = writeln!(s, "# arrow: x y");
        for x in 0..self.len() {
            for y in 0..self.len() {
                if self.arrow(x, y) {
                    let _ = writeln!(s, "{x} {y}");
                }
            }
        }
        s
    }
}
