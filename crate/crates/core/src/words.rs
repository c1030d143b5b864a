//! Word problem and divisibility for short words, decided by breadth-first
//! closure under the relation pairs.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::presentation::{Gen, MonoidPresentation};

/// Default cap on the length of words closed by brute force.
pub const DEFAULT_CLASS_CAP: usize = 16;

/// All words equivalent to a given one, sorted, with the lexicographically
/// least member as representative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordClass {
    members: Vec<Vec<Gen>>,
}

impl WordClass {
    pub fn representative(&self) -> &[Gen] {
        &self.members[0]
    }

    pub fn members(&self) -> &[Vec<Gen>] {
        &self.members
    }

    pub fn contains(&self, w: &[Gen]) -> bool {
        self.members
            .binary_search_by(|m| m.as_slice().cmp(w))
            .is_ok()
    }

    pub fn word_length(&self) -> usize {
        self.members[0].len()
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// True when some member contains a factor σσ.
    pub fn has_square(&self) -> bool {
        self.members
            .iter()
            .any(|w| w.windows(2).any(|p| p[0] == p[1]))
    }
}

/// Outcome of a bounded lcm search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LcmSearch {
    Found(Vec<Gen>),
    NotFound,
}

/// Rewriting engine with a shared memo of closed classes.
pub struct WordEngine {
    rank: usize,
    rules_by_first: Vec<Vec<(Vec<Gen>, Vec<Gen>)>>,
    cap: usize,
    memo: Mutex<HashMap<Vec<Gen>, Arc<WordClass>>>,
}

impl WordEngine {
    pub fn new(p: &MonoidPresentation, cap: usize) -> Self {
        let mut rules_by_first = vec![Vec::new(); p.rank()];
        for r in p.relations() {
            rules_by_first[r.lhs[0] as usize].push((r.lhs.clone(), r.rhs.clone()));
            rules_by_first[r.rhs[0] as usize].push((r.rhs.clone(), r.lhs.clone()));
        }
        WordEngine {
            rank: p.rank(),
            rules_by_first,
            cap,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    fn closure(&self, w: &[Gen]) -> WordClass {
        let mut seen: HashSet<Vec<Gen>> = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(w.to_vec());
        queue.push_back(w.to_vec());
        while let Some(x) = queue.pop_front() {
            for pos in 0..x.len() {
                for (u, v) in &self.rules_by_first[x[pos] as usize] {
                    if x[pos..].starts_with(u) {
                        let mut y = x.clone();
                        y[pos..pos + u.len()].copy_from_slice(v);
                        if !seen.contains(&y) {
                            seen.insert(y.clone());
                            queue.push_back(y);
                        }
                    }
                }
            }
        }
        let mut members: Vec<Vec<Gen>> = seen.into_iter().collect();
        members.sort();
        WordClass { members }
    }

    /// The full equivalence class of `w`.
    pub fn class(&self, w: &[Gen]) -> Result<Arc<WordClass>> {
        if w.len() > self.cap {
            return Err(Error::ClassCap {
                length: w.len(),
                cap: self.cap,
            });
        }
        if let Some(c) = self.memo.lock().unwrap().get(w) {
            return Ok(c.clone());
        }
        let class = Arc::new(self.closure(w));
        let mut memo = self.memo.lock().unwrap();
        for m in class.members() {
            memo.insert(m.clone(), class.clone());
        }
        Ok(class)
    }

    /// Class computed without touching the memo.
    pub fn class_uncached(&self, w: &[Gen]) -> Result<WordClass> {
        if w.len() > self.cap {
            return Err(Error::ClassCap {
                length: w.len(),
                cap: self.cap,
            });
        }
        Ok(self.closure(w))
    }

    pub fn canonical(&self, w: &[Gen]) -> Result<Vec<Gen>> {
        Ok(self.class(w)?.representative().to_vec())
    }

    pub fn equal(&self, u: &[Gen], v: &[Gen]) -> Result<bool> {
        if u.len() != v.len() {
            return Ok(false);
        }
        Ok(self.class(u)?.contains(v))
    }

    /// If `u ≤ₗ v`, returns the canonical quotient `z` with `u·z = v`.
    pub fn left_divides(&self, u: &[Gen], v: &[Gen]) -> Result<Option<Vec<Gen>>> {
        if u.len() > v.len() {
            return Ok(None);
        }
        let cu = self.class(u)?;
        let cv = self.class(v)?;
        for m in cv.members() {
            if cu.contains(&m[..u.len()]) {
                return Ok(Some(self.canonical(&m[u.len()..])?));
            }
        }
        Ok(None)
    }

    /// If `u ≤ᵣ v`, returns the canonical quotient `z` with `z·u = v`.
    pub fn right_divides(&self, u: &[Gen], v: &[Gen]) -> Result<Option<Vec<Gen>>> {
        if u.len() > v.len() {
            return Ok(None);
        }
        let cu = self.class(u)?;
        let cv = self.class(v)?;
        let cut = v.len() - u.len();
        for m in cv.members() {
            if cu.contains(&m[cut..]) {
                return Ok(Some(self.canonical(&m[..cut])?));
            }
        }
        Ok(None)
    }

    /// Distinct left divisors of `w` as `(divisor, quotient)` canonical pairs,
    /// ordered by length then lexicographically.
    pub fn left_divisors(&self, w: &[Gen]) -> Result<Vec<(Vec<Gen>, Vec<Gen>)>> {
        let cw = self.class(w)?;
        let mut out: HashMap<Vec<Gen>, Vec<Gen>> = HashMap::new();
        for m in cw.members() {
            for cut in 0..=m.len() {
                let d = self.canonical(&m[..cut])?;
                if let std::collections::hash_map::Entry::Vacant(e) = out.entry(d) {
                    e.insert(self.canonical(&m[cut..])?);
                }
            }
        }
        let mut v: Vec<_> = out.into_iter().collect();
        v.sort_by(|a, b| (a.0.len(), &a.0).cmp(&(b.0.len(), &b.0)));
        Ok(v)
    }

    /// Distinct right divisors of `w` as `(divisor, quotient)` canonical pairs.
    pub fn right_divisors(&self, w: &[Gen]) -> Result<Vec<(Vec<Gen>, Vec<Gen>)>> {
        let cw = self.class(w)?;
        let mut out: HashMap<Vec<Gen>, Vec<Gen>> = HashMap::new();
        for m in cw.members() {
            for cut in 0..=m.len() {
                let d = self.canonical(&m[cut..])?;
                if let std::collections::hash_map::Entry::Vacant(e) = out.entry(d) {
                    e.insert(self.canonical(&m[..cut])?);
                }
            }
        }
        let mut v: Vec<_> = out.into_iter().collect();
        v.sort_by(|a, b| (a.0.len(), &a.0).cmp(&(b.0.len(), &b.0)));
        Ok(v)
    }

    /// Greatest common left divisor, found among the left divisors of `u`.
    pub fn left_gcd(&self, u: &[Gen], v: &[Gen]) -> Result<Vec<Gen>> {
        let divs = self.left_divisors(u)?;
        let mut best: Vec<Gen> = Vec::new();
        for (d, _) in divs.iter().rev() {
            if self.left_divides(d, v)?.is_some() {
                best = d.clone();
                break;
            }
        }
        Ok(best)
    }

    /// Shortest common right multiple `z` of `u` and `v` (so `u ≤ₗ z`,
    /// `v ≤ₗ z`) with `|z| ≤ bound`.
    pub fn left_lcm_bounded(&self, u: &[Gen], v: &[Gen], bound: usize) -> Result<LcmSearch> {
        self.left_lcm_search(u, v, bound, &|_| true)
    }

    /// As [`left_lcm_bounded`](Self::left_lcm_bounded), exploring only
    /// multiples of `u` accepted by `keep`. Sound when every left divisor of
    /// the sought lcm passes `keep`.
    pub fn left_lcm_search(
        &self,
        u: &[Gen],
        v: &[Gen],
        bound: usize,
        keep: &dyn Fn(&WordClass) -> bool,
    ) -> Result<LcmSearch> {
        if self.left_divides(u, v)?.is_some() {
            return Ok(LcmSearch::Found(self.canonical(v)?));
        }
        if self.left_divides(v, u)?.is_some() {
            return Ok(LcmSearch::Found(self.canonical(u)?));
        }
        let cv = self.class(v)?;
        let mut frontier: Vec<Vec<Gen>> = vec![self.canonical(u)?];
        let mut len = u.len();
        while len < bound && !frontier.is_empty() {
            len += 1;
            let mut next: Vec<Vec<Gen>> = Vec::new();
            let mut seen: HashSet<Vec<Gen>> = HashSet::new();
            let mut found: Vec<Vec<Gen>> = Vec::new();
            for z in &frontier {
                for s in 0..self.rank as Gen {
                    let mut w = z.clone();
                    w.push(s);
                    let cw = self.class(&w)?;
                    let rep = cw.representative().to_vec();
                    if !seen.insert(rep.clone()) || !keep(&cw) {
                        continue;
                    }
                    if len >= v.len() && cw.members().iter().any(|m| cv.contains(&m[..v.len()])) {
                        found.push(rep);
                    } else {
                        next.push(rep);
                    }
                }
            }
            match found.len() {
                0 => {}
                1 => return Ok(LcmSearch::Found(found.pop().unwrap())),
                _ => {
                    return Err(Error::AmbiguousLcm(format!(
                        "{} minimal common multiples of length {len}",
                        found.len()
                    )))
                }
            }
            frontier = next;
        }
        Ok(LcmSearch::NotFound)
    }

    /// All classes of words of length exactly `k`, as canonical
    /// representatives, obtained by extending classes of length `k−1`.
    pub fn elements_of_length(&self, k: usize) -> Result<Vec<Vec<Gen>>> {
        let mut layer: Vec<Vec<Gen>> = vec![Vec::new()];
        for _ in 0..k {
            let mut next = HashSet::new();
            for z in &layer {
                for s in 0..self.rank as Gen {
                    let mut w = z.clone();
                    w.push(s);
                    next.insert(self.canonical(&w)?);
                }
            }
            layer = next.into_iter().collect();
        }
        layer.sort();
        Ok(layer)
    }
}
