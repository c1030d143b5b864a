//! Monoid presentations: the Coxeter-matrix front end, general
//! length-preserving relation pairs, the spec-file parser, built-in families,
//! irreducibility and the valuation-parameter classes.

use std::collections::BTreeMap;
use std::fmt;

use petgraph::unionfind::UnionFind;

use crate::error::{Error, Result};

/// Generator index into the alphabet of a presentation.
pub type Gen = u16;

/// An entry ℓ(a,b) of a Coxeter matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CoxeterLength {
    Finite(u32),
    Infinite,
}

impl fmt::Display for CoxeterLength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoxeterLength::Finite(m) => write!(f, "{m}"),
            CoxeterLength::Infinite => write!(f, "inf"),
        }
    }
}

/// A defining relation `lhs = rhs` between two words of equal length.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Relation {
    pub lhs: Vec<Gen>,
    pub rhs: Vec<Gen>,
}

/// A finite presentation with length-preserving relations.
///
/// Presentations built from a Coxeter matrix keep the matrix; the relation
/// list always holds the expanded pairs `(abab…, baba…)`, and that list is
/// what every downstream computation reads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonoidPresentation {
    symbols: Vec<String>,
    coxeter: Option<Vec<Vec<CoxeterLength>>>,
    relations: Vec<Relation>,
}

fn alternating(a: Gen, b: Gen, m: u32) -> Vec<Gen> {
    (0..m).map(|i| if i % 2 == 0 { a } else { b }).collect()
}

fn valid_symbol(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_alphanumeric() || c == '_' || c == '\'')
}

impl MonoidPresentation {
    /// Builds a presentation from a symmetric Coxeter matrix. Entries on the
    /// diagonal are ignored; `matrix[a][b]` must equal `matrix[b][a]`.
    pub fn from_coxeter(symbols: Vec<String>, matrix: Vec<Vec<CoxeterLength>>) -> Result<Self> {
        let n = symbols.len();
        check_symbols(&symbols)?;
        if matrix.len() != n || matrix.iter().any(|row| row.len() != n) {
            return Err(Error::Structural("Coxeter matrix has the wrong shape".into()));
        }
        let mut relations = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                let (x, y) = (matrix[a][b], matrix[b][a]);
                if x != y {
                    return Err(Error::Structural(format!(
                        "Coxeter matrix is not symmetric at ({}, {})",
                        symbols[a], symbols[b]
                    )));
                }
                if let CoxeterLength::Finite(m) = x {
                    if m < 2 {
                        return Err(Error::Structural(format!(
                            "Coxeter length {m} < 2 for ({}, {})",
                            symbols[a], symbols[b]
                        )));
                    }
                    relations.push(Relation {
                        lhs: alternating(a as Gen, b as Gen, m),
                        rhs: alternating(b as Gen, a as Gen, m),
                    });
                }
            }
        }
        Ok(MonoidPresentation {
            symbols,
            coxeter: Some(matrix),
            relations,
        })
    }

    /// Builds a presentation from explicit relation pairs.
    pub fn from_relations(symbols: Vec<String>, relations: Vec<Relation>) -> Result<Self> {
        check_symbols(&symbols)?;
        let n = symbols.len();
        let mut kept: Vec<Relation> = Vec::new();
        for r in relations {
            if r.lhs.len() != r.rhs.len() {
                return Err(Error::Structural("relation sides have different lengths".into()));
            }
            if r.lhs.is_empty() {
                return Err(Error::Structural("empty relation".into()));
            }
            if r.lhs.iter().chain(r.rhs.iter()).any(|&g| g as usize >= n) {
                return Err(Error::Structural("relation uses an unknown generator".into()));
            }
            if r.lhs == r.rhs {
                continue;
            }
            let dup = kept.iter().any(|k| {
                (k.lhs == r.lhs && k.rhs == r.rhs) || (k.lhs == r.rhs && k.rhs == r.lhs)
            });
            if !dup {
                kept.push(r);
            }
        }
        Ok(MonoidPresentation {
            symbols,
            coxeter: None,
            relations: kept,
        })
    }

    pub fn rank(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol(&self, g: Gen) -> &str {
        &self.symbols[g as usize]
    }

    pub fn index_of(&self, s: &str) -> Option<Gen> {
        self.symbols.iter().position(|t| t == s).map(|i| i as Gen)
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    /// True when the presentation came from a Coxeter matrix.
    pub fn is_coxeter(&self) -> bool {
        self.coxeter.is_some()
    }

    /// ℓ(a,b) for Coxeter presentations, `None` otherwise or on the diagonal.
    pub fn coxeter_length(&self, a: Gen, b: Gen) -> Option<CoxeterLength> {
        if a == b {
            return None;
        }
        self.coxeter
            .as_ref()
            .map(|m| m[a as usize][b as usize])
    }

    /// True when `ab = ba` is a defining relation.
    pub fn commute(&self, a: Gen, b: Gen) -> bool {
        a != b
            && self.relations.iter().any(|r| {
                (r.lhs == [a, b] && r.rhs == [b, a]) || (r.lhs == [b, a] && r.rhs == [a, b])
            })
    }

    /// Longest relation side; zero for free monoids.
    pub fn max_relation_length(&self) -> usize {
        self.relations.iter().map(|r| r.lhs.len()).max().unwrap_or(0)
    }

    fn single_char(&self) -> bool {
        self.symbols.iter().all(|s| s.chars().count() == 1)
    }

    /// Parses a CLI word. Single-character alphabets accept plain strings
    /// such as `abcb`; otherwise symbols are separated by `.`. The strings
    /// `e`, `ε` and the empty string denote the unit unless `e` is a symbol.
    pub fn parse_word(&self, text: &str) -> Result<Vec<Gen>> {
        let t = text.trim();
        if t.is_empty() || t == "ε" || (t == "e" && self.index_of("e").is_none()) {
            return Ok(Vec::new());
        }
        let pieces: Vec<String> = if t.contains('.') || !self.single_char() {
            t.split('.').map(str::to_string).collect()
        } else {
            t.chars().map(|c| c.to_string()).collect()
        };
        pieces
            .iter()
            .map(|s| {
                self.index_of(s).ok_or_else(|| Error::Word {
                    word: text.to_string(),
                    message: format!("unknown generator `{s}`"),
                })
            })
            .collect()
    }

    /// Formats a word; the unit prints as `e`.
    pub fn format_word(&self, w: &[Gen]) -> String {
        if w.is_empty() {
            return "e".to_string();
        }
        let sep = if self.single_char() { "" } else { "." };
        w.iter()
            .map(|&g| self.symbol(g))
            .collect::<Vec<_>>()
            .join(sep)
    }
}

fn check_symbols(symbols: &[String]) -> Result<()> {
    if symbols.is_empty() {
        return Err(Error::Structural("presentation needs at least one generator".into()));
    }
    if symbols.len() > Gen::MAX as usize {
        return Err(Error::Structural("too many generators".into()));
    }
    for (i, s) in symbols.iter().enumerate() {
        if !valid_symbol(s) {
            return Err(Error::Structural(format!("invalid generator symbol `{s}`")));
        }
        if symbols[..i].contains(s) {
            return Err(Error::Structural(format!("duplicate generator `{s}`")));
        }
    }
    Ok(())
}

/// Parses the line-oriented monoid-spec format:
///
/// ```text
/// # comment
/// generators: a b c
/// m: a b = 3
/// m: b c = inf
/// ```
///
/// Pairs without an `m:` line default to ∞.
pub fn parse_presentation(text: &str) -> Result<MonoidPresentation> {
    let err = |line: usize, column: usize, message: String| Error::Parse {
        line,
        column,
        message,
    };
    let mut symbols: Option<Vec<String>> = None;
    let mut entries: BTreeMap<(usize, usize), (CoxeterLength, usize)> = BTreeMap::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        if content.trim().is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        let body = content.trim();
        let col_of = |sub: &str| -> usize {
            let offset = sub.as_ptr() as usize - raw.as_ptr() as usize;
            raw[..offset].chars().count() + 1
        };
        if let Some(rest) = body.strip_prefix("generators:") {
            if symbols.is_some() {
                return Err(err(line, indent + 1, "`generators:` given more than once".into()));
            }
            let mut syms = Vec::new();
            for tok in rest.split_whitespace() {
                if !valid_symbol(tok) {
                    return Err(err(line, col_of(tok), format!("invalid symbol `{tok}`")));
                }
                if syms.iter().any(|s: &String| s == tok) {
                    return Err(err(line, col_of(tok), format!("duplicate generator `{tok}`")));
                }
                syms.push(tok.to_string());
            }
            if syms.is_empty() {
                return Err(err(line, indent + 1, "no generators listed".into()));
            }
            symbols = Some(syms);
        } else if let Some(rest) = body.strip_prefix("m:") {
            let syms = symbols
                .as_ref()
                .ok_or_else(|| err(line, indent + 1, "`m:` before `generators:`".into()))?;
            let (lhs, rhs) = rest
                .split_once('=')
                .ok_or_else(|| err(line, indent + 1, "expected `m: <sym> <sym> = <value>`".into()))?;
            let toks: Vec<&str> = lhs.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(err(line, col_of(lhs.trim_start()), "expected exactly two symbols".into()));
            }
            let mut idx = [0usize; 2];
            for (k, tok) in toks.iter().enumerate() {
                idx[k] = syms
                    .iter()
                    .position(|s| s == tok)
                    .ok_or_else(|| err(line, col_of(tok), format!("unknown generator `{tok}`")))?;
            }
            let vtok = rhs.trim();
            if vtok.is_empty() {
                return Err(err(line, raw.chars().count() + 1, "missing value".into()));
            }
            let value = if vtok == "inf" || vtok == "∞" {
                CoxeterLength::Infinite
            } else {
                let m: u32 = vtok
                    .parse()
                    .map_err(|_| err(line, col_of(vtok), format!("invalid value `{vtok}`")))?;
                if m < 2 {
                    return Err(err(line, col_of(vtok), format!("value {m} is below 2")));
                }
                CoxeterLength::Finite(m)
            };
            if idx[0] == idx[1] {
                continue;
            }
            let key = (idx[0].min(idx[1]), idx[0].max(idx[1]));
            if let Some((prev, prev_line)) = entries.get(&key) {
                if *prev != value {
                    return Err(err(
                        line,
                        col_of(vtok),
                        format!("conflicts with value {prev} given on line {prev_line}"),
                    ));
                }
            } else {
                entries.insert(key, (value, line));
            }
        } else {
            return Err(err(line, indent + 1, format!("unrecognised line `{body}`")));
        }
    }
    let symbols = symbols.ok_or_else(|| err(1, 1, "missing `generators:` line".into()))?;
    let n = symbols.len();
    let mut matrix = vec![vec![CoxeterLength::Infinite; n]; n];
    for i in 0..n {
        matrix[i][i] = CoxeterLength::Finite(1);
    }
    for ((a, b), (v, _)) in entries {
        matrix[a][b] = v;
        matrix[b][a] = v;
    }
    MonoidPresentation::from_coxeter(symbols, matrix)
}

/// Default generator names: `a`, `b`, … up to 26, then `s1`, `s2`, ….
pub fn default_symbols(n: usize) -> Vec<String> {
    if n <= 26 {
        (0..n).map(|i| ((b'a' + i as u8) as char).to_string()).collect()
    } else {
        (1..=n).map(|i| format!("s{i}")).collect()
    }
}

fn coxeter_from_fn(n: usize, f: impl Fn(usize, usize) -> CoxeterLength) -> Result<MonoidPresentation> {
    let mut m = vec![vec![CoxeterLength::Finite(1); n]; n];
    for a in 0..n {
        for b in 0..n {
            if a != b {
                m[a][b] = f(a.min(b), a.max(b));
            }
        }
    }
    MonoidPresentation::from_coxeter(default_symbols(n), m)
}

/// Positive braid monoid on `n` strands (n−1 generators).
pub fn braid(n: usize) -> Result<MonoidPresentation> {
    if n < 2 {
        return Err(Error::Family(format!("braid({n}): need n ≥ 2")));
    }
    coxeter_from_fn(n - 1, |a, b| {
        if b == a + 1 {
            CoxeterLength::Finite(3)
        } else {
            CoxeterLength::Finite(2)
        }
    })
}

/// Free monoid on `n` generators.
pub fn free(n: usize) -> Result<MonoidPresentation> {
    if n < 1 {
        return Err(Error::Family("free(0): need n ≥ 1".into()));
    }
    coxeter_from_fn(n, |_, _| CoxeterLength::Infinite)
}

/// Dihedral-type monoid: two generators with ℓ(a,b) = m.
pub fn dihedral(m: u32) -> Result<MonoidPresentation> {
    if m < 2 {
        return Err(Error::Family(format!("dihedral({m}): need m ≥ 2")));
    }
    coxeter_from_fn(2, |_, _| CoxeterLength::Finite(m))
}

/// Heap (trace) monoid on `n` generators: the listed pairs commute, all
/// other pairs are free.
pub fn heap(n: usize, commuting: &[(usize, usize)]) -> Result<MonoidPresentation> {
    if n < 1 {
        return Err(Error::Family("heap: need at least one generator".into()));
    }
    for &(a, b) in commuting {
        if a >= n || b >= n || a == b {
            return Err(Error::Family(format!("heap: invalid pair ({a}, {b})")));
        }
    }
    coxeter_from_fn(n, |a, b| {
        if commuting.iter().any(|&(x, y)| (x.min(y), x.max(y)) == (a, b)) {
            CoxeterLength::Finite(2)
        } else {
            CoxeterLength::Infinite
        }
    })
}

/// Coxeter-type monoid from an explicit list of finite entries; unlisted
/// pairs are free.
pub fn coxeter(names: &[&str], finite: &[(usize, usize, u32)]) -> Result<MonoidPresentation> {
    let n = names.len();
    let mut m = vec![vec![CoxeterLength::Infinite; n]; n];
    for i in 0..n {
        m[i][i] = CoxeterLength::Finite(1);
    }
    for &(a, b, v) in finite {
        m[a][b] = CoxeterLength::Finite(v);
        m[b][a] = CoxeterLength::Finite(v);
    }
    MonoidPresentation::from_coxeter(names.iter().map(|s| s.to_string()).collect(), m)
}

/// Affine type Ã₂: three generators, all pairs with ℓ = 3.
pub fn affine_a2() -> Result<MonoidPresentation> {
    coxeter(&["a", "b", "c"], &[(0, 1, 3), (1, 2, 3), (0, 2, 3)])
}

/// Dual braid monoid of type A on `n` strands, generated by σ_{i,j}
/// (1 ≤ i < j ≤ n) with σ_{ij}σ_{jk} = σ_{jk}σ_{ik} = σ_{ik}σ_{ij} for
/// i<j<k, and σ_{ij}σ_{kl} = σ_{kl}σ_{ij} for non-crossing pairs.
pub fn dual_a(n: usize) -> Result<MonoidPresentation> {
    if n < 2 {
        return Err(Error::Family(format!("dual_a({n}): need n ≥ 2")));
    }
    let mut names = Vec::new();
    let mut index = BTreeMap::new();
    for i in 1..=n {
        for j in (i + 1)..=n {
            index.insert((i, j), names.len() as Gen);
            names.push(if n < 10 {
                format!("s{i}{j}")
            } else {
                format!("s{i}_{j}")
            });
        }
    }
    let s = |i: usize, j: usize| index[&(i, j)];
    let mut rels = Vec::new();
    for i in 1..=n {
        for j in (i + 1)..=n {
            for k in (j + 1)..=n {
                rels.push(Relation {
                    lhs: vec![s(i, j), s(j, k)],
                    rhs: vec![s(j, k), s(i, k)],
                });
                rels.push(Relation {
                    lhs: vec![s(j, k), s(i, k)],
                    rhs: vec![s(i, k), s(i, j)],
                });
                for l in (k + 1)..=n {
                    rels.push(Relation {
                        lhs: vec![s(i, j), s(k, l)],
                        rhs: vec![s(k, l), s(i, j)],
                    });
                    rels.push(Relation {
                        lhs: vec![s(i, l), s(j, k)],
                        rhs: vec![s(j, k), s(i, l)],
                    });
                }
            }
        }
    }
    MonoidPresentation::from_relations(names, rels)
}

/// Free product: alphabets concatenated, no relation between the factors.
/// Symbols of the second factor that clash with the first get a `_2` suffix.
pub fn free_product(p: &MonoidPresentation, q: &MonoidPresentation) -> Result<MonoidPresentation> {
    let n1 = p.rank();
    let mut symbols = p.symbols.clone();
    for s in &q.symbols {
        let mut name = s.clone();
        while symbols.contains(&name) {
            name.push_str("_2");
        }
        symbols.push(name);
    }
    if let (Some(a), Some(b)) = (&p.coxeter, &q.coxeter) {
        let n = symbols.len();
        let mut m = vec![vec![CoxeterLength::Infinite; n]; n];
        for i in 0..n1 {
            for j in 0..n1 {
                m[i][j] = a[i][j];
            }
        }
        for i in 0..q.rank() {
            for j in 0..q.rank() {
                m[n1 + i][n1 + j] = b[i][j];
            }
        }
        return MonoidPresentation::from_coxeter(symbols, m);
    }
    let shift = |w: &[Gen]| w.iter().map(|&g| g + n1 as Gen).collect::<Vec<_>>();
    let mut rels = p.relations.clone();
    rels.extend(q.relations.iter().map(|r| Relation {
        lhs: shift(&r.lhs),
        rhs: shift(&r.rhs),
    }));
    MonoidPresentation::from_relations(symbols, rels)
}

/// Builds one of the integer-parameter families by name.
pub fn build_family(name: &str, params: &[usize]) -> Result<MonoidPresentation> {
    let one = || {
        params
            .first()
            .copied()
            .ok_or_else(|| Error::Family(format!("{name}: missing parameter")))
    };
    match name {
        "braid" => braid(one()?),
        "free" => free(one()?),
        "dihedral" => dihedral(one()? as u32),
        "dual_a" | "dual-a" => dual_a(one()?),
        "heap" => heap(one()?, &[]),
        "affine_a2" | "affine-a2" => affine_a2(),
        _ => Err(Error::Family(format!("unknown family `{name}`"))),
    }
}

/// Parses the CLI family syntax: `braid:4`, `free:3`, `dihedral:5`,
/// `dual-a:4`, `affine-a2`, `heap:<n>:<i>-<j>,…` (1-based commuting pairs),
/// and `free-product:<file>,<file>` (each operand a spec file or a nested
/// family in brackets, e.g. `free-product:[free:1],[braid:3]`).
pub fn parse_family(text: &str) -> Result<MonoidPresentation> {
    let bad = |m: &str| Error::Family(format!("{text}: {m}"));
    let (name, arg) = match text.split_once(':') {
        Some((n, a)) => (n.trim(), a.trim()),
        None => (text.trim(), ""),
    };
    let int = |s: &str| -> Result<usize> { s.trim().parse().map_err(|_| bad("expected an integer")) };
    match name {
        "heap" => {
            let (n, pairs) = match arg.split_once(':') {
                Some((n, p)) => (int(n)?, p),
                None => (int(arg)?, ""),
            };
            let mut comm = Vec::new();
            for item in pairs.split(',').filter(|s| !s.trim().is_empty()) {
                let (a, b) = item.split_once('-').ok_or_else(|| bad("expected i-j"))?;
                let (a, b) = (int(a)?, int(b)?);
                if a == 0 || b == 0 {
                    return Err(bad("heap indices are 1-based"));
                }
                comm.push((a - 1, b - 1));
            }
            heap(n, &comm)
        }
        "free-product" | "free_product" => {
            let parts = split_operands(arg).ok_or_else(|| bad("expected two operands"))?;
            let load = |s: &str| -> Result<MonoidPresentation> {
                if let Some(inner) = s.strip_prefix('[').and_then(|x| x.strip_suffix(']')) {
                    parse_family(inner)
                } else {
                    let text = std::fs::read_to_string(s)?;
                    parse_presentation(&text)
                }
            };
            free_product(&load(&parts.0)?, &load(&parts.1)?)
        }
        "affine-a2" | "affine_a2" => affine_a2(),
        "braid" | "free" | "dihedral" | "dual-a" | "dual_a" => build_family(name, &[int(arg)?]),
        _ => Err(bad("unknown family")),
    }
}

fn split_operands(s: &str) -> Option<(String, String)> {
    let mut depth = 0i32;
    for (i, c) in s.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => depth -= 1,
            ',' if depth == 0 => {
                return Some((s[..i].trim().to_string(), s[i + 1..].trim().to_string()))
            }
            _ => {}
        }
    }
    None
}

/// Connectivity of the Coxeter graph (generators joined unless they commute).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Irreducibility {
    pub irreducible: bool,
    pub components: Vec<Vec<Gen>>,
}

pub fn is_irreducible(p: &MonoidPresentation) -> Irreducibility {
    let n = p.rank();
    let mut uf = UnionFind::<usize>::new(n);
    for a in 0..n {
        for b in (a + 1)..n {
            if !p.commute(a as Gen, b as Gen) {
                uf.union(a, b);
            }
        }
    }
    let components = group_by_root(&mut uf, n);
    Irreducibility {
        irreducible: components.len() == 1,
        components,
    }
}

fn group_by_root(uf: &mut UnionFind<usize>, n: usize) -> Vec<Vec<Gen>> {
    let mut groups: BTreeMap<usize, Vec<Gen>> = BTreeMap::new();
    let mut order = Vec::new();
    for g in 0..n {
        let r = uf.find_mut(g);
        if !groups.contains_key(&r) {
            order.push(r);
        }
        groups.entry(r).or_default().push(g as Gen);
    }
    order.into_iter().map(|r| groups.remove(&r).unwrap()).collect()
}

/// Partition of the generators into the classes on which a valuation must be
/// constant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamClasses {
    pub classes: Vec<Vec<Gen>>,
    pub class_of: Vec<usize>,
}

impl ParamClasses {
    pub fn count(&self) -> usize {
        self.classes.len()
    }
}

/// Classes are generated by relations whose two sides differ, as letter
/// multisets, by exactly one letter on each side. For Coxeter presentations
/// this links a and b exactly when ℓ(a,b) is finite and odd.
pub fn param_classes(p: &MonoidPresentation) -> Result<ParamClasses> {
    let n = p.rank();
    let mut uf = UnionFind::<usize>::new(n);
    for r in p.relations() {
        let mut diff = vec![0i64; n];
        for &g in &r.lhs {
            diff[g as usize] += 1;
        }
        for &g in &r.rhs {
            diff[g as usize] -= 1;
        }
        let pos: Vec<usize> = (0..n).filter(|&g| diff[g] > 0).collect();
        let neg: Vec<usize> = (0..n).filter(|&g| diff[g] < 0).collect();
        match (pos.as_slice(), neg.as_slice()) {
            ([], []) => {}
            ([a], [b]) if diff[*a] == 1 && diff[*b] == -1 => {
                uf.union(*a, *b);
            }
            _ => {
                return Err(Error::Valuation(
                    "relation letter counts do not reduce to generator classes".into(),
                ))
            }
        }
    }
    let classes = group_by_root(&mut uf, n);
    let mut class_of = vec![0; n];
    for (c, members) in classes.iter().enumerate() {
        for &g in members {
            class_of[g as usize] = c;
        }
    }
    Ok(ParamClasses { classes, class_of })
}
