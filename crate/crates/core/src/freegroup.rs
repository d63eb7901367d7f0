//! Free groups: reduced words, Stallings graphs, Benois reduction of rational
//! subsets and their closures in the profinite topology.
//!
//! Base letters are ASCII lowercase; the inverse of `x` is written `X`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::rational::{compile, Dfa, LangError, Nfa, RegexAst};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FreeGroupError {
    #[error("letter {0:?} cannot be used as a free generator (use ASCII lowercase)")]
    BadLetter(char),
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("the language is empty")]
    EmptyLanguage,
    #[error(transparent)]
    Lang(#[from] LangError),
}

/// A generator or its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sym {
    pub letter: char,
    pub inv: bool,
}

impl Sym {
    pub fn new(letter: char, inv: bool) -> Self {
        Sym { letter, inv }
    }

    pub fn inverse(self) -> Self {
        Sym { letter: self.letter, inv: !self.inv }
    }

    /// The internal single-character encoding.
    pub fn to_char(self) -> char {
        if self.inv {
            self.letter.to_ascii_uppercase()
        } else {
            self.letter
        }
    }

    pub fn from_char(c: char) -> Result<Self, FreeGroupError> {
        if c.is_ascii_lowercase() {
            Ok(Sym::new(c, false))
        } else if c.is_ascii_uppercase() {
            Ok(Sym::new(c.to_ascii_lowercase(), true))
        } else {
            Err(FreeGroupError::BadLetter(c))
        }
    }
}

/// How inverse letters are written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InverseStyle {
    #[default]
    Capital,
    Prime,
}

/// A word over `X ∪ X⁻¹`, not necessarily reduced.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct GroupWord {
    syms: Vec<Sym>,
}

impl GroupWord {
    pub fn identity() -> Self {
        GroupWord::default()
    }

    pub fn from_syms(syms: Vec<Sym>) -> Self {
        GroupWord { syms }
    }

    /// A positive word, reduced by construction.
    pub fn from_positive(w: &str) -> Self {
        GroupWord { syms: w.chars().map(|c| Sym::new(c, false)).collect() }
    }

    /// Parses `aBc`, `ab'c` or `1`/`ε` for the identity; the result is not
    /// reduced.
    pub fn parse(text: &str) -> Result<Self, FreeGroupError> {
        let mut syms: Vec<Sym> = vec![];
        for (pos, c) in text.chars().enumerate() {
            match c {
                c if c.is_whitespace() => {}
                '1' | 'ε' if text.trim().chars().count() == 1 => {}
                '\'' => match syms.last_mut() {
                    Some(s) if !s.inv && s.letter.is_ascii_lowercase() => s.inv = true,
                    _ => return Err(FreeGroupError::Syntax { pos, msg: "`'` must follow a lowercase letter".into() }),
                },
                c => syms.push(Sym::from_char(c).map_err(|_| FreeGroupError::Syntax { pos, msg: format!("unexpected {c:?}") })?),
            }
        }
        Ok(GroupWord { syms })
    }

    /// Parses the internal encoding (one character per symbol).
    pub fn from_encoded(w: &str) -> Result<Self, FreeGroupError> {
        Ok(GroupWord { syms: w.chars().map(Sym::from_char).collect::<Result<_, _>>()? })
    }

    pub fn syms(&self) -> &[Sym] {
        &self.syms
    }

    pub fn len(&self) -> usize {
        self.syms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.syms.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.reduce().is_empty()
    }

    pub fn is_reduced(&self) -> bool {
        self.syms.windows(2).all(|w| w[0] != w[1].inverse())
    }

    /// The free reduction.
    pub fn reduce(&self) -> Self {
        let mut out: Vec<Sym> = Vec::with_capacity(self.syms.len());
        for &s in &self.syms {
            if out.last() == Some(&s.inverse()) {
                out.pop();
            } else {
                out.push(s);
            }
        }
        GroupWord { syms: out }
    }

    /// Reduced product.
    pub fn mul(&self, other: &GroupWord) -> GroupWord {
        let mut syms = self.syms.clone();
        syms.extend_from_slice(&other.syms);
        GroupWord { syms }.reduce()
    }

    pub fn inverse(&self) -> GroupWord {
        GroupWord { syms: self.syms.iter().rev().map(|s| s.inverse()).collect() }
    }

    /// Reduced `n`-th power, `n ∈ ℤ`.
    pub fn pow(&self, n: i64) -> GroupWord {
        let r = self.reduce();
        let base = if n < 0 { r.inverse() } else { r };
        // base = p c p⁻¹ with c cyclically reduced, so baseⁿ = p cⁿ p⁻¹
        let s = &base.syms;
        let mut i = 0;
        while 2 * (i + 1) <= s.len() && s[i] == s[s.len() - 1 - i].inverse() {
            i += 1;
        }
        let core = &s[i..s.len() - i];
        let mut syms = s[..i].to_vec();
        for _ in 0..n.unsigned_abs() {
            syms.extend_from_slice(core);
        }
        syms.extend_from_slice(&s[s.len() - i..]);
        GroupWord { syms }.reduce()
    }

    /// The internal encoding, inverse letters as capitals.
    pub fn encoded(&self) -> String {
        self.syms.iter().map(|s| s.to_char()).collect()
    }

    pub fn display(&self, style: InverseStyle) -> String {
        if self.syms.is_empty() {
            return "1".into();
        }
        match style {
            InverseStyle::Capital => self.encoded(),
            InverseStyle::Prime => self
                .syms
                .iter()
                .map(|s| if s.inv { format!("{}'", s.letter) } else { s.letter.to_string() })
                .collect(),
        }
    }

    pub fn letters(&self) -> BTreeSet<char> {
        self.syms.iter().map(|s| s.letter).collect()
    }
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display(InverseStyle::Capital))
    }
}

/// `X ∪ X⁻¹` in the internal encoding, sorted.
pub fn doubled_alphabet(base: &[char]) -> Result<Vec<char>, FreeGroupError> {
    let mut out = BTreeSet::new();
    for &c in base {
        if !c.is_ascii_lowercase() {
            return Err(FreeGroupError::BadLetter(c));
        }
        out.insert(c);
        out.insert(c.to_ascii_uppercase());
    }
    Ok(out.into_iter().collect())
}

/// Base letters of a (possibly doubled) alphabet.
pub fn base_letters(letters: impl IntoIterator<Item = char>) -> Result<Vec<char>, FreeGroupError> {
    let mut out = BTreeSet::new();
    for c in letters {
        out.insert(Sym::from_char(c)?.letter);
    }
    Ok(out.into_iter().collect())
}

/// The reduced words over `X ∪ X⁻¹`.
pub fn reduced_words_dfa(base: &[char]) -> Result<Dfa, FreeGroupError> {
    let alpha = doubled_alphabet(base)?;
    let k = alpha.len();
    // state 0: start, 1 + i: last symbol was alpha[i], k + 1: sink
    let sink = k + 1;
    let inv_index: Vec<usize> = alpha
        .iter()
        .map(|&c| {
            let s = Sym::from_char(c).expect("checked").inverse().to_char();
            alpha.iter().position(|&d| d == s).expect("doubled")
        })
        .collect();
    let mut trans = vec![vec![sink; k]; k + 2];
    for li in 0..k {
        trans[0][li] = 1 + li;
    }
    for last in 0..k {
        for li in 0..k {
            trans[1 + last][li] = if inv_index[last] == li { sink } else { 1 + li };
        }
    }
    let mut finals = vec![true; k + 2];
    finals[sink] = false;
    Ok(Dfa::from_parts(alpha, 0, finals, trans).minimize())
}

/// A folded core graph with a base vertex; edges carry base letters and are
/// read backwards for inverse letters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StallingsGraph {
    alphabet: Vec<char>,
    out: Vec<BTreeMap<char, usize>>,
    inn: Vec<BTreeMap<char, usize>>,
}

impl StallingsGraph {
    /// The base vertex is always 0.
    pub const BASE: usize = 0;

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    pub fn num_vertices(&self) -> usize {
        self.out.len()
    }

    /// Edges `(p, letter, q)` sorted.
    pub fn edges(&self) -> Vec<(usize, char, usize)> {
        let mut e: Vec<_> = self.out.iter().enumerate().flat_map(|(p, m)| m.iter().map(move |(&c, &q)| (p, c, q))).collect();
        e.sort();
        e
    }

    pub fn step(&self, v: usize, s: Sym) -> Option<usize> {
        if s.inv {
            self.inn[v].get(&s.letter).copied()
        } else {
            self.out[v].get(&s.letter).copied()
        }
    }

    /// Whether the (reduced form of) `w` lies in the subgroup.
    pub fn member(&self, w: &GroupWord) -> bool {
        let mut v = Self::BASE;
        for &s in w.reduce().syms() {
            match self.step(v, s) {
                Some(n) => v = n,
                None => return false,
            }
        }
        v == Self::BASE
    }

    /// Rank of the subgroup.
    pub fn rank(&self) -> usize {
        let e = self.edges().len();
        e + 1 - self.num_vertices()
    }

    /// A free basis read off a BFS spanning tree.
    pub fn basis(&self) -> Vec<GroupWord> {
        let n = self.num_vertices();
        let mut label: Vec<Option<GroupWord>> = vec![None; n];
        label[Self::BASE] = Some(GroupWord::identity());
        let mut tree = BTreeSet::new();
        let mut queue = VecDeque::from([Self::BASE]);
        while let Some(v) = queue.pop_front() {
            for (nb, s) in self.neighbours(v) {
                if label[nb].is_none() {
                    let mut w = label[v].clone().unwrap();
                    w.syms.push(s);
                    label[nb] = Some(w);
                    tree.insert(if s.inv { (nb, s.letter, v) } else { (v, s.letter, nb) });
                    queue.push_back(nb);
                }
            }
        }
        self.edges()
            .into_iter()
            .filter(|e| !tree.contains(e))
            .map(|(p, c, q)| {
                let lp = label[p].clone().unwrap();
                let lq = label[q].clone().unwrap();
                lp.mul(&GroupWord::from_positive(&c.to_string())).mul(&lq.inverse())
            })
            .collect()
    }

    fn neighbours(&self, v: usize) -> Vec<(usize, Sym)> {
        let mut out = vec![];
        for &c in &self.alphabet {
            if let Some(&q) = self.out[v].get(&c) {
                out.push((q, Sym::new(c, false)));
            }
            if let Some(&p) = self.inn[v].get(&c) {
                out.push((p, Sym::new(c, true)));
            }
        }
        out
    }

    /// Reduced words of the subgroup, as an automaton over `X ∪ X⁻¹`.
    pub fn to_reduced_dfa(&self) -> Dfa {
        let alpha = doubled_alphabet(&self.alphabet).expect("lowercase alphabet");
        let n = self.num_vertices();
        let sink = n;
        let mut trans = vec![vec![sink; alpha.len()]; n + 1];
        for v in 0..n {
            for (li, &c) in alpha.iter().enumerate() {
                let s = Sym::from_char(c).expect("doubled");
                if let Some(q) = self.step(v, s) {
                    trans[v][li] = q;
                }
            }
        }
        let mut finals = vec![false; n + 1];
        finals[Self::BASE] = true;
        let d = Dfa::from_parts(alpha, Self::BASE, finals, trans);
        let red = reduced_words_dfa(&self.alphabet).expect("lowercase alphabet");
        d.intersect(&red).expect("same alphabet")
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph stallings {\n  rankdir=LR;\n");
        for v in 0..self.num_vertices() {
            let shape = if v == Self::BASE { "doublecircle" } else { "circle" };
            s.push_str(&format!("  {v} [shape={shape}];\n"));
        }
        for (p, c, q) in self.edges() {
            s.push_str(&format!("  {p} -> {q} [label=\"{c}\"];\n"));
        }
        s.push_str("}\n");
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "alphabet": self.alphabet.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "vertices": self.num_vertices(),
            "base": Self::BASE,
            "edges": self.edges().iter().map(|(p, c, q)| serde_json::json!({"from": p, "letter": c.to_string(), "to": q})).collect::<Vec<_>>(),
            "basis": self.basis().iter().map(|w| w.to_string()).collect::<Vec<_>>(),
        })
    }
}

fn find(uf: &mut [usize], mut x: usize) -> usize {
    while uf[x] != x {
        uf[x] = uf[uf[x]];
        x = uf[x];
    }
    x
}

/// Stallings graph of the subgroup generated by `generators`; `alphabet`
/// lists the base letters (letters of the generators are added).
pub fn fold_stallings(alphabet: &[char], generators: &[GroupWord]) -> StallingsGraph {
    let mut letters: BTreeSet<char> = alphabet.iter().copied().collect();
    let mut n = 1;
    let mut edges: Vec<(usize, char, usize)> = vec![];
    for g in generators {
        let g = g.reduce();
        letters.extend(g.letters());
        if g.is_empty() {
            continue;
        }
        let len = g.len();
        let mut prev = 0;
        for (i, &s) in g.syms().iter().enumerate() {
            let next = if i + 1 == len {
                0
            } else {
                n += 1;
                n - 1
            };
            if s.inv {
                edges.push((next, s.letter, prev));
            } else {
                edges.push((prev, s.letter, next));
            }
            prev = next;
        }
    }
    let mut uf: Vec<usize> = (0..n).collect();
    loop {
        let mut merged = false;
        let mut fwd: BTreeMap<(usize, char), usize> = BTreeMap::new();
        let mut bwd: BTreeMap<(usize, char), usize> = BTreeMap::new();
        for &(p, c, q) in &edges {
            let (p, q) = (find(&mut uf, p), find(&mut uf, q));
            for (map, key, val) in [(&mut fwd, (p, c), q), (&mut bwd, (q, c), p)] {
                match map.get(&key) {
                    Some(&other) => {
                        let (a, b) = (find(&mut uf, other), find(&mut uf, val));
                        if a != b {
                            // keep the smaller representative so the base stays 0
                            let (lo, hi) = (a.min(b), a.max(b));
                            uf[hi] = lo;
                            merged = true;
                        }
                    }
                    None => {
                        map.insert(key, val);
                    }
                }
            }
        }
        for e in edges.iter_mut() {
            *e = (find(&mut uf, e.0), e.1, find(&mut uf, e.2));
        }
        edges.sort();
        edges.dedup();
        if !merged {
            break;
        }
    }
    // prune to the core: drop non-base vertices of degree ≤ 1
    loop {
        let mut degree: BTreeMap<usize, usize> = BTreeMap::new();
        for &(p, _, q) in &edges {
            *degree.entry(p).or_default() += 1;
            *degree.entry(q).or_default() += 1;
        }
        let before = edges.len();
        edges.retain(|&(p, _, q)| (p == 0 || degree[&p] > 1) && (q == 0 || degree[&q] > 1));
        if edges.len() == before {
            break;
        }
    }
    build_canonical(letters.into_iter().collect(), &edges)
}

/// Renumbers vertices by BFS from vertex 0, visiting letters in order,
/// outgoing before incoming.
fn build_canonical(alphabet: Vec<char>, edges: &[(usize, char, usize)]) -> StallingsGraph {
    let mut out: BTreeMap<usize, BTreeMap<char, usize>> = BTreeMap::new();
    let mut inn: BTreeMap<usize, BTreeMap<char, usize>> = BTreeMap::new();
    for &(p, c, q) in edges {
        out.entry(p).or_default().insert(c, q);
        inn.entry(q).or_default().insert(c, p);
    }
    let mut number: BTreeMap<usize, usize> = BTreeMap::new();
    number.insert(0, 0);
    let mut order = vec![0];
    let mut queue = VecDeque::from([0]);
    while let Some(v) = queue.pop_front() {
        for &c in &alphabet {
            for nb in [out.get(&v).and_then(|m| m.get(&c)), inn.get(&v).and_then(|m| m.get(&c))].into_iter().flatten() {
                if !number.contains_key(nb) {
                    number.insert(*nb, order.len());
                    order.push(*nb);
                    queue.push_back(*nb);
                }
            }
        }
    }
    let n = order.len();
    let mut g = StallingsGraph { alphabet, out: vec![BTreeMap::new(); n], inn: vec![BTreeMap::new(); n] };
    for &(p, c, q) in edges {
        let (p, q) = (number[&p], number[&q]);
        g.out[p].insert(c, q);
        g.inn[q].insert(c, p);
    }
    g
}

/// Builds a Stallings graph from explicit edges, folding and pruning them.
pub fn stallings_from_edges(alphabet: &[char], n: usize, edges: &[(usize, char, usize)]) -> StallingsGraph {
    // every closed walk at 0 is a product of the spanning-tree generators
    let mut label: Vec<Option<GroupWord>> = vec![None; n.max(1)];
    label[0] = Some(GroupWord::identity());
    let mut changed = true;
    while changed {
        changed = false;
        for &(p, c, q) in edges {
            let step = GroupWord::from_positive(&c.to_string());
            if label[p].is_some() && label[q].is_none() {
                label[q] = Some(label[p].clone().unwrap().mul(&step));
                changed = true;
            } else if label[q].is_some() && label[p].is_none() {
                label[p] = Some(label[q].clone().unwrap().mul(&step.inverse()));
                changed = true;
            }
        }
    }
    let gens: Vec<GroupWord> = edges
        .iter()
        .filter_map(|&(p, c, q)| {
            let (lp, lq) = (label[p].as_ref()?, label[q].as_ref()?);
            Some(lp.mul(&GroupWord::from_positive(&c.to_string())).mul(&lq.inverse()))
        })
        .collect();
    fold_stallings(alphabet, &gens)
}

/// A finite automaton over `X ∪ X⁻¹` read as a subset of the free group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupAutomaton {
    base: Vec<char>,
    dfa: Dfa,
    reduced: bool,
}

impl GroupAutomaton {
    /// Wraps an automaton over the doubled alphabet of `base`.
    pub fn new(base: &[char], dfa: Dfa) -> Result<Self, FreeGroupError> {
        let alpha = doubled_alphabet(base)?;
        if dfa.alphabet() != alpha.as_slice() {
            return Err(FreeGroupError::Lang(LangError::AlphabetMismatch(dfa.alphabet().to_vec(), alpha.clone())));
        }
        Ok(GroupAutomaton { base: base.to_vec(), dfa, reduced: false })
    }

    pub fn from_regex(base: &[char], e: &RegexAst) -> Result<Self, FreeGroupError> {
        let alpha = doubled_alphabet(base)?;
        for c in e.letters() {
            if !alpha.contains(&c) {
                return Err(FreeGroupError::Lang(LangError::UnknownLetter(c)));
            }
        }
        Ok(GroupAutomaton { base: base.to_vec(), dfa: compile(e, &alpha), reduced: false })
    }

    pub fn empty(base: &[char]) -> Result<Self, FreeGroupError> {
        let alpha = doubled_alphabet(base)?;
        Ok(GroupAutomaton { base: base.to_vec(), dfa: Dfa::empty(&alpha), reduced: true })
    }

    pub fn base(&self) -> &[char] {
        &self.base
    }

    pub fn dfa(&self) -> &Dfa {
        &self.dfa
    }

    pub fn is_reduced_form(&self) -> bool {
        self.reduced
    }

    /// Membership of the element represented by `w`; exact only for
    /// reduced-form automata.
    pub fn member(&self, w: &GroupWord) -> bool {
        let enc = w.reduce().encoded();
        if enc.chars().any(|c| self.dfa.letter_index(c).is_err()) {
            return false;
        }
        self.dfa.accepts(&enc).unwrap_or(false)
    }

    /// Accepted reduced words up to the given length, shortlex.
    pub fn elements_up_to(&self, max_len: usize) -> Vec<GroupWord> {
        self.dfa.words_up_to(max_len).iter().map(|w| GroupWord::from_encoded(w).expect("doubled alphabet")).collect()
    }

    /// The shortlex-least common element, if any.
    pub fn intersection_witness(&self, other: &GroupAutomaton) -> Result<Option<GroupWord>, FreeGroupError> {
        let (a, b) = align(self, other)?;
        let i = a.dfa.intersect(&b.dfa)?;
        Ok(i.shortest_word().map(|w| GroupWord::from_encoded(&w).expect("doubled alphabet")))
    }

    pub fn union(&self, other: &GroupAutomaton) -> Result<GroupAutomaton, FreeGroupError> {
        let (a, b) = align(self, other)?;
        Ok(GroupAutomaton { base: a.base.clone(), dfa: a.dfa.union(&b.dfa)?, reduced: a.reduced && b.reduced })
    }

    pub fn concat(&self, other: &GroupAutomaton) -> Result<GroupAutomaton, FreeGroupError> {
        let (a, b) = align(self, other)?;
        Ok(GroupAutomaton { base: a.base.clone(), dfa: a.dfa.concat(&b.dfa)?, reduced: false })
    }

    /// Re-expresses the automaton over a larger base alphabet.
    pub fn extend_base(&self, base: &[char]) -> Result<GroupAutomaton, FreeGroupError> {
        if base == self.base.as_slice() {
            return Ok(self.clone());
        }
        let alpha = doubled_alphabet(base)?;
        let old = self.dfa.alphabet();
        let n = self.dfa.num_states();
        let sink = n;
        let mut trans = vec![vec![sink; alpha.len()]; n + 1];
        for q in 0..n {
            for (li, c) in alpha.iter().enumerate() {
                if let Some(oi) = old.iter().position(|d| d == c) {
                    trans[q][li] = self.dfa.next(q, oi);
                }
            }
        }
        let mut finals: Vec<bool> = (0..n).map(|q| self.dfa.is_final(q)).collect();
        finals.push(false);
        let dfa = Dfa::from_parts(alpha, self.dfa.initial(), finals, trans).minimize();
        Ok(GroupAutomaton { base: base.to_vec(), dfa, reduced: self.reduced })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = self.dfa.to_json();
        v["reducedForm"] = serde_json::Value::Bool(self.reduced);
        v
    }

    pub fn to_dot(&self) -> String {
        self.dfa.to_dot()
    }
}

fn align(a: &GroupAutomaton, b: &GroupAutomaton) -> Result<(GroupAutomaton, GroupAutomaton), FreeGroupError> {
    let base: Vec<char> = a.base.iter().chain(b.base.iter()).copied().collect::<BTreeSet<_>>().into_iter().collect();
    Ok((a.extend_base(&base)?, b.extend_base(&base)?))
}

/// Benois reduction: saturate with ε-moves across cancelling pairs, then keep
/// only reduced words. The result accepts exactly the reduced forms of the
/// elements of the input subset.
pub fn benois_reduce(a: &GroupAutomaton) -> Result<GroupAutomaton, FreeGroupError> {
    let d = a.dfa();
    let alpha = d.alphabet().to_vec();
    let inv: Vec<usize> = alpha
        .iter()
        .map(|&c| {
            let s = Sym::from_char(c).expect("doubled").inverse().to_char();
            alpha.iter().position(|&x| x == s).expect("doubled")
        })
        .collect();
    // trim: keep reachable and co-reachable states
    let n = d.num_states();
    let live = d.live_states();
    let mut reach = vec![false; n];
    reach[d.initial()] = true;
    let mut stack = vec![d.initial()];
    while let Some(q) = stack.pop() {
        for li in 0..alpha.len() {
            let r = d.next(q, li);
            if !reach[r] {
                reach[r] = true;
                stack.push(r);
            }
        }
    }
    let useful: Vec<bool> = (0..n).map(|q| reach[q] && live[q]).collect();
    if !useful[d.initial()] {
        return GroupAutomaton::empty(&a.base);
    }
    let mut eps = vec![vec![false; n]; n];
    for (q, row) in eps.iter_mut().enumerate() {
        row[q] = true;
    }
    loop {
        let mut added = false;
        for p in 0..n {
            if !useful[p] {
                continue;
            }
            let mut targets = BTreeSet::new();
            for r in (0..n).filter(|&r| eps[p][r] && useful[r]) {
                for li in 0..alpha.len() {
                    let r2 = d.next(r, li);
                    if !useful[r2] {
                        continue;
                    }
                    for r3 in (0..n).filter(|&r3| eps[r2][r3] && useful[r3]) {
                        let q = d.next(r3, inv[li]);
                        if useful[q] {
                            targets.insert(q);
                        }
                    }
                }
            }
            for q in targets {
                if !eps[p][q] {
                    eps[p][q] = true;
                    added = true;
                }
            }
        }
        if !added {
            break;
        }
        // transitive closure
        for k in 0..n {
            for i in 0..n {
                if eps[i][k] {
                    for j in 0..n {
                        if eps[k][j] {
                            eps[i][j] = true;
                        }
                    }
                }
            }
        }
    }
    let mut nfa = Nfa::new(alpha.clone());
    for _ in 0..n {
        nfa.add_state();
    }
    nfa.add_initial(d.initial());
    for p in (0..n).filter(|&p| useful[p]) {
        nfa.set_final(p, d.is_final(p));
        for li in 0..alpha.len() {
            let q = d.next(p, li);
            if useful[q] {
                nfa.add_trans(p, li, q);
            }
        }
        for q in (0..n).filter(|&q| q != p && eps[p][q] && useful[q]) {
            nfa.add_eps(p, q);
        }
    }
    let red = reduced_words_dfa(&a.base)?;
    let dfa = nfa.determinize().intersect(&red)?;
    Ok(GroupAutomaton { base: a.base.clone(), dfa, reduced: true })
}

/// Subgroup generated by the elements of `L(a)`, via generators
/// `u_p x u_q⁻¹` along a spanning tree of the trimmed automaton.
pub fn subgroup_of_rational(base: &[char], d: &Dfa) -> Result<StallingsGraph, FreeGroupError> {
    let alpha = d.alphabet();
    let syms: Vec<Sym> = alpha.iter().map(|&c| Sym::from_char(c)).collect::<Result<_, _>>()?;
    let live = d.live_states();
    if !live[d.initial()] {
        return Err(FreeGroupError::EmptyLanguage);
    }
    let n = d.num_states();
    let mut label: Vec<Option<GroupWord>> = vec![None; n];
    label[d.initial()] = Some(GroupWord::identity());
    let mut queue = VecDeque::from([d.initial()]);
    let mut order = vec![];
    while let Some(q) = queue.pop_front() {
        order.push(q);
        for (li, &s) in syms.iter().enumerate() {
            let r = d.next(q, li);
            if live[r] && label[r].is_none() {
                let mut w = label[q].clone().unwrap();
                w.syms.push(s);
                label[r] = Some(w);
                queue.push_back(r);
            }
        }
    }
    let mut gens = vec![];
    for &p in &order {
        let up = label[p].clone().unwrap();
        if d.is_final(p) {
            gens.push(up.reduce());
        }
        for (li, &s) in syms.iter().enumerate() {
            let q = d.next(p, li);
            if let Some(uq) = &label[q] {
                gens.push(up.mul(&GroupWord::from_syms(vec![s])).mul(&uq.inverse()));
            }
        }
    }
    let mut letters: BTreeSet<char> = base.iter().copied().collect();
    letters.extend(syms.iter().map(|s| s.letter));
    Ok(fold_stallings(&letters.into_iter().collect::<Vec<_>>(), &gens))
}

/// The closure in the profinite group topology of `L(e)`, as reduced words.
pub fn closure_g(base: &[char], e: &RegexAst) -> Result<GroupAutomaton, FreeGroupError> {
    let alpha = doubled_alphabet(base)?;
    let lift = |d: Dfa| GroupAutomaton::new(base, d);
    Ok(match e {
        RegexAst::Empty => GroupAutomaton::empty(base)?,
        RegexAst::Letter(c) => {
            if !alpha.contains(c) {
                return Err(FreeGroupError::Lang(LangError::UnknownLetter(*c)));
            }
            let mut g = lift(compile(e, &alpha))?;
            g.reduced = true;
            g
        }
        RegexAst::Union(l, r) => {
            let mut g = closure_g(base, l)?.union(&closure_g(base, r)?)?;
            g.reduced = true;
            g
        }
        RegexAst::Concat(l, r) => benois_reduce(&closure_g(base, l)?.concat(&closure_g(base, r)?)?)?,
        RegexAst::Plus(inner) => {
            let d = GroupAutomaton::from_regex(base, inner)?;
            match subgroup_of_rational(base, d.dfa()) {
                Ok(h) => {
                    let mut g = lift(h.to_reduced_dfa())?;
                    g.reduced = true;
                    g
                }
                Err(FreeGroupError::EmptyLanguage) => GroupAutomaton::empty(base)?,
                Err(other) => return Err(other),
            }
        }
    })
}

/// Exact membership in a reduced-form automaton.
pub fn rational_member(a: &GroupAutomaton, w: &GroupWord) -> bool {
    a.member(w)
}

/// Whether the two subsets (reduced forms) are disjoint.
pub fn intersect_empty_g(a: &GroupAutomaton, b: &GroupAutomaton) -> Result<bool, FreeGroupError> {
    Ok(a.intersection_witness(b)?.is_none())
}
