//! Rational languages of `X⁺`: regular expressions without star, Thompson
//! automata, subset construction, Hopcroft minimization, Boolean and rational
//! operations, syntactic semigroups, and a couple of word-combinatorics helpers.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::semigroup::{FiniteSemigroup, SemigroupMorphism};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LangError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("letter {0:?} is not in the alphabet")]
    UnknownLetter(char),
    #[error("alphabets differ: {0:?} vs {1:?}")]
    AlphabetMismatch(Vec<char>, Vec<char>),
    #[error("operation {0} needs a second operand")]
    MissingOperand(&'static str),
}

/// Regular expressions over `X⁺`: no star and no empty word.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegexAst {
    Empty,
    Letter(char),
    Union(Box<RegexAst>, Box<RegexAst>),
    Concat(Box<RegexAst>, Box<RegexAst>),
    Plus(Box<RegexAst>),
}

impl RegexAst {
    pub fn letter(c: char) -> Self {
        RegexAst::Letter(c)
    }

    pub fn union(l: RegexAst, r: RegexAst) -> Self {
        match (l, r) {
            (RegexAst::Empty, x) | (x, RegexAst::Empty) => x,
            (l, r) if l == r => l,
            (l, r) => RegexAst::Union(Box::new(l), Box::new(r)),
        }
    }

    pub fn concat(l: RegexAst, r: RegexAst) -> Self {
        match (l, r) {
            (RegexAst::Empty, _) | (_, RegexAst::Empty) => RegexAst::Empty,
            (l, r) => RegexAst::Concat(Box::new(l), Box::new(r)),
        }
    }

    pub fn plus(e: RegexAst) -> Self {
        match e {
            RegexAst::Empty => RegexAst::Empty,
            p @ RegexAst::Plus(_) => p,
            e => RegexAst::Plus(Box::new(e)),
        }
    }

    /// The regex of a single nonempty word.
    pub fn word(w: &str) -> Self {
        let mut chars = w.chars();
        let first = chars.next().expect("word regex needs a nonempty word");
        chars.fold(RegexAst::Letter(first), |acc, c| RegexAst::concat(acc, RegexAst::Letter(c)))
    }

    pub fn letters(&self) -> BTreeSet<char> {
        let mut out = BTreeSet::new();
        self.collect_letters(&mut out);
        out
    }

    fn collect_letters(&self, out: &mut BTreeSet<char>) {
        match self {
            RegexAst::Empty => {}
            RegexAst::Letter(c) => {
                out.insert(*c);
            }
            RegexAst::Union(l, r) | RegexAst::Concat(l, r) => {
                l.collect_letters(out);
                r.collect_letters(out);
            }
            RegexAst::Plus(e) => e.collect_letters(out),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            RegexAst::Empty | RegexAst::Letter(_) => 1,
            RegexAst::Union(l, r) | RegexAst::Concat(l, r) => 1 + l.size() + r.size(),
            RegexAst::Plus(e) => 1 + e.size(),
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        // 0: union context, 1: concat operand, 2: iterated operand
        match self {
            RegexAst::Empty => write!(f, "∅"),
            RegexAst::Letter(c) => write!(f, "{c}"),
            RegexAst::Union(l, r) => {
                if prec > 0 {
                    write!(f, "(")?;
                }
                l.fmt_prec(f, 0)?;
                write!(f, " + ")?;
                r.fmt_prec(f, 0)?;
                if prec > 0 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            RegexAst::Concat(l, r) => {
                if prec > 1 {
                    write!(f, "(")?;
                }
                l.fmt_prec(f, 1)?;
                r.fmt_prec(f, 1)?;
                if prec > 1 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            RegexAst::Plus(e) => {
                e.fmt_prec(f, 2)?;
                write!(f, "^+")
            }
        }
    }
}

impl fmt::Display for RegexAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Sorted, deduplicated letters of the given texts that are not regex syntax.
pub fn infer_alphabet<'a>(texts: impl IntoIterator<Item = &'a str>) -> Vec<char> {
    let mut set = BTreeSet::new();
    for t in texts {
        for c in t.chars() {
            if !is_syntax(c) {
                set.insert(c);
            }
        }
    }
    set.into_iter().collect()
}

fn is_syntax(c: char) -> bool {
    c.is_whitespace() || matches!(c, '+' | '^' | '(' | ')' | '∅')
}

/// Parses `+` (union), juxtaposition (product), postfix `^+` (iteration),
/// parentheses and `∅`. Every letter must belong to `alphabet`.
pub fn parse_regex(text: &str, alphabet: &[char]) -> Result<RegexAst, LangError> {
    let tokens: Vec<(usize, char)> = text.chars().enumerate().filter(|(_, c)| !c.is_whitespace()).collect();
    let mut p = RegexParser { tokens, pos: 0, alphabet, end: text.chars().count() };
    let ast = p.union()?;
    if let Some(&(pos, c)) = p.tokens.get(p.pos) {
        return Err(LangError::Syntax { pos, msg: format!("unexpected {c:?}") });
    }
    Ok(ast)
}

struct RegexParser<'a> {
    tokens: Vec<(usize, char)>,
    pos: usize,
    alphabet: &'a [char],
    end: usize,
}

impl RegexParser<'_> {
    fn peek(&self) -> Option<char> {
        self.tokens.get(self.pos).map(|t| t.1)
    }

    fn here(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn union(&mut self) -> Result<RegexAst, LangError> {
        let mut acc = self.concat()?;
        while self.peek() == Some('+') {
            self.pos += 1;
            let rhs = self.concat()?;
            acc = RegexAst::Union(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn concat(&mut self) -> Result<RegexAst, LangError> {
        let mut acc = self.postfix()?;
        while matches!(self.peek(), Some(c) if c == '(' || c == '∅' || !is_syntax(c)) {
            let rhs = self.postfix()?;
            acc = RegexAst::Concat(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn postfix(&mut self) -> Result<RegexAst, LangError> {
        let mut acc = self.atom()?;
        while self.peek() == Some('^') {
            let at = self.here();
            self.pos += 1;
            if self.peek() != Some('+') {
                return Err(LangError::Syntax { pos: at, msg: "expected `+` after `^`".into() });
            }
            self.pos += 1;
            acc = RegexAst::Plus(Box::new(acc));
        }
        Ok(acc)
    }

    fn atom(&mut self) -> Result<RegexAst, LangError> {
        let pos = self.here();
        match self.peek() {
            None => Err(LangError::Syntax { pos, msg: "unexpected end of input".into() }),
            Some('(') => {
                self.pos += 1;
                let inner = self.union()?;
                if self.peek() != Some(')') {
                    return Err(LangError::Syntax { pos: self.here(), msg: "expected `)`".into() });
                }
                self.pos += 1;
                Ok(inner)
            }
            Some('∅') => {
                self.pos += 1;
                Ok(RegexAst::Empty)
            }
            Some(c) if !is_syntax(c) => {
                if !self.alphabet.contains(&c) {
                    return Err(LangError::Syntax { pos, msg: format!("letter {c:?} is not in the alphabet") });
                }
                self.pos += 1;
                Ok(RegexAst::Letter(c))
            }
            Some(c) => Err(LangError::Syntax { pos, msg: format!("unexpected {c:?}") }),
        }
    }
}

/// Nondeterministic automaton with ε-transitions.
#[derive(Debug, Clone)]
pub struct Nfa {
    alphabet: Vec<char>,
    initial: Vec<usize>,
    finals: Vec<bool>,
    eps: Vec<Vec<usize>>,
    trans: Vec<Vec<(usize, usize)>>,
}

impl Nfa {
    pub fn new(alphabet: Vec<char>) -> Self {
        Self { alphabet, initial: vec![], finals: vec![], eps: vec![], trans: vec![] }
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    pub fn num_states(&self) -> usize {
        self.finals.len()
    }

    pub fn add_state(&mut self) -> usize {
        self.finals.push(false);
        self.eps.push(vec![]);
        self.trans.push(vec![]);
        self.finals.len() - 1
    }

    pub fn add_initial(&mut self, q: usize) {
        if !self.initial.contains(&q) {
            self.initial.push(q);
        }
    }

    pub fn set_final(&mut self, q: usize, f: bool) {
        self.finals[q] = f;
    }

    pub fn add_eps(&mut self, p: usize, q: usize) {
        if !self.eps[p].contains(&q) {
            self.eps[p].push(q);
        }
    }

    /// Adds `p --letter--> q`, where `letter` indexes the alphabet.
    pub fn add_trans(&mut self, p: usize, letter: usize, q: usize) {
        if !self.trans[p].contains(&(letter, q)) {
            self.trans[p].push((letter, q));
        }
    }

    pub fn eps_edges(&self, p: usize) -> &[usize] {
        &self.eps[p]
    }

    pub fn edges(&self, p: usize) -> &[(usize, usize)] {
        &self.trans[p]
    }

    pub fn initial(&self) -> &[usize] {
        &self.initial
    }

    pub fn is_final(&self, q: usize) -> bool {
        self.finals[q]
    }

    /// Thompson construction.
    pub fn thompson(e: &RegexAst, alphabet: &[char]) -> Self {
        let mut nfa = Nfa::new(alphabet.to_vec());
        let (s, f) = nfa.fragment(e);
        nfa.add_initial(s);
        nfa.set_final(f, true);
        nfa
    }

    fn fragment(&mut self, e: &RegexAst) -> (usize, usize) {
        match e {
            RegexAst::Empty => (self.add_state(), self.add_state()),
            RegexAst::Letter(c) => {
                let (s, f) = (self.add_state(), self.add_state());
                let li = self.alphabet.iter().position(|x| x == c).expect("letter checked by the parser");
                self.add_trans(s, li, f);
                (s, f)
            }
            RegexAst::Union(l, r) => {
                let (s, f) = (self.add_state(), self.add_state());
                let (ls, lf) = self.fragment(l);
                let (rs, rf) = self.fragment(r);
                self.add_eps(s, ls);
                self.add_eps(s, rs);
                self.add_eps(lf, f);
                self.add_eps(rf, f);
                (s, f)
            }
            RegexAst::Concat(l, r) => {
                let (ls, lf) = self.fragment(l);
                let (rs, rf) = self.fragment(r);
                self.add_eps(lf, rs);
                (ls, rf)
            }
            RegexAst::Plus(inner) => {
                let (s, f) = (self.add_state(), self.add_state());
                let (is, i_f) = self.fragment(inner);
                self.add_eps(s, is);
                self.add_eps(i_f, f);
                self.add_eps(i_f, is);
                (s, f)
            }
        }
    }

    pub fn from_dfa(d: &Dfa) -> Self {
        let mut nfa = Nfa::new(d.alphabet.clone());
        for q in 0..d.num_states() {
            nfa.add_state();
            nfa.set_final(q, d.is_final(q));
        }
        for q in 0..d.num_states() {
            for li in 0..d.alphabet.len() {
                nfa.add_trans(q, li, d.next(q, li));
            }
        }
        nfa.add_initial(d.initial);
        nfa
    }

    /// Appends a disjoint copy of `other`, returning the offset of its states.
    pub fn absorb(&mut self, other: &Nfa) -> usize {
        assert_eq!(self.alphabet, other.alphabet);
        let off = self.num_states();
        for q in 0..other.num_states() {
            let nq = self.add_state();
            self.finals[nq] = other.finals[q];
        }
        for q in 0..other.num_states() {
            for &r in &other.eps[q] {
                self.add_eps(q + off, r + off);
            }
            for &(l, r) in &other.trans[q] {
                self.add_trans(q + off, l, r + off);
            }
        }
        off
    }

    pub fn eps_closure(&self, set: &mut BTreeSet<usize>) {
        let mut stack: Vec<usize> = set.iter().copied().collect();
        while let Some(p) = stack.pop() {
            for &q in &self.eps[p] {
                if set.insert(q) {
                    stack.push(q);
                }
            }
        }
    }

    /// Subset construction; the result is complete but not minimized.
    pub fn determinize(&self) -> Dfa {
        let k = self.alphabet.len();
        let mut start: BTreeSet<usize> = self.initial.iter().copied().collect();
        self.eps_closure(&mut start);
        let mut index: HashMap<BTreeSet<usize>, usize> = HashMap::new();
        let mut sets = vec![start.clone()];
        index.insert(start, 0);
        let mut trans = vec![];
        let mut i = 0;
        while i < sets.len() {
            for li in 0..k {
                let mut next = BTreeSet::new();
                for &p in &sets[i] {
                    for &(l, q) in &self.trans[p] {
                        if l == li {
                            next.insert(q);
                        }
                    }
                }
                self.eps_closure(&mut next);
                let id = match index.get(&next) {
                    Some(&id) => id,
                    None => {
                        sets.push(next.clone());
                        index.insert(next, sets.len() - 1);
                        sets.len() - 1
                    }
                };
                trans.push(id);
            }
            i += 1;
        }
        let finals = sets.iter().map(|s| s.iter().any(|&q| self.finals[q])).collect();
        Dfa { alphabet: self.alphabet.clone(), initial: 0, finals, trans }
    }
}

/// Complete deterministic automaton. States are `0..num_states()`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dfa {
    alphabet: Vec<char>,
    initial: usize,
    finals: Vec<bool>,
    trans: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LangOpKind {
    Union,
    Intersect,
    Concat,
    Plus,
    ComplementWithinXPlus,
}

#[derive(Serialize)]
struct DfaJson {
    alphabet: Vec<String>,
    states: Vec<usize>,
    initial: usize,
    finals: Vec<usize>,
    transitions: Vec<TransitionJson>,
}

#[derive(Serialize)]
struct TransitionJson {
    from: usize,
    letter: String,
    to: usize,
}

impl Dfa {
    /// Builds a complete automaton; `trans[q][l]` is the target of state `q` on
    /// the `l`-th letter.
    pub fn from_parts(alphabet: Vec<char>, initial: usize, finals: Vec<bool>, trans: Vec<Vec<usize>>) -> Self {
        let n = finals.len();
        assert!(initial < n && trans.len() == n);
        assert!(trans.iter().all(|row| row.len() == alphabet.len() && row.iter().all(|&q| q < n)));
        Self { alphabet, initial, finals, trans: trans.into_iter().flatten().collect() }
    }

    /// Automaton accepting nothing.
    pub fn empty(alphabet: &[char]) -> Self {
        Self { alphabet: alphabet.to_vec(), initial: 0, finals: vec![false], trans: vec![0; alphabet.len()] }
    }

    /// Automaton for `X⁺`.
    pub fn all_nonempty(alphabet: &[char]) -> Self {
        Self { alphabet: alphabet.to_vec(), initial: 0, finals: vec![false, true], trans: [vec![1; alphabet.len()], vec![1; alphabet.len()]].concat() }
    }

    /// Minimal automaton of a finite set of words (which must be nonempty words
    /// if the result is to stay inside `X⁺`).
    pub fn from_words<S: AsRef<str>>(alphabet: &[char], words: &[S]) -> Result<Self, LangError> {
        let mut nfa = Nfa::new(alphabet.to_vec());
        let root = nfa.add_state();
        nfa.add_initial(root);
        for w in words {
            let mut cur = root;
            for c in w.as_ref().chars() {
                let li = alphabet.iter().position(|&x| x == c).ok_or(LangError::UnknownLetter(c))?;
                let nq = nfa.add_state();
                nfa.add_trans(cur, li, nq);
                cur = nq;
            }
            nfa.set_final(cur, true);
        }
        Ok(nfa.determinize().minimize())
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    pub fn num_states(&self) -> usize {
        self.finals.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn is_final(&self, q: usize) -> bool {
        self.finals[q]
    }

    pub fn finals(&self) -> Vec<usize> {
        (0..self.num_states()).filter(|&q| self.finals[q]).collect()
    }

    #[inline]
    pub fn next(&self, q: usize, letter: usize) -> usize {
        self.trans[q * self.alphabet.len() + letter]
    }

    pub fn letter_index(&self, c: char) -> Result<usize, LangError> {
        self.alphabet.iter().position(|&x| x == c).ok_or(LangError::UnknownLetter(c))
    }

    /// State reached from `q` by `w`.
    pub fn run_from(&self, q: usize, w: &str) -> Result<usize, LangError> {
        w.chars().try_fold(q, |q, c| Ok(self.next(q, self.letter_index(c)?)))
    }

    pub fn accepts(&self, w: &str) -> Result<bool, LangError> {
        Ok(self.finals[self.run_from(self.initial, w)?])
    }

    fn reachable(&self) -> Vec<usize> {
        let mut order = vec![self.initial];
        let mut seen = vec![false; self.num_states()];
        seen[self.initial] = true;
        let mut i = 0;
        while i < order.len() {
            for li in 0..self.alphabet.len() {
                let q = self.next(order[i], li);
                if !seen[q] {
                    seen[q] = true;
                    order.push(q);
                }
            }
            i += 1;
        }
        order
    }

    /// Renumbers reachable states in BFS order from the initial state, letters
    /// in alphabet order; unreachable states are dropped.
    pub fn canonical(&self) -> Dfa {
        let order = self.reachable();
        let mut new_id = vec![usize::MAX; self.num_states()];
        for (i, &q) in order.iter().enumerate() {
            new_id[q] = i;
        }
        let k = self.alphabet.len();
        let mut trans = Vec::with_capacity(order.len() * k);
        for &q in &order {
            for li in 0..k {
                trans.push(new_id[self.next(q, li)]);
            }
        }
        Dfa { alphabet: self.alphabet.clone(), initial: 0, finals: order.iter().map(|&q| self.finals[q]).collect(), trans }
    }

    /// Hopcroft partition refinement followed by canonical renumbering.
    pub fn minimize(&self) -> Dfa {
        let d = self.canonical();
        let n = d.num_states();
        let k = d.alphabet.len();
        let mut inv: Vec<Vec<Vec<usize>>> = vec![vec![vec![]; n]; k];
        for q in 0..n {
            for li in 0..k {
                inv[li][d.next(q, li)].push(q);
            }
        }
        let mut block_of = vec![0usize; n];
        let mut blocks: Vec<Vec<usize>> = vec![];
        let (fin, non): (Vec<usize>, Vec<usize>) = (0..n).partition(|&q| d.finals[q]);
        for b in [fin, non] {
            if !b.is_empty() {
                for &q in &b {
                    block_of[q] = blocks.len();
                }
                blocks.push(b);
            }
        }
        let mut in_work: Vec<Vec<bool>> = vec![vec![false; k]; blocks.len()];
        let mut work: VecDeque<(usize, usize)> = VecDeque::new();
        if blocks.len() == 2 {
            let small = if blocks[0].len() <= blocks[1].len() { 0 } else { 1 };
            for li in 0..k {
                work.push_back((small, li));
                in_work[small][li] = true;
            }
        }
        let mut mark = vec![false; n];
        while let Some((b, li)) = work.pop_front() {
            in_work[b][li] = false;
            let mut touched: Vec<usize> = vec![];
            let mut preimage: Vec<usize> = vec![];
            for &q in &blocks[b] {
                for &p in &inv[li][q] {
                    if !mark[p] {
                        mark[p] = true;
                        preimage.push(p);
                        if !touched.contains(&block_of[p]) {
                            touched.push(block_of[p]);
                        }
                    }
                }
            }
            for y in touched {
                let (inside, outside): (Vec<usize>, Vec<usize>) = blocks[y].iter().partition(|&&q| mark[q]);
                if outside.is_empty() {
                    continue;
                }
                let new_b = blocks.len();
                let (keep, moved) = if inside.len() <= outside.len() { (outside, inside) } else { (inside, outside) };
                for &q in &moved {
                    block_of[q] = new_b;
                }
                blocks[y] = keep;
                blocks.push(moved);
                in_work.push(vec![false; k]);
                // whether or not (y, l) is pending, the smaller half must be queued
                for l2 in 0..k {
                    in_work[new_b][l2] = true;
                    work.push_back((new_b, l2));
                }
            }
            for p in preimage {
                mark[p] = false;
            }
        }
        let nb = blocks.len();
        let mut trans = vec![0; nb * k];
        let mut finals = vec![false; nb];
        for (bi, b) in blocks.iter().enumerate() {
            let rep = b[0];
            finals[bi] = d.finals[rep];
            for li in 0..k {
                trans[bi * k + li] = block_of[d.next(rep, li)];
            }
        }
        Dfa { alphabet: d.alphabet.clone(), initial: block_of[d.initial], finals, trans }.canonical()
    }

    fn check_alphabet(&self, other: &Dfa) -> Result<(), LangError> {
        if self.alphabet != other.alphabet {
            return Err(LangError::AlphabetMismatch(self.alphabet.clone(), other.alphabet.clone()));
        }
        Ok(())
    }

    /// Product automaton with acceptance given by `keep(in_self, in_other)`.
    pub fn product(&self, other: &Dfa, keep: impl Fn(bool, bool) -> bool) -> Result<Dfa, LangError> {
        self.check_alphabet(other)?;
        let k = self.alphabet.len();
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut pairs = vec![(self.initial, other.initial)];
        index.insert(pairs[0], 0);
        let mut trans = vec![];
        let mut i = 0;
        while i < pairs.len() {
            let (p, q) = pairs[i];
            for li in 0..k {
                let nx = (self.next(p, li), other.next(q, li));
                let id = *index.entry(nx).or_insert_with(|| {
                    pairs.push(nx);
                    pairs.len() - 1
                });
                trans.push(id);
            }
            i += 1;
        }
        let finals = pairs.iter().map(|&(p, q)| keep(self.finals[p], other.finals[q])).collect();
        Ok(Dfa { alphabet: self.alphabet.clone(), initial: 0, finals, trans }.minimize())
    }

    pub fn union(&self, other: &Dfa) -> Result<Dfa, LangError> {
        self.product(other, |a, b| a || b)
    }

    pub fn intersect(&self, other: &Dfa) -> Result<Dfa, LangError> {
        self.product(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &Dfa) -> Result<Dfa, LangError> {
        self.product(other, |a, b| a && !b)
    }

    pub fn concat(&self, other: &Dfa) -> Result<Dfa, LangError> {
        self.check_alphabet(other)?;
        let mut nfa = Nfa::from_dfa(self);
        let off = nfa.absorb(&Nfa::from_dfa(other));
        for q in 0..self.num_states() {
            if self.finals[q] {
                nfa.set_final(q, false);
                nfa.add_eps(q, other.initial + off);
            }
        }
        // languages of X⁺ never accept at the start of `other`, but general
        // automata might
        for q in 0..self.num_states() {
            if self.finals[q] && other.finals[other.initial] {
                nfa.set_final(q, true);
            }
        }
        Ok(nfa.determinize().minimize())
    }

    pub fn plus(&self) -> Dfa {
        let mut nfa = Nfa::from_dfa(self);
        for q in 0..self.num_states() {
            if self.finals[q] {
                nfa.add_eps(q, self.initial);
            }
        }
        nfa.determinize().minimize()
    }

    /// `X⁺ ∖ L`.
    pub fn complement_within_plus(&self) -> Dfa {
        let plus = Dfa::all_nonempty(&self.alphabet);
        plus.difference(self).expect("same alphabet")
    }

    pub fn lang_op(kind: LangOpKind, a: &Dfa, b: Option<&Dfa>) -> Result<Dfa, LangError> {
        let need = |name| b.ok_or(LangError::MissingOperand(name));
        match kind {
            LangOpKind::Union => a.union(need("union")?),
            LangOpKind::Intersect => a.intersect(need("intersect")?),
            LangOpKind::Concat => a.concat(need("concat")?),
            LangOpKind::Plus => Ok(a.plus()),
            LangOpKind::ComplementWithinXPlus => Ok(a.complement_within_plus()),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.shortest_word().is_none()
    }

    /// Shortlex-least accepted word.
    pub fn shortest_word(&self) -> Option<String> {
        let n = self.num_states();
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[self.initial] = true;
        let mut queue = VecDeque::from([self.initial]);
        while let Some(q) = queue.pop_front() {
            if self.finals[q] {
                let mut word = vec![];
                let mut cur = q;
                while let Some((p, li)) = parent[cur] {
                    word.push(self.alphabet[li]);
                    cur = p;
                }
                word.reverse();
                return Some(word.into_iter().collect());
            }
            for li in 0..self.alphabet.len() {
                let r = self.next(q, li);
                if !seen[r] {
                    seen[r] = true;
                    parent[r] = Some((q, li));
                    queue.push_back(r);
                }
            }
        }
        None
    }

    /// Language equality (same alphabet required).
    pub fn equivalent(&self, other: &Dfa) -> bool {
        self.alphabet == other.alphabet && self.minimize() == other.minimize()
    }

    /// States from which some final state is reachable.
    pub fn live_states(&self) -> Vec<bool> {
        let n = self.num_states();
        let mut live = self.finals.clone();
        let mut changed = true;
        while changed {
            changed = false;
            for q in 0..n {
                if !live[q] && (0..self.alphabet.len()).any(|li| live[self.next(q, li)]) {
                    live[q] = true;
                    changed = true;
                }
            }
        }
        live
    }

    /// All accepted words of length at most `max_len`, in shortlex order.
    pub fn words_up_to(&self, max_len: usize) -> Vec<String> {
        let live = self.live_states();
        let mut out = vec![];
        let mut layer: Vec<(String, usize)> = vec![(String::new(), self.initial)];
        for len in 0..=max_len {
            for (w, q) in &layer {
                if self.finals[*q] {
                    out.push(w.clone());
                }
            }
            if len == max_len {
                break;
            }
            let mut next = vec![];
            for (w, q) in &layer {
                for (li, &c) in self.alphabet.iter().enumerate() {
                    let r = self.next(*q, li);
                    if live[r] {
                        let mut w2 = w.clone();
                        w2.push(c);
                        next.push((w2, r));
                    }
                }
            }
            layer = next;
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        self.to_json_with(|c| c.to_string())
    }

    pub fn to_json_with(&self, label: impl Fn(char) -> String) -> serde_json::Value {
        let mut transitions = vec![];
        for q in 0..self.num_states() {
            for (li, &c) in self.alphabet.iter().enumerate() {
                transitions.push(TransitionJson { from: q, letter: label(c), to: self.next(q, li) });
            }
        }
        let j = DfaJson {
            alphabet: self.alphabet.iter().map(|&c| label(c)).collect(),
            states: (0..self.num_states()).collect(),
            initial: self.initial,
            finals: self.finals(),
            transitions,
        };
        serde_json::to_value(j).expect("plain data serializes")
    }

    pub fn to_dot(&self) -> String {
        self.to_dot_with(|c| c.to_string())
    }

    pub fn to_dot_with(&self, label: impl Fn(char) -> String) -> String {
        let mut out = String::from("digraph dfa {\n  rankdir=LR;\n  __start [shape=point];\n");
        for q in 0..self.num_states() {
            let shape = if self.finals[q] { "doublecircle" } else { "circle" };
            out.push_str(&format!("  {q} [shape={shape}];\n"));
        }
        out.push_str(&format!("  __start -> {};\n", self.initial));
        for q in 0..self.num_states() {
            let mut by_target: BTreeMap<usize, Vec<String>> = BTreeMap::new();
            for (li, &c) in self.alphabet.iter().enumerate() {
                by_target.entry(self.next(q, li)).or_default().push(label(c));
            }
            for (r, labels) in by_target {
                out.push_str(&format!("  {q} -> {r} [label=\"{}\"];\n", labels.join(",")));
            }
        }
        out.push_str("}\n");
        out
    }

    /// A regular expression for `L ∩ X⁺`, by state elimination.
    pub fn to_regex(&self) -> RegexAst {
        state_elimination(self).1
    }

    /// Whether the empty word is accepted.
    pub fn accepts_empty(&self) -> bool {
        self.finals[self.initial]
    }
}

/// A language of `X*` as (contains ε, regex of its `X⁺` part).
#[derive(Clone, Debug)]
struct Lab {
    eps: bool,
    plus: RegexAst,
}

impl Lab {
    fn union(a: &Lab, b: &Lab) -> Lab {
        Lab { eps: a.eps || b.eps, plus: RegexAst::union(a.plus.clone(), b.plus.clone()) }
    }

    fn concat(a: &Lab, b: &Lab) -> Lab {
        let mut plus = RegexAst::concat(a.plus.clone(), b.plus.clone());
        if a.eps {
            plus = RegexAst::union(plus, b.plus.clone());
        }
        if b.eps {
            plus = RegexAst::union(plus, a.plus.clone());
        }
        Lab { eps: a.eps && b.eps, plus }
    }

    fn star(a: &Lab) -> Lab {
        Lab { eps: true, plus: RegexAst::plus(a.plus.clone()) }
    }
}

fn state_elimination(d: &Dfa) -> (bool, RegexAst) {
    let d = d.minimize();
    let live = d.live_states();
    let n = d.num_states();
    // nodes 0..n are states, n is the new start, n+1 the new end
    let (start, end) = (n, n + 1);
    let mut r: BTreeMap<(usize, usize), Lab> = BTreeMap::new();
    let add = |r: &mut BTreeMap<(usize, usize), Lab>, i: usize, j: usize, l: Lab| {
        let merged = match r.get(&(i, j)) {
            Some(old) => Lab::union(old, &l),
            None => l,
        };
        r.insert((i, j), merged);
    };
    if !live[d.initial] {
        return (false, RegexAst::Empty);
    }
    add(&mut r, start, d.initial, Lab { eps: true, plus: RegexAst::Empty });
    for q in 0..n {
        if !live[q] {
            continue;
        }
        if d.finals[q] {
            add(&mut r, q, end, Lab { eps: true, plus: RegexAst::Empty });
        }
        for (li, &c) in d.alphabet.iter().enumerate() {
            let t = d.next(q, li);
            if live[t] {
                add(&mut r, q, t, Lab { eps: false, plus: RegexAst::Letter(c) });
            }
        }
    }
    let mut remaining: Vec<usize> = (0..n).filter(|&q| live[q]).collect();
    while !remaining.is_empty() {
        // eliminate the state with the fewest in × out edges
        let cost = |k: usize| {
            let ins = r.keys().filter(|&&(i, j)| j == k && i != k).count();
            let outs = r.keys().filter(|&&(i, j)| i == k && j != k).count();
            ins * outs
        };
        let (pos, &k) = remaining.iter().enumerate().min_by_key(|(_, &k)| (cost(k), k)).unwrap();
        remaining.remove(pos);
        let loop_lab = r.remove(&(k, k)).map(|l| Lab::star(&l));
        let ins: Vec<(usize, Lab)> = r.iter().filter(|(&(_, j), _)| j == k).map(|(&(i, _), l)| (i, l.clone())).collect();
        let outs: Vec<(usize, Lab)> = r.iter().filter(|(&(i, _), _)| i == k).map(|(&(_, j), l)| (j, l.clone())).collect();
        r.retain(|&(i, j), _| i != k && j != k);
        for (i, li) in &ins {
            for (j, lj) in &outs {
                let mid = match &loop_lab {
                    Some(s) => Lab::concat(&Lab::concat(li, s), lj),
                    None => Lab::concat(li, lj),
                };
                add(&mut r, *i, *j, mid);
            }
        }
    }
    match r.get(&(start, end)) {
        Some(l) => (l.eps, l.plus.clone()),
        None => (false, RegexAst::Empty),
    }
}

/// Parse and compile in one step.
pub fn compile_str(text: &str, alphabet: &[char]) -> Result<Dfa, LangError> {
    Ok(compile(&parse_regex(text, alphabet)?, alphabet))
}

/// Thompson construction, subset construction, then minimization.
pub fn compile(e: &RegexAst, alphabet: &[char]) -> Dfa {
    Nfa::thompson(e, alphabet).determinize().minimize()
}

/// Transition semigroup of the minimal automaton together with the letter
/// morphism and the image of the language.
#[derive(Debug, Clone)]
pub struct Syntactic {
    pub morphism: SemigroupMorphism,
    /// `φ(L)`.
    pub accepting: BTreeSet<usize>,
    /// The transformation of the minimal automaton's states realised by each
    /// element (the adjoined identity, if any, is the identity map).
    pub transformations: Vec<Vec<usize>>,
}

impl Syntactic {
    pub fn semigroup(&self) -> &FiniteSemigroup {
        self.morphism.target()
    }

    /// Whether `s` lies in `φ(L)`.
    pub fn accepts_element(&self, s: usize) -> bool {
        self.accepting.contains(&s)
    }
}

pub fn syntactic_semigroup(d: &Dfa) -> Syntactic {
    transition_semigroup(&d.minimize())
}

/// Transition semigroup of `d` as given (no minimization).
pub fn transition_semigroup(d: &Dfa) -> Syntactic {
    let n = d.num_states();
    let k = d.alphabet.len();
    let mut elems: Vec<Vec<usize>> = vec![];
    let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut letter_images = vec![];
    for li in 0..k {
        let t: Vec<usize> = (0..n).map(|q| d.next(q, li)).collect();
        let id = *index.entry(t.clone()).or_insert_with(|| {
            elems.push(t);
            elems.len() - 1
        });
        letter_images.push(id);
    }
    let mut i = 0;
    while i < elems.len() {
        for li in 0..k {
            let t: Vec<usize> = elems[i].iter().map(|&q| d.next(q, li)).collect();
            if !index.contains_key(&t) {
                index.insert(t.clone(), elems.len());
                elems.push(t);
            }
        }
        i += 1;
    }
    let m = elems.len();
    let mut table = vec![vec![0; m]; m];
    for a in 0..m {
        for b in 0..m {
            let t: Vec<usize> = elems[a].iter().map(|&q| elems[b][q]).collect();
            table[a][b] = index[&t];
        }
    }
    let identity = (0..m).find(|&e| elems[e].iter().enumerate().all(|(q, &r)| q == r));
    let sg = FiniteSemigroup::new(table, identity).expect("transformation composition is associative");
    let accepting = (0..m).filter(|&s| d.finals[elems[s][d.initial]]).collect();
    let morphism = SemigroupMorphism::new(d.alphabet.clone(), sg, letter_images).expect("images are elements");
    Syntactic { morphism, accepting, transformations: elems }
}

/// The syntactic semigroup with a fresh identity adjoined (always, as the last
/// element), so that only the empty word maps to it.
pub fn syntactic_monoid(d: &Dfa) -> Syntactic {
    let s = syntactic_semigroup(d);
    let n = s.transformations.first().map_or(0, |t| t.len());
    let target = s.semigroup().with_adjoined_identity();
    let morphism = SemigroupMorphism::new(s.morphism.alphabet().to_vec(), target, s.morphism.images().to_vec()).expect("same images");
    let mut transformations = s.transformations;
    transformations.push((0..n).collect());
    Syntactic { morphism, accepting: s.accepting, transformations }
}

/// `φ^k(x)` for the substitution `x ↦ xy`, `y ↦ yx`.
pub fn thue_morse(k: u32, x: char, y: char) -> String {
    let mut w = vec![false];
    for _ in 0..k {
        w = w.iter().flat_map(|&b| [b, !b]).collect();
    }
    w.into_iter().map(|b| if b { y } else { x }).collect()
}

/// True iff no factor of the form `uuu` with `u` nonempty occurs.
pub fn is_cube_free(w: &str) -> bool {
    let w: Vec<char> = w.chars().collect();
    let n = w.len();
    for p in 1..=n / 3 {
        // a cube of period p is a run of 2p consecutive matches w[i] = w[i+p]
        let mut run = 0;
        for i in 0..n - p {
            if w[i] == w[i + p] {
                run += 1;
                if run >= 2 * p {
                    return false;
                }
            } else {
                run = 0;
            }
        }
    }
    true
}
