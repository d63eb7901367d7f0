//! Factorizations of `ε_n(t)`: histories, filtered sample sequences, limit
//! terms, the splitting balancer, and the factorization multigraph `Γ_k`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::{json, Value};
use thiserror::Error;

use crate::kappa::{factorial, Exponent, Factor, KappaTerm, TermError, MAX_OFFSET};
use crate::rational::{syntactic_monoid, Dfa, Syntactic};
use crate::semigroup::{SemigroupError, SemigroupMorphism};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FactorError {
    #[error(transparent)]
    Term(#[from] TermError),
    #[error(transparent)]
    Semigroup(#[from] SemigroupError),
    #[error("position {pos} is outside 0..{len}")]
    PositionOutOfRange { pos: u64, len: u64 },
    #[error("invalid history: {0}")]
    InvalidHistory(String),
    #[error("inconclusive samples: {0}")]
    Inconclusive(String),
    #[error("unsupported classification: {0}")]
    UnsupportedClassification(String),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("expansion of {0} symbols exceeds the materialization cap")]
    TooLarge(u64),
}

/// Words longer than this are never materialized.
pub const MATERIALIZATION_CAP: u64 = 100_000;

/// A letter of a history.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HistoryLetter {
    /// `(1, j)`: the split falls inside the filler `t_j`.
    Filler(usize),
    /// `(2, j, k, ℓ)`: the split falls inside a copy of `s_j`, with `k`
    /// copies before it and `ℓ` after.
    Block { j: usize, k: u64, l: u64 },
    /// `(x, y)` at a rank-0 level.
    Terminal(String, String),
}

/// Simplified history letter: `(2, j, k, ℓ)` becomes `(2, j)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SimpleLetter {
    Filler(usize),
    Block(usize),
    Terminal(String, String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct History(pub Vec<HistoryLetter>);

impl History {
    pub fn simplified(&self) -> Vec<SimpleLetter> {
        self.0
            .iter()
            .map(|l| match l {
                HistoryLetter::Filler(j) => SimpleLetter::Filler(*j),
                HistoryLetter::Block { j, .. } => SimpleLetter::Block(*j),
                HistoryLetter::Terminal(x, y) => SimpleLetter::Terminal(x.clone(), y.clone()),
            })
            .collect()
    }

    pub fn exponent_vector(&self) -> Vec<(u64, u64)> {
        self.0
            .iter()
            .filter_map(|l| match l {
                HistoryLetter::Block { k, l, .. } => Some((*k, *l)),
                _ => None,
            })
            .collect()
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.0
                .iter()
                .map(|l| match l {
                    HistoryLetter::Filler(j) => json!([1, j]),
                    HistoryLetter::Block { j, k, l } => json!([2, j, k, l]),
                    HistoryLetter::Terminal(x, y) => json!([x, y]),
                })
                .collect(),
        )
    }

    pub fn from_json(v: &Value) -> Result<History, FactorError> {
        let bad = |msg: &str| FactorError::InvalidHistory(msg.to_string());
        let letters = v.as_array().ok_or_else(|| bad("expected an array"))?;
        let mut out = vec![];
        for l in letters {
            let parts = l.as_array().ok_or_else(|| bad("expected an array per letter"))?;
            let num = |i: usize| parts.get(i).and_then(Value::as_u64).ok_or_else(|| bad("expected a nonnegative integer"));
            let letter = match parts.as_slice() {
                [Value::String(x), Value::String(y)] => HistoryLetter::Terminal(x.clone(), y.clone()),
                [_, _] if num(0)? == 1 => HistoryLetter::Filler(num(1)? as usize),
                [_, _, _, _] if num(0)? == 2 => HistoryLetter::Block { j: num(1)? as usize, k: num(2)?, l: num(3)? },
                _ => return Err(bad("unrecognized letter")),
            };
            out.push(letter);
        }
        Ok(History(out))
    }
}

impl fmt::Display for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json())
    }
}

/// A history letter borrowed from a [`Layout`] during enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step<'a> {
    Filler(usize),
    Block { j: usize, k: u64, l: u64 },
    Terminal { word: &'a str, offset: usize },
}

impl Step<'_> {
    pub fn to_letter(self) -> HistoryLetter {
        match self {
            Step::Filler(j) => HistoryLetter::Filler(j),
            Step::Block { j, k, l } => HistoryLetter::Block { j, k, l },
            Step::Terminal { word, offset } => {
                let cut = word.char_indices().nth(offset).map_or(word.len(), |(b, _)| b);
                HistoryLetter::Terminal(word[..cut].to_string(), word[cut..].to_string())
            }
        }
    }
}

pub fn steps_to_history(steps: &[Step<'_>]) -> History {
    History(steps.iter().map(|s| s.to_letter()).collect())
}

/// The layered structure of a term with all block lengths at a fixed `n`.
#[derive(Debug, Clone)]
pub struct Layout {
    len: u64,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    Word(String, usize),
    Layered { fillers: Vec<Layout>, blocks: Vec<(Layout, u64)> },
}

impl Layout {
    pub fn new(t: &KappaTerm, n: u32) -> Result<Layout, FactorError> {
        t.expanded_len(n)?;
        Ok(Self::build(t, n))
    }

    fn build(t: &KappaTerm, n: u32) -> Layout {
        match t.layers() {
            None => {
                let w = t.as_word().expect("rank 0");
                let chars = w.chars().count();
                Layout { len: chars as u64, kind: Kind::Word(w, chars) }
            }
            Some(layers) => {
                let fillers: Vec<Layout> = layers.fillers.iter().map(|f| Self::build(f, n)).collect();
                let blocks: Vec<(Layout, u64)> = layers
                    .blocks
                    .iter()
                    .map(|(s, g)| (Self::build(s, n), Exponent::OmegaPlus(*g).expand(n).expect("checked")))
                    .collect();
                let len = fillers.iter().map(|f| f.len).sum::<u64>() + blocks.iter().map(|(s, e)| s.len * e).sum::<u64>();
                Layout { len, kind: Kind::Layered { fillers, blocks } }
            }
        }
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Calls `f(position, history)` for every factorization, in increasing
    /// position order.
    pub fn for_each<'a>(&'a self, f: &mut impl FnMut(u64, &[Step<'a>])) {
        let mut stack = Vec::with_capacity(8);
        self.visit(0, &mut stack, f);
    }

    fn visit<'a>(&'a self, base: u64, stack: &mut Vec<Step<'a>>, f: &mut impl FnMut(u64, &[Step<'a>])) {
        match &self.kind {
            Kind::Word(w, chars) => {
                for offset in 0..*chars {
                    stack.push(Step::Terminal { word: w, offset });
                    f(base + offset as u64, stack);
                    stack.pop();
                }
            }
            Kind::Layered { fillers, blocks } => {
                let mut pos = base;
                for (j, filler) in fillers.iter().enumerate() {
                    if filler.len > 0 {
                        stack.push(Step::Filler(j));
                        filler.visit(pos, stack, f);
                        stack.pop();
                        pos += filler.len;
                    }
                    if let Some((s, e)) = blocks.get(j) {
                        for k in 0..*e {
                            stack.push(Step::Block { j: j + 1, k, l: e - k - 1 });
                            s.visit(pos + k * s.len, stack, f);
                            stack.pop();
                        }
                        pos += s.len * e;
                    }
                }
            }
        }
    }

    /// The history of the split at `pos`.
    pub fn history_of(&self, pos: u64) -> Result<History, FactorError> {
        if pos >= self.len {
            return Err(FactorError::PositionOutOfRange { pos, len: self.len });
        }
        let mut out = vec![];
        let mut node = self;
        let mut pos = pos;
        loop {
            match &node.kind {
                Kind::Word(w, _) => {
                    out.push(Step::Terminal { word: w, offset: pos as usize }.to_letter());
                    return Ok(History(out));
                }
                Kind::Layered { fillers, blocks } => {
                    let mut next = None;
                    for (j, filler) in fillers.iter().enumerate() {
                        if pos < filler.len {
                            out.push(HistoryLetter::Filler(j));
                            next = Some((filler, pos));
                            break;
                        }
                        pos -= filler.len;
                        if let Some((s, e)) = blocks.get(j) {
                            if pos < s.len * e {
                                let k = pos / s.len;
                                out.push(HistoryLetter::Block { j: j + 1, k, l: e - k - 1 });
                                next = Some((s, pos - k * s.len));
                                break;
                            }
                            pos -= s.len * e;
                        }
                    }
                    let (n2, p2) = next.expect("position within length");
                    node = n2;
                    pos = p2;
                }
            }
        }
    }

    /// The split position described by `h`.
    pub fn reconstruct(&self, h: &History) -> Result<u64, FactorError> {
        let bad = |msg: String| FactorError::InvalidHistory(msg);
        let mut node = self;
        let mut acc = 0u64;
        for (i, letter) in h.0.iter().enumerate() {
            let last = i + 1 == h.0.len();
            match (&node.kind, letter) {
                (Kind::Word(w, _), HistoryLetter::Terminal(x, y)) => {
                    if !last {
                        return Err(bad("terminal pair before the end".into()));
                    }
                    if y.is_empty() || format!("{x}{y}") != *w {
                        return Err(bad(format!("({x:?}, {y:?}) does not split {w:?}")));
                    }
                    return Ok(acc + x.chars().count() as u64);
                }
                (Kind::Layered { fillers, blocks }, HistoryLetter::Filler(j)) => {
                    let filler = fillers.get(*j).ok_or_else(|| bad(format!("no filler t_{j}")))?;
                    if filler.len == 0 {
                        return Err(bad(format!("filler t_{j} is empty")));
                    }
                    acc += fillers[..*j].iter().map(|f| f.len).sum::<u64>() + blocks[..*j].iter().map(|(s, e)| s.len * e).sum::<u64>();
                    node = filler;
                }
                (Kind::Layered { fillers, blocks }, HistoryLetter::Block { j, k, l }) => {
                    if *j == 0 || *j > blocks.len() {
                        return Err(bad(format!("no block s_{j}")));
                    }
                    let (s, e) = &blocks[j - 1];
                    if k.checked_add(*l).and_then(|x| x.checked_add(1)) != Some(*e) {
                        return Err(bad(format!("k + l + 1 = {} but the exponent expands to {e}", k + l + 1)));
                    }
                    acc += fillers[..*j].iter().map(|f| f.len).sum::<u64>()
                        + blocks[..j - 1].iter().map(|(s, e)| s.len * e).sum::<u64>()
                        + k * s.len;
                    node = s;
                }
                (_, other) => return Err(bad(format!("letter {other:?} does not match the term's layers"))),
            }
        }
        Err(bad("history does not end with a terminal pair".into()))
    }
}

/// All factorizations `ε_n(t) = x·y` with `y` nonempty, by position.
pub fn enumerate_factorizations(t: &KappaTerm, n: u32) -> Result<Vec<(u64, History)>, FactorError> {
    let layout = Layout::new(t, n)?;
    if layout.len() > MATERIALIZATION_CAP {
        return Err(FactorError::TooLarge(layout.len()));
    }
    let mut out = Vec::with_capacity(layout.len() as usize);
    layout.for_each(&mut |pos, steps| out.push((pos, steps_to_history(steps))));
    Ok(out)
}

pub fn history_of(t: &KappaTerm, n: u32, pos: u64) -> Result<History, FactorError> {
    Layout::new(t, n)?.history_of(pos)
}

pub fn reconstruct(t: &KappaTerm, n: u32, h: &History) -> Result<u64, FactorError> {
    Layout::new(t, n)?.reconstruct(h)
}

/// Classification of one exponent coordinate across samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Coord {
    Constant(u64),
    /// Strictly increasing; the sampled values are kept.
    Unbounded(Vec<u64>),
}

fn classify(values: &[u64]) -> Option<Coord> {
    if values.windows(2).all(|w| w[0] == w[1]) {
        Some(Coord::Constant(values[0]))
    } else if values.windows(2).all(|w| w[0] < w[1]) {
        Some(Coord::Unbounded(values.to_vec()))
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilteredData {
    pub term: KappaTerm,
    pub samples: Vec<(u32, u64, History)>,
    pub simplified: Vec<SimpleLetter>,
    pub coords: Vec<(Coord, Coord)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FilterOutcome {
    Filtered(FilteredData),
    Inconclusive(String),
}

/// Checks that finitely many samples look like a filtered sequence: constant
/// simplified history, each exponent coordinate constant or strictly
/// increasing.
pub fn filter_samples(t: &KappaTerm, samples: &[(u32, u64)]) -> Result<FilterOutcome, FactorError> {
    if samples.len() < 3 {
        return Err(FactorError::PreconditionViolated("at least 3 samples are needed".into()));
    }
    if samples.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(FactorError::PreconditionViolated("sample indices must increase strictly".into()));
    }
    let mut with_h = vec![];
    for &(n, pos) in samples {
        with_h.push((n, pos, history_of(t, n, pos)?));
    }
    let simplified = with_h[0].2.simplified();
    if let Some((n, _, h)) = with_h.iter().find(|(_, _, h)| h.simplified() != simplified) {
        return Ok(FilterOutcome::Inconclusive(format!("simplified history at n={n} is {h}, differing from the first sample")));
    }
    let vectors: Vec<Vec<(u64, u64)>> = with_h.iter().map(|(_, _, h)| h.exponent_vector()).collect();
    let mut coords = vec![];
    for i in 0..vectors[0].len() {
        let ks: Vec<u64> = vectors.iter().map(|v| v[i].0).collect();
        let ls: Vec<u64> = vectors.iter().map(|v| v[i].1).collect();
        match (classify(&ks), classify(&ls)) {
            (Some(k), Some(l)) => coords.push((k, l)),
            _ => return Ok(FilterOutcome::Inconclusive(format!("coordinate {i} is neither constant nor strictly increasing"))),
        }
    }
    Ok(FilterOutcome::Filtered(FilteredData { term: t.clone(), samples: with_h, simplified, coords }))
}

/// Limit terms `(x, y)` of a filtered factorization sequence.
pub fn limit_terms(fd: &FilteredData) -> Result<(KappaTerm, KappaTerm), FactorError> {
    let samples: Vec<(u32, Vec<u64>)> = fd.samples.iter().map(|(n, p, _)| (*n, vec![*p])).collect();
    let mut pieces = split_limits(&fd.term, &samples)?;
    let y = pieces.pop().expect("two pieces");
    let x = pieces.pop().expect("two pieces");
    Ok((x, y))
}

fn factor_len(f: &Factor, n: u32) -> Result<u64, FactorError> {
    Ok(KappaTerm::from_factors(vec![f.clone()]).expanded_len(n)?)
}

fn repeat_term(base: &KappaTerm, c: u64) -> KappaTerm {
    KappaTerm::concat_all(std::iter::repeat(base).take(c as usize))
}

/// Limit terms of a sequence of multi-cuts: `samples[i] = (n, cuts)` with
/// the same number of sorted cut positions in `0..=|ε_n(t)|` at each `n`.
/// Returns one more piece than there are cuts; pieces may be empty.
///
/// Cuts inside one power `s^{ω+g}` split it into runs of whole copies with
/// counts `c_0, …, c_r`. Constant counts stay finite; every unbounded count
/// becomes `ω+r` (see [`limit_offset`]) except the first unbounded one, which
/// absorbs the remainder so that the exponents and cut copies add up to
/// `ω+g`.
pub fn split_limits(t: &KappaTerm, samples: &[(u32, Vec<u64>)]) -> Result<Vec<KappaTerm>, FactorError> {
    let r = samples.first().map(|s| s.1.len()).ok_or_else(|| FactorError::PreconditionViolated("no samples".into()))?;
    if samples.iter().any(|(_, cuts)| cuts.len() != r || cuts.windows(2).any(|w| w[0] > w[1])) {
        return Err(FactorError::PreconditionViolated("every sample needs the same number of sorted cuts".into()));
    }
    if samples.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(FactorError::PreconditionViolated("sample indices must increase strictly".into()));
    }
    for (n, cuts) in samples {
        let len = t.expanded_len(*n)?;
        if let Some(&c) = cuts.iter().find(|&&c| c > len) {
            return Err(FactorError::PositionOutOfRange { pos: c, len });
        }
    }
    split_rec(t, samples)
}

fn split_rec(t: &KappaTerm, samples: &[(u32, Vec<u64>)]) -> Result<Vec<KappaTerm>, FactorError> {
    let r = samples[0].1.len();
    if r == 0 {
        return Ok(vec![t.clone()]);
    }
    let factors = t.factors();
    if factors.is_empty() {
        return Ok(vec![KappaTerm::empty(); r + 1]);
    }
    // locate every cut: (factor index, offset inside the factor), per sample
    let mut located: Vec<Vec<(usize, u64)>> = vec![];
    let mut flen_per_sample: Vec<Vec<u64>> = vec![];
    for (n, cuts) in samples {
        let lens = factors.iter().map(|f| factor_len(f, *n)).collect::<Result<Vec<_>, _>>()?;
        let mut loc = vec![];
        for &c in cuts {
            let mut start = 0;
            let mut found = None;
            for (i, &l) in lens.iter().enumerate() {
                if c < start + l || (i + 1 == lens.len() && c == start + l) {
                    found = Some((i, c - start));
                    break;
                }
                start += l;
            }
            loc.push(found.expect("cut within length"));
        }
        located.push(loc);
        flen_per_sample.push(lens);
    }
    for ci in 0..r {
        let f0 = located[0][ci].0;
        if located.iter().any(|loc| loc[ci].0 != f0) {
            return Err(FactorError::Inconclusive(format!("cut {ci} moves between factors across samples")));
        }
    }
    let mut pieces: Vec<KappaTerm> = vec![];
    let mut cur: Vec<KappaTerm> = vec![];
    let mut ci = 0;
    for (fi, f) in factors.iter().enumerate() {
        let start_ci = ci;
        while ci < r && located[0][ci].0 == fi {
            ci += 1;
        }
        let mine = start_ci..ci;
        if mine.is_empty() {
            cur.push(KappaTerm::from_factors(vec![f.clone()]));
            continue;
        }
        let sub: Vec<KappaTerm> = match f {
            Factor::Word(w) => {
                let offs: Vec<u64> = mine.clone().map(|i| located[0][i].1).collect();
                if located.iter().any(|loc| mine.clone().map(|i| loc[i].1).collect::<Vec<_>>() != offs) {
                    return Err(FactorError::Inconclusive(format!("cut offsets inside {w:?} vary across samples")));
                }
                let chars: Vec<char> = w.chars().collect();
                let mut bounds = vec![0usize];
                bounds.extend(offs.iter().map(|&o| o as usize));
                bounds.push(chars.len());
                bounds.windows(2).map(|b| KappaTerm::word(&chars[b[0]..b[1]].iter().collect::<String>())).collect()
            }
            Factor::Power(base, g) => split_power(base, *g, samples, &located, mine.clone(), &flen_per_sample, fi)?,
        };
        let mut sub = sub.into_iter();
        cur.push(sub.next().expect("first piece"));
        pieces.push(KappaTerm::concat_all(&cur));
        cur.clear();
        let rest: Vec<KappaTerm> = sub.collect();
        let (last, middle) = rest.split_last().expect("last piece");
        pieces.extend(middle.iter().cloned());
        cur.push(last.clone());
    }
    pieces.push(KappaTerm::concat_all(&cur));
    Ok(pieces)
}

/// Offset `r` of the limit `ω+r` of an unbounded count sampled as `counts`
/// at the indices `ns`. When the samples fit `c = q·n! + r` for a rational `q`
/// and an integer `r`, that `r` is returned; otherwise the residue of the
/// last count modulo `(n-2)!` closest to zero.
fn limit_offset(counts: &[u64], ns: &[u32]) -> i64 {
    let fact = |n: u32| factorial(n).map(|f| f as i128);
    if let (Some(f1), Some(f2)) = (fact(ns[0]), fact(ns[ns.len() - 1])) {
        let (c1, c2) = (counts[0] as i128, counts[counts.len() - 1] as i128);
        let (num, den) = (c2 - c1, f2 - f1);
        let scaled = c1 * den - num * f1;
        if den != 0 && scaled % den == 0 {
            let r = scaled / den;
            let fits = counts.iter().zip(ns).all(|(&c, &n)| fact(n).is_some_and(|f| c as i128 * den == num * f + r * den));
            if fits && r.abs() <= MAX_OFFSET as i128 {
                return r as i64;
            }
        }
    }
    let n = ns[ns.len() - 1];
    let c = counts[counts.len() - 1];
    let modulus = factorial(n.saturating_sub(2)).unwrap_or(1).max(1);
    let r = c % modulus;
    if r > modulus / 2 {
        r as i64 - modulus as i64
    } else {
        r as i64
    }
}

/// A cut group inside a power: cuts on the boundary before copy `b`, or
/// cuts strictly inside copy `q`.
#[derive(Debug, Clone, PartialEq, Eq)]
enum CutEvent {
    Boundary(u64),
    Copy(u64, Vec<u64>),
}

fn cut_events(offsets: &[u64], s_len: u64) -> Vec<CutEvent> {
    let mut out: Vec<CutEvent> = vec![];
    for &o in offsets {
        let (q, r) = (o / s_len, o % s_len);
        if r == 0 {
            out.push(CutEvent::Boundary(q));
        } else if let Some(CutEvent::Copy(q0, inner)) = out.last_mut().filter(|e| matches!(e, CutEvent::Copy(q0, _) if *q0 == q)) {
            debug_assert_eq!(*q0, q);
            inner.push(r);
        } else {
            out.push(CutEvent::Copy(q, vec![r]));
        }
    }
    out
}

fn event_shape(events: &[CutEvent]) -> Vec<Option<usize>> {
    events
        .iter()
        .map(|e| match e {
            CutEvent::Boundary(_) => None,
            CutEvent::Copy(_, inner) => Some(inner.len()),
        })
        .collect()
}

fn split_power(
    base: &KappaTerm,
    g: i64,
    samples: &[(u32, Vec<u64>)],
    located: &[Vec<(usize, u64)>],
    mine: std::ops::Range<usize>,
    flens: &[Vec<u64>],
    fi: usize,
) -> Result<Vec<KappaTerm>, FactorError> {
    let ns: Vec<u32> = samples.iter().map(|s| s.0).collect();
    let mut events = vec![];
    let mut totals = vec![];
    for (si, (n, _)) in samples.iter().enumerate() {
        let s_len = base.expanded_len(*n)?;
        totals.push(flens[si][fi] / s_len);
        let offsets: Vec<u64> = mine.clone().map(|i| located[si][i].1).collect();
        events.push(cut_events(&offsets, s_len));
    }
    let shape = event_shape(&events[0]);
    if events.iter().any(|ev| event_shape(ev) != shape) {
        return Err(FactorError::Inconclusive("cuts share a copy or sit on copy boundaries at some samples but not at others".into()));
    }
    let ne = shape.len();
    let copy_groups = shape.iter().filter(|s| s.is_some()).count();
    // recursive limits inside each cut copy
    let mut group_pieces: Vec<Option<Vec<KappaTerm>>> = vec![];
    for ei in 0..ne {
        if shape[ei].is_none() {
            group_pieces.push(None);
            continue;
        }
        let inner: Vec<(u32, Vec<u64>)> = samples
            .iter()
            .enumerate()
            .map(|(si, (n, _))| match &events[si][ei] {
                CutEvent::Copy(_, offs) => (*n, offs.clone()),
                CutEvent::Boundary(_) => unreachable!("shapes agree"),
            })
            .collect();
        group_pieces.push(Some(split_rec(base, &inner)?));
    }
    // counts of whole copies between consecutive events
    let mut counts: Vec<Vec<u64>> = vec![vec![]; ne + 1];
    for (si, ev) in events.iter().enumerate() {
        let mut cursor = 0u64;
        for (ei, e) in ev.iter().enumerate() {
            match e {
                CutEvent::Boundary(b) => {
                    counts[ei].push(b - cursor);
                    cursor = *b;
                }
                CutEvent::Copy(q, _) => {
                    counts[ei].push(q - cursor);
                    cursor = q + 1;
                }
            }
        }
        counts[ne].push(totals[si] - cursor);
    }
    let classes: Vec<Coord> = counts
        .iter()
        .map(|c| classify(c).ok_or_else(|| FactorError::Inconclusive("a copy count is neither constant nor strictly increasing".into())))
        .collect::<Result<_, _>>()?;
    let first_unbounded = classes
        .iter()
        .position(|c| matches!(c, Coord::Unbounded(_)))
        .ok_or_else(|| FactorError::UnsupportedClassification("every copy count is constant".into()))?;
    let mut exps: Vec<Option<Exponent>> = classes
        .iter()
        .map(|c| match c {
            Coord::Constant(0) => None,
            Coord::Constant(v) => Some(Exponent::Finite(*v)),
            Coord::Unbounded(vals) => Some(Exponent::OmegaPlus(limit_offset(vals, &ns))),
        })
        .collect();
    let others: i128 = exps
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != first_unbounded)
        .map(|(_, e)| match e {
            None => 0,
            Some(Exponent::Finite(v)) => *v as i128,
            Some(Exponent::OmegaPlus(v)) => *v as i128,
        })
        .sum();
    let absorbed = g as i128 - others - copy_groups as i128;
    exps[first_unbounded] = Some(Exponent::OmegaPlus(absorbed.clamp(i64::MIN as i128, i64::MAX as i128) as i64));
    if let Some(Exponent::OmegaPlus(v)) = exps.iter().flatten().find(|e| matches!(e, Exponent::OmegaPlus(v) if v.abs() > MAX_OFFSET)) {
        return Err(FactorError::UnsupportedClassification(format!("offset {v} is out of range")));
    }
    let run = |e: &Option<Exponent>| match e {
        None => KappaTerm::empty(),
        Some(Exponent::Finite(c)) => repeat_term(base, *c),
        Some(Exponent::OmegaPlus(v)) => KappaTerm::power(base.clone(), *v),
    };
    let mut out = vec![];
    let mut cur = run(&exps[0]);
    for (ei, gp) in group_pieces.iter().enumerate() {
        match gp {
            None => {
                out.push(cur);
                cur = run(&exps[ei + 1]);
            }
            Some(gp) => {
                out.push(cur.concat(&gp[0]));
                out.extend(gp[1..gp.len() - 1].iter().cloned());
                cur = gp[gp.len() - 1].concat(&run(&exps[ei + 1]));
            }
        }
    }
    out.push(cur);
    Ok(out)
}

/// `φ` of the factor `ε_n(t)[lo..hi]`, computed through the layer structure;
/// `None` for an empty range.
pub fn range_value(t: &KappaTerm, n: u32, lo: u64, hi: u64, phi: &SemigroupMorphism) -> Result<Option<usize>, FactorError> {
    let len = t.expanded_len(n)?;
    if lo > hi || hi > len {
        return Err(FactorError::PositionOutOfRange { pos: hi, len });
    }
    range_rec(t, n, lo, hi, phi)
}

fn range_rec(t: &KappaTerm, n: u32, lo: u64, hi: u64, phi: &SemigroupMorphism) -> Result<Option<usize>, FactorError> {
    let target = phi.target();
    let join = |a: Option<usize>, b: Option<usize>| match (a, b) {
        (Some(x), Some(y)) => Some(target.mul(x, y)),
        (x, None) => x,
        (None, y) => y,
    };
    let mut acc = None;
    let mut start = 0u64;
    for f in t.factors() {
        let l = factor_len(f, n)?;
        let (a, b) = (lo.max(start), hi.min(start + l));
        if a < b {
            let (a, b) = (a - start, b - start);
            let v = match f {
                Factor::Word(w) => {
                    let piece: String = w.chars().skip(a as usize).take((b - a) as usize).collect();
                    Some(phi.eval_word(&piece)?)
                }
                Factor::Power(base, _) => {
                    let s = base.expanded_len(n)?;
                    let (qa, qb) = (a / s, b / s);
                    if qa == qb {
                        range_rec(base, n, a - qa * s, b - qa * s, phi)?
                    } else {
                        let head = range_rec(base, n, a - qa * s, s, phi)?;
                        let full = qb - qa - 1;
                        let mid = if full > 0 {
                            let whole = range_rec(base, n, 0, s, phi)?.expect("nonempty base");
                            Some(target.pow(whole, full))
                        } else {
                            None
                        };
                        let tail = range_rec(base, n, 0, b - qb * s, phi)?;
                        join(join(head, mid), tail)
                    }
                }
            };
            acc = join(acc, v);
        }
        start += l;
    }
    Ok(acc)
}

/// Recognizer for the balancer: a morphism and, per factor, the accepted
/// subset `φ(L_i)`.
#[derive(Debug, Clone)]
pub struct Recognizer {
    pub morphism: SemigroupMorphism,
    pub accepted: Vec<BTreeSet<usize>>,
}

/// Replaces the factors of sampled splittings of `ε_n(t)` by κ̄-terms and
/// verifies the result against every recognizer: the product evaluates like
/// `t` and each piece lands in its accepted subset.
pub fn balance_splitting(t: &KappaTerm, samples: &[(u32, Vec<u64>)], recognizers: &[Recognizer]) -> Result<Vec<KappaTerm>, FactorError> {
    let z = split_limits(t, samples)?;
    let whole = KappaTerm::concat_all(&z);
    for (ri, rec) in recognizers.iter().enumerate() {
        let phi = &rec.morphism;
        if whole.eval(phi)? != t.eval(phi)? {
            return Err(FactorError::VerificationFailed(format!("recognizer {ri} distinguishes the product from the term")));
        }
        if rec.accepted.len() != z.len() {
            return Err(FactorError::PreconditionViolated(format!("recognizer {ri} has {} accepted sets for {} pieces", rec.accepted.len(), z.len())));
        }
        for (i, zi) in z.iter().enumerate() {
            if zi.is_empty() {
                return Err(FactorError::VerificationFailed(format!("piece {i} is empty")));
            }
            if !rec.accepted[i].contains(&zi.eval(phi)?) {
                return Err(FactorError::VerificationFailed(format!("recognizer {ri} rejects piece {i}")));
            }
        }
    }
    Ok(z)
}

/// A vertex of `Γ_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vertex {
    Initial,
    Pair(usize, usize),
    Final,
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vertex::Initial => write!(f, "ι"),
            Vertex::Final => write!(f, "τ"),
            Vertex::Pair(a, b) => write!(f, "({a},{b})"),
        }
    }
}

/// Edge weight: explicit, or every `W ≥ min` with `W ≡ residue (mod modulus)`
/// up to the total weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Weight {
    Exact(u64),
    Class { residue: u64, modulus: u64, min: u64 },
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Exact(e) => write!(f, "{e}"),
            Weight::Class { residue, modulus, min } => write!(f, "{residue} mod {modulus}, ≥{min}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GraphEdge {
    pub from: Vertex,
    pub to: Vertex,
    pub weight: Weight,
}

/// One traversal of an edge with an explicit weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PathEdge {
    pub from: Vertex,
    pub to: Vertex,
    pub weight: u64,
}

pub type Path = Vec<PathEdge>;

/// `ε_k(s1) = u z v` with `z` a product of the listed words of `L`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexWitness {
    pub u: String,
    pub z: Vec<String>,
    pub v: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphMode {
    /// Every weight up to the total weight is listed.
    Explicit,
    /// Weights from `m` on are grouped in residue classes mod `p`.
    Symbolic,
}

/// The multigraph `Γ_k` for a term `t0 s1^{ω+g} t1` and a language `L`.
#[derive(Debug, Clone)]
pub struct FactorizationGraph {
    pub k: u32,
    pub t0: String,
    pub s1: String,
    pub t1: String,
    /// `ε_k(ω+g)`.
    pub total: u64,
    pub syntactic: Syntactic,
    /// Exponents from `m` on are periodic with period `p` in the monoid.
    pub m: u64,
    pub p: u64,
    pub mode: GraphMode,
    pub vertices: Vec<Vertex>,
    pub witnesses: BTreeMap<(usize, usize), VertexWitness>,
    pub edges: Vec<GraphEdge>,
    language: Dfa,
    c: usize,
    phi_t0: usize,
    phi_t1: usize,
}

/// Transformations of `ι → τ` paths that keep the total weight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Transform {
    /// Kind 1: traverse the same edges in the order `order` (a permutation of
    /// path positions).
    Reorder(Vec<usize>),
    /// Kind 2: with `n1 r1 = n2 r2`, traverse each edge of `d1` `r1` times
    /// less and each edge of `d2` `r2` times more.
    CycleSwap { d1: Vec<PathEdge>, r1: u64, d2: Vec<PathEdge>, r2: u64 },
    /// Kind 3: raise the edge at position `raise` by `p` and lower the edge at
    /// position `lower` by `p`; both must stay at weight `≥ m`.
    WeightShift { raise: usize, lower: usize },
    /// Kind 4: traverse each edge of `cycle` (total weight `n`) `p` times
    /// less and raise the edge at position `edge` by `n p`.
    CycleAbsorb { cycle: Vec<PathEdge>, edge: usize },
}

impl Transform {
    pub fn kind(&self) -> u8 {
        match self {
            Transform::Reorder(_) => 1,
            Transform::CycleSwap { .. } => 2,
            Transform::WeightShift { .. } => 3,
            Transform::CycleAbsorb { .. } => 4,
        }
    }
}

fn materialize(t: &KappaTerm, k: u32) -> Result<String, FactorError> {
    let len = t.expanded_len(k)?;
    if len > MATERIALIZATION_CAP {
        return Err(FactorError::TooLarge(len));
    }
    Ok(t.expand(k)?)
}

/// Positions `j ≥ i` such that `w[i..j]` is a product of words of `L`, with
/// the earliest-found predecessor of each.
fn lstar_reach(d: &Dfa, w: &[usize], i: usize) -> BTreeMap<usize, Option<usize>> {
    let mut pred: BTreeMap<usize, Option<usize>> = BTreeMap::new();
    pred.insert(i, None);
    let mut frontier = vec![i];
    while let Some(p) = frontier.pop() {
        let mut q = d.initial();
        for (off, &li) in w[p..].iter().enumerate() {
            q = d.next(q, li);
            if d.is_final(q) {
                let j = p + off + 1;
                if let std::collections::btree_map::Entry::Vacant(e) = pred.entry(j) {
                    e.insert(Some(p));
                    frontier.push(j);
                }
            }
        }
    }
    pred
}


/// Builds `Γ_k` for a term with `ν(t) = 1`.
pub fn build_factorization_graph(t: &KappaTerm, l: &Dfa, k: u32, mode: GraphMode) -> Result<FactorizationGraph, FactorError> {
    if t.nu() != 1 {
        return Err(FactorError::Shape(format!("ν(t) = {} but the graph needs ν(t) = 1", t.nu())));
    }
    let layers = t.layers().expect("positive rank");
    let (s1, g) = layers.blocks[0].clone();
    let t0 = materialize(&layers.fillers[0], k)?;
    let t1 = materialize(&layers.fillers[1], k)?;
    let s1w = materialize(&s1, k)?;
    let total = Exponent::OmegaPlus(g).expand(k)?;
    let letters: BTreeSet<char> = t.letters();
    if let Some(c) = letters.iter().find(|c| !l.alphabet().contains(c)) {
        return Err(FactorError::Shape(format!("letter {c:?} is not in the language's alphabet")));
    }
    let language = l.minimize();
    let syntactic = syntactic_monoid(&language);
    let phi = &syntactic.morphism;
    let monoid = phi.target();
    let (max_index, p) = monoid.exponent_bounds();
    let m = max_index as u64 + 1;
    let c = phi.eval_word_monoid(&s1w)?;
    let phi_t0 = phi.eval_word_monoid(&t0)?;
    let phi_t1 = phi.eval_word_monoid(&t1)?;
    // vertices: (φ(u), φ(v)) over splittings ε_k(s1) = u z v with z ∈ L*
    let idx: Vec<usize> = s1w.chars().map(|ch| language.letter_index(ch).expect("checked")).collect();
    let chars: Vec<char> = s1w.chars().collect();
    let sl = chars.len();
    let mut prefix = vec![monoid.identity().expect("monoid")];
    for &ch in &chars {
        let last = *prefix.last().unwrap();
        prefix.push(monoid.mul(last, phi.image(ch)?));
    }
    let mut suffix = vec![monoid.identity().expect("monoid"); sl + 1];
    for i in (0..sl).rev() {
        suffix[i] = monoid.mul(phi.image(chars[i])?, suffix[i + 1]);
    }
    let text = |a: usize, b: usize| chars[a..b].iter().collect::<String>();
    let mut witnesses: BTreeMap<(usize, usize), VertexWitness> = BTreeMap::new();
    for i in 0..=sl {
        let reach = lstar_reach(&language, &idx, i);
        for (&j, _) in reach.iter() {
            let key = (prefix[i], suffix[j]);
            if witnesses.contains_key(&key) {
                continue;
            }
            let mut z = vec![];
            let mut cur = j;
            while let Some(Some(pj)) = reach.get(&cur) {
                z.push(text(*pj, cur));
                cur = *pj;
            }
            z.reverse();
            witnesses.insert(key, VertexWitness { u: text(0, i), z, v: text(j, sl) });
        }
    }
    let mut vertices = vec![Vertex::Initial];
    vertices.extend(witnesses.keys().map(|&(a, b)| Vertex::Pair(a, b)));
    vertices.push(Vertex::Final);
    let mut graph = FactorizationGraph {
        k,
        t0,
        s1: s1w,
        t1,
        total,
        syntactic,
        m,
        p: p as u64,
        mode,
        vertices,
        witnesses,
        edges: vec![],
        language,
        c,
        phi_t0,
        phi_t1,
    };
    graph.edges = graph.compute_edges();
    Ok(graph)
}

impl FactorizationGraph {
    fn c_pow(&self, e: u64) -> usize {
        let monoid = self.syntactic.semigroup();
        if e == 0 {
            monoid.identity().expect("monoid")
        } else {
            monoid.pow(self.c, e)
        }
    }

    /// Smallest weight of an edge from `from`.
    fn min_weight(from: Vertex) -> u64 {
        match from {
            Vertex::Initial => 0,
            _ => 1,
        }
    }

    /// Whether `from →^w to` is an edge.
    pub fn has_edge(&self, from: Vertex, to: Vertex, w: u64) -> bool {
        if w > self.total || w < Self::min_weight(from) {
            return false;
        }
        let monoid = self.syntactic.semigroup();
        let (left, exp, right) = match (from, to) {
            (Vertex::Initial, Vertex::Pair(a, _)) => (self.phi_t0, w, a),
            (Vertex::Initial, Vertex::Final) => (self.phi_t0, w, self.phi_t1),
            (Vertex::Pair(_, b), Vertex::Pair(a, _)) => (b, w - 1, a),
            (Vertex::Pair(_, b), Vertex::Final) => (b, w - 1, self.phi_t1),
            _ => return false,
        };
        if let (Vertex::Pair(a, b), _) | (_, Vertex::Pair(a, b)) = (from, to) {
            if !self.witnesses.contains_key(&(a, b)) {
                return false;
            }
        }
        if let (Vertex::Pair(a, b), Vertex::Pair(..)) = (to, from) {
            if !self.witnesses.contains_key(&(a, b)) {
                return false;
            }
        }
        let v = monoid.mul(monoid.mul(left, self.c_pow(exp)), right);
        self.syntactic.accepts_element(v)
    }

    fn compute_edges(&self) -> Vec<GraphEdge> {
        let mut out = vec![];
        let explicit_top = match self.mode {
            GraphMode::Explicit => self.total,
            GraphMode::Symbolic => self.total.min(self.m.saturating_sub(1)),
        };
        for &from in &self.vertices {
            for &to in &self.vertices {
                for w in Self::min_weight(from)..=explicit_top {
                    if self.has_edge(from, to, w) {
                        out.push(GraphEdge { from, to, weight: Weight::Exact(w) });
                    }
                }
                if self.mode == GraphMode::Symbolic {
                    for w in self.m..(self.m + self.p).min(self.total + 1) {
                        if self.has_edge(from, to, w) {
                            out.push(GraphEdge { from, to, weight: Weight::Class { residue: w % self.p, modulus: self.p, min: self.m } });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn language(&self) -> &Dfa {
        &self.language
    }

    /// Edges leaving `v` with explicit weights at most `max`, ordered by
    /// target then weight.
    pub fn out_edges(&self, v: Vertex, max: u64) -> Vec<PathEdge> {
        let mut out = vec![];
        for &to in &self.vertices {
            for w in Self::min_weight(v)..=max.min(self.total) {
                if self.has_edge(v, to, w) {
                    out.push(PathEdge { from: v, to, weight: w });
                }
            }
        }
        out
    }

    /// Checks that `path` runs from `ι` to `τ` along edges of the graph and
    /// returns its total weight.
    pub fn check_path(&self, path: &[PathEdge]) -> Result<u64, FactorError> {
        let bad = |m: String| FactorError::PreconditionViolated(m);
        let first = path.first().ok_or_else(|| bad("empty path".into()))?;
        if first.from != Vertex::Initial || path.last().unwrap().to != Vertex::Final {
            return Err(bad("the path must run from ι to τ".into()));
        }
        let mut total = 0u64;
        for (i, e) in path.iter().enumerate() {
            if i > 0 && path[i - 1].to != e.from {
                return Err(bad(format!("edge {i} does not start where edge {} ends", i - 1)));
            }
            if !self.has_edge(e.from, e.to, e.weight) {
                return Err(bad(format!("{} →^{} {} is not an edge", e.from, e.weight, e.to)));
            }
            total = total.checked_add(e.weight).ok_or_else(|| bad("weight overflow".into()))?;
        }
        Ok(total)
    }

    /// `ways[v][r]`: number of paths from `v` to `τ` of total weight `r`.
    fn path_table(&self) -> BTreeMap<Vertex, Vec<u128>> {
        let e = self.total as usize;
        let mut ways: BTreeMap<Vertex, Vec<u128>> = self.vertices.iter().map(|&v| (v, vec![0u128; e + 1])).collect();
        ways.get_mut(&Vertex::Final).unwrap()[0] = 1;
        let adj: BTreeMap<Vertex, Vec<PathEdge>> = self.vertices.iter().map(|&v| (v, self.out_edges(v, self.total))).collect();
        for r in 0..=e {
            // weight-0 edges only leave ι, which has no incoming edges
            for &v in &self.vertices {
                if v == Vertex::Final {
                    continue;
                }
                let mut acc: u128 = 0;
                for pe in &adj[&v] {
                    let w = pe.weight as usize;
                    if w <= r {
                        acc = acc.saturating_add(ways[&pe.to][r - w]);
                    }
                }
                ways.get_mut(&v).unwrap()[r] = acc;
            }
        }
        ways
    }

    /// Number of `ι → τ` paths of total weight `ε_k(α1)`.
    pub fn count_paths(&self) -> u128 {
        self.path_table()[&Vertex::Initial][self.total as usize]
    }

    /// The `index`-th `ι → τ` path of full weight in lexicographic order of
    /// (target, weight) choices.
    pub fn path_at(&self, index: u128) -> Option<Path> {
        let ways = self.path_table();
        let mut remaining = self.total;
        let mut v = Vertex::Initial;
        let mut index = index;
        if index >= ways[&v][remaining as usize] {
            return None;
        }
        let mut path = vec![];
        while v != Vertex::Final || remaining > 0 {
            let mut chosen = None;
            for pe in self.out_edges(v, remaining) {
                let n = ways[&pe.to][(remaining - pe.weight) as usize];
                if index < n {
                    chosen = Some(pe);
                    break;
                }
                index -= n;
            }
            let pe = chosen?;
            path.push(pe);
            remaining -= pe.weight;
            v = pe.to;
        }
        Some(path)
    }

    /// Up to `limit` paths of full weight, in lexicographic order.
    pub fn paths(&self, limit: usize) -> Vec<Path> {
        let count = self.count_paths();
        (0..count.min(limit as u128)).filter_map(|i| self.path_at(i)).collect()
    }

    fn witness(&self, v: Vertex) -> Result<&VertexWitness, FactorError> {
        match v {
            Vertex::Pair(a, b) => self.witnesses.get(&(a, b)).ok_or_else(|| FactorError::PreconditionViolated(format!("{v} is not a vertex"))),
            _ => Err(FactorError::PreconditionViolated(format!("{v} has no witness"))),
        }
    }

    /// The factorization of `ε_k(t0 s1^ℓ t1)` associated with a path, `ℓ`
    /// being its total weight; every returned factor lies in `L`.
    pub fn path_to_factorization(&self, path: &[PathEdge]) -> Result<Vec<String>, FactorError> {
        self.check_path(path)?;
        let s = &self.s1;
        let mut out = vec![];
        for e in path {
            let copies = |n: u64| s.repeat(n as usize);
            match (e.from, e.to) {
                (Vertex::Initial, Vertex::Final) => out.push(format!("{}{}{}", self.t0, copies(e.weight), self.t1)),
                (Vertex::Initial, to) => out.push(format!("{}{}{}", self.t0, copies(e.weight), self.witness(to)?.u)),
                (from, Vertex::Final) => out.push(format!("{}{}{}", self.witness(from)?.v, copies(e.weight - 1), self.t1)),
                (from, to) => out.push(format!("{}{}{}", self.witness(from)?.v, copies(e.weight - 1), self.witness(to)?.u)),
            }
            if let Vertex::Pair(..) = e.to {
                out.extend(self.witness(e.to)?.z.iter().cloned());
            }
        }
        Ok(out)
    }

    /// The path of a factorization of `ε_k(t)` into words of `L`. A factor
    /// boundary at the start of a copy of `ε_k(s1)` belongs to that copy; a
    /// boundary at the very end of the last copy belongs to the last copy.
    pub fn factorization_to_path(&self, factors: &[String]) -> Result<Path, FactorError> {
        let bad = |m: String| FactorError::PreconditionViolated(m);
        let word: String = factors.concat();
        let expected = format!("{}{}{}", self.t0, self.s1.repeat(self.total as usize), self.t1);
        if word != expected {
            return Err(bad("the factors do not multiply to ε_k(t)".into()));
        }
        for f in factors {
            if !self.language.accepts(f).unwrap_or(false) {
                return Err(bad(format!("factor {f:?} is not in L")));
            }
        }
        let l0 = self.t0.chars().count() as u64;
        let s = self.s1.chars().count() as u64;
        let end = l0 + s * self.total;
        // boundaries grouped by copy: copy -> offsets
        let mut copies: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
        let mut pos = 0u64;
        for f in &factors[..factors.len().saturating_sub(1)] {
            pos += f.chars().count() as u64;
            if pos < l0 || pos > end {
                return Err(bad(format!("boundary at {pos} falls strictly inside t0 or t1")));
            }
            let (copy, off) = if pos == end { (self.total - 1, s) } else { ((pos - l0) / s, (pos - l0) % s) };
            copies.entry(copy).or_default().push(off);
        }
        let chars: Vec<char> = self.s1.chars().collect();
        let phi = &self.syntactic.morphism;
        let mut path = vec![];
        let mut prev: Option<(Vertex, u64)> = None;
        for (&copy, offs) in &copies {
            let u: String = chars[..offs[0] as usize].iter().collect();
            let v: String = chars[*offs.last().unwrap() as usize..].iter().collect();
            let vert = Vertex::Pair(phi.eval_word_monoid(&u)?, phi.eval_word_monoid(&v)?);
            let edge = match prev {
                None => PathEdge { from: Vertex::Initial, to: vert, weight: copy },
                Some((pv, pc)) => PathEdge { from: pv, to: vert, weight: copy - pc },
            };
            path.push(edge);
            prev = Some((vert, copy));
        }
        path.push(match prev {
            None => PathEdge { from: Vertex::Initial, to: Vertex::Final, weight: self.total },
            Some((pv, pc)) => PathEdge { from: pv, to: Vertex::Final, weight: self.total - pc },
        });
        self.check_path(&path)?;
        Ok(path)
    }

    /// Applies one of the four weight-preserving transformations.
    pub fn transform_path(&self, path: &[PathEdge], tr: &Transform) -> Result<Path, FactorError> {
        let bad = |m: String| FactorError::PreconditionViolated(m);
        let before = self.check_path(path)?;
        let result = match tr {
            Transform::Reorder(order) => {
                let mut sorted = order.clone();
                sorted.sort();
                if sorted != (0..path.len()).collect::<Vec<_>>() {
                    return Err(bad("the order is not a permutation of the path".into()));
                }
                order.iter().map(|&i| path[i]).collect::<Vec<_>>()
            }
            Transform::CycleSwap { d1, r1, d2, r2 } => {
                let n1 = self.cycle_weight(d1)?;
                let n2 = self.cycle_weight(d2)?;
                if *r1 == 0 || *r2 == 0 || n1 * r1 != n2 * r2 {
                    return Err(bad(format!("n1 r1 = {} differs from n2 r2 = {}", n1 * r1, n2 * r2)));
                }
                let mut ms = multiset(path);
                for (d, r) in [(d1, r1), (d2, r2)] {
                    for e in d {
                        if ms.get(e).copied().unwrap_or(0) <= *r {
                            return Err(bad(format!("the path must traverse {} →^{} {} more than {r} times", e.from, e.weight, e.to)));
                        }
                    }
                }
                for e in d1 {
                    *ms.get_mut(e).unwrap() -= r1;
                }
                for e in d2 {
                    *ms.entry(*e).or_default() += r2;
                }
                euler_path(&ms)?
            }
            Transform::WeightShift { raise, lower } => {
                let (Some(a), Some(b)) = (path.get(*raise), path.get(*lower)) else {
                    return Err(bad("edge position out of range".into()));
                };
                if raise == lower {
                    return Err(bad("the two edges must be distinct occurrences".into()));
                }
                if a.weight < self.m || b.weight < self.m + self.p {
                    return Err(bad(format!("need weights ≥ m = {} and ≥ m + p = {}", self.m, self.m + self.p)));
                }
                let mut out = path.to_vec();
                out[*raise].weight += self.p;
                out[*lower].weight -= self.p;
                out
            }
            Transform::CycleAbsorb { cycle, edge } => {
                let n = self.cycle_weight(cycle)?;
                let target = *path.get(*edge).ok_or_else(|| bad("edge position out of range".into()))?;
                if target.weight < self.m {
                    return Err(bad(format!("the absorbing edge needs weight ≥ m = {}", self.m)));
                }
                let mut ms = multiset(path);
                for e in cycle {
                    if ms.get(e).copied().unwrap_or(0) < self.p + 1 {
                        return Err(bad(format!("the path must traverse {} →^{} {} at least p + 1 = {} times", e.from, e.weight, e.to, self.p + 1)));
                    }
                }
                for e in cycle {
                    *ms.get_mut(e).unwrap() -= self.p;
                }
                let slot = ms.get_mut(&target).filter(|c| **c > 0).ok_or_else(|| bad("the absorbing edge was consumed by the cycle".into()))?;
                *slot -= 1;
                *ms.entry(PathEdge { weight: target.weight + n * self.p, ..target }).or_default() += 1;
                euler_path(&ms)?
            }
        };
        let after = self.check_path(&result)?;
        if after != before {
            return Err(FactorError::VerificationFailed(format!("total weight changed from {before} to {after}")));
        }
        Ok(result)
    }

    fn cycle_weight(&self, cycle: &[PathEdge]) -> Result<u64, FactorError> {
        let bad = |m: String| FactorError::PreconditionViolated(m);
        if cycle.is_empty() {
            return Err(bad("empty cycle".into()));
        }
        for (i, e) in cycle.iter().enumerate() {
            let next = &cycle[(i + 1) % cycle.len()];
            if e.to != next.from {
                return Err(bad("the edges do not form a cycle".into()));
            }
            if !self.has_edge(e.from, e.to, e.weight) {
                return Err(bad(format!("{} →^{} {} is not an edge", e.from, e.weight, e.to)));
            }
        }
        Ok(cycle.iter().map(|e| e.weight).sum())
    }

    pub fn to_dot(&self) -> String {
        let name = |v: &Vertex| match v {
            Vertex::Initial => "iota".to_string(),
            Vertex::Final => "tau".to_string(),
            Vertex::Pair(a, b) => format!("v{a}_{b}"),
        };
        let mut s = String::from("digraph gamma {\n  rankdir=LR;\n");
        for v in &self.vertices {
            s.push_str(&format!("  {} [label=\"{}\"];\n", name(v), v));
        }
        for e in &self.edges {
            s.push_str(&format!("  {} -> {} [label=\"{}\"];\n", name(&e.from), name(&e.to), e.weight));
        }
        s.push_str("}\n");
        s
    }

    pub fn to_json(&self) -> Value {
        json!({
            "k": self.k,
            "t0": self.t0,
            "s1": self.s1,
            "t1": self.t1,
            "totalWeight": self.total,
            "m": self.m,
            "p": self.p,
            "vertices": self.vertices.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            "witnesses": self.witnesses.iter().map(|((a, b), w)| json!({"vertex": format!("({a},{b})"), "u": w.u, "z": w.z, "v": w.v})).collect::<Vec<_>>(),
            "edges": self.edges.iter().map(|e| json!({"from": e.from.to_string(), "to": e.to.to_string(), "weight": e.weight.to_string()})).collect::<Vec<_>>(),
        })
    }
}

fn multiset(path: &[PathEdge]) -> BTreeMap<PathEdge, u64> {
    let mut ms = BTreeMap::new();
    for e in path {
        *ms.entry(*e).or_default() += 1;
    }
    ms
}

/// Deterministic Hierholzer: an `ι → τ` trail using every edge of the
/// multiset exactly as often as listed.
fn euler_path(ms: &BTreeMap<PathEdge, u64>) -> Result<Path, FactorError> {
    let bad = |m: &str| FactorError::PreconditionViolated(m.to_string());
    let mut adj: BTreeMap<Vertex, Vec<PathEdge>> = BTreeMap::new();
    let mut balance: BTreeMap<Vertex, i64> = BTreeMap::new();
    let mut count = 0u64;
    for (e, &c) in ms {
        for _ in 0..c {
            adj.entry(e.from).or_default().push(*e);
        }
        *balance.entry(e.from).or_default() += c as i64;
        *balance.entry(e.to).or_default() -= c as i64;
        count += c;
    }
    for (v, b) in &balance {
        let want = match v {
            Vertex::Initial => 1,
            Vertex::Final => -1,
            _ => 0,
        };
        if *b != want {
            return Err(bad("the edge multiset is not the support of an ι → τ path"));
        }
    }
    // pop from the back: store in reverse so the smallest edge is used first
    for list in adj.values_mut() {
        list.reverse();
    }
    let mut stack: Vec<(Vertex, Option<PathEdge>)> = vec![(Vertex::Initial, None)];
    let mut out: Vec<PathEdge> = vec![];
    while let Some(&(v, via)) = stack.last() {
        match adj.get_mut(&v).and_then(|l| l.pop()) {
            Some(e) => stack.push((e.to, Some(e))),
            None => {
                stack.pop();
                if let Some(e) = via {
                    out.push(e);
                }
            }
        }
    }
    out.reverse();
    if out.len() as u64 != count {
        return Err(bad("the edge multiset is not connected"));
    }
    Ok(out)
}

/// A cycle all of whose edges the path traverses at least `threshold` times:
/// the first one met by a depth-first search over the heavy edges, vertices
/// and edges taken in sorted order.
pub fn find_heavy_cycle(path: &[PathEdge], threshold: u64) -> Option<Vec<PathEdge>> {
    let ms = multiset(path);
    let mut adj: BTreeMap<Vertex, Vec<PathEdge>> = BTreeMap::new();
    for (e, &c) in &ms {
        if c >= threshold {
            adj.entry(e.from).or_default().push(*e);
        }
    }
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let mut mark: BTreeMap<Vertex, Mark> = BTreeMap::new();
    fn dfs(
        v: Vertex,
        adj: &BTreeMap<Vertex, Vec<PathEdge>>,
        mark: &mut BTreeMap<Vertex, Mark>,
        trail: &mut Vec<PathEdge>,
    ) -> Option<Vec<PathEdge>> {
        mark.insert(v, Mark::Active);
        for e in adj.get(&v).map(|l| l.as_slice()).unwrap_or(&[]) {
            match mark.get(&e.to).copied().unwrap_or(Mark::New) {
                Mark::Active => {
                    let start = trail.iter().position(|t| t.from == e.to).unwrap_or(trail.len());
                    let mut cycle = trail[start..].to_vec();
                    cycle.push(*e);
                    return Some(cycle);
                }
                Mark::New => {
                    trail.push(*e);
                    if let Some(c) = dfs(e.to, adj, mark, trail) {
                        return Some(c);
                    }
                    trail.pop();
                }
                Mark::Done => {}
            }
        }
        mark.insert(v, Mark::Done);
        None
    }
    let starts: Vec<Vertex> = adj.keys().copied().collect();
    for v in starts {
        if mark.get(&v).copied().unwrap_or(Mark::New) == Mark::New {
            let mut trail = vec![];
            if let Some(c) = dfs(v, &adj, &mut mark, &mut trail) {
                return Some(c);
            }
        }
    }
    None
}

/// All factorizations of `w` into words of `L`, up to `limit`, by dynamic
/// programming over the runs of the automaton.
pub fn l_plus_factorizations(w: &str, l: &Dfa, limit: usize) -> Vec<Vec<String>> {
    let chars: Vec<char> = w.chars().collect();
    let n = chars.len();
    let Ok(idx) = chars.iter().map(|&c| l.letter_index(c)).collect::<Result<Vec<_>, _>>() else {
        return vec![];
    };
    // ends[i]: positions j > i with w[i..j] ∈ L
    let ends: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut q = l.initial();
            let mut out = vec![];
            for (j, &li) in idx.iter().enumerate().skip(i) {
                q = l.next(q, li);
                if l.is_final(q) {
                    out.push(j + 1);
                }
            }
            out
        })
        .collect();
    // completes[i]: w[i..] ∈ L⁺ (or i = n)
    let mut completes = vec![false; n + 1];
    completes[n] = true;
    for i in (0..n).rev() {
        completes[i] = ends[i].iter().any(|&j| completes[j]);
    }
    let mut out = vec![];
    if n == 0 || !completes[0] {
        return out;
    }
    let mut cur = vec![];
    fn go(i: usize, n: usize, ends: &[Vec<usize>], completes: &[bool], chars: &[char], cur: &mut Vec<String>, out: &mut Vec<Vec<String>>, limit: usize) {
        if out.len() >= limit {
            return;
        }
        if i == n {
            out.push(cur.clone());
            return;
        }
        for &j in &ends[i] {
            if completes[j] {
                cur.push(chars[i..j].iter().collect());
                go(j, n, ends, completes, chars, cur, out, limit);
                cur.pop();
            }
        }
    }
    go(0, n, &ends, &completes, &chars, &mut cur, &mut out, limit);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kappa::parse_term;
    use crate::rational::compile_str;
    use crate::semigroup::catalog;

    fn t(s: &str) -> KappaTerm {
        parse_term(s).unwrap()
    }

    #[test]
    fn rank_zero_factorizations() {
        let f = enumerate_factorizations(&t("ab"), 4).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f[0].1, History(vec![HistoryLetter::Terminal("".into(), "ab".into())]));
        assert_eq!(f[1].1, History(vec![HistoryLetter::Terminal("a".into(), "b".into())]));
        assert_eq!(reconstruct(&t("ab"), 4, &f[1].1), Ok(1));
    }

    #[test]
    fn worked_example_histories() {
        let x = t("a^w b a^w");
        let h24 = history_of(&x, 4, 24).unwrap();
        assert_eq!(h24.to_json(), json!([[1, 1], ["", "b"]]));
        let h25 = history_of(&x, 4, 25).unwrap();
        assert_eq!(h25.to_json(), json!([[2, 2, 0, 23], ["", "a"]]));
        assert_eq!(reconstruct(&x, 4, &h24), Ok(24));
        assert_eq!(reconstruct(&x, 4, &h25), Ok(25));
        let all = enumerate_factorizations(&x, 4).unwrap();
        assert_eq!(all.len(), 49);
        assert!(all.iter().enumerate().all(|(i, (p, _))| *p == i as u64));
    }

    #[test]
    fn invalid_histories() {
        let x = t("a^w b a^w");
        let h = History(vec![HistoryLetter::Block { j: 2, k: 0, l: 5 }, HistoryLetter::Terminal("".into(), "a".into())]);
        assert!(matches!(reconstruct(&x, 4, &h), Err(FactorError::InvalidHistory(_))));
        let h = History(vec![HistoryLetter::Filler(0), HistoryLetter::Terminal("".into(), "b".into())]);
        assert!(matches!(reconstruct(&x, 4, &h), Err(FactorError::InvalidHistory(_))));
        let round = History::from_json(&json!([[2, 2, 0, 23], ["", "a"]])).unwrap();
        assert_eq!(reconstruct(&x, 4, &round), Ok(25));
    }

    #[test]
    fn filtering() {
        let x = t("a^w b a^w");
        let samples: Vec<(u32, u64)> = [4u32, 5, 6].iter().map(|&n| (n, crate::kappa::factorial(n).unwrap())).collect();
        match filter_samples(&x, &samples).unwrap() {
            FilterOutcome::Filtered(fd) => {
                assert_eq!(fd.simplified, vec![SimpleLetter::Filler(1), SimpleLetter::Terminal("".into(), "b".into())]);
                assert!(fd.coords.is_empty());
                let (l, r) = limit_terms(&fd).unwrap();
                assert_eq!((l, r), (t("a^w"), t("b a^w")));
            }
            other => panic!("{other:?}"),
        }
        let alt: Vec<(u32, u64)> = vec![(4, 24), (5, 121), (6, 720)];
        assert!(matches!(filter_samples(&x, &alt).unwrap(), FilterOutcome::Inconclusive(_)));
        let half: Vec<(u32, u64)> = [4u32, 5, 6].iter().map(|&n| (n, crate::kappa::factorial(n).unwrap() / 2)).collect();
        match filter_samples(&t("a^w"), &half).unwrap() {
            FilterOutcome::Filtered(fd) => {
                assert!(matches!(fd.coords.as_slice(), [(Coord::Unbounded(_), Coord::Unbounded(_))]));
                let (l, r) = limit_terms(&fd).unwrap();
                assert_eq!(l.rank_nu(), (1, 1));
                assert_eq!(r.rank_nu(), (1, 1));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn limits_of_rank_zero_and_constant_cuts() {
        let s: Vec<(u32, Vec<u64>)> = vec![(4, vec![1]), (5, vec![1]), (6, vec![1])];
        assert_eq!(split_limits(&t("ab"), &s).unwrap(), vec![t("a"), t("b")]);
        let s: Vec<(u32, Vec<u64>)> = vec![(4, vec![3]), (5, vec![3]), (6, vec![3])];
        let z = split_limits(&t("a^w"), &s).unwrap();
        assert_eq!(z, vec![t("aaa"), t("a^(w-3)")]);
        let s: Vec<(u32, Vec<u64>)> = [4u32, 5, 6].iter().map(|&n| (n, vec![crate::kappa::factorial(n).unwrap()])).collect();
        assert_eq!(split_limits(&t("a^w b^w"), &s).unwrap(), vec![t("a^w"), t("b^w")]);
        // half of the copies on each side: a^ω a^(ω-1) after the cut copy
        let s: Vec<(u32, Vec<u64>)> = [5u32, 6, 7].iter().map(|&n| (n, vec![crate::kappa::factorial(n).unwrap() / 2])).collect();
        assert_eq!(split_limits(&t("a^w"), &s).unwrap(), vec![t("a^w"), t("a^w")]);
        let s: Vec<(u32, Vec<u64>)> = [5u32, 6, 7].iter().map(|&n| (n, vec![crate::kappa::factorial(n).unwrap() / 2 + 1])).collect();
        assert_eq!(split_limits(&t("(ab)^w"), &s).unwrap(), vec![t("(ab)^w a"), t("b (ab)^(w-1)")]);
        let s: Vec<(u32, Vec<u64>)> = [5u32, 6, 7].iter().map(|&n| (n, vec![crate::kappa::factorial(n).unwrap() / 2 + 2])).collect();
        assert_eq!(split_limits(&t("(ab)^w"), &s).unwrap(), vec![t("(ab)^(w+1)"), t("(ab)^(w-1)")]);
    }

    #[test]
    fn balanced_pieces_evaluate_like_the_term() {
        let x = t("(ab)^w");
        let samples: Vec<(u32, Vec<u64>)> = [5u32, 6, 7].iter().map(|&n| (n, vec![crate::kappa::factorial(n).unwrap() + 1])).collect();
        let morphisms = crate::kappa::standard_morphisms(&['a', 'b']);
        let recs: Vec<Recognizer> = morphisms
            .iter()
            .map(|phi| {
                let (n, cuts) = samples.last().unwrap();
                let len = x.expanded_len(*n).unwrap();
                let a = range_value(&x, *n, 0, cuts[0], phi).unwrap().unwrap();
                let b = range_value(&x, *n, cuts[0], len, phi).unwrap().unwrap();
                Recognizer { morphism: phi.clone(), accepted: vec![BTreeSet::from([a]), BTreeSet::from([b])] }
            })
            .collect();
        let z = balance_splitting(&x, &samples, &recs).unwrap();
        assert_eq!(z.len(), 2);
        assert_eq!(z[0].rank_nu(), (1, 1));
    }

    #[test]
    fn range_values_match_words() {
        let x = t("(a^w b)^(w-1) a");
        let phi = SemigroupMorphism::new(vec!['a', 'b'], catalog::symmetric3(), vec![1, 3]).unwrap();
        let w = x.expand(4).unwrap();
        for (lo, hi) in [(0, 5), (3, 30), (24, 26), (20, 500), (0, w.len() as u64)] {
            let direct = phi.eval_word(&w[lo as usize..hi as usize]).unwrap();
            assert_eq!(range_value(&x, 4, lo, hi, &phi).unwrap(), Some(direct));
        }
    }

    #[test]
    fn graph_for_single_letter() {
        let l = compile_str("a", &['a']).unwrap();
        let g = build_factorization_graph(&t("a^w"), &l, 4, GraphMode::Explicit).unwrap();
        let fs = l_plus_factorizations(&"a".repeat(24), &l, 10);
        assert_eq!(fs.len(), 1);
        let path = g.factorization_to_path(&fs[0]).unwrap();
        assert_eq!(g.check_path(&path), Ok(24));
        let back = g.path_to_factorization(&path).unwrap();
        assert_eq!(back.concat(), "a".repeat(24));
        assert!(g.count_paths() >= 1);
        for p in g.paths(50) {
            let f = g.path_to_factorization(&p).unwrap();
            assert_eq!(f.concat(), "a".repeat(24));
            assert!(f.iter().all(|w| l.accepts(w).unwrap()));
        }
    }

    #[test]
    fn graph_parity() {
        let l = compile_str("aa", &['a']).unwrap();
        let g = build_factorization_graph(&t("a^w"), &l, 4, GraphMode::Explicit).unwrap();
        assert!(g.count_paths() > 0);
        let l3 = compile_str("aaa", &['a']).unwrap();
        let g = build_factorization_graph(&t("a^(w+1)"), &l3, 4, GraphMode::Explicit).unwrap();
        assert_eq!(g.count_paths(), 0);
        assert!(matches!(build_factorization_graph(&t("a^w b a^w"), &l, 4, GraphMode::Explicit), Err(FactorError::Shape(_))));
    }

    #[test]
    fn graph_with_fillers() {
        let l = compile_str("ba^+ + a^+b", &['a', 'b']).unwrap();
        let g = build_factorization_graph(&t("b a^w b"), &l, 4, GraphMode::Explicit).unwrap();
        let f = vec![format!("b{}", "a".repeat(12)), format!("{}b", "a".repeat(12))];
        let path = g.factorization_to_path(&f).unwrap();
        assert_eq!(path.len(), 2);
        assert_eq!(path.iter().map(|e| e.weight).sum::<u64>(), 24);
        assert_eq!(g.path_to_factorization(&path).unwrap(), f);
        assert!(g.to_dot().contains("iota"));
    }

    #[test]
    fn symbolic_mode_matches_explicit() {
        let l = compile_str("(aa)^+", &['a']).unwrap();
        let ge = build_factorization_graph(&t("a^w"), &l, 4, GraphMode::Explicit).unwrap();
        let gs = build_factorization_graph(&t("a^w"), &l, 4, GraphMode::Symbolic).unwrap();
        assert!(gs.edges.len() < ge.edges.len());
        assert!(gs.edges.iter().any(|e| matches!(e.weight, Weight::Class { .. })));
        for e in &ge.edges {
            let Weight::Exact(w) = e.weight else { unreachable!() };
            assert!(gs.has_edge(e.from, e.to, w));
        }
    }

    #[test]
    fn transformations_keep_weight() {
        let l = compile_str("a^+", &['a']).unwrap();
        let g = build_factorization_graph(&t("a^w"), &l, 4, GraphMode::Explicit).unwrap();
        let f: Vec<String> = ["a", "aa", "aaaaaaaaa", "a", "aaaaaaaaaaa"].iter().map(|s| s.to_string()).collect();
        let path = g.factorization_to_path(&f).unwrap();
        let rev: Vec<usize> = (0..path.len()).collect();
        assert_eq!(g.transform_path(&path, &Transform::Reorder(rev)).unwrap(), path);
        let heavy = path.iter().position(|e| e.weight >= g.m + g.p).unwrap();
        let other = path.iter().enumerate().position(|(i, e)| i != heavy && e.weight >= g.m);
        if let Some(o) = other {
            let out = g.transform_path(&path, &Transform::WeightShift { raise: o, lower: heavy }).unwrap();
            assert_eq!(g.check_path(&out), Ok(24));
        }
    }

    #[test]
    fn heavy_cycles() {
        let v = Vertex::Pair(0, 0);
        let w = Vertex::Pair(0, 1);
        let lp = PathEdge { from: v, to: v, weight: 1 };
        let mut path = vec![PathEdge { from: Vertex::Initial, to: v, weight: 0 }];
        path.extend(std::iter::repeat(lp).take(10));
        path.push(PathEdge { from: v, to: Vertex::Final, weight: 1 });
        assert_eq!(find_heavy_cycle(&path, 5), Some(vec![lp]));
        let simple = vec![PathEdge { from: Vertex::Initial, to: v, weight: 0 }, PathEdge { from: v, to: Vertex::Final, weight: 1 }];
        assert_eq!(find_heavy_cycle(&simple, 2), None);
        let right = [PathEdge { from: v, to: w, weight: 1 }, PathEdge { from: w, to: v, weight: 1 }];
        let mut eight = vec![PathEdge { from: Vertex::Initial, to: v, weight: 0 }];
        eight.extend(std::iter::repeat(lp).take(7));
        for _ in 0..2 {
            eight.extend(right);
        }
        eight.push(PathEdge { from: v, to: Vertex::Final, weight: 1 });
        assert_eq!(find_heavy_cycle(&eight, 5), Some(vec![lp]));
    }
}
