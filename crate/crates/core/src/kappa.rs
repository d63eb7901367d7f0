//! κ̄-terms: words, products and powers `x^{ω+n}`, in the layered canonical
//! form `t0 s1^{α1} t1 ⋯ sm^{αm} tm`, with expansion, evaluation in finite
//! semigroups and the image in the free group.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::freegroup::GroupWord;
use crate::rational::{syntactic_semigroup, Dfa, Syntactic};
use crate::semigroup::{catalog, FiniteSemigroup, Pseudovariety, SemigroupError, SemigroupMorphism};

/// Offsets `n` in `ω+n` are kept within this bound.
pub const MAX_OFFSET: i64 = 1_000_000;

/// Smallest accepted expansion index.
pub const MIN_EXPANSION_INDEX: u32 = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TermError {
    #[error("empty term")]
    Empty,
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("finite exponents must be at least 1")]
    ZeroExponent,
    #[error("offset {0} exceeds the bound {MAX_OFFSET}")]
    OffsetOutOfRange(i64),
    #[error("expansion index {0} is below the minimum {MIN_EXPANSION_INDEX}")]
    IndexTooSmall(u32),
    #[error("expansion at n={n} underflows: n!{k:+} < 1")]
    ExpansionUnderflow { n: u32, k: i64 },
    #[error("expansion at n={0} overflows")]
    Overflow(u32),
    #[error(transparent)]
    Semigroup(#[from] SemigroupError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("{n} is not divisible by {d}")]
    NotDivisible { n: i64, d: i64 },
    #[error("divisor or factor must be at least 1, got {0}")]
    BadFactor(i64),
    #[error("finite exponent would drop below 1")]
    NonPositive,
    #[error("offset out of range")]
    OutOfRange,
}

/// `Finite(k)` with `k ≥ 1`, or `OmegaPlus(n)` standing for `ω+n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Exponent {
    Finite(u64),
    OmegaPlus(i64),
}

impl Exponent {
    pub const OMEGA: Exponent = Exponent::OmegaPlus(0);

    /// `ε_n(α)`: `n! + k` for `ω+k`, `k` for finite `k`.
    pub fn expand(&self, n: u32) -> Result<u64, TermError> {
        match *self {
            Exponent::Finite(k) => Ok(k),
            Exponent::OmegaPlus(k) => {
                let f = factorial(n).ok_or(TermError::Overflow(n))? as i128;
                let v = f + k as i128;
                if v < 1 {
                    return Err(TermError::ExpansionUnderflow { n, k });
                }
                u64::try_from(v).map_err(|_| TermError::Overflow(n))
            }
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::OmegaPlus(_))
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Exponent::Finite(k) => write!(f, "{k}"),
            Exponent::OmegaPlus(0) => write!(f, "w"),
            Exponent::OmegaPlus(n) if n > 0 => write!(f, "w+{n}"),
            Exponent::OmegaPlus(n) => write!(f, "w-{}", -(n as i128)),
        }
    }
}

/// Parses `w`, `w+k`, `w-k` (also with `ω`) or a positive integer.
pub fn parse_exponent(text: &str) -> Result<Exponent, TermError> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = |msg: &str| TermError::Syntax { pos: 0, msg: msg.to_string() };
    let s = s.strip_prefix('(').and_then(|x| x.strip_suffix(')')).unwrap_or(&s).to_string();
    if let Some(rest) = s.strip_prefix('w').or_else(|| s.strip_prefix('ω')) {
        if rest.is_empty() {
            return Ok(Exponent::OMEGA);
        }
        let (sign, digits) = rest.split_at(1);
        let k: i64 = digits.parse().map_err(|_| bad("expected digits after the sign"))?;
        let k = match sign {
            "+" => k,
            "-" => -k,
            _ => return Err(bad("expected `+` or `-` after `w`")),
        };
        if k.abs() > MAX_OFFSET {
            return Err(TermError::OffsetOutOfRange(k));
        }
        return Ok(Exponent::OmegaPlus(k));
    }
    let k: u64 = s.parse().map_err(|_| bad("expected `w`, `w±k` or a positive integer"))?;
    if k == 0 {
        return Err(TermError::ZeroExponent);
    }
    Ok(Exponent::Finite(k))
}

pub fn factorial(n: u32) -> Option<u64> {
    (1..=n as u64).try_fold(1u64, |acc, i| acc.checked_mul(i))
}

/// Kind of exponent arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    SubInt,
    MulInt,
    Divide,
}

/// Exact arithmetic on exponents. Division of `ω+n` by `d` exists iff `d | n`.
pub fn exp_arith(op: ArithOp, alpha: Exponent, d: i64) -> Result<Exponent, ArithError> {
    let checked = |n: i64| if n.abs() > MAX_OFFSET { Err(ArithError::OutOfRange) } else { Ok(Exponent::OmegaPlus(n)) };
    match op {
        ArithOp::Add | ArithOp::SubInt => {
            let d = if op == ArithOp::SubInt { d.checked_neg().ok_or(ArithError::OutOfRange)? } else { d };
            match alpha {
                Exponent::Finite(k) => {
                    let v = k as i128 + d as i128;
                    if v < 1 {
                        Err(ArithError::NonPositive)
                    } else {
                        u64::try_from(v).map(Exponent::Finite).map_err(|_| ArithError::OutOfRange)
                    }
                }
                Exponent::OmegaPlus(n) => checked(n.checked_add(d).ok_or(ArithError::OutOfRange)?),
            }
        }
        ArithOp::MulInt => {
            if d < 1 {
                return Err(ArithError::BadFactor(d));
            }
            match alpha {
                Exponent::Finite(k) => k.checked_mul(d as u64).map(Exponent::Finite).ok_or(ArithError::OutOfRange),
                // dω = ω
                Exponent::OmegaPlus(n) => checked(n.checked_mul(d).ok_or(ArithError::OutOfRange)?),
            }
        }
        ArithOp::Divide => {
            if d < 1 {
                return Err(ArithError::BadFactor(d));
            }
            match alpha {
                Exponent::Finite(k) if k % d as u64 == 0 => Ok(Exponent::Finite(k / d as u64)),
                Exponent::Finite(k) => Err(ArithError::NotDivisible { n: k as i64, d }),
                Exponent::OmegaPlus(n) if n % d == 0 => Ok(Exponent::OmegaPlus(n / d)),
                Exponent::OmegaPlus(n) => Err(ArithError::NotDivisible { n, d }),
            }
        }
    }
}

/// Normal form of `x^α` over the pseudovariety defined by `x^{ω+n} = x^ω`.
pub fn normalize_unary_bn(alpha: Exponent, n: u32) -> Exponent {
    assert!(n >= 1);
    match alpha {
        Exponent::Finite(_) => alpha,
        Exponent::OmegaPlus(k) => Exponent::OmegaPlus(k.rem_euclid(n as i64)),
    }
}

/// An arbitrary term tree before canonicalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawTerm {
    Word(String),
    Concat(Vec<RawTerm>),
    Power(Box<RawTerm>, Exponent),
}

impl RawTerm {
    pub fn word(w: &str) -> Self {
        RawTerm::Word(w.to_string())
    }

    pub fn power(base: RawTerm, e: Exponent) -> Self {
        RawTerm::Power(Box::new(base), e)
    }

    /// Number of nodes in the tree.
    pub fn nodes(&self) -> usize {
        match self {
            RawTerm::Word(_) => 1,
            RawTerm::Concat(v) => 1 + v.iter().map(RawTerm::nodes).sum::<usize>(),
            RawTerm::Power(b, _) => 1 + b.nodes(),
        }
    }
}

/// A factor of a canonical term: a nonempty word or a power `base^{ω+n}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Factor {
    Word(String),
    Power(Box<KappaTerm>, i64),
}

impl Factor {
    pub fn rank(&self) -> usize {
        match self {
            Factor::Word(_) => 0,
            Factor::Power(b, _) => b.rank + 1,
        }
    }
}

/// A κ̄-term in canonical form: a flat product of factors with adjacent words
/// merged. The empty product is allowed internally (it stands for the empty
/// word) but is rejected by [`canonicalize`] and the parser.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KappaTerm {
    factors: Vec<Factor>,
    rank: usize,
    nu: usize,
}

/// The decomposition `t0 s1^{α1} t1 ⋯ sm^{αm} tm` of a term of positive rank:
/// the `s_j` are the bases of the top-rank powers, the `t_i` the (possibly
/// empty) stretches between them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layers {
    pub fillers: Vec<KappaTerm>,
    pub blocks: Vec<(KappaTerm, i64)>,
}

impl KappaTerm {
    pub fn empty() -> Self {
        KappaTerm { factors: vec![], rank: 0, nu: 0 }
    }

    pub fn word(w: &str) -> Self {
        Self::from_factors(if w.is_empty() { vec![] } else { vec![Factor::Word(w.to_string())] })
    }

    /// `base^{ω+n}`; `base` must be nonempty.
    pub fn power(base: KappaTerm, n: i64) -> Self {
        assert!(!base.is_empty(), "power of the empty term");
        Self::from_factors(vec![Factor::Power(Box::new(base), n)])
    }

    /// Builds a canonical term, merging adjacent words.
    pub fn from_factors(factors: Vec<Factor>) -> Self {
        let mut merged: Vec<Factor> = Vec::with_capacity(factors.len());
        for f in factors {
            match (merged.last_mut(), f) {
                (_, Factor::Word(w)) if w.is_empty() => {}
                (Some(Factor::Word(prev)), Factor::Word(w)) => prev.push_str(&w),
                (_, f) => merged.push(f),
            }
        }
        let rank = merged.iter().map(Factor::rank).max().unwrap_or(0);
        let nu = if rank == 0 { 0 } else { merged.iter().filter(|f| f.rank() == rank).count() };
        KappaTerm { factors: merged, rank, nu }
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Number of top-rank powers.
    pub fn nu(&self) -> usize {
        self.nu
    }

    /// `λ(t) = (rk t, ν t)`.
    pub fn rank_nu(&self) -> (usize, usize) {
        (self.rank, self.nu)
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// The word if this is a rank-0 term.
    pub fn as_word(&self) -> Option<String> {
        if self.rank > 0 {
            return None;
        }
        Some(match self.factors.first() {
            Some(Factor::Word(w)) => w.clone(),
            _ => String::new(),
        })
    }

    pub fn concat(&self, other: &KappaTerm) -> KappaTerm {
        Self::from_factors(self.factors.iter().chain(other.factors.iter()).cloned().collect())
    }

    pub fn concat_all<'a>(parts: impl IntoIterator<Item = &'a KappaTerm>) -> KappaTerm {
        Self::from_factors(parts.into_iter().flat_map(|t| t.factors.iter().cloned()).collect())
    }

    pub fn letters(&self) -> BTreeSet<char> {
        let mut out = BTreeSet::new();
        for f in &self.factors {
            match f {
                Factor::Word(w) => out.extend(w.chars()),
                Factor::Power(b, _) => out.extend(b.letters()),
            }
        }
        out
    }

    /// Number of nodes of the canonical tree (words, powers, and the product
    /// node when there are several factors).
    pub fn nodes(&self) -> usize {
        let inner: usize = self
            .factors
            .iter()
            .map(|f| match f {
                Factor::Word(_) => 1,
                Factor::Power(b, _) => 1 + b.nodes(),
            })
            .sum();
        inner + usize::from(self.factors.len() > 1)
    }

    /// Splits a term of positive rank along its top-rank powers.
    pub fn layers(&self) -> Option<Layers> {
        if self.rank == 0 {
            return None;
        }
        let mut fillers = vec![];
        let mut blocks = vec![];
        let mut cur = vec![];
        for f in &self.factors {
            match f {
                Factor::Power(b, n) if f.rank() == self.rank => {
                    fillers.push(Self::from_factors(std::mem::take(&mut cur)));
                    blocks.push(((**b).clone(), *n));
                }
                other => cur.push(other.clone()),
            }
        }
        fillers.push(Self::from_factors(cur));
        Some(Layers { fillers, blocks })
    }

    /// All offsets `n` of powers `ω+n` occurring in the term.
    pub fn offsets(&self) -> Vec<i64> {
        let mut out = vec![];
        for f in &self.factors {
            if let Factor::Power(b, n) = f {
                out.push(*n);
                out.extend(b.offsets());
            }
        }
        out
    }

    /// Smallest `n ≥ 4` for which every `n! + k` is at least 1.
    pub fn min_expansion_index(&self) -> u32 {
        let worst = self.offsets().into_iter().min().unwrap_or(0);
        let mut n = MIN_EXPANSION_INDEX;
        while factorial(n).map_or(false, |f| (f as i128) + (worst as i128) < 1) {
            n += 1;
        }
        n
    }

    fn check_index(&self, n: u32) -> Result<(), TermError> {
        if n < MIN_EXPANSION_INDEX {
            return Err(TermError::IndexTooSmall(n));
        }
        Ok(())
    }

    /// `|ε_n(t)|`, without building the word.
    pub fn expanded_len(&self, n: u32) -> Result<u64, TermError> {
        self.check_index(n)?;
        self.len_unchecked(n)
    }

    fn len_unchecked(&self, n: u32) -> Result<u64, TermError> {
        let mut total: u64 = 0;
        for f in &self.factors {
            let l = match f {
                Factor::Word(w) => w.chars().count() as u64,
                Factor::Power(b, k) => {
                    let e = Exponent::OmegaPlus(*k).expand(n)?;
                    b.len_unchecked(n)?.checked_mul(e).ok_or(TermError::Overflow(n))?
                }
            };
            total = total.checked_add(l).ok_or(TermError::Overflow(n))?;
        }
        Ok(total)
    }

    /// `ε_n(t)`: every `v^{ω+k}` replaced by `v^{n!+k}`, recursively.
    pub fn expand(&self, n: u32) -> Result<String, TermError> {
        self.check_index(n)?;
        // validate all exponents before allocating
        self.len_unchecked(n)?;
        let mut out = String::new();
        self.expand_into(n, &mut out)?;
        Ok(out)
    }

    fn expand_into(&self, n: u32, out: &mut String) -> Result<(), TermError> {
        for f in &self.factors {
            match f {
                Factor::Word(w) => out.push_str(w),
                Factor::Power(b, k) => {
                    let e = Exponent::OmegaPlus(*k).expand(n)?;
                    let mut piece = String::new();
                    b.expand_into(n, &mut piece)?;
                    for _ in 0..e {
                        out.push_str(&piece);
                    }
                }
            }
        }
        Ok(())
    }

    /// Value of the term under `φ`. The empty term evaluates to the identity
    /// of the target, if any.
    pub fn eval(&self, phi: &SemigroupMorphism) -> Result<usize, SemigroupError> {
        let target = phi.target();
        let mut acc: Option<usize> = None;
        for f in &self.factors {
            let v = match f {
                Factor::Word(w) => phi.eval_word(w)?,
                Factor::Power(b, k) => {
                    let base = b.eval(phi)?;
                    target.power(base, &Exponent::OmegaPlus(*k))
                }
            };
            acc = Some(match acc {
                None => v,
                Some(a) => target.mul(a, v),
            });
        }
        acc.or(target.identity()).ok_or(SemigroupError::EmptyWord)
    }

    /// Image in the free group: `x^{ω+n} ↦ xⁿ`.
    pub fn to_free_group(&self) -> GroupWord {
        let mut acc = GroupWord::identity();
        for f in &self.factors {
            let g = match f {
                Factor::Word(w) => GroupWord::from_positive(w),
                Factor::Power(b, n) => b.to_free_group().pow(*n),
            };
            acc = acc.mul(&g);
        }
        acc
    }
}

impl fmt::Display for KappaTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        for (i, fac) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            match fac {
                Factor::Word(w) => write!(f, "{w}")?,
                Factor::Power(b, n) => {
                    let single = matches!(b.factors.as_slice(), [Factor::Word(w)] if w.chars().count() == 1);
                    if single {
                        write!(f, "{b}")?;
                    } else {
                        write!(f, "({b})")?;
                    }
                    match *n {
                        0 => write!(f, "^w")?,
                        n => write!(f, "^({})", Exponent::OmegaPlus(n))?,
                    }
                }
            }
        }
        Ok(())
    }
}

/// Rewrites a raw tree into canonical form. Finite powers are unfolded.
pub fn canonicalize(raw: &RawTerm) -> Result<KappaTerm, TermError> {
    let t = canon(raw)?;
    if t.is_empty() {
        return Err(TermError::Empty);
    }
    Ok(t)
}

fn canon(raw: &RawTerm) -> Result<KappaTerm, TermError> {
    Ok(match raw {
        RawTerm::Word(w) => KappaTerm::word(w),
        RawTerm::Concat(parts) => {
            let parts = parts.iter().map(canon).collect::<Result<Vec<_>, _>>()?;
            KappaTerm::concat_all(&parts)
        }
        RawTerm::Power(b, e) => {
            let base = canon(b)?;
            if base.is_empty() {
                return Err(TermError::Empty);
            }
            match *e {
                Exponent::Finite(0) => return Err(TermError::ZeroExponent),
                Exponent::Finite(k) => KappaTerm::concat_all(std::iter::repeat(&base).take(k as usize)),
                Exponent::OmegaPlus(n) => {
                    if n.abs() > MAX_OFFSET {
                        return Err(TermError::OffsetOutOfRange(n));
                    }
                    KappaTerm::power(base, n)
                }
            }
        }
    })
}

/// Parses the term syntax: letters, juxtaposition, parentheses, and postfix
/// `^w`, `^(w+k)`, `^(w-k)`, `^k`.
pub fn parse_term(text: &str) -> Result<KappaTerm, TermError> {
    let raw = parse_raw_term(text)?;
    canonicalize(&raw)
}

pub fn parse_raw_term(text: &str) -> Result<RawTerm, TermError> {
    let tokens: Vec<(usize, char)> = text.chars().enumerate().filter(|(_, c)| !c.is_whitespace()).collect();
    let mut p = TermParser { tokens, pos: 0, end: text.chars().count() };
    let t = p.seq()?;
    if let Some(&(pos, c)) = p.tokens.get(p.pos) {
        return Err(TermError::Syntax { pos, msg: format!("unexpected {c:?}") });
    }
    Ok(t)
}

struct TermParser {
    tokens: Vec<(usize, char)>,
    pos: usize,
    end: usize,
}

impl TermParser {
    fn peek(&self) -> Option<char> {
        self.tokens.get(self.pos).map(|t| t.1)
    }

    fn here(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn err<T>(&self, msg: &str) -> Result<T, TermError> {
        Err(TermError::Syntax { pos: self.here(), msg: msg.to_string() })
    }

    fn seq(&mut self) -> Result<RawTerm, TermError> {
        let mut items = vec![];
        while matches!(self.peek(), Some(c) if c != ')' && c != '^') {
            items.push(self.item()?);
        }
        if items.is_empty() {
            return self.err("expected a letter or `(`");
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { RawTerm::Concat(items) })
    }

    fn item(&mut self) -> Result<RawTerm, TermError> {
        let mut acc = match self.peek() {
            Some('(') => {
                self.pos += 1;
                let inner = self.seq()?;
                if self.peek() != Some(')') {
                    return self.err("expected `)`");
                }
                self.pos += 1;
                inner
            }
            Some(c) => {
                self.pos += 1;
                RawTerm::Word(c.to_string())
            }
            None => return self.err("unexpected end of input"),
        };
        while self.peek() == Some('^') {
            self.pos += 1;
            let e = self.exponent()?;
            acc = RawTerm::power(acc, e);
        }
        Ok(acc)
    }

    fn exponent(&mut self) -> Result<Exponent, TermError> {
        let start = self.here();
        let mut text = String::new();
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                while let Some(c) = self.peek() {
                    if c == ')' {
                        break;
                    }
                    text.push(c);
                    self.pos += 1;
                }
                if self.peek() != Some(')') {
                    return self.err("expected `)` closing the exponent");
                }
                self.pos += 1;
            }
            Some(c) if c == 'w' || c == 'ω' => {
                self.pos += 1;
                text.push(c);
            }
            Some(c) if c.is_ascii_digit() => {
                while let Some(c) = self.peek().filter(char::is_ascii_digit) {
                    text.push(c);
                    self.pos += 1;
                }
            }
            _ => return self.err("expected an exponent"),
        }
        parse_exponent(&text).map_err(|e| match e {
            TermError::Syntax { msg, .. } => TermError::Syntax { pos: start, msg },
            other => other,
        })
    }
}

/// Whether the two terms have the same value in every finite group.
pub fn equal_over_g(t1: &KappaTerm, t2: &KappaTerm) -> bool {
    t1.to_free_group() == t2.to_free_group()
}

/// Outcome of a bounded search for a semigroup distinguishing two terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Refutation {
    Counterexample(SemigroupMorphism),
    Unknown { tried: usize },
}

/// Looks for `φ` in `catalog` with `φ(t1) ≠ φ(t2)`, trying at most `budget`
/// morphisms.
pub fn refute_over_s(t1: &KappaTerm, t2: &KappaTerm, catalog: &[SemigroupMorphism], budget: usize) -> Refutation {
    let mut tried = 0;
    for phi in catalog.iter().take(budget) {
        tried += 1;
        match (t1.eval(phi), t2.eval(phi)) {
            (Ok(a), Ok(b)) if a != b => return Refutation::Counterexample(phi.clone()),
            _ => {}
        }
    }
    Refutation::Unknown { tried }
}

/// Every assignment of the letters into every semigroup of `semigroups`, in
/// catalog order, skipping semigroups with more than `max_assignments`
/// assignments.
pub fn morphisms_into(alphabet: &[char], semigroups: &[(String, FiniteSemigroup)], max_assignments: usize) -> Vec<SemigroupMorphism> {
    let mut out = vec![];
    for (_, s) in semigroups {
        let m = s.size();
        let count = (m as u128).checked_pow(alphabet.len() as u32);
        if count.map_or(true, |c| c > max_assignments as u128) {
            continue;
        }
        let mut images = vec![0usize; alphabet.len()];
        loop {
            out.push(SemigroupMorphism::new(alphabet.to_vec(), s.clone(), images.clone()).expect("valid images"));
            let mut pos = 0;
            loop {
                if pos == images.len() {
                    break;
                }
                images[pos] += 1;
                if images[pos] < m {
                    break;
                }
                images[pos] = 0;
                pos += 1;
            }
            if pos == images.len() {
                break;
            }
        }
    }
    out
}

/// The default refutation catalog for `alphabet`.
pub fn standard_morphisms(alphabet: &[char]) -> Vec<SemigroupMorphism> {
    morphisms_into(alphabet, &catalog::standard(), 4096)
}

/// Whether the value of `t` lies in the closure of `L`, decided through the
/// syntactic morphism of `L`.
pub fn in_closure_s(t: &KappaTerm, l: &Dfa) -> Result<bool, TermError> {
    in_closure_with(t, &syntactic_semigroup(l))
}

/// [`in_closure_s`] with a precomputed syntactic semigroup.
pub fn in_closure_with(t: &KappaTerm, syn: &Syntactic) -> Result<bool, TermError> {
    if t.is_empty() {
        return Err(TermError::Empty);
    }
    let v = t.eval(&syn.morphism)?;
    Ok(syn.accepts_element(v))
}

/// Rewrites `t` with identities that hold in every finite semigroup
/// (`(u^k)^{ω+n} = u^{ω+kn}`, `(x^{ω+m})^{ω+n} = x^{ω+mn}`,
/// `u u^{ω+n} = u^{ω+n+1}`, `x^{ω+m} x^{ω+n} = x^{ω+m+n}`) and, for `A` and
/// `Bn`, reduces offsets. Equal results are equal over `p`; different results
/// prove nothing.
pub fn reduce_for(t: &KappaTerm, p: &Pseudovariety) -> KappaTerm {
    let mut out: Vec<Factor> = vec![];
    for f in &t.factors {
        match f {
            Factor::Word(w) => push_reduced(&mut out, Factor::Word(w.clone()), p),
            Factor::Power(base, n) => {
                let (b, n) = simplify_power(reduce_for(base, p), *n, p);
                push_reduced(&mut out, Factor::Power(Box::new(b), n), p);
            }
        }
    }
    KappaTerm::from_factors(out)
}

/// A key such that equal keys imply equality over `p`.
pub fn identity_key(t: &KappaTerm, p: &Pseudovariety) -> String {
    match p {
        Pseudovariety::G => format!("{}", t.to_free_group()),
        _ => reduce_for(t, p).to_string(),
    }
}

fn collapse_offset(n: i64, p: &Pseudovariety) -> i64 {
    match p {
        Pseudovariety::A => 0,
        Pseudovariety::Bn(k) if *k > 0 => n.rem_euclid(*k as i64),
        _ => n,
    }
}

fn primitive_root(w: &str) -> (String, i64) {
    let chars: Vec<char> = w.chars().collect();
    let n = chars.len();
    for d in 1..=n {
        if n % d == 0 && (d..n).all(|i| chars[i] == chars[i - d]) {
            return (chars[..d].iter().collect(), (n / d) as i64);
        }
    }
    (w.to_string(), 1)
}

fn simplify_power(base: KappaTerm, n: i64, p: &Pseudovariety) -> (KappaTerm, i64) {
    if let Some(w) = base.as_word() {
        let (u, k) = primitive_root(&w);
        return (KappaTerm::word(&u), collapse_offset(n.saturating_mul(k), p));
    }
    if let [Factor::Power(inner, m)] = base.factors.as_slice() {
        return ((**inner).clone(), collapse_offset(m.saturating_mul(n), p));
    }
    (base, collapse_offset(n, p))
}

fn push_reduced(out: &mut Vec<Factor>, f: Factor, p: &Pseudovariety) {
    match f {
        Factor::Word(mut w) => {
            while let Some(Factor::Power(b, n)) = out.last_mut() {
                match b.as_word() {
                    Some(u) if w.starts_with(&u) => {
                        w.drain(..u.len());
                        *n = collapse_offset(n.saturating_add(1), p);
                    }
                    _ => break,
                }
            }
            if w.is_empty() {
                return;
            }
            match out.last_mut() {
                Some(Factor::Word(prev)) => prev.push_str(&w),
                _ => out.push(Factor::Word(w)),
            }
        }
        Factor::Power(b, mut n) => {
            if let Some(u) = b.as_word() {
                while let Some(Factor::Word(prev)) = out.last_mut() {
                    if !prev.ends_with(&u) {
                        break;
                    }
                    prev.truncate(prev.len() - u.len());
                    n = collapse_offset(n.saturating_add(1), p);
                    if prev.is_empty() {
                        out.pop();
                    }
                }
            }
            if let Some(Factor::Power(b2, m)) = out.last_mut() {
                if *b2 == b {
                    *m = collapse_offset(m.saturating_add(n), p);
                    return;
                }
            }
            out.push(Factor::Power(b, n));
        }
    }
}
