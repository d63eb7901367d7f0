//! Separation verdicts: exact over group languages, and for other
//! pseudovarieties a search for recognizers paired with a search for common
//! closure points.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde_json::{json, Value};
use thiserror::Error;

use crate::freegroup::{closure_g, FreeGroupError, GroupWord};
use crate::kappa::{identity_key, in_closure_with, KappaTerm, TermError};
use crate::rational::{compile, syntactic_semigroup, transition_semigroup, Dfa, LangError, RegexAst, Syntactic};
use crate::semigroup::{Pseudovariety, SemigroupError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeparationError {
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    FreeGroup(#[from] FreeGroupError),
    #[error(transparent)]
    Semigroup(#[from] SemigroupError),
    #[error(transparent)]
    Term(#[from] TermError),
    #[error("budgets must be positive")]
    ZeroBudget,
}

/// Largest permutation automaton tried when looking for a group recognizer.
pub const GROUP_RECOGNIZER_STATES: usize = 5;

/// Cap on permutation tuples examined per state count.
const PERMUTATION_TUPLE_CAP: usize = 250_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budgets {
    pub max_states: usize,
    pub max_terms: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { max_states: 3, max_terms: 500 }
    }
}

/// A complete automaton whose transition semigroup recognizes a separator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparatorRecognizer {
    pub automaton: Dfa,
    /// Size of the transition semigroup of `automaton`.
    pub semigroup_size: usize,
    /// `φ⁻¹(φ(K))`, minimized.
    pub separator: Dfa,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    Group(GroupWord),
    /// A word of `K ∩ L`.
    Word(String),
    /// A term of `cl(K)` and a term of `cl(L)` that are equal over the
    /// pseudovariety.
    Pair(KappaTerm, KappaTerm),
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Group(w) => write!(f, "{w}"),
            Witness::Word(w) => write!(f, "{w}"),
            Witness::Pair(x, y) => write!(f, "{x} = {y}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeparationVerdict {
    /// `recognizer` is `None` only for group separation when the closures are
    /// disjoint but no permutation automaton within
    /// [`GROUP_RECOGNIZER_STATES`] states was found.
    Separable { recognizer: Option<SeparatorRecognizer> },
    NotSeparable { witness: Witness },
    Unknown { budgets: Budgets, automata_tried: usize, terms_tried: usize },
}

impl SeparationVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            SeparationVerdict::Separable { .. } => "Separable",
            SeparationVerdict::NotSeparable { .. } => "NotSeparable",
            SeparationVerdict::Unknown { .. } => "Unknown",
        }
    }

    pub fn to_json(&self, budgets: Budgets) -> Value {
        let mut v = json!({
            "schema": 1,
            "verdict": self.name(),
            "budgets": {"maxStates": budgets.max_states, "maxTerms": budgets.max_terms},
        });
        match self {
            SeparationVerdict::Separable { recognizer: Some(r) } => {
                v["recognizer"] = json!({
                    "automaton": r.automaton.to_json(),
                    "states": r.automaton.num_states(),
                    "semigroupSize": r.semigroup_size,
                    "separator": r.separator.to_json(),
                    "separatorRegex": r.separator.to_regex().to_string(),
                });
            }
            SeparationVerdict::Separable { recognizer: None } => {}
            SeparationVerdict::NotSeparable { witness } => {
                v["witness"] = match witness {
                    Witness::Group(w) => json!({"kind": "groupWord", "value": w.to_string()}),
                    Witness::Word(w) => json!({"kind": "word", "value": w}),
                    Witness::Pair(x, y) => json!({"kind": "termPair", "k": x.to_string(), "l": y.to_string()}),
                };
            }
            SeparationVerdict::Unknown { automata_tried, terms_tried, .. } => {
                v["spent"] = json!({"automata": automata_tried, "terms": terms_tried});
            }
        }
        v
    }
}

/// Base of a closure expression: explicit words or a whole language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClosureBase {
    Words(Vec<String>),
    Language(Dfa),
}

/// A regex read with closure semantics: `SigmaPlus(e)` stands for the
/// σ-subalgebra generated by the closure of `e`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClosureExpr {
    Base(ClosureBase),
    Union(Box<ClosureExpr>, Box<ClosureExpr>),
    Product(Box<ClosureExpr>, Box<ClosureExpr>),
    SigmaPlus(Box<ClosureExpr>),
}

impl ClosureExpr {
    pub fn words<S: AsRef<str>>(ws: &[S]) -> Self {
        ClosureExpr::Base(ClosureBase::Words(ws.iter().map(|w| w.as_ref().to_string()).collect()))
    }

    pub fn language(d: Dfa) -> Self {
        ClosureExpr::Base(ClosureBase::Language(d))
    }

    pub fn union(l: ClosureExpr, r: ClosureExpr) -> Self {
        ClosureExpr::Union(Box::new(l), Box::new(r))
    }

    pub fn product(l: ClosureExpr, r: ClosureExpr) -> Self {
        ClosureExpr::Product(Box::new(l), Box::new(r))
    }

    pub fn sigma_plus(e: ClosureExpr) -> Self {
        ClosureExpr::SigmaPlus(Box::new(e))
    }

    /// Mirrors a regex: letters become one-word bases, `+` becomes
    /// `SigmaPlus`.
    pub fn from_regex(e: &RegexAst) -> Self {
        match e {
            RegexAst::Empty => ClosureExpr::Base(ClosureBase::Words(vec![])),
            RegexAst::Letter(c) => ClosureExpr::words(&[c.to_string()]),
            RegexAst::Union(l, r) => ClosureExpr::union(Self::from_regex(l), Self::from_regex(r)),
            RegexAst::Concat(l, r) => ClosureExpr::product(Self::from_regex(l), Self::from_regex(r)),
            RegexAst::Plus(x) => ClosureExpr::sigma_plus(Self::from_regex(x)),
        }
    }

    /// The rational language obtained by forgetting closures.
    pub fn underlying(&self, alphabet: &[char]) -> Result<Dfa, LangError> {
        Ok(match self {
            ClosureExpr::Base(ClosureBase::Words(ws)) => Dfa::from_words(alphabet, ws)?,
            ClosureExpr::Base(ClosureBase::Language(d)) => {
                if d.alphabet() != alphabet {
                    return Err(LangError::AlphabetMismatch(d.alphabet().to_vec(), alphabet.to_vec()));
                }
                d.clone()
            }
            ClosureExpr::Union(l, r) => l.underlying(alphabet)?.union(&r.underlying(alphabet)?)?,
            ClosureExpr::Product(l, r) => l.underlying(alphabet)?.concat(&r.underlying(alphabet)?)?,
            ClosureExpr::SigmaPlus(x) => x.underlying(alphabet)?.plus(),
        }
        .minimize())
    }
}

/// Per-node memo of emitted terms, level by level.
struct Node<'a> {
    expr: &'a ClosureExpr,
    children: Vec<Node<'a>>,
    levels: Vec<Vec<KappaTerm>>,
    seen: HashSet<KappaTerm>,
}

impl<'a> Node<'a> {
    fn new(expr: &'a ClosureExpr) -> Self {
        let children = match expr {
            ClosureExpr::Base(_) => vec![],
            ClosureExpr::Union(l, r) | ClosureExpr::Product(l, r) => vec![Node::new(l), Node::new(r)],
            ClosureExpr::SigmaPlus(x) => vec![Node::new(x)],
        };
        Node { expr, children, levels: vec![vec![]], seen: HashSet::new() }
    }

    /// Terms of weight `w`, computing lower levels first.
    fn level(&mut self, w: usize) -> &[KappaTerm] {
        while self.levels.len() <= w {
            let next = self.levels.len();
            let fresh = self.compute(next);
            self.levels.push(fresh);
        }
        &self.levels[w]
    }

    fn compute(&mut self, w: usize) -> Vec<KappaTerm> {
        let mut cand: Vec<KappaTerm> = vec![];
        match self.expr {
            ClosureExpr::Base(ClosureBase::Words(ws)) => {
                cand.extend(ws.iter().filter(|x| !x.is_empty() && x.chars().count() == w).map(|x| KappaTerm::word(x)));
            }
            ClosureExpr::Base(ClosureBase::Language(d)) => {
                cand.extend(d.words_up_to(w).into_iter().filter(|x| !x.is_empty() && x.chars().count() == w).map(|x| KappaTerm::word(&x)));
            }
            ClosureExpr::Union(..) => {
                cand.extend(self.children[0].level(w).iter().cloned());
                cand.extend(self.children[1].level(w).iter().cloned());
            }
            ClosureExpr::Product(..) => {
                for w1 in 1..w {
                    let left = self.children[0].level(w1).to_vec();
                    let right = self.children[1].level(w - w1);
                    for x in &left {
                        for y in right {
                            cand.push(x.concat(y));
                        }
                    }
                }
            }
            ClosureExpr::SigmaPlus(..) => {
                cand.extend(self.children[0].level(w).iter().cloned());
                for w1 in 1..w {
                    for x in &self.levels[w1] {
                        for y in &self.levels[w - w1] {
                            cand.push(x.concat(y));
                        }
                    }
                }
                // x^{ω+n} with weight(x) + 1 + |n| = w
                for wx in 1..w {
                    let spare = (w - wx - 1) as i64;
                    for x in &self.levels[wx] {
                        cand.push(KappaTerm::power(x.clone(), spare));
                        if spare > 0 {
                            cand.push(KappaTerm::power(x.clone(), -spare));
                        }
                    }
                }
            }
        }
        let mut keyed: Vec<(usize, String, KappaTerm)> = cand.into_iter().map(|t| (t.nodes(), t.to_string(), t)).collect();
        keyed.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
        let mut out = vec![];
        for (_, _, t) in keyed {
            if !t.is_empty() && self.seen.insert(t.clone()) {
                out.push(t);
            }
        }
        out
    }
}

/// Enumerates terms of the closure of `L(c)`, lightest first: a word weighs
/// its length, a product the sum of its parts, and `x^{ω+n}` weighs
/// `weight(x) + 1 + |n|`. Within a weight, terms are ordered by node count
/// and then by their printed form.
pub fn enumerate_closure_terms(c: &ClosureExpr, budget: usize) -> Vec<KappaTerm> {
    let mut out = vec![];
    let mut node = Node::new(c);
    let mut w = 1;
    // levels stay empty forever once two consecutive bands are empty and no
    // base word is longer; bound the search by the budget instead.
    let mut empty_run = 0;
    while out.len() < budget && empty_run <= max_base_len(c) + 1 {
        let level = node.level(w);
        if level.is_empty() {
            empty_run += 1;
        } else {
            empty_run = 0;
        }
        out.extend(level.iter().take(budget - out.len()).cloned());
        w += 1;
    }
    out
}

/// Longest gap between nonempty weights that the expression can produce.
fn max_base_len(c: &ClosureExpr) -> usize {
    match c {
        ClosureExpr::Base(ClosureBase::Words(ws)) => ws.iter().map(|w| w.chars().count()).max().unwrap_or(0),
        ClosureExpr::Base(ClosureBase::Language(d)) => d.num_states(),
        ClosureExpr::Union(l, r) => max_base_len(l).max(max_base_len(r)),
        ClosureExpr::Product(l, r) => max_base_len(l) + max_base_len(r),
        ClosureExpr::SigmaPlus(x) => max_base_len(x),
    }
}

fn compile_pair(k: &RegexAst, l: &RegexAst, alphabet: &[char]) -> Result<(Dfa, Dfa), SeparationError> {
    for c in k.letters().into_iter().chain(l.letters()) {
        if !alphabet.contains(&c) {
            return Err(LangError::UnknownLetter(c).into());
        }
    }
    Ok((compile(k, alphabet), compile(l, alphabet)))
}

/// Exact separation by group languages: the closures in the profinite group
/// topology are computed and intersected. A recognizer is searched among
/// permutation automata.
pub fn separate_by_g(k: &RegexAst, l: &RegexAst, alphabet: &[char]) -> Result<SeparationVerdict, SeparationError> {
    let (kd, ld) = compile_pair(k, l, alphabet)?;
    let ck = closure_g(alphabet, k)?;
    let cl = closure_g(alphabet, l)?;
    if let Some(w) = ck.intersection_witness(&cl)? {
        debug_assert!(ck.member(&w) && cl.member(&w));
        return Ok(SeparationVerdict::NotSeparable { witness: Witness::Group(w) });
    }
    let mut recognizer = None;
    for q in 1..=GROUP_RECOGNIZER_STATES {
        if let Some(r) = permutation_automata(alphabet, q).find_map(|d| try_recognizer(&d, &kd, &ld, &Pseudovariety::G)) {
            recognizer = Some(r);
            break;
        }
    }
    Ok(SeparationVerdict::Separable { recognizer })
}

/// Separation by `P`-recognizable languages within budgets.
pub fn separate_by_v(k: &RegexAst, l: &RegexAst, p: &Pseudovariety, alphabet: &[char], budgets: Budgets) -> Result<SeparationVerdict, SeparationError> {
    if budgets.max_states == 0 || budgets.max_terms == 0 {
        return Err(SeparationError::ZeroBudget);
    }
    let (kd, ld) = compile_pair(k, l, alphabet)?;
    if let Some(w) = kd.intersect(&ld)?.shortest_word() {
        return Ok(SeparationVerdict::NotSeparable { witness: Witness::Word(w) });
    }
    let mut automata_tried = 0;
    for q in 1..=budgets.max_states {
        for d in connected_automata(alphabet, q) {
            automata_tried += 1;
            if let Some(r) = try_recognizer(&d, &kd, &ld, p) {
                return Ok(SeparationVerdict::Separable { recognizer: Some(r) });
            }
        }
    }
    if *p == Pseudovariety::G {
        return separate_by_g(k, l, alphabet);
    }
    // a term of cl(K) and a term of cl(L) that are equal over P rule out
    // separation; equality is only certified through identity_key
    let syn_k = syntactic_semigroup(&kd);
    let syn_l = syntactic_semigroup(&ld);
    let k_terms = enumerate_closure_terms(&ClosureExpr::from_regex(k), budgets.max_terms);
    let mut keys: HashMap<String, &KappaTerm> = HashMap::new();
    for t in &k_terms {
        debug_assert!(in_closure_with(t, &syn_k)?);
        keys.entry(identity_key(t, p)).or_insert(t);
    }
    let l_terms = enumerate_closure_terms(&ClosureExpr::from_regex(l), budgets.max_terms);
    let terms_tried = k_terms.len() + l_terms.len();
    for t in &l_terms {
        debug_assert!(in_closure_with(t, &syn_l)?);
        if let Some(tk) = keys.get(&identity_key(t, p)) {
            return Ok(SeparationVerdict::NotSeparable { witness: Witness::Pair((*tk).clone(), t.clone()) });
        }
    }
    Ok(SeparationVerdict::Unknown { budgets, automata_tried, terms_tried })
}

fn try_recognizer(d: &Dfa, kd: &Dfa, ld: &Dfa, p: &Pseudovariety) -> Option<SeparatorRecognizer> {
    let syn = transition_semigroup(d);
    if !syn.semigroup().member(p).unwrap_or(false) {
        return None;
    }
    let phi = &syn.morphism;
    let ik = phi.image_of_rational(kd).ok()?;
    let il = phi.image_of_rational(ld).ok()?;
    if !ik.is_disjoint(&il) {
        return None;
    }
    let separator = preimage_automaton(&syn, &ik);
    if !check_separator_dfas(kd, ld, &separator, p) {
        return None;
    }
    Some(SeparatorRecognizer { automaton: d.clone(), semigroup_size: syn.semigroup().size(), separator })
}

/// `{w ∈ X⁺ : φ(w) ∈ image}` via the right Cayley graph.
fn preimage_automaton(syn: &Syntactic, image: &BTreeSet<usize>) -> Dfa {
    let phi = &syn.morphism;
    let s = phi.target();
    let m = s.size();
    let alphabet = phi.alphabet().to_vec();
    // state m is the initial state standing for the empty word
    let mut trans = vec![];
    for x in 0..m {
        trans.push(phi.images().iter().map(|&g| s.mul(x, g)).collect::<Vec<_>>());
    }
    trans.push(phi.images().to_vec());
    let mut finals: Vec<bool> = (0..m).map(|x| image.contains(&x)).collect();
    finals.push(false);
    Dfa::from_parts(alphabet, m, finals, trans).minimize()
}

fn check_separator_dfas(kd: &Dfa, ld: &Dfa, candidate: &Dfa, p: &Pseudovariety) -> bool {
    let (Ok(outside), Ok(meet)) = (kd.difference(candidate), ld.intersect(candidate)) else {
        return false;
    };
    if !outside.is_empty() || !meet.is_empty() {
        return false;
    }
    syntactic_semigroup(candidate).semigroup().member(p).unwrap_or(false)
}

/// Whether `L(candidate) ∩ X⁺` contains `K`, misses `L`, and has syntactic
/// semigroup in `P`.
pub fn check_separator(k: &RegexAst, l: &RegexAst, candidate: &Dfa, p: &Pseudovariety) -> bool {
    let alphabet = candidate.alphabet().to_vec();
    let Ok((kd, ld)) = compile_pair(k, l, &alphabet) else {
        return false;
    };
    let restricted = match candidate.intersect(&Dfa::all_nonempty(&alphabet)) {
        Ok(d) => d.minimize(),
        Err(_) => return false,
    };
    check_separator_dfas(&kd, &ld, &restricted, p)
}

/// Complete automata with `q` states in which every state is reachable from
/// state 0, each listed once up to renaming: transitions are filled state by
/// state, letter by letter, and a target may only be a state already named
/// or the next fresh one. Accepting states are irrelevant and left empty.
pub fn connected_automata(alphabet: &[char], q: usize) -> impl Iterator<Item = Dfa> + '_ {
    let k = alphabet.len();
    let cells = q * k;
    let mut targets = vec![0usize; cells];
    let mut started = false;
    let mut done = q == 0 || k == 0 && q > 1;
    std::iter::from_fn(move || {
        loop {
            if done {
                return None;
            }
            if started {
                if !advance(&mut targets, q, k) {
                    done = true;
                    return None;
                }
            }
            started = true;
            if let Some(named) = named_counts(&targets, q, k) {
                if named == q {
                    let trans: Vec<Vec<usize>> = targets.chunks(k.max(1)).map(|c| c.to_vec()).collect();
                    return Some(Dfa::from_parts(alphabet.to_vec(), 0, vec![false; q], trans));
                }
            }
        }
    })
}

/// Number of named states if `targets` obeys the naming rule.
fn named_counts(targets: &[usize], q: usize, k: usize) -> Option<usize> {
    let mut named = 1;
    for (i, &t) in targets.iter().enumerate() {
        let state = i / k;
        if state >= named {
            return None;
        }
        if t > named || t >= q {
            return None;
        }
        if t == named {
            named += 1;
        }
    }
    Some(named)
}

/// Odometer step, most significant cell last so that the order is the
/// lexicographic order of the table read backwards.
fn advance(targets: &mut [usize], q: usize, _k: usize) -> bool {
    for cell in targets.iter_mut().rev() {
        *cell += 1;
        if *cell < q {
            return true;
        }
        *cell = 0;
    }
    false
}

/// Connected permutation automata with `q` states: every letter permutes the
/// states. Each is listed once up to renaming.
pub fn permutation_automata(alphabet: &[char], q: usize) -> impl Iterator<Item = Dfa> + '_ {
    let perms = permutations(q);
    let k = alphabet.len();
    let total = perms.len().checked_pow(k as u32).unwrap_or(usize::MAX).min(PERMUTATION_TUPLE_CAP);
    let mut seen: HashSet<Dfa> = HashSet::new();
    (0..total).filter_map(move |mut code| {
        let mut trans = vec![vec![0usize; k]; q];
        for li in 0..k {
            let p = &perms[code % perms.len()];
            code /= perms.len();
            for s in 0..q {
                trans[s][li] = p[s];
            }
        }
        let d = Dfa::from_parts(alphabet.to_vec(), 0, vec![false; q], trans).canonical();
        (d.num_states() == q && seen.insert(d.clone())).then_some(d)
    })
}

fn permutations(q: usize) -> Vec<Vec<usize>> {
    let mut out = vec![];
    let mut cur: Vec<usize> = (0..q).collect();
    fn heap(k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(cur.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, cur, out);
            if k % 2 == 0 {
                cur.swap(i, k - 1);
            } else {
                cur.swap(0, k - 1);
            }
        }
    }
    heap(q, &mut cur, &mut out);
    out.sort();
    out
}

/// Term counts per weight, for reporting.
pub fn closure_term_profile(terms: &[KappaTerm]) -> BTreeMap<usize, usize> {
    let mut m = BTreeMap::new();
    for t in terms {
        *m.entry(t.nodes()).or_insert(0) += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kappa::{in_closure_s, parse_term};
    use crate::rational::parse_regex;

    const AB: [char; 2] = ['a', 'b'];

    fn re(s: &str) -> RegexAst {
        parse_regex(s, &AB).unwrap()
    }

    #[test]
    fn closure_terms_of_a_plus() {
        let terms = enumerate_closure_terms(&ClosureExpr::sigma_plus(ClosureExpr::words(&["a"])), 10);
        assert_eq!(terms.len(), 10);
        for s in ["a", "aa", "a^w", "a^(w-1)"] {
            assert!(terms.contains(&parse_term(s).unwrap()), "{s} missing from {terms:?}");
        }
        let d = compile_str_ab("a^+");
        assert!(terms.iter().all(|t| in_closure_s(t, &d).unwrap()));
    }

    fn compile_str_ab(s: &str) -> Dfa {
        crate::rational::compile_str(s, &AB).unwrap()
    }

    #[test]
    fn finite_bases_terminate() {
        let terms = enumerate_closure_terms(&ClosureExpr::union(ClosureExpr::words(&["ab"]), ClosureExpr::words(&["b"])), 100);
        assert_eq!(terms.len(), 2);
    }

    #[test]
    fn product_of_plus_reaches_a_omega_b() {
        let e = ClosureExpr::product(ClosureExpr::sigma_plus(ClosureExpr::words(&["a"])), ClosureExpr::sigma_plus(ClosureExpr::words(&["b"])));
        let terms = enumerate_closure_terms(&e, 100);
        assert!(terms.contains(&parse_term("a^w b").unwrap()));
    }

    #[test]
    fn group_verdicts() {
        let v = separate_by_g(&re("(aa)^+"), &re("a(aa)^+ + a"), &AB).unwrap();
        match v {
            SeparationVerdict::Separable { recognizer: Some(r) } => assert!(r.automaton.num_states() <= 2),
            other => panic!("{other:?}"),
        }
        let v = separate_by_g(&re("a^+"), &re("b^+"), &AB).unwrap();
        assert_eq!(v, SeparationVerdict::NotSeparable { witness: Witness::Group(GroupWord::identity()) });
        // ⟨ab⟩ contains the identity, which is the shortest common point
        let v = separate_by_g(&re("(ab)^+"), &re("(ab)^+"), &AB).unwrap();
        assert_eq!(v, SeparationVerdict::NotSeparable { witness: Witness::Group(GroupWord::identity()) });
        let c = closure_g(&AB, &re("(ab)^+")).unwrap();
        assert!(c.member(&GroupWord::parse("ab").unwrap()));
    }

    #[test]
    fn aperiodic_separator_found() {
        let v = separate_by_v(&re("a^+b^+"), &re("b^+a^+"), &Pseudovariety::A, &AB, Budgets { max_states: 3, max_terms: 50 }).unwrap();
        let SeparationVerdict::Separable { recognizer: Some(r) } = v else { panic!("{v:?}") };
        assert!(check_separator(&re("a^+b^+"), &re("b^+a^+"), &r.separator, &Pseudovariety::A));
    }

    #[test]
    fn not_separable_by_term() {
        // (aa)^ω and a (aa)^ω are both a^ω over A
        let v = separate_by_v(&re("(aa)^+"), &re("a(aa)^+"), &Pseudovariety::A, &AB, Budgets { max_states: 2, max_terms: 50 }).unwrap();
        match v {
            SeparationVerdict::NotSeparable { witness: Witness::Pair(x, y) } => {
                assert!(in_closure_s(&x, &compile_str_ab("(aa)^+")).unwrap());
                assert!(in_closure_s(&y, &compile_str_ab("a(aa)^+")).unwrap());
                assert_eq!(identity_key(&x, &Pseudovariety::A), identity_key(&y, &Pseudovariety::A));
            }
            other => panic!("{other:?}"),
        }
        // over Bn:2 the parity survives
        let v = separate_by_v(&re("(aa)^+"), &re("a(aa)^+"), &Pseudovariety::Bn(2), &AB, Budgets { max_states: 2, max_terms: 50 }).unwrap();
        assert!(matches!(v, SeparationVerdict::Separable { recognizer: Some(_) }));
        let v = separate_by_v(&re("a^+b"), &re("a^+"), &Pseudovariety::A, &AB, Budgets { max_states: 1, max_terms: 20 }).unwrap();
        assert!(matches!(v, SeparationVerdict::Unknown { .. }));
    }

    #[test]
    fn separator_checks() {
        let parity = Dfa::from_parts(AB.to_vec(), 0, vec![true, false], vec![vec![1, 0], vec![0, 1]]);
        assert!(check_separator(&re("(aa)^+"), &re("a(aa)^+ + a"), &parity, &Pseudovariety::G));
        assert!(!check_separator(&re("a(aa)^+ + a"), &re("(aa)^+"), &parity, &Pseudovariety::G));
        let first_a = compile_str_ab("a(a+b)^+ + a");
        assert!(check_separator(&re("a^+b^+"), &re("b^+a^+"), &first_a, &Pseudovariety::A));
        assert!(!check_separator(&re("a^+b^+"), &re("b^+a^+"), &first_a, &Pseudovariety::G));
    }

    #[test]
    fn automaton_counts() {
        // initially connected complete automata with 2 letters: 1, 12, 216
        assert_eq!(connected_automata(&AB, 1).count(), 1);
        assert_eq!(connected_automata(&AB, 2).count(), 12);
        assert_eq!(connected_automata(&AB, 3).count(), 216);
        assert_eq!(permutations(3).len(), 6);
        assert!(permutation_automata(&AB, 2).all(|d| transition_semigroup(&d).semigroup().is_group()));
    }
}
