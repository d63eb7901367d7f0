//! Strategies shared by the property tests.
#![allow(dead_code)]

use profinite::kappa::{canonicalize, Exponent, KappaTerm, RawTerm};
use profinite::rational::{Dfa, RegexAst};
use proptest::prelude::*;

pub const AB: [char; 2] = ['a', 'b'];

/// Star-free regexes over `letters` with at most a dozen nodes.
pub fn regex_over(letters: &'static [char]) -> impl Strategy<Value = RegexAst> {
    let leaf = prop::sample::select(letters.to_vec()).prop_map(RegexAst::letter);
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(l, r)| RegexAst::union(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| RegexAst::concat(l, r)),
            inner.prop_map(RegexAst::plus),
        ]
    })
}

fn raw_term(depth: u32) -> BoxedStrategy<RawTerm> {
    let leaf = "[ab]{1,3}".prop_map(|w| RawTerm::word(&w)).boxed();
    if depth == 0 {
        return leaf;
    }
    let inner = raw_term(depth - 1);
    prop_oneof![
        3 => leaf,
        2 => (raw_term(depth - 1), raw_term(depth - 1)).prop_map(|(l, r)| RawTerm::Concat(vec![l, r])),
        2 => (inner, -3i64..=3).prop_map(|(b, n)| RawTerm::power(b, Exponent::OmegaPlus(n))),
    ]
    .boxed()
}

/// Canonical terms over `{a, b}` with bounded size and rank.
pub fn term(max_nodes: usize, max_rank: usize) -> impl Strategy<Value = KappaTerm> {
    raw_term(max_rank as u32 + 1).prop_filter_map("too large", move |raw| {
        let t = canonicalize(&raw).ok()?;
        (raw.nodes() <= max_nodes && t.rank() <= max_rank).then_some(t)
    })
}

/// Complete automata over `{a, b}` with up to `max_states` states.
pub fn dfa(max_states: usize) -> impl Strategy<Value = Dfa> {
    (1..=max_states).prop_flat_map(|n| {
        (prop::collection::vec(any::<bool>(), n), prop::collection::vec(prop::collection::vec(0..n, 2), n))
            .prop_map(|(finals, trans)| Dfa::from_parts(AB.to_vec(), 0, finals, trans))
    })
}

/// Every word over `letters` of length `1..=max_len`.
pub fn words(letters: &[char], max_len: usize) -> Vec<String> {
    let mut out = vec![];
    let mut layer = vec![String::new()];
    for _ in 0..max_len {
        layer = layer.iter().flat_map(|w| letters.iter().map(move |c| format!("{w}{c}"))).collect();
        out.extend(layer.iter().cloned());
    }
    out
}
