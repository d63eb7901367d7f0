//! Finite semigroups given by multiplication tables, morphisms from the free
//! semigroup, ω-power arithmetic and pseudovariety predicates.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::kappa::{Exponent, KappaTerm};
use crate::rational::Dfa;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SemigroupError {
    #[error("table is empty")]
    Empty,
    #[error("row {row} has {len} entries, expected {size}")]
    Ragged { row: usize, len: usize, size: usize },
    #[error("entry {value} at ({row},{col}) is out of range")]
    OutOfRange { row: usize, col: usize, value: usize },
    #[error("multiplication is not associative at ({0},{1},{2})")]
    NotAssociative(usize, usize, usize),
    #[error("element {0} is not a two-sided identity")]
    BadIdentity(usize),
    #[error("letter {0:?} is not in the alphabet")]
    UnknownLetter(char),
    #[error("empty word has no image in a semigroup")]
    EmptyWord,
    #[error("morphism expects {expected} images, got {got}")]
    ImageCount { expected: usize, got: usize },
    #[error("image {0} is not an element of the target")]
    BadImage(usize),
    #[error("custom pseudoidentity check over {vars} variables and {size} elements exceeds the budget")]
    BudgetExceeded { vars: usize, size: usize },
    #[error("table file: {0}")]
    Format(String),
}

/// A finite semigroup on elements `0..size`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FiniteSemigroup {
    size: usize,
    table: Vec<usize>,
    identity: Option<usize>,
}

/// Returns true iff the table is associative. Entries must be in range.
pub fn check_associative(table: &[Vec<usize>]) -> bool {
    find_non_associative(table).is_none()
}

fn find_non_associative(table: &[Vec<usize>]) -> Option<(usize, usize, usize)> {
    let m = table.len();
    for i in 0..m {
        for j in 0..m {
            let ij = table[i][j];
            for k in 0..m {
                if table[ij][k] != table[i][table[j][k]] {
                    return Some((i, j, k));
                }
            }
        }
    }
    None
}

impl FiniteSemigroup {
    pub fn new(rows: Vec<Vec<usize>>, identity: Option<usize>) -> Result<Self, SemigroupError> {
        let size = rows.len();
        if size == 0 {
            return Err(SemigroupError::Empty);
        }
        for (row, r) in rows.iter().enumerate() {
            if r.len() != size {
                return Err(SemigroupError::Ragged { row, len: r.len(), size });
            }
            if let Some((col, &value)) = r.iter().enumerate().find(|(_, &v)| v >= size) {
                return Err(SemigroupError::OutOfRange { row, col, value });
            }
        }
        if let Some((i, j, k)) = find_non_associative(&rows) {
            return Err(SemigroupError::NotAssociative(i, j, k));
        }
        if let Some(e) = identity {
            if e >= size || (0..size).any(|s| rows[e][s] != s || rows[s][e] != s) {
                return Err(SemigroupError::BadIdentity(e));
            }
        }
        Ok(Self { size, table: rows.into_iter().flatten().collect(), identity })
    }

    /// Builds the semigroup from a closure; the caller guarantees associativity.
    pub(crate) fn from_fn_unchecked(
        size: usize,
        identity: Option<usize>,
        mul: impl Fn(usize, usize) -> usize,
    ) -> Self {
        let mut table = Vec::with_capacity(size * size);
        for i in 0..size {
            for j in 0..size {
                table.push(mul(i, j));
            }
        }
        Self { size, table, identity }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn identity(&self) -> Option<usize> {
        self.identity
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.size + b]
    }

    pub fn rows(&self) -> Vec<Vec<usize>> {
        self.table.chunks(self.size).map(|r| r.to_vec()).collect()
    }

    /// Returns `S¹` with a fresh identity appended as the last element, even if
    /// `S` already has one.
    pub fn with_adjoined_identity(&self) -> Self {
        let one = self.size;
        Self::from_fn_unchecked(self.size + 1, Some(one), |a, b| {
            if a == one {
                b
            } else if b == one {
                a
            } else {
                self.mul(a, b)
            }
        })
    }

    /// Smallest `(i, p)` with `s^{i+p} = s^i`.
    pub fn index_period(&self, s: usize) -> (usize, usize) {
        // first_seen[x] = k such that s^k = x was first reached
        let mut first_seen = vec![0usize; self.size];
        let mut cur = s;
        let mut k = 1;
        loop {
            if first_seen[cur] != 0 {
                let i = first_seen[cur];
                return (i, k - i);
            }
            first_seen[cur] = k;
            cur = self.mul(cur, s);
            k += 1;
        }
    }

    /// `s^k` for `k ≥ 1`, reduced through the index and period of `s`.
    pub fn pow(&self, s: usize, k: u64) -> usize {
        assert!(k >= 1, "semigroup powers start at 1");
        let (i, p) = self.index_period(s);
        let (i, p) = (i as u64, p as u64);
        let k = if k >= i + p { i + (k - i) % p } else { k };
        let mut acc = s;
        for _ in 1..k {
            acc = self.mul(acc, s);
        }
        acc
    }

    /// The exponent `e + (n mod p)` realising `s^{ω+n}`, where `e` is the least
    /// multiple of the period that is at least the index.
    pub fn omega_exponent(&self, s: usize, n: i64) -> u64 {
        let (i, p) = self.index_period(s);
        let (i, p) = (i as u64, p as u64);
        let e = i.div_ceil(p) * p;
        e + n.rem_euclid(p as i64) as u64
    }

    pub fn power(&self, s: usize, alpha: &Exponent) -> usize {
        match *alpha {
            Exponent::Finite(k) => self.pow(s, k),
            Exponent::OmegaPlus(n) => self.pow(s, self.omega_exponent(s, n)),
        }
    }

    pub fn omega(&self, s: usize) -> usize {
        self.power(s, &Exponent::OmegaPlus(0))
    }

    pub fn is_idempotent(&self, s: usize) -> bool {
        self.mul(s, s) == s
    }

    /// Largest index and lcm of the periods over all elements.
    pub fn exponent_bounds(&self) -> (usize, usize) {
        let mut max_index = 1;
        let mut lcm = 1;
        for s in 0..self.size {
            let (i, p) = self.index_period(s);
            max_index = max_index.max(i);
            lcm = lcm / gcd(lcm, p) * p;
        }
        (max_index, lcm)
    }

    pub fn is_group(&self) -> bool {
        let idem: Vec<usize> = (0..self.size).filter(|&s| self.is_idempotent(s)).collect();
        match idem.as_slice() {
            [e] => (0..self.size).all(|s| self.mul(*e, s) == s && self.mul(s, *e) == s),
            _ => false,
        }
    }

    pub fn member(&self, p: &Pseudovariety) -> Result<bool, SemigroupError> {
        Ok(match p {
            Pseudovariety::S => true,
            Pseudovariety::A => (0..self.size).all(|s| self.index_period(s).1 == 1),
            Pseudovariety::G => self.is_group(),
            Pseudovariety::Bn(n) => (0..self.size).all(|s| *n as usize % self.index_period(s).1 == 0),
            Pseudovariety::Custom(ids) => self.satisfies_all(ids)?,
        })
    }

    fn satisfies_all(&self, ids: &[(KappaTerm, KappaTerm)]) -> Result<bool, SemigroupError> {
        let vars: BTreeSet<char> = ids.iter().flat_map(|(l, r)| l.letters().into_iter().chain(r.letters())).collect();
        let vars: Vec<char> = vars.into_iter().collect();
        if vars.len() > 3 && self.size > 6 {
            return Err(SemigroupError::BudgetExceeded { vars: vars.len(), size: self.size });
        }
        let mut images = vec![0usize; vars.len()];
        loop {
            let phi = SemigroupMorphism::new(vars.clone(), self.clone(), images.clone())?;
            for (l, r) in ids {
                if l.eval(&phi) != r.eval(&phi) {
                    return Ok(false);
                }
            }
            // odometer over all assignments
            let mut pos = 0;
            loop {
                if pos == images.len() {
                    return Ok(true);
                }
                images[pos] += 1;
                if images[pos] < self.size {
                    break;
                }
                images[pos] = 0;
                pos += 1;
            }
        }
    }

    /// Parses the table file format: a line with `m`, then `m` rows of `m`
    /// indices, then optionally `identity <i>`.
    pub fn parse_table(text: &str) -> Result<Self, SemigroupError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let bad = |msg: &str| SemigroupError::Format(msg.to_string());
        let m: usize = lines
            .next()
            .ok_or_else(|| bad("missing size line"))?
            .parse()
            .map_err(|_| bad("size line is not an integer"))?;
        let mut rows = Vec::with_capacity(m);
        for r in 0..m {
            let line = lines.next().ok_or_else(|| SemigroupError::Format(format!("missing row {r}")))?;
            let row = line
                .split_whitespace()
                .map(|x| x.parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| SemigroupError::Format(format!("row {r} has a non-integer entry")))?;
            rows.push(row);
        }
        let mut identity = None;
        if let Some(line) = lines.next() {
            let rest = line.strip_prefix("identity").ok_or_else(|| bad("expected `identity <i>`"))?;
            identity = Some(rest.trim().parse().map_err(|_| bad("identity is not an integer"))?);
        }
        if lines.next().is_some() {
            return Err(bad("trailing lines"));
        }
        Self::new(rows, identity)
    }

    pub fn to_table_string(&self) -> String {
        let mut out = format!("{}\n", self.size);
        for row in self.table.chunks(self.size) {
            let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        if let Some(e) = self.identity {
            out.push_str(&format!("identity {e}\n"));
        }
        out
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Pseudovarieties with a decidable membership test on tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pseudovariety {
    S,
    A,
    G,
    /// Defined by `x^{ω+n} = x^ω`.
    Bn(u32),
    /// Defined by κ-term pseudoidentities; letters act as variables.
    Custom(Vec<(KappaTerm, KappaTerm)>),
}

impl fmt::Display for Pseudovariety {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pseudovariety::S => write!(f, "S"),
            Pseudovariety::A => write!(f, "A"),
            Pseudovariety::G => write!(f, "G"),
            Pseudovariety::Bn(n) => write!(f, "Bn:{n}"),
            Pseudovariety::Custom(ids) => {
                let parts: Vec<String> = ids.iter().map(|(l, r)| format!("{l} = {r}")).collect();
                write!(f, "[{}]", parts.join(", "))
            }
        }
    }
}

/// A morphism `X⁺ → S` given by the images of the letters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemigroupMorphism {
    alphabet: Vec<char>,
    target: FiniteSemigroup,
    images: Vec<usize>,
}

impl SemigroupMorphism {
    pub fn new(alphabet: Vec<char>, target: FiniteSemigroup, images: Vec<usize>) -> Result<Self, SemigroupError> {
        if alphabet.len() != images.len() {
            return Err(SemigroupError::ImageCount { expected: alphabet.len(), got: images.len() });
        }
        if let Some(&bad) = images.iter().find(|&&s| s >= target.size()) {
            return Err(SemigroupError::BadImage(bad));
        }
        Ok(Self { alphabet, target, images })
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    pub fn target(&self) -> &FiniteSemigroup {
        &self.target
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn image(&self, letter: char) -> Result<usize, SemigroupError> {
        self.alphabet
            .iter()
            .position(|&c| c == letter)
            .map(|i| self.images[i])
            .ok_or(SemigroupError::UnknownLetter(letter))
    }

    pub fn eval_word(&self, w: &str) -> Result<usize, SemigroupError> {
        let mut chars = w.chars();
        let first = chars.next().ok_or(SemigroupError::EmptyWord)?;
        let mut acc = self.image(first)?;
        for c in chars {
            acc = self.target.mul(acc, self.image(c)?);
        }
        Ok(acc)
    }

    /// Like [`eval_word`](Self::eval_word) but maps the empty word to the
    /// identity when the target has one.
    pub fn eval_word_monoid(&self, w: &str) -> Result<usize, SemigroupError> {
        if w.is_empty() {
            return self.target.identity().ok_or(SemigroupError::EmptyWord);
        }
        self.eval_word(w)
    }

    /// `φ(L(A))`, by reachability in the product of `A` with the right Cayley
    /// graph of the target.
    pub fn image_of_rational(&self, dfa: &Dfa) -> Result<BTreeSet<usize>, SemigroupError> {
        let letter_images: Vec<usize> =
            dfa.alphabet().iter().map(|&c| self.image(c)).collect::<Result<_, _>>()?;
        let m = self.target.size();
        let mut seen = vec![false; dfa.num_states() * m];
        let mut queue = VecDeque::new();
        for (li, &img) in letter_images.iter().enumerate() {
            let q = dfa.next(dfa.initial(), li);
            if !seen[q * m + img] {
                seen[q * m + img] = true;
                queue.push_back((q, img));
            }
        }
        let mut out = BTreeSet::new();
        while let Some((q, s)) = queue.pop_front() {
            if dfa.is_final(q) {
                out.insert(s);
            }
            for (li, &img) in letter_images.iter().enumerate() {
                let (q2, s2) = (dfa.next(q, li), self.target.mul(s, img));
                if !seen[q2 * m + s2] {
                    seen[q2 * m + s2] = true;
                    queue.push_back((q2, s2));
                }
            }
        }
        Ok(out)
    }
}

/// Built-in semigroups used for refutation searches and oracles.
pub mod catalog {
    use super::FiniteSemigroup;

    /// Cyclic group `ℤ/n`.
    pub fn cyclic_group(n: usize) -> FiniteSemigroup {
        FiniteSemigroup::from_fn_unchecked(n, Some(0), |a, b| (a + b) % n)
    }

    /// Monogenic semigroup `⟨g : g^{i+p} = g^i⟩`; element `k` stands for `g^{k+1}`.
    pub fn monogenic(index: usize, period: usize) -> FiniteSemigroup {
        assert!(index >= 1 && period >= 1);
        let size = index + period - 1;
        let reduce = |e: usize| if e > size { index + (e - index) % period } else { e };
        let identity = if index == 1 {
            // g^p is the identity of the cyclic group
            Some(period - 1)
        } else {
            None
        };
        FiniteSemigroup::from_fn_unchecked(size, identity, |a, b| reduce(a + b + 2) - 1)
    }

    /// Klein four-group.
    pub fn klein() -> FiniteSemigroup {
        FiniteSemigroup::from_fn_unchecked(4, Some(0), |a, b| a ^ b)
    }

    /// Symmetric group on three points; element 0 is the identity.
    pub fn symmetric3() -> FiniteSemigroup {
        permutation_group(&all_permutations(3))
    }

    /// Symmetric group on four points.
    pub fn symmetric4() -> FiniteSemigroup {
        permutation_group(&all_permutations(4))
    }

    /// The group generated by the given permutations (listed completely).
    fn permutation_group(perms: &[Vec<usize>]) -> FiniteSemigroup {
        let idx = |p: &Vec<usize>| perms.iter().position(|q| q == p).expect("closed under composition");
        FiniteSemigroup::from_fn_unchecked(perms.len(), Some(0), |a, b| {
            // apply a then b
            let c: Vec<usize> = (0..perms[a].len()).map(|x| perms[b][perms[a][x]]).collect();
            idx(&c)
        })
    }

    fn all_permutations(n: usize) -> Vec<Vec<usize>> {
        let mut out = vec![];
        let mut cur: Vec<usize> = (0..n).collect();
        permute(&mut cur, 0, &mut out);
        out.sort();
        out
    }

    fn permute(cur: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
        if k == cur.len() {
            out.push(cur.clone());
            return;
        }
        for i in k..cur.len() {
            cur.swap(k, i);
            permute(cur, k + 1, out);
            cur.swap(k, i);
        }
    }

    pub fn left_zero(n: usize) -> FiniteSemigroup {
        FiniteSemigroup::from_fn_unchecked(n, None, |a, _| a)
    }

    pub fn right_zero(n: usize) -> FiniteSemigroup {
        FiniteSemigroup::from_fn_unchecked(n, None, |_, b| b)
    }

    /// `{s, 0}` with `s² = 0`; `s` is element 0.
    pub fn nil2() -> FiniteSemigroup {
        FiniteSemigroup::from_fn_unchecked(2, None, |_, _| 1)
    }

    /// Two-element semilattice `{1, 0}`.
    pub fn u1() -> FiniteSemigroup {
        FiniteSemigroup::from_fn_unchecked(2, Some(0), |a, b| a.max(b))
    }

    /// Brandt semigroup `B2 = {a, b, ab, ba, 0}` (elements 0..5 in that order).
    pub fn brandt2() -> FiniteSemigroup {
        // matrix units e12=a, e21=b, e11=ab, e22=ba, and zero
        let unit = [(1, 2), (2, 1), (1, 1), (2, 2)];
        FiniteSemigroup::from_fn_unchecked(5, None, |x, y| {
            if x == 4 || y == 4 {
                return 4;
            }
            let ((i, j), (k, l)) = (unit[x], unit[y]);
            if j != k {
                4
            } else {
                unit.iter().position(|&u| u == (i, l)).unwrap()
            }
        })
    }

    /// The full transformation monoid on three points (27 elements).
    pub fn full_transformations3() -> FiniteSemigroup {
        let maps: Vec<[usize; 3]> =
            (0..27).map(|c| [c % 3, (c / 3) % 3, c / 9]).collect();
        let identity = maps.iter().position(|m| *m == [0, 1, 2]);
        FiniteSemigroup::from_fn_unchecked(27, identity, |a, b| {
            let c = [maps[b][maps[a][0]], maps[b][maps[a][1]], maps[b][maps[a][2]]];
            maps.iter().position(|m| *m == c).unwrap()
        })
    }

    /// All groups of order at most 6, up to isomorphism.
    pub fn small_groups() -> Vec<(String, FiniteSemigroup)> {
        let mut out: Vec<(String, FiniteSemigroup)> =
            (1..=6).map(|n| (format!("C{n}"), cyclic_group(n))).collect();
        out.push(("K4".into(), klein()));
        out.push(("S3".into(), symmetric3()));
        out
    }

    /// The default refutation catalog: small groups, monogenic semigroups with
    /// index and period at most 6 (with and without an adjoined identity), and
    /// a handful of classical aperiodic semigroups.
    pub fn standard() -> Vec<(String, FiniteSemigroup)> {
        let mut out = small_groups();
        for i in 1..=6 {
            for p in 1..=6 {
                if i == 1 {
                    continue; // cyclic groups are already present
                }
                out.push((format!("M{i},{p}"), monogenic(i, p)));
            }
        }
        out.push(("L2".into(), left_zero(2)));
        out.push(("R2".into(), right_zero(2)));
        out.push(("N2".into(), nil2()));
        out.push(("U1".into(), u1()));
        out.push(("B2".into(), brandt2()));
        out.push(("B2^1".into(), brandt2().with_adjoined_identity()));
        out.push(("L2^1".into(), left_zero(2).with_adjoined_identity()));
        out.push(("R2^1".into(), right_zero(2).with_adjoined_identity()));
        for i in 2..=8 {
            out.push((format!("M{i},1^1"), monogenic(i, 1).with_adjoined_identity()));
        }
        for (i, p) in [(2, 2), (2, 3), (3, 2)] {
            out.push((format!("M{i},{p}^1"), monogenic(i, p).with_adjoined_identity()));
        }
        out
    }
}
