//! Groups with an exactly computable normal form.
//!
//! Supported: the integers, integer lattices `Z^k`, free groups on `n`
//! generators, explicit finite groups given by a multiplication table, and a
//! uniform grid `step * Z` standing in for the real line. Every law check in
//! this crate compares group elements for exact equality, which is why the
//! supported groups are restricted to these.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest magnitude an integer coordinate may reach before composition is rejected.
pub const INT_LIMIT: i64 = 1 << 60;

/// Default cap on the number of triples returned by [`GroupHandle::sample_triples`].
pub const DEFAULT_TRIPLE_CAP: usize = 20_000;

/// A freely reduced word over signed generator indices (`i` or `-i`, `i >= 1`).
///
/// The list is read as a group product from left to right, so `[1, -2]` is
/// `x1 * x2^-1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<i32>", into = "Vec<i32>")]
pub struct Word(Vec<i32>);

impl Word {
    /// Reduces `letters`; rejects the letter `0`.
    pub fn new(letters: &[i32]) -> Result<Self> {
        if letters.contains(&0) {
            return Err(Error::Spec("generator index 0 in word".into()));
        }
        Ok(Word(reduce(letters)))
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letters(&self) -> &[i32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut buf = self.0.clone();
        for &x in &other.0 {
            if buf.last() == Some(&-x) {
                buf.pop();
            } else {
                buf.push(x);
            }
        }
        Word(buf)
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|x| -x).collect())
    }
}

impl TryFrom<Vec<i32>> for Word {
    type Error = Error;

    fn try_from(v: Vec<i32>) -> Result<Self> {
        Word::new(&v)
    }
}

impl From<Word> for Vec<i32> {
    fn from(w: Word) -> Self {
        w.0
    }
}

/// Free reduction: cancels adjacent `x, -x` pairs until none remain.
pub fn reduce(letters: &[i32]) -> Vec<i32> {
    let mut buf: Vec<i32> = Vec::with_capacity(letters.len());
    for &x in letters {
        if buf.last() == Some(&-x) {
            buf.pop();
        } else {
            buf.push(x);
        }
    }
    buf
}

/// An element of one of the supported groups.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupElement {
    /// Element of `Z`, or grid index `i` standing for `i * step` on a real grid.
    Int(i64),
    /// Element of `Z^k`.
    IntVec(Vec<i64>),
    /// Reduced word in a free group.
    Word(Word),
    /// Row index into a finite multiplication table.
    Finite(usize),
}

impl GroupElement {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            GroupElement::Int(n) => Some(*n),
            _ => None,
        }
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupElement::Int(n) => write!(f, "{n}"),
            GroupElement::IntVec(v) => write!(f, "{v:?}"),
            GroupElement::Word(w) if w.is_empty() => write!(f, "e"),
            GroupElement::Word(w) => {
                let parts: Vec<String> = w
                    .letters()
                    .iter()
                    .map(|&x| if x > 0 { format!("x{x}") } else { format!("x{}^-1", -x) })
                    .collect();
                write!(f, "{}", parts.join("·"))
            }
            GroupElement::Finite(i) => write!(f, "#{i}"),
        }
    }
}

/// Multiplication table of an explicit finite group.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteTable {
    table: Vec<Vec<usize>>,
    inverse: Vec<usize>,
    identity: usize,
    generators: Vec<usize>,
}

impl FiniteTable {
    /// Validates `table` (Latin square, identity, associativity). When
    /// `generators` is `None`, every non-identity element is a generator.
    pub fn new(table: Vec<Vec<usize>>, generators: Option<Vec<usize>>) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::Spec("empty multiplication table".into()));
        }
        for (i, row) in table.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Spec(format!("table row {i} has length {}, expected {n}", row.len())));
            }
            let distinct: BTreeSet<usize> = row.iter().copied().collect();
            if distinct.len() != n || row.iter().any(|&x| x >= n) {
                return Err(Error::Spec(format!("table row {i} is not a permutation")));
            }
        }
        for j in 0..n {
            let col: BTreeSet<usize> = table.iter().map(|row| row[j]).collect();
            if col.len() != n {
                return Err(Error::Spec(format!("table column {j} is not a permutation")));
            }
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|x| table[e][x] == x && table[x][e] == x))
            .ok_or_else(|| Error::Spec("table has no identity element".into()))?;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return Err(Error::Spec(format!("table is not associative at ({a}, {b}, {c})")));
                    }
                }
            }
        }
        let inverse: Vec<usize> = (0..n)
            .map(|a| (0..n).find(|&b| table[a][b] == identity).expect("latin square has inverses"))
            .collect();
        let generators = generators.unwrap_or_else(|| (0..n).filter(|&x| x != identity).collect());
        if let Some(&bad) = generators.iter().find(|&&g| g >= n) {
            return Err(Error::Spec(format!("generator index {bad} out of range for order {n}")));
        }
        Ok(FiniteTable { table, inverse, identity, generators })
    }

    /// Cyclic group of order `n` with generator `1`.
    pub fn cyclic(n: usize) -> Self {
        let table = (0..n).map(|i| (0..n).map(|j| (i + j) % n).collect()).collect();
        FiniteTable::new(table, Some(vec![1 % n])).expect("cyclic table is valid")
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn generators(&self) -> &[usize] {
        &self.generators
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GroupKind {
    Integers,
    Lattice { rank: usize },
    Free { generators: usize },
    Finite(FiniteTable),
    /// `step * Z`, used to sample the real line on a uniform grid.
    RealGrid { step: f64 },
}

#[derive(Debug)]
struct GroupInner {
    kind: GroupKind,
    relations: Vec<Word>,
    finite_words: Option<HashMap<usize, Vec<i32>>>,
}

/// Shared, immutable description of a group and its relation list.
#[derive(Clone, Debug)]
pub struct GroupHandle(Arc<GroupInner>);

impl PartialEq for GroupHandle {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.kind == other.0.kind && self.0.relations == other.0.relations)
    }
}

impl GroupHandle {
    fn build(kind: GroupKind, relations: Vec<Word>) -> Result<Self> {
        let finite_words = match &kind {
            GroupKind::Finite(t) => Some(shortest_words(t)),
            _ => None,
        };
        let handle = GroupHandle(Arc::new(GroupInner { kind, relations, finite_words }));
        handle.validate_relations()?;
        Ok(handle)
    }

    pub fn integers() -> Self {
        GroupHandle::build(GroupKind::Integers, Vec::new()).expect("no relations")
    }

    /// `Z^k` with the commutator relations `[x_i, x_j]`, `i < j`.
    pub fn lattice(rank: usize) -> Result<Self> {
        if rank == 0 {
            return Err(Error::Spec("lattice rank must be positive".into()));
        }
        let mut rel = Vec::new();
        for i in 1..=rank as i32 {
            for j in (i + 1)..=rank as i32 {
                rel.push(Word::new(&[i, j, -i, -j])?);
            }
        }
        GroupHandle::build(GroupKind::Lattice { rank }, rel)
    }

    pub fn free(generators: usize) -> Result<Self> {
        if generators == 0 {
            return Err(Error::Spec("free group needs at least one generator".into()));
        }
        GroupHandle::build(GroupKind::Free { generators }, Vec::new())
    }

    pub fn finite(table: FiniteTable) -> Self {
        GroupHandle::build(GroupKind::Finite(table), Vec::new()).expect("no relations")
    }

    pub fn real_grid(step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::Spec(format!("grid step must be positive and finite, got {step}")));
        }
        GroupHandle::build(GroupKind::RealGrid { step }, Vec::new())
    }

    /// Replaces the relation list. Each relation is a word in signed
    /// generator indices; for finite groups each must evaluate to the identity.
    pub fn with_relations(&self, relations: &[Vec<i32>]) -> Result<Self> {
        let words = relations.iter().map(|r| Word::new(r)).collect::<Result<Vec<_>>>()?;
        GroupHandle::build(self.0.kind.clone(), words)
    }

    fn validate_relations(&self) -> Result<()> {
        let n = self.generator_count() as i32;
        for (idx, rel) in self.0.relations.iter().enumerate() {
            if rel.is_empty() {
                return Err(Error::Spec(format!("relation {idx} is empty")));
            }
            if let Some(&bad) = rel.letters().iter().find(|x| x.abs() > n) {
                return Err(Error::Spec(format!(
                    "relation {idx} references undefined generator {bad} (group has {n})"
                )));
            }
            if matches!(self.0.kind, GroupKind::Finite(_)) {
                let value = self.eval_word(rel.letters())?;
                if value != self.identity() {
                    return Err(Error::Spec(format!("relation {idx} does not evaluate to the identity")));
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> &GroupKind {
        &self.0.kind
    }

    pub fn relations(&self) -> &[Word] {
        &self.0.relations
    }

    /// Grid spacing for a real grid, `None` otherwise.
    pub fn step(&self) -> Option<f64> {
        match self.0.kind {
            GroupKind::RealGrid { step } => Some(step),
            _ => None,
        }
    }

    pub fn is_discrete_line(&self) -> bool {
        matches!(self.0.kind, GroupKind::Integers | GroupKind::RealGrid { .. })
    }

    pub fn identity(&self) -> GroupElement {
        match &self.0.kind {
            GroupKind::Integers | GroupKind::RealGrid { .. } => GroupElement::Int(0),
            GroupKind::Lattice { rank } => GroupElement::IntVec(vec![0; *rank]),
            GroupKind::Free { .. } => GroupElement::Word(Word::empty()),
            GroupKind::Finite(t) => GroupElement::Finite(t.identity),
        }
    }

    pub fn generator_count(&self) -> usize {
        match &self.0.kind {
            GroupKind::Integers | GroupKind::RealGrid { .. } => 1,
            GroupKind::Lattice { rank } => *rank,
            GroupKind::Free { generators } => *generators,
            GroupKind::Finite(t) => t.generators.len(),
        }
    }

    /// The generator `x_i` for `letter = i`, or its inverse for `letter = -i`.
    pub fn generator(&self, letter: i32) -> Result<GroupElement> {
        let n = self.generator_count() as i32;
        if letter == 0 || letter.abs() > n {
            return Err(Error::Spec(format!("undefined generator {letter} (group has {n})")));
        }
        let sign = letter.signum() as i64;
        let i = (letter.unsigned_abs() - 1) as usize;
        Ok(match &self.0.kind {
            GroupKind::Integers | GroupKind::RealGrid { .. } => GroupElement::Int(sign),
            GroupKind::Lattice { rank } => {
                let mut v = vec![0; *rank];
                v[i] = sign;
                GroupElement::IntVec(v)
            }
            GroupKind::Free { .. } => GroupElement::Word(Word(vec![letter])),
            GroupKind::Finite(t) => {
                let g = t.generators[i];
                GroupElement::Finite(if sign > 0 { g } else { t.inverse[g] })
            }
        })
    }

    /// Checks that `g` is an element of this group.
    pub fn check(&self, g: &GroupElement) -> Result<()> {
        let ok = match (&self.0.kind, g) {
            (GroupKind::Integers | GroupKind::RealGrid { .. }, GroupElement::Int(n)) => n.abs() <= INT_LIMIT,
            (GroupKind::Lattice { rank }, GroupElement::IntVec(v)) => {
                v.len() == *rank && v.iter().all(|x| x.abs() <= INT_LIMIT)
            }
            (GroupKind::Free { generators }, GroupElement::Word(w)) => {
                w.letters().iter().all(|x| x.unsigned_abs() as usize <= *generators)
                    && reduce(w.letters()) == w.letters()
            }
            (GroupKind::Finite(t), GroupElement::Finite(i)) => *i < t.order(),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Usage(format!("element {g} does not belong to group {:?}", self.kind_name())))
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.0.kind {
            GroupKind::Integers => "Z",
            GroupKind::Lattice { .. } => "Zk",
            GroupKind::Free { .. } => "free",
            GroupKind::Finite(_) => "finite",
            GroupKind::RealGrid { .. } => "real_grid",
        }
    }

    /// The product `gh`.
    pub fn compose(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        self.check(h)?;
        match (&self.0.kind, g, h) {
            (_, GroupElement::Int(a), GroupElement::Int(b)) => Ok(GroupElement::Int(checked_add(*a, *b)?)),
            (_, GroupElement::IntVec(a), GroupElement::IntVec(b)) => Ok(GroupElement::IntVec(
                a.iter().zip(b).map(|(x, y)| checked_add(*x, *y)).collect::<Result<_>>()?,
            )),
            (_, GroupElement::Word(a), GroupElement::Word(b)) => Ok(GroupElement::Word(a.concat(b))),
            (GroupKind::Finite(t), GroupElement::Finite(a), GroupElement::Finite(b)) => {
                Ok(GroupElement::Finite(t.table[*a][*b]))
            }
            _ => unreachable!("check() rejected mismatched variants"),
        }
    }

    pub fn inverse(&self, g: &GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        Ok(match (&self.0.kind, g) {
            (_, GroupElement::Int(a)) => GroupElement::Int(-a),
            (_, GroupElement::IntVec(a)) => GroupElement::IntVec(a.iter().map(|x| -x).collect()),
            (_, GroupElement::Word(w)) => GroupElement::Word(w.inverse()),
            (GroupKind::Finite(t), GroupElement::Finite(a)) => GroupElement::Finite(t.inverse[*a]),
            _ => unreachable!(),
        })
    }

    /// Evaluates a word of signed generator indices as a group product.
    pub fn eval_word(&self, letters: &[i32]) -> Result<GroupElement> {
        let mut acc = self.identity();
        for &l in letters {
            acc = self.compose(&acc, &self.generator(l)?)?;
        }
        Ok(acc)
    }

    /// A word in signed generator indices whose product is `g`.
    ///
    /// Free-group elements are their own words; lattice elements are written
    /// `x1^a1 ... xk^ak`; finite-group elements use a shortest word found by
    /// breadth-first search over the Cayley graph.
    pub fn word_of(&self, g: &GroupElement) -> Result<Vec<i32>> {
        self.check(g)?;
        let power = |letter: i32, n: i64| -> Vec<i32> {
            let l = if n >= 0 { letter } else { -letter };
            vec![l; n.unsigned_abs() as usize]
        };
        Ok(match g {
            GroupElement::Int(n) => power(1, *n),
            GroupElement::IntVec(v) => v
                .iter()
                .enumerate()
                .flat_map(|(i, &n)| power(i as i32 + 1, n))
                .collect(),
            GroupElement::Word(w) => w.letters().to_vec(),
            GroupElement::Finite(i) => self
                .0
                .finite_words
                .as_ref()
                .and_then(|m| m.get(i).cloned())
                .ok_or_else(|| Error::Spec(format!("element #{i} is not reachable from the generators")))?,
        })
    }

    /// Deterministic verification window of "radius" `radius`.
    ///
    /// Lines and lattices: every element with max-norm at most `radius`.
    /// Free groups: the ball of radius `min(radius, 4)` plus seeded random
    /// reduced words of length up to `radius`. Finite groups: every element.
    pub fn sample_window(&self, radius: usize, seed: u64) -> Vec<GroupElement> {
        let r = radius.max(1) as i64;
        match &self.0.kind {
            GroupKind::Integers | GroupKind::RealGrid { .. } => (-r..=r).map(GroupElement::Int).collect(),
            GroupKind::Lattice { rank } => {
                let mut out = vec![Vec::with_capacity(*rank)];
                for _ in 0..*rank {
                    out = out
                        .into_iter()
                        .flat_map(|prefix: Vec<i64>| {
                            (-r..=r).map(move |x| {
                                let mut p = prefix.clone();
                                p.push(x);
                                p
                            })
                        })
                        .collect();
                }
                out.into_iter().map(GroupElement::IntVec).collect()
            }
            GroupKind::Free { generators } => {
                let n = *generators as i32;
                let exhaustive = radius.clamp(1, 4);
                let mut ball: Vec<Word> = vec![Word::empty()];
                let mut frontier = vec![Word::empty()];
                for _ in 0..exhaustive {
                    let mut next = Vec::new();
                    for w in &frontier {
                        for l in (1..=n).flat_map(|i| [i, -i]) {
                            if w.letters().last() == Some(&-l) {
                                continue;
                            }
                            let mut v = w.0.clone();
                            v.push(l);
                            next.push(Word(v));
                        }
                    }
                    ball.extend(next.iter().cloned());
                    frontier = next;
                }
                if radius > exhaustive {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let mut seen: BTreeSet<Word> = ball.iter().cloned().collect();
                    for _ in 0..16 {
                        let len = rng.gen_range(exhaustive + 1..=radius);
                        let mut v: Vec<i32> = Vec::with_capacity(len);
                        while v.len() < len {
                            let i = rng.gen_range(1..=n);
                            let l = if rng.gen_bool(0.5) { i } else { -i };
                            if v.last() != Some(&-l) {
                                v.push(l);
                            }
                        }
                        let w = Word(v);
                        if seen.insert(w.clone()) {
                            ball.push(w);
                        }
                    }
                }
                ball.into_iter().map(GroupElement::Word).collect()
            }
            GroupKind::Finite(t) => (0..t.order()).map(GroupElement::Finite).collect(),
        }
    }

    /// Triples drawn from `window`: all of them when there are at most
    /// `cap`, otherwise `cap` seeded draws.
    pub fn sample_triples(
        &self,
        window: &[GroupElement],
        cap: usize,
        seed: u64,
    ) -> Vec<[GroupElement; 3]> {
        let n = window.len();
        if n.saturating_pow(3) <= cap {
            let mut out = Vec::with_capacity(n * n * n);
            for g in window {
                for h in window {
                    for k in window {
                        out.push([g.clone(), h.clone(), k.clone()]);
                    }
                }
            }
            out
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
            (0..cap)
                .map(|_| {
                    [
                        window[rng.gen_range(0..n)].clone(),
                        window[rng.gen_range(0..n)].clone(),
                        window[rng.gen_range(0..n)].clone(),
                    ]
                })
                .collect()
        }
    }

    /// Pairs from `window`, exhaustive when at most `cap`.
    pub fn sample_pairs(&self, window: &[GroupElement], cap: usize, seed: u64) -> Vec<[GroupElement; 2]> {
        let n = window.len();
        if n.saturating_pow(2) <= cap {
            window
                .iter()
                .flat_map(|g| window.iter().map(move |h| [g.clone(), h.clone()]))
                .collect()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x2545_f491_4f6c_dd1d);
            (0..cap)
                .map(|_| [window[rng.gen_range(0..n)].clone(), window[rng.gen_range(0..n)].clone()])
                .collect()
        }
    }
}

fn checked_add(a: i64, b: i64) -> Result<i64> {
    let s = a + b; // both bounded by 2^60, cannot overflow i64
    if s.abs() > INT_LIMIT {
        Err(Error::Spec(format!("integer coordinate {a} + {b} exceeds the 2^60 window limit")))
    } else {
        Ok(s)
    }
}

fn shortest_words(t: &FiniteTable) -> HashMap<usize, Vec<i32>> {
    let mut words = HashMap::new();
    words.insert(t.identity, Vec::new());
    let mut queue = VecDeque::from([t.identity]);
    while let Some(cur) = queue.pop_front() {
        let base = words[&cur].clone();
        for (i, &g) in t.generators.iter().enumerate() {
            for (letter, elem) in [(i as i32 + 1, g), (-(i as i32 + 1), t.inverse[g])] {
                let next = t.table[elem][cur];
                if let std::collections::hash_map::Entry::Vacant(e) = words.entry(next) {
                    let mut w = Vec::with_capacity(base.len() + 1);
                    w.push(letter);
                    w.extend_from_slice(&base);
                    e.insert(w);
                    queue.push_back(next);
                }
            }
        }
    }
    words
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: &[i32]) -> GroupElement {
        GroupElement::Word(Word::new(v).unwrap())
    }

    #[test]
    fn integer_compose_and_inverse() {
        let z = GroupHandle::integers();
        assert_eq!(z.compose(&GroupElement::Int(3), &GroupElement::Int(5)).unwrap(), GroupElement::Int(8));
        assert_eq!(z.inverse(&GroupElement::Int(4)).unwrap(), GroupElement::Int(-4));
        assert_eq!(z.inverse(&z.identity()).unwrap(), z.identity());
    }

    #[test]
    fn free_group_cancellation() {
        let f2 = GroupHandle::free(2).unwrap();
        assert_eq!(f2.compose(&w(&[1, -2]), &w(&[2, 1])).unwrap(), w(&[1, 1]));
        assert_eq!(f2.inverse(&w(&[1, 2])).unwrap(), w(&[-2, -1]));
        assert_eq!(f2.inverse(&f2.identity()).unwrap(), f2.identity());
    }

    #[test]
    fn cyclic_table() {
        let c3 = GroupHandle::finite(FiniteTable::cyclic(3));
        assert_eq!(
            c3.compose(&GroupElement::Finite(1), &GroupElement::Finite(2)).unwrap(),
            GroupElement::Finite(0)
        );
        assert_eq!(c3.sample_window(7, 1), (0..3).map(GroupElement::Finite).collect::<Vec<_>>());
    }

    #[test]
    fn variant_mismatch_is_usage_error() {
        let z = GroupHandle::integers();
        let err = z.compose(&GroupElement::Int(1), &GroupElement::Finite(0)).unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
        let f2 = GroupHandle::free(2).unwrap();
        assert!(f2.check(&w(&[3])).is_err());
    }

    #[test]
    fn overflow_is_rejected() {
        let z = GroupHandle::integers();
        let big = GroupElement::Int(INT_LIMIT);
        assert!(matches!(z.compose(&big, &GroupElement::Int(1)), Err(Error::Spec(_))));
    }

    #[test]
    fn windows() {
        let z = GroupHandle::integers();
        assert_eq!(z.sample_window(2, 0), (-2..=2).map(GroupElement::Int).collect::<Vec<_>>());
        let f2 = GroupHandle::free(2).unwrap();
        let ball: BTreeSet<_> = f2.sample_window(1, 0).into_iter().collect();
        let expected: BTreeSet<_> = [w(&[]), w(&[1]), w(&[-1]), w(&[2]), w(&[-2])].into_iter().collect();
        assert_eq!(ball, expected);
        // ball of radius 4 in F_2 has 1 + 4 + 12 + 36 + 108 elements
        assert_eq!(f2.sample_window(4, 0).len(), 161);
        let big = f2.sample_window(7, 3);
        assert!(big.len() > 161);
        assert_eq!(big, f2.sample_window(7, 3));
        let z2 = GroupHandle::lattice(2).unwrap();
        assert_eq!(z2.sample_window(1, 0).len(), 9);
    }

    #[test]
    fn relations_reference_defined_generators() {
        let z2 = GroupHandle::lattice(2).unwrap();
        assert_eq!(z2.relations().len(), 1);
        assert!(matches!(z2.with_relations(&[vec![1, 3]]), Err(Error::Spec(_))));
        let c3 = GroupHandle::finite(FiniteTable::cyclic(3));
        assert!(c3.with_relations(&[vec![1, 1, 1]]).is_ok());
        assert!(c3.with_relations(&[vec![1, 1]]).is_err());
    }

    #[test]
    fn latin_square_validation() {
        assert!(FiniteTable::new(vec![vec![0, 1], vec![0, 1]], None).is_err());
        assert!(FiniteTable::new(vec![vec![0, 1], vec![1, 0]], None).is_ok());
    }

    #[test]
    fn words_evaluate_back() {
        // S3 as permutations of {0,1,2}, composed (a*b)(x) = a(b(x))
        let perms: Vec<[usize; 3]> =
            vec![[0, 1, 2], [1, 0, 2], [0, 2, 1], [2, 1, 0], [1, 2, 0], [2, 0, 1]];
        let idx = |p: [usize; 3]| perms.iter().position(|q| *q == p).unwrap();
        let table: Vec<Vec<usize>> = perms
            .iter()
            .map(|a| perms.iter().map(|b| idx([a[b[0]], a[b[1]], a[b[2]]])).collect())
            .collect();
        let s3 = GroupHandle::finite(FiniteTable::new(table, Some(vec![1, 2])).unwrap());
        for g in s3.sample_window(1, 0) {
            let word = s3.word_of(&g).unwrap();
            assert_eq!(s3.eval_word(&word).unwrap(), g);
        }
        let z3 = GroupHandle::lattice(3).unwrap();
        let v = GroupElement::IntVec(vec![2, -1, 3]);
        assert_eq!(z3.eval_word(&z3.word_of(&v).unwrap()).unwrap(), v);
    }

    #[test]
    fn triples_exhaustive_or_capped() {
        let z = GroupHandle::integers();
        let win = z.sample_window(2, 0);
        assert_eq!(z.sample_triples(&win, DEFAULT_TRIPLE_CAP, 0).len(), 125);
        let capped = z.sample_triples(&win, 50, 9);
        assert_eq!(capped.len(), 50);
        assert_eq!(capped, z.sample_triples(&win, 50, 9));
    }
}
