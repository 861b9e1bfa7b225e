//! Finite bands as validated Cayley tables, plus subband generation, maps
//! between bands, and the free band on two generators.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Errors raised while validating or constructing a band table.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BandError {
    /// The table references an element outside `0..n`.
    #[error("IndexOutOfRange(row {row}, col {col})")]
    IndexOutOfRange { row: usize, col: usize },
    /// `e * e != e` for the given element.
    #[error("NotIdempotent({0})")]
    NotIdempotent(usize),
    /// `(a*b)*c != a*(b*c)` for the given triple.
    #[error("NotAssociative({0}, {1}, {2})")]
    NotAssociative(usize, usize, usize),
    /// Bands are non-empty by convention.
    #[error("band must have at least one element")]
    Empty,
    /// A row of the table has the wrong length.
    #[error("row {row} has {len} entries, expected {expected}")]
    RowLength { row: usize, len: usize, expected: usize },
    /// Label vector length does not match the order.
    #[error("expected {expected} labels, got {got}")]
    LabelCount { expected: usize, got: usize },
    /// An element index passed to an operation is out of range.
    #[error("element {0} out of range for band of order {1}")]
    ElementOutOfRange(usize, usize),
}

/// A finite band: a set `{0, .., n-1}` with an idempotent associative
/// multiplication given by a full Cayley table.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FiniteBand {
    n: usize,
    /// Row-major `n * n` table; entry `a*n + b` is the product `ab`.
    table: Vec<usize>,
    labels: Option<Vec<String>>,
}

impl fmt::Debug for FiniteBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FiniteBand(n={}, table=[", self.n)?;
        for a in 0..self.n {
            if a > 0 {
                write!(f, "; ")?;
            }
            for b in 0..self.n {
                if b > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self.mul(a, b))?;
            }
        }
        write!(f, "])")
    }
}

impl FiniteBand {
    /// Validate a square table as a band: every entry in range, every element
    /// idempotent, multiplication associative.
    ///
    /// Failures are reported smallest-first: the range check scans row-major,
    /// idempotency by element, associativity by lexicographic triple.
    pub fn validate_table(rows: &[Vec<usize>]) -> Result<Self, BandError> {
        let n = rows.len();
        if n == 0 {
            return Err(BandError::Empty);
        }
        let mut table = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(BandError::RowLength { row: i, len: row.len(), expected: n });
            }
            table.extend_from_slice(row);
        }
        Self::from_flat(n, table)
    }

    /// Validate a flat row-major table (see [`FiniteBand::validate_table`]).
    pub fn from_flat(n: usize, table: Vec<usize>) -> Result<Self, BandError> {
        if n == 0 {
            return Err(BandError::Empty);
        }
        assert_eq!(table.len(), n * n, "flat table must have n*n entries");
        for a in 0..n {
            for b in 0..n {
                if table[a * n + b] >= n {
                    return Err(BandError::IndexOutOfRange { row: a, col: b });
                }
            }
        }
        for e in 0..n {
            if table[e * n + e] != e {
                return Err(BandError::NotIdempotent(e));
            }
        }
        for a in 0..n {
            for b in 0..n {
                let ab = table[a * n + b];
                for c in 0..n {
                    if table[ab * n + c] != table[a * n + table[b * n + c]] {
                        return Err(BandError::NotAssociative(a, b, c));
                    }
                }
            }
        }
        Ok(FiniteBand { n, table, labels: None })
    }

    /// Build a band from a flat table without validation.
    ///
    /// Intended for hot paths that construct tables already known to be
    /// associative and idempotent, and for fault-injection in tests. All
    /// other invariants of this crate assume the table is a genuine band.
    pub fn from_flat_unchecked(n: usize, table: Vec<usize>) -> Self {
        assert_eq!(table.len(), n * n, "flat table must have n*n entries");
        FiniteBand { n, table, labels: None }
    }

    /// Number of elements.
    pub fn order(&self) -> usize {
        self.n
    }

    /// The product `ab`.
    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        debug_assert!(a < self.n && b < self.n);
        self.table[a * self.n + b]
    }

    /// Flat row-major table.
    pub fn flat_table(&self) -> &[usize] {
        &self.table
    }

    /// The table as rows.
    pub fn rows(&self) -> Vec<Vec<usize>> {
        (0..self.n).map(|a| self.table[a * self.n..(a + 1) * self.n].to_vec()).collect()
    }

    /// Attach cosmetic element labels.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, BandError> {
        if labels.len() != self.n {
            return Err(BandError::LabelCount { expected: self.n, got: labels.len() });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Element labels, if any were attached.
    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Label of one element (its index rendered as text when unlabelled).
    pub fn label(&self, e: usize) -> String {
        match &self.labels {
            Some(ls) => ls[e].clone(),
            None => e.to_string(),
        }
    }

    /// Is the multiplication commutative? Commutative bands are exactly the
    /// semilattices (`xy` is then the meet of `x` and `y`).
    pub fn is_commutative(&self) -> bool {
        (0..self.n).all(|a| (a + 1..self.n).all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    /// `e <= f` in the natural partial order: `ef = fe = e`.
    #[inline]
    pub fn natural_leq(&self, e: usize, f: usize) -> bool {
        self.mul(e, f) == e && self.mul(f, e) == e
    }

    /// Relabel elements by a permutation: element `e` becomes `perm[e]`.
    pub fn relabel(&self, perm: &[usize]) -> FiniteBand {
        assert_eq!(perm.len(), self.n);
        let mut table = vec![0; self.n * self.n];
        for a in 0..self.n {
            for b in 0..self.n {
                table[perm[a] * self.n + perm[b]] = perm[self.mul(a, b)];
            }
        }
        let labels = self.labels.as_ref().map(|ls| {
            let mut out = vec![String::new(); self.n];
            for e in 0..self.n {
                out[perm[e]] = ls[e].clone();
            }
            out
        });
        FiniteBand { n: self.n, table, labels }
    }

    /// The sub-table induced on a subband, relabelled to `0..k` in the order
    /// given by `members`. Panics if `members` is not closed.
    pub fn restrict(&self, members: &[usize]) -> FiniteBand {
        let mut index = vec![usize::MAX; self.n];
        for (i, &e) in members.iter().enumerate() {
            index[e] = i;
        }
        let k = members.len();
        let mut table = vec![0; k * k];
        for (i, &a) in members.iter().enumerate() {
            for (j, &b) in members.iter().enumerate() {
                let p = index[self.mul(a, b)];
                assert!(p != usize::MAX, "restricting to a set that is not closed");
                table[i * k + j] = p;
            }
        }
        let labels = members.iter().map(|&e| self.label(e)).collect();
        FiniteBand { n: k, table, labels: Some(labels) }
    }
}

/// An ordered, duplicate-free set of element indices of some band.
///
/// Closure operations fix the order by discovery, so equal inputs always
/// produce identical output order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElementSet {
    members: Vec<usize>,
}

impl ElementSet {
    /// Build from an iterator, keeping the first occurrence of each element.
    pub fn new<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut seen = BTreeSet::new();
        let mut members = Vec::new();
        for e in iter {
            if seen.insert(e) {
                members.push(e);
            }
        }
        ElementSet { members }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, e: usize) -> bool {
        self.members.contains(&e)
    }

    /// Members in ascending order.
    pub fn sorted(&self) -> Vec<usize> {
        let mut v = self.members.clone();
        v.sort_unstable();
        v
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }
}

impl FromIterator<usize> for ElementSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        ElementSet::new(iter)
    }
}

/// A function between two bands, given element-wise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandMap {
    pub source: FiniteBand,
    pub target: FiniteBand,
    /// `map[e]` is the image of source element `e`.
    pub map: Vec<usize>,
}

impl BandMap {
    pub fn new(source: FiniteBand, target: FiniteBand, map: Vec<usize>) -> Result<Self, BandError> {
        if map.len() != source.order() {
            return Err(BandError::LabelCount { expected: source.order(), got: map.len() });
        }
        if let Some(&bad) = map.iter().find(|&&t| t >= target.order()) {
            return Err(BandError::ElementOutOfRange(bad, target.order()));
        }
        Ok(BandMap { source, target, map })
    }

    pub fn apply(&self, e: usize) -> usize {
        self.map[e]
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = vec![false; self.target.order()];
        self.map.iter().all(|&t| !std::mem::replace(&mut seen[t], true))
    }

    pub fn is_surjective(&self) -> bool {
        let mut seen = vec![false; self.target.order()];
        for &t in &self.map {
            seen[t] = true;
        }
        seen.into_iter().all(|s| s)
    }

    pub fn is_bijective(&self) -> bool {
        self.source.order() == self.target.order() && self.is_injective()
    }
}

/// Does `f` respect multiplication on every pair, `f(xy) = f(x)f(y)`?
pub fn is_morphism(f: &BandMap) -> bool {
    let n = f.source.order();
    (0..n).all(|x| {
        (0..n).all(|y| f.map[f.source.mul(x, y)] == f.target.mul(f.map[x], f.map[y]))
    })
}

/// Closure of `generators` under multiplication, in discovery order: the
/// generators first (first occurrence kept), then products as a worklist
/// finds them.
pub fn generate_subband(band: &FiniteBand, generators: &ElementSet) -> ElementSet {
    let n = band.order();
    let mut in_set = vec![false; n];
    let mut members: Vec<usize> = Vec::new();
    for e in generators.iter() {
        assert!(e < n, "generator out of range");
        if !in_set[e] {
            in_set[e] = true;
            members.push(e);
        }
    }
    // Worklist over pairs of already-discovered elements; each pass scans the
    // full square so products of late discoveries with early ones are found
    // in a deterministic order.
    let mut frontier = 0;
    while frontier < members.len() {
        let upto = members.len();
        for i in 0..upto {
            for j in 0..upto {
                if i < frontier && j < frontier {
                    continue; // pair already scanned in an earlier pass
                }
                let p = band.mul(members[i], members[j]);
                if !in_set[p] {
                    in_set[p] = true;
                    members.push(p);
                }
            }
        }
        frontier = upto;
    }
    ElementSet { members }
}

/// Every subband of `band`, each as a discovery-ordered [`ElementSet`],
/// returned sorted by (size, ascending member list).
///
/// Works by closure extension: every subband arises from a chain of
/// one-element enlargements inside itself, so growing each known subband by
/// one element and closing reaches all of them.
pub fn all_subbands(band: &FiniteBand) -> Vec<ElementSet> {
    let n = band.order();
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut queue: Vec<Vec<usize>> = Vec::new();
    for e in 0..n {
        let c = generate_subband(band, &ElementSet::new([e])).sorted();
        if seen.insert(c.clone()) {
            queue.push(c);
        }
    }
    let mut idx = 0;
    while idx < queue.len() {
        let base = queue[idx].clone();
        idx += 1;
        for x in 0..n {
            if base.contains(&x) {
                continue;
            }
            let mut gens: Vec<usize> = base.clone();
            gens.push(x);
            let c = generate_subband(band, &ElementSet::new(gens)).sorted();
            if seen.insert(c.clone()) {
                queue.push(c);
            }
        }
    }
    let mut out: Vec<Vec<usize>> = seen.into_iter().collect();
    out.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
    out.into_iter().map(ElementSet::new).collect()
}

/// Reduce a word over a finite alphabet to its square-free normal form by
/// repeatedly deleting one half of the leftmost shortest square `ww`.
///
/// In a band every word equals its reduction, and over two letters the
/// square-free words are exactly `a, b, ab, ba, aba, bab`.
fn reduce_word(word: &mut Vec<u8>) {
    'outer: loop {
        let len = word.len();
        for half in 1..=len / 2 {
            for start in 0..=len - 2 * half {
                if word[start..start + half] == word[start + half..start + 2 * half] {
                    word.drain(start..start + half);
                    continue 'outer;
                }
            }
        }
        return;
    }
}

/// The free band on two generators, built by closing `{a, b}` under
/// concatenate-and-reduce multiplication of words.
///
/// Elements are labelled by their normal forms; discovery order puts the
/// generators first, so `a = 0` and `b = 1`.
pub fn free_band_two() -> FiniteBand {
    let mut words: Vec<Vec<u8>> = vec![vec![0], vec![1]];
    let mut frontier = 0;
    while frontier < words.len() {
        let upto = words.len();
        for i in 0..upto {
            for j in 0..upto {
                if i < frontier && j < frontier {
                    continue;
                }
                let mut w = words[i].clone();
                w.extend_from_slice(&words[j]);
                reduce_word(&mut w);
                if !words.contains(&w) {
                    words.push(w);
                }
            }
        }
        frontier = upto;
    }
    let n = words.len();
    let mut table = vec![0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut w = words[i].clone();
            w.extend_from_slice(&words[j]);
            reduce_word(&mut w);
            let k = words.iter().position(|u| *u == w).expect("closure is complete");
            table[i * n + j] = k;
        }
    }
    let labels = words
        .iter()
        .map(|w| w.iter().map(|&c| if c == 0 { 'a' } else { 'b' }).collect::<String>())
        .collect();
    FiniteBand::from_flat(n, table)
        .expect("free band closure is a band")
        .with_labels(labels)
        .expect("one label per element")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lz(n: usize) -> FiniteBand {
        // xy = x
        let mut t = vec![0; n * n];
        for a in 0..n {
            for b in 0..n {
                t[a * n + b] = a;
            }
        }
        FiniteBand::from_flat(n, t).unwrap()
    }

    #[test]
    fn validates_trivial_and_left_zero() {
        let b = FiniteBand::validate_table(&[vec![0]]).unwrap();
        assert_eq!(b.order(), 1);
        let b = lz(2);
        assert_eq!(b.mul(0, 1), 0);
        assert_eq!(b.mul(1, 0), 1);
    }

    #[test]
    fn rejects_non_idempotent_diagonal() {
        let err = FiniteBand::validate_table(&[vec![0, 1], vec![1, 0]]).unwrap_err();
        assert_eq!(err, BandError::NotIdempotent(1));
        assert_eq!(err.to_string(), "NotIdempotent(1)");
    }

    #[test]
    fn rejects_non_associative_table() {
        // Idempotent magma that is not associative: 3 elements.
        // 0*1=2, rest left-zero-ish; (0*1)*1 = 2*1 = 0 vs 0*(1*1) = 0*1 = 2.
        let t = vec![vec![0, 2, 0], vec![1, 1, 1], vec![0, 2, 2]];
        let err = FiniteBand::validate_table(&t).unwrap_err();
        match err {
            BandError::NotAssociative(_, _, _) => {}
            other => panic!("expected associativity failure, got {other:?}"),
        }
    }

    #[test]
    fn rejects_out_of_range_and_empty() {
        assert_eq!(
            FiniteBand::validate_table(&[vec![0, 5], vec![0, 1]]).unwrap_err(),
            BandError::IndexOutOfRange { row: 0, col: 1 }
        );
        assert_eq!(FiniteBand::validate_table(&[]).unwrap_err(), BandError::Empty);
    }

    #[test]
    fn closure_of_generators() {
        let b = lz(3);
        let s = generate_subband(&b, &ElementSet::new([2, 0]));
        assert_eq!(s.members(), &[2, 0]);
        let one = generate_subband(&b, &ElementSet::new([1]));
        assert_eq!(one.members(), &[1]);
    }

    #[test]
    fn free_band_two_has_six_elements_in_discovery_order() {
        let f = free_band_two();
        assert_eq!(f.order(), 6);
        let labels: Vec<_> = (0..6).map(|e| f.label(e)).collect();
        assert_eq!(labels, ["a", "b", "ab", "ba", "aba", "bab"]);
        // a * b = ab, ab * ab = ab, aba * b = ab(ab) = ab
        let pos = |s: &str| labels.iter().position(|l| l == s).unwrap();
        assert_eq!(f.mul(pos("a"), pos("b")), pos("ab"));
        assert_eq!(f.mul(pos("ab"), pos("ab")), pos("ab"));
        assert_eq!(f.mul(pos("aba"), pos("b")), pos("ab"));
        assert_eq!(f.mul(pos("b"), pos("ab")), pos("bab"));
    }

    /// Independent reduction oracle: expand all ways of deleting square
    /// halves recursively and demand a unique irreducible word.
    fn reduce_oracle(w: &[u8]) -> Vec<u8> {
        fn rec(w: &[u8], out: &mut BTreeSet<Vec<u8>>) {
            let mut reducible = false;
            for half in 1..=w.len() / 2 {
                for start in 0..=w.len() - 2 * half {
                    if w[start..start + half] == w[start + half..start + 2 * half] {
                        reducible = true;
                        let mut next = w.to_vec();
                        next.drain(start..start + half);
                        rec(&next, out);
                    }
                }
            }
            if !reducible {
                out.insert(w.to_vec());
            }
        }
        let mut out = BTreeSet::new();
        rec(w, &mut out);
        assert_eq!(out.len(), 1, "reduction of {w:?} must be confluent");
        out.into_iter().next().unwrap()
    }

    #[test]
    fn word_reduction_matches_oracle_on_all_short_words() {
        for len in 1..=7usize {
            for code in 0..(1u32 << len) {
                let w: Vec<u8> = (0..len).map(|i| ((code >> i) & 1) as u8).collect();
                let mut ours = w.clone();
                reduce_word(&mut ours);
                assert_eq!(ours, reduce_oracle(&w), "word {w:?}");
            }
        }
    }

    #[test]
    fn morphism_checks() {
        let b = lz(2);
        let id = BandMap::new(b.clone(), b.clone(), vec![0, 1]).unwrap();
        assert!(is_morphism(&id));
        // Constant map to an idempotent is always a morphism.
        let c = BandMap::new(b.clone(), b.clone(), vec![0, 0]).unwrap();
        assert!(is_morphism(&c));
        // Left zero -> right zero by "identity" is not a morphism.
        let rz = FiniteBand::validate_table(&[vec![0, 1], vec![0, 1]]).unwrap();
        let f = BandMap::new(b, rz, vec![0, 1]).unwrap();
        assert!(!is_morphism(&f));
    }

    #[test]
    fn all_subbands_of_a_rectangle() {
        // 2x2 rectangular band: no 3-element subband exists.
        let t = vec![
            vec![0, 1, 0, 1],
            vec![0, 1, 0, 1],
            vec![2, 3, 2, 3],
            vec![2, 3, 2, 3],
        ];
        let b = FiniteBand::validate_table(&t).unwrap();
        let subs = all_subbands(&b);
        let sizes: Vec<usize> = subs.iter().map(|s| s.len()).collect();
        assert_eq!(sizes, vec![1, 1, 1, 1, 2, 2, 2, 2, 4]);
    }

    #[test]
    fn restrict_relabels_closed_sets() {
        let f = free_band_two();
        let s = generate_subband(&f, &ElementSet::new([0]));
        let r = f.restrict(s.members());
        assert_eq!(r.order(), 1);
        assert_eq!(r.label(0), "a");
    }
}
