//! Constructors for the classical band families: rectangular bands,
//! semilattices given by an order relation, strong semilattices of
//! rectangular bands, spined products, direct products `Y × B_{n,m}`,
//! image-trivial strong semilattices over trees, and D-covering chains.
//!
//! Every constructor funnels its table through [`FiniteBand::from_flat`], so
//! a bug in a product formula surfaces as a validation panic rather than a
//! silently broken band.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::band::{is_morphism, BandMap, FiniteBand};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstructError {
    #[error("ZeroDimension")]
    ZeroDimension,
    #[error("NotPartialOrder({0}, {1})")]
    NotPartialOrder(usize, usize),
    #[error("NotMeetClosed({0}, {1})")]
    NotMeetClosed(usize, usize),
    #[error("NotSemilattice")]
    NotSemilattice,
    #[error("IdentityViolation({0})")]
    IdentityViolation(usize),
    #[error("TransitivityViolation({0}, {1}, {2})")]
    TransitivityViolation(usize, usize, usize),
    #[error("NotMorphism({0}, {1})")]
    NotMorphism(usize, usize),
    #[error("NotMorphism({0})")]
    MapNotMorphism(&'static str),
    #[error("TargetsDiffer")]
    TargetsDiffer,
    #[error("NotTree({0})")]
    NotTree(String),
    #[error("MultiplicityExceeded({0}, {1})")]
    MultiplicityExceeded(usize, usize),
    #[error("malformed spec: {0}")]
    MalformedSpec(String),
}

/// Rectangular band `B_{n,m}` on elements `(i, j) ↦ i·m + j` with the
/// product `(i, j)(k, ℓ) = (i, ℓ)`.
pub fn build_rectangular(n: usize, m: usize) -> Result<FiniteBand, ConstructError> {
    if n == 0 || m == 0 {
        return Err(ConstructError::ZeroDimension);
    }
    let order = n * m;
    let mut table = Vec::with_capacity(order * order);
    for x in 0..order {
        for y in 0..order {
            table.push((x / m) * m + y % m);
        }
    }
    Ok(FiniteBand::from_flat(order, table).expect("rectangular product is a band"))
}

/// Semilattice band on `0..n` from a list of `(a, b)` pairs meaning
/// `a ≤ b`. The reflexive-transitive closure is taken; the result must be
/// antisymmetric and every pair of elements must have a meet, which becomes
/// the product.
pub fn build_semilattice_band(
    n: usize,
    leq_pairs: &[(usize, usize)],
) -> Result<FiniteBand, ConstructError> {
    if n == 0 {
        return Err(ConstructError::ZeroDimension);
    }
    let mut leq = vec![false; n * n];
    for i in 0..n {
        leq[i * n + i] = true;
    }
    for &(a, b) in leq_pairs {
        if a >= n || b >= n {
            return Err(ConstructError::MalformedSpec(format!(
                "order pair ({a}, {b}) out of range for {n} elements"
            )));
        }
        leq[a * n + b] = true;
    }
    // Warshall transitive closure.
    for k in 0..n {
        for i in 0..n {
            if leq[i * n + k] {
                for j in 0..n {
                    if leq[k * n + j] {
                        leq[i * n + j] = true;
                    }
                }
            }
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            if leq[a * n + b] && leq[b * n + a] {
                return Err(ConstructError::NotPartialOrder(a, b));
            }
        }
    }
    let mut table = vec![0usize; n * n];
    for x in 0..n {
        for y in 0..n {
            let lower: Vec<usize> =
                (0..n).filter(|&z| leq[z * n + x] && leq[z * n + y]).collect();
            let meet = lower
                .iter()
                .copied()
                .find(|&g| lower.iter().all(|&z| leq[z * n + g]))
                .ok_or(ConstructError::NotMeetClosed(x.min(y), x.max(y)))?;
            table[x * n + y] = meet;
        }
    }
    Ok(FiniteBand::from_flat(n, table).expect("meet operation is a band"))
}

/// A strong semilattice of rectangular bands: a semilattice `Y`, per-class
/// dimensions `(n_α, m_α)`, and for every strictly comparable pair
/// `α > β` a connecting map `ψ_{α,β}` given on row-major local indices.
///
/// `ψ_{α,α}` is the identity and is left implicit (an explicit `(α, α)`
/// key is accepted only if it is the identity). [`StrongSemilatticeSpec::new`]
/// verifies the identity, transitivity, and morphism conditions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrongSemilatticeSpec {
    y: FiniteBand,
    dims: Vec<(usize, usize)>,
    psi: BTreeMap<(usize, usize), Vec<usize>>,
}

impl StrongSemilatticeSpec {
    pub fn new(
        y: FiniteBand,
        dims: Vec<(usize, usize)>,
        mut psi: BTreeMap<(usize, usize), Vec<usize>>,
    ) -> Result<Self, ConstructError> {
        if !y.is_commutative() {
            return Err(ConstructError::NotSemilattice);
        }
        let k = y.order();
        if dims.len() != k {
            return Err(ConstructError::MalformedSpec(format!(
                "{} dimension pairs for a {k}-class semilattice",
                dims.len()
            )));
        }
        if dims.iter().any(|&(n, m)| n == 0 || m == 0) {
            return Err(ConstructError::ZeroDimension);
        }
        // Explicit (α, α) keys must be identities; drop them afterwards.
        for (alpha, &(rows, cols)) in dims.iter().enumerate() {
            if let Some(map) = psi.get(&(alpha, alpha)) {
                let size = rows * cols;
                if map.len() != size || map.iter().enumerate().any(|(i, &v)| v != i) {
                    return Err(ConstructError::IdentityViolation(alpha));
                }
                psi.remove(&(alpha, alpha));
            }
        }
        for (&(alpha, beta), map) in &psi {
            if alpha >= k || beta >= k || y.mul(alpha, beta) != beta || alpha == beta {
                return Err(ConstructError::MalformedSpec(format!(
                    "connecting map for non-comparable or invalid pair ({alpha}, {beta})"
                )));
            }
            if map.len() != dims[alpha].0 * dims[alpha].1
                || map.iter().any(|&v| v >= dims[beta].0 * dims[beta].1)
            {
                return Err(ConstructError::MalformedSpec(format!(
                    "connecting map ({alpha}, {beta}) has wrong shape"
                )));
            }
        }
        let spec = StrongSemilatticeSpec { y, dims, psi };
        for alpha in 0..k {
            for beta in 0..k {
                if alpha == beta || !spec.leq(beta, alpha) {
                    continue;
                }
                if !spec.psi.contains_key(&(alpha, beta)) {
                    return Err(ConstructError::MalformedSpec(format!(
                        "missing connecting map for comparable pair ({alpha}, {beta})"
                    )));
                }
                // Morphism condition in rectangular coordinates:
                // ψ(i,ℓ) = (row ψ(i,j), col ψ(k,ℓ)).
                let (_, m_a) = spec.dims[alpha];
                let (_, m_b) = spec.dims[beta];
                for x in 0..spec.class_size(alpha) {
                    for z in 0..spec.class_size(alpha) {
                        let prod = (x / m_a) * m_a + z % m_a;
                        let expect = (spec.psi_apply(alpha, beta, x) / m_b) * m_b
                            + spec.psi_apply(alpha, beta, z) % m_b;
                        if spec.psi_apply(alpha, beta, prod) != expect {
                            return Err(ConstructError::NotMorphism(alpha, beta));
                        }
                    }
                }
            }
        }
        for alpha in 0..k {
            for beta in 0..k {
                if !spec.leq(beta, alpha) {
                    continue;
                }
                for gamma in 0..k {
                    if !spec.leq(gamma, beta) {
                        continue;
                    }
                    for x in 0..spec.class_size(alpha) {
                        let step = spec.psi_apply(beta, gamma, spec.psi_apply(alpha, beta, x));
                        if step != spec.psi_apply(alpha, gamma, x) {
                            return Err(ConstructError::TransitivityViolation(alpha, beta, gamma));
                        }
                    }
                }
            }
        }
        Ok(spec)
    }

    pub fn y(&self) -> &FiniteBand {
        &self.y
    }

    pub fn dims(&self) -> &[(usize, usize)] {
        &self.dims
    }

    pub fn class_size(&self, alpha: usize) -> usize {
        self.dims[alpha].0 * self.dims[alpha].1
    }

    /// Total order of the band [`build_strong`] produces.
    pub fn total_order(&self) -> usize {
        (0..self.y.order()).map(|a| self.class_size(a)).sum()
    }

    /// `α ≤ β` in the structure semilattice.
    pub fn leq(&self, alpha: usize, beta: usize) -> bool {
        self.y.mul(alpha, beta) == alpha
    }

    /// Apply `ψ_{α,β}` to a local index (requires `α ≥ β`).
    pub fn psi_apply(&self, alpha: usize, beta: usize, local: usize) -> usize {
        if alpha == beta {
            local
        } else {
            self.psi[&(alpha, beta)][local]
        }
    }

    /// Class indices in the order [`build_strong`] lays them out: sorted by
    /// down-set size so lower classes come first, ties by index.
    pub fn class_order(&self) -> Vec<usize> {
        let k = self.y.order();
        let mut order: Vec<usize> = (0..k).collect();
        let below = |a: usize| (0..k).filter(|&g| self.leq(g, a)).count();
        order.sort_by_key(|&a| (below(a), a));
        order
    }

    /// Global element index of local element `local` of class `alpha` in the
    /// band [`build_strong`] produces.
    pub fn element_index(&self, alpha: usize, local: usize) -> usize {
        let mut offset = 0;
        for &a in &self.class_order() {
            if a == alpha {
                return offset + local;
            }
            offset += self.class_size(a);
        }
        panic!("class index {alpha} out of range");
    }
}

/// Assemble the band of a strong semilattice spec: on the disjoint union of
/// the classes, `a * b = ψ_{α,αβ}(a) · ψ_{β,αβ}(b)` computed inside the
/// rectangular band `B_{αβ}`.
pub fn build_strong(spec: &StrongSemilatticeSpec) -> Result<FiniteBand, ConstructError> {
    let order = spec.total_order();
    let class_order = spec.class_order();
    let mut offsets = vec![0usize; spec.y.order()];
    let mut class_of = Vec::with_capacity(order);
    let mut offset = 0;
    for &a in &class_order {
        offsets[a] = offset;
        offset += spec.class_size(a);
        class_of.extend(std::iter::repeat_n(a, spec.class_size(a)));
    }
    let mut table = Vec::with_capacity(order * order);
    for (x, &alpha) in class_of.iter().enumerate() {
        let lx = x - offsets[alpha];
        for (y, &beta) in class_of.iter().enumerate() {
            let ly = y - offsets[beta];
            let delta = spec.y.mul(alpha, beta);
            let (_, m) = spec.dims[delta];
            let a = spec.psi_apply(alpha, delta, lx);
            let b = spec.psi_apply(beta, delta, ly);
            table.push(offsets[delta] + (a / m) * m + b % m);
        }
    }
    Ok(FiniteBand::from_flat(order, table)
        .expect("strong semilattice product of a valid spec is a band"))
}

/// The element list of the spined product of the two maps' sources: all
/// pairs `(s, t)` with `toY_L(s) = toY_R(t)`, in lexicographic order. Pair
/// `k` of this list is element `k` of [`build_spined`]'s output.
pub fn spined_pairs(to_y_left: &BandMap, to_y_right: &BandMap) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for s in 0..to_y_left.source.order() {
        for t in 0..to_y_right.source.order() {
            if to_y_left.apply(s) == to_y_right.apply(t) {
                pairs.push((s, t));
            }
        }
    }
    pairs
}

/// Spined product `L ⋈ R`: matching pairs `{(s, t) : toY_L(s) = toY_R(t)}`
/// of the direct product, numbered in lexicographic order of `(s, t)`.
///
/// Both maps must be surjective morphisms onto the same semilattice band
/// (identical tables, not merely isomorphic ones).
pub fn build_spined(
    left: &FiniteBand,
    right: &FiniteBand,
    to_y_left: &BandMap,
    to_y_right: &BandMap,
) -> Result<FiniteBand, ConstructError> {
    if to_y_left.source.flat_table() != left.flat_table()
        || to_y_right.source.flat_table() != right.flat_table()
    {
        return Err(ConstructError::MalformedSpec(
            "spine maps are not defined on the given factors".into(),
        ));
    }
    if to_y_left.target.flat_table() != to_y_right.target.flat_table() {
        return Err(ConstructError::TargetsDiffer);
    }
    if !to_y_left.target.is_commutative() {
        return Err(ConstructError::NotSemilattice);
    }
    if !is_morphism(to_y_left) || !to_y_left.is_surjective() {
        return Err(ConstructError::MapNotMorphism("left spine map"));
    }
    if !is_morphism(to_y_right) || !to_y_right.is_surjective() {
        return Err(ConstructError::MapNotMorphism("right spine map"));
    }
    let pairs = spined_pairs(to_y_left, to_y_right);
    let index_of = |s: usize, t: usize| -> usize {
        pairs.binary_search(&(s, t)).expect("componentwise product lands on a matching pair")
    };
    let order = pairs.len();
    let mut table = Vec::with_capacity(order * order);
    for &(s1, t1) in &pairs {
        for &(s2, t2) in &pairs {
            table.push(index_of(left.mul(s1, s2), right.mul(t1, t2)));
        }
    }
    Ok(FiniteBand::from_flat(order, table).expect("spined product is a band"))
}

/// Direct product `Y × B_{n,m}` with elements `(α, e) ↦ α·nm + e`.
pub fn build_direct(y: &FiniteBand, n: usize, m: usize) -> Result<FiniteBand, ConstructError> {
    if !y.is_commutative() {
        return Err(ConstructError::NotSemilattice);
    }
    if n == 0 || m == 0 {
        return Err(ConstructError::ZeroDimension);
    }
    let block = n * m;
    let order = y.order() * block;
    let mut table = Vec::with_capacity(order * order);
    for x in 0..order {
        let (alpha, e) = (x / block, x % block);
        for z in 0..order {
            let (beta, f) = (z / block, z % block);
            table.push(y.mul(alpha, beta) * block + (e / m) * m + f % m);
        }
    }
    Ok(FiniteBand::from_flat(order, table).expect("direct product is a band"))
}

/// A finite rooted tree standing in for a semilinear order: parent links
/// with the root as minimum. As a poset (ancestor ≤ descendant) it is a
/// meet-semilattice whose meet is the deepest common ancestor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemilinearTruncation {
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    depth: Vec<usize>,
    root: usize,
}

impl SemilinearTruncation {
    /// Build from parent links; exactly one node (the root) has no parent.
    pub fn from_parents(parents: &[Option<usize>]) -> Result<Self, ConstructError> {
        let n = parents.len();
        if n == 0 {
            return Err(ConstructError::NotTree("empty node set".into()));
        }
        let roots: Vec<usize> =
            (0..n).filter(|&v| parents[v].is_none()).collect();
        let root = match roots.as_slice() {
            [r] => *r,
            _ => {
                return Err(ConstructError::NotTree(format!("{} roots", roots.len())));
            }
        };
        let mut children = vec![Vec::new(); n];
        for (v, parent) in parents.iter().enumerate() {
            if let Some(p) = *parent {
                if p >= n {
                    return Err(ConstructError::NotTree(format!(
                        "parent {p} of node {v} out of range"
                    )));
                }
                children[p].push(v);
            }
        }
        let mut depth = vec![usize::MAX; n];
        for (v, d) in depth.iter_mut().enumerate() {
            let mut hops = 0;
            let mut cur = v;
            while let Some(p) = parents[cur] {
                cur = p;
                hops += 1;
                if hops > n {
                    return Err(ConstructError::NotTree(format!("cycle through node {v}")));
                }
            }
            if cur != root {
                return Err(ConstructError::NotTree(format!("node {v} detached from root")));
            }
            *d = hops;
        }
        Ok(SemilinearTruncation { parent: parents.to_vec(), children, depth, root })
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn depth(&self, v: usize) -> usize {
        self.depth[v]
    }

    /// `a ≤ b` in the tree order: `a` is an ancestor of `b` or equal to it.
    pub fn leq(&self, a: usize, b: usize) -> bool {
        let mut cur = b;
        loop {
            if cur == a {
                return true;
            }
            match self.parent[cur] {
                Some(p) => cur = p,
                None => return false,
            }
        }
    }

    /// The child of `beta` on the path up to `alpha` (requires `beta < alpha`).
    pub fn path_child(&self, beta: usize, alpha: usize) -> usize {
        let mut cur = alpha;
        loop {
            let p = self.parent[cur].expect("alpha must lie strictly above beta");
            if p == beta {
                return cur;
            }
            cur = p;
        }
    }

    /// The tree as a semilattice band (meet = deepest common ancestor).
    pub fn to_semilattice(&self) -> FiniteBand {
        let pairs: Vec<(usize, usize)> = (0..self.node_count())
            .filter_map(|v| self.parent[v].map(|p| (p, v)))
            .collect();
        build_semilattice_band(self.node_count(), &pairs)
            .expect("a rooted tree is a meet-semilattice")
    }
}

/// Cone targets for an image-trivial strong semilattice over a tree: for
/// each non-root node `c`, `eps[c]` is the local element of the parent class
/// that the whole subtree above `c` maps onto. The entry at the root is
/// ignored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeAssignment {
    pub eps: Vec<usize>,
}

impl ConeAssignment {
    pub fn new(eps: Vec<usize>) -> Self {
        ConeAssignment { eps }
    }
}

/// Image-trivial strong semilattice spec over a tree: all classes are
/// `B_{n,m}`, and `ψ_{α,β}` is the constant map onto `eps[c]` where `c` is
/// the child of `β` on the path to `α`. At most `k` children of any node may
/// share a target element.
pub fn build_image_trivial_truncation(
    tree: &SemilinearTruncation,
    n: usize,
    m: usize,
    k: usize,
    assign: &ConeAssignment,
) -> Result<StrongSemilatticeSpec, ConstructError> {
    if n == 0 || m == 0 || k == 0 {
        return Err(ConstructError::ZeroDimension);
    }
    let nodes = tree.node_count();
    let block = n * m;
    if assign.eps.len() != nodes {
        return Err(ConstructError::MalformedSpec(format!(
            "{} cone targets for {nodes} nodes",
            assign.eps.len()
        )));
    }
    for v in 0..nodes {
        if v != tree.root() && assign.eps[v] >= block {
            return Err(ConstructError::MalformedSpec(format!(
                "cone target {} of node {v} exceeds class size {block}",
                assign.eps[v]
            )));
        }
    }
    for beta in 0..nodes {
        let mut count = vec![0usize; block];
        for &c in tree.children(beta) {
            count[assign.eps[c]] += 1;
            if count[assign.eps[c]] > k {
                return Err(ConstructError::MultiplicityExceeded(beta, assign.eps[c]));
            }
        }
    }
    let mut psi = BTreeMap::new();
    for alpha in 0..nodes {
        for beta in 0..nodes {
            if alpha != beta && tree.leq(beta, alpha) {
                let c = tree.path_child(beta, alpha);
                psi.insert((alpha, beta), vec![assign.eps[c]; block]);
            }
        }
    }
    StrongSemilatticeSpec::new(tree.to_semilattice(), vec![(n, m); nodes], psi)
}

/// Chain of `ℓ` levels of `B_{n,m}` where every cross-level pair is
/// comparable in the natural order: within a level the rectangular product,
/// across levels the product is the lower operand. Level 0 is the bottom and
/// occupies elements `0..n·m`.
pub fn build_d_covering_chain(
    levels: usize,
    n: usize,
    m: usize,
) -> Result<FiniteBand, ConstructError> {
    if levels == 0 || n == 0 || m == 0 {
        return Err(ConstructError::ZeroDimension);
    }
    let block = n * m;
    let order = levels * block;
    let mut table = Vec::with_capacity(order * order);
    for x in 0..order {
        let (p, e) = (x / block, x % block);
        for y in 0..order {
            let (q, f) = (y / block, y % block);
            table.push(match p.cmp(&q) {
                std::cmp::Ordering::Less => x,
                std::cmp::Ordering::Greater => y,
                std::cmp::Ordering::Equal => p * block + (e / m) * m + f % m,
            });
        }
    }
    Ok(FiniteBand::from_flat(order, table).expect("D-covering chain is a band"))
}

/// The identity-connected spec whose [`build_strong`] band is `Y × B_{n,m}`
/// up to the numbering bijection; used by tests and the CLI.
pub fn identity_spec(
    y: &FiniteBand,
    n: usize,
    m: usize,
) -> Result<StrongSemilatticeSpec, ConstructError> {
    let k = y.order();
    let mut psi = BTreeMap::new();
    for alpha in 0..k {
        for beta in 0..k {
            if alpha != beta && y.mul(alpha, beta) == beta {
                psi.insert((alpha, beta), (0..n * m).collect());
            }
        }
    }
    StrongSemilatticeSpec::new(y.clone(), vec![(n, m); k], psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::band::free_band_two;
    use crate::variety::{satisfies_identity, Identity};

    fn chain(len: usize) -> FiniteBand {
        let pairs: Vec<(usize, usize)> = (1..len).map(|i| (i - 1, i)).collect();
        build_semilattice_band(len, &pairs).unwrap()
    }

    #[test]
    fn rectangular_shapes() {
        assert_eq!(build_rectangular(1, 1).unwrap().order(), 1);
        let b = build_rectangular(2, 3).unwrap();
        assert_eq!(b.order(), 6);
        assert!(satisfies_identity(&b, &Identity::parse("xyx=x").unwrap()));
        let lz = build_rectangular(3, 1).unwrap();
        assert!(satisfies_identity(&lz, &Identity::parse("xy=x").unwrap()));
        assert_eq!(build_rectangular(0, 2), Err(ConstructError::ZeroDimension));
    }

    #[test]
    fn semilattice_from_order() {
        let two = chain(2);
        assert_eq!(two.flat_table(), &[0, 0, 0, 1]);
        // diamond: 3 > {1, 2} > 0, midpoints meet at the bottom
        let d = build_semilattice_band(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!(d.mul(1, 2), 0);
        assert_eq!(d.mul(1, 3), 1);
        assert!(d.is_commutative());
        // antichain of size 2 has no meet
        assert_eq!(build_semilattice_band(2, &[]), Err(ConstructError::NotMeetClosed(0, 1)));
        // a ≤ b ≤ a with a ≠ b is not a partial order
        assert_eq!(
            build_semilattice_band(2, &[(0, 1), (1, 0)]),
            Err(ConstructError::NotPartialOrder(0, 1))
        );
    }

    #[test]
    fn strong_two_chain_left_normal() {
        // Y = 2-chain, both classes B_{2,1}, ψ the identity pairing.
        let spec = identity_spec(&chain(2), 2, 1).unwrap();
        let b = build_strong(&spec).unwrap();
        assert_eq!(b.order(), 4);
        assert!(satisfies_identity(&b, &Identity::parse("xyz=xzy").unwrap()));
        assert!(!satisfies_identity(&b, &Identity::parse("xy=yx").unwrap()));
        // oracle from the displayed formula: bottom class first, identity ψ
        // means products across levels keep the row of the higher element.
        let oracle = build_direct(&chain(2), 2, 1).unwrap();
        assert_eq!(b.flat_table(), oracle.flat_table());
    }

    #[test]
    fn strong_trivial_classes_reproduce_y() {
        let y = build_semilattice_band(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        let spec = identity_spec(&y, 1, 1).unwrap();
        let b = build_strong(&spec).unwrap();
        // classes are singletons, so the band is the semilattice itself up to
        // the topological renumbering
        assert!(b.is_commutative());
        assert_eq!(b.order(), 4);
        let order = spec.class_order();
        let perm: Vec<usize> = {
            let mut p = vec![0; 4];
            for (pos, &alpha) in order.iter().enumerate() {
                p[alpha] = pos;
            }
            p
        };
        assert_eq!(y.relabel(&perm).flat_table(), b.flat_table());
    }

    #[test]
    fn strong_image_trivial_natural_order() {
        // Y = 2-chain, top B_{2,2}, bottom B_{1,1}, image-trivial ψ.
        let mut psi = BTreeMap::new();
        psi.insert((1, 0), vec![0, 0, 0, 0]);
        let spec =
            StrongSemilatticeSpec::new(chain(2), vec![(1, 1), (2, 2)], psi).unwrap();
        let b = build_strong(&spec).unwrap();
        assert_eq!(b.order(), 5);
        // e ≥ f iff ψ(e) = f: every top element sits above the bottom.
        for e in 1..5 {
            assert!(b.natural_leq(0, e));
        }
    }

    #[test]
    fn spec_validation_rejects_bad_maps() {
        // non-transitive data on a 3-chain with 2-element classes
        let y = chain(3);
        let mut psi = BTreeMap::new();
        psi.insert((2, 1), vec![0, 1]);
        psi.insert((1, 0), vec![0, 1]);
        psi.insert((2, 0), vec![1, 0]); // disagrees with the composite
        assert_eq!(
            StrongSemilatticeSpec::new(y.clone(), vec![(2, 1); 3], psi),
            Err(ConstructError::TransitivityViolation(2, 1, 0))
        );
        // non-morphism ψ on B_{2,2} over a 2-chain: swapping (0,1) ↦ (1,0)
        // while fixing the corners breaks ψ(x)ψ(z) = ψ(xz)
        let mut psi = BTreeMap::new();
        psi.insert((1, 0), vec![0, 2, 1, 3]);
        assert_eq!(
            StrongSemilatticeSpec::new(chain(2), vec![(2, 2); 2], psi),
            Err(ConstructError::NotMorphism(1, 0))
        );
        let mut psi = BTreeMap::new();
        psi.insert((1, 0), vec![0, 0]);
        psi.insert((1, 1), vec![1, 0]);
        assert_eq!(
            StrongSemilatticeSpec::new(chain(2), vec![(2, 1); 2], psi),
            Err(ConstructError::IdentityViolation(1))
        );
    }

    #[test]
    fn spined_product_of_zero_bands_is_rectangular() {
        let l = build_rectangular(2, 1).unwrap();
        let r = build_rectangular(1, 3).unwrap();
        let y = build_rectangular(1, 1).unwrap();
        let to_y_l = BandMap::new(l.clone(), y.clone(), vec![0, 0]).unwrap();
        let to_y_r = BandMap::new(r.clone(), y.clone(), vec![0, 0, 0]).unwrap();
        let s = build_spined(&l, &r, &to_y_l, &to_y_r).unwrap();
        assert_eq!(s.flat_table(), build_rectangular(2, 3).unwrap().flat_table());
    }

    #[test]
    fn spined_diagonal_is_y() {
        let y = chain(3);
        let id = BandMap::new(y.clone(), y.clone(), vec![0, 1, 2]).unwrap();
        let s = build_spined(&y, &y, &id, &id).unwrap();
        assert_eq!(s.flat_table(), y.flat_table());
    }

    #[test]
    fn spined_rejects_mismatched_targets() {
        let l = chain(2);
        let r = chain(2);
        let y1 = chain(2);
        let y2 = build_semilattice_band(2, &[(1, 0)]).unwrap(); // reversed chain
        let to_y_l = BandMap::new(l.clone(), y1, vec![0, 1]).unwrap();
        let to_y_r = BandMap::new(r.clone(), y2, vec![1, 0]).unwrap();
        assert_eq!(build_spined(&l, &r, &to_y_l, &to_y_r), Err(ConstructError::TargetsDiffer));
    }

    #[test]
    fn spined_order_formula() {
        // left normal ⋈ right normal over a 2-chain
        let l = build_strong(&identity_spec(&chain(2), 2, 1).unwrap()).unwrap();
        let r = build_strong(&identity_spec(&chain(2), 1, 3).unwrap()).unwrap();
        let y = chain(2);
        let to_y_l = BandMap::new(l.clone(), y.clone(), vec![0, 0, 1, 1]).unwrap();
        let to_y_r = BandMap::new(r.clone(), y.clone(), vec![0, 0, 0, 1, 1, 1]).unwrap();
        let s = build_spined(&l, &r, &to_y_l, &to_y_r).unwrap();
        assert_eq!(s.order(), 2 * 3 + 2 * 3);
        assert!(satisfies_identity(&s, &Identity::parse("xyzx=xzyx").unwrap()));
    }

    #[test]
    fn direct_product_examples() {
        let b = build_direct(&build_rectangular(1, 1).unwrap(), 2, 3).unwrap();
        assert_eq!(b.flat_table(), build_rectangular(2, 3).unwrap().flat_table());
        let d = build_direct(&chain(2), 2, 1).unwrap();
        assert_eq!(d.order(), 4);
        assert!(satisfies_identity(&d, &Identity::parse("xyz=xzy").unwrap()));
        assert_eq!(
            build_direct(&build_rectangular(2, 1).unwrap(), 1, 1),
            Err(ConstructError::NotSemilattice)
        );
    }

    #[test]
    fn tree_validation() {
        assert!(SemilinearTruncation::from_parents(&[None, Some(0), Some(0)]).is_ok());
        assert!(matches!(
            SemilinearTruncation::from_parents(&[None, None]),
            Err(ConstructError::NotTree(_))
        ));
        assert!(matches!(
            SemilinearTruncation::from_parents(&[Some(1), Some(0)]),
            Err(ConstructError::NotTree(_))
        ));
        let t = SemilinearTruncation::from_parents(&[None, Some(0), Some(1), Some(1)]).unwrap();
        assert_eq!(t.depth(3), 2);
        assert!(t.leq(0, 3));
        assert!(!t.leq(2, 3));
        assert_eq!(t.path_child(0, 3), 1);
        let y = t.to_semilattice();
        assert_eq!(y.mul(2, 3), 1);
    }

    #[test]
    fn image_trivial_truncation_checks() {
        // depth-2 binary tree: root 0, children 1,2 of the root
        let t = SemilinearTruncation::from_parents(&[None, Some(0), Some(0)]).unwrap();
        // n=2, m=1, k=1, children mapped to distinct root elements
        let spec = build_image_trivial_truncation(
            &t,
            2,
            1,
            1,
            &ConeAssignment::new(vec![0, 0, 1]),
        )
        .unwrap();
        // every root element is covered by some image: union-of-images check
        let mut covered = std::collections::BTreeSet::new();
        for alpha in [1usize, 2] {
            for x in 0..2 {
                covered.insert(spec.psi_apply(alpha, 0, x));
            }
        }
        assert_eq!(covered.len(), 2);
        // same target twice with k=1 is rejected
        assert_eq!(
            build_image_trivial_truncation(&t, 2, 1, 1, &ConeAssignment::new(vec![0, 1, 1])),
            Err(ConstructError::MultiplicityExceeded(0, 1))
        );
        // the band itself is a valid normal band
        let b = build_strong(&spec).unwrap();
        assert!(satisfies_identity(&b, &Identity::parse("xyzx=xzyx").unwrap()));
    }

    #[test]
    fn path_tree_chain_semilattice() {
        let t = SemilinearTruncation::from_parents(&[None, Some(0), Some(1)]).unwrap();
        let spec =
            build_image_trivial_truncation(&t, 1, 1, 1, &ConeAssignment::new(vec![0, 0, 0]))
                .unwrap();
        let b = build_strong(&spec).unwrap();
        assert_eq!(b.flat_table(), chain(3).flat_table());
    }

    #[test]
    fn eq2_constant_per_subtree() {
        // root 0 with child 1; node 1 has children 2,3 — α=2, γ=3 share the
        // child-subtree of β=0 rooted at 1, so their ψ images must agree.
        let t = SemilinearTruncation::from_parents(&[None, Some(0), Some(1), Some(1)]).unwrap();
        let spec = build_image_trivial_truncation(
            &t,
            2,
            2,
            2,
            &ConeAssignment::new(vec![0, 3, 1, 2]),
        )
        .unwrap();
        let im = |alpha: usize, beta: usize| -> Vec<usize> {
            let mut v: Vec<usize> =
                (0..spec.class_size(alpha)).map(|x| spec.psi_apply(alpha, beta, x)).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        assert_eq!(im(2, 0), im(3, 0));
        assert_eq!(im(2, 0), vec![3]);
        assert_eq!(im(2, 1), vec![1]);
        assert_eq!(im(3, 1), vec![2]);
    }

    #[test]
    fn covering_chain_products() {
        assert_eq!(
            build_d_covering_chain(1, 2, 3).unwrap().flat_table(),
            build_rectangular(2, 3).unwrap().flat_table()
        );
        assert_eq!(build_d_covering_chain(2, 1, 1).unwrap().flat_table(), &[0, 0, 0, 1]);
        let b = build_d_covering_chain(2, 2, 2).unwrap();
        assert_eq!(b.order(), 8);
        // cross-level pairs are comparable in the natural order
        for e in 0..4 {
            for f in 4..8 {
                assert!(b.natural_leq(e, f));
            }
        }
        // regular but not normal
        assert!(satisfies_identity(&b, &Identity::parse("zxzyz=zxyz").unwrap()));
        assert!(!satisfies_identity(&b, &Identity::parse("xyzx=xzyx").unwrap()));
        // oracle: product with a lower element is that element, unchanged
        assert_eq!(b.mul(5, 2), 2);
        assert_eq!(b.mul(2, 5), 2);
        // within-level rect: local coords of 5 and 6 in the 2x2 upper level
        let (le, lf) = (5 - 4, 6 - 4);
        assert_eq!(b.mul(5, 6), 4 + (le / 2) * 2 + lf % 2);
    }

    #[test]
    fn free_band_two_is_not_left_normal() {
        let f = free_band_two();
        assert!(!satisfies_identity(&f, &Identity::parse("xyz=xzy").unwrap()));
    }
}
