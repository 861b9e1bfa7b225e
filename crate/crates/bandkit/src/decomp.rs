//! Structure decompositions: the semilattice-of-rectangular-bands
//! decomposition every band admits, reconstruction of strong semilattices
//! for normal bands, spined products for regular bands, and semilinearity
//! analysis of the structure semilattice.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::band::{BandMap, ElementSet, FiniteBand};
use crate::construct::{build_spined, spined_pairs, StrongSemilatticeSpec};
use crate::exec;
use crate::green::compute_green;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecompError {
    /// Some element's below-set in the named class is not a singleton.
    #[error("NotNormal({element}, {class})")]
    NotNormal { element: usize, class: usize },
    /// `(a, b, c)` with `a`, `b` R-related but `ac`, `bc` not (or the dual
    /// failure for L): the relation is not a congruence.
    #[error("NotRegular({}, {}, {})", witness.0, witness.1, witness.2)]
    NotRegular { witness: (usize, usize, usize) },
    #[error("NotSemilattice")]
    NotSemilattice,
    #[error("NotComparable")]
    NotComparable,
}

/// The decomposition of a band into a semilattice `Y` of rectangular
/// classes, with row/column coordinates inside each class.
///
/// Coordinates are canonical: rows are the R-classes and columns the
/// L-classes of a class, each ordered by smallest member.
#[derive(Debug, Clone)]
pub struct McLeanDecomposition {
    y: FiniteBand,
    class_of: Vec<usize>,
    coords: Vec<(usize, usize, usize)>,
    class_dims: Vec<(usize, usize)>,
    lookup: Vec<Vec<usize>>,
}

impl McLeanDecomposition {
    /// The structure semilattice `B/D` as a band.
    pub fn y(&self) -> &FiniteBand {
        &self.y
    }

    pub fn class_count(&self) -> usize {
        self.y.order()
    }

    pub fn class_of(&self, e: usize) -> usize {
        self.class_of[e]
    }

    /// `(α, i, j)`: class and rectangular coordinates of an element.
    pub fn coords(&self, e: usize) -> (usize, usize, usize) {
        self.coords[e]
    }

    pub fn class_dims(&self, alpha: usize) -> (usize, usize) {
        self.class_dims[alpha]
    }

    /// The element with coordinates `(α, i, j)`.
    pub fn element_at(&self, alpha: usize, i: usize, j: usize) -> usize {
        self.lookup[alpha][i * self.class_dims[alpha].1 + j]
    }

    /// Members of a class in row-major coordinate order.
    pub fn class_members(&self, alpha: usize) -> &[usize] {
        &self.lookup[alpha]
    }

    /// Row-major local index of an element within its class.
    pub fn local_index(&self, e: usize) -> usize {
        let (alpha, i, j) = self.coords[e];
        i * self.class_dims[alpha].1 + j
    }

    /// Exact round trip: the coordinates are a bijection, within-class
    /// products follow the rectangular rule, and the class map is a
    /// morphism onto `Y` (hence `B_α B_β ⊆ B_{αβ}`).
    pub fn round_trip_ok(&self, band: &FiniteBand) -> bool {
        let n = band.order();
        if n != self.class_of.len() {
            return false;
        }
        for e in 0..n {
            let (alpha, i, j) = self.coords[e];
            if self.element_at(alpha, i, j) != e {
                return false;
            }
        }
        for e in 0..n {
            for f in 0..n {
                let p = band.mul(e, f);
                if self.class_of[p] != self.y.mul(self.class_of[e], self.class_of[f]) {
                    return false;
                }
                if self.class_of[e] == self.class_of[f] {
                    let (alpha, i, _) = self.coords[e];
                    let (_, _, j) = self.coords[f];
                    if p != self.element_at(alpha, i, j) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Decompose a band as a semilattice of rectangular bands. Total: every
/// band decomposes this way.
pub fn mclean_decompose(band: &FiniteBand) -> McLeanDecomposition {
    let green = compute_green(band);
    let k = green.d_class_count();
    let mut y_table = Vec::with_capacity(k * k);
    let reps: Vec<usize> = (0..k).map(|a| green.d_classes[a][0]).collect();
    for &a in &reps {
        for &b in &reps {
            y_table.push(green.d_class[band.mul(a, b)]);
        }
    }
    let y = FiniteBand::from_flat(k, y_table).expect("quotient by D is a band");
    assert!(y.is_commutative(), "structure quotient must be a semilattice");

    let mut class_of = vec![0usize; band.order()];
    let mut coords = vec![(0usize, 0usize, 0usize); band.order()];
    let mut class_dims = Vec::with_capacity(k);
    let mut lookup = Vec::with_capacity(k);
    for alpha in 0..k {
        let members = &green.d_classes[alpha];
        let mut row_ids: Vec<usize> = Vec::new();
        let mut col_ids: Vec<usize> = Vec::new();
        for &e in members {
            if !row_ids.contains(&green.r_class[e]) {
                row_ids.push(green.r_class[e]);
            }
            if !col_ids.contains(&green.l_class[e]) {
                col_ids.push(green.l_class[e]);
            }
        }
        // members are ascending, so first occurrence order = smallest-member
        // order for the row and column ids
        let (rows, cols) = (row_ids.len(), col_ids.len());
        assert_eq!(rows * cols, members.len(), "D-classes of a band are rectangular");
        let mut table = vec![usize::MAX; members.len()];
        for &e in members {
            let i = row_ids.iter().position(|&r| r == green.r_class[e]).unwrap();
            let j = col_ids.iter().position(|&c| c == green.l_class[e]).unwrap();
            class_of[e] = alpha;
            coords[e] = (alpha, i, j);
            assert_eq!(table[i * cols + j], usize::MAX, "coordinates must be injective");
            table[i * cols + j] = e;
        }
        class_dims.push((rows, cols));
        lookup.push(table);
    }
    let d = McLeanDecomposition { y, class_of, coords, class_dims, lookup };
    assert!(d.round_trip_ok(band), "decomposition must round-trip the table");
    d
}

/// Recover the strong-semilattice structure of a normal band: for every
/// element and every class below its own, the unique element below it there
/// becomes the connecting-morphism image.
///
/// Succeeds iff every such below-set is a singleton, which happens exactly
/// for normal bands (`xyzx=xzyx`).
pub fn reconstruct_strong_semilattice(
    band: &FiniteBand,
) -> Result<StrongSemilatticeSpec, DecompError> {
    let d = mclean_decompose(band);
    let k = d.class_count();
    let mut psi: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for alpha in 0..k {
        for beta in 0..k {
            if alpha == beta || d.y().mul(alpha, beta) != beta {
                continue;
            }
            let mut map = Vec::with_capacity(d.class_members(alpha).len());
            for &e in d.class_members(alpha) {
                let below: Vec<usize> = d
                    .class_members(beta)
                    .iter()
                    .copied()
                    .filter(|&f| band.natural_leq(f, e))
                    .collect();
                match below.as_slice() {
                    [f] => map.push(d.local_index(*f)),
                    _ => return Err(DecompError::NotNormal { element: e, class: beta }),
                }
            }
            psi.insert((alpha, beta), map);
        }
    }
    let spec = StrongSemilatticeSpec::new(d.y().clone(), d.class_dims.clone(), psi)
        .expect("singleton below-sets always assemble into a valid strong semilattice");
    Ok(spec)
}

/// The spined-product decomposition of a regular band.
#[derive(Debug, Clone)]
pub struct SpinedDecomposition {
    left: FiniteBand,
    right: FiniteBand,
    spine: FiniteBand,
    product: FiniteBand,
    left_to_spine: BandMap,
    right_to_spine: BandMap,
    embedding: BandMap,
}

impl SpinedDecomposition {
    /// `B/R`, a left regular band (`xyx=xy`).
    pub fn left(&self) -> &FiniteBand {
        &self.left
    }

    /// `B/L`, a right regular band (`xyx=yx`).
    pub fn right(&self) -> &FiniteBand {
        &self.right
    }

    /// `B/D`, the common semilattice image.
    pub fn spine(&self) -> &FiniteBand {
        &self.spine
    }

    /// The spined product `left ⋈ right` the band is isomorphic to.
    pub fn product(&self) -> &FiniteBand {
        &self.product
    }

    pub fn left_to_spine(&self) -> &BandMap {
        &self.left_to_spine
    }

    pub fn right_to_spine(&self) -> &BandMap {
        &self.right_to_spine
    }

    /// The isomorphism `e ↦ ([e]_R, [e]_L)` onto the product.
    pub fn embedding(&self) -> &BandMap {
        &self.embedding
    }
}

/// Decompose a regular band as a spined product of `B/R` and `B/L` over
/// `B/D`. Succeeds iff `R` and `L` are congruences, which happens exactly
/// for regular bands (`zxzyz=zxyz`).
pub fn spined_decompose(band: &FiniteBand) -> Result<SpinedDecomposition, DecompError> {
    let green = compute_green(band);
    let n = band.order();
    // R is always a left congruence; it is a congruence iff additionally
    // a R b implies ac R bc. Dually L must be left-compatible.
    let r_violation = exec::min_map(n, |a| {
        for b in a + 1..n {
            if green.r_class[a] != green.r_class[b] {
                continue;
            }
            for c in 0..n {
                if green.r_class[band.mul(a, c)] != green.r_class[band.mul(b, c)] {
                    return Some((a, b, c));
                }
            }
        }
        None
    });
    if let Some(w) = r_violation {
        return Err(DecompError::NotRegular { witness: w });
    }
    let l_violation = exec::min_map(n, |a| {
        for b in a + 1..n {
            if green.l_class[a] != green.l_class[b] {
                continue;
            }
            for c in 0..n {
                if green.l_class[band.mul(c, a)] != green.l_class[band.mul(c, b)] {
                    return Some((a, b, c));
                }
            }
        }
        None
    });
    if let Some(w) = l_violation {
        return Err(DecompError::NotRegular { witness: w });
    }

    let quotient = |classes: &[Vec<usize>], class_of: &dyn Fn(usize) -> usize| -> FiniteBand {
        let k = classes.len();
        let mut table = Vec::with_capacity(k * k);
        for ci in classes {
            for cj in classes {
                table.push(class_of(band.mul(ci[0], cj[0])));
            }
        }
        let labels = classes.iter().map(|c| band.label(c[0])).collect();
        FiniteBand::from_flat(k, table)
            .expect("quotient by a band congruence is a band")
            .with_labels(labels)
            .expect("one label per class")
    };
    let left = quotient(&green.r_classes, &|e| green.r_class[e]);
    let right = quotient(&green.l_classes, &|e| green.l_class[e]);
    let spine = quotient(&green.d_classes, &|e| green.d_class[e]);

    let left_to_spine = BandMap::new(
        left.clone(),
        spine.clone(),
        green.r_classes.iter().map(|c| green.d_class[c[0]]).collect(),
    )
    .expect("class map is well-formed");
    let right_to_spine = BandMap::new(
        right.clone(),
        spine.clone(),
        green.l_classes.iter().map(|c| green.d_class[c[0]]).collect(),
    )
    .expect("class map is well-formed");

    let product = build_spined(&left, &right, &left_to_spine, &right_to_spine)
        .expect("quotients of a regular band form a spined product");
    let pairs = spined_pairs(&left_to_spine, &right_to_spine);
    let map: Vec<usize> = (0..n)
        .map(|e| {
            pairs
                .binary_search(&(green.r_class[e], green.l_class[e]))
                .expect("every element has a matching class pair")
        })
        .collect();
    let embedding = BandMap::new(band.clone(), product.clone(), map).expect("well-formed map");
    assert!(
        crate::band::is_morphism(&embedding) && embedding.is_bijective(),
        "with R and L congruences the class-pair map is an isomorphism"
    );
    Ok(SpinedDecomposition {
        left,
        right,
        spine,
        product,
        left_to_spine,
        right_to_spine,
        embedding,
    })
}

/// Tree-likeness and cone structure of a semilattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemilinearAnalysis {
    is_tree: bool,
    cones: Vec<Vec<Vec<usize>>>,
    branching: Vec<usize>,
}

impl SemilinearAnalysis {
    /// Is every principal down-set a chain?
    pub fn is_tree(&self) -> bool {
        self.is_tree
    }

    /// The cones above `alpha`: connected components of the strict up-set
    /// under comparability, each sorted, ordered by smallest member.
    pub fn cones(&self, alpha: usize) -> &[Vec<usize>] {
        &self.cones[alpha]
    }

    pub fn branching(&self, alpha: usize) -> usize {
        self.branching[alpha]
    }
}

/// Analyze a semilattice band: tree check plus cone partitions of every
/// strict up-set, computed by comparability connectivity and cross-checked
/// against the meet criterion (`δ`, `γ` connected iff `δγ > α`).
pub fn analyze_semilinear(y: &FiniteBand) -> Result<SemilinearAnalysis, DecompError> {
    if !y.is_commutative() {
        return Err(DecompError::NotSemilattice);
    }
    let n = y.order();
    let leq = |a: usize, b: usize| y.mul(a, b) == a;
    let is_tree = (0..n).all(|a| {
        let down: Vec<usize> = (0..n).filter(|&b| leq(b, a)).collect();
        down.iter().all(|&p| down.iter().all(|&q| leq(p, q) || leq(q, p)))
    });

    let components = |up: &[usize], adjacent: &dyn Fn(usize, usize) -> bool| -> Vec<Vec<usize>> {
        let mut comp: Vec<Vec<usize>> = Vec::new();
        let mut assigned = vec![false; up.len()];
        for start in 0..up.len() {
            if assigned[start] {
                continue;
            }
            let mut block = vec![start];
            assigned[start] = true;
            let mut head = 0;
            while head < block.len() {
                let u = block[head];
                head += 1;
                for v in 0..up.len() {
                    if !assigned[v] && adjacent(up[u], up[v]) {
                        assigned[v] = true;
                        block.push(v);
                    }
                }
            }
            let mut members: Vec<usize> = block.into_iter().map(|i| up[i]).collect();
            members.sort_unstable();
            comp.push(members);
        }
        comp.sort();
        comp
    };

    let mut cones = Vec::with_capacity(n);
    let mut branching = Vec::with_capacity(n);
    for alpha in 0..n {
        let up: Vec<usize> = (0..n).filter(|&g| g != alpha && leq(alpha, g)).collect();
        let by_comparability = components(&up, &|d, g| leq(d, g) || leq(g, d));
        let by_meet = components(&up, &|d, g| y.mul(d, g) != alpha);
        assert_eq!(
            by_comparability, by_meet,
            "cone partitions by comparability and by meets must agree"
        );
        branching.push(by_comparability.len());
        cones.push(by_comparability);
    }
    Ok(SemilinearAnalysis { is_tree, cones, branching })
}

/// Image and kernel of the connecting morphism `ψ_{α,β}` of a spec: the
/// image as a set of local indices of `B_β`, and the kernel as a partition
/// of the local indices of `B_α`, blocks ordered by image value.
pub fn connecting_image_kernel(
    spec: &StrongSemilatticeSpec,
    alpha: usize,
    beta: usize,
) -> Result<(ElementSet, Vec<Vec<usize>>), DecompError> {
    if alpha >= spec.y().order() || beta >= spec.y().order() || !spec.leq(beta, alpha) {
        return Err(DecompError::NotComparable);
    }
    let mut blocks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for x in 0..spec.class_size(alpha) {
        blocks.entry(spec.psi_apply(alpha, beta, x)).or_default().push(x);
    }
    let image = ElementSet::new(blocks.keys().copied());
    Ok((image, blocks.into_values().collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::band::free_band_two;
    use crate::construct::{
        build_d_covering_chain, build_rectangular, build_semilattice_band, build_strong,
        identity_spec, ConeAssignment, SemilinearTruncation,
    };
    use crate::variety::{satisfies_identity, Identity};

    fn chain(len: usize) -> FiniteBand {
        let pairs: Vec<(usize, usize)> = (1..len).map(|i| (i - 1, i)).collect();
        build_semilattice_band(len, &pairs).unwrap()
    }

    /// Order-3 band with a top element over a left-zero pair: the smallest
    /// non-normal band.
    fn cover_band() -> FiniteBand {
        FiniteBand::validate_table(&[vec![0, 0, 0], vec![0, 1, 2], vec![2, 2, 2]]).unwrap()
    }

    /// One of the two smallest non-regular bands (order 5).
    fn non_regular_band() -> FiniteBand {
        FiniteBand::validate_table(&[
            vec![0, 0, 0, 0, 0],
            vec![0, 1, 0, 3, 4],
            vec![2, 2, 2, 2, 2],
            vec![0, 1, 4, 3, 4],
            vec![4, 4, 4, 4, 4],
        ])
        .unwrap()
    }

    #[test]
    fn mclean_rectangular_single_class() {
        let b = build_rectangular(2, 3).unwrap();
        let d = mclean_decompose(&b);
        assert_eq!(d.class_count(), 1);
        assert_eq!(d.class_dims(0), (2, 3));
        for e in 0..6 {
            assert_eq!(d.coords(e), (0, e / 3, e % 3));
        }
        assert!(d.round_trip_ok(&b));
    }

    #[test]
    fn mclean_semilattice_is_itself() {
        let y = build_semilattice_band(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        let d = mclean_decompose(&y);
        assert_eq!(d.y().flat_table(), y.flat_table());
        assert!((0..4).all(|a| d.class_dims(a) == (1, 1)));
    }

    #[test]
    fn mclean_free_band_two() {
        let f = free_band_two();
        let d = mclean_decompose(&f);
        assert_eq!(d.class_count(), 3);
        // Y is the non-chain: two incomparable atoms with their meet below.
        assert_eq!(d.y().mul(0, 1), 2);
        assert_eq!(d.y().mul(0, 2), 2);
        assert_eq!(
            (0..3).map(|a| d.class_dims(a)).collect::<Vec<_>>(),
            vec![(1, 1), (1, 1), (2, 2)]
        );
    }

    #[test]
    fn reconstruct_on_semilattice_and_free_band() {
        let y = chain(3);
        let spec = reconstruct_strong_semilattice(&y).unwrap();
        assert_eq!(spec.y().flat_table(), y.flat_table());

        // the free band on two generators is normal, so this succeeds
        let f = free_band_two();
        assert!(satisfies_identity(&f, &Identity::parse("xyzx=xzyx").unwrap()));
        let spec = reconstruct_strong_semilattice(&f).unwrap();
        let rebuilt = build_strong(&spec).unwrap();
        // identity-coordinate bijection e ↦ (class, local) is an isomorphism
        let d = mclean_decompose(&f);
        let map: Vec<usize> =
            (0..6).map(|e| spec.element_index(d.class_of(e), d.local_index(e))).collect();
        let iso = BandMap::new(f.clone(), rebuilt, map).unwrap();
        assert!(crate::band::is_morphism(&iso) && iso.is_bijective());
    }

    #[test]
    fn reconstruct_rejects_non_normal() {
        assert_eq!(
            reconstruct_strong_semilattice(&cover_band()),
            Err(DecompError::NotNormal { element: 1, class: 0 })
        );
        let chain_band = build_d_covering_chain(2, 2, 2).unwrap();
        assert!(matches!(
            reconstruct_strong_semilattice(&chain_band),
            Err(DecompError::NotNormal { .. })
        ));
    }

    #[test]
    fn reconstruct_agrees_with_identity_on_samples() {
        let bands = vec![
            chain(4),
            build_rectangular(3, 2).unwrap(),
            free_band_two(),
            cover_band(),
            build_d_covering_chain(2, 2, 2).unwrap(),
            build_d_covering_chain(3, 1, 2).unwrap(),
            non_regular_band(),
        ];
        let normal = Identity::parse("xyzx=xzyx").unwrap();
        for b in bands {
            assert_eq!(
                reconstruct_strong_semilattice(&b).is_ok(),
                satisfies_identity(&b, &normal),
                "semantic and identity checks must agree on {b:?}"
            );
        }
    }

    #[test]
    fn spined_rectangular_components() {
        let b = build_rectangular(2, 3).unwrap();
        let s = spined_decompose(&b).unwrap();
        assert_eq!(s.left().flat_table(), build_rectangular(2, 1).unwrap().flat_table());
        assert_eq!(s.right().flat_table(), build_rectangular(1, 3).unwrap().flat_table());
        assert_eq!(s.product().flat_table(), b.flat_table());
        assert!(s.embedding().is_bijective());
    }

    #[test]
    fn spined_left_regular_band() {
        // a left regular band: B/L is the semilattice itself
        let spec = identity_spec(&chain(2), 2, 1).unwrap();
        let b = build_strong(&spec).unwrap();
        let s = spined_decompose(&b).unwrap();
        assert!(satisfies_identity(s.left(), &Identity::parse("xyx=xy").unwrap()));
        assert_eq!(s.right().flat_table(), s.spine().flat_table());
        assert_eq!(s.product().order(), b.order());
    }

    #[test]
    fn spined_free_band_two_succeeds() {
        let f = free_band_two();
        let s = spined_decompose(&f).unwrap();
        assert_eq!(s.left().order(), 4);
        assert_eq!(s.right().order(), 4);
        assert_eq!(s.spine().order(), 3);
        assert!(satisfies_identity(s.left(), &Identity::parse("xyx=xy").unwrap()));
        assert!(satisfies_identity(s.right(), &Identity::parse("xyx=yx").unwrap()));
    }

    #[test]
    fn spined_rejects_non_regular() {
        let b = non_regular_band();
        assert!(!satisfies_identity(&b, &Identity::parse("zxzyz=zxyz").unwrap()));
        let err = spined_decompose(&b).unwrap_err();
        let DecompError::NotRegular { witness: (a, bb, c) } = err else {
            panic!("expected NotRegular, got {err:?}");
        };
        // the witness must break one of the congruences
        let g = compute_green(&b);
        let breaks_r = g.r_class[a] == g.r_class[bb]
            && g.r_class[b.mul(a, c)] != g.r_class[b.mul(bb, c)];
        let breaks_l = g.l_class[a] == g.l_class[bb]
            && g.l_class[b.mul(c, a)] != g.l_class[b.mul(c, bb)];
        assert!(breaks_r || breaks_l);
        // deterministic witness
        assert_eq!(spined_decompose(&b).unwrap_err(), err);
    }

    #[test]
    fn spined_agrees_with_identity_on_samples() {
        let regular = Identity::parse("zxzyz=zxyz").unwrap();
        let bands = vec![
            chain(3),
            build_rectangular(2, 2).unwrap(),
            free_band_two(),
            cover_band(),
            build_d_covering_chain(2, 2, 2).unwrap(),
            non_regular_band(),
        ];
        for b in bands {
            assert_eq!(
                spined_decompose(&b).is_ok(),
                satisfies_identity(&b, &regular),
                "congruence and identity checks must agree on {b:?}"
            );
        }
    }

    #[test]
    fn semilinear_chain_and_diamond() {
        let c = analyze_semilinear(&chain(3)).unwrap();
        assert!(c.is_tree());
        assert!((0..3).all(|a| c.branching(a) <= 1));
        let diamond = build_semilattice_band(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        let d = analyze_semilinear(&diamond).unwrap();
        assert!(!d.is_tree());
        // above the bottom everything is connected through the top
        assert_eq!(d.branching(0), 1);
        assert_eq!(d.cones(0), &[vec![1, 2, 3]]);
        assert_eq!(analyze_semilinear(&build_rectangular(2, 1).unwrap()),
            Err(DecompError::NotSemilattice));
    }

    #[test]
    fn semilinear_binary_tree_cones() {
        // root 0, children 1, 2; children of 1: 3, 4; of 2: 5, 6
        let t = SemilinearTruncation::from_parents(&[
            None,
            Some(0),
            Some(0),
            Some(1),
            Some(1),
            Some(2),
            Some(2),
        ])
        .unwrap();
        let y = t.to_semilattice();
        let a = analyze_semilinear(&y).unwrap();
        assert!(a.is_tree());
        assert_eq!(a.branching(0), 2);
        assert_eq!(a.cones(0), &[vec![1, 3, 4], vec![2, 5, 6]]);
        assert_eq!(a.branching(1), 2);
        assert_eq!(a.cones(1), &[vec![3], vec![4]]);
        assert_eq!(a.branching(3), 0);
    }

    #[test]
    fn image_kernel_of_connecting_maps() {
        // image-trivial spec over a 2-chain
        let t = SemilinearTruncation::from_parents(&[None, Some(0)]).unwrap();
        let spec = crate::construct::build_image_trivial_truncation(
            &t,
            2,
            2,
            1,
            &ConeAssignment::new(vec![0, 3]),
        )
        .unwrap();
        let (image, kernel) = connecting_image_kernel(&spec, 1, 0).unwrap();
        assert_eq!(image.members(), &[3]);
        assert_eq!(kernel, vec![vec![0, 1, 2, 3]]);
        // identity maps have equality kernels
        let spec = identity_spec(&chain(2), 2, 2).unwrap();
        let (image, kernel) = connecting_image_kernel(&spec, 1, 0).unwrap();
        assert_eq!(image.members(), &[0, 1, 2, 3]);
        assert_eq!(kernel.len(), 4);
        assert_eq!(connecting_image_kernel(&spec, 0, 1), Err(DecompError::NotComparable));
    }

    #[test]
    fn kernel_refinement_along_chains() {
        // 3-chain with dims (2,2), (2,1), (1,1): row projection then collapse
        let mut psi = BTreeMap::new();
        psi.insert((2, 1), vec![0, 0, 1, 1]);
        psi.insert((1, 0), vec![0, 0]);
        psi.insert((2, 0), vec![0, 0, 0, 0]);
        let spec =
            StrongSemilatticeSpec::new(chain(3), vec![(1, 1), (2, 1), (2, 2)], psi).unwrap();
        let (_, fine) = connecting_image_kernel(&spec, 2, 1).unwrap();
        let (_, coarse) = connecting_image_kernel(&spec, 2, 0).unwrap();
        // every fine block is inside one coarse block
        for block in &fine {
            assert!(coarse
                .iter()
                .any(|cb| block.iter().all(|x| cb.contains(x))));
        }
        assert_eq!(fine.len(), 2);
        assert_eq!(coarse.len(), 1);
    }
}
