//! Green's relations and the natural partial order on a finite band.
//!
//! On a band the quasi-orders have pointwise characterisations:
//! `e <=_r f` iff `fe = e`, and `e <=_l f` iff `ef = e`. Their intersections
//! give R and L; D is characterised by `efe = e` and `fef = f`, and equals
//! the join of R and L. The natural partial order is `e <= f` iff
//! `ef = fe = e`.

use thiserror::Error;

use crate::band::{ElementSet, FiniteBand};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GreenError {
    /// The requested class is not strictly below the element's class in the
    /// structure semilattice.
    #[error("ClassNotBelow(class {class} is not strictly below the class of element {element})")]
    ClassNotBelow { element: usize, class: usize },
    /// A class id out of range for the profile.
    #[error("class {0} out of range ({1} classes)")]
    ClassOutOfRange(usize, usize),
}

/// Green's relations of one band: quasi-orders, class partitions, the
/// natural partial order, and the induced order on D-classes.
///
/// Class ids are assigned by smallest member: the class containing the least
/// unassigned element gets the next id, so ids are stable across runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GreenProfile {
    n: usize,
    /// `leq_r[e*n + f]`: `fe = e`.
    leq_r: Vec<bool>,
    /// `leq_l[e*n + f]`: `ef = e`.
    leq_l: Vec<bool>,
    /// `natural[e*n + f]`: `ef = fe = e`.
    natural: Vec<bool>,
    pub r_class: Vec<usize>,
    pub l_class: Vec<usize>,
    pub d_class: Vec<usize>,
    pub r_classes: Vec<Vec<usize>>,
    pub l_classes: Vec<Vec<usize>>,
    pub d_classes: Vec<Vec<usize>>,
    /// `class_leq[a*k + b]`: D-class `a` is below-or-equal D-class `b` in the
    /// structure semilattice (their product class is `a`).
    class_leq: Vec<bool>,
}

impl GreenProfile {
    pub fn order(&self) -> usize {
        self.n
    }

    /// `e <=_r f` (iff `fe = e`).
    #[inline]
    pub fn leq_r(&self, e: usize, f: usize) -> bool {
        self.leq_r[e * self.n + f]
    }

    /// `e <=_l f` (iff `ef = e`).
    #[inline]
    pub fn leq_l(&self, e: usize, f: usize) -> bool {
        self.leq_l[e * self.n + f]
    }

    /// Natural partial order `e <= f` (iff `ef = fe = e`).
    #[inline]
    pub fn natural_leq(&self, e: usize, f: usize) -> bool {
        self.natural[e * self.n + f]
    }

    pub fn r_related(&self, e: usize, f: usize) -> bool {
        self.r_class[e] == self.r_class[f]
    }

    pub fn l_related(&self, e: usize, f: usize) -> bool {
        self.l_class[e] == self.l_class[f]
    }

    pub fn d_related(&self, e: usize, f: usize) -> bool {
        self.d_class[e] == self.d_class[f]
    }

    pub fn d_class_count(&self) -> usize {
        self.d_classes.len()
    }

    /// Order on D-classes induced by the semilattice quotient: `a <= b`.
    #[inline]
    pub fn class_leq(&self, a: usize, b: usize) -> bool {
        self.class_leq[a * self.d_classes.len() + b]
    }
}

fn partition_by<F: Fn(usize, usize) -> bool>(n: usize, related: F) -> (Vec<usize>, Vec<Vec<usize>>) {
    let mut class_of = vec![usize::MAX; n];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for e in 0..n {
        if class_of[e] != usize::MAX {
            continue;
        }
        let id = classes.len();
        let mut members = Vec::new();
        for (f, c) in class_of.iter_mut().enumerate().skip(e) {
            if *c == usize::MAX && related(e, f) {
                *c = id;
                members.push(f);
            }
        }
        classes.push(members);
    }
    (class_of, classes)
}

/// Compute the full Green profile of a band.
///
/// D is computed twice — from the `efe = e, fef = f` characterisation and as
/// the composition of R and L — and the two must agree; a mismatch would mean
/// the table is not a band and is treated as an internal error.
pub fn compute_green(band: &FiniteBand) -> GreenProfile {
    let n = band.order();
    let mut leq_r = vec![false; n * n];
    let mut leq_l = vec![false; n * n];
    let mut natural = vec![false; n * n];
    for e in 0..n {
        for f in 0..n {
            let ef = band.mul(e, f);
            let fe = band.mul(f, e);
            leq_r[e * n + f] = fe == e;
            leq_l[e * n + f] = ef == e;
            natural[e * n + f] = ef == e && fe == e;
        }
    }
    let (r_class, r_classes) =
        partition_by(n, |e, f| leq_r[e * n + f] && leq_r[f * n + e]);
    let (l_class, l_classes) =
        partition_by(n, |e, f| leq_l[e * n + f] && leq_l[f * n + e]);
    let (d_class, d_classes) = partition_by(n, |e, f| {
        band.mul(band.mul(e, f), e) == e && band.mul(band.mul(f, e), f) == f
    });

    // Cross-check: D must equal R ∘ L on a band.
    for e in 0..n {
        for f in 0..n {
            let via_comp = (0..n)
                .any(|g| r_class[e] == r_class[g] && l_class[g] == l_class[f]);
            assert_eq!(
                d_class[e] == d_class[f],
                via_comp,
                "D-characterisation disagrees with R∘L at ({e}, {f}); table is not a band"
            );
        }
    }

    let k = d_classes.len();
    let mut class_leq = vec![false; k * k];
    for a in 0..k {
        for b in 0..k {
            let e = d_classes[a][0];
            let f = d_classes[b][0];
            // a <= b in the quotient semilattice iff the product class is a.
            class_leq[a * k + b] = d_class[band.mul(e, f)] == a;
        }
    }

    GreenProfile {
        n,
        leq_r,
        leq_l,
        natural,
        r_class,
        l_class,
        d_class,
        r_classes,
        l_classes,
        d_classes,
        class_leq,
    }
}

fn check_class(profile: &GreenProfile, e: usize, class: usize) -> Result<(), GreenError> {
    if class >= profile.d_classes.len() {
        return Err(GreenError::ClassOutOfRange(class, profile.d_classes.len()));
    }
    let ec = profile.d_class[e];
    if class == ec || !profile.class_leq(class, ec) {
        return Err(GreenError::ClassNotBelow { element: e, class });
    }
    Ok(())
}

/// Elements of D-class `class` strictly below `e` in the natural order, in
/// ascending element order. `class` must be strictly below the class of `e`
/// in the structure semilattice; the result is then non-empty (it contains
/// `e·f·e` for any `f` in the class).
pub fn below_in_class(
    band: &FiniteBand,
    profile: &GreenProfile,
    e: usize,
    class: usize,
) -> Result<ElementSet, GreenError> {
    check_class(profile, e, class)?;
    let set: ElementSet = profile.d_classes[class]
        .iter()
        .copied()
        .filter(|&f| profile.natural_leq(f, e))
        .collect();
    debug_assert!(!set.is_empty(), "below-set in a lower class is never empty");
    // The canonical member e·f·e indeed lies below e.
    debug_assert!({
        let f = profile.d_classes[class][0];
        set.contains(band.mul(band.mul(e, f), e))
    });
    Ok(set)
}

/// Elements of D-class `class` strictly below `e` in the `<=_r` quasi-order
/// (equivalently `ef = f`), ascending. This is the union of the R-classes
/// meeting [`below_in_class`].
pub fn r_closure_below(
    band: &FiniteBand,
    profile: &GreenProfile,
    e: usize,
    class: usize,
) -> Result<ElementSet, GreenError> {
    check_class(profile, e, class)?;
    Ok(profile.d_classes[class]
        .iter()
        .copied()
        .filter(|&f| band.mul(e, f) == f)
        .collect())
}

/// Dual of [`r_closure_below`]: elements of `class` with `fe = f`.
pub fn l_closure_below(
    band: &FiniteBand,
    profile: &GreenProfile,
    e: usize,
    class: usize,
) -> Result<ElementSet, GreenError> {
    check_class(profile, e, class)?;
    Ok(profile.d_classes[class]
        .iter()
        .copied()
        .filter(|&f| band.mul(f, e) == f)
        .collect())
}

/// The support of a subset: the set of D-class ids it meets, ascending.
pub fn support(profile: &GreenProfile, subset: &ElementSet) -> Vec<usize> {
    let mut seen = vec![false; profile.d_classes.len()];
    for e in subset.iter() {
        seen[profile.d_class[e]] = true;
    }
    (0..seen.len()).filter(|&c| seen[c]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::band::free_band_two;
    use crate::construct::{build_d_covering_chain, build_rectangular, build_semilattice_band};

    #[test]
    fn rectangular_band_classes() {
        // 2 rows x 3 cols: 2 R-classes (rows), 3 L-classes (columns), one D.
        let b = build_rectangular(2, 3).unwrap();
        let g = compute_green(&b);
        assert_eq!(g.r_classes.len(), 2);
        assert_eq!(g.l_classes.len(), 3);
        assert_eq!(g.d_classes.len(), 1);
    }

    #[test]
    fn left_zero_band_has_single_l_class() {
        let b = build_rectangular(3, 1).unwrap();
        let g = compute_green(&b);
        assert_eq!(g.l_classes.len(), 1);
        assert_eq!(g.r_classes.len(), 3);
    }

    #[test]
    fn semilattice_green_is_equality() {
        let b = build_semilattice_band(3, &[(0, 1), (0, 2)]).unwrap();
        let g = compute_green(&b);
        assert_eq!(g.r_classes.len(), 3);
        assert_eq!(g.l_classes.len(), 3);
        assert_eq!(g.d_classes.len(), 3);
        // natural order coincides with the semilattice order
        assert!(g.natural_leq(0, 1));
        assert!(g.natural_leq(0, 2));
        assert!(!g.natural_leq(1, 2));
    }

    #[test]
    fn free_band_two_below_sets() {
        let f = free_band_two();
        let g = compute_green(&f);
        assert_eq!(g.d_classes.len(), 3);
        // e = a (element 0); the bottom class is the one containing ab (2).
        let bottom = g.d_class[2];
        let below = below_in_class(&f, &g, 0, bottom).unwrap();
        // Only aba (element 4) is below a.
        assert_eq!(below.sorted(), vec![4]);
        let r = r_closure_below(&f, &g, 0, bottom).unwrap();
        // {ab, aba}: elements 2 and 4.
        assert_eq!(r.sorted(), vec![2, 4]);
        // r-closure is the union of R-classes meeting the below-set.
        for &x in r.sorted().iter() {
            assert!(below.iter().any(|y| g.r_related(x, y)));
        }
    }

    #[test]
    fn class_not_below_is_rejected() {
        let f = free_band_two();
        let g = compute_green(&f);
        // class of b (element 1) is not below class of a (element 0)
        let err = below_in_class(&f, &g, 0, g.d_class[1]).unwrap_err();
        assert!(matches!(err, GreenError::ClassNotBelow { .. }));
        // own class is rejected as well
        assert!(below_in_class(&f, &g, 0, g.d_class[0]).is_err());
    }

    #[test]
    fn covering_chain_below_set_is_whole_bottom_class() {
        let b = build_d_covering_chain(2, 2, 2).unwrap();
        let g = compute_green(&b);
        let top = *g.d_classes.last().unwrap().first().unwrap();
        let top_class = g.d_class[top];
        let bottom_class = g.d_class[0];
        assert_ne!(top_class, bottom_class);
        let below = below_in_class(&b, &g, top, bottom_class).unwrap();
        assert_eq!(below.sorted(), g.d_classes[bottom_class]);
    }

    #[test]
    fn support_of_subsets() {
        let f = free_band_two();
        let g = compute_green(&f);
        assert_eq!(support(&g, &ElementSet::new([0, 4])), vec![g.d_class[0], g.d_class[4]]);
        assert_eq!(support(&g, &ElementSet::new([])), Vec::<usize>::new());
    }

    #[test]
    fn leq_r_is_left_compatible() {
        // e <=_r f implies xe <=_r xf for all x.
        let b = build_d_covering_chain(2, 2, 1).unwrap();
        let g = compute_green(&b);
        let n = b.order();
        for e in 0..n {
            for f in 0..n {
                if !g.leq_r(e, f) {
                    continue;
                }
                for x in 0..n {
                    assert!(g.leq_r(b.mul(x, e), b.mul(x, f)));
                }
            }
        }
    }
}
