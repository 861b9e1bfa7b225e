//! Isomorphism search, extension of partial isomorphisms to automorphisms,
//! and the homogeneity hierarchy: k-homogeneity, homogeneity, and
//! structure-homogeneity (the latter restricted to semilattice automorphisms
//! that are realizable on a finite structure semilattice).
//!
//! All searches are complete backtracking with constraint propagation:
//! assigning `φ(a) = u` forces `φ(ab) = u·φ(b)` for every assigned `b`, and
//! candidates are filtered by per-element invariants (Green class sizes,
//! down-set and up-set sizes) plus pairwise relation consistency. Every
//! returned map is re-verified before it leaves the module.

use thiserror::Error;

use crate::band::{generate_subband, is_morphism, BandMap, ElementSet, FiniteBand};
use crate::exec;
use crate::green::{compute_green, GreenProfile};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HomogError {
    #[error("InvalidPartial({0})")]
    InvalidPartial(String),
}

/// A partial isomorphism: an isomorphism between a subband of `source` and
/// a subband of `target`, given on the (closed) domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialIsomorphism {
    source: FiniteBand,
    target: FiniteBand,
    dom: ElementSet,
    map: Vec<usize>,
}

impl PartialIsomorphism {
    /// Validate and build: `dom` must be a subband of `source`, `map` (one
    /// image per domain member, in domain order) injective, multiplicative
    /// on the domain, and land on a subband of `target`.
    pub fn new(
        source: FiniteBand,
        target: FiniteBand,
        dom: ElementSet,
        map: Vec<usize>,
    ) -> Result<Self, HomogError> {
        if dom.iter().any(|e| e >= source.order()) {
            return Err(HomogError::InvalidPartial("domain element out of range".into()));
        }
        if map.len() != dom.len() {
            return Err(HomogError::InvalidPartial(format!(
                "{} images for {} domain elements",
                map.len(),
                dom.len()
            )));
        }
        if map.iter().any(|&t| t >= target.order()) {
            return Err(HomogError::InvalidPartial("image element out of range".into()));
        }
        if generate_subband(&source, &dom).sorted() != dom.sorted() {
            return Err(HomogError::InvalidPartial("domain is not closed".into()));
        }
        let mut seen = vec![false; target.order()];
        for &t in &map {
            if std::mem::replace(&mut seen[t], true) {
                return Err(HomogError::InvalidPartial("map is not injective".into()));
            }
        }
        // normalise to ascending domain order, keeping the pairing
        let mut pairs: Vec<(usize, usize)> = dom.iter().zip(map).collect();
        pairs.sort_unstable_by_key(|&(e, _)| e);
        let members: Vec<usize> = pairs.iter().map(|&(e, _)| e).collect();
        let map: Vec<usize> = pairs.iter().map(|&(_, t)| t).collect();
        let image_of = |e: usize| map[members.binary_search(&e).unwrap()];
        for &x in &members {
            for &y in &members {
                let xy = source.mul(x, y);
                if image_of(xy) != target.mul(image_of(x), image_of(y)) {
                    return Err(HomogError::InvalidPartial(format!(
                        "not multiplicative at ({x}, {y})"
                    )));
                }
            }
        }
        let dom = ElementSet::new(members);
        Ok(PartialIsomorphism { source, target, dom, map })
    }

    pub fn source(&self) -> &FiniteBand {
        &self.source
    }

    pub fn target(&self) -> &FiniteBand {
        &self.target
    }

    pub fn dom(&self) -> &ElementSet {
        &self.dom
    }

    /// Images in domain order.
    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn apply(&self, e: usize) -> Option<usize> {
        self.dom.members().binary_search(&e).ok().map(|i| self.map[i])
    }

    pub fn image(&self) -> ElementSet {
        let mut img: Vec<usize> = self.map.clone();
        img.sort_unstable();
        ElementSet::new(img)
    }
}

/// An isomorphism between subbands that no automorphism extends (for
/// structure-homogeneity, no automorphism inducing the recorded semilattice
/// automorphism).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomogWitness {
    /// Domain subband, ascending.
    pub dom: ElementSet,
    /// Images in domain order.
    pub map: Vec<usize>,
    /// For structure-homogeneity failures: the semilattice automorphism
    /// (on D-class ids) that no extending band automorphism induces.
    pub spine_automorphism: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HomogeneityVerdict {
    Homogeneous,
    NotHomogeneous(HomogWitness),
}

impl HomogeneityVerdict {
    pub fn is_homogeneous(&self) -> bool {
        matches!(self, HomogeneityVerdict::Homogeneous)
    }

    pub fn witness(&self) -> Option<&HomogWitness> {
        match self {
            HomogeneityVerdict::Homogeneous => None,
            HomogeneityVerdict::NotHomogeneous(w) => Some(w),
        }
    }
}

/// Outcome of [`classify_finite`]: a finite band is homogeneous exactly when
/// it is rectangular.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Classification {
    Homogeneous { rows: usize, cols: usize },
    NotHomogeneous(HomogWitness),
}

type Key = (usize, usize, usize, usize, usize);

fn element_keys(band: &FiniteBand, g: &GreenProfile) -> Vec<Key> {
    let n = band.order();
    (0..n)
        .map(|e| {
            (
                g.r_classes[g.r_class[e]].len(),
                g.l_classes[g.l_class[e]].len(),
                g.d_classes[g.d_class[e]].len(),
                (0..n).filter(|&f| g.natural_leq(f, e)).count(),
                (0..n).filter(|&f| g.natural_leq(e, f)).count(),
            )
        })
        .collect()
}

/// Constraint tying the searched map to a semilattice automorphism: the
/// image's class must be `pi_hat` of the preimage's class.
struct SpineConstraint<'a> {
    src_class: &'a [usize],
    tgt_class: &'a [usize],
    pi_hat: &'a [usize],
}

struct Searcher<'a> {
    src: &'a FiniteBand,
    tgt: &'a FiniteBand,
    sg: &'a GreenProfile,
    tg: &'a GreenProfile,
    skey: &'a [Key],
    tkey: &'a [Key],
    spine: Option<SpineConstraint<'a>>,
}

struct State {
    assign: Vec<Option<usize>>,
    used_by: Vec<Option<usize>>,
    trail: Vec<usize>,
}

impl State {
    fn new(n: usize) -> State {
        State { assign: vec![None; n], used_by: vec![None; n], trail: Vec::new() }
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let a = self.trail.pop().unwrap();
            let u = self.assign[a].take().unwrap();
            self.used_by[u] = None;
        }
    }
}

impl<'a> Searcher<'a> {
    fn admissible(&self, state: &State, a: usize, u: usize) -> bool {
        if self.skey[a] != self.tkey[u] {
            return false;
        }
        if let Some(sc) = &self.spine {
            if sc.tgt_class[u] != sc.pi_hat[sc.src_class[a]] {
                return false;
            }
        }
        match state.used_by[u] {
            Some(prev) => prev == a,
            None => state.trail.iter().all(|&b| {
                let v = state.assign[b].unwrap();
                self.sg.leq_r(a, b) == self.tg.leq_r(u, v)
                    && self.sg.leq_r(b, a) == self.tg.leq_r(v, u)
                    && self.sg.leq_l(a, b) == self.tg.leq_l(u, v)
                    && self.sg.leq_l(b, a) == self.tg.leq_l(v, u)
            }),
        }
    }

    /// Assign `e ↦ t` and propagate product consequences. Returns false on
    /// contradiction (state must then be rolled back by the caller).
    fn try_assign(&self, state: &mut State, e: usize, t: usize) -> bool {
        let mut queue = vec![(e, t)];
        while let Some((a, u)) = queue.pop() {
            if let Some(cur) = state.assign[a] {
                if cur != u {
                    return false;
                }
                continue;
            }
            if !self.admissible(state, a, u) {
                return false;
            }
            state.assign[a] = Some(u);
            state.used_by[u] = Some(a);
            state.trail.push(a);
            for i in 0..state.trail.len() {
                let b = state.trail[i];
                let v = state.assign[b].unwrap();
                queue.push((self.src.mul(a, b), self.tgt.mul(u, v)));
                queue.push((self.src.mul(b, a), self.tgt.mul(v, u)));
            }
        }
        true
    }

    fn seed(&self, state: &mut State, pairs: &[(usize, usize)]) -> bool {
        pairs.iter().all(|&(e, t)| {
            let mark = state.trail.len();
            if self.try_assign(state, e, t) {
                true
            } else {
                state.undo_to(mark);
                false
            }
        })
    }

    /// Depth-first completion. With `all` set, collects every total map in
    /// lexicographic order; otherwise stops at the first.
    fn solve(&self, state: &mut State, all: Option<&mut Vec<Vec<usize>>>) -> Option<Vec<usize>> {
        let n = self.src.order();
        let next = (0..n).find(|&e| state.assign[e].is_none());
        let e = match next {
            None => {
                let map: Vec<usize> = state.assign.iter().map(|a| a.unwrap()).collect();
                if let Some(out) = all {
                    out.push(map);
                    return None; // keep searching
                }
                return Some(map);
            }
            Some(e) => e,
        };
        let mut collector = all;
        for t in 0..self.tgt.order() {
            if state.used_by[t].is_some() || !self.admissible(state, e, t) {
                continue;
            }
            let mark = state.trail.len();
            if self.try_assign(state, e, t) {
                let found = self.solve(state, collector.as_deref_mut());
                if found.is_some() {
                    return found;
                }
            }
            state.undo_to(mark);
        }
        None
    }
}

fn sorted_keys(keys: &[Key]) -> Vec<Key> {
    let mut k = keys.to_vec();
    k.sort_unstable();
    k
}

/// Search for an isomorphism `b1 → b2`. Complete: returns `None` only when
/// no isomorphism exists. The search prunes on order, Green statistics,
/// decomposition shape (via class-size keys), and the variety profile.
pub fn find_isomorphism(b1: &FiniteBand, b2: &FiniteBand) -> Option<BandMap> {
    if b1.order() != b2.order() {
        return None;
    }
    let g1 = compute_green(b1);
    let g2 = compute_green(b2);
    if g1.r_classes.len() != g2.r_classes.len()
        || g1.l_classes.len() != g2.l_classes.len()
        || g1.d_classes.len() != g2.d_classes.len()
    {
        return None;
    }
    let k1 = element_keys(b1, &g1);
    let k2 = element_keys(b2, &g2);
    if sorted_keys(&k1) != sorted_keys(&k2) {
        return None;
    }
    if crate::variety::variety_profile(b1) != crate::variety::variety_profile(b2) {
        return None;
    }
    let searcher =
        Searcher { src: b1, tgt: b2, sg: &g1, tg: &g2, skey: &k1, tkey: &k2, spine: None };
    let mut state = State::new(b1.order());
    let map = searcher.solve(&mut state, None)?;
    let iso = BandMap::new(b1.clone(), b2.clone(), map).expect("search produced in-range map");
    assert!(is_morphism(&iso) && iso.is_bijective(), "search must return isomorphisms");
    Some(iso)
}

/// All isomorphisms `b1 → b2` as image vectors, in lexicographic order.
pub fn all_isomorphisms(b1: &FiniteBand, b2: &FiniteBand) -> Vec<Vec<usize>> {
    if b1.order() != b2.order() {
        return Vec::new();
    }
    let g1 = compute_green(b1);
    let g2 = compute_green(b2);
    let k1 = element_keys(b1, &g1);
    let k2 = element_keys(b2, &g2);
    if sorted_keys(&k1) != sorted_keys(&k2) {
        return Vec::new();
    }
    let searcher =
        Searcher { src: b1, tgt: b2, sg: &g1, tg: &g2, skey: &k1, tkey: &k2, spine: None };
    let mut state = State::new(b1.order());
    let mut out = Vec::new();
    searcher.solve(&mut state, Some(&mut out));
    out
}

fn verify_automorphism(band: &FiniteBand, g: &GreenProfile, map: &[usize]) {
    let auto = BandMap::new(band.clone(), band.clone(), map.to_vec()).expect("in-range map");
    assert!(is_morphism(&auto) && auto.is_bijective(), "extension must be an automorphism");
    // automorphisms preserve D, R, L, and the natural order
    let n = band.order();
    for e in 0..n {
        for f in 0..n {
            assert_eq!(g.r_related(e, f), g.r_related(map[e], map[f]));
            assert_eq!(g.l_related(e, f), g.l_related(map[e], map[f]));
            assert_eq!(g.d_related(e, f), g.d_related(map[e], map[f]));
            assert_eq!(g.natural_leq(e, f), g.natural_leq(map[e], map[f]));
        }
    }
}

/// Extend a partial isomorphism of `band` into itself to a full
/// automorphism, or report that none exists (complete backtracking).
pub fn extend_to_automorphism(
    band: &FiniteBand,
    theta: &PartialIsomorphism,
) -> Result<Option<BandMap>, HomogError> {
    if theta.source().flat_table() != band.flat_table()
        || theta.target().flat_table() != band.flat_table()
    {
        return Err(HomogError::InvalidPartial(
            "partial isomorphism is not on the given band".into(),
        ));
    }
    let g = compute_green(band);
    let keys = element_keys(band, &g);
    let pairs: Vec<(usize, usize)> =
        theta.dom().iter().zip(theta.map().iter().copied()).collect();
    Ok(extend_seeded(band, &g, &keys, &pairs, None).map(|map| {
        verify_automorphism(band, &g, &map);
        for &(e, t) in &pairs {
            assert_eq!(map[e], t, "extension must agree with the partial isomorphism");
        }
        BandMap::new(band.clone(), band.clone(), map).expect("verified automorphism")
    }))
}

fn extend_seeded(
    band: &FiniteBand,
    g: &GreenProfile,
    keys: &[Key],
    pairs: &[(usize, usize)],
    spine: Option<SpineConstraint<'_>>,
) -> Option<Vec<usize>> {
    let searcher =
        Searcher { src: band, tgt: band, sg: g, tg: g, skey: keys, tkey: keys, spine };
    let mut state = State::new(band.order());
    if !searcher.seed(&mut state, pairs) {
        return None;
    }
    searcher.solve(&mut state, None)
}

/// Shared context for the homogeneity sweeps: all subbands with their
/// restricted tables and internal invariants.
struct SubbandTable {
    subs: Vec<ElementSet>,
    restricted: Vec<FiniteBand>,
    internal_keys: Vec<Vec<Key>>,
}

fn subband_table(band: &FiniteBand) -> SubbandTable {
    let subs = crate::band::all_subbands(band);
    let restricted: Vec<FiniteBand> =
        exec::map_slice(&subs, |s| band.restrict(s.members()));
    let internal_keys = exec::map_slice(&restricted, |r| {
        let g = compute_green(r);
        sorted_keys(&element_keys(r, &g))
    });
    SubbandTable { subs, restricted, internal_keys }
}

/// For one (domain, codomain) subband pair, the minimal `(dom, map)` of an
/// isomorphism that fails to extend (plain homogeneity check).
fn pair_failure(
    band: &FiniteBand,
    g: &GreenProfile,
    keys: &[Key],
    table: &SubbandTable,
    i: usize,
    j: usize,
) -> Option<(Vec<usize>, Vec<usize>)> {
    if table.internal_keys[i] != table.internal_keys[j] {
        return None;
    }
    let from = table.subs[i].members();
    let to = table.subs[j].members();
    let mut best: Option<(Vec<usize>, Vec<usize>)> = None;
    for iso in all_isomorphisms(&table.restricted[i], &table.restricted[j]) {
        let global: Vec<usize> = iso.iter().map(|&x| to[x]).collect();
        let pairs: Vec<(usize, usize)> =
            from.iter().copied().zip(global.iter().copied()).collect();
        if extend_seeded(band, g, keys, &pairs, None).is_none() {
            let cand = (from.to_vec(), global);
            if best.as_ref().is_none_or(|b| cand < *b) {
                best = Some(cand);
            }
        }
    }
    best
}

fn verdict_from(failure: Option<(Vec<usize>, Vec<usize>)>) -> HomogeneityVerdict {
    match failure {
        None => HomogeneityVerdict::Homogeneous,
        Some((dom, map)) => HomogeneityVerdict::NotHomogeneous(HomogWitness {
            dom: ElementSet::new(dom),
            map,
            spine_automorphism: None,
        }),
    }
}

/// Does every isomorphism between subbands of size exactly `k` extend to an
/// automorphism? The returned witness is minimal in `(dom, map)` order.
pub fn is_k_homogeneous(band: &FiniteBand, k: usize) -> HomogeneityVerdict {
    if k == 0 {
        return HomogeneityVerdict::Homogeneous;
    }
    let g = compute_green(band);
    let keys = element_keys(band, &g);
    let table = subband_table(band);
    let of_size: Vec<usize> =
        (0..table.subs.len()).filter(|&i| table.subs[i].len() == k).collect();
    let m = of_size.len();
    let failure = exec::min_map(m * m, |p| {
        pair_failure(band, &g, &keys, &table, of_size[p / m], of_size[p % m])
    });
    verdict_from(failure)
}

/// Full homogeneity: every isomorphism between subbands (of any size)
/// extends to an automorphism.
pub fn is_homogeneous(band: &FiniteBand) -> HomogeneityVerdict {
    let g = compute_green(band);
    let keys = element_keys(band, &g);
    let table = subband_table(band);
    let m = table.subs.len();
    // smallest k with a failure wins; within k, minimal (dom, map)
    for k in 1..=band.order() {
        let of_size: Vec<usize> =
            (0..m).filter(|&i| table.subs[i].len() == k).collect();
        let c = of_size.len();
        let failure = exec::min_map(c * c, |p| {
            pair_failure(band, &g, &keys, &table, of_size[p / c], of_size[p % c])
        });
        if failure.is_some() {
            return verdict_from(failure);
        }
    }
    HomogeneityVerdict::Homogeneous
}

/// Structure-homogeneity, finite analog: for every subband isomorphism θ
/// with induced map π on the structure semilattice, and every automorphism
/// π̂ of the semilattice extending π, some automorphism of the band extends
/// θ and induces π̂.
///
/// On a finite semilattice only the realizable π̂ exist (often just the
/// identity), which makes this weaker than the infinite notion; it is the
/// exact finite statement we can decide.
pub fn is_structure_homogeneous(band: &FiniteBand) -> HomogeneityVerdict {
    let g = compute_green(band);
    let keys = element_keys(band, &g);
    let decomp = crate::decomp::mclean_decompose(band);
    let y = decomp.y();
    let y_autos = all_isomorphisms(y, y);
    let class_of: Vec<usize> = (0..band.order()).map(|e| decomp.class_of(e)).collect();
    let table = subband_table(band);
    let m = table.subs.len();

    type Fail = (Vec<usize>, Vec<usize>, Vec<usize>);
    let failure: Option<Fail> = exec::min_map(m * m, |p| {
        let (i, j) = (p / m, p % m);
        if table.internal_keys[i] != table.internal_keys[j] {
            return None;
        }
        let from = table.subs[i].members();
        let to = table.subs[j].members();
        let mut best: Option<Fail> = None;
        for iso in all_isomorphisms(&table.restricted[i], &table.restricted[j]) {
            let global: Vec<usize> = iso.iter().map(|&x| to[x]).collect();
            // induced partial map on the structure semilattice
            let mut pi: Vec<Option<usize>> = vec![None; y.order()];
            let mut consistent = true;
            for (&e, &t) in from.iter().zip(global.iter()) {
                let (a, b) = (class_of[e], class_of[t]);
                match pi[a] {
                    None => pi[a] = Some(b),
                    Some(prev) if prev == b => {}
                    Some(_) => {
                        consistent = false;
                        break;
                    }
                }
            }
            // θ maps D-classes of the subband into single band classes, so
            // the induced map is always well-defined
            assert!(consistent, "subband isomorphisms induce class maps");
            let pairs: Vec<(usize, usize)> =
                from.iter().copied().zip(global.iter().copied()).collect();
            for pi_hat in &y_autos {
                if (0..y.order()).any(|a| pi[a].is_some_and(|b| pi_hat[a] != b)) {
                    continue; // π̂ does not extend π
                }
                let sc = SpineConstraint {
                    src_class: &class_of,
                    tgt_class: &class_of,
                    pi_hat,
                };
                if extend_seeded(band, &g, &keys, &pairs, Some(sc)).is_none() {
                    let cand = (from.to_vec(), global.clone(), pi_hat.clone());
                    if best.as_ref().is_none_or(|b| cand < *b) {
                        best = Some(cand);
                    }
                }
            }
        }
        best
    });
    match failure {
        None => HomogeneityVerdict::Homogeneous,
        Some((dom, map, pi_hat)) => HomogeneityVerdict::NotHomogeneous(HomogWitness {
            dom: ElementSet::new(dom),
            map,
            spine_automorphism: Some(pi_hat),
        }),
    }
}

/// Decide homogeneity by the full checker and name the rectangular shape on
/// success. The classification theorem for finite bands (homogeneous ⇔
/// rectangular) is asserted as a cross-check of the checker, never used to
/// decide.
pub fn classify_finite(band: &FiniteBand) -> Classification {
    let verdict = is_homogeneous(band);
    let decomp = crate::decomp::mclean_decompose(band);
    let rectangular = decomp.class_count() == 1;
    match verdict {
        HomogeneityVerdict::Homogeneous => {
            assert!(
                rectangular,
                "checker found a homogeneous band that is not rectangular: {band:?}"
            );
            let (rows, cols) = decomp.class_dims(0);
            Classification::Homogeneous { rows, cols }
        }
        HomogeneityVerdict::NotHomogeneous(w) => {
            assert!(
                !rectangular,
                "checker rejected a rectangular band with witness {w:?}: {band:?}"
            );
            Classification::NotHomogeneous(w)
        }
    }
}
