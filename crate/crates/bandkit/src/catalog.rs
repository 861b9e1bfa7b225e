//! Isomorph-free exhaustive enumeration of small bands, a persistent catalog
//! with cached structural properties, and a verification suite that checks
//! the classical band lemmas over the whole catalog.
//!
//! Enumeration fills Cayley tables cell by cell with incremental
//! associativity propagation, fanned out in parallel over first-row
//! prefixes. A completed table is kept only when it equals its canonical
//! form (iterated partition refinement followed by a minimal-table search
//! over the refinement-respecting relabelings), so each isomorphism class
//! surfaces exactly once.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;
use std::time::Instant;

use thiserror::Error;

use crate::band::{generate_subband, is_morphism, BandMap, ElementSet, FiniteBand};
use crate::decomp::{mclean_decompose, reconstruct_strong_semilattice, spined_decompose};
use crate::exec;
use crate::green::compute_green;
use crate::homog::is_homogeneous;
use crate::variety::{variety_profile, VarietyFlag};

/// Largest order the exhaustive enumerator accepts.
pub const MAX_ENUMERATION_ORDER: usize = 6;

const FORMAT_MAJOR: u32 = 1;
const FORMAT_MINOR: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CatalogError {
    #[error("OrderTooLarge({requested}, max {max})")]
    OrderTooLarge { requested: usize, max: usize },
    #[error("FormatVersionMismatch({found})")]
    FormatVersionMismatch { found: String },
    #[error("CorruptEntry(line {line}: {reason})")]
    CorruptEntry { line: usize, reason: String },
    #[error("Io({0})")]
    Io(String),
}

const UNSET: usize = usize::MAX;

/// Local associativity propagation: after cell `(a, b)` has been set, check
/// every instance of `(xy)z = x(yz)` in which that cell participates (as
/// either inner or outer product of either side) and whose remaining cells
/// are already defined. Filling every cell through this check yields exactly
/// the associative tables.
fn local_assoc_ok(t: &[usize], n: usize, a: usize, b: usize) -> bool {
    let get = |i: usize, j: usize| {
        let x = t[i * n + j];
        (x != UNSET).then_some(x)
    };
    let v = t[a * n + b];
    // (x, y) = (a, b): compare t[v][z] with t[a][t[b][z]]
    for z in 0..n {
        if let (Some(l), Some(w)) = (get(v, z), get(b, z)) {
            if let Some(r) = get(a, w) {
                if l != r {
                    return false;
                }
            }
        }
    }
    // (y, z) = (a, b): compare t[t[x][a]][b] with t[x][v]
    for x in 0..n {
        if let (Some(r), Some(w)) = (get(x, v), get(x, a)) {
            if let Some(l) = get(w, b) {
                if l != r {
                    return false;
                }
            }
        }
    }
    // t[x][y] = a, z = b: the new cell is the outer left product
    for x in 0..n {
        for y in 0..n {
            if get(x, y) == Some(a) {
                if let Some(w) = get(y, b) {
                    if let Some(r) = get(x, w) {
                        if r != v {
                            return false;
                        }
                    }
                }
            }
        }
    }
    // x = a, t[y][z] = b: the new cell is the outer right product
    for y in 0..n {
        for z in 0..n {
            if get(y, z) == Some(b) {
                if let Some(w) = get(a, y) {
                    if let Some(l) = get(w, z) {
                        if l != v {
                            return false;
                        }
                    }
                }
            }
        }
    }
    true
}

fn off_diagonal_cells(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect()
}

fn fresh_table(n: usize) -> Vec<usize> {
    let mut t = vec![UNSET; n * n];
    for i in 0..n {
        t[i * n + i] = i;
    }
    t
}

fn dfs_fill(
    n: usize,
    t: &mut Vec<usize>,
    cells: &[(usize, usize)],
    idx: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    if idx == cells.len() {
        visit(t);
        return;
    }
    let (a, b) = cells[idx];
    for v in 0..n {
        t[a * n + b] = v;
        if local_assoc_ok(t, n, a, b) {
            dfs_fill(n, t, cells, idx + 1, visit);
        }
    }
    t[a * n + b] = UNSET;
}

/// All labeled band tables of order `n`, produced by parallel DFS over
/// first-row prefixes; `keep` filters at the leaves (e.g. to canonical
/// representatives) so only a small fraction is ever materialised.
fn labeled_band_tables(n: usize, keep: impl Fn(&[usize]) -> bool + Send + Sync) -> Vec<Vec<usize>> {
    let cells = off_diagonal_cells(n);
    let prefix_len = n.saturating_sub(1);
    let combos = n.pow(prefix_len as u32);
    let mut out = exec::flat_map_indexed(combos, |mut code| {
        let mut t = fresh_table(n);
        for &(a, b) in cells.iter().take(prefix_len) {
            t[a * n + b] = code % n;
            code /= n;
            if !local_assoc_ok(&t, n, a, b) {
                return Vec::new();
            }
        }
        let mut found = Vec::new();
        dfs_fill(n, &mut t, &cells, prefix_len, &mut |table| {
            if keep(table) {
                found.push(table.to_vec());
            }
        });
        found
    });
    out.sort_unstable();
    out
}

/// Iterated partition refinement: an isomorphism-invariant coloring of the
/// elements, refined by the multiset of colored left/right products until
/// stable. Colors are dense ranks, identical for isomorphic tables.
fn refine_keys(t: &[usize], n: usize) -> Vec<usize> {
    assert!(n <= 15, "refinement packing assumes small orders");
    let mut keys = vec![0u16; n];
    loop {
        let mut sig = vec![0u128; n];
        for (e, slot) in sig.iter_mut().enumerate() {
            let mut row: Vec<u16> = (0..n)
                .map(|f| (keys[f] << 8) | (keys[t[e * n + f]] << 4) | keys[t[f * n + e]])
                .collect();
            row.sort_unstable();
            let mut s = keys[e] as u128;
            for r in row {
                s = (s << 12) | r as u128;
            }
            *slot = s;
        }
        let mut uniq = sig.clone();
        uniq.sort_unstable();
        uniq.dedup();
        let new: Vec<u16> = (0..n).map(|e| uniq.binary_search(&sig[e]).unwrap() as u16).collect();
        if new == keys {
            return keys.into_iter().map(usize::from).collect();
        }
        keys = new;
    }
}

struct CanonState<'a> {
    t: &'a [usize],
    n: usize,
    /// element assigned to each new position, in ascending (key, element) order
    order: Vec<usize>,
    keys: Vec<usize>,
    perm: Vec<usize>,
    inv: Vec<usize>,
    used: Vec<bool>,
    scratch: Vec<usize>,
    best: Option<Vec<usize>>,
}

impl<'a> CanonState<'a> {
    fn rec(&mut self, pos: usize) {
        let n = self.n;
        if pos == n {
            for p in 0..n {
                for q in 0..n {
                    self.scratch[p * n + q] = self.perm[self.t[self.inv[p] * n + self.inv[q]]];
                }
            }
            if self.best.as_ref().is_none_or(|b| self.scratch < *b) {
                self.best = Some(self.scratch.clone());
            }
            return;
        }
        let want = self.keys[self.order[pos]];
        for e in 0..n {
            if !self.used[e] && self.keys[e] == want {
                self.used[e] = true;
                self.perm[e] = pos;
                self.inv[pos] = e;
                self.rec(pos + 1);
                self.used[e] = false;
            }
        }
    }
}

/// Canonical form of a flat table: the lexicographically least relabeling
/// among those that sort elements into ascending refinement-color blocks.
/// Invariant under relabeling, so it identifies isomorphism classes.
fn canonical_form_flat(t: &[usize], n: usize) -> Vec<usize> {
    let keys = refine_keys(t, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&e| (keys[e], e));
    let mut state = CanonState {
        t,
        n,
        order,
        keys,
        perm: vec![0; n],
        inv: vec![0; n],
        used: vec![false; n],
        scratch: vec![0; n * n],
        best: None,
    };
    state.rec(0);
    state.best.expect("at least one relabeling exists")
}

/// Canonical representative of the isomorphism class of `band`.
pub fn canonical_form(band: &FiniteBand) -> FiniteBand {
    let flat = canonical_form_flat(band.flat_table(), band.order());
    FiniteBand::from_flat(band.order(), flat).expect("relabeling preserves validity")
}

/// One representative per isomorphism class of bands of order `n`,
/// ascending by table. Orders above [`MAX_ENUMERATION_ORDER`] are refused.
pub fn enumerate_bands(n: usize) -> Result<Vec<FiniteBand>, CatalogError> {
    static CACHE: [OnceLock<Vec<FiniteBand>>; MAX_ENUMERATION_ORDER + 1] =
        [const { OnceLock::new() }; MAX_ENUMERATION_ORDER + 1];
    if n > MAX_ENUMERATION_ORDER {
        return Err(CatalogError::OrderTooLarge { requested: n, max: MAX_ENUMERATION_ORDER });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let bands = CACHE[n].get_or_init(|| {
        let reps = labeled_band_tables(n, |t| canonical_form_flat(t, n) == t);
        reps.into_iter()
            .map(|t| FiniteBand::from_flat(n, t).expect("enumerated tables are bands"))
            .collect()
    });
    Ok(bands.clone())
}

/// One representative per isomorphism class of semilattices (commutative
/// bands) of order `n`, via a symmetric-table variant of the same search.
pub fn enumerate_semilattices(n: usize) -> Result<Vec<FiniteBand>, CatalogError> {
    static CACHE: [OnceLock<Vec<FiniteBand>>; MAX_ENUMERATION_ORDER + 1] =
        [const { OnceLock::new() }; MAX_ENUMERATION_ORDER + 1];
    if n > MAX_ENUMERATION_ORDER {
        return Err(CatalogError::OrderTooLarge { requested: n, max: MAX_ENUMERATION_ORDER });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if let Some(done) = CACHE[n].get() {
        return Ok(done.clone());
    }
    let cells: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let prefix_len = n.saturating_sub(1); // the whole first row
    let combos = n.pow(prefix_len as u32);
    let place = |t: &mut Vec<usize>, (a, b): (usize, usize), v: usize| {
        t[a * n + b] = v;
        t[b * n + a] = v;
        local_assoc_ok(t, n, a, b) && local_assoc_ok(t, n, b, a)
    };
    fn fill(
        n: usize,
        t: &mut Vec<usize>,
        cells: &[(usize, usize)],
        idx: usize,
        place: &impl Fn(&mut Vec<usize>, (usize, usize), usize) -> bool,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if idx == cells.len() {
            visit(t);
            return;
        }
        let (a, b) = cells[idx];
        for v in 0..n {
            if place(t, cells[idx], v) {
                fill(n, t, cells, idx + 1, place, visit);
            }
            t[a * n + b] = UNSET;
            t[b * n + a] = UNSET;
        }
    }
    let mut out = exec::flat_map_indexed(combos, |mut code| {
        let mut t = fresh_table(n);
        for &cell in cells.iter().take(prefix_len) {
            let v = code % n;
            code /= n;
            if !place(&mut t, cell, v) {
                return Vec::new();
            }
        }
        let mut found = Vec::new();
        fill(n, &mut t, &cells, prefix_len, &place, &mut |table| {
            if canonical_form_flat(table, n) == table {
                found.push(table.to_vec());
            }
        });
        found
    });
    out.sort_unstable();
    let bands: Vec<FiniteBand> = out
        .into_iter()
        .map(|t| {
            let b = FiniteBand::from_flat(n, t).expect("enumerated tables are bands");
            assert!(b.is_commutative());
            b
        })
        .collect();
    Ok(CACHE[n].get_or_init(|| bands).clone())
}

/// A catalog entry: one canonical band plus cached structural properties
/// (`d_classes`, `homogeneous`, `l_classes`, `mclean`, `r_classes`,
/// `varieties`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogEntry {
    pub order: usize,
    pub id: usize,
    pub band: FiniteBand,
    pub props: BTreeMap<String, String>,
}

impl CatalogEntry {
    pub fn prop(&self, key: &str) -> Option<&str> {
        self.props.get(key).map(String::as_str)
    }
}

const EXPECTED_PROPS: [&str; 6] =
    ["d_classes", "homogeneous", "l_classes", "mclean", "r_classes", "varieties"];

fn compute_props(band: &FiniteBand) -> BTreeMap<String, String> {
    let g = compute_green(band);
    let m = mclean_decompose(band);
    let vp = variety_profile(band);
    let dims: Vec<String> = (0..m.class_count())
        .map(|a| {
            let (r, c) = m.class_dims(a);
            format!("{r}x{c}")
        })
        .collect();
    let names: Vec<&str> = vp.members().iter().map(|f| f.short_name()).collect();
    let mut props = BTreeMap::new();
    props.insert("r_classes".into(), g.r_classes.len().to_string());
    props.insert("l_classes".into(), g.l_classes.len().to_string());
    props.insert("d_classes".into(), g.d_classes.len().to_string());
    props.insert("mclean".into(), dims.join("+"));
    props.insert(
        "varieties".into(),
        if names.is_empty() { "none".into() } else { names.join("+") },
    );
    props.insert("homogeneous".into(), is_homogeneous(band).is_homogeneous().to_string());
    props
}

/// All canonical bands up to a maximum order, with cached properties and
/// provenance metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandCatalog {
    entries: BTreeMap<usize, Vec<CatalogEntry>>,
    meta: BTreeMap<String, String>,
}

impl BandCatalog {
    /// Enumerate every order `1..=max_order` and cache the properties.
    pub fn build(max_order: usize) -> Result<BandCatalog, CatalogError> {
        if max_order == 0 || max_order > MAX_ENUMERATION_ORDER {
            return Err(CatalogError::OrderTooLarge {
                requested: max_order,
                max: MAX_ENUMERATION_ORDER,
            });
        }
        let mut entries = BTreeMap::new();
        for n in 1..=max_order {
            let bands = enumerate_bands(n)?;
            let props = exec::map_slice(&bands, compute_props);
            let list: Vec<CatalogEntry> = bands
                .into_iter()
                .zip(props)
                .enumerate()
                .map(|(id, (band, props))| CatalogEntry { order: n, id, band, props })
                .collect();
            entries.insert(n, list);
        }
        let counts: Vec<String> =
            entries.values().map(|v| v.len().to_string()).collect();
        let mut meta = BTreeMap::new();
        meta.insert("counts".into(), counts.join(","));
        meta.insert("generator".into(), format!("bandkit {}", env!("CARGO_PKG_VERSION")));
        meta.insert("max_order".into(), max_order.to_string());
        meta.insert("source".into(), "exhaustive-enumeration".into());
        Ok(BandCatalog { entries, meta })
    }

    pub fn max_order(&self) -> usize {
        self.entries.keys().last().copied().unwrap_or(0)
    }

    pub fn entries(&self, order: usize) -> &[CatalogEntry] {
        self.entries.get(&order).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn iter_all(&self) -> impl Iterator<Item = &CatalogEntry> {
        self.entries.values().flatten()
    }

    /// Class counts per order, ascending.
    pub fn counts(&self) -> Vec<(usize, usize)> {
        self.entries.iter().map(|(&n, v)| (n, v.len())).collect()
    }

    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }

    #[cfg(test)]
    fn inject_for_tests(&mut self, order: usize, band: FiniteBand) {
        let list = self.entries.entry(order).or_default();
        let id = list.len();
        list.push(CatalogEntry { order, id, band, props: BTreeMap::new() });
    }
}

/// Serialize a catalog in the `BANDCAT` text format.
pub fn catalog_store(catalog: &BandCatalog, path: impl AsRef<Path>) -> Result<(), CatalogError> {
    let mut out = String::new();
    let _ = writeln!(out, "BANDCAT v{FORMAT_MAJOR}.{FORMAT_MINOR}");
    for (k, v) in &catalog.meta {
        let _ = writeln!(out, "meta {k} {v}");
    }
    for entry in catalog.iter_all() {
        let _ = writeln!(out);
        let _ = writeln!(out, "band {} {}", entry.order, entry.id);
        for row in entry.band.rows() {
            let strs: Vec<String> = row.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "{}", strs.join(" "));
        }
        for (k, v) in &entry.props {
            let _ = writeln!(out, "prop {k} {v}");
        }
    }
    std::fs::write(path, out).map_err(|e| CatalogError::Io(e.to_string()))
}

fn parse_version(line: &str) -> Option<(u32, u32)> {
    let rest = line.strip_prefix("BANDCAT v")?;
    match rest.split_once('.') {
        Some((maj, min)) => Some((maj.parse().ok()?, min.parse().ok()?)),
        None => Some((rest.parse().ok()?, 0)),
    }
}

/// Load a catalog, re-validating every table. A different major version is
/// refused; an older minor version (or missing cached properties) triggers
/// property recomputation.
pub fn catalog_load(path: impl AsRef<Path>) -> Result<BandCatalog, CatalogError> {
    let text = std::fs::read_to_string(path).map_err(|e| CatalogError::Io(e.to_string()))?;
    let lines: Vec<&str> = text.lines().collect();
    let corrupt = |line: usize, reason: &str| CatalogError::CorruptEntry {
        line,
        reason: reason.to_string(),
    };
    let (major, minor) = lines
        .first()
        .and_then(|l| parse_version(l))
        .ok_or_else(|| CatalogError::FormatVersionMismatch {
            found: lines.first().unwrap_or(&"").to_string(),
        })?;
    if major != FORMAT_MAJOR {
        return Err(CatalogError::FormatVersionMismatch {
            found: lines[0].to_string(),
        });
    }
    let stale = minor < FORMAT_MINOR;

    let mut meta = BTreeMap::new();
    let mut entries: BTreeMap<usize, Vec<CatalogEntry>> = BTreeMap::new();
    let mut i = 1;
    while i < lines.len() {
        let line = lines[i].trim();
        if line.is_empty() {
            i += 1;
            continue;
        }
        if let Some(rest) = line.strip_prefix("meta ") {
            let (k, v) = rest
                .split_once(' ')
                .ok_or_else(|| corrupt(i + 1, "meta line needs a key and a value"))?;
            meta.insert(k.to_string(), v.to_string());
            i += 1;
            continue;
        }
        let rest = line
            .strip_prefix("band ")
            .ok_or_else(|| corrupt(i + 1, "expected a band header"))?;
        let mut parts = rest.split_whitespace();
        let order: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| corrupt(i + 1, "band header needs an order"))?;
        let id: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| corrupt(i + 1, "band header needs an id"))?;
        if order == 0 || parts.next().is_some() {
            return Err(corrupt(i + 1, "malformed band header"));
        }
        i += 1;
        let table_line = i;
        let mut flat = Vec::with_capacity(order * order);
        for _ in 0..order {
            let row = lines
                .get(i)
                .ok_or_else(|| corrupt(i, "table truncated"))?;
            for cell in row.split_whitespace() {
                let v: usize =
                    cell.parse().map_err(|_| corrupt(i + 1, "table cell is not a number"))?;
                flat.push(v);
            }
            i += 1;
        }
        if flat.len() != order * order {
            return Err(corrupt(table_line + 1, "wrong number of table cells"));
        }
        let band = FiniteBand::from_flat(order, flat)
            .map_err(|e| corrupt(table_line + 1, &e.to_string()))?;
        let mut props = BTreeMap::new();
        while let Some(p) = lines.get(i).and_then(|l| l.trim().strip_prefix("prop ")) {
            let (k, v) =
                p.split_once(' ').ok_or_else(|| corrupt(i + 1, "prop line needs a value"))?;
            props.insert(k.to_string(), v.to_string());
            i += 1;
        }
        let list = entries.entry(order).or_default();
        if id != list.len() {
            return Err(corrupt(table_line, "band ids must be consecutive per order"));
        }
        if stale || EXPECTED_PROPS.iter().any(|k| !props.contains_key(*k)) {
            props = compute_props(&band);
        }
        list.push(CatalogEntry { order, id, band, props });
    }
    if let Some(counts) = meta.get("counts") {
        let found: Vec<String> = entries.values().map(|v| v.len().to_string()).collect();
        if *counts != found.join(",") {
            return Err(corrupt(1, "counts metadata disagrees with the entries"));
        }
    }
    Ok(BandCatalog { entries, meta })
}

/// Result of one lemma check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    pub witness: Option<String>,
    pub millis: u128,
}

/// Report of [`verify_lemma_suite`]: one entry per check, in run order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteReport {
    pub checks: Vec<CheckReport>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{} {} ({} ms){}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.millis,
                c.witness.as_deref().map(|w| format!(" — {w}")).unwrap_or_default()
            );
        }
        s
    }
}

/// D-classes computed directly from a raw table (no validity assumptions):
/// returns the class of each element, or a witness string when the mutual
/// relation `efe = e ∧ fef = f` fails to be an equivalence.
fn raw_d_classes(band: &FiniteBand) -> Result<Vec<usize>, String> {
    let n = band.order();
    let related = |e: usize, f: usize| {
        band.mul(band.mul(e, f), e) == e && band.mul(band.mul(f, e), f) == f
    };
    // connected components of the relation graph
    let mut class = vec![usize::MAX; n];
    for e in 0..n {
        if class[e] != usize::MAX {
            continue;
        }
        let mut stack = vec![e];
        class[e] = e;
        while let Some(x) = stack.pop() {
            for (y, c) in class.iter_mut().enumerate() {
                if *c == usize::MAX && related(x, y) {
                    *c = e;
                    stack.push(y);
                }
            }
        }
    }
    for e in 0..n {
        for f in 0..n {
            if (class[e] == class[f]) != related(e, f) {
                return Err(format!("D is not an equivalence at ({e}, {f})"));
            }
        }
    }
    Ok(class)
}

fn check_closure_monotone(bands: &[&FiniteBand]) -> Option<String> {
    for (bi, band) in bands.iter().enumerate() {
        let n = band.order();
        let mut small: Vec<Vec<usize>> = vec![vec![]];
        for _size in 1..=3.min(n) {
            let mut next = Vec::new();
            for s in &small {
                let start = s.last().map_or(0, |&x| x + 1);
                for e in start..n {
                    let mut t = s.clone();
                    t.push(e);
                    next.push(t);
                }
            }
            small = next;
            for m in &small {
                let closure_m = generate_subband(band, &ElementSet::new(m.iter().copied()));
                for drop in 0..m.len() {
                    let sub: Vec<usize> = m
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != drop)
                        .map(|(_, &e)| e)
                        .collect();
                    let closure_n = generate_subband(band, &ElementSet::new(sub));
                    if !closure_n.iter().all(|e| closure_m.contains(e)) {
                        return Some(format!("band {bi}, generators {m:?}"));
                    }
                }
            }
        }
    }
    None
}

fn check_two_generated(bands: &[&FiniteBand]) -> Option<String> {
    for (bi, band) in bands.iter().enumerate() {
        for e in 0..band.order() {
            for f in 0..band.order() {
                let ef = band.mul(e, f);
                let fe = band.mul(f, e);
                let words = ElementSet::new([e, f, ef, fe, band.mul(ef, e), band.mul(fe, f)]);
                let closure = generate_subband(band, &ElementSet::new([e, f]));
                if closure.sorted() != words.sorted() {
                    return Some(format!("band {bi}, generators ({e}, {f})"));
                }
            }
        }
    }
    None
}

fn check_class_products(bands: &[&FiniteBand]) -> Option<String> {
    for (bi, band) in bands.iter().enumerate() {
        let class = match raw_d_classes(band) {
            Ok(c) => c,
            Err(w) => return Some(format!("band {bi}: {w}")),
        };
        let n = band.order();
        // the product class must depend only on the operand classes, and
        // symmetrically (B_α B_β and B_β B_α both land in B_{αβ})
        for e in 0..n {
            for f in 0..n {
                if class[band.mul(e, f)] != class[band.mul(f, e)] {
                    return Some(format!("band {bi}: product classes of ({e}, {f}) asymmetric"));
                }
                for e2 in 0..n {
                    for f2 in 0..n {
                        if class[e2] == class[e]
                            && class[f2] == class[f]
                            && class[band.mul(e2, f2)] != class[band.mul(e, f)]
                        {
                            return Some(format!(
                                "band {bi}: class of ({e2}, {f2}) differs from ({e}, {f})"
                            ));
                        }
                    }
                }
            }
        }
    }
    None
}

fn check_normal_iff_strong(bands: &[&FiniteBand]) -> Option<String> {
    for (bi, band) in bands.iter().enumerate() {
        let normal = variety_profile(band).holds(VarietyFlag::Normal);
        let rebuilt = reconstruct_strong_semilattice(band).is_ok();
        if normal != rebuilt {
            return Some(format!("band {bi}: normal={normal} but reconstruct={rebuilt}"));
        }
    }
    None
}

fn check_regular_iff_spined(bands: &[&FiniteBand]) -> Option<String> {
    for (bi, band) in bands.iter().enumerate() {
        let regular = variety_profile(band).holds(VarietyFlag::Regular);
        let spined = spined_decompose(band).is_ok();
        if regular != spined {
            return Some(format!("band {bi}: regular={regular} but spined={spined}"));
        }
    }
    None
}

fn check_r_order_local(bands: &[&FiniteBand]) -> Option<String> {
    for (bi, band) in bands.iter().enumerate() {
        let g = compute_green(band);
        for e in 0..band.order() {
            for f in 0..band.order() {
                let efe = band.mul(band.mul(e, f), e);
                let lhs = g.leq_r(f, e);
                let rhs = g.r_related(f, efe);
                if lhs != rhs {
                    return Some(format!("band {bi}: ({e}, {f}) gives {lhs} vs {rhs}"));
                }
            }
        }
    }
    None
}

fn check_morphisms_decompose(bands: &[&FiniteBand]) -> Option<String> {
    let small: Vec<&FiniteBand> = bands.iter().copied().filter(|b| b.order() <= 3).collect();
    for (si, src) in small.iter().enumerate() {
        let sc = match raw_d_classes(src) {
            Ok(c) => c,
            Err(w) => return Some(format!("source {si}: {w}")),
        };
        for (ti, tgt) in small.iter().enumerate() {
            let tc = match raw_d_classes(tgt) {
                Ok(c) => c,
                Err(w) => return Some(format!("target {ti}: {w}")),
            };
            let (n, m) = (src.order(), tgt.order());
            for code in 0..m.pow(n as u32) {
                let mut c = code;
                let map: Vec<usize> = (0..n)
                    .map(|_| {
                        let v = c % m;
                        c /= m;
                        v
                    })
                    .collect();
                let f = BandMap::new((*src).clone(), (*tgt).clone(), map.clone()).unwrap();
                if !is_morphism(&f) {
                    continue;
                }
                // θ must send each D-class into a single D-class: θ = ⋃ θ_α
                for e in 0..n {
                    for e2 in 0..n {
                        if sc[e] == sc[e2] && tc[map[e]] != tc[map[e2]] {
                            return Some(format!(
                                "morphism {si}->{ti} splits the class of ({e}, {e2})"
                            ));
                        }
                    }
                }
                // and the induced class map must respect products
                for e in 0..n {
                    for f2 in 0..n {
                        if tc[map[src.mul(e, f2)]] != tc[tgt.mul(map[e], map[f2])] {
                            return Some(format!(
                                "morphism {si}->{ti}: induced class map breaks at ({e}, {f2})"
                            ));
                        }
                    }
                }
            }
        }
    }
    None
}

fn check_homogeneous_iff_rectangular(bands: &[&FiniteBand]) -> Option<String> {
    let small: Vec<&FiniteBand> = bands.iter().copied().filter(|b| b.order() <= 5).collect();
    let witness = exec::min_map(small.len(), |i| {
        let band = small[i];
        let homog = is_homogeneous(band).is_homogeneous();
        let rect = compute_green(band).d_classes.len() == 1;
        (homog != rect).then(|| format!("band of order {} (index {i}): homog={homog}", band.order()))
    });
    witness
}

/// Run the lemma suite over every band in the catalog. Raw-table checks run
/// on all entries; checks that presuppose a valid band skip entries that
/// fail validation (which is itself the first check).
pub fn verify_lemma_suite(catalog: &BandCatalog) -> SuiteReport {
    let all: Vec<&FiniteBand> = catalog.iter_all().map(|e| &e.band).collect();
    let valid: Vec<&FiniteBand> = all
        .iter()
        .copied()
        .filter(|b| FiniteBand::from_flat(b.order(), b.flat_table().to_vec()).is_ok())
        .collect();
    let mut checks = Vec::new();
    let mut run = |name: &'static str, f: &dyn Fn() -> Option<String>| {
        let start = Instant::now();
        let witness = f();
        checks.push(CheckReport {
            name,
            passed: witness.is_none(),
            witness,
            millis: start.elapsed().as_millis(),
        });
    };
    run("tables-valid", &|| {
        (valid.len() != all.len()).then(|| format!("{} invalid entries", all.len() - valid.len()))
    });
    run("subband-closure-monotone", &|| check_closure_monotone(&all));
    run("two-generated-bound", &|| check_two_generated(&all));
    run("class-products", &|| check_class_products(&all));
    run("normal-iff-strong", &|| check_normal_iff_strong(&valid));
    run("regular-iff-spined", &|| check_regular_iff_spined(&valid));
    run("r-order-local", &|| check_r_order_local(&valid));
    run("morphisms-decompose", &|| check_morphisms_decompose(&valid));
    run("homogeneous-iff-rectangular", &|| check_homogeneous_iff_rectangular(&valid));
    SuiteReport { checks }
}
