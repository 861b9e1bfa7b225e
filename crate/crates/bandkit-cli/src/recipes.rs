//! JSON recipes consumed by `construct --spec` and `amalgamate --problem`.

use std::collections::BTreeMap;

use bandkit::band::{BandMap, FiniteBand};
use bandkit::construct::{
    build_d_covering_chain, build_direct, build_image_trivial_truncation, build_rectangular,
    build_semilattice_band, build_spined, build_strong, ConeAssignment, SemilinearTruncation,
    StrongSemilatticeSpec,
};
use bandkit::fraisse::{AmalgamationProblem, ClassConstraint};
use serde::Deserialize;

use crate::doc::JsonBand;

/// A finite poset given by its order (or a covering subset of it); the
/// reflexive-transitive closure is taken and meets must exist.
#[derive(Debug, Clone, Deserialize)]
pub struct PosetRecipe {
    pub n: usize,
    #[serde(default)]
    pub leq: Vec<(usize, usize)>,
}

impl PosetRecipe {
    pub fn build(&self) -> Result<FiniteBand, String> {
        build_semilattice_band(self.n, &self.leq).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Deserialize)]
pub struct StrongRecipe {
    pub y: PosetRecipe,
    /// `(rows, cols)` of the rectangular class over each semilattice element.
    pub dims: Vec<(usize, usize)>,
    /// Connecting maps for the comparable pairs, on row-major local indices.
    #[serde(default)]
    pub psi: Vec<PsiEntry>,
}

#[derive(Debug, Deserialize)]
pub struct PsiEntry {
    pub from: usize,
    pub to: usize,
    pub map: Vec<usize>,
}

pub fn build_strong_recipe(recipe: &StrongRecipe) -> Result<FiniteBand, String> {
    let y = recipe.y.build()?;
    let mut psi = BTreeMap::new();
    for entry in &recipe.psi {
        if psi.insert((entry.from, entry.to), entry.map.clone()).is_some() {
            return Err(format!(
                "duplicate connecting map for pair ({}, {})",
                entry.from, entry.to
            ));
        }
    }
    let spec =
        StrongSemilatticeSpec::new(y, recipe.dims.clone(), psi).map_err(|e| e.to_string())?;
    build_strong(&spec).map_err(|e| e.to_string())
}

#[derive(Debug, Deserialize)]
pub struct SpinedRecipe {
    pub left: JsonBand,
    pub right: JsonBand,
    pub spine: JsonBand,
    /// Image in the spine of each left (resp. right) element.
    pub left_map: Vec<usize>,
    pub right_map: Vec<usize>,
}

pub fn build_spined_recipe(recipe: &SpinedRecipe) -> Result<FiniteBand, String> {
    let left = recipe.left.build()?;
    let right = recipe.right.build()?;
    let spine = recipe.spine.build()?;
    let to_y_left = BandMap::new(left.clone(), spine.clone(), recipe.left_map.clone())
        .map_err(|e| e.to_string())?;
    let to_y_right = BandMap::new(right.clone(), spine.clone(), recipe.right_map.clone())
        .map_err(|e| e.to_string())?;
    build_spined(&left, &right, &to_y_left, &to_y_right).map_err(|e| e.to_string())
}

#[derive(Debug, Deserialize)]
pub struct DirectRecipe {
    pub y: PosetRecipe,
    pub n: usize,
    pub m: usize,
}

pub fn build_direct_recipe(recipe: &DirectRecipe) -> Result<FiniteBand, String> {
    let y = recipe.y.build()?;
    build_direct(&y, recipe.n, recipe.m).map_err(|e| e.to_string())
}

#[derive(Debug, Deserialize)]
pub struct ImageTrivialRecipe {
    /// Parent of each tree node; exactly one `null` (the root).
    pub parents: Vec<Option<usize>>,
    pub n: usize,
    pub m: usize,
    /// Cone-multiplicity bound.
    pub k: usize,
    /// Local cone target in the parent class per node (root entry ignored).
    pub eps: Vec<usize>,
}

pub fn build_image_trivial_recipe(recipe: &ImageTrivialRecipe) -> Result<FiniteBand, String> {
    let tree = SemilinearTruncation::from_parents(&recipe.parents).map_err(|e| e.to_string())?;
    let spec = build_image_trivial_truncation(
        &tree,
        recipe.n,
        recipe.m,
        recipe.k,
        &ConeAssignment::new(recipe.eps.clone()),
    )
    .map_err(|e| e.to_string())?;
    build_strong(&spec).map_err(|e| e.to_string())
}

#[derive(Debug, Deserialize)]
pub struct ChainRecipe {
    pub levels: usize,
    pub n: usize,
    pub m: usize,
}

pub fn build_chain_recipe(recipe: &ChainRecipe) -> Result<FiniteBand, String> {
    build_d_covering_chain(recipe.levels, recipe.n, recipe.m).map_err(|e| e.to_string())
}

pub fn build_rect(rows: usize, cols: usize) -> Result<FiniteBand, String> {
    build_rectangular(rows, cols).map_err(|e| e.to_string())
}

/// An amalgamation problem: a base band embedded into two parts.
#[derive(Debug, Deserialize)]
pub struct ProblemRecipe {
    /// Band class the amalgam must stay in (`all-bands`, `normal`,
    /// `left-normal`, `right-normal`, `semilattices`).
    pub class: String,
    pub base: JsonBand,
    pub part1: JsonBand,
    pub part2: JsonBand,
    /// Image in part1 (resp. part2) of each base element.
    pub leg1: Vec<usize>,
    pub leg2: Vec<usize>,
}

pub fn build_problem(recipe: &ProblemRecipe) -> Result<AmalgamationProblem, String> {
    let constraint: ClassConstraint = recipe.class.parse().map_err(|e: String| e)?;
    let base = recipe.base.build()?;
    let part1 = recipe.part1.build()?;
    let part2 = recipe.part2.build()?;
    let f1 = BandMap::new(base.clone(), part1.clone(), recipe.leg1.clone())
        .map_err(|e| e.to_string())?;
    let f2 = BandMap::new(base.clone(), part2.clone(), recipe.leg2.clone())
        .map_err(|e| e.to_string())?;
    AmalgamationProblem::new(base, part1, part2, f1, f2, constraint).map_err(|e| e.to_string())
}
