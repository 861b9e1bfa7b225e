//! Computations with finite bands (idempotent semigroups).
//!
//! A *band* is a semigroup in which every element is idempotent. This crate
//! represents finite bands as validated Cayley tables and provides:
//!
//! - Green's relations, the natural partial order, and class partitions
//!   ([`green`]);
//! - the semilattice-of-rectangular-bands decomposition, strong-semilattice
//!   reconstruction for normal bands, and spined-product factorisation for
//!   regular bands ([`decomp`]);
//! - membership tests for the classical band varieties and the inclusion
//!   lattice between them ([`variety`]);
//! - constructors for rectangular bands, semilattices, strong semilattices,
//!   spined/direct products, image-trivial truncations, and covering chains
//!   ([`construct`]);
//! - homogeneity decision procedures built on partial-isomorphism extension
//!   ([`homog`]);
//! - amalgamation and joint-embedding searches plus stage-chain construction
//!   toward universal objects ([`fraisse`]);
//! - isomorph-free exhaustive enumeration with a persistent catalog format
//!   ([`catalog`]).
//!
//! With the default `parallel` feature the heavy sweeps (identity checking,
//! enumeration, homogeneity searches, catalog verification) run on rayon;
//! without it, or after [`exec::force_sequential`], they run sequentially and
//! produce identical results.

pub mod band;
pub mod catalog;
pub mod construct;
pub mod decomp;
pub mod exec;
pub mod fraisse;
pub mod green;
pub mod homog;
pub mod variety;

pub use band::{
    all_subbands, free_band_two, generate_subband, is_morphism, BandError, BandMap, ElementSet,
    FiniteBand,
};
pub use catalog::{
    catalog_load, catalog_store, enumerate_bands, enumerate_semilattices, verify_lemma_suite,
    BandCatalog, CatalogEntry, CatalogError, SuiteReport,
};
pub use construct::{
    build_d_covering_chain, build_direct, build_image_trivial_truncation, build_rectangular,
    build_semilattice_band, build_spined, build_strong, ConeAssignment, ConstructError,
    SemilinearTruncation, StrongSemilatticeSpec,
};
pub use decomp::{
    analyze_semilinear, connecting_image_kernel, mclean_decompose, reconstruct_strong_semilattice,
    spined_decompose, DecompError, McLeanDecomposition, SemilinearAnalysis, SpinedDecomposition,
};
pub use fraisse::{
    all_embeddings, amalgamate, audit_extension_property, embedding_extending, grow_stage,
    joint_embed, search_ap_failure, Amalgam, AmalgamStrategy, AmalgamationProblem, ApFailure,
    ClassConstraint, ExtensionAudit, ExtensionInstance, FraisseError, SearchLimits, StageChain,
};
pub use green::{
    below_in_class, compute_green, l_closure_below, r_closure_below, support, GreenError,
    GreenProfile,
};
pub use homog::{
    classify_finite, extend_to_automorphism, find_isomorphism, is_homogeneous, is_k_homogeneous,
    is_structure_homogeneous, Classification, HomogError, HomogWitness, HomogeneityVerdict,
    PartialIsomorphism,
};
pub use variety::{satisfies_identity, variety_profile, Identity, VarietyError, VarietyProfile};
