//! Quality control and fusion for multi-annotator binary segmentation
//! masks.
//!
//! The crate covers the full desk pipeline: post-processing raw
//! annotation images into clean binary masks ([`mask`]), measuring
//! pairwise agreement with the Dice score and excluding annotators by
//! median agreement ([`agreement`]), fusing a cohort into consensus and
//! disagreement maps ([`consensus`]), and simulating annotator cohorts
//! from a known truth for verification ([`synthetic`]).
//!
//! All operations are pure functions over immutable inputs, so values may
//! be freely shared across threads. The crate is `no_std` (with `alloc`);
//! file formats and the command-line pipeline live in the companion
//! `maskfuse` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod agreement;
pub mod consensus;
mod error;
pub mod mask;
pub mod synthetic;

pub use agreement::{
    AgreementMatrix, AnnotationSet, FilterRecord, FilterReport, dice, filter_annotators,
    median_agreement, pairwise_matrix,
};
pub use consensus::{
    ProbabilityMap, SemanticSplit, disagreement, intersection, mean_map, semantic_split,
    threshold_map, union,
};
pub use error::{Error, Result};
pub use mask::{
    AlphaPolicy, Connectivity, LabelMap, Mask, RawImage, binarize, connected_components,
    remove_speckles, subtract_background,
};
pub use synthetic::{
    AnnotatorProfile, GroundTruthScene, add_speckle, drop_add_components, perturb_boundary,
    simulate_annotator, simulate_cohort,
};
