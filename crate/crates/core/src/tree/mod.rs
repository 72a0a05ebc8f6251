//! Stable-tree marginals, the Galton–Watson height-path surrogate, and the
//! fragmentation at heights read off a discrete height path.

pub mod fragment;
pub mod gw;
pub mod root_mark;
pub mod skeleton;

pub use fragment::{
    check_refinement, fragment_at_height, fragment_intervals, fragmentation_levels, tagged_leaf_statistics,
    tagged_ratio_targets, MomentRatioReport,
};
pub use gw::{cycle_lemma_rotation, sample_conditioned_gw_tree, DiscreteHeightPath, GwTreeSampler, OffspringLaw};
pub use root_mark::{root_mark_density, root_mark_moment, sample_root_mark, RootMarkSampler};
pub use skeleton::{
    enumerate_skeletons, first_split_partition, sample_skeleton, skeleton_probability, MarkedTree, PlaneTree,
    SkeletonTable, MAX_SKELETON_LEAVES,
};
