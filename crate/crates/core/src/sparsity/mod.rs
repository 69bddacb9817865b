//! Colorings of bounded local depth, generic covers, depth-first scaffoldings and tree
//! decompositions.

mod coloring;
mod cover;
mod scaffold;
mod treedec;

pub use coloring::{color_count, for_each_combination, treedepth_coloring};
pub use cover::{
    generic_cover_from_classes, generic_cover_from_coloring, load_cover, measure_genericity, Cover,
    Provenance, MAX_COVER_COLORS,
};
pub use scaffold::{
    dfs_forest, dfs_height, for_each_subset, member_sets, scaffolding_system, system_is_generic,
    Scaffolding,
};
pub use treedec::{
    separator_decomposition, validate_tree_decomposition, TreeDecomposition, Violation,
};
