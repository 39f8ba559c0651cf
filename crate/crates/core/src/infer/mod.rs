//! Exact inference, model transformations and junction-tree sizing.

mod elimination;
mod transform;
mod triangulate;

pub use elimination::{
    elimination_order, variable_elimination, variable_elimination_with_order, NEGATIVE_TOLERANCE, ZERO_NORMALIZER_EPS,
};
pub use transform::{
    apply_factorization_transform, choose_factorization, divorce_network, factorize_network, parent_divorcing_transform,
};
pub use triangulate::{min_fill, moral_graph, moralize_and_triangulate, total_clique_size, CliqueReport, Graph};
