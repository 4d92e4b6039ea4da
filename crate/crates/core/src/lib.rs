//! Nonparametric graph pooling by maximal cliques.
//!
//! Pipeline: [`cliques::maximal_cliques`] finds every maximal clique,
//! [`coarsen::assign_pools`] hands nodes to cliques greedily by size,
//! [`coarsen::coarsen_graph`] builds the pooled graph, and
//! [`hierarchy::build_hierarchy`] repeats this until each connected component
//! is a single node. [`grid`] covers images as 8-connected grids, [`model`]
//! a small GCN / GraphSAGE classifier built on the pooling, and [`io`] the
//! file formats used by the `clique-pool` binary.

#[cfg(feature = "cli")]
pub mod cli;
pub mod cliques;
pub mod coarsen;
pub mod error;
pub mod generate;
pub mod graph;
pub mod grid;
pub mod hierarchy;
pub mod io;
pub mod matrix;
pub mod model;

pub use cliques::{maximal_cliques, maximal_cliques_bruteforce, CliqueSet, DegeneracyOrder};
pub use coarsen::{
    assign_pools, coarsen_graph, pool_features, pool_matrix, Assignment, PoolMatrix, Readout,
};
pub use error::{Error, Result};
pub use graph::{build_graph, connected_components, pairwise_distance_sum, ComponentLabels, Graph};
pub use hierarchy::{build_hierarchy, Hierarchy, HierarchyOptions};
pub use matrix::FeatureMatrix;
