//! Hierarchy graphs, transitive closure and negative sampling.

mod graph;
mod sampling;
mod split;

pub use graph::{Closure, HierarchyGraph, NodeId, Pair};
pub use sampling::{
    make_negatives, make_negatives_tagged, sample, sample_s1, sample_s2, sample_s3,
    sample_s3_given, sample_s4, sample_s4_given, NegMethod, NegSpec, Negative, DEFAULT_RETRIES,
};
pub use split::{split_closure, Split};
