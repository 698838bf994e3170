//! File formats: edge and pair TSVs, checkpoints and flat config files.

mod checkpoint;
mod config;
mod tsv;

pub use checkpoint::{load_checkpoint, parse_checkpoint, save_checkpoint, Checkpoint, CheckpointMeta};
pub use config::{load_config, normalize_key, parse_key_values};
pub use tsv::{
    graded_pairs, load_edges, load_graded, load_labeled_pairs, load_synset_map, parse_edges,
    write_labeled_pairs, write_pairs,
};
