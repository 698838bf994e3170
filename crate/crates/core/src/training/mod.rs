//! Losses, initialization, the Adam optimizer and the minibatch loop.

mod adam;
mod config;
mod loss;
mod table;
mod trainer;

pub use adam::{adam_step, AdamState};
pub use config::{AdamConfig, LossKind, TrainConfig};
pub use loss::{doe_loss, w2g_rank_loss, RankTriple};
pub use table::{EmbeddingTable, SparseGrad};
pub use trainer::{batches_per_epoch, train, train_on, EpochReport, TrainOutcome};
