use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::{adam_step, AdamState};
use super::config::{LossKind, TrainConfig};
use super::loss::{doe_loss, w2g_rank_loss, RankTriple};
use super::table::EmbeddingTable;
use crate::error::{Error, Result};
use crate::hierarchy::{make_negatives_tagged, Closure, Pair};

/// Per-epoch training record.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochReport {
    /// 1-based epoch number.
    pub epoch: usize,
    /// Summed batch loss divided by the number of positive pairs.
    pub train_loss: f64,
    pub val_accuracy: Option<f64>,
}

/// Result of [`train`].
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Snapshot with the best validation accuracy, or the last one if no
    /// validation score was reported.
    pub table: EmbeddingTable,
    pub best_epoch: Option<usize>,
    pub history: Vec<EpochReport>,
}

/// Trains on every pair of the closure. See [`train_on`].
pub fn train<F>(closure: &Closure, cfg: &TrainConfig, on_epoch: F) -> Result<TrainOutcome>
where
    F: FnMut(usize, &EmbeddingTable) -> Result<Option<f64>>,
{
    train_on(closure, closure.pairs(), cfg, on_epoch)
}

/// Trains Gaussian embeddings for every node of `closure` on `positives`.
///
/// Each epoch reshuffles the positives, cuts them into batches, draws
/// negatives per batch and takes one Adam step per batch. After every epoch
/// `on_epoch` may return a validation accuracy; the best-scoring snapshot is
/// returned.
pub fn train_on<F>(
    closure: &Closure,
    positives: &[Pair],
    cfg: &TrainConfig,
    mut on_epoch: F,
) -> Result<TrainOutcome>
where
    F: FnMut(usize, &EmbeddingTable) -> Result<Option<f64>>,
{
    cfg.validate()?;
    let n = closure.node_count();
    if n == 0 {
        return Err(Error::InvalidArgument("empty hierarchy".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut table = EmbeddingTable::init(n, cfg.dim, cfg.init_var, &mut rng)?;
    if cfg.epochs > 0 && positives.is_empty() {
        return Err(Error::InvalidArgument("no positive pairs to train on".into()));
    }
    let mut state = AdamState::new(&table);
    let mut order: Vec<Pair> = positives.to_vec();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, EmbeddingTable)> = None;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let negs = make_negatives_tagged(closure, batch, &cfg.neg, &mut rng)?;
            let (loss, grads) = match cfg.loss {
                LossKind::Doe => {
                    let neg: Vec<Pair> = negs.iter().map(|n| n.pair).collect();
                    doe_loss(batch, &neg, &table, cfg)?
                }
                LossKind::W2gRank => {
                    let triples: Vec<RankTriple> = negs
                        .iter()
                        .map(|n| RankTriple {
                            pos: batch[n.source],
                            neg: n.pair,
                        })
                        .collect();
                    if triples.is_empty() {
                        continue;
                    }
                    w2g_rank_loss(&triples, &table, cfg)?
                }
            };
            if !loss.is_finite() {
                return Err(Error::Diverged(format!(
                    "loss {loss} at epoch {epoch}, batch {b} (lr = {}, m = {}, beta = {}, gamma = {})",
                    cfg.adam.learning_rate, cfg.margin, cfg.init_var, cfg.gamma
                )));
            }
            epoch_loss += loss;
            adam_step(&mut table, &grads, &mut state, &cfg.adam)?;
            if cfg.renormalize_means {
                for &node in grads.nodes() {
                    table.normalize_mean(node);
                }
            }
        }
        let val_accuracy = on_epoch(epoch, &table)?;
        if let Some(acc) = val_accuracy {
            if best.as_ref().is_none_or(|(b, _, _)| acc > *b) {
                best = Some((acc, epoch, table.clone()));
            }
        }
        history.push(EpochReport {
            epoch,
            train_loss: epoch_loss / positives.len() as f64,
            val_accuracy,
        });
    }

    Ok(match best {
        Some((_, epoch, snapshot)) => TrainOutcome {
            table: snapshot,
            best_epoch: Some(epoch),
            history,
        },
        None => TrainOutcome {
            table,
            best_epoch: None,
            history,
        },
    })
}

/// Number of batches in one epoch.
pub fn batches_per_epoch(pairs: usize, batch_size: usize) -> usize {
    pairs.div_ceil(batch_size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::HierarchyGraph;

    fn tree() -> Closure {
        HierarchyGraph::from_edges(&[("a", "r"), ("b", "r"), ("c", "a"), ("d", "a")])
            .unwrap()
            .transitive_closure()
            .unwrap()
    }

    #[test]
    fn batch_count() {
        assert_eq!(batches_per_epoch(837_888, 500), 1676);
        assert_eq!(batches_per_epoch(1000, 500), 2);
    }

    #[test]
    fn zero_epochs_returns_initial_table() {
        let c = tree();
        let cfg = TrainConfig {
            epochs: 0,
            dim: 3,
            seed: 4,
            ..TrainConfig::default()
        };
        let out = train(&c, &cfg, |_, _| Ok(None)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let init = EmbeddingTable::init(5, 3, cfg.init_var, &mut rng).unwrap();
        assert_eq!(out.table, init);
        assert!(out.history.is_empty());
    }

    #[test]
    fn training_is_deterministic() {
        let c = tree();
        let cfg = TrainConfig {
            epochs: 5,
            dim: 2,
            margin: 10.0,
            gamma: 1.0,
            init_var: 1.0,
            batch_size: 2,
            ..TrainConfig::default()
        };
        let a = train(&c, &cfg, |_, _| Ok(None)).unwrap();
        let b = train(&c, &cfg, |_, _| Ok(None)).unwrap();
        assert_eq!(a.table, b.table);
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn best_snapshot_is_kept() {
        let c = tree();
        let cfg = TrainConfig {
            epochs: 4,
            dim: 2,
            margin: 10.0,
            gamma: 1.0,
            init_var: 1.0,
            ..TrainConfig::default()
        };
        let scores = [0.2, 0.9, 0.5, 0.9];
        let mut snaps = Vec::new();
        let out = train(&c, &cfg, |e, t| {
            snaps.push(t.clone());
            Ok(Some(scores[e - 1]))
        })
        .unwrap();
        assert_eq!(out.best_epoch, Some(2));
        assert_eq!(out.table, snaps[1]);
    }
}
