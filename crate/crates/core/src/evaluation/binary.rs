use crate::density::{divergence, DivergenceKind};
use crate::error::{Error, Result};
use crate::hierarchy::NodeId;
use crate::training::EmbeddingTable;

/// A candidate relation `u ⊨ v` with its ground-truth label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledPair {
    pub u: NodeId,
    pub v: NodeId,
    pub label: bool,
}

/// Labeled pairs for threshold tuning or testing. Duplicates are kept.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledPairSet {
    pub pairs: Vec<LabeledPair>,
}

impl LabeledPairSet {
    pub fn new(pairs: Vec<LabeledPair>) -> Self {
        Self { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.pairs.iter().filter(|p| p.label).count()
    }
}

/// A decision threshold and the accuracy it reaches on the tuning set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdFit {
    pub threshold: f64,
    pub accuracy: f64,
}

/// `D(f_u ‖ f_v)` (no threshold) for every pair.
pub fn pair_scores(
    set: &LabeledPairSet,
    table: &EmbeddingTable,
    kind: DivergenceKind,
) -> Result<Vec<(f64, bool)>> {
    set.pairs
        .iter()
        .map(|p| {
            table.check(p.u)?;
            table.check(p.v)?;
            Ok((divergence(kind, table.row(p.u), table.row(p.v))?, p.label))
        })
        .collect()
}

/// Fraction of pairs where `score < t` agrees with the label.
pub fn accuracy_at(scores: &[(f64, bool)], t: f64) -> f64 {
    if scores.is_empty() {
        return 0.0;
    }
    let correct = scores.iter().filter(|(s, l)| (*s < t) == *l).count();
    correct as f64 / scores.len() as f64
}

/// Threshold maximizing accuracy of the rule "true iff score < t".
///
/// Candidates are the midpoints between adjacent distinct scores plus one cut
/// below and one above all scores. Among equally accurate cuts the lowest
/// midpoint wins; the outer cuts are used only when strictly better.
pub fn best_threshold(scores: &[(f64, bool)]) -> Result<ThresholdFit> {
    let pos = scores.iter().filter(|(_, l)| *l).count();
    if pos == 0 || pos == scores.len() {
        return Err(Error::InvalidArgument(
            "threshold tuning needs both positive and negative pairs".into(),
        ));
    }
    if scores.iter().any(|(s, _)| !s.is_finite()) {
        return Err(Error::InvalidArgument("non-finite score".into()));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = sorted.len() as f64;
    let neg = sorted.len() - pos;

    // Cut below everything: all predicted false.
    let mut best_outer = ThresholdFit {
        threshold: sorted[0].0 - 1.0,
        accuracy: neg as f64 / n,
    };
    let mut best_mid: Option<ThresholdFit> = None;
    let (mut pos_below, mut neg_below) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let value = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == value {
            if sorted[i].1 {
                pos_below += 1;
            } else {
                neg_below += 1;
            }
            i += 1;
        }
        let acc = (pos_below + (neg - neg_below)) as f64 / n;
        if i < sorted.len() {
            let cut = 0.5 * (value + sorted[i].0);
            if best_mid.is_none_or(|b| acc > b.accuracy) {
                best_mid = Some(ThresholdFit {
                    threshold: cut,
                    accuracy: acc,
                });
            }
        } else if acc > best_outer.accuracy {
            best_outer = ThresholdFit {
                threshold: value + 1.0,
                accuracy: acc,
            };
        }
    }
    Ok(match best_mid {
        Some(mid) if mid.accuracy >= best_outer.accuracy => mid,
        _ => best_outer,
    })
}

/// Tunes the decision threshold on a validation set.
pub fn tune_threshold(
    val: &LabeledPairSet,
    table: &EmbeddingTable,
    kind: DivergenceKind,
) -> Result<ThresholdFit> {
    best_threshold(&pair_scores(val, table, kind)?)
}

/// Test accuracy at a fixed threshold.
pub fn binary_accuracy(
    test: &LabeledPairSet,
    t: f64,
    table: &EmbeddingTable,
    kind: DivergenceKind,
) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::InvalidArgument("threshold must be finite".into()));
    }
    Ok(accuracy_at(&pair_scores(test, table, kind)?, t))
}
