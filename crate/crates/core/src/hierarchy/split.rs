use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::graph::{Closure, Pair};
use super::sampling::sample_s1;
use crate::error::{Error, Result};
use crate::evaluation::{LabeledPair, LabeledPairSet};

/// Training positives plus labeled validation and test sets.
#[derive(Debug, Clone)]
pub struct Split {
    /// Closure pairs not held out, in closure order.
    pub train: Vec<Pair>,
    pub val: LabeledPairSet,
    pub test: LabeledPairSet,
}

/// Holds out `n_val + n_test` closure pairs as positives and pairs each with
/// one S1 corruption as a negative.
///
/// Held-out positives are removed from the training positives; negatives are
/// checked against the full closure.
pub fn split_closure(closure: &Closure, n_val: usize, n_test: usize, seed: u64) -> Result<Split> {
    let pairs = closure.pairs();
    let held = n_val + n_test;
    if held > pairs.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot hold out {held} of {} closure pairs",
            pairs.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = sample_indices(&mut rng, pairs.len(), held).into_vec();
    let mut is_held = vec![false; pairs.len()];
    for &i in &picked {
        is_held[i] = true;
    }
    let mut labeled = |idx: &[usize]| -> Result<LabeledPairSet> {
        let mut out = Vec::with_capacity(2 * idx.len());
        for &i in idx {
            let pos = pairs[i];
            out.push(LabeledPair {
                u: pos.0,
                v: pos.1,
                label: true,
            });
            let neg = sample_s1(closure, pos, &mut rng)?;
            out.push(LabeledPair {
                u: neg.0,
                v: neg.1,
                label: false,
            });
        }
        Ok(LabeledPairSet::new(out))
    };
    let val = labeled(&picked[..n_val])?;
    let test = labeled(&picked[n_val..])?;
    let train = pairs
        .iter()
        .zip(&is_held)
        .filter(|(_, h)| !**h)
        .map(|(p, _)| *p)
        .collect();
    Ok(Split { train, val, test })
}
