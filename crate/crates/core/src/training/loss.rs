//! Batch losses with sparse analytic gradients.
//!
//! Both losses use the thresholded penalty `d(u, v) = max(0, D(f_u ‖ f_v) − γ)`.

use rayon::prelude::*;

use super::config::TrainConfig;
use super::table::{EmbeddingTable, SparseGrad};
use crate::density::{eval_divergence, DivergenceKind, GradSink};
use crate::error::{Error, Result};
use crate::hierarchy::{NodeId, Pair};

/// A positive pair contrasted with one negative pair in the rank loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankTriple {
    pub pos: Pair,
    pub neg: Pair,
}

impl RankTriple {
    /// The `(w, c_p, c_n)` form: `pos = (w, c_p)`, `neg = (w, c_n)`.
    pub fn from_words(w: NodeId, cp: NodeId, cn: NodeId) -> Self {
        Self {
            pos: (w, cp),
            neg: (w, cn),
        }
    }
}

/// Divergence and its gradient for one pair, reused across pairs.
struct PairGrad {
    mean_f: Vec<f64>,
    log_var_f: Vec<f64>,
    mean_g: Vec<f64>,
    log_var_g: Vec<f64>,
}

impl PairGrad {
    fn new(d: usize) -> Self {
        Self {
            mean_f: vec![0.0; d],
            log_var_f: vec![0.0; d],
            mean_g: vec![0.0; d],
            log_var_g: vec![0.0; d],
        }
    }

    /// `D(f_u ‖ f_v)` with `∇D` left in the buffers.
    fn eval(&mut self, table: &EmbeddingTable, kind: DivergenceKind, (u, v): Pair) -> Result<f64> {
        for b in [
            &mut self.mean_f,
            &mut self.log_var_f,
            &mut self.mean_g,
            &mut self.log_var_g,
        ] {
            b.fill(0.0);
        }
        let mut sink = GradSink {
            mean_f: &mut self.mean_f,
            log_var_f: &mut self.log_var_f,
            mean_g: &mut self.mean_g,
            log_var_g: &mut self.log_var_g,
        };
        eval_divergence(kind, table.row(u), table.row(v), Some(&mut sink), 1.0)
    }

    fn push(&self, grad: &mut SparseGrad, (u, v): Pair, scale: f64) {
        grad.add_scaled(u, &self.mean_f, &self.log_var_f, scale);
        grad.add_scaled(v, &self.mean_g, &self.log_var_g, scale);
    }
}

struct Scratch {
    first: PairGrad,
    second: PairGrad,
}

impl Scratch {
    fn new(d: usize) -> Self {
        Self {
            first: PairGrad::new(d),
            second: PairGrad::new(d),
        }
    }
}

fn check_pairs(table: &EmbeddingTable, pairs: impl IntoIterator<Item = Pair>) -> Result<()> {
    for (u, v) in pairs {
        table.check(u)?;
        table.check(v)?;
    }
    Ok(())
}

/// Runs `term` over `items`, summing losses and gradients.
///
/// With `threads > 1` the items are split into `threads` contiguous chunks
/// whose partial results are merged in chunk order.
fn accumulate<T, F>(items: &[T], d: usize, threads: usize, term: F) -> Result<(f64, SparseGrad)>
where
    T: Sync,
    F: Fn(&T, &mut Scratch, &mut SparseGrad) -> Result<f64> + Sync,
{
    let run = |chunk: &[T]| -> Result<(f64, SparseGrad)> {
        let mut scratch = Scratch::new(d);
        let mut grad = SparseGrad::new(d);
        let mut loss = 0.0;
        for item in chunk {
            loss += term(item, &mut scratch, &mut grad)?;
        }
        Ok((loss, grad))
    };
    if threads <= 1 || items.len() < 2 * threads {
        return run(items);
    }
    let chunk = items.len().div_ceil(threads);
    let parts: Vec<Result<(f64, SparseGrad)>> = items.par_chunks(chunk).map(run).collect();
    let mut loss = 0.0;
    let mut grad = SparseGrad::new(d);
    for part in parts {
        let (l, g) = part?;
        loss += l;
        grad.merge(&g);
    }
    Ok((loss, grad))
}

/// `Σ_pos d(u, v) + Σ_neg max(0, m − d(u', v'))` and its gradient.
pub fn doe_loss(
    pos: &[Pair],
    neg: &[Pair],
    table: &EmbeddingTable,
    cfg: &TrainConfig,
) -> Result<(f64, SparseGrad)> {
    if pos.is_empty() {
        return Err(Error::InvalidArgument("empty positive batch".into()));
    }
    check_pairs(table, pos.iter().chain(neg).copied())?;
    let (kind, gamma, margin) = (cfg.kind, cfg.gamma, cfg.margin);
    let d = table.dim();

    let (pos_loss, mut grad) = accumulate(pos, d, cfg.threads, |&p, scratch, grad| {
        let div = scratch.first.eval(table, kind, p)?;
        if div > gamma {
            scratch.first.push(grad, p, 1.0);
            Ok(div - gamma)
        } else {
            Ok(0.0)
        }
    })?;
    let (neg_loss, neg_grad) = accumulate(neg, d, cfg.threads, |&p, scratch, grad| {
        let div = scratch.first.eval(table, kind, p)?;
        let pen = (div - gamma).max(0.0);
        if pen < margin {
            // pen == 0 leaves the hinge at m with zero slope
            if pen > 0.0 {
                scratch.first.push(grad, p, -1.0);
            }
            Ok(margin - pen)
        } else {
            Ok(0.0)
        }
    })?;
    grad.merge(&neg_grad);
    Ok((pos_loss + neg_loss, grad))
}

/// `Σ max(0, m + d(pos) − d(neg))` and its gradient.
pub fn w2g_rank_loss(
    triples: &[RankTriple],
    table: &EmbeddingTable,
    cfg: &TrainConfig,
) -> Result<(f64, SparseGrad)> {
    if triples.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    check_pairs(table, triples.iter().flat_map(|t| [t.pos, t.neg]))?;
    let (kind, gamma, margin) = (cfg.kind, cfg.gamma, cfg.margin);
    let d = table.dim();
    accumulate(triples, d, cfg.threads, |t, scratch, grad| {
        let pos_div = scratch.first.eval(table, kind, t.pos)?;
        let neg_div = scratch.second.eval(table, kind, t.neg)?;
        let term = margin + (pos_div - gamma).max(0.0) - (neg_div - gamma).max(0.0);
        if term <= 0.0 {
            return Ok(0.0);
        }
        if pos_div > gamma {
            scratch.first.push(grad, t.pos, 1.0);
        }
        if neg_div > gamma {
            scratch.second.push(grad, t.neg, -1.0);
        }
        Ok(term)
    })
}
