//! End-to-end runs: train, select by validation accuracy, evaluate, and
//! sweep over hyperparameter grids.

use rayon::prelude::*;

use crate::density::DivergenceKind;
use crate::error::{Error, Result};
use crate::evaluation::{
    binary_accuracy, evaluate_graded, tune_threshold, GradedPair, GradedReport, LabeledPairSet,
    ThresholdFit,
};
use crate::hierarchy::{Closure, NegSpec, Pair};
use crate::training::{train_on, EmbeddingTable, EpochReport, LossKind, TrainConfig};

/// Inputs shared by every run.
#[derive(Debug, Clone, Copy)]
pub struct RunData<'a> {
    pub closure: &'a Closure,
    /// Training positives; usually the closure minus held-out pairs.
    pub train: &'a [Pair],
    pub val: &'a LabeledPairSet,
    pub test: Option<&'a LabeledPairSet>,
    pub graded: Option<&'a [GradedPair]>,
}

/// Outcome of one run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub table: EmbeddingTable,
    pub history: Vec<EpochReport>,
    pub best_epoch: Option<usize>,
    /// Threshold tuned on the validation set for the selected snapshot.
    pub threshold: ThresholdFit,
    pub test_accuracy: Option<f64>,
    pub graded: Option<GradedReport>,
}

/// Trains with per-epoch validation, keeps the best snapshot and evaluates it.
pub fn run(data: RunData<'_>, cfg: &TrainConfig) -> Result<RunResult> {
    run_with(data, cfg, |_, _| {})
}

/// [`run`] with a hook receiving `(epoch, validation accuracy)` as training
/// proceeds.
pub fn run_with<F>(data: RunData<'_>, cfg: &TrainConfig, mut on_epoch: F) -> Result<RunResult>
where
    F: FnMut(usize, f64),
{
    let kind = cfg.kind;
    let out = train_on(data.closure, data.train, cfg, |epoch, table| {
        let fit = tune_threshold(data.val, table, kind)?;
        on_epoch(epoch, fit.accuracy);
        Ok(Some(fit.accuracy))
    })?;
    let threshold = tune_threshold(data.val, &out.table, kind)?;
    let test_accuracy = data
        .test
        .map(|t| binary_accuracy(t, threshold.threshold, &out.table, kind))
        .transpose()?;
    let graded = data
        .graded
        .map(|g| evaluate_graded(g, &out.table, kind))
        .transpose()?;
    Ok(RunResult {
        table: out.table,
        history: out.history,
        best_epoch: out.best_epoch,
        threshold,
        test_accuracy,
        graded,
    })
}

/// Value lists whose cross product defines a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub margins: Vec<f64>,
    pub init_vars: Vec<f64>,
    pub gammas: Vec<f64>,
    pub kinds: Vec<DivergenceKind>,
    pub dims: Vec<usize>,
    pub negs: Vec<NegSpec>,
    pub losses: Vec<LossKind>,
}

impl SweepGrid {
    /// A one-cell grid holding the values of `cfg`.
    pub fn single(cfg: &TrainConfig) -> Self {
        Self {
            margins: vec![cfg.margin],
            init_vars: vec![cfg.init_var],
            gammas: vec![cfg.gamma],
            kinds: vec![cfg.kind],
            dims: vec![cfg.dim],
            negs: vec![cfg.neg],
            losses: vec![cfg.loss],
        }
    }

    pub fn len(&self) -> usize {
        self.margins.len()
            * self.init_vars.len()
            * self.gammas.len()
            * self.kinds.len()
            * self.dims.len()
            * self.negs.len()
            * self.losses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// One config per cell, in row-major order over the fields above.
    pub fn cells(&self, base: &TrainConfig) -> Result<Vec<TrainConfig>> {
        if self.is_empty() {
            return Err(Error::InvalidArgument("every sweep grid must be non-empty".into()));
        }
        let mut out = Vec::with_capacity(self.len());
        for &margin in &self.margins {
            for &init_var in &self.init_vars {
                for &gamma in &self.gammas {
                    for &kind in &self.kinds {
                        for &dim in &self.dims {
                            for &neg in &self.negs {
                                for &loss in &self.losses {
                                    out.push(TrainConfig {
                                        margin,
                                        init_var,
                                        gamma,
                                        kind,
                                        dim,
                                        neg,
                                        loss,
                                        ..base.clone()
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Summary numbers of a finished cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub best_epoch: Option<usize>,
    pub val_accuracy: f64,
    pub threshold: f64,
    pub test_accuracy: Option<f64>,
    pub spearman: Option<f64>,
}

/// One sweep row; failed cells keep their error message.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub cfg: TrainConfig,
    pub outcome: std::result::Result<CellSummary, String>,
}

/// Runs every cell of `grid`. A failing cell is recorded and the sweep goes on.
pub fn sweep(
    data: RunData<'_>,
    grid: &SweepGrid,
    base: &TrainConfig,
    parallel: bool,
) -> Result<Vec<SweepRow>> {
    let cells = grid.cells(base)?;
    let one = |cfg: TrainConfig| {
        let outcome = run(data, &cfg)
            .map(|r| CellSummary {
                best_epoch: r.best_epoch,
                val_accuracy: r.threshold.accuracy,
                threshold: r.threshold.threshold,
                test_accuracy: r.test_accuracy,
                spearman: r.graded.map(|g| g.spearman_rho),
            })
            .map_err(|e| e.to_string());
        SweepRow { cfg, outcome }
    };
    Ok(if parallel {
        cells.into_par_iter().map(one).collect()
    } else {
        cells.into_iter().map(one).collect()
    })
}

/// Tab-separated header matching [`sweep_row_tsv`].
pub const SWEEP_HEADER: &str =
    "margin\tinit_var\tgamma\tkind\tdim\tneg\tloss\tstatus\tbest_epoch\tval_accuracy\tthreshold\ttest_accuracy\tspearman";

/// One summary line for a sweep row.
pub fn sweep_row_tsv(row: &SweepRow) -> String {
    let c = &row.cfg;
    let head = format!(
        "{}\t{}\t{}\t{}\t{}\t{}\t{}",
        c.margin, c.init_var, c.gamma, c.kind, c.dim, c.neg, c.loss
    );
    let opt = |x: Option<f64>| x.map_or_else(|| "NA".to_owned(), |v| v.to_string());
    match &row.outcome {
        Ok(s) => format!(
            "{head}\tok\t{}\t{}\t{}\t{}\t{}",
            s.best_epoch.map_or_else(|| "NA".to_owned(), |e| e.to_string()),
            s.val_accuracy,
            s.threshold,
            opt(s.test_accuracy),
            opt(s.spearman)
        ),
        Err(msg) => format!(
            "{head}\tfailed: {}\tNA\tNA\tNA\tNA\tNA",
            msg.replace(['\t', '\n'], " ")
        ),
    }
}
