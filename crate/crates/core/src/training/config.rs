use std::fmt;
use std::str::FromStr;

use crate::density::{DivergenceKind, PenaltyConfig};
use crate::error::{Error, Result};
use crate::hierarchy::NegSpec;

/// Training objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Penalty on positives plus a hinge `max(0, m − d)` on negatives.
    Doe,
    /// Rank hinge `max(0, m + d(pos) − d(neg))` over positive/negative pairs.
    W2gRank,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Doe => "doe",
            LossKind::W2gRank => "w2g-rank",
        })
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "doe" => Ok(LossKind::Doe),
            "w2g-rank" | "w2g" | "rank" => Ok(LossKind::W2gRank),
            _ => Err(Error::InvalidArgument(format!("unknown loss '{s}'"))),
        }
    }
}

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Everything that determines a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub margin: f64,
    pub init_var: f64,
    pub gamma: f64,
    pub kind: DivergenceKind,
    pub dim: usize,
    pub neg: NegSpec,
    pub batch_size: usize,
    pub epochs: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    pub loss: LossKind,
    /// Project touched means back to unit norm after every step.
    pub renormalize_means: bool,
    /// Worker threads for per-batch gradients; 1 is bitwise reproducible.
    pub threads: usize,
}

impl Default for TrainConfig {
    /// The best KL setting: `m = 2000`, `β = 5e-5`, `γ = 500`, `d = 50`, S1+S2+S4.
    fn default() -> Self {
        Self {
            margin: 2000.0,
            init_var: 5e-5,
            gamma: 500.0,
            kind: DivergenceKind::Kl,
            dim: 50,
            neg: NegSpec::default(),
            batch_size: 500,
            epochs: 20,
            adam: AdamConfig::default(),
            seed: 0,
            loss: LossKind::Doe,
            renormalize_means: false,
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_string()));
        if !(self.margin > 0.0) || !self.margin.is_finite() {
            return bad("margin must be > 0");
        }
        if !(self.init_var > 0.0) || !self.init_var.is_finite() {
            return bad("initial variance must be > 0");
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return bad("threshold gamma must be >= 0");
        }
        if self.dim == 0 {
            return bad("dimension must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch size must be >= 1");
        }
        if self.threads == 0 {
            return bad("threads must be >= 1");
        }
        let a = &self.adam;
        if !(a.learning_rate > 0.0) || !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) || !(a.eps > 0.0) {
            return bad("invalid Adam settings");
        }
        Ok(())
    }

    pub fn penalty(&self) -> Result<PenaltyConfig> {
        PenaltyConfig::new(self.kind, self.gamma)
    }
}
