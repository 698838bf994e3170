use std::collections::HashMap;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::density::GaussianView;
use crate::error::{Error, Result};
use crate::hierarchy::NodeId;

/// Means and log-variances for `n` nodes in `d` dimensions, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    n: usize,
    d: usize,
    means: Vec<f64>,
    log_vars: Vec<f64>,
}

impl EmbeddingTable {
    pub fn from_parts(n: usize, d: usize, means: Vec<f64>, log_vars: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if means.len() != n * d || log_vars.len() != n * d {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries per array for n = {n}, d = {d}",
                n * d
            )));
        }
        Ok(Self {
            n,
            d,
            means,
            log_vars,
        })
    }

    /// Unit-norm means drawn from an isotropic Gaussian; every variance is `init_var`.
    pub fn init<R: Rng + ?Sized>(n: usize, d: usize, init_var: f64, rng: &mut R) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidArgument("need n >= 1 and d >= 1".into()));
        }
        if !(init_var > 0.0) || !init_var.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "initial variance must be positive, got {init_var}"
            )));
        }
        let mut means = Vec::with_capacity(n * d);
        for _ in 0..n {
            let start = means.len();
            loop {
                means.truncate(start);
                means.extend((0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
                let norm = means[start..].iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    means[start..].iter_mut().for_each(|x| *x /= norm);
                    break;
                }
            }
        }
        Ok(Self {
            n,
            d,
            means,
            log_vars: vec![init_var.ln(); n * d],
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn log_vars(&self) -> &[f64] {
        &self.log_vars
    }

    fn range(&self, i: usize) -> std::ops::Range<usize> {
        i * self.d..(i + 1) * self.d
    }

    pub fn check(&self, node: NodeId) -> Result<()> {
        if node.index() >= self.n {
            return Err(Error::InvalidArgument(format!(
                "node {node} out of range for table of {} rows",
                self.n
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn row(&self, node: NodeId) -> GaussianView<'_> {
        let r = self.range(node.index());
        GaussianView::unchecked(&self.means[r.clone()], &self.log_vars[r])
    }

    pub fn row_mut(&mut self, node: NodeId) -> (&mut [f64], &mut [f64]) {
        let r = self.range(node.index());
        (&mut self.means[r.clone()], &mut self.log_vars[r])
    }

    /// Rescales a node's mean to unit norm.
    pub fn normalize_mean(&mut self, node: NodeId) {
        let (mean, _) = self.row_mut(node);
        let norm = mean.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            mean.iter_mut().for_each(|x| *x /= norm);
        }
    }
}

/// Gradient rows for the nodes touched by a batch, in first-touch order.
#[derive(Debug, Clone, Default)]
pub struct SparseGrad {
    d: usize,
    slots: HashMap<NodeId, usize>,
    nodes: Vec<NodeId>,
    mean: Vec<f64>,
    log_var: Vec<f64>,
}

impl SparseGrad {
    pub fn new(d: usize) -> Self {
        Self {
            d,
            ..Default::default()
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    fn slot(&mut self, node: NodeId) -> usize {
        let d = self.d;
        *self.slots.entry(node).or_insert_with(|| {
            self.nodes.push(node);
            self.mean.resize(self.mean.len() + d, 0.0);
            self.log_var.resize(self.log_var.len() + d, 0.0);
            self.nodes.len() - 1
        })
    }

    /// Marks `node` as touched (with a zero gradient if new).
    pub fn touch(&mut self, node: NodeId) {
        self.slot(node);
    }

    /// Adds `(d_mean, d_log_var)` to the row of `node`.
    pub fn add(&mut self, node: NodeId, d_mean: &[f64], d_log_var: &[f64]) {
        self.add_scaled(node, d_mean, d_log_var, 1.0);
    }

    /// Adds `scale · (d_mean, d_log_var)` to the row of `node`.
    pub fn add_scaled(&mut self, node: NodeId, d_mean: &[f64], d_log_var: &[f64], scale: f64) {
        let s = self.slot(node) * self.d;
        for (a, b) in self.mean[s..s + self.d].iter_mut().zip(d_mean) {
            *a += scale * b;
        }
        for (a, b) in self.log_var[s..s + self.d].iter_mut().zip(d_log_var) {
            *a += scale * b;
        }
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn get(&self, node: NodeId) -> Option<(&[f64], &[f64])> {
        self.slots.get(&node).map(|&s| {
            let r = s * self.d..(s + 1) * self.d;
            (&self.mean[r.clone()], &self.log_var[r])
        })
    }

    pub fn rows(&self) -> impl Iterator<Item = (NodeId, &[f64], &[f64])> {
        self.nodes.iter().enumerate().map(move |(s, &node)| {
            let r = s * self.d..(s + 1) * self.d;
            (node, &self.mean[r.clone()], &self.log_var[r])
        })
    }

    /// Adds every row of `other` into `self`.
    pub fn merge(&mut self, other: &SparseGrad) {
        for (node, m, l) in other.rows() {
            self.add(node, m, l);
        }
    }
}
