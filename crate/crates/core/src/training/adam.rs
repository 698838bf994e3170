use super::config::AdamConfig;
use super::table::{EmbeddingTable, SparseGrad};
use crate::error::{Error, Result};

/// Adam moments for every parameter of an [`EmbeddingTable`].
///
/// Updates are lazy: only rows present in the gradient have their moments
/// decayed and their parameters moved. The step counter is global.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m_mean: Vec<f64>,
    v_mean: Vec<f64>,
    m_log_var: Vec<f64>,
    v_log_var: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(table: &EmbeddingTable) -> Self {
        let len = table.len() * table.dim();
        Self {
            m_mean: vec![0.0; len],
            v_mean: vec![0.0; len],
            m_log_var: vec![0.0; len],
            v_log_var: vec![0.0; len],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }
}

/// One bias-corrected Adam step on the rows touched by `grads`.
pub fn adam_step(
    table: &mut EmbeddingTable,
    grads: &SparseGrad,
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<()> {
    if grads.dim() != table.dim() || state.m_mean.len() != table.len() * table.dim() {
        return Err(Error::InvalidArgument("gradient/optimizer shape mismatch".into()));
    }
    for (node, dm, dl) in grads.rows() {
        table.check(node)?;
        if dm.iter().chain(dl).any(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                node: node.index(),
                message: "non-finite gradient".into(),
            });
        }
    }

    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    let d = table.dim();
    for (node, dm, dl) in grads.rows() {
        let off = node.index() * d;
        let (mean, log_var) = table.row_mut(node);
        update(mean, dm, &mut state.m_mean[off..off + d], &mut state.v_mean[off..off + d], cfg, c1, c2);
        update(
            log_var,
            dl,
            &mut state.m_log_var[off..off + d],
            &mut state.v_log_var[off..off + d],
            cfg,
            c1,
            c2,
        );
    }
    Ok(())
}

#[inline]
fn update(param: &mut [f64], grad: &[f64], m: &mut [f64], v: &mut [f64], cfg: &AdamConfig, c1: f64, c2: f64) {
    for i in 0..param.len() {
        let g = grad[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        param[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::NodeId;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut table = EmbeddingTable::from_parts(1, 1, vec![0.5], vec![0.0]).unwrap();
        let mut state = AdamState::new(&table);
        let mut g = SparseGrad::new(1);
        g.add(NodeId(0), &[1.0], &[0.0]);
        let cfg = AdamConfig {
            learning_rate: 0.1,
            ..AdamConfig::default()
        };
        adam_step(&mut table, &g, &mut state, &cfg).unwrap();
        assert!((table.means()[0] - (0.5 - 0.1)).abs() < 1e-8);
        assert_eq!(table.log_vars()[0], 0.0);
        assert_eq!(state.steps(), 1);
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut table = EmbeddingTable::from_parts(2, 2, vec![1.0, 2.0, 3.0, 4.0], vec![0.0; 4]).unwrap();
        let before = table.clone();
        let mut state = AdamState::new(&table);
        let mut g = SparseGrad::new(2);
        g.touch(NodeId(1));
        adam_step(&mut table, &g, &mut state, &AdamConfig::default()).unwrap();
        assert_eq!(table, before);
    }

    #[test]
    fn non_finite_gradient_names_node() {
        let mut table = EmbeddingTable::from_parts(3, 1, vec![0.0; 3], vec![0.0; 3]).unwrap();
        let mut state = AdamState::new(&table);
        let mut g = SparseGrad::new(1);
        g.add(NodeId(2), &[f64::NAN], &[0.0]);
        match adam_step(&mut table, &g, &mut state, &AdamConfig::default()) {
            Err(Error::NonFinite { node, .. }) => assert_eq!(node, 2),
            other => panic!("{other:?}"),
        }
        assert_eq!(state.steps(), 0);
    }
}
