use crate::density::{divergence, log_det_volume, DivergenceKind};
use crate::error::Result;
use crate::hierarchy::NodeId;
use crate::training::EmbeddingTable;

/// Pairwise divergences laid out as `matrix[row][col] = D(f_col ‖ f_row)`,
/// so a small entry suggests "column ⊨ row". The diagonal is zero.
pub fn kl_matrix(
    nodes: &[NodeId],
    table: &EmbeddingTable,
    kind: DivergenceKind,
) -> Result<Vec<Vec<f64>>> {
    for &n in nodes {
        table.check(n)?;
    }
    nodes
        .iter()
        .enumerate()
        .map(|(r, &row)| {
            nodes
                .iter()
                .enumerate()
                .map(|(c, &col)| {
                    if r == c {
                        Ok(0.0)
                    } else {
                        divergence(kind, table.row(col), table.row(row))
                    }
                })
                .collect()
        })
        .collect()
}

/// `(name, log det Σ)` sorted by volume, largest first; ties by name.
pub fn volume_report<S: AsRef<str>>(
    nodes: &[(S, NodeId)],
    table: &EmbeddingTable,
) -> Result<Vec<(String, f64)>> {
    let mut out = nodes
        .iter()
        .map(|(name, id)| {
            table.check(*id)?;
            Ok((name.as_ref().to_owned(), log_det_volume(table.row(*id))))
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(out)
}
