use crate::density::{divergence, DivergenceKind};
use crate::error::{Error, Result};
use crate::hierarchy::NodeId;
use crate::training::EmbeddingTable;

/// A human-scored word pair and the synsets each word may denote.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedPair {
    pub word_u: String,
    pub word_v: String,
    pub gold: f64,
    pub synsets_u: Vec<NodeId>,
    pub synsets_v: Vec<NodeId>,
}

/// Spearman correlation and the per-pair model scores behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedReport {
    pub spearman_rho: f64,
    /// Model scores after imputation, aligned with the input pairs.
    pub scores: Vec<f64>,
    /// How many pairs had no synset on one side.
    pub missing: usize,
}

/// `−min D(s_u ‖ s_v)` over all synset pairs, or `None` if either side has
/// no synsets.
pub fn graded_score(
    pair: &GradedPair,
    table: &EmbeddingTable,
    kind: DivergenceKind,
) -> Result<Option<f64>> {
    if pair.synsets_u.is_empty() || pair.synsets_v.is_empty() {
        return Ok(None);
    }
    let mut best = f64::INFINITY;
    for &su in &pair.synsets_u {
        table.check(su)?;
        for &sv in &pair.synsets_v {
            table.check(sv)?;
            best = best.min(divergence(kind, table.row(su), table.row(sv))?);
        }
    }
    Ok(Some(-best))
}

/// Median; the mean of the two central values for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 0 {
        0.5 * (v[mid - 1] + v[mid])
    } else {
        v[mid]
    })
}

/// Replaces missing scores with the median of the present ones.
pub fn impute_missing(scores: &[Option<f64>]) -> Result<Vec<f64>> {
    let present: Vec<f64> = scores.iter().flatten().copied().collect();
    let fill = median(&present)
        .ok_or_else(|| Error::InvalidArgument("every score is missing".into()))?;
    Ok(scores.iter().map(|s| s.unwrap_or(fill)).collect())
}

/// 1-based ranks with ties sharing their average rank.
pub fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && values[idx[j]] == values[idx[i]] {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

/// Spearman rank correlation (Pearson correlation of fractional ranks).
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::InvalidArgument("need at least two observations".into()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite value".into()));
    }
    let rx = fractional_ranks(xs);
    let ry = fractional_ranks(ys);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("an input has constant ranks".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Scores every pair, imputes missing ones and correlates with the gold scores.
pub fn evaluate_graded(
    pairs: &[GradedPair],
    table: &EmbeddingTable,
    kind: DivergenceKind,
) -> Result<GradedReport> {
    let raw = pairs
        .iter()
        .map(|p| graded_score(p, table, kind))
        .collect::<Result<Vec<_>>>()?;
    let missing = raw.iter().filter(|s| s.is_none()).count();
    let scores = impute_missing(&raw)?;
    let gold: Vec<f64> = pairs.iter().map(|p| p.gold).collect();
    Ok(GradedReport {
        spearman_rho: spearman(&scores, &gold)?,
        scores,
        missing,
    })
}
