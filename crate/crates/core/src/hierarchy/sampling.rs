//! Negative samples for hierarchy training.
//!
//! * S1: corrupt one side of a true pair with a uniformly drawn node.
//! * S2: swap a true pair.
//! * S3: pick a node `w` with at least two proper descendants, a proper
//!   descendant `u`, and `v ∈ A(w) − A(u)`; emit `(v, u)`.
//! * S4: as S3 with `v ∈ A(w) − A(u) − {w}`.
//!
//! Every sampler takes the caller's RNG so streams are reproducible per seed.

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::graph::{Closure, NodeId, Pair};
use crate::error::{Error, Result};

/// Retry budget for the rejection samplers.
pub const DEFAULT_RETRIES: usize = 100;

/// Rejection attempts for `v` before falling back to an explicit set difference.
const V_REJECTION_TRIES: usize = 32;

/// One of the four negative-sampling methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NegMethod {
    S1,
    S2,
    S3,
    S4,
}

impl NegMethod {
    pub const ALL: [NegMethod; 4] = [NegMethod::S1, NegMethod::S2, NegMethod::S3, NegMethod::S4];
}

impl fmt::Display for NegMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NegMethod::S1 => "s1",
            NegMethod::S2 => "s2",
            NegMethod::S3 => "s3",
            NegMethod::S4 => "s4",
        };
        f.write_str(s)
    }
}

/// Per-positive sample counts for each method.
///
/// A weight `k + p` with integer `k` and `p ∈ [0, 1)` emits `k` samples plus
/// one more with probability `p`, so `0.1` for S2 means an S2 swap for about
/// one positive in ten.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegSpec {
    weights: [f64; 4],
}

impl NegSpec {
    pub fn new(s1: f64, s2: f64, s3: f64, s4: f64) -> Result<Self> {
        let weights = [s1, s2, s3, s4];
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "negative-sample weights must be finite and >= 0: {weights:?}"
            )));
        }
        if weights.iter().all(|w| *w == 0.0) {
            return Err(Error::InvalidArgument(
                "at least one negative-sample weight must be positive".into(),
            ));
        }
        Ok(Self { weights })
    }

    pub fn weight(&self, method: NegMethod) -> f64 {
        self.weights[method as usize]
    }

    /// Expected negatives per positive.
    pub fn expected_per_positive(&self) -> f64 {
        self.weights.iter().sum()
    }
}

impl Default for NegSpec {
    /// One S1, one S2 and one S4 sample per positive.
    fn default() -> Self {
        Self {
            weights: [1.0, 1.0, 0.0, 1.0],
        }
    }
}

impl fmt::Display for NegSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for m in NegMethod::ALL {
            let w = self.weight(m);
            if w > 0.0 {
                if !first {
                    f.write_str(",")?;
                }
                write!(f, "{m}:{w}")?;
                first = false;
            }
        }
        Ok(())
    }
}

impl FromStr for NegSpec {
    type Err = Error;

    /// Parses `s1:1,s2:1,s4:1`; a bare method name means weight 1.
    fn from_str(s: &str) -> Result<Self> {
        let mut w = [0.0; 4];
        for part in s.split([',', '+']).map(str::trim).filter(|p| !p.is_empty()) {
            let (name, weight) = match part.split_once(':') {
                Some((n, x)) => (
                    n.trim(),
                    x.trim().parse::<f64>().map_err(|_| {
                        Error::InvalidArgument(format!("bad weight in negative spec '{part}'"))
                    })?,
                ),
                None => (part, 1.0),
            };
            let idx = match name.to_ascii_lowercase().as_str() {
                "s1" => 0,
                "s2" => 1,
                "s3" => 2,
                "s4" => 3,
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "unknown negative-sampling method '{name}'"
                    )))
                }
            };
            w[idx] += weight;
        }
        NegSpec::new(w[0], w[1], w[2], w[3])
    }
}

/// S1: replace the left or right element (probability ½ each) with a node
/// drawn uniformly, rejecting the positive itself, self pairs and pairs in
/// the closure. After `DEFAULT_RETRIES` rejections the draw is uniform over
/// the enumerated valid corruptions, which is the same distribution.
pub fn sample_s1<R: Rng + ?Sized>(closure: &Closure, pos: Pair, rng: &mut R) -> Result<Pair> {
    let n = closure.node_count();
    if n < 2 {
        return Err(Error::Sampling("S1 needs at least two nodes".into()));
    }
    let ok = |cand: Pair| cand != pos && cand.0 != cand.1 && !closure.contains(cand);
    for _ in 0..DEFAULT_RETRIES {
        let node = NodeId(rng.random_range(0..n as u32));
        let cand = if rng.random_bool(0.5) {
            (node, pos.1)
        } else {
            (pos.0, node)
        };
        if ok(cand) {
            return Ok(cand);
        }
    }
    let candidates: Vec<Pair> = (0..n as u32)
        .map(NodeId)
        .flat_map(|x| [(x, pos.1), (pos.0, x)])
        .filter(|&c| ok(c))
        .collect();
    if candidates.is_empty() {
        return Err(Error::Sampling(format!(
            "S1 has no valid corruption of ({}, {})",
            closure.name(pos.0),
            closure.name(pos.1)
        )));
    }
    Ok(candidates[rng.random_range(0..candidates.len())])
}

/// S2: the reversed pair.
#[inline]
pub fn sample_s2(pos: Pair) -> Pair {
    (pos.1, pos.0)
}

/// S3: `(v, u)` for random eligible `w`, `u ∈ A(w) − {w}`, `v ∈ A(w) − A(u)`.
pub fn sample_s3<R: Rng + ?Sized>(closure: &Closure, rng: &mut R) -> Result<Pair> {
    let (w, u) = draw_anchor(closure, rng)?;
    Ok((draw_v(closure, w, u, false, rng), u))
}

/// S3 with the anchor `(w, u)` fixed.
pub fn sample_s3_given<R: Rng + ?Sized>(
    closure: &Closure,
    w: NodeId,
    u: NodeId,
    rng: &mut R,
) -> Result<Pair> {
    check_anchor(closure, w, u)?;
    Ok((draw_v(closure, w, u, false, rng), u))
}

/// S4: as S3 but `v ≠ w`; anchors with an empty candidate set are redrawn.
/// After `DEFAULT_RETRIES` redraws the anchor comes from the enumerated
/// nonempty anchors with their original weights.
pub fn sample_s4<R: Rng + ?Sized>(closure: &Closure, rng: &mut R) -> Result<Pair> {
    for _ in 0..DEFAULT_RETRIES {
        let (w, u) = draw_anchor(closure, rng)?;
        if s4_candidates(closure, w, u) > 0 {
            return Ok((draw_v(closure, w, u, true, rng), u));
        }
    }
    let mut anchors = Vec::new();
    let mut weights = Vec::new();
    for &w in closure.eligible_nodes() {
        let p = 1.0 / (closure.descendants(w).len() - 1) as f64;
        for &u in closure.descendants(w) {
            if u != w && s4_candidates(closure, w, u) > 0 {
                anchors.push((w, u));
                weights.push(p);
            }
        }
    }
    if anchors.is_empty() {
        return Err(Error::Sampling(
            "every S4 anchor has an empty A(w) - A(u) - {w}".into(),
        ));
    }
    let pick = WeightedIndex::new(&weights).expect("positive weights");
    let (w, u) = anchors[pick.sample(rng)];
    Ok((draw_v(closure, w, u, true, rng), u))
}

/// S4 with the anchor `(w, u)` fixed.
pub fn sample_s4_given<R: Rng + ?Sized>(
    closure: &Closure,
    w: NodeId,
    u: NodeId,
    rng: &mut R,
) -> Result<Pair> {
    check_anchor(closure, w, u)?;
    if s4_candidates(closure, w, u) == 0 {
        return Err(Error::Sampling(format!(
            "A(w) - A(u) - {{w}} is empty for w = '{}', u = '{}'",
            closure.name(w),
            closure.name(u)
        )));
    }
    Ok((draw_v(closure, w, u, true, rng), u))
}

/// `|A(w) − A(u) − {w}|`; `A(u) ⊂ A(w)` and `w ∉ A(u)` for a proper descendant `u`.
#[inline]
fn s4_candidates(closure: &Closure, w: NodeId, u: NodeId) -> usize {
    closure.descendants(w).len() - closure.descendants(u).len() - 1
}

fn check_anchor(closure: &Closure, w: NodeId, u: NodeId) -> Result<()> {
    if w == u || !closure.is_descendant(u, w) {
        return Err(Error::InvalidArgument(format!(
            "'{}' is not a proper descendant of '{}'",
            closure.name(u),
            closure.name(w)
        )));
    }
    Ok(())
}

fn draw_anchor<R: Rng + ?Sized>(closure: &Closure, rng: &mut R) -> Result<(NodeId, NodeId)> {
    let eligible = closure.eligible_nodes();
    if eligible.is_empty() {
        return Err(Error::Sampling(
            "no node has at least two proper descendants".into(),
        ));
    }
    let w = eligible[rng.random_range(0..eligible.len())];
    let desc = closure.descendants(w);
    // Uniform over A(w) − {w}: draw from the other len − 1 slots.
    let self_pos = desc.binary_search(&w).expect("w ∈ A(w)");
    let mut k = rng.random_range(0..desc.len() - 1);
    if k >= self_pos {
        k += 1;
    }
    Ok((w, desc[k]))
}

/// Uniform draw from `A(w) − A(u)` (minus `w` when `exclude_w`).
fn draw_v<R: Rng + ?Sized>(
    closure: &Closure,
    w: NodeId,
    u: NodeId,
    exclude_w: bool,
    rng: &mut R,
) -> NodeId {
    let desc = closure.descendants(w);
    let ok = |v: NodeId| !(exclude_w && v == w) && !closure.is_descendant(v, u);
    for _ in 0..V_REJECTION_TRIES {
        let v = desc[rng.random_range(0..desc.len())];
        if ok(v) {
            return v;
        }
    }
    let candidates: Vec<NodeId> = desc.iter().copied().filter(|&v| ok(v)).collect();
    candidates[rng.random_range(0..candidates.len())]
}

/// Draws one negative with `method` for the positive `pos`.
pub fn sample<R: Rng + ?Sized>(
    closure: &Closure,
    method: NegMethod,
    pos: Pair,
    rng: &mut R,
) -> Result<Pair> {
    match method {
        NegMethod::S1 => sample_s1(closure, pos, rng),
        NegMethod::S2 => Ok(sample_s2(pos)),
        NegMethod::S3 => sample_s3(closure, rng),
        NegMethod::S4 => sample_s4(closure, rng),
    }
}

/// A negative pair and the index of the positive it was drawn for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Negative {
    pub source: usize,
    pub pair: Pair,
}

/// Negatives for a batch, tagged with the index of their positive.
///
/// Per positive the methods run in order S1, S2, S3, S4.
pub fn make_negatives_tagged<R: Rng + ?Sized>(
    closure: &Closure,
    batch: &[Pair],
    spec: &NegSpec,
    rng: &mut R,
) -> Result<Vec<Negative>> {
    let mut out = Vec::with_capacity((batch.len() as f64 * spec.expected_per_positive()).ceil() as usize);
    for (source, &pos) in batch.iter().enumerate() {
        for method in NegMethod::ALL {
            let w = spec.weight(method);
            if w == 0.0 {
                continue;
            }
            let whole = w.floor();
            let frac = w - whole;
            let mut count = whole as usize;
            if frac > 0.0 && rng.random_bool(frac) {
                count += 1;
            }
            for _ in 0..count {
                out.push(Negative {
                    source,
                    pair: sample(closure, method, pos, rng)?,
                });
            }
        }
    }
    Ok(out)
}

/// Negatives for a batch of positives according to `spec`.
pub fn make_negatives<R: Rng + ?Sized>(
    closure: &Closure,
    batch: &[Pair],
    spec: &NegSpec,
    rng: &mut R,
) -> Result<Vec<Pair>> {
    Ok(make_negatives_tagged(closure, batch, spec, rng)?
        .into_iter()
        .map(|n| n.pair)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::HierarchyGraph;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tree() -> Closure {
        HierarchyGraph::from_edges(&[("a", "r"), ("b", "r"), ("c", "a"), ("d", "a")])
            .unwrap()
            .transitive_closure()
            .unwrap()
    }

    fn chain() -> Closure {
        HierarchyGraph::from_edges(&[("c", "a"), ("a", "r")])
            .unwrap()
            .transitive_closure()
            .unwrap()
    }

    fn id(c: &Closure, n: &str) -> NodeId {
        c.id(n).unwrap()
    }

    #[test]
    fn s2_swaps() {
        let c = chain();
        let p = (id(&c, "c"), id(&c, "a"));
        assert_eq!(sample_s2(p), (id(&c, "a"), id(&c, "c")));
        assert_eq!(sample_s2(sample_s2(p)), p);
    }

    #[test]
    fn s1_on_chain_only_yields_reverse_corruption() {
        let c = chain();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pos = (id(&c, "c"), id(&c, "a"));
        for _ in 0..200 {
            assert_eq!(sample_s1(&c, pos, &mut rng).unwrap(), (id(&c, "r"), id(&c, "a")));
        }
    }

    #[test]
    fn s1_exhausts_on_two_nodes() {
        let c = HierarchyGraph::from_edges(&[("a", "b")])
            .unwrap()
            .transitive_closure()
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pos = (id(&c, "a"), id(&c, "b"));
        assert!(matches!(sample_s1(&c, pos, &mut rng), Err(Error::Sampling(_))));
    }

    #[test]
    fn s3_and_s4_given_anchor() {
        let c = tree();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (r, a, b, cc, d) = (id(&c, "r"), id(&c, "a"), id(&c, "b"), id(&c, "c"), id(&c, "d"));
        for _ in 0..200 {
            let (v, u) = sample_s3_given(&c, r, cc, &mut rng).unwrap();
            assert_eq!(u, cc);
            assert!([r, a, b, d].contains(&v));
            let (v, _) = sample_s3_given(&c, a, cc, &mut rng).unwrap();
            assert!([a, d].contains(&v));
            let (v, _) = sample_s4_given(&c, r, cc, &mut rng).unwrap();
            assert!([a, b, d].contains(&v));
            assert_eq!(sample_s4_given(&c, a, cc, &mut rng).unwrap(), (d, cc));
        }
    }

    #[test]
    fn s4_redraws_empty_anchor_on_chain() {
        let c = chain();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (r, a, cc) = (id(&c, "r"), id(&c, "a"), id(&c, "c"));
        assert!(sample_s4_given(&c, r, a, &mut rng).is_err());
        for _ in 0..100 {
            assert_eq!(sample_s4(&c, &mut rng).unwrap(), (a, cc));
        }
    }

    #[test]
    fn s3_requires_eligible_nodes() {
        let c = HierarchyGraph::from_edges(&[("a", "b")])
            .unwrap()
            .transitive_closure()
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(matches!(sample_s3(&c, &mut rng), Err(Error::Sampling(_))));
    }

    #[test]
    fn negative_counts() {
        let c = tree();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let batch: Vec<Pair> = c.pairs().to_vec();
        let spec: NegSpec = "s1:1,s2:1,s4:1".parse().unwrap();
        let negs = make_negatives(&c, &batch, &spec, &mut rng).unwrap();
        assert_eq!(negs.len(), 3 * batch.len());
        let spec: NegSpec = "s1:2".parse().unwrap();
        let negs = make_negatives(&c, &batch, &spec, &mut rng).unwrap();
        assert_eq!(negs.len(), 2 * batch.len());
    }

    #[test]
    fn negspec_parsing() {
        assert!("".parse::<NegSpec>().is_err());
        assert!("s5:1".parse::<NegSpec>().is_err());
        assert!("s1:-1".parse::<NegSpec>().is_err());
        let s: NegSpec = "s1 + s2:0.1".parse().unwrap();
        assert_eq!(s.weight(NegMethod::S1), 1.0);
        assert_eq!(s.weight(NegMethod::S2), 0.1);
        let s: NegSpec = "s1,s2:0.3,s3:0.7".parse().unwrap();
        assert_eq!(s.to_string().parse::<NegSpec>().unwrap(), s);
        assert_eq!(NegSpec::default().to_string(), "s1:1,s2:1,s4:1");
    }
}
