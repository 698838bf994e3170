use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::hierarchy::NegMethod;

/// Largest graph the brute-force closure accepts.
pub const BRUTE_MAX_NODES: usize = 200;

/// Largest graph the sampler enumeration accepts.
pub const ENUM_MAX_NODES: usize = 50;

type NamePair = (String, String);

/// Adjacency over names: child → direct parents.
fn parents(edges: &[NamePair]) -> BTreeMap<&str, BTreeSet<&str>> {
    let mut adj: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (c, p) in edges {
        adj.entry(c).or_default().insert(p);
        adj.entry(p).or_default();
    }
    adj
}

/// All `(u, v)` with `v` reachable from `u` by one or more edges, found by a
/// separate DFS from every node.
pub fn brute_closure(edges: &[NamePair]) -> Result<BTreeSet<NamePair>> {
    let adj = parents(edges);
    if adj.len() > BRUTE_MAX_NODES {
        return Err(Error::InvalidArgument(format!(
            "brute-force closure is limited to {BRUTE_MAX_NODES} nodes, got {}",
            adj.len()
        )));
    }
    let mut out = BTreeSet::new();
    for &start in adj.keys() {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<&str> = adj[start].iter().copied().collect();
        while let Some(v) = stack.pop() {
            if v == start {
                return Err(Error::Data(format!("cycle through '{start}'")));
            }
            if seen.insert(v) {
                stack.extend(adj[v].iter().copied());
            }
        }
        out.extend(seen.into_iter().map(|v| (start.to_owned(), v.to_owned())));
    }
    Ok(out)
}

/// What the enumerated sampler is conditioned on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SupportQuery {
    /// The positive pair handed to S1 or S2.
    Positive(String, String),
    /// A fixed `(w, u)` anchor for S3 or S4.
    Anchor(String, String),
    /// S3 or S4 with the anchor drawn by the sampler.
    Free,
}

struct View<'a> {
    nodes: Vec<&'a str>,
    closure: BTreeSet<NamePair>,
}

impl<'a> View<'a> {
    fn holds(&self, u: &str, v: &str) -> bool {
        self.closure.contains(&(u.to_owned(), v.to_owned()))
    }

    /// `A(w)`: `w` and everything below it.
    fn below(&self, w: &str) -> BTreeSet<&'a str> {
        self.nodes
            .iter()
            .copied()
            .filter(|&x| x == w || self.holds(x, w))
            .collect()
    }
}

fn add(out: &mut BTreeMap<NamePair, f64>, v: &str, u: &str, p: f64) {
    *out.entry((v.to_owned(), u.to_owned())).or_default() += p;
}

/// Exact output distribution of one negative-sampling draw.
///
/// * S1: uniform over single-side corruptions that are not the positive, not
///   a self pair and not in the closure.
/// * S2: the swapped pair.
/// * S3: `w` uniform over nodes with `|A(w)| > 2`, `u` uniform over
///   `A(w) − {w}`, `v` uniform over `A(w) − A(u)`.
/// * S4: as S3 over `A(w) − A(u) − {w}`, conditioned on that set being
///   non-empty.
pub fn enumerate_sampler_support(
    edges: &[NamePair],
    method: NegMethod,
    query: &SupportQuery,
) -> Result<BTreeMap<NamePair, f64>> {
    let adj = parents(edges);
    if adj.len() > ENUM_MAX_NODES {
        return Err(Error::InvalidArgument(format!(
            "enumeration is limited to {ENUM_MAX_NODES} nodes, got {}",
            adj.len()
        )));
    }
    let view = View {
        nodes: adj.keys().copied().collect(),
        closure: brute_closure(edges)?,
    };
    let mut out = BTreeMap::new();
    match (method, query) {
        (NegMethod::S1, SupportQuery::Positive(a, b)) => {
            let mut valid = BTreeSet::new();
            for &x in &view.nodes {
                for cand in [(x, b.as_str()), (a.as_str(), x)] {
                    if cand != (a.as_str(), b.as_str())
                        && cand.0 != cand.1
                        && !view.holds(cand.0, cand.1)
                    {
                        valid.insert(cand);
                    }
                }
            }
            let p = 1.0 / valid.len() as f64;
            for (x, y) in valid {
                add(&mut out, x, y, p);
            }
        }
        (NegMethod::S2, SupportQuery::Positive(a, b)) => add(&mut out, b, a, 1.0),
        (NegMethod::S3 | NegMethod::S4, SupportQuery::Anchor(w, u)) => {
            let cand = candidates(&view, w, u, method == NegMethod::S4);
            let p = 1.0 / cand.len() as f64;
            for v in cand {
                add(&mut out, v, u, p);
            }
        }
        (NegMethod::S3 | NegMethod::S4, SupportQuery::Free) => {
            let eligible: Vec<&str> = view
                .nodes
                .iter()
                .copied()
                .filter(|&w| view.below(w).len() > 2)
                .collect();
            for &w in &eligible {
                let lower: Vec<&str> = view.below(w).into_iter().filter(|&u| u != w).collect();
                let p_anchor = 1.0 / eligible.len() as f64 / lower.len() as f64;
                for &u in &lower {
                    let cand = candidates(&view, w, u, method == NegMethod::S4);
                    for &v in &cand {
                        add(&mut out, v, u, p_anchor / cand.len() as f64);
                    }
                }
            }
            // S4 redraws empty anchors: renormalize over the rest.
            let mass: f64 = out.values().sum();
            for p in out.values_mut() {
                *p /= mass;
            }
        }
        _ => {
            return Err(Error::InvalidArgument(format!(
                "{method} cannot be enumerated for {query:?}"
            )))
        }
    }
    Ok(out)
}

fn candidates<'a>(view: &View<'a>, w: &str, u: &str, exclude_w: bool) -> Vec<&'a str> {
    let above_u = view.below(u);
    view.below(w)
        .into_iter()
        .filter(|&v| !above_u.contains(v) && !(exclude_w && v == w))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(list: &[(&str, &str)]) -> Vec<NamePair> {
        list.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    fn tree() -> Vec<NamePair> {
        e(&[("a", "r"), ("b", "r"), ("c", "a"), ("d", "a")])
    }

    fn p(a: &str, b: &str) -> NamePair {
        (a.into(), b.into())
    }

    #[test]
    fn closures() {
        assert_eq!(brute_closure(&e(&[("c", "a"), ("a", "r")])).unwrap().len(), 3);
        assert_eq!(brute_closure(&tree()).unwrap().len(), 6);
        assert!(matches!(
            brute_closure(&e(&[("a", "b"), ("b", "a")])),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn s2_and_s4_examples() {
        let s2 = enumerate_sampler_support(
            &e(&[("c", "a"), ("a", "r")]),
            NegMethod::S2,
            &SupportQuery::Positive("c".into(), "a".into()),
        )
        .unwrap();
        assert_eq!(s2.into_iter().collect::<Vec<_>>(), vec![(p("a", "c"), 1.0)]);
        let s4 = enumerate_sampler_support(
            &tree(),
            NegMethod::S4,
            &SupportQuery::Anchor("a".into(), "c".into()),
        )
        .unwrap();
        assert_eq!(s4.into_iter().collect::<Vec<_>>(), vec![(p("d", "c"), 1.0)]);
    }

    #[test]
    fn s3_anchor_r_c_is_uniform_over_four() {
        let s3 = enumerate_sampler_support(
            &tree(),
            NegMethod::S3,
            &SupportQuery::Anchor("r".into(), "c".into()),
        )
        .unwrap();
        let keys: Vec<_> = s3.keys().cloned().collect();
        assert_eq!(keys, vec![p("a", "c"), p("b", "c"), p("d", "c"), p("r", "c")]);
        assert!(s3.values().all(|&x| x == 0.25));
    }

    #[test]
    fn s1_avoids_closure() {
        let edges = tree();
        let closure = brute_closure(&edges).unwrap();
        let s1 = enumerate_sampler_support(
            &edges,
            NegMethod::S1,
            &SupportQuery::Positive("c".into(), "a".into()),
        )
        .unwrap();
        assert!(!s1.is_empty());
        assert!(s1.keys().all(|k| !closure.contains(k) && k.0 != k.1));
        assert!((s1.values().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn free_distributions_sum_to_one() {
        for m in [NegMethod::S3, NegMethod::S4] {
            let d = enumerate_sampler_support(&tree(), m, &SupportQuery::Free).unwrap();
            assert!((d.values().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
