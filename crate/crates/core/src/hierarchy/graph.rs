use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};

/// Dense index of a concept in a [`HierarchyGraph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Ordered pair `(u, v)` claiming `u ⊨ v` (u is a hyponym of v).
pub type Pair = (NodeId, NodeId);

#[inline]
fn pair_key((u, v): Pair) -> u64 {
    (u64::from(u.0) << 32) | u64::from(v.0)
}

/// Interned concept names and the direct `(child, parent)` edges between them.
#[derive(Debug, Clone, Default)]
pub struct HierarchyGraph {
    names: Vec<String>,
    ids: HashMap<String, NodeId>,
    edges: Vec<Pair>,
}

impl HierarchyGraph {
    /// Builds a graph from `(child, parent)` name pairs. Duplicate edges are
    /// dropped; self-loops and empty names are rejected.
    pub fn from_edges<S: AsRef<str>>(edges: &[(S, S)]) -> Result<Self> {
        let mut graph = Self::default();
        let mut seen = HashSet::with_capacity(edges.len());
        for (child, parent) in edges {
            let (child, parent) = (child.as_ref(), parent.as_ref());
            if child == parent {
                return Err(Error::InvalidArgument(format!("self-loop edge on '{child}'")));
            }
            let c = graph.intern(child)?;
            let p = graph.intern(parent)?;
            if seen.insert(pair_key((c, p))) {
                graph.edges.push((c, p));
            }
        }
        Ok(graph)
    }

    /// Returns the id of `name`, adding an isolated node if it is new.
    pub fn intern(&mut self, name: &str) -> Result<NodeId> {
        if name.is_empty() {
            return Err(Error::InvalidArgument("empty node name".into()));
        }
        if let Some(&id) = self.ids.get(name) {
            return Ok(id);
        }
        let id = NodeId(
            u32::try_from(self.names.len())
                .map_err(|_| Error::InvalidArgument("too many nodes".into()))?,
        );
        self.names.push(name.to_owned());
        self.ids.insert(name.to_owned(), id);
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.names[id.index()]
    }

    pub fn id(&self, name: &str) -> Option<NodeId> {
        self.ids.get(name).copied()
    }

    pub fn direct_edges(&self) -> &[Pair] {
        &self.edges
    }

    /// Computes all reachable `(u, v)` pairs and the descendant sets.
    ///
    /// Fails with a data error naming a node on a cycle if the graph is not a DAG.
    pub fn transitive_closure(self) -> Result<Closure> {
        let n = self.len();
        let mut parents: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &(c, p) in &self.edges {
            parents[c.index()].push(p.0);
        }

        // Iterative post-order DFS over parent links; ancestors of a node are
        // finished before the node itself.
        const NEW: u8 = 0;
        const OPEN: u8 = 1;
        const DONE: u8 = 2;
        let mut state = vec![NEW; n];
        let mut ancestors: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut stack: Vec<(u32, usize)> = Vec::new();
        for root in 0..n as u32 {
            if state[root as usize] != NEW {
                continue;
            }
            stack.push((root, 0));
            state[root as usize] = OPEN;
            while let Some(top) = stack.last_mut() {
                let node = top.0;
                let ps = &parents[node as usize];
                if top.1 < ps.len() {
                    let p = ps[top.1];
                    top.1 += 1;
                    match state[p as usize] {
                        NEW => {
                            state[p as usize] = OPEN;
                            stack.push((p, 0));
                        }
                        OPEN => {
                            return Err(Error::Data(format!(
                                "hierarchy contains a cycle through '{}'",
                                self.names[p as usize]
                            )));
                        }
                        _ => {}
                    }
                } else {
                    let mut acc: Vec<u32> = Vec::new();
                    for &p in ps {
                        acc.push(p);
                        acc.extend_from_slice(&ancestors[p as usize]);
                    }
                    acc.sort_unstable();
                    acc.dedup();
                    ancestors[node as usize] = acc;
                    state[node as usize] = DONE;
                    stack.pop();
                }
            }
        }

        let total: usize = ancestors.iter().map(Vec::len).sum();
        let mut pairs = Vec::with_capacity(total);
        let mut pair_set = HashSet::with_capacity(total);
        let mut descendants: Vec<Vec<NodeId>> = (0..n as u32).map(|w| vec![NodeId(w)]).collect();
        for (u, anc) in ancestors.iter().enumerate() {
            let u = NodeId(u as u32);
            for &v in anc {
                let v = NodeId(v);
                pairs.push((u, v));
                pair_set.insert(pair_key((u, v)));
                descendants[v.index()].push(u);
            }
        }
        for d in &mut descendants {
            d.sort_unstable();
        }
        let eligible = (0..n as u32)
            .map(NodeId)
            .filter(|w| descendants[w.index()].len() > 2)
            .collect();

        Ok(Closure {
            graph: self,
            pairs,
            pair_set,
            descendants,
            eligible,
        })
    }
}

/// A hierarchy together with its transitive closure.
///
/// Immutable once built; samplers borrow it.
#[derive(Debug, Clone)]
pub struct Closure {
    graph: HierarchyGraph,
    pairs: Vec<Pair>,
    pair_set: HashSet<u64>,
    descendants: Vec<Vec<NodeId>>,
    eligible: Vec<NodeId>,
}

impl Closure {
    pub fn graph(&self) -> &HierarchyGraph {
        &self.graph
    }

    pub fn node_count(&self) -> usize {
        self.graph.len()
    }

    /// All `(u, v)` with `u ≠ v` and `v` reachable from `u`, sorted.
    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    /// Whether `u ⊨ v` holds in the closure (never true for `u == v`).
    #[inline]
    pub fn contains(&self, pair: Pair) -> bool {
        self.pair_set.contains(&pair_key(pair))
    }

    /// `A(w)`: the descendants of `w` including `w`, sorted by id.
    #[inline]
    pub fn descendants(&self, w: NodeId) -> &[NodeId] {
        &self.descendants[w.index()]
    }

    /// Whether `u ∈ A(w)`.
    #[inline]
    pub fn is_descendant(&self, u: NodeId, w: NodeId) -> bool {
        self.descendants[w.index()].binary_search(&u).is_ok()
    }

    /// Nodes with at least two proper descendants.
    pub fn eligible_nodes(&self) -> &[NodeId] {
        &self.eligible
    }

    pub fn name(&self, id: NodeId) -> &str {
        self.graph.name(id)
    }

    pub fn id(&self, name: &str) -> Option<NodeId> {
        self.graph.id(name)
    }
}
