//! Adjacency-matrix graphs and their JSON encoding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LabelVector;

/// A simple graph on nodes `0..n`. Self-loops are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    directed: bool,
    adj: Vec<bool>,
}

impl Graph {
    pub fn empty(n: usize, directed: bool) -> Self {
        Graph {
            n,
            directed,
            adj: vec![false; n * n],
        }
    }

    /// Builds a graph from an edge list. Undirected edges may be given in
    /// either orientation; directed `(j, i)` means `j -> i`.
    pub fn from_edges(n: usize, directed: bool, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::empty(n, directed);
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!("edge ({a},{b}) outside 0..{n}")));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at node {a}")));
            }
            if g.has_edge(a, b) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({a},{b})")));
            }
            g.set_edge(a, b, true);
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.adj[from * self.n + to]
    }

    /// Sets `from -> to`; undirected graphs also set the mirror entry.
    pub fn set_edge(&mut self, from: usize, to: usize, present: bool) {
        debug_assert_ne!(from, to, "self-loops are not allowed");
        self.adj[from * self.n + to] = present;
        if !self.directed {
            self.adj[to * self.n + from] = present;
        }
    }

    /// Edge list: `i < j` for undirected graphs, `(from, to)` for directed ones.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.n {
            let start = if self.directed { 0 } else { a + 1 };
            for b in start..self.n {
                if self.has_edge(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        let total = self.adj.iter().filter(|&&a| a).count();
        if self.directed {
            total
        } else {
            total / 2
        }
    }

    pub fn in_degree(&self, node: usize) -> usize {
        (0..self.n).filter(|&j| self.has_edge(j, node)).count()
    }

    pub fn out_degree(&self, node: usize) -> usize {
        (0..self.n).filter(|&k| self.has_edge(node, k)).count()
    }

    /// Checks the structural invariants: no self-loops, symmetry when undirected.
    pub fn check(&self) -> Result<()> {
        for i in 0..self.n {
            if self.has_edge(i, i) {
                return Err(Error::InvalidGraph(format!("self-loop at node {i}")));
            }
            if !self.directed {
                for j in i + 1..self.n {
                    if self.has_edge(i, j) != self.has_edge(j, i) {
                        return Err(Error::InvalidGraph(format!("asymmetric pair ({i},{j})")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Additionally requires every directed edge to point from a lower to a
    /// higher index, as produced by the attachment models.
    pub fn check_forward(&self) -> Result<()> {
        self.check()?;
        if let Some((a, b)) = self.edges().into_iter().find(|&(a, b)| a > b) {
            return Err(Error::InvalidGraph(format!("backward edge {a}->{b}")));
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDocument {
    n: usize,
    directed: bool,
    edges: Vec<[usize; 2]>,
    labels: Option<LabelVector>,
}

/// Encodes `g` (and optionally its labels) in the JSON graph format:
/// `{"n":3,"directed":false,"edges":[[0,1]],"labels":[1,1,-1]}`.
pub fn serialize_graph(g: &Graph, labels: Option<&LabelVector>) -> Vec<u8> {
    let doc = GraphDocument {
        n: g.n,
        directed: g.directed,
        edges: g.edges().into_iter().map(|(a, b)| [a, b]).collect(),
        labels: labels.cloned(),
    };
    serde_json::to_vec(&doc).expect("graph documents always serialize")
}

pub fn deserialize_graph(bytes: &[u8]) -> Result<(Graph, Option<LabelVector>)> {
    let doc: GraphDocument = serde_json::from_slice(bytes)?;
    if !doc.directed {
        if let Some([a, b]) = doc.edges.iter().find(|[a, b]| a >= b) {
            return Err(Error::InvalidGraph(format!(
                "undirected edge [{a},{b}] must be listed with i < j"
            )));
        }
    }
    let edges: Vec<_> = doc.edges.iter().map(|&[a, b]| (a, b)).collect();
    let g = Graph::from_edges(doc.n, doc.directed, &edges)?;
    if let Some(y) = &doc.labels {
        if y.len() != doc.n {
            return Err(Error::LengthMismatch {
                left: doc.n,
                right: y.len(),
            });
        }
    }
    Ok((g, doc.labels))
}
