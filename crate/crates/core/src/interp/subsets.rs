use fixedbitset::FixedBitSet;

use crate::circuit::{iterated_lightcones, Circuit, QubitCones};

/// Qubits `i ~ j` iff their backward lightcones intersect.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapGraph {
    adjacency: Vec<FixedBitSet>,
    neighbors: Vec<Vec<usize>>,
}

impl OverlapGraph {
    /// Graph from explicit undirected edges.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adjacency = vec![FixedBitSet::with_capacity(n); n];
        for &(a, b) in edges {
            if a != b {
                adjacency[a].insert(b);
                adjacency[b].insert(a);
            }
        }
        let neighbors = adjacency.iter().map(|s| s.ones().collect()).collect();
        Self {
            adjacency,
            neighbors,
        }
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].contains(b)
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n();
        if n == 0 {
            return true;
        }
        let mut seen = FixedBitSet::with_capacity(n);
        let mut stack = vec![0];
        seen.insert(0);
        while let Some(v) = stack.pop() {
            for &w in &self.neighbors[v] {
                if !seen.put(w) {
                    stack.push(w);
                }
            }
        }
        seen.count_ones(..) == n
    }
}

pub fn build_overlap_graph(circuit: &Circuit) -> OverlapGraph {
    let n = circuit.n();
    let cones = QubitCones::new(circuit);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if !cones.backward(a).is_disjoint(cones.backward(b)) {
                edges.push((a, b));
            }
        }
    }
    let graph = OverlapGraph::from_edges(n, &edges);
    if n > 0 {
        let ell2 = iterated_lightcones(circuit, 2).ell(2);
        assert!(
            graph.max_degree() < ell2,
            "overlap degree {} exceeds ℓ₂ = {ell2}",
            graph.max_degree()
        );
    }
    graph
}

/// Every connected vertex subset of size `1..=p`, each sorted, each exactly once.
///
/// Subsets are grown from their smallest vertex `v`; a vertex joins the
/// extension set only if it exceeds `v` and is not already adjacent to the
/// current subset, so no subset is produced twice.
pub fn enumerate_connected_subsets(graph: &OverlapGraph, p: usize) -> Vec<Vec<usize>> {
    let n = graph.n();
    let mut out = Vec::new();
    if p == 0 {
        return out;
    }
    for v in 0..n {
        let mut sub = vec![v];
        let mut closed = FixedBitSet::with_capacity(n);
        closed.insert(v);
        for &w in graph.neighbors(v) {
            closed.insert(w);
        }
        let ext: Vec<usize> = graph.neighbors(v).iter().copied().filter(|&w| w > v).collect();
        extend(graph, p, v, &mut sub, &closed, ext, &mut out);
    }
    out
}

/// `closed` is the subset together with its neighborhood.
fn extend(
    graph: &OverlapGraph,
    p: usize,
    root: usize,
    sub: &mut Vec<usize>,
    closed: &FixedBitSet,
    mut ext: Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    let mut sorted = sub.clone();
    sorted.sort_unstable();
    out.push(sorted);
    if sub.len() == p {
        return;
    }
    while let Some(w) = ext.pop() {
        let mut next_ext = ext.clone();
        let mut next_closed = closed.clone();
        for &u in graph.neighbors(w) {
            if !closed.contains(u) {
                next_closed.insert(u);
                if u > root {
                    next_ext.push(u);
                }
            }
        }
        sub.push(w);
        extend(graph, p, root, sub, &next_closed, next_ext, out);
        sub.pop();
    }
}
