//! Immutable undirected simple graphs in compressed sparse row form.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected simple graph with sorted, symmetric adjacency.
///
/// Construction goes through [`Graph::from_edges`] (or [`build_graph`]) which
/// symmetrizes, deduplicates and drops self-loops, so every value of this type
/// satisfies the adjacency invariants.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
}

/// What [`build_graph`] had to clean up in its input.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EdgeTally {
    pub self_loops_dropped: usize,
    pub duplicates_merged: usize,
}

/// Builds a graph from an edge list and reports dropped self-loops and merged
/// duplicates.
pub fn build_graph(edges: &[(usize, usize)], node_count: usize) -> Result<(Graph, EdgeTally)> {
    let mut tally = EdgeTally::default();
    let mut directed = Vec::with_capacity(edges.len() * 2);
    for &(i, j) in edges {
        if i >= node_count || j >= node_count {
            return Err(Error::EdgeOutOfRange(i, j, node_count));
        }
        if i == j {
            tally.self_loops_dropped += 1;
            continue;
        }
        directed.push((i, j));
        directed.push((j, i));
    }
    directed.sort_unstable();
    let before = directed.len();
    directed.dedup();
    tally.duplicates_merged = (before - directed.len()) / 2;

    let mut offsets = vec![0usize; node_count + 1];
    for &(i, _) in &directed {
        offsets[i + 1] += 1;
    }
    for i in 0..node_count {
        offsets[i + 1] += offsets[i];
    }
    let neighbors = directed.into_iter().map(|(_, j)| j).collect();
    Ok((Graph { offsets, neighbors }, tally))
}

impl Graph {
    pub fn from_edges(node_count: usize, edges: &[(usize, usize)]) -> Result<Graph> {
        build_graph(edges, node_count).map(|(g, _)| g)
    }

    /// Graph with `n` nodes and no edges.
    pub fn empty(n: usize) -> Graph {
        Graph {
            offsets: vec![0; n + 1],
            neighbors: Vec::new(),
        }
    }

    pub fn complete(n: usize) -> Graph {
        let edges: Vec<_> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Graph::from_edges(n, &edges).expect("indices in range")
    }

    pub fn cycle(n: usize) -> Graph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_edges(n, &edges).expect("indices in range")
    }

    pub fn complete_bipartite(a: usize, b: usize) -> Graph {
        let edges: Vec<_> = (0..a)
            .flat_map(|i| (0..b).map(move |j| (i, a + j)))
            .collect();
        Graph::from_edges(a + b, &edges).expect("indices in range")
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.node_count() == 0
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.node_count()).map(|v| self.degree(v)).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.node_count() && self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Edges as `(i, j)` pairs with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.node_count()).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .filter(move |&&j| j > i)
                .map(move |&j| (i, j))
        })
    }

    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        self.edges().collect()
    }

    /// Hop distances from `source`; `None` for unreachable nodes.
    pub fn bfs_distances(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count()];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &w in self.neighbors(u) {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// All-pairs hop distances for a connected graph, row-major `n × n`.
    pub fn distance_matrix(&self) -> Result<Vec<Vec<usize>>> {
        let n = self.node_count();
        let mut out = Vec::with_capacity(n);
        for s in 0..n {
            let row: Option<Vec<usize>> = self.bfs_distances(s).into_iter().collect();
            match row {
                Some(r) => out.push(r),
                None => return Err(Error::Disconnected(connected_components(self).count())),
            }
        }
        Ok(out)
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Graph> {
        validate_permutation(perm, self.node_count())?;
        let edges: Vec<_> = self.edges().map(|(i, j)| (perm[i], perm[j])).collect();
        Graph::from_edges(self.node_count(), &edges)
    }

    /// Node-induced subgraph; node `nodes[k]` becomes `k`.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Graph {
        let mut index = vec![usize::MAX; self.node_count()];
        for (k, &v) in nodes.iter().enumerate() {
            index[v] = k;
        }
        let edges: Vec<_> = nodes
            .iter()
            .enumerate()
            .flat_map(|(k, &v)| {
                let index = &index;
                self.neighbors(v)
                    .iter()
                    .filter(move |&&w| index[w] != usize::MAX && index[w] > k)
                    .map(move |&w| (k, index[w]))
            })
            .collect();
        Graph::from_edges(nodes.len(), &edges).expect("indices in range")
    }

    /// Disjoint union; nodes of `other` are shifted by `self.node_count()`.
    pub fn disjoint_union(&self, other: &Graph) -> Graph {
        let shift = self.node_count();
        let edges: Vec<_> = self
            .edges()
            .chain(other.edges().map(|(i, j)| (i + shift, j + shift)))
            .collect();
        Graph::from_edges(shift + other.node_count(), &edges).expect("indices in range")
    }
}

pub(crate) fn validate_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::InvalidPermutation(
            n,
            format!("length {} instead of {n}", perm.len()),
        ));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n {
            return Err(Error::InvalidPermutation(n, format!("{p} is out of range")));
        }
        if std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidPermutation(n, format!("{p} appears twice")));
        }
    }
    Ok(())
}

pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// Connected-component id per node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentLabels(pub Vec<usize>);

impl ComponentLabels {
    pub fn count(&self) -> usize {
        self.0.iter().max().map_or(0, |m| m + 1)
    }

    /// Node lists per component, each sorted ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.count()];
        for (v, &c) in self.0.iter().enumerate() {
            out[c].push(v);
        }
        out
    }
}

/// Labels components in order of their lowest-index node.
pub fn connected_components(g: &Graph) -> ComponentLabels {
    let n = g.node_count();
    let mut labels = vec![usize::MAX; n];
    let mut next = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if labels[start] != usize::MAX {
            continue;
        }
        labels[start] = next;
        stack.push(start);
        while let Some(u) = stack.pop() {
            for &w in g.neighbors(u) {
                if labels[w] == usize::MAX {
                    labels[w] = next;
                    stack.push(w);
                }
            }
        }
        next += 1;
    }
    ComponentLabels(labels)
}

/// Sum of shortest-path lengths over unordered node pairs of a connected graph.
pub fn pairwise_distance_sum(g: &Graph) -> Result<u64> {
    let n = g.node_count();
    let mut total = 0u64;
    for s in 0..n {
        for d in g.bfs_distances(s).into_iter().skip(s + 1) {
            match d {
                Some(d) => total += d as u64,
                None => return Err(Error::Disconnected(connected_components(g).count())),
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c4() -> Graph {
        Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap()
    }

    #[test]
    fn triangle_from_edges() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(g.degrees(), vec![2, 2, 2]);
        assert_eq!(g, Graph::complete(3));
    }

    #[test]
    fn self_loops_and_duplicates_are_tallied() {
        let (g, tally) = build_graph(&[(0, 1), (1, 0), (0, 0)], 2).unwrap();
        assert_eq!(g.edge_list(), vec![(0, 1)]);
        assert_eq!(tally.self_loops_dropped, 1);
        assert_eq!(tally.duplicates_merged, 1);
    }

    #[test]
    fn c4_degrees() {
        assert_eq!(c4().degrees(), vec![2; 4]);
        assert_eq!(c4(), Graph::cycle(4));
    }

    #[test]
    fn out_of_range_edge_is_named() {
        let err = Graph::from_edges(3, &[(0, 1), (1, 5)]).unwrap_err();
        assert!(matches!(err, Error::EdgeOutOfRange(1, 5, 3)));
        assert!(err.to_string().contains("(1, 5)"));
    }

    #[test]
    fn components() {
        assert_eq!(connected_components(&Graph::complete(3)).0, vec![0, 0, 0]);
        let two = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(connected_components(&two).0, vec![0, 0, 1, 1]);
        assert_eq!(
            connected_components(&Graph::empty(0)).0,
            Vec::<usize>::new()
        );
        let interleaved = Graph::from_edges(4, &[(0, 2), (1, 3)]).unwrap();
        assert_eq!(connected_components(&interleaved).0, vec![0, 1, 0, 1]);
    }

    #[test]
    fn distance_sums() {
        assert_eq!(pairwise_distance_sum(&Graph::empty(1)).unwrap(), 0);
        let p3 = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(pairwise_distance_sum(&p3).unwrap(), 4);
        assert_eq!(pairwise_distance_sum(&Graph::complete(4)).unwrap(), 6);
        for n in 1..=8 {
            assert_eq!(
                pairwise_distance_sum(&Graph::complete(n)).unwrap(),
                (n * (n - 1) / 2) as u64
            );
        }
        let two = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(matches!(
            pairwise_distance_sum(&two),
            Err(Error::Disconnected(2))
        ));
    }

    #[test]
    fn permutations() {
        let g = c4();
        assert_eq!(g.permute(&[0, 1, 2, 3]).unwrap(), g);
        let e = Graph::from_edges(2, &[(0, 1)]).unwrap();
        assert_eq!(e.permute(&[1, 0]).unwrap(), e);
        assert_eq!(g.permute(&[1, 2, 3, 0]).unwrap(), g);
        assert!(g.permute(&[0, 0, 1, 2]).is_err());
        assert!(g.permute(&[0, 1, 2]).is_err());
        assert!(g.permute(&[0, 1, 2, 4]).is_err());
    }
}
