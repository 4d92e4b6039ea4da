//! Maximal clique enumeration.
//!
//! [`maximal_cliques`] runs Bron–Kerbosch with Tomita pivoting inside an outer
//! loop over a degeneracy ordering: each outer vertex `v` starts a recursion
//! whose candidates are the neighbors of `v` later in the order, so candidate
//! sets are bounded by the degeneracy. Outer subproblems are independent and
//! run on the rayon pool when the `parallel` feature is on.
//!
//! [`maximal_cliques_bruteforce`] enumerates every vertex subset and is only
//! meant as a test oracle.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Largest graph the subset-enumeration oracle accepts.
pub const BRUTEFORCE_LIMIT: usize = 20;

/// Maximal cliques in canonical order: size descending, then lexicographic.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CliqueSet {
    cliques: Vec<Vec<usize>>,
}

impl CliqueSet {
    /// Sorts members and the list into canonical order and removes duplicates.
    pub fn canonical(mut cliques: Vec<Vec<usize>>) -> CliqueSet {
        for c in &mut cliques {
            c.sort_unstable();
        }
        cliques.sort_unstable_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        cliques.dedup();
        CliqueSet { cliques }
    }

    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Vec<usize>> {
        self.cliques.iter()
    }

    pub fn get(&self, i: usize) -> &[usize] {
        &self.cliques[i]
    }

    pub fn as_slice(&self) -> &[Vec<usize>] {
        &self.cliques
    }

    pub fn max_size(&self) -> usize {
        self.cliques.first().map_or(0, Vec::len)
    }

    pub fn mean_size(&self) -> f64 {
        if self.cliques.is_empty() {
            return 0.0;
        }
        self.cliques.iter().map(Vec::len).sum::<usize>() as f64 / self.cliques.len() as f64
    }

    /// Image of every clique under the relabeling `i → perm[i]`, re-canonicalized.
    pub fn relabel(&self, perm: &[usize]) -> CliqueSet {
        CliqueSet::canonical(
            self.cliques
                .iter()
                .map(|c| c.iter().map(|&v| perm[v]).collect())
                .collect(),
        )
    }

    /// Checks that every entry is a sorted maximal clique of `g` and that every
    /// node of `g` is covered.
    pub fn validate(&self, g: &Graph) -> Result<()> {
        let n = g.node_count();
        let mut covered = vec![false; n];
        for (k, c) in self.cliques.iter().enumerate() {
            if c.is_empty() {
                return Err(Error::InvalidCliques(format!("clique {k} is empty")));
            }
            if c.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidCliques(format!(
                    "clique {k} is not strictly sorted"
                )));
            }
            if let Some(&v) = c.iter().find(|&&v| v >= n) {
                return Err(Error::InvalidCliques(format!(
                    "clique {k} contains node {v} but the graph has {n} nodes"
                )));
            }
            if !is_clique(g, c) {
                return Err(Error::InvalidCliques(format!(
                    "clique {k} ({c:?}) is not a clique"
                )));
            }
            if !is_maximal_clique(g, c) {
                return Err(Error::InvalidCliques(format!(
                    "clique {k} ({c:?}) is not maximal"
                )));
            }
            for &v in c {
                covered[v] = true;
            }
        }
        if let Some(v) = covered.iter().position(|&c| !c) {
            return Err(Error::InvalidCliques(format!("node {v} is in no clique")));
        }
        Ok(())
    }
}

impl<'a> IntoIterator for &'a CliqueSet {
    type Item = &'a Vec<usize>;
    type IntoIter = std::slice::Iter<'a, Vec<usize>>;

    fn into_iter(self) -> Self::IntoIter {
        self.cliques.iter()
    }
}

pub fn is_clique(g: &Graph, nodes: &[usize]) -> bool {
    nodes
        .iter()
        .enumerate()
        .all(|(k, &u)| nodes[k + 1..].iter().all(|&v| g.has_edge(u, v)))
}

/// No node outside `nodes` is adjacent to all of them.
pub fn is_maximal_clique(g: &Graph, nodes: &[usize]) -> bool {
    let Some(&first) = nodes.first() else {
        return g.node_count() == 0;
    };
    !g.neighbors(first)
        .iter()
        .filter(|w| !nodes.contains(w))
        .any(|&w| nodes.iter().all(|&u| g.has_edge(u, w)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegeneracyOrder {
    pub order: Vec<usize>,
    pub degeneracy: usize,
}

impl DegeneracyOrder {
    /// Position of every node in `order`.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (i, &v) in self.order.iter().enumerate() {
            pos[v] = i;
        }
        pos
    }
}

/// Repeatedly removes a minimum-degree node (lowest index on ties).
pub fn degeneracy_ordering(g: &Graph) -> DegeneracyOrder {
    let n = g.node_count();
    let mut degree = g.degrees();
    let mut removed = vec![false; n];
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|v| (degree[v], v)).collect();
    let mut order = Vec::with_capacity(n);
    let mut degeneracy = 0;
    while let Some((d, v)) = queue.pop_first() {
        degeneracy = degeneracy.max(d);
        removed[v] = true;
        order.push(v);
        for &w in g.neighbors(v) {
            if !removed[w] {
                queue.remove(&(degree[w], w));
                degree[w] -= 1;
                queue.insert((degree[w], w));
            }
        }
    }
    DegeneracyOrder { order, degeneracy }
}

/// All maximal cliques of `g` in canonical order.
///
/// Isolated nodes come out as singleton cliques. Serial and parallel runs give
/// identical results because the output is re-canonicalized after merging.
pub fn maximal_cliques(g: &Graph) -> CliqueSet {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let order = degeneracy_ordering(g);
        let pos = order.positions();
        let found: Vec<Vec<usize>> = order
            .order
            .par_iter()
            .flat_map_iter(|&v| outer_subproblem(g, &pos, v))
            .collect();
        CliqueSet::canonical(found)
    }
    #[cfg(not(feature = "parallel"))]
    {
        maximal_cliques_serial(g)
    }
}

/// Single-threaded [`maximal_cliques`].
pub fn maximal_cliques_serial(g: &Graph) -> CliqueSet {
    let order = degeneracy_ordering(g);
    let pos = order.positions();
    let found = order
        .order
        .iter()
        .flat_map(|&v| outer_subproblem(g, &pos, v))
        .collect();
    CliqueSet::canonical(found)
}

fn outer_subproblem(g: &Graph, pos: &[usize], v: usize) -> Vec<Vec<usize>> {
    let (later, earlier): (Vec<usize>, Vec<usize>) =
        g.neighbors(v).iter().partition(|&&w| pos[w] > pos[v]);
    let mut out = Vec::new();
    let mut clique = vec![v];
    expand(g, &mut clique, later, earlier, &mut out);
    out
}

/// Bron–Kerbosch step with Tomita pivot. `candidates` and `excluded` stay sorted.
fn expand(
    g: &Graph,
    clique: &mut Vec<usize>,
    mut candidates: Vec<usize>,
    mut excluded: Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if candidates.is_empty() {
        if excluded.is_empty() {
            out.push(clique.clone());
        }
        return;
    }

    // Pivot maximizes |candidates ∩ N(u)| over candidates ∪ excluded; the
    // strict comparison keeps the lowest index on ties.
    let mut pivot = usize::MAX;
    let mut best = 0;
    for &u in merge_sorted(&candidates, &excluded).iter() {
        let score = intersection_len(&candidates, g.neighbors(u));
        if pivot == usize::MAX || score > best {
            pivot = u;
            best = score;
        }
    }

    let branch: Vec<usize> = difference(&candidates, g.neighbors(pivot));
    for v in branch {
        let nv = g.neighbors(v);
        clique.push(v);
        expand(
            g,
            clique,
            intersection(&candidates, nv),
            intersection(&excluded, nv),
            out,
        );
        clique.pop();
        if let Ok(i) = candidates.binary_search(&v) {
            candidates.remove(i);
        }
        if let Err(i) = excluded.binary_search(&v) {
            excluded.insert(i, v);
        }
    }
}

fn merge_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    out.sort_unstable();
    out
}

fn intersection(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

fn difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter()
        .copied()
        .filter(|v| b.binary_search(v).is_err())
        .collect()
}

/// Maximal cliques by checking every vertex subset. Test oracle only.
pub fn maximal_cliques_bruteforce(g: &Graph) -> Result<CliqueSet> {
    let n = g.node_count();
    if n > BRUTEFORCE_LIMIT {
        return Err(Error::OracleTooLarge(n, BRUTEFORCE_LIMIT));
    }
    let adj: Vec<u32> = (0..n)
        .map(|v| g.neighbors(v).iter().fold(0u32, |m, &w| m | 1 << w))
        .collect();
    let mut found = Vec::new();
    for mask in 1u32..(1u32 << n) {
        let members: Vec<usize> = (0..n).filter(|&v| mask & (1 << v) != 0).collect();
        let pairwise = members.iter().all(|&v| adj[v] & mask == mask & !(1 << v));
        if !pairwise {
            continue;
        }
        let extendable = (0..n).any(|w| mask & (1 << w) == 0 && adj[w] & mask == mask);
        if !extendable {
            found.push(members);
        }
    }
    Ok(CliqueSet::canonical(found))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn petersen() -> Graph {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((i, i + 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
        }
        Graph::from_edges(10, &edges).unwrap()
    }

    #[test]
    fn degeneracy_examples() {
        assert_eq!(degeneracy_ordering(&Graph::complete(4)).degeneracy, 3);
        assert_eq!(degeneracy_ordering(&Graph::cycle(4)).degeneracy, 2);
        let star = Graph::complete_bipartite(1, 5);
        let order = degeneracy_ordering(&star);
        assert_eq!(order.degeneracy, 1);
        assert_eq!(order.order, vec![1, 2, 3, 4, 0, 5]);
    }

    #[test]
    fn degeneracy_bounds_later_neighbors() {
        let g = petersen();
        let order = degeneracy_ordering(&g);
        let pos = order.positions();
        for v in 0..g.node_count() {
            let later = g.neighbors(v).iter().filter(|&&w| pos[w] > pos[v]).count();
            assert!(later <= order.degeneracy);
        }
        assert_eq!(order.degeneracy, 3);
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(
            maximal_cliques(&Graph::complete(4)).as_slice(),
            &[vec![0, 1, 2, 3]]
        );
        assert_eq!(
            maximal_cliques(&Graph::cycle(4)).as_slice(),
            &[vec![0, 1], vec![0, 3], vec![1, 2], vec![2, 3]]
        );
        let k33 = maximal_cliques(&Graph::complete_bipartite(3, 3));
        assert_eq!(k33.len(), 9);
        assert!(k33.iter().all(|c| c.len() == 2));
    }

    #[test]
    fn bruteforce_examples() {
        assert_eq!(
            maximal_cliques_bruteforce(&Graph::empty(1))
                .unwrap()
                .as_slice(),
            &[vec![0]]
        );
        assert_eq!(
            maximal_cliques_bruteforce(&Graph::empty(3))
                .unwrap()
                .as_slice(),
            &[vec![0], vec![1], vec![2]]
        );
        let p = maximal_cliques_bruteforce(&petersen()).unwrap();
        assert_eq!(p.len(), 15);
        assert!(p.iter().all(|c| c.len() == 2));
        assert_eq!(p, maximal_cliques(&petersen()));
        assert!(matches!(
            maximal_cliques_bruteforce(&Graph::empty(21)),
            Err(Error::OracleTooLarge(21, 20))
        ));
    }

    #[test]
    fn isolated_nodes_are_singletons() {
        let g = Graph::from_edges(4, &[(0, 1)]).unwrap();
        assert_eq!(
            maximal_cliques(&g).as_slice(),
            &[vec![0, 1], vec![2], vec![3]]
        );
        assert!(maximal_cliques(&Graph::empty(0)).is_empty());
    }

    #[test]
    fn validation_catches_bad_sets() {
        let g = Graph::cycle(4);
        assert!(maximal_cliques(&g).validate(&g).is_ok());
        let missing = CliqueSet::canonical(vec![vec![0, 1], vec![1, 2]]);
        assert!(missing.validate(&g).is_err());
        let not_clique = CliqueSet::canonical(vec![vec![0, 2], vec![1, 3]]);
        assert!(not_clique.validate(&g).is_err());
        let k4 = Graph::complete(4);
        let not_maximal = CliqueSet::canonical(vec![vec![0, 1, 2], vec![3]]);
        assert!(not_maximal.validate(&k4).is_err());
    }

    #[test]
    fn serial_and_parallel_agree() {
        let g = petersen().disjoint_union(&Graph::complete(5));
        assert_eq!(maximal_cliques(&g), maximal_cliques_serial(&g));
    }
}
