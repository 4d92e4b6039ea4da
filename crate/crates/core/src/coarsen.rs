//! Clique pooling: greedy size-ranked assignment of nodes to maximal cliques,
//! the coarsened graph those pools induce, and feature readout over pools.

use serde::{Deserialize, Serialize};

use crate::cliques::{maximal_cliques, CliqueSet};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::FeatureMatrix;

/// How member rows are aggregated into a pooled row.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Readout {
    #[default]
    Mean,
    Max,
}

impl std::str::FromStr for Readout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Readout::Mean),
            "max" => Ok(Readout::Max),
            other => Err(Error::InvalidArgument(format!(
                "unknown readout {other:?} (expected mean or max)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pool {
    /// Index of the clique this pool came from in the canonical clique set.
    pub source_clique: usize,
    pub members: Vec<usize>,
}

/// One round of the greedy assignment.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AssignmentStep {
    /// Effective size shared by every clique taking part in this step.
    pub size: usize,
    /// Clique indices tied at `size`.
    pub cliques: Vec<usize>,
    /// `(node, clique indices it joined)` for every node assigned in this step.
    pub assigned: Vec<(usize, Vec<usize>)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub pools: Vec<Pool>,
    /// Sorted pool indices per original node.
    pub node_to_pools: Vec<Vec<usize>>,
    pub trace: Vec<AssignmentStep>,
}

impl Assignment {
    pub fn pool_count(&self) -> usize {
        self.pools.len()
    }

    pub fn node_count(&self) -> usize {
        self.node_to_pools.len()
    }

    /// Number of nodes that joined more than one pool.
    pub fn multi_assigned(&self) -> usize {
        self.node_to_pools.iter().filter(|p| p.len() > 1).count()
    }

    /// Pool `i` keeps node `i` for every node of an `n`-node graph.
    pub fn identity(n: usize) -> Assignment {
        Assignment {
            pools: (0..n)
                .map(|v| Pool {
                    source_clique: v,
                    members: vec![v],
                })
                .collect(),
            node_to_pools: (0..n).map(|v| vec![v]).collect(),
            trace: Vec::new(),
        }
    }
}

/// Greedily assigns nodes to clique pools, largest effective size first.
///
/// A clique's effective size is its count of still-unassigned nodes. Every
/// round takes all cliques tied at the current maximum and gives each of their
/// unassigned nodes to every tied clique containing it, so a node lands in two
/// pools only through a tie. Cliques that end with no members are dropped.
///
/// `cliques` must be exactly the maximal cliques of `g` in canonical order.
pub fn assign_pools(g: &Graph, cliques: &CliqueSet) -> Result<Assignment> {
    cliques.validate(g)?;
    let expected = maximal_cliques(g);
    if *cliques != expected {
        return Err(Error::InvalidCliques(format!(
            "{} cliques given, the graph has {} maximal cliques",
            cliques.len(),
            expected.len()
        )));
    }
    Ok(assign_pools_unchecked(g, cliques))
}

/// [`assign_pools`] for a clique set already known to be `maximal_cliques(g)`.
pub(crate) fn assign_pools_unchecked(g: &Graph, cliques: &CliqueSet) -> Assignment {
    let n = g.node_count();

    let mut node_cliques: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, c) in cliques.iter().enumerate() {
        for &v in c {
            node_cliques[v].push(k);
        }
    }

    let mut remaining: Vec<usize> = cliques.iter().map(Vec::len).collect();
    let mut assigned = vec![false; n];
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); cliques.len()];
    let mut unassigned = n;
    let mut trace = Vec::new();

    while unassigned > 0 {
        let size = remaining.iter().copied().max().unwrap_or(0);
        debug_assert!(size > 0, "unassigned nodes must lie in some clique");
        let tied: Vec<usize> = (0..cliques.len())
            .filter(|&k| remaining[k] == size)
            .collect();

        let mut newly: Vec<usize> = tied
            .iter()
            .flat_map(|&k| cliques.get(k).iter().copied().filter(|&v| !assigned[v]))
            .collect();
        newly.sort_unstable();
        newly.dedup();

        let mut step_assigned = Vec::with_capacity(newly.len());
        for &v in &newly {
            let joined: Vec<usize> = node_cliques[v]
                .iter()
                .copied()
                .filter(|k| tied.binary_search(k).is_ok())
                .collect();
            for &k in &joined {
                members[k].push(v);
            }
            step_assigned.push((v, joined));
        }
        for &v in &newly {
            assigned[v] = true;
            for &k in &node_cliques[v] {
                remaining[k] -= 1;
            }
        }
        unassigned -= newly.len();
        trace.push(AssignmentStep {
            size,
            cliques: tied,
            assigned: step_assigned,
        });
    }

    let mut pools = Vec::new();
    let mut node_to_pools = vec![Vec::new(); n];
    for (k, m) in members.into_iter().enumerate() {
        if m.is_empty() {
            continue;
        }
        let p = pools.len();
        for &v in &m {
            node_to_pools[v].push(p);
        }
        pools.push(Pool {
            source_clique: k,
            members: m,
        });
    }
    Assignment {
        pools,
        node_to_pools,
        trace,
    }
}

/// One node per pool; two pools are adjacent when they share a member or
/// some member of one is adjacent to some member of the other.
pub fn coarsen_graph(g: &Graph, a: &Assignment) -> Result<Graph> {
    if a.node_count() != g.node_count() {
        return Err(Error::Shape(format!(
            "assignment covers {} nodes, graph has {}",
            a.node_count(),
            g.node_count()
        )));
    }
    let mut edges = Vec::new();
    let mut seen = vec![usize::MAX; a.pool_count()];
    for (p, pool) in a.pools.iter().enumerate() {
        seen[p] = p;
        for &v in &pool.members {
            let reach = std::iter::once(&v).chain(g.neighbors(v));
            for &u in reach {
                for &q in &a.node_to_pools[u] {
                    if q > p && seen[q] != p {
                        seen[q] = p;
                        edges.push((p, q));
                    }
                }
            }
        }
    }
    Graph::from_edges(a.pool_count(), &edges)
}

/// Pooled features: one row per pool. Nodes in several pools contribute their
/// full row to each of them.
pub fn pool_features(x: &FeatureMatrix, a: &Assignment, readout: Readout) -> Result<FeatureMatrix> {
    if x.rows() != a.node_count() {
        return Err(Error::Shape(format!(
            "feature matrix has {} rows but the assignment covers {} nodes",
            x.rows(),
            a.node_count()
        )));
    }
    let f = x.cols();
    let mut out = FeatureMatrix::zeros(a.pool_count(), f);
    for (p, pool) in a.pools.iter().enumerate() {
        let row = out.row_mut(p);
        match readout {
            Readout::Mean => {
                for &v in &pool.members {
                    for (o, &val) in row.iter_mut().zip(x.row(v)) {
                        *o += val;
                    }
                }
                let k = pool.members.len() as f64;
                row.iter_mut().for_each(|o| *o /= k);
            }
            Readout::Max => {
                row.copy_from_slice(x.row(pool.members[0]));
                for &v in &pool.members[1..] {
                    for (o, &val) in row.iter_mut().zip(x.row(v)) {
                        *o = o.max(val);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Sparse `M × N` linear form of mean pooling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoolMatrix {
    cols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl PoolMatrix {
    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row_entries(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn identity(n: usize) -> PoolMatrix {
        PoolMatrix {
            cols: n,
            rows: (0..n).map(|i| vec![(i, 1.0)]).collect(),
        }
    }

    pub fn to_dense(&self) -> FeatureMatrix {
        let mut m = FeatureMatrix::zeros(self.rows(), self.cols);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                m[(i, j)] = w;
            }
        }
        m
    }

    /// `self · x`.
    pub fn apply(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        if x.rows() != self.cols {
            return Err(Error::Shape(format!(
                "pool matrix expects {} rows, got {}",
                self.cols,
                x.rows()
            )));
        }
        let mut out = FeatureMatrix::zeros(self.rows(), x.cols());
        for (i, row) in self.rows.iter().enumerate() {
            let o = out.row_mut(i);
            for &(j, w) in row {
                for (dst, &src) in o.iter_mut().zip(x.row(j)) {
                    *dst += w * src;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · y`, the backward pass of [`PoolMatrix::apply`].
    pub fn apply_transpose(&self, y: &FeatureMatrix) -> Result<FeatureMatrix> {
        if y.rows() != self.rows() {
            return Err(Error::Shape(format!(
                "pool matrix transpose expects {} rows, got {}",
                self.rows(),
                y.rows()
            )));
        }
        let mut out = FeatureMatrix::zeros(self.cols, y.cols());
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                let src = y.row(i);
                for (dst, &s) in out.row_mut(j).iter_mut().zip(src) {
                    *dst += w * s;
                }
            }
        }
        Ok(out)
    }
}

/// Mean-pooling matrix: row `p` holds `1/|members(p)|` at each member column.
pub fn pool_matrix(a: &Assignment, n: usize) -> Result<PoolMatrix> {
    if n != a.node_count() {
        return Err(Error::Shape(format!(
            "assignment covers {} nodes, asked for {n} columns",
            a.node_count()
        )));
    }
    let rows = a
        .pools
        .iter()
        .map(|pool| {
            let w = 1.0 / pool.members.len() as f64;
            pool.members.iter().map(|&v| (v, w)).collect()
        })
        .collect();
    Ok(PoolMatrix { cols: n, rows })
}
