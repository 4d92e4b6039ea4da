//! Iterated clique pooling down to one node per connected component.
//!
//! Pools depend only on topology, so a [`Hierarchy`] can be built once and
//! reused (or persisted, see [`crate::io::document`]) for any features laid on
//! the same graph.

use serde::{Deserialize, Serialize};

use crate::cliques::{maximal_cliques, CliqueSet};
use crate::coarsen::{assign_pools_unchecked, coarsen_graph, pool_features, Assignment, Readout};
use crate::error::{Error, Result};
use crate::graph::{connected_components, pairwise_distance_sum, Graph};
use crate::matrix::FeatureMatrix;

/// Output of a single pooling step.
#[derive(Clone, Debug, PartialEq)]
pub struct PoolStep {
    pub cliques: CliqueSet,
    pub assignment: Assignment,
    pub graph: Graph,
    pub features: Option<FeatureMatrix>,
}

/// Enumerate cliques, assign pools, coarsen, and pool features if given.
pub fn pool_once(g: &Graph, x: Option<&FeatureMatrix>, readout: Readout) -> Result<PoolStep> {
    let cliques = maximal_cliques(g);
    let assignment = assign_pools_unchecked(g, &cliques);
    let graph = coarsen_graph(g, &assignment)?;
    let features = x
        .map(|x| pool_features(x, &assignment, readout))
        .transpose()?;
    Ok(PoolStep {
        cliques,
        assignment,
        graph,
        features,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Level {
    pub graph: Graph,
    pub cliques: CliqueSet,
    /// Assignment into the next level; `None` on the last level.
    pub assignment: Option<Assignment>,
    pub features: Option<FeatureMatrix>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hierarchy {
    levels: Vec<Level>,
    readout: Readout,
    /// `image_sets[k][v]`: level-`k` nodes original node `v` maps into.
    image_sets: Vec<Vec<Vec<usize>>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct HierarchyOptions {
    pub readout: Readout,
    /// Maximum number of pooling steps. Defaults to the summed pairwise
    /// distance of the input plus one, which bounds the steps any input can
    /// need when the distance potential strictly decreases.
    pub max_levels: Option<usize>,
}

impl Hierarchy {
    /// Assembles a hierarchy from levels, checking that consecutive levels are
    /// consistent with their assignments.
    pub fn from_levels(levels: Vec<Level>, readout: Readout) -> Result<Hierarchy> {
        if levels.is_empty() {
            return Err(Error::Document(
                "a hierarchy needs at least one level".into(),
            ));
        }
        for (k, level) in levels.iter().enumerate() {
            let last = k + 1 == levels.len();
            match (&level.assignment, last) {
                (Some(a), false) => {
                    if a.node_count() != level.graph.node_count()
                        || a.pool_count() != levels[k + 1].graph.node_count()
                    {
                        return Err(Error::Document(format!(
                            "level {k} assignment does not connect {} nodes to {} pools",
                            level.graph.node_count(),
                            levels[k + 1].graph.node_count()
                        )));
                    }
                }
                (None, true) => {}
                (Some(_), true) => {
                    return Err(Error::Document("last level carries an assignment".into()))
                }
                (None, false) => {
                    return Err(Error::Document(format!(
                        "level {k} is missing its assignment"
                    )))
                }
            }
            if let Some(x) = &level.features {
                if x.rows() != level.graph.node_count() {
                    return Err(Error::Document(format!(
                        "level {k} features have {} rows for {} nodes",
                        x.rows(),
                        level.graph.node_count()
                    )));
                }
            }
        }
        let image_sets = compute_image_sets(&levels);
        Ok(Hierarchy {
            levels,
            readout,
            image_sets,
        })
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level(&self, k: usize) -> &Level {
        &self.levels[k]
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn readout(&self) -> Readout {
        self.readout
    }

    pub fn input(&self) -> &Graph {
        &self.levels[0].graph
    }

    pub fn node_counts(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.graph.node_count()).collect()
    }

    /// Level-`level` nodes that original node `v` maps into.
    pub fn image(&self, level: usize, v: usize) -> &[usize] {
        &self.image_sets[level][v]
    }

    pub fn image_sets(&self, level: usize) -> &[Vec<usize>] {
        &self.image_sets[level]
    }
}

fn compute_image_sets(levels: &[Level]) -> Vec<Vec<Vec<usize>>> {
    let n = levels[0].graph.node_count();
    let mut out: Vec<Vec<Vec<usize>>> = vec![(0..n).map(|v| vec![v]).collect()];
    for level in &levels[..levels.len() - 1] {
        let a = level.assignment.as_ref().expect("checked by from_levels");
        let next = out
            .last()
            .unwrap()
            .iter()
            .map(|img| {
                let mut s: Vec<usize> = img
                    .iter()
                    .flat_map(|&u| a.node_to_pools[u].iter().copied())
                    .collect();
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        out.push(next);
    }
    out
}

/// Default step budget: summed per-component pairwise distance plus one.
pub fn default_budget(g: &Graph) -> usize {
    let labels = connected_components(g);
    labels
        .members()
        .iter()
        .map(|nodes| {
            pairwise_distance_sum(&g.induced_subgraph(nodes)).expect("components are connected")
                as usize
        })
        .sum::<usize>()
        + 1
}

/// Pools `g` until every connected component is a single node.
///
/// Fails with [`Error::Divergence`] when the step budget runs out or a step
/// reproduces its input graph while edges remain.
pub fn build_hierarchy(
    g: &Graph,
    x: Option<&FeatureMatrix>,
    opts: HierarchyOptions,
) -> Result<Hierarchy> {
    if let Some(x) = x {
        if x.rows() != g.node_count() {
            return Err(Error::Shape(format!(
                "feature matrix has {} rows for {} nodes",
                x.rows(),
                g.node_count()
            )));
        }
    }
    let budget = opts.max_levels.unwrap_or_else(|| default_budget(g));
    let mut levels = Vec::new();
    let mut graph = g.clone();
    let mut features = x.cloned();
    let mut steps = 0;

    while graph.edge_count() > 0 {
        if steps == budget {
            let mut trace: Vec<usize> = levels
                .iter()
                .map(|l: &Level| l.graph.node_count())
                .collect();
            trace.push(graph.node_count());
            return Err(Error::Divergence { budget, trace });
        }
        let step = pool_once(&graph, features.as_ref(), opts.readout)?;
        if step.graph == graph {
            let mut trace: Vec<usize> = levels
                .iter()
                .map(|l: &Level| l.graph.node_count())
                .collect();
            trace.extend([graph.node_count(), step.graph.node_count()]);
            return Err(Error::Divergence { budget, trace });
        }
        levels.push(Level {
            graph,
            cliques: step.cliques,
            assignment: Some(step.assignment),
            features,
        });
        graph = step.graph;
        features = step.features;
        steps += 1;
    }
    levels.push(Level {
        cliques: maximal_cliques(&graph),
        graph,
        assignment: None,
        features,
    });
    Hierarchy::from_levels(levels, opts.readout)
}

/// Per level, the sum over original node pairs of the largest level distance
/// between any images of the two nodes. Level 0 equals the pairwise distance
/// sum of the input; the last level is 0.
pub fn distance_sum_trace(h: &Hierarchy) -> Result<Vec<u64>> {
    let labels = connected_components(h.input());
    if labels.count() > 1 {
        return Err(Error::Disconnected(labels.count()));
    }
    let n = h.input().node_count();
    let mut out = Vec::with_capacity(h.depth());
    for (k, level) in h.levels().iter().enumerate() {
        let dist = level.graph.distance_matrix()?;
        let images = h.image_sets(k);
        let mut total = 0u64;
        for u in 0..n {
            for v in u + 1..n {
                let far = images[u]
                    .iter()
                    .flat_map(|&a| images[v].iter().map(move |&b| (a, b)))
                    .map(|(a, b)| dist[a][b])
                    .max()
                    .unwrap_or(0);
                total += far as u64;
            }
        }
        out.push(total);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DagNode {
    pub level: usize,
    pub id: usize,
}

/// Level-to-level membership edges: `(k, v) → (k+1, p)` for each pool `p`
/// that node `v` belongs to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyDag {
    pub nodes: Vec<DagNode>,
    pub edges: Vec<(DagNode, DagNode)>,
}

impl DependencyDag {
    pub fn out_degree(&self, node: DagNode) -> usize {
        self.edges.iter().filter(|(from, _)| *from == node).count()
    }

    pub fn in_degree(&self, node: DagNode) -> usize {
        self.edges.iter().filter(|(_, to)| *to == node).count()
    }

    /// Nodes in level order, which is a topological order.
    pub fn topological_order(&self) -> Vec<DagNode> {
        let mut nodes = self.nodes.clone();
        nodes.sort();
        nodes
    }
}

pub fn dependency_dag(h: &Hierarchy) -> DependencyDag {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for (k, level) in h.levels().iter().enumerate() {
        for id in 0..level.graph.node_count() {
            let from = DagNode { level: k, id };
            nodes.push(from);
            if let Some(a) = &level.assignment {
                for &p in &a.node_to_pools[id] {
                    edges.push((
                        from,
                        DagNode {
                            level: k + 1,
                            id: p,
                        },
                    ));
                }
            }
        }
    }
    DependencyDag { nodes, edges }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub level: usize,
    pub nodes: usize,
    pub edges: usize,
    pub cliques: usize,
    pub max_clique_size: usize,
    pub mean_clique_size: f64,
    pub multi_assigned: usize,
}

pub fn level_stats(h: &Hierarchy) -> Vec<LevelStats> {
    h.levels()
        .iter()
        .enumerate()
        .map(|(k, l)| LevelStats {
            level: k,
            nodes: l.graph.node_count(),
            edges: l.graph.edge_count(),
            cliques: l.cliques.len(),
            max_clique_size: l.cliques.max_size(),
            mean_clique_size: l.cliques.mean_size(),
            multi_assigned: l.assignment.as_ref().map_or(0, Assignment::multi_assigned),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_chain, make_grid, GridSpec};

    fn topo(g: &Graph) -> Hierarchy {
        build_hierarchy(g, None, HierarchyOptions::default()).unwrap()
    }

    #[test]
    fn node_count_traces() {
        assert_eq!(topo(&Graph::complete(3)).node_counts(), vec![3, 1]);
        assert_eq!(topo(&Graph::cycle(4)).node_counts(), vec![4, 4, 1]);
        assert_eq!(
            topo(&make_chain(32)).node_counts(),
            vec![32, 31, 29, 25, 17, 1]
        );
        assert_eq!(topo(&Graph::empty(1)).node_counts(), vec![1]);
        assert_eq!(topo(&Graph::empty(0)).node_counts(), vec![0]);
    }

    #[test]
    fn disconnected_input_converges_per_component() {
        let g = Graph::cycle(4).disjoint_union(&Graph::complete(3));
        let h = topo(&g);
        assert_eq!(h.node_counts(), vec![7, 5, 2]);
        assert!(matches!(
            distance_sum_trace(&h),
            Err(Error::Disconnected(2))
        ));
    }

    #[test]
    fn distance_traces() {
        assert_eq!(
            distance_sum_trace(&topo(&Graph::complete(3))).unwrap(),
            vec![3, 0]
        );
        let p3 = make_chain(3);
        let t = distance_sum_trace(&topo(&p3)).unwrap();
        assert_eq!(t, vec![4, 3, 0]);
        assert_eq!(
            distance_sum_trace(&topo(&Graph::cycle(4))).unwrap(),
            vec![8, 6, 0]
        );
    }

    #[test]
    fn image_sets_follow_assignments() {
        let h = topo(&Graph::cycle(4));
        assert_eq!(h.image(0, 2), &[2]);
        assert_eq!(h.image(1, 0), &[0, 1]);
        assert_eq!(h.image(2, 3), &[0]);
    }

    #[test]
    fn dags() {
        let dag = dependency_dag(&topo(&Graph::complete(3)));
        assert_eq!(dag.nodes.len(), 4);
        assert_eq!(dag.edges.len(), 3);
        assert!(dag
            .edges
            .iter()
            .all(|(_, to)| *to == DagNode { level: 1, id: 0 }));

        let h = topo(&Graph::cycle(4));
        let dag = dependency_dag(&h);
        for id in 0..4 {
            assert_eq!(dag.out_degree(DagNode { level: 0, id }), 2);
            assert_eq!(dag.out_degree(DagNode { level: 1, id }), 1);
        }
        assert_eq!(dag.in_degree(DagNode { level: 2, id: 0 }), 4);
        assert_eq!(dag.nodes.len(), 9);

        let single = dependency_dag(&topo(&Graph::empty(1)));
        assert_eq!(single.nodes.len(), 1);
        assert!(single.edges.is_empty());
    }

    #[test]
    fn stats() {
        let s = level_stats(&topo(&Graph::complete(3)));
        assert_eq!((s[0].nodes, s[0].edges, s[0].cliques), (3, 3, 1));

        let s = level_stats(&topo(&make_grid(GridSpec::new(4, 4))));
        assert_eq!((s[1].nodes, s[1].cliques, s[1].max_clique_size), (9, 1, 9));
        assert_eq!(s[0].multi_assigned, 12);

        let s = level_stats(&topo(&Graph::cycle(4)));
        assert_eq!((s[1].nodes, s[1].edges), (4, 6));
        assert_eq!(s[0].multi_assigned, 4);
    }

    #[test]
    fn explicit_budget_is_enforced() {
        let err = build_hierarchy(
            &make_chain(32),
            None,
            HierarchyOptions {
                max_levels: Some(3),
                ..Default::default()
            },
        )
        .unwrap_err();
        match err {
            Error::Divergence { budget, trace } => {
                assert_eq!(budget, 3);
                assert_eq!(trace, vec![32, 31, 29, 25]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn features_flow_through_levels() {
        let x = FeatureMatrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]]).unwrap();
        let h = build_hierarchy(&Graph::cycle(4), Some(&x), HierarchyOptions::default()).unwrap();
        assert_eq!(
            h.level(1).features.as_ref().unwrap().as_slice(),
            &[1.5, 2.5, 2.5, 3.5]
        );
        assert_eq!(h.level(2).features.as_ref().unwrap().as_slice(), &[2.5]);
        assert!(build_hierarchy(&Graph::cycle(5), Some(&x), HierarchyOptions::default()).is_err());
    }
}
