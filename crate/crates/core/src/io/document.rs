//! JSON persistence for hierarchies.
//!
//! The document holds topology only: per-level edges, cliques, pools and the
//! assignment trace, followed by summary statistics and optionally the
//! dependency DAG. Field order is fixed and every list is sorted, so writing a
//! document that was just read reproduces the same bytes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cliques::CliqueSet;
use crate::coarsen::{coarsen_graph, Assignment, AssignmentStep, Pool, Readout};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::hierarchy::{dependency_dag, level_stats, DependencyDag, Hierarchy, Level, LevelStats};

use super::read_to_string;

pub const DOCUMENT_VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelDocument {
    pub nodes: usize,
    pub edges: Vec<(usize, usize)>,
    pub cliques: CliqueSet,
    /// Absent on the last level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pools: Option<Vec<Pool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_to_pools: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<AssignmentStep>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HierarchyDocument {
    pub version: String,
    pub readout: Readout,
    pub levels: Vec<LevelDocument>,
    pub stats: Vec<LevelStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dag: Option<DependencyDag>,
}

impl HierarchyDocument {
    pub fn from_hierarchy(h: &Hierarchy, include_dag: bool) -> HierarchyDocument {
        let levels = h
            .levels()
            .iter()
            .map(|l| LevelDocument {
                nodes: l.graph.node_count(),
                edges: l.graph.edge_list(),
                cliques: l.cliques.clone(),
                pools: l.assignment.as_ref().map(|a| a.pools.clone()),
                node_to_pools: l.assignment.as_ref().map(|a| a.node_to_pools.clone()),
                steps: l.assignment.as_ref().map(|a| a.trace.clone()),
            })
            .collect();
        HierarchyDocument {
            version: DOCUMENT_VERSION.to_string(),
            readout: h.readout(),
            levels,
            stats: level_stats(h),
            dag: include_dag.then(|| dependency_dag(h)),
        }
    }

    /// Rebuilds the hierarchy, checking that each level is self-consistent,
    /// that each assignment coarsens to the next level's graph, and that the
    /// stored statistics and DAG match what the topology implies.
    pub fn to_hierarchy(&self) -> Result<Hierarchy> {
        if self.version != DOCUMENT_VERSION {
            return Err(Error::Document(format!(
                "unsupported version {:?} (expected {DOCUMENT_VERSION:?})",
                self.version
            )));
        }
        let levels = self
            .levels
            .iter()
            .enumerate()
            .map(|(k, l)| l.to_level(k))
            .collect::<Result<Vec<_>>>()?;
        for (k, pair) in levels.windows(2).enumerate() {
            let a = pair[0].assignment.as_ref();
            if let Some(a) = a {
                if coarsen_graph(&pair[0].graph, a)? != pair[1].graph {
                    return Err(Error::Document(format!(
                        "level {} graph is not the coarsening of level {k}",
                        k + 1
                    )));
                }
            }
        }
        let h = Hierarchy::from_levels(levels, self.readout)?;
        if level_stats(&h) != self.stats {
            return Err(Error::Document(
                "stats do not match the stored topology".into(),
            ));
        }
        if let Some(dag) = &self.dag {
            if *dag != dependency_dag(&h) {
                return Err(Error::Document(
                    "dag does not match the stored pools".into(),
                ));
            }
        }
        Ok(h)
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<HierarchyDocument> {
        serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))
    }
}

impl LevelDocument {
    fn to_level(&self, k: usize) -> Result<Level> {
        let doc_err = |msg: String| Error::Document(format!("level {k}: {msg}"));
        if self.edges.windows(2).any(|w| w[0] >= w[1]) || self.edges.iter().any(|&(u, v)| u >= v) {
            return Err(doc_err(
                "edges must be sorted (u, v) pairs with u < v".into(),
            ));
        }
        let graph =
            Graph::from_edges(self.nodes, &self.edges).map_err(|e| doc_err(e.to_string()))?;
        self.cliques
            .validate(&graph)
            .map_err(|e| doc_err(e.to_string()))?;
        if CliqueSet::canonical(self.cliques.as_slice().to_vec()) != self.cliques {
            return Err(doc_err("cliques are not in canonical order".into()));
        }
        let assignment = match (&self.pools, &self.node_to_pools, &self.steps) {
            (None, None, None) => None,
            (Some(pools), Some(node_to_pools), Some(steps)) => {
                check_membership(pools, node_to_pools, self.nodes).map_err(doc_err)?;
                Some(Assignment {
                    pools: pools.clone(),
                    node_to_pools: node_to_pools.clone(),
                    trace: steps.clone(),
                })
            }
            _ => return Err(doc_err("pools, node_to_pools and steps go together".into())),
        };
        Ok(Level {
            graph,
            cliques: self.cliques.clone(),
            assignment,
            features: None,
        })
    }
}

/// `node_to_pools` must be exactly the inverse of the pools' member lists.
fn check_membership(pools: &[Pool], node_to_pools: &[Vec<usize>], n: usize) -> Result<(), String> {
    if node_to_pools.len() != n {
        return Err(format!(
            "node_to_pools has {} entries for {n} nodes",
            node_to_pools.len()
        ));
    }
    let mut expected = vec![Vec::new(); n];
    for (p, pool) in pools.iter().enumerate() {
        if pool.members.is_empty() || pool.members.windows(2).any(|w| w[0] >= w[1]) {
            return Err(format!(
                "pool {p} members must be non-empty and strictly sorted"
            ));
        }
        for &v in &pool.members {
            if v >= n {
                return Err(format!("pool {p} contains node {v} of {n}"));
            }
            expected[v].push(p);
        }
    }
    if expected != node_to_pools {
        return Err("node_to_pools disagrees with pool members".into());
    }
    Ok(())
}

pub fn write_hierarchy(h: &Hierarchy, path: impl AsRef<Path>) -> Result<()> {
    write_document(&HierarchyDocument::from_hierarchy(h, false), path)
}

pub fn write_document(doc: &HierarchyDocument, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, doc.to_json()).map_err(|e| Error::io(path, e))
}

pub fn read_document(path: impl AsRef<Path>) -> Result<HierarchyDocument> {
    HierarchyDocument::from_json(&read_to_string(path.as_ref())?)
}

pub fn read_hierarchy(path: impl AsRef<Path>) -> Result<Hierarchy> {
    read_document(path)?.to_hierarchy()
}
