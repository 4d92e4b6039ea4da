//! Reader for the TU graph-classification benchmark layout: a directory of
//! `DS_*.txt` files sharing one global, 1-based node numbering.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::{build_graph, Graph};
use crate::matrix::FeatureMatrix;

use super::read_to_string;

#[derive(Clone, Debug, PartialEq)]
pub struct TuDataset {
    pub name: String,
    pub graphs: Vec<Graph>,
    /// Raw labels as they appear in the file.
    pub graph_labels: Vec<i64>,
    /// Per-graph features: node attributes when present, else one-hot node
    /// labels, else `None`.
    pub node_features: Option<Vec<FeatureMatrix>>,
}

impl TuDataset {
    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    /// Distinct graph labels in ascending order; a label's class index is its
    /// position here.
    pub fn classes(&self) -> Vec<i64> {
        let mut c = self.graph_labels.clone();
        c.sort_unstable();
        c.dedup();
        c
    }

    pub fn class_indices(&self) -> Vec<usize> {
        let classes = self.classes();
        self.graph_labels
            .iter()
            .map(|l| classes.binary_search(l).expect("label is in classes"))
            .collect()
    }
}

struct Table {
    path: PathBuf,
    /// `(line number, trimmed content)` for every non-empty line.
    rows: Vec<(usize, String)>,
}

impl Table {
    fn load(path: PathBuf) -> Result<Table> {
        let text = read_to_string(&path)?;
        let rows = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim().to_string()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        Ok(Table { path, rows })
    }

    fn load_optional(path: PathBuf) -> Result<Option<Table>> {
        if path.exists() {
            Table::load(path).map(Some)
        } else {
            Ok(None)
        }
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::parse(&self.path, line, message)
    }

    fn integers(&self) -> Result<Vec<i64>> {
        self.rows
            .iter()
            .map(|(line, s)| {
                s.parse()
                    .map_err(|_| self.err(*line, format!("expected an integer, found {s:?}")))
            })
            .collect()
    }
}

/// Loads `DS_A.txt`, `DS_graph_indicator.txt` and `DS_graph_labels.txt` from
/// `dir` (with `DS` = `name`), plus `DS_node_labels.txt` and
/// `DS_node_attributes.txt` if present. Nodes are renumbered from 0 within
/// each graph; repeated or reversed edge pairs collapse to one edge.
pub fn read_tu_dataset(dir: impl AsRef<Path>, name: &str) -> Result<TuDataset> {
    let dir = dir.as_ref();
    let file = |suffix: &str| dir.join(format!("{name}_{suffix}.txt"));

    let indicator_table = Table::load(file("graph_indicator"))?;
    let indicator = indicator_table.integers()?;
    let labels_table = Table::load(file("graph_labels"))?;
    let graph_labels = labels_table.integers()?;
    let edges_table = Table::load(file("A"))?;

    // Graph ids must run 1, 1, …, 2, 2, … without gaps or interleaving.
    let mut starts = Vec::new();
    let mut prev = 0;
    for (k, &gid) in indicator.iter().enumerate() {
        if gid == prev {
            continue;
        }
        if gid != prev + 1 {
            let line = indicator_table.rows[k].0;
            return Err(indicator_table.err(
                line,
                format!("graph id {gid} after {prev}; ids must be contiguous and start at 1"),
            ));
        }
        starts.push(k);
        prev = gid;
    }
    let n_graphs = starts.len();
    if graph_labels.len() != n_graphs {
        let line = labels_table.rows.last().map_or(0, |r| r.0);
        return Err(labels_table.err(
            line,
            format!("{} graph labels for {n_graphs} graphs", graph_labels.len()),
        ));
    }
    starts.push(indicator.len());
    let graph_of = |node: usize| indicator[node] as usize - 1;

    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n_graphs];
    for (line, s) in &edges_table.rows {
        let parsed: Option<(usize, usize)> = s
            .split_once(',')
            .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)));
        let Some((a, b)) = parsed else {
            return Err(edges_table.err(*line, format!("expected \"i, j\", found {s:?}")));
        };
        let total = indicator.len();
        if a == 0 || b == 0 || a > total || b > total {
            return Err(
                edges_table.err(*line, format!("edge ({a}, {b}) outside nodes 1..={total}"))
            );
        }
        let (u, v) = (a - 1, b - 1);
        let g = graph_of(u);
        if graph_of(v) != g {
            return Err(edges_table.err(
                *line,
                format!(
                    "edge ({a}, {b}) joins graphs {} and {}",
                    g + 1,
                    graph_of(v) + 1
                ),
            ));
        }
        edges[g].push((u - starts[g], v - starts[g]));
    }

    let graphs = edges
        .iter()
        .enumerate()
        .map(|(g, e)| Ok(build_graph(e, starts[g + 1] - starts[g])?.0))
        .collect::<Result<Vec<_>>>()?;

    let features = match Table::load_optional(file("node_attributes"))? {
        Some(t) => Some(attribute_rows(&t, indicator.len())?),
        None => match Table::load_optional(file("node_labels"))? {
            Some(t) => Some(one_hot_rows(&t, indicator.len())?),
            None => None,
        },
    };
    let node_features = features
        .map(|rows| {
            (0..n_graphs)
                .map(|g| FeatureMatrix::from_rows(&rows[starts[g]..starts[g + 1]]))
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;

    Ok(TuDataset {
        name: name.to_string(),
        graphs,
        graph_labels,
        node_features,
    })
}

fn check_count(t: &Table, expected: usize) -> Result<()> {
    if t.rows.len() != expected {
        let line = t.rows.last().map_or(0, |r| r.0);
        return Err(t.err(line, format!("{} rows for {expected} nodes", t.rows.len())));
    }
    Ok(())
}

fn attribute_rows(t: &Table, nodes: usize) -> Result<Vec<Vec<f64>>> {
    check_count(t, nodes)?;
    let rows = t
        .rows
        .iter()
        .map(|(line, s)| {
            s.split(',')
                .map(|v| match v.trim().parse::<f64>() {
                    Ok(x) if x.is_finite() => Ok(x),
                    _ => Err(t.err(*line, format!("bad attribute {:?}", v.trim()))),
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(i) = rows.iter().position(|r| r.len() != rows[0].len()) {
        return Err(t.err(
            t.rows[i].0,
            format!("{} attributes, expected {}", rows[i].len(), rows[0].len()),
        ));
    }
    Ok(rows)
}

fn one_hot_rows(t: &Table, nodes: usize) -> Result<Vec<Vec<f64>>> {
    check_count(t, nodes)?;
    let labels = t.integers()?;
    let columns: BTreeMap<i64, usize> = {
        let mut distinct = labels.clone();
        distinct.sort_unstable();
        distinct.dedup();
        distinct
            .into_iter()
            .enumerate()
            .map(|(i, l)| (l, i))
            .collect()
    };
    Ok(labels
        .iter()
        .map(|l| {
            let mut row = vec![0.0; columns.len()];
            row[columns[l]] = 1.0;
            row
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn fixture(files: &[(&str, &str)]) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        for (suffix, body) in files {
            fs::write(dir.path().join(format!("TOY_{suffix}.txt")), body).unwrap();
        }
        dir
    }

    const TRIANGLES: [(&str, &str); 3] = [
        ("A", "1, 2\n2, 1\n2, 3\n3, 1\n4, 5\n5, 6\n6, 4\n6, 4\n"),
        ("graph_indicator", "1\n1\n1\n2\n2\n2\n"),
        ("graph_labels", "1\n-1\n"),
    ];

    #[test]
    fn two_triangles() {
        let dir = fixture(&TRIANGLES);
        let ds = read_tu_dataset(dir.path(), "TOY").unwrap();
        assert_eq!(ds.len(), 2);
        for g in &ds.graphs {
            assert_eq!(*g, Graph::complete(3));
        }
        assert_eq!(ds.graph_labels, vec![1, -1]);
        assert_eq!(ds.class_indices(), vec![1, 0]);
        assert!(ds.node_features.is_none());
    }

    #[test]
    fn node_labels_become_one_hot() {
        let mut files = TRIANGLES.to_vec();
        files.push(("node_labels", "1\n0\n0\n1\n1\n0\n"));
        let dir = fixture(&files);
        let ds = read_tu_dataset(dir.path(), "TOY").unwrap();
        let x = ds.node_features.unwrap();
        assert_eq!(
            x[0].to_rows(),
            vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 0.0]]
        );
        assert_eq!(x[1].shape(), (3, 2));
    }

    #[test]
    fn attributes_win_over_labels() {
        let mut files = TRIANGLES.to_vec();
        files.push(("node_labels", "1\n0\n0\n1\n1\n0\n"));
        files.push(("node_attributes", "0.5, 1\n1, 2\n2, 3\n3, 4\n4, 5\n5, 6\n"));
        let dir = fixture(&files);
        let x = read_tu_dataset(dir.path(), "TOY")
            .unwrap()
            .node_features
            .unwrap();
        assert_eq!(x[0].row(0), &[0.5, 1.0]);
        assert_eq!(x[1].row(2), &[5.0, 6.0]);
    }

    #[test]
    fn out_of_range_edge_names_its_line() {
        let mut files = TRIANGLES.to_vec();
        files[0] = ("A", "1, 2\n3, 7\n");
        let dir = fixture(&files);
        let err = read_tu_dataset(dir.path(), "TOY").unwrap_err().to_string();
        assert!(err.contains("TOY_A.txt:2:"), "{err}");
    }

    #[test]
    fn ragged_indicator_and_missing_files() {
        let mut files = TRIANGLES.to_vec();
        files[1] = ("graph_indicator", "1\n1\n2\n1\n2\n2\n");
        let dir = fixture(&files);
        let err = read_tu_dataset(dir.path(), "TOY").unwrap_err().to_string();
        assert!(err.contains("graph_indicator.txt:4:"), "{err}");

        let dir = fixture(&TRIANGLES[1..]);
        assert!(matches!(
            read_tu_dataset(dir.path(), "TOY"),
            Err(Error::Io { .. })
        ));
    }
}
