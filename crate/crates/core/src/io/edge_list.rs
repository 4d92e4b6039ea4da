use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{build_graph, Graph};
use crate::matrix::FeatureMatrix;

use super::{read_to_string, strip_comment};

/// Reads a whitespace-separated edge list. `#` starts a comment. The first
/// content line may be `n <count>` to fix the node count (needed for isolated
/// nodes); otherwise it is one past the largest id seen.
pub fn read_edge_list(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    parse_edge_list(&read_to_string(path)?, path)
}

/// [`read_edge_list`] on in-memory text; `origin` only labels errors.
pub fn parse_edge_list(text: &str, origin: impl AsRef<Path>) -> Result<Graph> {
    let origin = origin.as_ref();
    let mut declared: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    let mut lines_at = Vec::new();
    let mut seen_content = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !seen_content && fields.first() == Some(&"n") {
            seen_content = true;
            let [_, count] = fields[..] else {
                return Err(Error::parse(origin, line_no, "header must be `n <count>`"));
            };
            let count = count
                .parse()
                .map_err(|_| Error::parse(origin, line_no, format!("bad node count {count:?}")))?;
            declared = Some((count, line_no));
            continue;
        }
        seen_content = true;
        let [a, b] = fields[..] else {
            return Err(Error::parse(
                origin,
                line_no,
                format!("expected two node ids, found {} fields", fields.len()),
            ));
        };
        let id = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(origin, line_no, format!("bad node id {s:?}")))
        };
        edges.push((id(a)?, id(b)?));
        lines_at.push(line_no);
    }

    let n = match declared {
        Some((count, _)) => {
            if let Some(i) = edges.iter().position(|&(u, v)| u.max(v) >= count) {
                let (u, v) = edges[i];
                return Err(Error::parse(
                    origin,
                    lines_at[i],
                    format!("edge ({u}, {v}) exceeds declared node count {count}"),
                ));
            }
            count
        }
        None => match edges.iter().map(|&(u, v)| u.max(v)).max() {
            Some(m) => m + 1,
            None => {
                return Err(Error::parse(
                    origin,
                    text.lines().count(),
                    "no edges and no `n <count>` header; node count unknown",
                ))
            }
        },
    };
    Ok(build_graph(&edges, n)?.0)
}

/// Reads a feature table: one row per node, whitespace-separated numbers,
/// `#` comments. All rows must have the same width.
pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    parse_features(&read_to_string(path)?, path)
}

pub fn parse_features(text: &str, origin: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let origin = origin.as_ref();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|s| match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::parse(
                    origin,
                    idx + 1,
                    format!("bad feature value {s:?}"),
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::parse(
                    origin,
                    idx + 1,
                    format!("row has {} values, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::parse(
            origin,
            text.lines().count(),
            "feature file has no rows",
        ));
    }
    FeatureMatrix::from_rows(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle() {
        let g = parse_edge_list("0 1\n1 2\n0 2", "t").unwrap();
        assert_eq!(g, Graph::complete(3));
    }

    #[test]
    fn header_only_gives_isolated_nodes() {
        let g = parse_edge_list("# five nodes\nn 5\n", "t").unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (5, 0));
    }

    #[test]
    fn comment_only_is_an_error() {
        let err = parse_edge_list("# nothing here\n", "t").unwrap_err();
        assert!(err.to_string().contains("node count unknown"), "{err}");
    }

    #[test]
    fn malformed_lines_name_the_line() {
        let err = parse_edge_list("0 1\n1 x\n", "g.txt").unwrap_err();
        assert!(err.to_string().starts_with("g.txt:2:"), "{err}");
        let err = parse_edge_list("0 1 2\n", "g.txt").unwrap_err();
        assert!(err.to_string().starts_with("g.txt:1:"), "{err}");
        let err = parse_edge_list("n 3\n0 1\n# c\n2 3\n", "g.txt").unwrap_err();
        assert!(err.to_string().starts_with("g.txt:4:"), "{err}");
    }

    #[test]
    fn features_table() {
        let x = parse_features("1 2\n# skip\n3 4.5\n", "f").unwrap();
        assert_eq!(x.to_rows(), vec![vec![1.0, 2.0], vec![3.0, 4.5]]);
        assert!(parse_features("1 2\n3\n", "f").is_err());
        assert!(parse_features("", "f").is_err());
    }
}
