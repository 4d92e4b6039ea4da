use std::fs;
use std::path::Path;
use std::process::Command;

use clique_pool::hierarchy::{build_hierarchy, HierarchyOptions};
use clique_pool::io::{read_edge_list, read_hierarchy, read_tu_dataset, write_hierarchy};
use clique_pool::Graph;

const BIN: &str = env!("CARGO_BIN_EXE_clique-pool");

/// Three graphs: a 4-cycle with a chord (5 edges), a path on 3 nodes
/// (2 edges) and a triangle with a pendant node (4 edges). Edges are listed in
/// both directions, as TU files do.
fn write_fixture(dir: &Path) {
    let undirected = [
        (1, 2),
        (2, 3),
        (3, 4),
        (4, 1),
        (1, 3),
        (5, 6),
        (6, 7),
        (8, 9),
        (9, 10),
        (10, 8),
        (10, 11),
    ];
    let mut a = String::new();
    for (u, v) in undirected {
        a.push_str(&format!("{u}, {v}\n{v}, {u}\n"));
    }
    fs::write(dir.join("MINI_A.txt"), a).unwrap();
    fs::write(
        dir.join("MINI_graph_indicator.txt"),
        "1\n1\n1\n1\n2\n2\n2\n3\n3\n3\n3\n",
    )
    .unwrap();
    fs::write(dir.join("MINI_graph_labels.txt"), "0\n1\n0\n").unwrap();
    fs::write(
        dir.join("MINI_node_labels.txt"),
        "2\n0\n2\n0\n1\n1\n1\n0\n0\n2\n1\n",
    )
    .unwrap();
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(BIN).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn tu_fixture_edge_counts() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    let ds = read_tu_dataset(dir.path(), "MINI").unwrap();
    let edges: Vec<_> = ds.graphs.iter().map(Graph::edge_count).collect();
    let nodes: Vec<_> = ds.graphs.iter().map(Graph::node_count).collect();
    assert_eq!(edges, vec![5, 2, 4]);
    assert_eq!(nodes, vec![4, 3, 4]);
    let x = ds.node_features.unwrap();
    assert!(x.iter().all(|m| m.cols() == 3));
    assert_eq!(x[0].row(0), &[0.0, 0.0, 1.0]);
    for g in &ds.graphs {
        build_hierarchy(g, None, HierarchyOptions::default()).unwrap();
    }
}

#[test]
fn hierarchy_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5)]).unwrap();
    let h = build_hierarchy(&g, None, HierarchyOptions::default()).unwrap();
    let path = dir.path().join("h.json");
    write_hierarchy(&h, &path).unwrap();
    assert_eq!(read_hierarchy(&path).unwrap(), h);
}

#[test]
fn cli_examples() {
    assert_eq!(cli(&["chain", "--length", "32", "--pools", "5"]).1, "1\n");
    let (code, out, _) = cli(&[
        "grid", "verify", "--width", "8", "--height", "8", "--levels", "3",
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("PASS"));
    let (code, _, err) = cli(&["cliques", "missing.txt"]);
    assert_eq!(code, 2);
    assert!(err.contains("missing.txt"));
    assert_eq!(cli(&["cliques", "--frobnicate", "x"]).0, 2);
    assert_eq!(
        cli(&["grid", "verify", "--width", "2", "--height", "2", "--levels", "3"]).0,
        2
    );
}

#[test]
fn cli_cliques_and_coarsen() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("c4.txt");
    fs::write(&graph, "# four-cycle\n0 1\n1 2\n2 3\n3 0\n").unwrap();
    let g = graph.to_str().unwrap();

    let (code, out, _) = cli(&["cliques", g, "--oracle-check"]);
    assert_eq!(code, 0);
    assert!(out.contains("4 maximal cliques"));
    assert!(out.contains("oracle check: PASS"));

    let (code, out, _) = cli(&["--json", "coarsen", g, "--readout", "max"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["pools"].as_array().unwrap().len(), 4);
    assert_eq!(v["graph"]["edges"].as_array().unwrap().len(), 6);
    assert_eq!(v["features"][0], serde_json::json!([2.0]));
}

#[test]
fn cli_hierarchy_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.txt");
    fs::write(&graph, "n 7\n0 1\n1 2\n2 0\n2 3\n3 4\n5 6\n").unwrap();
    let feats = dir.path().join("x.txt");
    fs::write(&feats, "1\n2\n3\n4\n5\n6\n7\n").unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let run = |out: &Path| {
        cli(&[
            "hierarchy",
            graph.to_str().unwrap(),
            "--features",
            feats.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--stats",
            "--dag",
        ])
    };
    let (ra, rb) = (run(&a), run(&b));
    assert_eq!(ra.0, 0, "{}", ra.2);
    assert_eq!(ra.1.replace("a.json", "b.json"), rb.1);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert!(
        ra.1.starts_with("3 levels, node counts: 7 3 2\n"),
        "{}",
        ra.1
    );
    let h = read_hierarchy(&a).unwrap();
    assert_eq!(h.input(), &read_edge_list(&graph).unwrap());
}

#[test]
fn cli_dataset_modes() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    let d = dir.path().to_str().unwrap();
    let (code, out, err) = cli(&["hierarchy", "--dataset", d, "--name", "MINI"]);
    assert_eq!(code, 0, "{err}");
    assert!(
        out.ends_with("MINI: 3 graphs, 0 failed to converge\n"),
        "{out}"
    );

    let args = [
        "--json",
        "train",
        "--dataset",
        d,
        "--name",
        "MINI",
        "--hidden",
        "4",
        "--epochs",
        "3",
        "--seed",
        "1",
    ];
    let (code, out, err) = cli(&args);
    assert_eq!(code, 0, "{err}");
    let lines: Vec<serde_json::Value> = out
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[2]["epoch"], 3);
    assert!(lines[3]["final"]["accuracy"].is_number());
    assert_eq!(cli(&args).1, out);
}

#[test]
fn cli_rejects_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("bad.txt");
    fs::write(&graph, "0 1\n1 two\n").unwrap();
    let (code, _, err) = cli(&["cliques", graph.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains(":2:"), "{err}");
}
