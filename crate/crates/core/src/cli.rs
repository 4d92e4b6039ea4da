//! Command-line front end. [`run`] takes the argument list and output streams
//! so it can be driven from tests; the binary is a thin wrapper around it.
//!
//! Exit codes: 0 success, 1 validation or verification failure, 2 usage error
//! (bad flags, unreadable input files, arguments out of range).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::cliques::{degeneracy_ordering, maximal_cliques, maximal_cliques_bruteforce};
use crate::coarsen::Readout;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::grid::{chain_length_after, make_chain, verify_grid_equivalence, GridSpec};
use crate::hierarchy::{build_hierarchy, level_stats, pool_once, Hierarchy, HierarchyOptions};
use crate::io::document::{write_document, HierarchyDocument};
use crate::io::{read_edge_list, read_features, read_tu_dataset};
use crate::matrix::FeatureMatrix;
use crate::model::train::{clique_vs_cycle, degree_one_hot, evaluate, Sample, SYNTHETIC_MAX_NODES};
use crate::model::{train, ConvKind, GraphInput, ModelConfig, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "clique-pool", version, about = "Maximal-clique graph pooling")]
struct Cli {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the maximal cliques of a graph.
    Cliques {
        graph: PathBuf,
        /// Cross-check against brute-force enumeration (at most 20 nodes).
        #[arg(long)]
        oracle_check: bool,
    },
    /// Pool a graph once.
    Coarsen {
        graph: PathBuf,
        #[arg(long, default_value = "mean")]
        readout: Readout,
        /// Node feature table; defaults to node degree.
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Pool repeatedly until every component is one node.
    Hierarchy(HierarchyArgs),
    /// Grid experiments.
    Grid {
        #[command(subcommand)]
        command: GridCommand,
    },
    /// Pool a path graph a fixed number of times and print its length.
    Chain {
        #[arg(long)]
        length: usize,
        #[arg(long)]
        pools: u32,
    },
    /// Train the graph classifier.
    Train(TrainArgs),
}

#[derive(Debug, Args)]
struct HierarchyArgs {
    #[arg(required_unless_present = "dataset", conflicts_with = "dataset")]
    graph: Option<PathBuf>,
    /// TU dataset directory; builds a hierarchy for every graph in it.
    #[arg(long, requires = "name")]
    dataset: Option<PathBuf>,
    #[arg(long, requires = "dataset")]
    name: Option<String>,
    #[arg(long, conflicts_with = "dataset")]
    features: Option<PathBuf>,
    #[arg(long, default_value = "mean")]
    readout: Readout,
    /// Write the hierarchy document here.
    #[arg(long, conflicts_with = "dataset")]
    out: Option<PathBuf>,
    /// Print per-level statistics.
    #[arg(long)]
    stats: bool,
    /// Include the dependency DAG.
    #[arg(long)]
    dag: bool,
}

#[derive(Debug, Subcommand)]
enum GridCommand {
    /// Check clique pooling against sliding-window max pooling on a random image.
    Verify {
        #[arg(long)]
        width: usize,
        #[arg(long)]
        height: usize,
        #[arg(long)]
        levels: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        channels: usize,
    },
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long, requires = "name", required_unless_present = "synthetic")]
    dataset: Option<PathBuf>,
    #[arg(long, requires = "dataset")]
    name: Option<String>,
    /// Clique-vs-cycle toy task with this many graphs.
    #[arg(long, conflicts_with = "dataset")]
    synthetic: Option<usize>,
    #[arg(long, default_value = "gcn")]
    conv: ConvKind,
    #[arg(long, default_value_t = 64)]
    hidden: usize,
    #[arg(long, default_value_t = 500)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    lr: f64,
    #[arg(long, default_value_t = 1e-3)]
    weight_decay: f64,
    /// Mini-batch size; full batch when omitted.
    #[arg(long)]
    batch_size: Option<usize>,
    /// Print a progress line every this many epochs (human output only).
    #[arg(long, default_value_t = 50)]
    log_every: usize,
}

/// Outcome of a subcommand that ran to completion.
enum Status {
    Ok,
    Failed,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(Status::Ok) => 0,
        Ok(Status::Failed) => 1,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } | Error::InvalidArgument(_) | Error::OracleTooLarge(..) => 2,
        _ => 1,
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<Status> {
    let json = cli.json;
    match &cli.command {
        Command::Cliques {
            graph,
            oracle_check,
        } => cmd_cliques(&read_edge_list(graph)?, *oracle_check, json, out),
        Command::Coarsen {
            graph,
            readout,
            features,
        } => {
            let g = read_edge_list(graph)?;
            let x = load_features(&g, features.as_deref())?;
            cmd_coarsen(&g, &x, *readout, json, out)
        }
        Command::Hierarchy(args) => cmd_hierarchy(args, json, out),
        Command::Grid {
            command:
                GridCommand::Verify {
                    width,
                    height,
                    levels,
                    seed,
                    channels,
                },
        } => cmd_grid_verify(
            GridSpec::new(*width, *height),
            *levels,
            *seed,
            *channels,
            json,
            out,
        ),
        Command::Chain { length, pools } => cmd_chain(*length, *pools, json, out),
        Command::Train(args) => cmd_train(args, json, out),
    }
}

fn emit(out: &mut dyn Write, text: impl std::fmt::Display) -> Result<()> {
    writeln!(out, "{text}").map_err(|e| Error::io("<stdout>", e))
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

fn load_features(g: &Graph, path: Option<&Path>) -> Result<FeatureMatrix> {
    match path {
        None => Ok(FeatureMatrix::from_fn(g.node_count(), 1, |v, _| {
            g.degree(v) as f64
        })),
        Some(p) => {
            let x = read_features(p)?;
            if x.rows() != g.node_count() {
                return Err(Error::InvalidArgument(format!(
                    "{} has {} rows but the graph has {} nodes",
                    p.display(),
                    x.rows(),
                    g.node_count()
                )));
            }
            Ok(x)
        }
    }
}

fn cmd_cliques(g: &Graph, oracle_check: bool, json: bool, out: &mut dyn Write) -> Result<Status> {
    let cliques = maximal_cliques(g);
    let degeneracy = degeneracy_ordering(g).degeneracy;
    let oracle = if oracle_check {
        Some(maximal_cliques_bruteforce(g)? == cliques)
    } else {
        None
    };
    if json {
        emit(
            out,
            json!({
                "nodes": g.node_count(),
                "edges": g.edge_count(),
                "degeneracy": degeneracy,
                "cliques": cliques,
                "oracle_match": oracle,
            }),
        )?;
    } else {
        emit(
            out,
            format!(
                "{} nodes, {} edges, degeneracy {degeneracy}",
                g.node_count(),
                g.edge_count()
            ),
        )?;
        emit(
            out,
            format!(
                "{} maximal cliques (largest {})",
                cliques.len(),
                cliques.max_size()
            ),
        )?;
        for c in &cliques {
            emit(out, join(c))?;
        }
        if let Some(ok) = oracle {
            emit(
                out,
                format!("oracle check: {}", if ok { "PASS" } else { "FAIL" }),
            )?;
        }
    }
    Ok(if oracle == Some(false) {
        Status::Failed
    } else {
        Status::Ok
    })
}

fn cmd_coarsen(
    g: &Graph,
    x: &FeatureMatrix,
    readout: Readout,
    json: bool,
    out: &mut dyn Write,
) -> Result<Status> {
    let step = pool_once(g, Some(x), readout)?;
    let pooled = step.features.expect("features were given");
    let a = &step.assignment;
    if json {
        emit(
            out,
            json!({
                "cliques": step.cliques,
                "pools": a.pools,
                "node_to_pools": a.node_to_pools,
                "graph": {"nodes": step.graph.node_count(), "edges": step.graph.edge_list()},
                "readout": readout,
                "features": pooled.to_rows(),
            }),
        )?;
        return Ok(Status::Ok);
    }
    emit(
        out,
        format!(
            "{} nodes -> {} pools ({} nodes in more than one pool)",
            g.node_count(),
            a.pool_count(),
            a.multi_assigned()
        ),
    )?;
    for (p, pool) in a.pools.iter().enumerate() {
        emit(out, format!("pool {p}: {}", join(&pool.members)))?;
    }
    let edges: Vec<String> = step
        .graph
        .edges()
        .map(|(u, v)| format!("{u}-{v}"))
        .collect();
    emit(
        out,
        format!("coarsened edges ({}): {}", edges.len(), edges.join(" ")),
    )?;
    let name = match readout {
        Readout::Mean => "mean",
        Readout::Max => "max",
    };
    emit(out, format!("pooled features ({name}):"))?;
    for (p, row) in pooled.to_rows().iter().enumerate() {
        emit(out, format!("pool {p}: {}", join(row)))?;
    }
    Ok(Status::Ok)
}

fn cmd_hierarchy(args: &HierarchyArgs, json: bool, out: &mut dyn Write) -> Result<Status> {
    let opts = HierarchyOptions {
        readout: args.readout,
        max_levels: None,
    };
    if let (Some(dir), Some(name)) = (&args.dataset, &args.name) {
        return hierarchy_dataset(dir, name, opts, args.stats, json, out);
    }
    let path = args
        .graph
        .as_ref()
        .expect("clap requires a graph or a dataset");
    let g = read_edge_list(path)?;
    let x = args
        .features
        .as_deref()
        .map(|p| load_features(&g, Some(p)))
        .transpose()?;
    let h = build_hierarchy(&g, x.as_ref(), opts)?;
    let doc = HierarchyDocument::from_hierarchy(&h, args.dag);
    if let Some(p) = &args.out {
        write_document(&doc, p)?;
    }
    let top = h.levels().last().and_then(|l| l.features.as_ref());
    if json {
        emit(
            out,
            json!({
                "node_counts": h.node_counts(),
                "stats": doc.stats,
                "dag": doc.dag,
                "features": top.map(FeatureMatrix::to_rows),
            }),
        )?;
        return Ok(Status::Ok);
    }
    emit(
        out,
        format!(
            "{} levels, node counts: {}",
            h.depth(),
            join(&h.node_counts())
        ),
    )?;
    if args.stats {
        print_stats(&h, out)?;
    }
    if let Some(dag) = &doc.dag {
        emit(
            out,
            format!(
                "dependency dag: {} nodes, {} edges",
                dag.nodes.len(),
                dag.edges.len()
            ),
        )?;
    }
    if let Some(x) = top {
        for (v, row) in x.to_rows().iter().enumerate() {
            emit(out, format!("top node {v}: {}", join(row)))?;
        }
    }
    if let Some(p) = &args.out {
        emit(out, format!("wrote {}", p.display()))?;
    }
    Ok(Status::Ok)
}

fn print_stats(h: &Hierarchy, out: &mut dyn Write) -> Result<()> {
    emit(out, "level  nodes  edges  cliques  max  mean  multi")?;
    for s in level_stats(h) {
        emit(
            out,
            format!(
                "{:>5}  {:>5}  {:>5}  {:>7}  {:>3}  {:>4.2}  {:>5}",
                s.level,
                s.nodes,
                s.edges,
                s.cliques,
                s.max_clique_size,
                s.mean_clique_size,
                s.multi_assigned
            ),
        )?;
    }
    Ok(())
}

fn hierarchy_dataset(
    dir: &Path,
    name: &str,
    opts: HierarchyOptions,
    stats: bool,
    json: bool,
    out: &mut dyn Write,
) -> Result<Status> {
    let ds = read_tu_dataset(dir, name)?;
    let mut failures = 0;
    let mut rows = Vec::new();
    for (i, g) in ds.graphs.iter().enumerate() {
        match build_hierarchy(g, None, opts) {
            Ok(h) => {
                if json {
                    rows.push(json!({"graph": i, "node_counts": h.node_counts()}));
                } else {
                    emit(out, format!("graph {i}: {}", join(&h.node_counts())))?;
                    if stats {
                        print_stats(&h, out)?;
                    }
                }
            }
            Err(e @ Error::Divergence { .. }) => {
                failures += 1;
                if json {
                    rows.push(json!({"graph": i, "error": e.to_string()}));
                } else {
                    emit(out, format!("graph {i}: {e}"))?;
                }
            }
            Err(e) => return Err(e),
        }
    }
    if json {
        emit(
            out,
            json!({"dataset": name, "graphs": rows, "failures": failures}),
        )?;
    } else {
        emit(
            out,
            format!("{name}: {} graphs, {failures} failed to converge", ds.len()),
        )?;
    }
    Ok(if failures == 0 {
        Status::Ok
    } else {
        Status::Failed
    })
}

fn cmd_grid_verify(
    spec: GridSpec,
    levels: u32,
    seed: u64,
    channels: usize,
    json: bool,
    out: &mut dyn Write,
) -> Result<Status> {
    if channels == 0 {
        return Err(Error::InvalidArgument("channels must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = FeatureMatrix::from_fn(spec.pixels(), channels, |_, _| rng.gen::<f64>());
    let report = verify_grid_equivalence(spec, &x, levels)?;
    let passed = report.passed();
    if json {
        emit(out, json!({"report": report, "passed": passed}))?;
    } else {
        for l in &report.levels {
            emit(
                out,
                format!(
                    "level {}: {}x{} -> {}x{}, window {}, cumulative {}: {}",
                    l.level,
                    l.input_size.0,
                    l.input_size.1,
                    l.output_size.0,
                    l.output_size.1,
                    l.expected_window,
                    l.cumulative_window,
                    if l.passed() { "PASS" } else { "FAIL" }
                ),
            )?;
        }
        emit(out, if passed { "PASS" } else { "FAIL" })?;
    }
    Ok(if passed { Status::Ok } else { Status::Failed })
}

fn cmd_chain(length: usize, pools: u32, json: bool, out: &mut dyn Write) -> Result<Status> {
    let expected = chain_length_after(length, pools)?;
    let mut g = make_chain(length);
    for _ in 0..pools {
        g = pool_once(&g, None, Readout::Mean)?.graph;
    }
    let pooled = g.node_count();
    if json {
        emit(
            out,
            json!({"length": length, "pools": pools, "pooled_length": pooled, "expected": expected}),
        )?;
    } else {
        emit(out, pooled)?;
    }
    Ok(if pooled == expected {
        Status::Ok
    } else {
        Status::Failed
    })
}

fn cmd_train(args: &TrainArgs, json: bool, out: &mut dyn Write) -> Result<Status> {
    let (data, input_dim, n_classes) = match (&args.dataset, &args.name, args.synthetic) {
        (Some(dir), Some(name), _) => tu_samples(dir, name)?,
        (None, _, Some(n)) => {
            if n == 0 {
                return Err(Error::InvalidArgument(
                    "--synthetic needs at least one graph".into(),
                ));
            }
            (clique_vs_cycle(n, args.seed)?, SYNTHETIC_MAX_NODES, 2)
        }
        _ => unreachable!("clap requires --dataset/--name or --synthetic"),
    };
    let cfg = ModelConfig {
        conv: args.conv,
        input_dim,
        hidden: args.hidden,
        n_classes,
        seed: args.seed,
    };
    let tc = TrainConfig {
        epochs: args.epochs,
        learning_rate: args.lr,
        weight_decay: args.weight_decay,
        batch_size: args.batch_size,
    };
    let mut write_err = None;
    let outcome = train(&cfg, &data, &tc, |m| {
        let line = if json {
            Some(serde_json::to_string(m).expect("metrics serialize"))
        } else if args.log_every > 0 && (m.epoch % args.log_every == 0 || m.epoch == tc.epochs) {
            Some(format!(
                "epoch {:>4}  steps {:>5}  loss {:.6}  accuracy {:.4}",
                m.epoch, m.steps, m.loss, m.accuracy
            ))
        } else {
            None
        };
        if let Some(line) = line {
            if let Err(e) = emit(out, line) {
                write_err.get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = write_err {
        return Err(e);
    }
    let (loss, accuracy) = evaluate(&cfg, &outcome.params, &data)?;
    let params = outcome.params.param_count();
    if json {
        emit(
            out,
            json!({"final": {"loss": loss, "accuracy": accuracy, "parameters": params, "graphs": data.len()}}),
        )?;
    } else {
        emit(
            out,
            format!("final loss {loss:.6}, training accuracy {accuracy:.4} ({params} parameters, {} graphs)", data.len()),
        )?;
    }
    Ok(Status::Ok)
}

/// TU graphs as training samples. Graphs without node features get a degree
/// one-hot sized to the largest degree in the dataset.
fn tu_samples(dir: &Path, name: &str) -> Result<(Vec<Sample>, usize, usize)> {
    let ds = read_tu_dataset(dir, name)?;
    if ds.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "dataset {name} has no graphs"
        )));
    }
    let labels = ds.class_indices();
    let n_classes = ds.classes().len();
    let features: Vec<FeatureMatrix> = match &ds.node_features {
        Some(x) => x.clone(),
        None => {
            let width = ds.graphs.iter().flat_map(Graph::degrees).max().unwrap_or(0) + 1;
            ds.graphs.iter().map(|g| degree_one_hot(g, width)).collect()
        }
    };
    let input_dim = features[0].cols();
    let samples = ds
        .graphs
        .iter()
        .zip(features)
        .zip(labels)
        .map(|((g, x), label)| {
            Ok(Sample {
                input: GraphInput::new(g, x)?,
                label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((samples, input_dim, n_classes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("clique-pool").chain(args.iter().copied());
        let code = run(argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn chain_32_by_5_is_one() {
        let (code, out, _) = run_str(&["chain", "--length", "32", "--pools", "5"]);
        assert_eq!((code, out.as_str()), (0, "1\n"));
    }

    #[test]
    fn chain_out_of_range_is_usage() {
        let (code, _, err) = run_str(&["chain", "--length", "4", "--pools", "3"]);
        assert_eq!(code, 2, "{err}");
    }

    #[test]
    fn grid_verify_passes() {
        let (code, out, _) = run_str(&[
            "grid", "verify", "--width", "8", "--height", "8", "--levels", "3",
        ]);
        assert_eq!(code, 0);
        assert!(out.ends_with("PASS\n"), "{out}");
    }

    #[test]
    fn missing_file_and_bad_flags() {
        let (code, _, err) = run_str(&["cliques", "definitely-missing.txt"]);
        assert_eq!(code, 2);
        assert!(err.contains("definitely-missing.txt"), "{err}");
        let (code, _, _) = run_str(&["chain", "--length", "3", "--bogus"]);
        assert_eq!(code, 2);
        let (code, out, _) = run_str(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("Usage"));
    }
}
