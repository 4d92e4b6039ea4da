//! Message-passing layers, row normalization and layer readout, each with the
//! backward pass the classifier needs.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::FeatureMatrix;

fn check_nodes(g: &Graph, x: &FeatureMatrix) -> Result<()> {
    if x.rows() != g.node_count() {
        return Err(Error::Shape(format!(
            "{} feature rows for a graph with {} nodes",
            x.rows(),
            g.node_count()
        )));
    }
    Ok(())
}

/// `D̂^{-1/2} (A + I) D̂^{-1/2} · x` with `D̂` the degree matrix of `A + I`.
/// The operator is symmetric, so this is also its own transpose.
pub fn gcn_propagate(g: &Graph, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    check_nodes(g, x)?;
    let inv_sqrt: Vec<f64> = (0..g.node_count())
        .map(|v| 1.0 / ((g.degree(v) + 1) as f64).sqrt())
        .collect();
    let mut out = FeatureMatrix::zeros(x.rows(), x.cols());
    for v in 0..g.node_count() {
        let row = out.row_mut(v);
        for &u in std::iter::once(&v).chain(g.neighbors(v)) {
            let w = inv_sqrt[v] * inv_sqrt[u];
            for (o, &val) in row.iter_mut().zip(x.row(u)) {
                *o += w * val;
            }
        }
    }
    Ok(out)
}

/// Mean of neighbor rows; isolated nodes get a zero row.
pub fn neighbor_mean(g: &Graph, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    check_nodes(g, x)?;
    let mut out = FeatureMatrix::zeros(x.rows(), x.cols());
    for v in 0..g.node_count() {
        let nbrs = g.neighbors(v);
        if nbrs.is_empty() {
            continue;
        }
        let w = 1.0 / nbrs.len() as f64;
        let row = out.row_mut(v);
        for &u in nbrs {
            for (o, &val) in row.iter_mut().zip(x.row(u)) {
                *o += w * val;
            }
        }
    }
    Ok(out)
}

/// Transpose of [`neighbor_mean`]: node `v` sends `y_v / deg(v)` to each neighbor.
pub fn neighbor_mean_transpose(g: &Graph, y: &FeatureMatrix) -> Result<FeatureMatrix> {
    check_nodes(g, y)?;
    let mut out = FeatureMatrix::zeros(y.rows(), y.cols());
    for v in 0..g.node_count() {
        let nbrs = g.neighbors(v);
        if nbrs.is_empty() {
            continue;
        }
        let w = 1.0 / nbrs.len() as f64;
        for &u in nbrs {
            let src = y.row(v).to_vec();
            for (o, s) in out.row_mut(u).iter_mut().zip(src) {
                *o += w * s;
            }
        }
    }
    Ok(out)
}

/// GraphSAGE-mean input `[x | mean of neighbor rows]`.
pub fn sage_aggregate(g: &Graph, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    x.hconcat(&neighbor_mean(g, x)?)
}

pub fn relu(x: &FeatureMatrix) -> FeatureMatrix {
    FeatureMatrix::from_fn(x.rows(), x.cols(), |i, j| x[(i, j)].max(0.0))
}

/// `relu(Â · x · w)`.
pub fn gcn_layer(g: &Graph, x: &FeatureMatrix, w: &FeatureMatrix) -> Result<FeatureMatrix> {
    Ok(relu(&gcn_propagate(g, x)?.matmul(w)?))
}

/// `relu([x | neighbor mean] · w)`; `w` has `2F` rows.
pub fn sage_mean_layer(g: &Graph, x: &FeatureMatrix, w: &FeatureMatrix) -> Result<FeatureMatrix> {
    Ok(relu(&sage_aggregate(g, x)?.matmul(w)?))
}

/// Divides each row by its Euclidean norm and returns the norms. Zero rows
/// are left as they are.
pub fn l2_normalize_rows_with_norms(x: &FeatureMatrix) -> (FeatureMatrix, Vec<f64>) {
    let mut out = x.clone();
    let mut norms = Vec::with_capacity(x.rows());
    for i in 0..x.rows() {
        let row = out.row_mut(i);
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|v| *v /= norm);
        }
        norms.push(norm);
    }
    (out, norms)
}

pub fn l2_normalize_rows(x: &FeatureMatrix) -> FeatureMatrix {
    l2_normalize_rows_with_norms(x).0
}

/// Backward pass of row normalization given the normalized output `y`.
pub fn l2_normalize_backward(
    y: &FeatureMatrix,
    norms: &[f64],
    dy: &FeatureMatrix,
) -> FeatureMatrix {
    let mut dx = dy.clone();
    for (i, &norm) in norms.iter().enumerate() {
        if norm == 0.0 {
            continue;
        }
        let yr = y.row(i);
        let dot: f64 = yr.iter().zip(dy.row(i)).map(|(a, b)| a * b).sum();
        for (d, &yv) in dx.row_mut(i).iter_mut().zip(yr) {
            *d = (*d - yv * dot) / norm;
        }
    }
    dx
}

/// Column means followed by column maxima, plus the row holding each maximum
/// (lowest row on ties).
pub fn layer_readout_with_argmax(x: &FeatureMatrix) -> Result<(Vec<f64>, Vec<usize>)> {
    if x.rows() == 0 {
        return Err(Error::Shape("readout of a layer with no nodes".into()));
    }
    let f = x.cols();
    let mut out = vec![0.0; 2 * f];
    let mut argmax = vec![0usize; f];
    for i in 0..x.rows() {
        for (j, &v) in x.row(i).iter().enumerate() {
            out[j] += v;
            if i == 0 || v > out[f + j] {
                out[f + j] = v;
                argmax[j] = i;
            }
        }
    }
    let n = x.rows() as f64;
    out[..f].iter_mut().for_each(|m| *m /= n);
    Ok((out, argmax))
}

/// `[mean over rows ‖ max over rows]`, length `2F`.
pub fn layer_readout(x: &FeatureMatrix) -> Result<Vec<f64>> {
    layer_readout_with_argmax(x).map(|(r, _)| r)
}

/// Gradient of [`layer_readout`] w.r.t. its input; max gradients go to the
/// recorded argmax rows.
pub fn layer_readout_backward(rows: usize, argmax: &[usize], dr: &[f64]) -> FeatureMatrix {
    let f = argmax.len();
    let n = rows as f64;
    let mut dx = FeatureMatrix::from_fn(rows, f, |_, j| dr[j] / n);
    for (j, &i) in argmax.iter().enumerate() {
        dx[(i, j)] += dr[f + j];
    }
    dx
}
