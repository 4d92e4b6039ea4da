//! Forward pass with a recorded tape, and reverse-mode gradients.

use crate::coarsen::{pool_matrix, PoolMatrix};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::hierarchy::{build_hierarchy, HierarchyOptions};
use crate::matrix::FeatureMatrix;

use super::layers::{
    gcn_propagate, l2_normalize_backward, l2_normalize_rows_with_norms, layer_readout_backward,
    layer_readout_with_argmax, neighbor_mean_transpose, relu, sage_aggregate,
};
use super::{ConvKind, ModelConfig, Params, CONV_LAYERS, POOL_LAYERS};

/// A graph with its features and the first pooling levels precomputed.
///
/// If the hierarchy bottoms out before the second pool, the remaining pools
/// are identity maps on the last level.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphInput {
    pub graphs: Vec<Graph>,
    pub pools: Vec<PoolMatrix>,
    pub features: FeatureMatrix,
}

impl GraphInput {
    pub fn new(g: &Graph, features: FeatureMatrix) -> Result<GraphInput> {
        if features.rows() != g.node_count() {
            return Err(Error::Shape(format!(
                "{} feature rows for a graph with {} nodes",
                features.rows(),
                g.node_count()
            )));
        }
        if g.node_count() == 0 {
            return Err(Error::Shape("cannot classify an empty graph".into()));
        }
        let h = build_hierarchy(g, None, HierarchyOptions::default())?;
        let mut graphs = vec![g.clone()];
        let mut pools = Vec::with_capacity(POOL_LAYERS);
        for k in 0..POOL_LAYERS {
            match h.levels().get(k).and_then(|l| l.assignment.as_ref()) {
                Some(a) => {
                    pools.push(pool_matrix(a, graphs[k].node_count())?);
                    graphs.push(h.level(k + 1).graph.clone());
                }
                None => {
                    pools.push(PoolMatrix::identity(graphs[k].node_count()));
                    graphs.push(graphs[k].clone());
                }
            }
        }
        Ok(GraphInput {
            graphs,
            pools,
            features,
        })
    }

    /// Same graph and features with node `i` relabeled `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<GraphInput> {
        GraphInput::new(
            &self.graphs[0].permute(perm)?,
            self.features.permute_rows(perm)?,
        )
    }
}

/// Intermediates of one conv block.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerTape {
    pub input: FeatureMatrix,
    /// `Â·x` for GCN, `[x | neighbor mean]` for GraphSAGE.
    pub aggregated: FeatureMatrix,
    pub pre_activation: FeatureMatrix,
    pub normalized: FeatureMatrix,
    pub norms: Vec<f64>,
    pub argmax: Vec<usize>,
    pub readout: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tape {
    pub layers: Vec<LayerTape>,
    /// Concatenated layer readouts, the head's input.
    pub readouts: Vec<f64>,
}

impl Tape {
    /// Recomputes the head from the recorded readouts.
    pub fn replay_logits(&self, params: &Params) -> Vec<f64> {
        head(params, &self.readouts)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Output {
    pub logits: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl Output {
    pub fn predicted(&self) -> usize {
        argmax(&self.logits)
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn head(params: &Params, readouts: &[f64]) -> Vec<f64> {
    let w = &params.head_weight;
    let mut logits = params.head_bias.clone();
    for (k, &r) in readouts.iter().enumerate() {
        for (l, &wv) in logits.iter_mut().zip(w.row(k)) {
            *l += r * wv;
        }
    }
    logits
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

fn aggregate(kind: ConvKind, g: &Graph, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    match kind {
        ConvKind::Gcn => gcn_propagate(g, x),
        ConvKind::SageMean => sage_aggregate(g, x),
    }
}

fn aggregate_backward(kind: ConvKind, g: &Graph, d_agg: &FeatureMatrix) -> Result<FeatureMatrix> {
    match kind {
        ConvKind::Gcn => gcn_propagate(g, d_agg),
        ConvKind::SageMean => {
            let (d_self, d_mean) = d_agg.hsplit(d_agg.cols() / 2);
            let mut dx = neighbor_mean_transpose(g, &d_mean)?;
            dx.add_assign(&d_self);
            Ok(dx)
        }
    }
}

fn check_params(cfg: &ModelConfig, params: &Params, input: &GraphInput) -> Result<()> {
    if params.conv.len() != CONV_LAYERS || input.graphs.len() != CONV_LAYERS {
        return Err(Error::Shape(format!(
            "expected {CONV_LAYERS} conv layers and graph levels"
        )));
    }
    if input.features.cols() != cfg.input_dim {
        return Err(Error::Shape(format!(
            "input has {} features, model expects {}",
            input.features.cols(),
            cfg.input_dim
        )));
    }
    if params.head_weight.shape() != (cfg.readout_dim(), cfg.n_classes)
        || params.head_bias.len() != cfg.n_classes
    {
        return Err(Error::Shape(
            "head parameters do not match the config".into(),
        ));
    }
    Ok(())
}

/// Runs the network and records everything the backward pass needs.
pub fn forward(cfg: &ModelConfig, params: &Params, input: &GraphInput) -> Result<(Output, Tape)> {
    check_params(cfg, params, input)?;
    let mut layers = Vec::with_capacity(CONV_LAYERS);
    let mut readouts = Vec::with_capacity(cfg.readout_dim());
    let mut x = input.features.clone();
    for k in 0..CONV_LAYERS {
        let aggregated = aggregate(cfg.conv, &input.graphs[k], &x)?;
        let pre_activation = aggregated.matmul(&params.conv[k])?;
        let (normalized, norms) = l2_normalize_rows_with_norms(&relu(&pre_activation));
        let (readout, argmax) = layer_readout_with_argmax(&normalized)?;
        readouts.extend_from_slice(&readout);
        let next = match input.pools.get(k) {
            Some(p) if k < POOL_LAYERS => Some(p.apply(&normalized)?),
            _ => None,
        };
        layers.push(LayerTape {
            input: x,
            aggregated,
            pre_activation,
            normalized,
            norms,
            argmax,
            readout,
        });
        match next {
            Some(n) => x = n,
            None => break,
        }
    }
    let logits = head(params, &readouts);
    let probabilities = softmax(&logits);
    Ok((
        Output {
            logits,
            probabilities,
        },
        Tape { layers, readouts },
    ))
}

/// Cross-entropy loss of `label` and its gradient w.r.t. every parameter.
pub fn loss_and_grad(
    cfg: &ModelConfig,
    params: &Params,
    input: &GraphInput,
    label: usize,
) -> Result<(f64, Params, Output)> {
    if label >= cfg.n_classes {
        return Err(Error::InvalidArgument(format!(
            "label {label} out of range for {} classes",
            cfg.n_classes
        )));
    }
    let (out, tape) = forward(cfg, params, input)?;
    let loss = -out.probabilities[label].max(f64::MIN_POSITIVE).ln();

    let mut grads = params.zeros_like();
    let mut d_logits = out.probabilities.clone();
    d_logits[label] -= 1.0;

    grads.head_bias.copy_from_slice(&d_logits);
    let mut d_readouts = vec![0.0; tape.readouts.len()];
    for (k, &r) in tape.readouts.iter().enumerate() {
        let w_row = params.head_weight.row(k);
        let g_row = grads.head_weight.row_mut(k);
        for c in 0..d_logits.len() {
            g_row[c] = r * d_logits[c];
        }
        d_readouts[k] = w_row.iter().zip(&d_logits).map(|(w, d)| w * d).sum();
    }

    let width = 2 * cfg.hidden;
    // Gradient flowing into layer k's normalized output from the pool above it.
    let mut from_above: Option<FeatureMatrix> = None;
    for k in (0..tape.layers.len()).rev() {
        let lt = &tape.layers[k];
        let rows = lt.normalized.rows();
        let mut d_norm =
            layer_readout_backward(rows, &lt.argmax, &d_readouts[k * width..(k + 1) * width]);
        if let Some(d) = from_above.take() {
            d_norm.add_assign(&d);
        }
        let d_act = l2_normalize_backward(&lt.normalized, &lt.norms, &d_norm);
        let d_pre = FeatureMatrix::from_fn(rows, d_act.cols(), |i, j| {
            if lt.pre_activation[(i, j)] > 0.0 {
                d_act[(i, j)]
            } else {
                0.0
            }
        });
        grads.conv[k] = lt.aggregated.t_matmul(&d_pre)?;
        if k > 0 {
            let d_agg = d_pre.matmul_t(&params.conv[k])?;
            let d_input = aggregate_backward(cfg.conv, &input.graphs[k], &d_agg)?;
            from_above = Some(input.pools[k - 1].apply_transpose(&d_input)?);
        }
    }
    Ok((loss, grads, out))
}
