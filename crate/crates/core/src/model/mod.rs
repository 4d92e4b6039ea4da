//! Graph classifier with clique pooling between convolutions.
//!
//! Architecture: conv → pool → conv → pool → conv. Every conv output is
//! row-normalized and summarized by a mean‖max readout; the three readouts are
//! concatenated and fed to a linear softmax head. Pooling uses the precomputed
//! mean pool matrices of the graph's hierarchy and owns no parameters.

pub mod layers;
pub mod network;
pub mod optim;
pub mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

pub use network::{forward, loss_and_grad, GraphInput, Output, Tape};
pub use optim::Adam;
pub use train::{train, TrainConfig, TrainOutcome};

pub const CONV_LAYERS: usize = 3;
pub const POOL_LAYERS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvKind {
    Gcn,
    #[serde(rename = "sage")]
    SageMean,
}

impl std::str::FromStr for ConvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gcn" => Ok(ConvKind::Gcn),
            "sage" | "sage-mean" => Ok(ConvKind::SageMean),
            other => Err(Error::InvalidArgument(format!(
                "unknown convolution {other:?} (expected gcn or sage)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub conv: ConvKind,
    pub input_dim: usize,
    pub hidden: usize,
    pub n_classes: usize,
    pub seed: u64,
}

impl ModelConfig {
    /// Rows of the weight matrix for a conv layer taking `fan_in` features.
    fn conv_rows(&self, fan_in: usize) -> usize {
        match self.conv {
            ConvKind::Gcn => fan_in,
            ConvKind::SageMean => 2 * fan_in,
        }
    }

    /// Length of the concatenated readouts fed to the head.
    pub fn readout_dim(&self) -> usize {
        CONV_LAYERS * 2 * self.hidden
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden == 0 || self.n_classes == 0 {
            return Err(Error::InvalidArgument(format!(
                "input_dim, hidden and n_classes must be positive (got {}, {}, {})",
                self.input_dim, self.hidden, self.n_classes
            )));
        }
        Ok(())
    }
}

/// Trainable parameters. Convolution weights map `F_in` (or `2·F_in` for
/// GraphSAGE) to `hidden`; the head maps the readouts to class scores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub conv: Vec<FeatureMatrix>,
    pub head_weight: FeatureMatrix,
    pub head_bias: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamCounts {
    pub convolution: usize,
    pub pooling: usize,
    pub head: usize,
}

impl ParamCounts {
    pub fn total(&self) -> usize {
        self.convolution + self.pooling + self.head
    }
}

impl Params {
    /// Glorot-uniform weights and a zero bias, seeded from `cfg.seed`.
    pub fn init(cfg: &ModelConfig) -> Result<Params> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut glorot = |rows: usize, cols: usize| {
            let limit = (6.0 / (rows + cols) as f64).sqrt();
            FeatureMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-limit..limit))
        };
        let mut conv = Vec::with_capacity(CONV_LAYERS);
        let mut fan_in = cfg.input_dim;
        for _ in 0..CONV_LAYERS {
            conv.push(glorot(cfg.conv_rows(fan_in), cfg.hidden));
            fan_in = cfg.hidden;
        }
        let head_weight = glorot(cfg.readout_dim(), cfg.n_classes);
        Ok(Params {
            conv,
            head_weight,
            head_bias: vec![0.0; cfg.n_classes],
        })
    }

    pub fn zeros_like(&self) -> Params {
        Params {
            conv: self
                .conv
                .iter()
                .map(|w| FeatureMatrix::zeros(w.rows(), w.cols()))
                .collect(),
            head_weight: FeatureMatrix::zeros(self.head_weight.rows(), self.head_weight.cols()),
            head_bias: vec![0.0; self.head_bias.len()],
        }
    }

    /// Parameter counts by stage. Pooling stages hold no tensors, so their
    /// count is whatever they own: nothing.
    pub fn counts(&self) -> ParamCounts {
        ParamCounts {
            convolution: self.conv.iter().map(|w| w.as_slice().len()).sum(),
            pooling: 0,
            head: self.head_weight.as_slice().len() + self.head_bias.len(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.counts().total()
    }

    /// Every tensor as a flat slice, paired with whether weight decay applies.
    pub fn tensors(&self) -> Vec<(&[f64], bool)> {
        let mut out: Vec<(&[f64], bool)> = self.conv.iter().map(|w| (w.as_slice(), true)).collect();
        out.push((self.head_weight.as_slice(), true));
        out.push((&self.head_bias, false));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(&mut [f64], bool)> {
        let mut out: Vec<(&mut [f64], bool)> = self
            .conv
            .iter_mut()
            .map(|w| (w.as_mut_slice(), true))
            .collect();
        out.push((self.head_weight.as_mut_slice(), true));
        out.push((&mut self.head_bias, false));
        out
    }

    /// `self += scale · other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &Params, scale: f64) {
        for ((dst, _), (src, _)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(conv: ConvKind) -> ModelConfig {
        ModelConfig {
            conv,
            input_dim: 5,
            hidden: 8,
            n_classes: 3,
            seed: 1,
        }
    }

    #[test]
    fn parameter_shapes() {
        let p = Params::init(&cfg(ConvKind::Gcn)).unwrap();
        let shapes: Vec<_> = p.conv.iter().map(FeatureMatrix::shape).collect();
        assert_eq!(shapes, vec![(5, 8), (8, 8), (8, 8)]);
        assert_eq!(p.head_weight.shape(), (48, 3));
        assert_eq!(p.param_count(), 40 + 64 + 64 + 144 + 3);

        let p = Params::init(&cfg(ConvKind::SageMean)).unwrap();
        let shapes: Vec<_> = p.conv.iter().map(FeatureMatrix::shape).collect();
        assert_eq!(shapes, vec![(10, 8), (16, 8), (16, 8)]);
        assert_eq!(p.counts().pooling, 0);
    }

    #[test]
    fn init_is_seeded() {
        let a = Params::init(&cfg(ConvKind::Gcn)).unwrap();
        let b = Params::init(&cfg(ConvKind::Gcn)).unwrap();
        assert_eq!(a, b);
        let c = Params::init(&ModelConfig {
            seed: 2,
            ..cfg(ConvKind::Gcn)
        })
        .unwrap();
        assert_ne!(a, c);
        assert!(Params::init(&ModelConfig {
            hidden: 0,
            ..cfg(ConvKind::Gcn)
        })
        .is_err());
    }

    #[test]
    fn conv_names() {
        assert_eq!("gcn".parse::<ConvKind>().unwrap(), ConvKind::Gcn);
        assert_eq!("sage".parse::<ConvKind>().unwrap(), ConvKind::SageMean);
        assert!("gat".parse::<ConvKind>().is_err());
    }
}
