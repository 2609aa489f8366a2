//! Feed-forward autoencoder that compresses two concatenated embeddings back
//! to the width of one.
//!
//! Architecture, for embedding dimension `d`: input `2d` → hidden `2d` →
//! bottleneck `d` → hidden `2d` → output `2d`, with a rectifier after each
//! hidden layer. The bottleneck activation is the initialization vector for a
//! newly merged symbol. Training is full-batch gradient descent with a fixed
//! step size; gradients are computed by hand and checked against finite
//! differences in the test suite.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reconstruction objective. `SquaredError` treats the output layer as
/// linear; `SigmoidCrossEntropy` puts a sigmoid on the output and scores with
/// binary cross-entropy, for callers whose embeddings live in (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ReconstructionLoss {
    #[default]
    SquaredError,
    SigmoidCrossEntropy,
}

/// Training hyperparameters. Defaults: 50 epochs, step size 0.01, seed 0,
/// squared-error loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderConfig {
    #[serde(default = "default_epochs")]
    pub epochs: u32,
    #[serde(default = "default_step_size")]
    pub step_size: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub loss: ReconstructionLoss,
}

fn default_epochs() -> u32 {
    50
}

fn default_step_size() -> f64 {
    0.01
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        AutoencoderConfig {
            epochs: default_epochs(),
            step_size: default_step_size(),
            seed: 0,
            loss: ReconstructionLoss::default(),
        }
    }
}

impl AutoencoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Configuration("epochs must be at least 1".to_string()));
        }
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(Error::Configuration(format!(
                "step size must be positive and finite, got {}",
                self.step_size
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layer {
    /// out × in.
    pub(crate) weight: Array2<f64>,
    pub(crate) bias: Array1<f64>,
}

impl Layer {
    fn glorot(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Layer {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        let weight = Array2::from_shape_fn((rows, cols), |_| {
            (2.0 * rng.random::<f64>() - 1.0) * bound
        });
        // A small positive bias keeps the rectifiers initially active; a zero
        // bias parks dead units exactly on the ReLU kink, where gradients are
        // ill-defined and finite-difference checks break down.
        Layer {
            weight,
            bias: Array1::from_elem(rows, 0.01),
        }
    }
}

/// Layer-shaped gradients, one (weight, bias) block per layer.
#[derive(Debug, Clone)]
pub struct AutoencoderGradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Loss figures around one training run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainReport {
    pub initial_loss: f64,
    pub final_loss: f64,
    pub epochs_run: u32,
}

/// The autoencoder parameters plus the output nonlinearity they were trained
/// under. Values are plain data: cloning snapshots the net.
#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    dim: usize,
    layers: Vec<Layer>,
    loss: ReconstructionLoss,
}

struct ForwardPass {
    activations: Vec<Array2<f64>>, // input, a1, a2, a3
    output: Array2<f64>,
}

impl Autoencoder {
    /// Fresh net for embeddings of width `dim`, seeded deterministically.
    pub fn new(dim: usize, seed: u64, loss: ReconstructionLoss) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("autoencoder dim must be positive".to_string()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let wide = 2 * dim;
        let layers = vec![
            Layer::glorot(&mut rng, wide, wide),
            Layer::glorot(&mut rng, dim, wide),
            Layer::glorot(&mut rng, wide, dim),
            Layer::glorot(&mut rng, wide, wide),
        ];
        Ok(Autoencoder { dim, layers, loss })
    }

    pub(crate) fn from_layers(dim: usize, layers: Vec<Layer>, loss: ReconstructionLoss) -> Self {
        Autoencoder { dim, layers, loss }
    }

    pub(crate) fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Bottleneck width; inputs and outputs are twice as wide.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn loss_kind(&self) -> ReconstructionLoss {
        self.loss
    }

    /// (rows, cols) of each weight matrix in layer order.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|l| l.weight.dim()).collect()
    }

    pub fn weight(&self, layer: usize, row: usize, col: usize) -> f64 {
        self.layers[layer].weight[(row, col)]
    }

    pub fn set_weight(&mut self, layer: usize, row: usize, col: usize, value: f64) {
        self.layers[layer].weight[(row, col)] = value;
    }

    pub fn bias(&self, layer: usize, row: usize) -> f64 {
        self.layers[layer].bias[row]
    }

    pub fn set_bias(&mut self, layer: usize, row: usize, value: f64) {
        self.layers[layer].bias[row] = value;
    }

    fn batch_from_pairs(&self, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<Array2<f64>> {
        if pairs.is_empty() {
            return Err(Error::InvalidInput(
                "autoencoder needs at least one training pair".to_string(),
            ));
        }
        let wide = 2 * self.dim;
        let mut batch = Array2::zeros((pairs.len(), wide));
        for (i, (left, right)) in pairs.iter().enumerate() {
            if left.len() != self.dim || right.len() != self.dim {
                return Err(Error::InvalidInput(format!(
                    "pair {i} has lengths {}/{} but the net expects {}",
                    left.len(),
                    right.len(),
                    self.dim
                )));
            }
            for (j, &v) in left.iter().chain(right.iter()).enumerate() {
                batch[(i, j)] = v;
            }
        }
        Ok(batch)
    }

    fn forward_batch(&self, input: &Array2<f64>) -> ForwardPass {
        let mut activations: Vec<Array2<f64>> = Vec::with_capacity(4);
        activations.push(input.clone());
        for layer in &self.layers[..3] {
            let prev = activations.last().expect("seeded with the input");
            let mut z = prev.dot(&layer.weight.t());
            z += &layer.bias;
            z.mapv_inplace(|v| v.max(0.0));
            activations.push(z);
        }
        let output_layer = &self.layers[3];
        let mut z = activations
            .last()
            .expect("three hidden activations")
            .dot(&output_layer.weight.t());
        z += &output_layer.bias;
        if self.loss == ReconstructionLoss::SigmoidCrossEntropy {
            z.mapv_inplace(|v| 1.0 / (1.0 + (-v).exp()));
        }
        ForwardPass {
            activations,
            output: z,
        }
    }

    fn loss_of(&self, output: &Array2<f64>, target: &Array2<f64>) -> f64 {
        let n = output.len() as f64;
        match self.loss {
            ReconstructionLoss::SquaredError => {
                let diff = output - target;
                diff.mapv(|v| v * v).sum() / n
            }
            ReconstructionLoss::SigmoidCrossEntropy => {
                let eps = 1e-12;
                let mut total = 0.0;
                for (&y, &t) in output.iter().zip(target.iter()) {
                    let y = y.clamp(eps, 1.0 - eps);
                    total -= t * y.ln() + (1.0 - t) * (1.0 - y).ln();
                }
                total / n
            }
        }
    }

    /// Mean reconstruction loss of the net on the given pairs.
    pub fn loss(&self, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<f64> {
        let batch = self.batch_from_pairs(pairs)?;
        let pass = self.forward_batch(&batch);
        Ok(self.loss_of(&pass.output, &batch))
    }

    /// Analytic gradients of the reconstruction loss at the current
    /// parameters, averaged over the batch.
    pub fn gradients(&self, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<AutoencoderGradients> {
        let batch = self.batch_from_pairs(pairs)?;
        let pass = self.forward_batch(&batch);
        Ok(self.backward(&batch, &pass))
    }

    fn backward(&self, target: &Array2<f64>, pass: &ForwardPass) -> AutoencoderGradients {
        let n = pass.output.len() as f64;
        // The loss normalizer makes dL/dz at the output (output - target)
        // scaled by 2/n for squared error and 1/n for sigmoid cross-entropy.
        let mut delta: Array2<f64> = match self.loss {
            ReconstructionLoss::SquaredError => (&pass.output - target) * (2.0 / n),
            ReconstructionLoss::SigmoidCrossEntropy => (&pass.output - target) / n,
        };

        let mut grad_weights = vec![Array2::zeros((0, 0)); self.layers.len()];
        let mut grad_biases = vec![Array1::zeros(0); self.layers.len()];
        for idx in (0..self.layers.len()).rev() {
            let input = &pass.activations[idx];
            grad_weights[idx] = delta.t().dot(input);
            grad_biases[idx] = delta.sum_axis(Axis(0));
            if idx > 0 {
                let mut upstream = delta.dot(&self.layers[idx].weight);
                // Rectifier mask: the stored activation is relu(z).
                upstream.zip_mut_with(&pass.activations[idx], |d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = upstream;
            }
        }
        AutoencoderGradients {
            weights: grad_weights,
            biases: grad_biases,
        }
    }

    /// Runs full-batch gradient descent, continuing from the current
    /// parameters. Returns the loss before the first step and after the last.
    pub fn train(
        &mut self,
        pairs: &[(Vec<f64>, Vec<f64>)],
        config: &AutoencoderConfig,
    ) -> Result<TrainReport> {
        config.validate()?;
        let batch = self.batch_from_pairs(pairs)?;
        let mut initial_loss = f64::NAN;
        for epoch in 0..config.epochs {
            let pass = self.forward_batch(&batch);
            let epoch_loss = self.loss_of(&pass.output, &batch);
            if epoch == 0 {
                initial_loss = epoch_loss;
            }
            if !epoch_loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "reconstruction loss diverged at epoch {epoch}"
                )));
            }
            let grads = self.backward(&batch, &pass);
            for (layer, (gw, gb)) in self
                .layers
                .iter_mut()
                .zip(grads.weights.into_iter().zip(grads.biases.into_iter()))
            {
                layer.weight.scaled_add(-config.step_size, &gw);
                layer.bias.scaled_add(-config.step_size, &gb);
            }
        }
        let final_loss = {
            let pass = self.forward_batch(&batch);
            self.loss_of(&pass.output, &batch)
        };
        if !final_loss.is_finite() {
            return Err(Error::Numeric("reconstruction loss diverged".to_string()));
        }
        Ok(TrainReport {
            initial_loss,
            final_loss,
            epochs_run: config.epochs,
        })
    }

    fn half_forward(&self, input: Array1<f64>, layers: &[Layer]) -> Array1<f64> {
        let mut current = input;
        for layer in layers {
            let mut z = layer.weight.dot(&current);
            z += &layer.bias;
            z.mapv_inplace(|v| v.max(0.0));
            current = z;
        }
        current
    }

    /// The bottleneck activation for the concatenation of two component
    /// embeddings: the initialization vector for their merge. Always has
    /// length [`Autoencoder::dim`].
    pub fn encode(&self, left: &[f64], right: &[f64]) -> Result<Vec<f64>> {
        if left.len() != self.dim || right.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "encode expects two length-{} vectors, got {}/{}",
                self.dim,
                left.len(),
                right.len()
            )));
        }
        let input = Array1::from_iter(left.iter().chain(right.iter()).copied());
        let bottleneck = self.half_forward(input, &self.layers[..2]);
        Ok(bottleneck.to_vec())
    }

    /// The decoder half: reconstructs a `2·dim` vector from a bottleneck
    /// activation.
    pub fn decode(&self, bottleneck: &[f64]) -> Result<Vec<f64>> {
        if bottleneck.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "decode expects a length-{} vector, got {}",
                self.dim,
                bottleneck.len()
            )));
        }
        let hidden = self.half_forward(
            Array1::from_iter(bottleneck.iter().copied()),
            &self.layers[2..3],
        );
        let output_layer = &self.layers[3];
        let mut z = output_layer.weight.dot(&hidden);
        z += &output_layer.bias;
        if self.loss == ReconstructionLoss::SigmoidCrossEntropy {
            z.mapv_inplace(|v| 1.0 / (1.0 + (-v).exp()));
        }
        Ok(z.to_vec())
    }

    /// Full reconstruction of a `2·dim` input vector.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != 2 * self.dim {
            return Err(Error::InvalidInput(format!(
                "forward expects a length-{} vector, got {}",
                2 * self.dim,
                input.len()
            )));
        }
        let batch = Array2::from_shape_vec((1, input.len()), input.to_vec())
            .expect("shape matches by construction");
        let pass = self.forward_batch(&batch);
        Ok(pass.output.row(0).to_vec())
    }
}

/// Trains a fresh net on the given pairs; the usual entry point when no
/// warm-start parameters exist yet.
pub fn train_autoencoder(
    pairs: &[(Vec<f64>, Vec<f64>)],
    dim: usize,
    config: &AutoencoderConfig,
) -> Result<(Autoencoder, TrainReport)> {
    let mut net = Autoencoder::new(dim, config.seed, config.loss)?;
    let report = net.train(pairs, config)?;
    Ok((net, report))
}
