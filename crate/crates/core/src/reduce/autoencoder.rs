use serde::{Deserialize, Serialize};

use crate::nn::{Activation, Layer, Network};
use crate::optim::Adam;
use crate::{util, EmbeddingMatrix, Error, Result};

pub const DEFAULT_HIDDEN: usize = 128;

/// `cols -> h -> d -> h -> cols` autoencoder with tanh hidden layers and a
/// linear code and output layer, trained on mean squared reconstruction error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderModel {
    pub network: Network,
    pub hidden: usize,
    pub code_dims: usize,
    pub loss_history: Vec<f64>,
}

/// Layers up to and including the code layer.
const ENCODER_LAYERS: usize = 2;

impl AutoencoderModel {
    pub fn new(cols: usize, hidden: usize, code_dims: usize, seed: u64) -> Self {
        let layer = |inputs, outputs, activation| Layer { inputs, outputs, activation };
        let layers = vec![
            layer(cols, hidden, Activation::Tanh),
            layer(hidden, code_dims, Activation::Identity),
            layer(code_dims, hidden, Activation::Tanh),
            layer(hidden, cols, Activation::Identity),
        ];
        let mut rng = util::rng(seed);
        Self { network: Network::new(layers, &mut rng), hidden, code_dims, loss_history: Vec::new() }
    }

    pub fn params(&self) -> &[f64] {
        &self.network.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.network.params
    }

    fn check_cols(&self, x: &EmbeddingMatrix) -> Result<()> {
        if x.cols() != self.network.n_inputs() {
            return Err(Error::shape(format!(
                "autoencoder expects {} columns, got {}",
                self.network.n_inputs(),
                x.cols()
            )));
        }
        Ok(())
    }

    pub fn encode(&self, x: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
        self.check_cols(x)?;
        let mut data = Vec::with_capacity(x.rows() * self.code_dims);
        for row in x.row_iter() {
            data.extend(self.network.forward_prefix(row, ENCODER_LAYERS));
        }
        EmbeddingMatrix::new(x.rows(), self.code_dims, data)
            .map_err(|_| Error::Diverged("autoencoder produced non-finite codes".into()))
    }

    pub fn loss(&self, x: &EmbeddingMatrix) -> f64 {
        let scale = 1.0 / (x.rows() * x.cols()) as f64;
        x.row_iter()
            .map(|row| {
                let y = self.network.forward(row);
                y.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            })
            .sum::<f64>()
            * scale
    }

    /// Mean squared reconstruction error and its gradient.
    pub fn loss_and_gradient(&self, x: &EmbeddingMatrix) -> (f64, Vec<f64>) {
        let scale = 1.0 / (x.rows() * x.cols()) as f64;
        let mut grad = vec![0.0; self.network.params.len()];
        let mut loss = 0.0;
        for row in x.row_iter() {
            let acts = self.network.forward_all(row);
            let y = acts.last().unwrap();
            let d_out: Vec<f64> = y
                .iter()
                .zip(row)
                .map(|(a, b)| {
                    loss += (a - b) * (a - b);
                    2.0 * (a - b) * scale
                })
                .collect();
            self.network.backward(&acts, &d_out, &mut grad);
        }
        (loss * scale, grad)
    }
}

pub fn autoencoder_fit_transform(
    x: &EmbeddingMatrix,
    d: usize,
    h: usize,
    epochs: usize,
    lr: f64,
    seed: u64,
) -> Result<(AutoencoderModel, EmbeddingMatrix)> {
    if d == 0 || d >= x.cols() {
        return Err(Error::invalid(format!(
            "code size must be in [1, {}), got {d}",
            x.cols()
        )));
    }
    if h == 0 {
        return Err(Error::invalid("hidden width must be at least 1"));
    }
    if epochs == 0 {
        return Err(Error::invalid("epochs must be at least 1"));
    }
    if x.rows() == 0 {
        return Err(Error::invalid("cannot train on an empty matrix"));
    }
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::invalid(format!("learning rate must be positive, got {lr}")));
    }

    let mut model = AutoencoderModel::new(x.cols(), h, d, seed);
    let mut adam = Adam::new(model.network.params.len(), lr);
    let mut history = Vec::with_capacity(epochs + 1);
    for epoch in 0..epochs {
        let (loss, grad) = model.loss_and_gradient(x);
        if !loss.is_finite() {
            return Err(Error::Diverged(format!(
                "autoencoder loss became non-finite at epoch {epoch}; lower the learning rate"
            )));
        }
        history.push(loss);
        adam.step(&mut model.network.params, &grad);
    }
    let final_loss = model.loss(x);
    if !final_loss.is_finite() {
        return Err(Error::Diverged("autoencoder loss became non-finite".into()));
    }
    history.push(final_loss);
    model.loss_history = history;
    let codes = model.encode(x)?;
    Ok((model, codes))
}
