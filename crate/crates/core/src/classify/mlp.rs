use super::{ClassifierParams, TrainingConfig};
use crate::nn::{Activation, Layer, Network};
use crate::optim::Adam;
use crate::{util, EmbeddingMatrix, Result};

pub const MLP_HIDDEN: usize = 64;

pub(super) fn network(cols: usize, hidden: usize, seed: u64) -> Network {
    let layers = vec![
        Layer { inputs: cols, outputs: hidden, activation: Activation::Tanh },
        Layer { inputs: hidden, outputs: 1, activation: Activation::Identity },
    ];
    Network::new(layers, &mut util::rng(seed))
}

/// Mean binary cross-entropy of `sigmoid(network(x))` against `y`, with its
/// gradient over `network.params`.
pub fn mlp_objective(net: &Network, x: &EmbeddingMatrix, y: &[u8]) -> (f64, Vec<f64>) {
    let scale = 1.0 / x.rows() as f64;
    let mut grad = vec![0.0; net.params.len()];
    let mut loss = 0.0;
    for (row, &t) in x.row_iter().zip(y) {
        let acts = net.forward_all(row);
        let z = acts.last().unwrap()[0];
        let t = f64::from(t);
        loss += util::softplus(z) - t * z;
        net.backward(&acts, &[(util::sigmoid(z) - t) * scale], &mut grad);
    }
    (loss * scale, grad)
}

pub(super) fn train(x: &EmbeddingMatrix, y: &[u8], hyper: &TrainingConfig) -> Result<(ClassifierParams, Vec<f64>)> {
    let mut net = network(x.cols(), hyper.hidden, hyper.seed);
    let mut adam = Adam::new(net.params.len(), hyper.learning_rate);
    let mut history = Vec::with_capacity(hyper.epochs + 1);
    for _ in 0..hyper.epochs {
        let (loss, grad) = mlp_objective(&net, x, y);
        history.push(loss);
        if !loss.is_finite() {
            break;
        }
        adam.step(&mut net.params, &grad);
    }
    history.push(mlp_objective(&net, x, y).0);
    Ok((ClassifierParams::Dense { network: net }, history))
}
