//! Minimal fully connected network with a flat parameter vector, shared by the
//! autoencoder and the dense classifier.

use serde::{Deserialize, Serialize};

use crate::optim;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation's output.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
}

impl Layer {
    fn n_params(&self) -> usize {
        self.inputs * self.outputs + self.outputs
    }
}

/// Weights of layer `l` are stored row-major (`outputs x inputs`) followed by
/// its biases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Layer>,
    pub params: Vec<f64>,
}

impl Network {
    pub fn new<R: rand::Rng>(layers: Vec<Layer>, rng: &mut R) -> Self {
        let mut params = Vec::with_capacity(layers.iter().map(Layer::n_params).sum());
        for l in &layers {
            params.extend(optim::glorot(rng, l.inputs, l.outputs));
            params.extend(std::iter::repeat_n(0.0, l.outputs));
        }
        Self { layers, params }
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.layers.last().unwrap().outputs
    }

    fn offsets(&self) -> Vec<usize> {
        let mut offs = Vec::with_capacity(self.layers.len());
        let mut at = 0;
        for l in &self.layers {
            offs.push(at);
            at += l.n_params();
        }
        offs
    }

    /// Activations of every layer for one input, starting with the input.
    pub fn forward_all(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let offs = self.offsets();
        let mut acts = vec![x.to_vec()];
        for (l, &off) in self.layers.iter().zip(&offs) {
            let input = acts.last().unwrap();
            let w = &self.params[off..off + l.inputs * l.outputs];
            let b = &self.params[off + l.inputs * l.outputs..off + l.n_params()];
            let out = (0..l.outputs)
                .map(|o| {
                    let row = &w[o * l.inputs..(o + 1) * l.inputs];
                    let z = b[o] + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
                    l.activation.apply(z)
                })
                .collect();
            acts.push(out);
        }
        acts
    }

    /// Output of the first `n_layers` layers.
    pub fn forward_prefix(&self, x: &[f64], n_layers: usize) -> Vec<f64> {
        let mut acts = self.forward_all(x);
        acts.swap_remove(n_layers.min(self.layers.len()))
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_all(x).pop().unwrap()
    }

    /// Accumulate into `grad` the gradient of a loss whose derivative with
    /// respect to the network output is `d_out`.
    pub fn backward(&self, acts: &[Vec<f64>], d_out: &[f64], grad: &mut [f64]) {
        let offs = self.offsets();
        let mut delta: Vec<f64> = d_out.to_vec();
        for (li, l) in self.layers.iter().enumerate().rev() {
            let out = &acts[li + 1];
            let input = &acts[li];
            for (d, a) in delta.iter_mut().zip(out) {
                *d *= l.activation.derivative_from_output(*a);
            }
            let off = offs[li];
            let nw = l.inputs * l.outputs;
            for o in 0..l.outputs {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let g = &mut grad[off + o * l.inputs..off + (o + 1) * l.inputs];
                for (gi, xi) in g.iter_mut().zip(input) {
                    *gi += d * xi;
                }
                grad[off + nw + o] += d;
            }
            if li > 0 {
                let w = &self.params[off..off + nw];
                let mut prev = vec![0.0; l.inputs];
                for o in 0..l.outputs {
                    let d = delta[o];
                    for (p, wi) in prev.iter_mut().zip(&w[o * l.inputs..(o + 1) * l.inputs]) {
                        *p += d * wi;
                    }
                }
                delta = prev;
            }
        }
    }
}
