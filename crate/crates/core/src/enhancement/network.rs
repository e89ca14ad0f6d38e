//! Fully connected feed-forward network with mini-batch backpropagation.
//! Samples are stored as matrix columns.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Sigmoid,
    Linear,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Linear => x,
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Linear => 1.0,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Tanh => 0,
            Activation::Sigmoid => 1,
            Activation::Linear => 2,
        }
    }

    pub(crate) fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            0 => Activation::Tanh,
            1 => Activation::Sigmoid,
            2 => Activation::Linear,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `out x in`
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn input_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<DMatrix<f64>>,
    pub bias: Vec<DVector<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub layers: Vec<Layer>,
}

impl Network {
    /// Glorot-uniform weights, zero biases. `dims` lists every layer width including
    /// input and output; all hidden layers use `hidden`, the output layer is linear.
    pub fn init(dims: &[usize], hidden: Activation, rng: &mut impl Rng) -> Self {
        let n = dims.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let (fan_in, fan_out) = (dims[i], dims[i + 1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Layer {
                    weights: DMatrix::from_fn(fan_out, fan_in, |_, _| rng.random_range(-limit..limit)),
                    bias: DVector::zeros(fan_out),
                    activation: if i + 1 == n { Activation::Linear } else { hidden },
                }
            })
            .collect();
        Network { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().output_dim()
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.input_dim()];
        d.extend(self.layers.iter().map(Layer::output_dim));
        d
    }

    fn layer_forward(layer: &Layer, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = &layer.weights * x;
        for mut col in z.column_iter_mut() {
            col += &layer.bias;
        }
        if layer.activation != Activation::Linear {
            z.apply(|v| *v = layer.activation.apply(*v));
        }
        z
    }

    /// Activations of every layer; element 0 is the input.
    fn forward_all(&self, x: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.clone());
        for layer in &self.layers {
            let next = Self::layer_forward(layer, acts.last().unwrap());
            acts.push(next);
        }
        acts
    }

    pub fn forward(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut a = Self::layer_forward(&self.layers[0], x);
        for layer in &self.layers[1..] {
            a = Self::layer_forward(layer, &a);
        }
        a
    }

    /// Mean squared error over all batch elements and outputs.
    pub fn loss(&self, x: &DMatrix<f64>, target: &DMatrix<f64>) -> f64 {
        let y = self.forward(x);
        (y - target).norm_squared() / (target.len() as f64)
    }

    /// Loss and its exact gradient by backpropagation.
    pub fn loss_and_gradients(&self, x: &DMatrix<f64>, target: &DMatrix<f64>) -> (f64, Gradients) {
        let acts = self.forward_all(x);
        let y = acts.last().unwrap();
        let scale = 1.0 / target.len() as f64;
        let diff = y - target;
        let loss = diff.norm_squared() * scale;
        let mut delta = diff * (2.0 * scale);
        let n = self.layers.len();
        let mut gw = Vec::with_capacity(n);
        let mut gb = Vec::with_capacity(n);
        for i in (0..n).rev() {
            let layer = &self.layers[i];
            if layer.activation != Activation::Linear {
                delta.zip_apply(&acts[i + 1], |d, a| *d *= layer.activation.derivative_from_output(a));
            }
            gw.push(&delta * acts[i].transpose());
            gb.push(delta.column_sum());
            if i > 0 {
                delta = layer.weights.tr_mul(&delta);
            }
        }
        gw.reverse();
        gb.reverse();
        (loss, Gradients { weights: gw, bias: gb })
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            weights: self.layers.iter().map(|l| DMatrix::zeros(l.output_dim(), l.input_dim())).collect(),
            bias: self.layers.iter().map(|l| DVector::zeros(l.output_dim())).collect(),
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Mutable reference to the `k`-th scalar parameter (weights then bias, per layer).
    pub fn parameter_mut(&mut self, mut k: usize) -> &mut f64 {
        for layer in &mut self.layers {
            if k < layer.weights.len() {
                return &mut layer.weights.as_mut_slice()[k];
            }
            k -= layer.weights.len();
            if k < layer.bias.len() {
                return &mut layer.bias.as_mut_slice()[k];
            }
            k -= layer.bias.len();
        }
        panic!("parameter index out of range");
    }
}

impl Gradients {
    /// Flattened in the same order as [`Network::parameter_mut`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.bias) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b.as_slice());
        }
        out
    }
}
