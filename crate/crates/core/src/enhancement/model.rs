use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::network::{Activation, Gradients, Network};
use super::pairs::{stack_context, PairSource};
use crate::error::{Error, Result};
use crate::signal::Spectrogram;

pub const STD_FLOOR: f64 = 1e-6;

/// Per-dimension affine normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalization {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    fn estimate(n: usize, dim: usize, mut fill: impl FnMut(usize, &mut [f64])) -> Self {
        let mut buf = vec![0.0; dim];
        // two-pass for accuracy
        let mut mean = vec![0.0; dim];
        for i in 0..n {
            fill(i, &mut buf);
            for (m, v) in mean.iter_mut().zip(&buf) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; dim];
        for i in 0..n {
            fill(i, &mut buf);
            for ((s, v), m) in var.iter_mut().zip(&buf).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .iter()
            .map(|s| (s / n as f64).sqrt().max(STD_FLOOR))
            .collect();
        Self { mean, std }
    }

    pub fn apply(&self, x: &mut [f64]) {
        for ((v, m), s) in x.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = (*v - m) / s;
        }
    }

    pub fn invert(&self, x: &mut [f64]) {
        for ((v, m), s) in x.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = *v * s + m;
        }
    }
}

/// The enhancement autoencoder with its normalization statistics and context size.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub network: Network,
    pub input_norm: Normalization,
    pub output_norm: Normalization,
    pub context: usize,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub momentum: f64,
    pub batch: usize,
    pub seed: u64,
    pub hidden_dims: Vec<usize>,
    pub activation: Activation,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 40,
            lr: 0.01,
            momentum: 0.9,
            batch: 128,
            seed: 0,
            hidden_dims: vec![256, 256, 256],
            activation: Activation::Tanh,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: MlpModel,
    /// Epoch-averaged training MSE on normalized targets, measured during each epoch.
    pub loss_trace: Vec<f64>,
}

fn fill_batch(
    data: &(impl PairSource + ?Sized),
    idx: &[usize],
    input_norm: &Normalization,
    output_norm: &Normalization,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut x = DMatrix::zeros(data.input_dim(), idx.len());
    let mut y = DMatrix::zeros(data.target_dim(), idx.len());
    for (c, &i) in idx.iter().enumerate() {
        let mut col = x.column_mut(c);
        let s = col.as_mut_slice();
        data.write_input(i, s);
        input_norm.apply(s);
        let mut col = y.column_mut(c);
        let s = col.as_mut_slice();
        data.write_target(i, s);
        output_norm.apply(s);
    }
    (x, y)
}

/// Mini-batch SGD with momentum on the MSE between normalized outputs and targets.
pub fn train_mlp(data: &(impl PairSource + ?Sized), context: usize, config: &TrainConfig) -> Result<TrainOutcome> {
    let n = data.len();
    if n == 0 {
        return Err(Error::EmptyData("no training pairs".into()));
    }
    if config.batch == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    let (din, dout) = (data.input_dim(), data.target_dim());
    let input_norm = Normalization::estimate(n, din, |i, b| data.write_input(i, b));
    let output_norm = Normalization::estimate(n, dout, |i, b| data.write_target(i, b));

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut dims = vec![din];
    dims.extend(&config.hidden_dims);
    dims.push(dout);
    let mut net = Network::init(&dims, config.activation, &mut rng);
    let mut velocity: Gradients = net.zero_gradients();

    let mut order: Vec<usize> = (0..n).collect();
    let mut trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for chunk in order.chunks(config.batch) {
            let (x, y) = fill_batch(data, chunk, &input_norm, &output_norm);
            let (loss, grads) = net.loss_and_gradients(&x, &y);
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            sum += loss * chunk.len() as f64;
            for (l, layer) in net.layers.iter_mut().enumerate() {
                let (mu, lr) = (config.momentum, config.lr);
                let vw = &mut velocity.weights[l];
                vw.zip_apply(&grads.weights[l], |v, g| *v = mu * *v - lr * g);
                layer.weights += &*vw;
                let vb = &mut velocity.bias[l];
                vb.zip_apply(&grads.bias[l], |v, g| *v = mu * *v - lr * g);
                layer.bias += &*vb;
            }
        }
        let epoch_loss = sum / n as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        log::debug!("autoencoder epoch {epoch}: mse {epoch_loss:.5}");
        trace.push(epoch_loss);
    }
    Ok(TrainOutcome {
        model: MlpModel {
            network: net,
            input_norm,
            output_norm,
            context,
        },
        loss_trace: trace,
    })
}

const ENHANCE_CHUNK: usize = 256;

impl MlpModel {
    pub fn bins(&self) -> usize {
        self.network.output_dim()
    }

    /// De-normalized outputs for raw (un-normalized) input columns.
    pub fn predict(&self, inputs: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = inputs.clone();
        for mut col in x.column_iter_mut() {
            self.input_norm.apply(col.as_mut_slice());
        }
        let mut y = self.network.forward(&x);
        for mut col in y.column_iter_mut() {
            self.output_norm.invert(col.as_mut_slice());
        }
        y
    }

    /// Enhances every frame of `corrupted`; phase is carried over unchanged.
    pub fn enhance(&self, corrupted: &Spectrogram) -> Result<Spectrogram> {
        let din = (2 * self.context + 1) * corrupted.bins;
        if din != self.network.input_dim() || corrupted.bins != self.bins() {
            return Err(Error::Dimension(format!(
                "model expects {} inputs / {} bins, spectrogram gives {din} / {}",
                self.network.input_dim(),
                self.bins(),
                corrupted.bins
            )));
        }
        let mut out = corrupted.clone();
        let frames: Vec<usize> = (0..corrupted.frames).collect();
        for chunk in frames.chunks(ENHANCE_CHUNK) {
            let mut x = DMatrix::zeros(din, chunk.len());
            for (c, &t) in chunk.iter().enumerate() {
                stack_context(corrupted, t, self.context, x.column_mut(c).as_mut_slice());
            }
            let y = self.predict(&x);
            for (c, &t) in chunk.iter().enumerate() {
                out.frame_mut(t).copy_from_slice(y.column(c).as_slice());
            }
        }
        Ok(out)
    }
}
