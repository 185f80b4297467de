//! One-hidden-layer tanh network trained by mini-batch gradient descent.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::models::prepare::Transformer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnParams {
    pub hidden_units: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub patience: usize,
    /// Start the output layer at zero instead of the uniform draw.
    #[serde(default)]
    pub zero_output_init: bool,
}

impl Default for NnParams {
    fn default() -> Self {
        Self {
            hidden_units: 3,
            learning_rate: 0.01,
            max_epochs: 2000,
            batch_size: 32,
            seed: 0,
            patience: 50,
            zero_output_init: false,
        }
    }
}

/// `y = b2 + w2 . tanh(W1 x + b1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub n_inputs: usize,
    pub hidden: usize,
    /// Row-major `hidden x n_inputs`.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl Network {
    pub fn zeros(n_inputs: usize, hidden: usize) -> Self {
        Self {
            n_inputs,
            hidden,
            w1: vec![0.0; hidden * n_inputs],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
        }
    }

    /// Weights and biases uniform in `+-1/sqrt(fan_in)` per layer.
    pub fn random<R: Rng>(n_inputs: usize, hidden: usize, rng: &mut R) -> Self {
        let mut net = Self::zeros(n_inputs, hidden);
        let a1 = 1.0 / (n_inputs.max(1) as f64).sqrt();
        let a2 = 1.0 / (hidden as f64).sqrt();
        for w in net.w1.iter_mut().chain(net.b1.iter_mut()) {
            *w = rng.random_range(-a1..=a1);
        }
        for w in net.w2.iter_mut() {
            *w = rng.random_range(-a2..=a2);
        }
        net.b2 = rng.random_range(-a2..=a2);
        net
    }

    pub fn n_params(&self) -> usize {
        self.hidden * (self.n_inputs + 2) + 1
    }

    /// Flattened as `w1, b1, w2, b2`.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_params());
        p.extend_from_slice(&self.w1);
        p.extend_from_slice(&self.b1);
        p.extend_from_slice(&self.w2);
        p.push(self.b2);
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.n_params(), "parameter count");
        let (w1, rest) = p.split_at(self.w1.len());
        let (b1, rest) = rest.split_at(self.hidden);
        let (w2, rest) = rest.split_at(self.hidden);
        self.w1.copy_from_slice(w1);
        self.b1.copy_from_slice(b1);
        self.w2.copy_from_slice(w2);
        self.b2 = rest[0];
    }

    fn hidden_activations(&self, x: &[f64], h: &mut [f64]) {
        for (j, hj) in h.iter_mut().enumerate() {
            let w = &self.w1[j * self.n_inputs..(j + 1) * self.n_inputs];
            let z: f64 = self.b1[j] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            *hj = z.tanh();
        }
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        let mut h = vec![0.0; self.hidden];
        self.hidden_activations(x, &mut h);
        self.b2 + self.w2.iter().zip(&h).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn predict_matrix(&self, x: &Matrix) -> Vec<f64> {
        let mut h = vec![0.0; self.hidden];
        (0..x.rows())
            .map(|r| {
                self.hidden_activations(x.row(r), &mut h);
                self.b2 + self.w2.iter().zip(&h).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    /// Mean squared error over `rows` of `(x, y)` and its gradient in
    /// [`Network::params`] order.
    pub fn loss_and_gradient_rows(&self, x: &Matrix, y: &[f64], rows: &[usize]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.n_params()];
        let nw1 = self.w1.len();
        let (g_w1, rest) = grad.split_at_mut(nw1);
        let (g_b1, rest) = rest.split_at_mut(self.hidden);
        let (g_w2, g_b2) = rest.split_at_mut(self.hidden);
        let mut h = vec![0.0; self.hidden];
        let mut loss = 0.0;
        let scale = 2.0 / rows.len() as f64;
        for &r in rows {
            let xr = x.row(r);
            self.hidden_activations(xr, &mut h);
            let out = self.b2 + self.w2.iter().zip(&h).map(|(a, b)| a * b).sum::<f64>();
            let resid = out - y[r];
            loss += resid * resid;
            let d_out = scale * resid;
            g_b2[0] += d_out;
            for j in 0..self.hidden {
                g_w2[j] += d_out * h[j];
                let d_z = d_out * self.w2[j] * (1.0 - h[j] * h[j]);
                g_b1[j] += d_z;
                for (g, xi) in g_w1[j * self.n_inputs..(j + 1) * self.n_inputs]
                    .iter_mut()
                    .zip(xr)
                {
                    *g += d_z * xi;
                }
            }
        }
        (loss / rows.len() as f64, grad)
    }

    pub fn loss_and_gradient(&self, x: &Matrix, y: &[f64]) -> (f64, Vec<f64>) {
        let rows: Vec<usize> = (0..x.rows()).collect();
        self.loss_and_gradient_rows(x, y, &rows)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_ase: f64,
    /// `None` when no validation rows were available.
    pub validation_ase: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralModel {
    pub transformer: Transformer,
    pub feature_names: Vec<String>,
    /// Predicts the target in original units.
    pub network: Network,
    pub best_epoch: usize,
    pub log: Vec<EpochRecord>,
}

impl NeuralModel {
    pub fn predict(&self, data: &Dataset) -> Result<Vec<f64>> {
        let x = self.transformer.transform(data)?;
        Ok(self.network.predict_matrix(&x))
    }
}

fn ase_of(net: &Network, x: &Matrix, y: &[f64], m: f64, s: f64) -> f64 {
    let p = net.predict_matrix(x);
    p.iter()
        .zip(y)
        .map(|(a, b)| (a * s + m - b).powi(2))
        .sum::<f64>()
        / y.len() as f64
}

/// Trains on the standardized target, keeping the epoch with the lowest
/// validation ASE (training ASE when `valid` has no target values). Epoch 0
/// is the initial weights.
pub fn train_nn(
    train: &Dataset,
    valid: &Dataset,
    target: &str,
    params: &NnParams,
) -> Result<NeuralModel> {
    if params.hidden_units == 0 {
        return Err(Error::InvalidParam(
            "hidden_units must be at least 1".into(),
        ));
    }
    if params.batch_size == 0 {
        return Err(Error::InvalidParam("batch_size must be at least 1".into()));
    }
    if !(params.learning_rate.is_finite() && params.learning_rate > 0.0) {
        return Err(Error::InvalidParam("learning_rate must be positive".into()));
    }
    let transformer = Transformer::fit(train, target)?;
    let tr = transformer.prepared(train)?;
    let va = transformer.prepared(valid)?;
    let n = tr.y.len();
    let m = tr.y.iter().sum::<f64>() / n as f64;
    let var = tr.y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64;
    let s = if var > 0.0 { var.sqrt() } else { 1.0 };
    let y_std: Vec<f64> = tr.y.iter().map(|v| (v - m) / s).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut net = Network::random(tr.x.cols(), params.hidden_units, &mut rng);
    if params.zero_output_init {
        net.w2.iter_mut().for_each(|w| *w = 0.0);
        net.b2 = 0.0;
    }

    let has_valid = !va.y.is_empty();
    let record = |net: &Network, epoch: usize| -> Result<EpochRecord> {
        let train_ase = ase_of(net, &tr.x, &tr.y, m, s);
        let validation_ase = has_valid.then(|| ase_of(net, &va.x, &va.y, m, s));
        if !train_ase.is_finite() || validation_ase.is_some_and(|v| !v.is_finite()) {
            return Err(Error::Diverged { epoch });
        }
        Ok(EpochRecord {
            epoch,
            train_ase,
            validation_ase,
        })
    };
    let criterion = |r: &EpochRecord| r.validation_ase.unwrap_or(r.train_ase);

    let first = record(&net, 0)?;
    let mut best = (criterion(&first), 0, net.clone());
    let mut log = vec![first];
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 1..=params.max_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(params.batch_size) {
            let (loss, grad) = net.loss_and_gradient_rows(&tr.x, &y_std, batch);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            let mut p = net.params();
            for (w, g) in p.iter_mut().zip(&grad) {
                *w -= params.learning_rate * g;
            }
            net.set_params(&p);
        }
        let rec = record(&net, epoch)?;
        let c = criterion(&rec);
        log.push(rec);
        if c < best.0 {
            best = (c, epoch, net.clone());
        } else if epoch - best.1 >= params.patience {
            break;
        }
    }

    let (_, best_epoch, mut network) = best;
    for w in network.w2.iter_mut() {
        *w *= s;
    }
    network.b2 = network.b2 * s + m;
    Ok(NeuralModel {
        feature_names: tr.feature_names,
        transformer,
        network,
        best_epoch,
        log,
    })
}
