//! Model assembly: the deep LSTM (stacked layers plus a per-timestep affine
//! output head) and the sliding-window feedforward baseline.
//!
//! Both models are stateless between sequences: hidden and cell states are
//! zeroed at every sequence start, so the order of forward calls never
//! changes an individual output.

use crate::error::{Error, Result};
use crate::linalg::Matrix2D;
use crate::nn::dense::{DenseGrads, DenseParams};
use crate::nn::lstm::{LSTMLayerParams, LstmStepCache};
use crate::nn::{mse_loss_and_grad, LstmLayerGrads};
use crate::rng::SeededRng;
use crate::windowing::NormalizerStats;

#[derive(Debug, Clone, PartialEq)]
pub struct DeepLSTMConfig {
    /// m input features.
    pub input_features: usize,
    /// Hidden (memory cell) count per stacked layer.
    pub hidden_sizes: Vec<usize>,
    /// n output features.
    pub output_features: usize,
    pub l_in: usize,
    pub l_out: usize,
}

impl DeepLSTMConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_features == 0 || self.output_features == 0 {
            return Err(Error::InvalidConfig("feature counts must be >= 1".into()));
        }
        if self.hidden_sizes.is_empty() || self.hidden_sizes.contains(&0) {
            return Err(Error::InvalidConfig(
                "hidden_sizes must be non-empty and positive".into(),
            ));
        }
        if self.l_in == 0 || self.l_out == 0 {
            return Err(Error::InvalidConfig("sequence lengths must be >= 1".into()));
        }
        if self.l_in != self.l_out {
            return Err(Error::InvalidConfig(format!(
                "this architecture requires l_in = l_out, got {} and {}",
                self.l_in, self.l_out
            )));
        }
        Ok(())
    }
}

/// Total trainable parameters: sum over LSTM layers of 4H(I+H+1), plus the
/// affine head's H_last*n + n.
pub fn count_params(config: &DeepLSTMConfig) -> usize {
    let mut input = config.input_features;
    let mut total = 0;
    for &h in &config.hidden_sizes {
        total += 4 * h * (input + h + 1);
        input = h;
    }
    total + input * config.output_features + config.output_features
}

/// Stacked LSTM layers plus a per-timestep affine output head.
#[derive(Debug, Clone)]
pub struct DeepLSTMModel {
    pub config: DeepLSTMConfig,
    pub layers: Vec<LSTMLayerParams>,
    pub head: DenseParams,
    pub seed: u64,
    pub input_names: Vec<String>,
    pub output_names: Vec<String>,
    pub normalizer: Option<NormalizerStats>,
}

/// Per-sequence activation cache: `layers[layer][t]`.
pub struct SequenceCache {
    layers: Vec<Vec<LstmStepCache>>,
}

/// Gradient buffers for every trainable tensor of a [`DeepLSTMModel`].
#[derive(Debug, Clone)]
pub struct LstmGradients {
    pub layers: Vec<LstmLayerGrads>,
    pub head: DenseGrads,
}

impl LstmGradients {
    pub fn zeros_like(model: &DeepLSTMModel) -> Self {
        LstmGradients {
            layers: model
                .layers
                .iter()
                .map(|l| LstmLayerGrads::zeros(l.input_size, l.hidden_size))
                .collect(),
            head: DenseGrads::zeros(model.head.input_size, model.head.output_size),
        }
    }

    /// Canonical flat order: per layer w_x, w_h, b; then head w, b.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.extend_from_slice(layer.w_x.values());
            out.extend_from_slice(layer.w_h.values());
            out.extend_from_slice(&layer.b);
        }
        out.extend_from_slice(self.head.w.values());
        out.extend_from_slice(&self.head.b);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.flat().iter().all(|v| v.is_finite())
    }
}

/// Builds a seeded deep LSTM per the config.
pub fn build_lstm(config: DeepLSTMConfig, rng: &mut SeededRng) -> Result<DeepLSTMModel> {
    config.validate()?;
    let mut layers = Vec::with_capacity(config.hidden_sizes.len());
    let mut input = config.input_features;
    for &h in &config.hidden_sizes {
        layers.push(LSTMLayerParams::init(input, h, rng));
        input = h;
    }
    let head = DenseParams::init(input, config.output_features, rng);
    Ok(DeepLSTMModel {
        config,
        layers,
        head,
        seed: rng.seed(),
        input_names: Vec::new(),
        output_names: Vec::new(),
        normalizer: None,
    })
}

impl DeepLSTMModel {
    pub fn param_count(&self) -> usize {
        count_params(&self.config)
    }

    fn check_input(&self, x_seq: &Matrix2D) -> Result<()> {
        if x_seq.cols() != self.config.input_features {
            return Err(Error::Dimension(format!(
                "sequence has {} features, model expects {}",
                x_seq.cols(),
                self.config.input_features
            )));
        }
        if x_seq.rows() != self.config.l_in {
            return Err(Error::Dimension(format!(
                "sequence has {} timesteps, model expects l_in = {}",
                x_seq.rows(),
                self.config.l_in
            )));
        }
        Ok(())
    }

    /// Maps an input sequence (l_in x m) to the forecast sequence
    /// (l_out x n). Output row j is the forecast for window time index
    /// l_in + j. Hidden and cell states start at zero.
    pub fn forward_sequence(&self, x_seq: &Matrix2D) -> Result<Matrix2D> {
        Ok(self.forward_cached(x_seq)?.0)
    }

    /// Forward pass retaining every activation for backpropagation.
    pub fn forward_cached(&self, x_seq: &Matrix2D) -> Result<(Matrix2D, SequenceCache)> {
        self.check_input(x_seq)?;
        let steps = x_seq.rows();
        let mut layer_caches: Vec<Vec<LstmStepCache>> = self
            .layers
            .iter()
            .map(|_| Vec::with_capacity(steps))
            .collect();
        let mut h: Vec<Vec<f64>> = self
            .layers
            .iter()
            .map(|l| vec![0.0; l.hidden_size])
            .collect();
        let mut c: Vec<Vec<f64>> = h.clone();

        let mut y_hat = Matrix2D::zeros(self.config.l_out, self.config.output_features);
        for t in 0..steps {
            let mut input: Vec<f64> = x_seq.row(t).to_vec();
            for (li, layer) in self.layers.iter().enumerate() {
                let cache = layer.step_cached(&input, &h[li], &c[li])?;
                input = cache.h.clone();
                h[li] = cache.h.clone();
                c[li] = cache.c.clone();
                layer_caches[li].push(cache);
            }
            let out = self.head.forward(&input)?;
            y_hat.row_mut(t).copy_from_slice(&out);
        }
        Ok((
            y_hat,
            SequenceCache {
                layers: layer_caches,
            },
        ))
    }

    /// Backpropagation through time for the mean-squared error of one
    /// sequence. Returns the loss and exact gradients for every trainable
    /// parameter. The cache must come from `forward_cached` on the same
    /// input.
    pub fn backward_sequence(
        &self,
        cache: &SequenceCache,
        y_hat: &Matrix2D,
        y_seq: &Matrix2D,
    ) -> Result<(f64, LstmGradients)> {
        let steps = self.config.l_in;
        if cache.layers.len() != self.layers.len()
            || cache.layers.iter().any(|lc| lc.len() != steps)
        {
            return Err(Error::Dimension(
                "forward cache does not match the model; run forward_cached first".into(),
            ));
        }
        let (loss, dy) = mse_loss_and_grad(y_hat, y_seq)?;

        let mut grads = LstmGradients::zeros_like(self);
        let n_layers = self.layers.len();
        // Recurrent gradient carried from step t+1, per layer.
        let mut dh_next: Vec<Vec<f64>> = self
            .layers
            .iter()
            .map(|l| vec![0.0; l.hidden_size])
            .collect();
        let mut dc_next = dh_next.clone();

        for t in (0..steps).rev() {
            // Head contribution at this step.
            let top_h = &cache.layers[n_layers - 1][t].h;
            let mut d_from_above = self.head.backward(top_h, dy.row(t), &mut grads.head);
            for li in (0..n_layers).rev() {
                let dh: Vec<f64> = d_from_above
                    .iter()
                    .zip(&dh_next[li])
                    .map(|(a, b)| a + b)
                    .collect();
                let (dx, dh_prev, dc_prev) = self.layers[li].step_backward(
                    &cache.layers[li][t],
                    &dh,
                    &dc_next[li],
                    &mut grads.layers[li],
                );
                dh_next[li] = dh_prev;
                dc_next[li] = dc_prev;
                d_from_above = dx;
            }
        }
        Ok((loss, grads))
    }

    /// Forward plus backward in one call.
    pub fn loss_and_gradients(
        &self,
        x_seq: &Matrix2D,
        y_seq: &Matrix2D,
    ) -> Result<(f64, LstmGradients)> {
        let (y_hat, cache) = self.forward_cached(x_seq)?;
        self.backward_sequence(&cache, &y_hat, y_seq)
    }

    /// All trainable parameters in the canonical flat order.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend_from_slice(layer.w_x.values());
            out.extend_from_slice(layer.w_h.values());
            out.extend_from_slice(&layer.b);
        }
        out.extend_from_slice(self.head.w.values());
        out.extend_from_slice(&self.head.b);
        out
    }

    pub fn assign_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Dimension(format!(
                "parameter vector has {} entries, model has {}",
                flat.len(),
                self.param_count()
            )));
        }
        let mut cursor = 0;
        let mut take = |dst: &mut [f64]| {
            dst.copy_from_slice(&flat[cursor..cursor + dst.len()]);
            cursor += dst.len();
        };
        for layer in &mut self.layers {
            take(layer.w_x.values_mut());
            take(layer.w_h.values_mut());
            take(&mut layer.b);
        }
        take(self.head.w.values_mut());
        take(&mut self.head.b);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedforwardConfig {
    /// Input window length in samples.
    pub window_length: usize,
    pub hidden_sizes: Vec<usize>,
    pub input_features: usize,
    pub output_features: usize,
}

impl FeedforwardConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_length == 0 {
            return Err(Error::InvalidConfig("window_length must be >= 1".into()));
        }
        if self.hidden_sizes.is_empty() || self.hidden_sizes.contains(&0) {
            return Err(Error::InvalidConfig(
                "hidden_sizes must be non-empty and positive".into(),
            ));
        }
        if self.input_features == 0 || self.output_features == 0 {
            return Err(Error::InvalidConfig("feature counts must be >= 1".into()));
        }
        Ok(())
    }
}

/// Sliding-window baseline: the flattened window runs through a dense stack
/// with tanh hidden activations and a linear output.
#[derive(Debug, Clone)]
pub struct FeedforwardModel {
    pub config: FeedforwardConfig,
    pub layers: Vec<DenseParams>,
    pub seed: u64,
    pub input_names: Vec<String>,
    pub output_names: Vec<String>,
    pub normalizer: Option<NormalizerStats>,
}

/// Gradient buffers for a [`FeedforwardModel`].
#[derive(Debug, Clone)]
pub struct FfGradients {
    pub layers: Vec<DenseGrads>,
}

impl FfGradients {
    pub fn zeros_like(model: &FeedforwardModel) -> Self {
        FfGradients {
            layers: model
                .layers
                .iter()
                .map(|l| DenseGrads::zeros(l.input_size, l.output_size))
                .collect(),
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.extend_from_slice(layer.w.values());
            out.extend_from_slice(&layer.b);
        }
        out
    }
}

pub fn build_ff(config: FeedforwardConfig, rng: &mut SeededRng) -> Result<FeedforwardModel> {
    config.validate()?;
    let mut sizes = vec![config.window_length * config.input_features];
    sizes.extend(&config.hidden_sizes);
    sizes.push(config.output_features);
    let layers = sizes
        .windows(2)
        .map(|pair| DenseParams::init(pair[0], pair[1], rng))
        .collect();
    Ok(FeedforwardModel {
        config,
        layers,
        seed: rng.seed(),
        input_names: Vec::new(),
        output_names: Vec::new(),
        normalizer: None,
    })
}

struct FfCache {
    /// Activations per layer boundary: `acts[0]` is the flattened input,
    /// `acts[i]` the output of layer i-1 (post-tanh for hidden layers).
    acts: Vec<Vec<f64>>,
}

impl FeedforwardModel {
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseParams::param_count).sum()
    }

    fn flatten_window(&self, window: &Matrix2D) -> Result<Vec<f64>> {
        if window.rows() != self.config.window_length || window.cols() != self.config.input_features
        {
            return Err(Error::Dimension(format!(
                "window is {}x{}, model expects {}x{}",
                window.rows(),
                window.cols(),
                self.config.window_length,
                self.config.input_features
            )));
        }
        Ok(window.values().to_vec())
    }

    fn forward_flat(&self, flat: &[f64]) -> Result<FfCache> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(flat.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = layer.forward(acts.last().unwrap())?;
            if i != last {
                for v in &mut z {
                    *v = v.tanh();
                }
            }
            acts.push(z);
        }
        Ok(FfCache { acts })
    }

    /// One output vector for one window position.
    pub fn predict_window(&self, window: &Matrix2D) -> Result<Vec<f64>> {
        let flat = self.flatten_window(window)?;
        Ok(self.forward_flat(&flat)?.acts.last().unwrap().clone())
    }

    /// MSE of a single (window, target) pair plus exact gradients.
    pub fn loss_and_gradients(
        &self,
        window: &Matrix2D,
        target: &[f64],
    ) -> Result<(f64, FfGradients)> {
        if target.len() != self.config.output_features {
            return Err(Error::Dimension(format!(
                "target has {} features, model outputs {}",
                target.len(),
                self.config.output_features
            )));
        }
        let flat = self.flatten_window(window)?;
        let cache = self.forward_flat(&flat)?;
        let y_hat = cache.acts.last().unwrap();

        let n = target.len() as f64;
        let loss = y_hat
            .iter()
            .zip(target)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / n;

        let mut grads = FfGradients::zeros_like(self);
        let mut da: Vec<f64> = y_hat
            .iter()
            .zip(target)
            .map(|(a, b)| 2.0 * (a - b) / n)
            .collect();
        let last = self.layers.len() - 1;
        for i in (0..self.layers.len()).rev() {
            let dz: Vec<f64> = if i == last {
                da.clone()
            } else {
                // tanh'(z) = 1 - a^2 on the stored post-activation.
                da.iter()
                    .zip(&cache.acts[i + 1])
                    .map(|(d, a)| d * (1.0 - a * a))
                    .collect()
            };
            da = self.layers[i].backward(&cache.acts[i], &dz, &mut grads.layers[i]);
        }
        Ok((loss, grads))
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend_from_slice(layer.w.values());
            out.extend_from_slice(&layer.b);
        }
        out
    }

    pub fn assign_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Dimension(format!(
                "parameter vector has {} entries, model has {}",
                flat.len(),
                self.param_count()
            )));
        }
        let mut cursor = 0;
        for layer in &mut self.layers {
            let w = layer.w.values_mut();
            w.copy_from_slice(&flat[cursor..cursor + w.len()]);
            cursor += w.len();
            let b_len = layer.b.len();
            layer.b.copy_from_slice(&flat[cursor..cursor + b_len]);
            cursor += b_len;
        }
        Ok(())
    }
}
