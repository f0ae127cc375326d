//! Single LSTM layer: parameters, cell recurrence, and the per-step
//! backward pass used by backpropagation through time.
//!
//! Gate blocks are packed row-wise in the order input, forget, candidate,
//! output, so all three weight tensors have 4H rows:
//!
//!   z   = W_x x_t + W_h h_prev + b
//!   i   = sigmoid(z[0..H])     f = sigmoid(z[H..2H])
//!   g   = tanh(z[2H..3H])      o = sigmoid(z[3H..4H])
//!   c_t = f .* c_prev + i .* g
//!   h_t = o .* tanh(c_t)

use crate::error::{Error, Result};
use crate::linalg::Matrix2D;
use crate::nn::{sigmoid, LstmLayerGrads};
use crate::rng::SeededRng;

/// Trainable parameters of one LSTM layer.
#[derive(Debug, Clone)]
pub struct LSTMLayerParams {
    pub input_size: usize,
    pub hidden_size: usize,
    /// 4H x I input kernel.
    pub w_x: Matrix2D,
    /// 4H x H recurrent kernel.
    pub w_h: Matrix2D,
    /// 4H bias.
    pub b: Vec<f64>,
}

/// Activations cached by one forward step, consumed by the backward step.
#[derive(Debug, Clone)]
pub struct LstmStepCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub gate_i: Vec<f64>,
    pub gate_f: Vec<f64>,
    pub gate_g: Vec<f64>,
    pub gate_o: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

impl LSTMLayerParams {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        LSTMLayerParams {
            input_size,
            hidden_size,
            w_x: Matrix2D::zeros(4 * hidden_size, input_size),
            w_h: Matrix2D::zeros(4 * hidden_size, hidden_size),
            b: vec![0.0; 4 * hidden_size],
        }
    }

    /// Seeded initialization: fan-based uniform kernels, zero biases except
    /// the forget-gate block, which starts at 1.
    pub fn init(input_size: usize, hidden_size: usize, rng: &mut SeededRng) -> Self {
        let mut layer = LSTMLayerParams {
            input_size,
            hidden_size,
            w_x: super::init::glorot_uniform(4 * hidden_size, input_size, rng),
            w_h: super::init::glorot_uniform(4 * hidden_size, hidden_size, rng),
            b: vec![0.0; 4 * hidden_size],
        };
        for v in &mut layer.b[hidden_size..2 * hidden_size] {
            *v = 1.0;
        }
        layer
    }

    /// 4H(I + H + 1)
    pub fn param_count(&self) -> usize {
        4 * self.hidden_size * (self.input_size + self.hidden_size + 1)
    }

    fn check_shapes(&self, x_t: &[f64], h_prev: &[f64], c_prev: &[f64]) -> Result<()> {
        if x_t.len() != self.input_size {
            return Err(Error::Dimension(format!(
                "lstm cell: input length {} != input_size {}",
                x_t.len(),
                self.input_size
            )));
        }
        if h_prev.len() != self.hidden_size || c_prev.len() != self.hidden_size {
            return Err(Error::Dimension(format!(
                "lstm cell: state lengths ({}, {}) != hidden_size {}",
                h_prev.len(),
                c_prev.len(),
                self.hidden_size
            )));
        }
        Ok(())
    }

    /// One recurrence step with the full activation cache.
    pub fn step_cached(
        &self,
        x_t: &[f64],
        h_prev: &[f64],
        c_prev: &[f64],
    ) -> Result<LstmStepCache> {
        self.check_shapes(x_t, h_prev, c_prev)?;
        let hs = self.hidden_size;

        let mut z = self.b.clone();
        self.w_x.matvec_add(x_t, &mut z);
        self.w_h.matvec_add(h_prev, &mut z);

        let gate_i: Vec<f64> = z[0..hs].iter().map(|&v| sigmoid(v)).collect();
        let gate_f: Vec<f64> = z[hs..2 * hs].iter().map(|&v| sigmoid(v)).collect();
        let gate_g: Vec<f64> = z[2 * hs..3 * hs].iter().map(|&v| v.tanh()).collect();
        let gate_o: Vec<f64> = z[3 * hs..4 * hs].iter().map(|&v| sigmoid(v)).collect();

        let mut c = vec![0.0; hs];
        let mut tanh_c = vec![0.0; hs];
        let mut h = vec![0.0; hs];
        for j in 0..hs {
            c[j] = gate_f[j] * c_prev[j] + gate_i[j] * gate_g[j];
            tanh_c[j] = c[j].tanh();
            h[j] = gate_o[j] * tanh_c[j];
        }

        Ok(LstmStepCache {
            x: x_t.to_vec(),
            h_prev: h_prev.to_vec(),
            c_prev: c_prev.to_vec(),
            gate_i,
            gate_f,
            gate_g,
            gate_o,
            c,
            tanh_c,
            h,
        })
    }

    /// Backward through one step. `dh` and `dc` are the loss gradients wrt
    /// this step's h_t and c_t (the latter carried from step t+1). Parameter
    /// gradients accumulate into `grads`; returns (dx_t, dh_prev, dc_prev).
    pub fn step_backward(
        &self,
        cache: &LstmStepCache,
        dh: &[f64],
        dc_carry: &[f64],
        grads: &mut LstmLayerGrads,
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let hs = self.hidden_size;
        let mut dz = vec![0.0; 4 * hs];
        let mut dc_prev = vec![0.0; hs];

        for j in 0..hs {
            let dc =
                dc_carry[j] + dh[j] * cache.gate_o[j] * (1.0 - cache.tanh_c[j] * cache.tanh_c[j]);
            let d_o = dh[j] * cache.tanh_c[j];
            let d_i = dc * cache.gate_g[j];
            let d_f = dc * cache.c_prev[j];
            let d_g = dc * cache.gate_i[j];

            dz[j] = d_i * cache.gate_i[j] * (1.0 - cache.gate_i[j]);
            dz[hs + j] = d_f * cache.gate_f[j] * (1.0 - cache.gate_f[j]);
            dz[2 * hs + j] = d_g * (1.0 - cache.gate_g[j] * cache.gate_g[j]);
            dz[3 * hs + j] = d_o * cache.gate_o[j] * (1.0 - cache.gate_o[j]);

            dc_prev[j] = dc * cache.gate_f[j];
        }

        grads.w_x.add_outer(&dz, &cache.x);
        grads.w_h.add_outer(&dz, &cache.h_prev);
        for (gb, &d) in grads.b.iter_mut().zip(&dz) {
            *gb += d;
        }

        let mut dx = vec![0.0; self.input_size];
        self.w_x.tr_matvec_add(&dz, &mut dx);
        let mut dh_prev = vec![0.0; hs];
        self.w_h.tr_matvec_add(&dz, &mut dh_prev);

        (dx, dh_prev, dc_prev)
    }
}

/// Standard gated recurrence for a single timestep: returns (h_t, c_t).
pub fn lstm_cell_forward(
    params: &LSTMLayerParams,
    x_t: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let cache = params.step_cached(x_t, h_prev, c_prev)?;
    Ok((cache.h, cache.c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_zero_cell() {
        // All gates saturate to sigmoid(0) = 0.5, candidate tanh(0) = 0,
        // so c_t = 0.5*0 + 0.5*0 = 0 and h_t = 0.5*tanh(0) = 0.
        let params = LSTMLayerParams::zeros(3, 4);
        let (h, c) = lstm_cell_forward(&params, &[1.0, -2.0, 0.5], &[0.0; 4], &[0.0; 4]).unwrap();
        assert_eq!(h, vec![0.0; 4]);
        assert_eq!(c, vec![0.0; 4]);
    }

    #[test]
    fn zero_weights_unit_cell_state() {
        let params = LSTMLayerParams::zeros(2, 3);
        let (h, c) = lstm_cell_forward(&params, &[0.3, 0.7], &[0.0; 3], &[1.0; 3]).unwrap();
        let expected_h = 0.5 * (0.5f64).tanh();
        for j in 0..3 {
            assert!((c[j] - 0.5).abs() < 1e-15);
            assert!((h[j] - expected_h).abs() < 1e-15);
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let params = LSTMLayerParams::zeros(3, 4);
        let r = lstm_cell_forward(&params, &[1.0, 2.0], &[0.0; 4], &[0.0; 4]);
        assert!(matches!(r, Err(Error::Dimension(_))));
    }

    #[test]
    fn matches_scalar_gate_oracle() {
        // Independent step-by-step scalar evaluation of the gate equations
        // for a small random cell (I=2, H=3).
        let mut rng = SeededRng::new(2024);
        let params = LSTMLayerParams::init(2, 3, &mut rng);
        let x = [0.37, -0.81];
        let h_prev = [0.11, -0.05, 0.4];
        let c_prev = [-0.2, 0.3, 0.05];

        let (h, c) = lstm_cell_forward(&params, &x, &h_prev, &c_prev).unwrap();

        let hs = 3;
        for j in 0..hs {
            let pre = |row: usize| -> f64 {
                let mut z = params.b[row];
                for (col, &xv) in x.iter().enumerate() {
                    z += params.w_x.get(row, col) * xv;
                }
                for (col, &hv) in h_prev.iter().enumerate() {
                    z += params.w_h.get(row, col) * hv;
                }
                z
            };
            let i_j = 1.0 / (1.0 + (-pre(j)).exp());
            let f_j = 1.0 / (1.0 + (-pre(hs + j)).exp());
            let g_j = pre(2 * hs + j).tanh();
            let o_j = 1.0 / (1.0 + (-pre(3 * hs + j)).exp());
            let c_j = f_j * c_prev[j] + i_j * g_j;
            let h_j = o_j * c_j.tanh();
            assert!((c[j] - c_j).abs() < 1e-12, "c[{j}]: {} vs {}", c[j], c_j);
            assert!((h[j] - h_j).abs() < 1e-12, "h[{j}]: {} vs {}", h[j], h_j);
        }
    }

    #[test]
    fn hidden_state_stays_in_open_unit_interval() {
        let mut rng = SeededRng::new(5);
        let params = LSTMLayerParams::init(4, 6, &mut rng);
        let mut h = vec![0.0; 6];
        let mut c = vec![0.0; 6];
        for step in 0..50 {
            let x: Vec<f64> = (0..4)
                .map(|k| ((step * 4 + k) as f64 * 0.37).sin() * 3.0)
                .collect();
            let (nh, nc) = lstm_cell_forward(&params, &x, &h, &c).unwrap();
            h = nh;
            c = nc;
            assert!(h.iter().all(|v| v.abs() < 1.0 && v.is_finite()));
            assert!(c.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn forget_bias_initialized_to_one() {
        let mut rng = SeededRng::new(1);
        let p = LSTMLayerParams::init(2, 5, &mut rng);
        assert!(p.b[0..5].iter().all(|&v| v == 0.0));
        assert!(p.b[5..10].iter().all(|&v| v == 1.0));
        assert!(p.b[10..20].iter().all(|&v| v == 0.0));
        assert_eq!(p.param_count(), 4 * 5 * (2 + 5 + 1));
    }
}
