//! Minimal neural-network engine: LSTM and dense layers, forward pass,
//! backpropagation through time, MSE loss, Adam, and gradient verification.
//!
//! Everything runs in double precision on plain `Vec<f64>`/[`Matrix2D`]
//! buffers; gradients are hand-derived for the fixed architectures rather
//! than traced through a graph.

pub mod adam;
pub mod dense;
pub mod gradcheck;
pub mod init;
pub mod loss;
pub mod lstm;

pub use adam::{AdamHyperParams, AdamState};
pub use dense::DenseParams;
pub use gradcheck::gradient_check;
pub use loss::{mse_loss, mse_loss_and_grad};
pub use lstm::{lstm_cell_forward, LSTMLayerParams};

use crate::linalg::Matrix2D;

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Per-layer gradient buffers, shaped like [`LSTMLayerParams`].
#[derive(Debug, Clone)]
pub struct LstmLayerGrads {
    pub w_x: Matrix2D,
    pub w_h: Matrix2D,
    pub b: Vec<f64>,
}

impl LstmLayerGrads {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        LstmLayerGrads {
            w_x: Matrix2D::zeros(4 * hidden_size, input_size),
            w_h: Matrix2D::zeros(4 * hidden_size, hidden_size),
            b: vec![0.0; 4 * hidden_size],
        }
    }
}
