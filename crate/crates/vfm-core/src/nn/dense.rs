//! Affine layer used as the per-timestep output head and as the building
//! block of the feedforward baseline.

use crate::error::{Error, Result};
use crate::linalg::Matrix2D;
use crate::rng::SeededRng;

#[derive(Debug, Clone)]
pub struct DenseParams {
    pub input_size: usize,
    pub output_size: usize,
    /// output_size x input_size.
    pub w: Matrix2D,
    pub b: Vec<f64>,
}

/// Gradient buffers shaped like [`DenseParams`].
#[derive(Debug, Clone)]
pub struct DenseGrads {
    pub w: Matrix2D,
    pub b: Vec<f64>,
}

impl DenseGrads {
    pub fn zeros(input_size: usize, output_size: usize) -> Self {
        DenseGrads {
            w: Matrix2D::zeros(output_size, input_size),
            b: vec![0.0; output_size],
        }
    }
}

impl DenseParams {
    pub fn zeros(input_size: usize, output_size: usize) -> Self {
        DenseParams {
            input_size,
            output_size,
            w: Matrix2D::zeros(output_size, input_size),
            b: vec![0.0; output_size],
        }
    }

    pub fn init(input_size: usize, output_size: usize, rng: &mut SeededRng) -> Self {
        DenseParams {
            input_size,
            output_size,
            w: super::init::glorot_uniform(output_size, input_size, rng),
            b: vec![0.0; output_size],
        }
    }

    pub fn param_count(&self) -> usize {
        self.input_size * self.output_size + self.output_size
    }

    /// y = W x + b
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_size {
            return Err(Error::Dimension(format!(
                "dense: input length {} != input_size {}",
                x.len(),
                self.input_size
            )));
        }
        let mut y = self.b.clone();
        self.w.matvec_add(x, &mut y);
        Ok(y)
    }

    /// Accumulates dW += dy x^T and db += dy; returns dx = W^T dy.
    pub fn backward(&self, x: &[f64], dy: &[f64], grads: &mut DenseGrads) -> Vec<f64> {
        grads.w.add_outer(dy, x);
        for (gb, &d) in grads.b.iter_mut().zip(dy) {
            *gb += d;
        }
        let mut dx = vec![0.0; self.input_size];
        self.w.tr_matvec_add(dy, &mut dx);
        dx
    }
}
