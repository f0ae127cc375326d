//! Finite-difference verification of the hand-derived BPTT gradients.

use crate::error::Result;
use crate::linalg::Matrix2D;
use crate::model::DeepLSTMModel;

/// Compares analytic sequence gradients against fourth-order central finite
/// differences with the given step:
///
///   dL/dp ~ (8(L(p+h) - L(p-h)) - (L(p+2h) - L(p-2h))) / (12h)
///
/// Returns the maximum over parameters of
/// |analytic - fd| / max(|analytic|, |fd|, 1e-8).
///
/// The comparison bottoms out at the f64 forward-pass noise floor (around
/// 1e-13 absolute on O(1) losses), so gradient entries much smaller than
/// ~1e-7 are resolved by the floor, not by the step. Cost is O(P) full
/// forward passes; keep the model small.
pub fn gradient_check(
    model: &DeepLSTMModel,
    x_seq: &Matrix2D,
    y_seq: &Matrix2D,
    fd_step: f64,
) -> Result<f64> {
    let (_, grads) = model.loss_and_gradients(x_seq, y_seq)?;
    let analytic = grads.flat();
    let theta = model.params_flat();

    let mut probe = model.clone();
    let mut shifted = theta.clone();
    let mut eval = |shifted: &mut Vec<f64>, idx: usize, value: f64| -> Result<f64> {
        shifted[idx] = value;
        probe.assign_params_flat(shifted)?;
        let y_hat = probe.forward_sequence(x_seq)?;
        crate::nn::mse_loss(&y_hat, y_seq)
    };

    let mut worst = 0.0f64;
    for idx in 0..theta.len() {
        let p = theta[idx];
        let l_p1 = eval(&mut shifted, idx, p + fd_step)?;
        let l_m1 = eval(&mut shifted, idx, p - fd_step)?;
        let l_p2 = eval(&mut shifted, idx, p + 2.0 * fd_step)?;
        let l_m2 = eval(&mut shifted, idx, p - 2.0 * fd_step)?;
        shifted[idx] = p;

        let fd = (8.0 * (l_p1 - l_m1) - (l_p2 - l_m2)) / (12.0 * fd_step);
        let rel = (analytic[idx] - fd).abs() / analytic[idx].abs().max(fd.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    Ok(worst)
}
