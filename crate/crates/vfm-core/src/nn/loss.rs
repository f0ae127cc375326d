//! Mean squared error over all matrix entries.

use crate::error::{Error, Result};
use crate::linalg::Matrix2D;

pub fn mse_loss(y_hat: &Matrix2D, y: &Matrix2D) -> Result<f64> {
    check_shapes(y_hat, y)?;
    let n = y_hat.len() as f64;
    let sum: f64 = y_hat
        .values()
        .iter()
        .zip(y.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / n)
}

/// Loss plus its gradient wrt y_hat: d/dy_hat mean((y_hat - y)^2) = 2(y_hat - y)/count.
pub fn mse_loss_and_grad(y_hat: &Matrix2D, y: &Matrix2D) -> Result<(f64, Matrix2D)> {
    check_shapes(y_hat, y)?;
    let n = y_hat.len() as f64;
    let mut grad = Matrix2D::zeros(y_hat.rows(), y_hat.cols());
    let mut sum = 0.0;
    for ((g, a), b) in grad
        .values_mut()
        .iter_mut()
        .zip(y_hat.values())
        .zip(y.values())
    {
        let d = a - b;
        sum += d * d;
        *g = 2.0 * d / n;
    }
    Ok((sum / n, grad))
}

fn check_shapes(y_hat: &Matrix2D, y: &Matrix2D) -> Result<()> {
    if y_hat.rows() != y.rows() || y_hat.cols() != y.cols() {
        return Err(Error::Dimension(format!(
            "mse: shape {}x{} vs {}x{}",
            y_hat.rows(),
            y_hat.cols(),
            y.rows(),
            y.cols()
        )));
    }
    if y_hat.is_empty() {
        return Err(Error::Dimension("mse: empty matrices".into()));
    }
    Ok(())
}
