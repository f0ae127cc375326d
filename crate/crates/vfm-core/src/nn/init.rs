//! Seeded weight initialization.

use crate::linalg::Matrix2D;
use crate::rng::SeededRng;

/// Kernel entries drawn uniformly from [-k, k] with k = sqrt(6/(fan_in+fan_out)).
/// For an (out x in) map, fan_in = in and fan_out = out.
pub fn glorot_uniform(out_size: usize, in_size: usize, rng: &mut SeededRng) -> Matrix2D {
    let k = (6.0 / (in_size + out_size) as f64).sqrt();
    let mut m = Matrix2D::zeros(out_size, in_size);
    for v in m.values_mut() {
        *v = rng.uniform(-k, k);
    }
    m
}
