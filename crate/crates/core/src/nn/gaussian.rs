//! Diagonal Gaussian log-density and its score.

/// `ln sqrt(2 pi)`.
pub const LOG_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub fn gaussian_log_density(action: &[f64], mean: &[f64], log_std: &[f64]) -> f64 {
    action
        .iter()
        .zip(mean)
        .zip(log_std)
        .map(|((a, m), ls)| {
            let z = (a - m) * (-ls).exp();
            -0.5 * z * z - ls - LOG_SQRT_2PI
        })
        .sum()
}

/// Gradient of the log-density with respect to `(mean, log_std)`.
pub fn gaussian_score(action: &[f64], mean: &[f64], log_std: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut d_mean = Vec::with_capacity(mean.len());
    let mut d_log_std = Vec::with_capacity(mean.len());
    for ((a, m), ls) in action.iter().zip(mean).zip(log_std) {
        let inv_var = (-2.0 * ls).exp();
        let diff = a - m;
        d_mean.push(diff * inv_var);
        d_log_std.push(diff * diff * inv_var - 1.0);
    }
    (d_mean, d_log_std)
}
