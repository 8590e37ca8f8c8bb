use crate::error::{Error, Result};

fn same_len(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), actual: q.len() });
    }
    Ok(())
}

/// Total variation distance `1/2 sum |p_i - q_i|`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    same_len(p, q)?;
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Categorical `KL(p || q)`. Mass in `p` where `q` is zero is an error rather than `+inf`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    same_len(p, q)?;
    let mut kl = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(Error::SupportViolation(i));
            }
            kl += pi * (pi / qi).ln();
        }
    }
    // Rounding can produce tiny negatives for p == q.
    Ok(kl.max(0.0))
}

/// KL between isotropic Gaussians sharing `sigma`: `|m1 - m2|^2 / (2 sigma^2)`.
pub fn gaussian_kl(mean1: &[f64], mean2: &[f64], sigma: f64) -> Result<f64> {
    same_len(mean1, mean2)?;
    if !(sigma > 0.0) {
        return Err(Error::InvalidInput(format!("sigma must be positive, got {sigma}")));
    }
    let sq: f64 = mean1.iter().zip(mean2).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sq / (2.0 * sigma * sigma))
}
