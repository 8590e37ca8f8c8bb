/// Generalized advantage estimates for one trajectory.
///
/// `values` has one more entry than `rewards`: `values[t]` is `V(s_t)` and the last
/// entry bootstraps the final successor. `dones[t]` cuts the bootstrap after step `t`.
/// Returns `(advantages, value_targets)` with `targets = advantages + V(s_t)`.
pub fn gae_advantages(rewards: &[f64], values: &[f64], dones: &[bool], gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert_eq!(values.len(), n + 1, "values must include the bootstrap state");
    assert_eq!(dones.len(), n, "one done flag per step");
    let mut adv = vec![0.0; n];
    let mut running = 0.0;
    for t in (0..n).rev() {
        let cont = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * values[t + 1] * cont - values[t];
        running = delta + gamma * lambda * cont * running;
        adv[t] = running;
    }
    let targets = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, targets)
}

/// Rescales to zero mean and unit variance; leaves near-constant inputs at zero.
pub fn standardize(values: &mut [f64]) {
    if values.is_empty() {
        return;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    for v in values.iter_mut() {
        *v = if std > 1e-12 { (*v - mean) / std } else { 0.0 };
    }
}
