/// Truncated generalised advantage estimation over one actor's segment.
///
/// `A_t = δ_t + γλ(1 − done_t) A_{t+1}` with
/// `δ_t = r_t + γ(1 − done_t) V_{t+1} − V_t`, where `V_T` is `bootstrap_value`.
/// A done flag marks the last transition of an episode, so nothing flows back
/// across it. Returns `(advantages, returns)` with `returns = advantages + values`.
pub fn gae_advantages(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap_value: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert_eq!(values.len(), n, "values length");
    assert_eq!(dones.len(), n, "dones length");
    let mut advantages = vec![0.0; n];
    let mut next_advantage = 0.0;
    let mut next_value = bootstrap_value;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * live * next_value - values[t];
        next_advantage = delta + gamma * lambda * live * next_advantage;
        advantages[t] = next_advantage;
        next_value = values[t];
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    (advantages, returns)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step_with_zero_values() {
        let (a, r) = gae_advantages(&[1.5], &[0.0], &[false], 0.0, 0.99, 0.95);
        assert_eq!(a, vec![1.5]);
        assert_eq!(r, vec![1.5]);
    }

    #[test]
    fn zero_discount_reduces_to_one_step_residual() {
        let rewards = [1.0, -2.0, 0.5, 3.0];
        let values = [0.2, 0.1, -0.4, 1.0];
        let (a, _) = gae_advantages(
            &rewards,
            &values,
            &[false, true, false, false],
            7.0,
            0.0,
            0.95,
        );
        for t in 0..4 {
            assert_eq!(a[t], rewards[t] - values[t]);
        }
    }

    #[test]
    fn done_zeroes_the_bootstrap() {
        let (a, _) = gae_advantages(&[1.0], &[0.5], &[true], 100.0, 0.99, 0.95);
        assert_eq!(a, vec![0.5]);
    }
}
