//! Categorical distribution over logits.

use rand::Rng;

pub fn logsumexp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln()
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let lse = logsumexp(logits);
    logits.iter().map(|z| z - lse).collect()
}

/// Probabilities computed as `exp(log_softmax)`, so `exp(log_prob)` of a sampled
/// action equals its probability exactly.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    log_softmax(logits).into_iter().map(f64::exp).collect()
}

pub fn entropy(logits: &[f64]) -> f64 {
    log_softmax(logits)
        .into_iter()
        .map(|lp| {
            let p = lp.exp();
            if p > 0.0 {
                -p * lp
            } else {
                0.0
            }
        })
        .sum()
}

/// Inverse-CDF draw; returns the action and its log-probability.
pub fn sample_action<R: Rng>(logits: &[f64], rng: &mut R) -> (usize, f64) {
    let log_probs = log_softmax(logits);
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    let mut chosen = None;
    for (i, lp) in log_probs.iter().enumerate() {
        cumulative += lp.exp();
        if u < cumulative {
            chosen = Some(i);
            break;
        }
    }
    // Rounding can leave the total just under u; fall back to the likeliest action.
    let action = chosen.unwrap_or_else(|| argmax(logits));
    (action, log_probs[action])
}

/// Index of the largest logit (first one on ties).
pub fn argmax(logits: &[f64]) -> usize {
    let mut best = 0;
    for (i, z) in logits.iter().enumerate() {
        if *z > logits[best] {
            best = i;
        }
    }
    best
}
