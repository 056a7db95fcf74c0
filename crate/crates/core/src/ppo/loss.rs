//! Clipped-surrogate PPO loss and its exact gradients.

use super::distribution::log_softmax;
use super::net::{ActorCritic, Trace};

/// `min(r·A, clip(r, 1−ε, 1+ε)·A)` with `r = exp(logp_new − logp_old)`.
pub fn clipped_surrogate(logp_new: f64, logp_old: f64, advantage: f64, epsilon: f64) -> f64 {
    let ratio = (logp_new - logp_old).exp();
    surrogate_from_ratio(ratio, advantage, epsilon)
}

fn surrogate_from_ratio(ratio: f64, advantage: f64, epsilon: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - epsilon, 1.0 + epsilon);
    (ratio * advantage).min(clipped * advantage)
}

/// Whether the unclipped branch is the active one, i.e. the surrogate depends on
/// the ratio.
fn surrogate_is_live(ratio: f64, advantage: f64, epsilon: f64) -> bool {
    if advantage > 0.0 {
        ratio < 1.0 + epsilon
    } else if advantage < 0.0 {
        ratio > 1.0 - epsilon
    } else {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossCoefficients {
    pub clip_epsilon: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
}

/// Borrowed view of the samples that define one loss evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Minibatch<'a> {
    /// Row-major `len × obs_dim` features.
    pub features: &'a [f64],
    pub obs_dim: usize,
    pub actions: &'a [usize],
    pub old_log_probs: &'a [f64],
    pub advantages: &'a [f64],
    pub returns: &'a [f64],
}

impl Minibatch<'_> {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.obs_dim..(i + 1) * self.obs_dim]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossTerms {
    /// Minimised quantity.
    pub total: f64,
    /// Negated mean clipped surrogate.
    pub policy_loss: f64,
    /// Mean squared value error.
    pub value_loss: f64,
    pub entropy: f64,
    /// Mean clipped surrogate.
    pub surrogate: f64,
    pub mean_ratio: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub actor: Vec<f64>,
    pub critic: Vec<f64>,
}

impl Gradients {
    pub fn zeros(net: &ActorCritic) -> Self {
        Self {
            actor: vec![0.0; net.actor.params().len()],
            critic: vec![0.0; net.critic.params().len()],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.actor.iter().chain(&self.critic).all(|g| g.is_finite())
    }
}

/// Loss value only.
pub fn total_loss(net: &ActorCritic, batch: &Minibatch<'_>, coef: &LossCoefficients) -> LossTerms {
    evaluate(net, batch, coef, None)
}

/// Loss value and its gradient with respect to every actor and critic parameter.
pub fn loss_and_gradients(
    net: &ActorCritic,
    batch: &Minibatch<'_>,
    coef: &LossCoefficients,
) -> (LossTerms, Gradients) {
    let mut grads = Gradients::zeros(net);
    let terms = evaluate(net, batch, coef, Some(&mut grads));
    (terms, grads)
}

fn evaluate(
    net: &ActorCritic,
    batch: &Minibatch<'_>,
    coef: &LossCoefficients,
    mut grads: Option<&mut Gradients>,
) -> LossTerms {
    let n = batch.len();
    assert!(n > 0, "empty minibatch");
    let inv_n = 1.0 / n as f64;
    let mut actor_trace = Trace::default();
    let mut critic_trace = Trace::default();
    let mut d_logits = vec![0.0; net.n_actions()];
    let mut sums = LossTerms::default();
    let mut clipped = 0usize;

    for i in 0..n {
        let x = batch.row(i);
        let action = batch.actions[i];
        let adv = batch.advantages[i];

        net.actor.forward_trace(x, &mut actor_trace);
        let log_probs = log_softmax(actor_trace.output());
        let logp = log_probs[action];
        let ratio = (logp - batch.old_log_probs[i]).exp();
        let surr = surrogate_from_ratio(ratio, adv, coef.clip_epsilon);
        let entropy: f64 = log_probs.iter().map(|lp| -lp.exp() * lp).sum();

        net.critic.forward_trace(x, &mut critic_trace);
        let value = critic_trace.output()[0];
        let residual = value - batch.returns[i];

        sums.surrogate += surr;
        sums.value_loss += residual * residual;
        sums.entropy += entropy;
        sums.mean_ratio += ratio;
        sums.approx_kl += batch.old_log_probs[i] - logp;
        if (ratio - 1.0).abs() > coef.clip_epsilon {
            clipped += 1;
        }

        if let Some(g) = grads.as_deref_mut() {
            // d(surr)/d(logp_a) = A·r on the live branch, 0 when clipped.
            let g_surr = if surrogate_is_live(ratio, adv, coef.clip_epsilon) {
                adv * ratio
            } else {
                0.0
            };
            for (j, lp) in log_probs.iter().enumerate() {
                let p = lp.exp();
                let indicator = if j == action { 1.0 } else { 0.0 };
                d_logits[j] = -inv_n * g_surr * (indicator - p)
                    + coef.entropy_coef * inv_n * p * (lp + entropy);
            }
            net.actor.backward(&actor_trace, &d_logits, &mut g.actor);
            let d_value = 2.0 * coef.value_coef * inv_n * residual;
            net.critic
                .backward(&critic_trace, &[d_value], &mut g.critic);
        }
    }

    let surrogate = sums.surrogate * inv_n;
    let value_loss = sums.value_loss * inv_n;
    let entropy = sums.entropy * inv_n;
    LossTerms {
        total: -surrogate + coef.value_coef * value_loss - coef.entropy_coef * entropy,
        policy_loss: -surrogate,
        value_loss,
        entropy,
        surrogate,
        mean_ratio: sums.mean_ratio * inv_n,
        clip_fraction: clipped as f64 * inv_n,
        approx_kl: sums.approx_kl * inv_n,
    }
}
