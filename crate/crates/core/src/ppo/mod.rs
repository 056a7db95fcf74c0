//! Proximal policy optimisation with hand-written networks and gradients.

mod adam;
mod checkpoint;
mod config;
mod distribution;
mod gae;
mod loss;
mod net;
mod rollout;
mod trainer;

pub use adam::{annealed_lr, Adam};
pub use checkpoint::Checkpoint;
pub use config::PpoConfig;
pub use distribution::{argmax, entropy, log_softmax, logsumexp, sample_action, softmax};
pub use gae::gae_advantages;
pub use loss::{
    clipped_surrogate, loss_and_gradients, total_loss, Gradients, LossCoefficients, LossTerms,
    Minibatch,
};
pub use net::{param_count, Activation, ActorCritic, Mlp, Trace};
pub use rollout::{
    collect_rollout, Environment, EpisodeSummary, RolloutActor, RolloutBuffer, Segment, Transition,
};
pub use trainer::{normalize, write_stats, TrainStats, Trainer, STATS_HEADER};
