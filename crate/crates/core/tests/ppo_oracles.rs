mod common;

use lanechange::error::Result;
use lanechange::ppo::{
    collect_rollout, log_softmax, ActorCritic, Environment, RolloutActor, Transition,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn gae_matches_direct_sum_on_random_sequences() {
    let err = common::gae_max_error(2024, 100);
    assert!(err < 1e-9, "worst deviation {err}");
}

#[test]
fn analytic_gradients_match_central_differences() {
    let err = common::gradient_check_max_error(99, 24);
    assert!(err < 1e-4, "worst relative error {err}");
}

#[test]
fn on_policy_ratio_is_one_and_surrogate_is_mean_advantage() {
    let (ratio, surrogate, clipped) = common::on_policy_identity(5, 10);
    assert!(ratio < 1e-12, "ratio off by {ratio}");
    assert!(surrogate < 1e-12, "surrogate off by {surrogate}");
    assert_eq!(clipped, 0.0);
}

/// Episodes of fixed length 3; reward equals the step number within the episode.
struct Scripted {
    t: usize,
    resets: Vec<u64>,
}

impl Environment for Scripted {
    fn observation_dim(&self) -> usize {
        2
    }
    fn n_actions(&self) -> usize {
        3
    }
    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        self.t = 0;
        self.resets.push(seed);
        Ok(vec![0.0, 1.0])
    }
    fn step(&mut self, _action: usize) -> Result<Transition> {
        self.t += 1;
        Ok(Transition {
            features: vec![self.t as f64, 1.0],
            reward: self.t as f64,
            done: self.t == 3,
            status: None,
        })
    }
}

#[test]
fn rollout_records_scripted_transitions() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let net = ActorCritic::new(2, &[4], 3, &mut rng).unwrap();
    let mut actors: Vec<_> = (0..2)
        .map(|i| {
            RolloutActor::new(
                i,
                Scripted {
                    t: 0,
                    resets: Vec::new(),
                },
                77,
            )
            .unwrap()
        })
        .collect();
    let first = collect_rollout(&mut actors, &net, 5).unwrap();
    let second = collect_rollout(&mut actors, &net, 5).unwrap();

    assert_eq!(first.len(), 10);
    // Actor segments continue mid-episode: 1,2,3,1,2 then 3,1,2,3,1.
    assert_eq!(first.rewards[..5], [1.0, 2.0, 3.0, 1.0, 2.0]);
    assert_eq!(first.rewards[5..], [1.0, 2.0, 3.0, 1.0, 2.0]);
    assert_eq!(second.rewards[..5], [3.0, 1.0, 2.0, 3.0, 1.0]);
    assert_eq!(first.dones[..5], [false, false, true, false, false]);
    assert_eq!(second.dones[..5], [true, false, false, true, false]);

    // Stored features are the observation the action was taken in.
    assert_eq!(first.features[..6], [0.0, 1.0, 1.0, 1.0, 2.0, 1.0]);
    for i in 0..first.len() {
        let x = &first.features[i * 2..i * 2 + 2];
        let (logits, value) = net.policy_forward(x).unwrap();
        assert_eq!(first.log_probs[i], log_softmax(&logits)[first.actions[i]]);
        assert_eq!(first.values[i], value);
    }
    // Bootstrap is the value of the state after the segment: step 2 of an episode.
    let (_, v2) = net.policy_forward(&[2.0, 1.0]).unwrap();
    assert_eq!(first.bootstrap_values, vec![v2, v2]);

    assert_eq!(first.episodes.len(), 2);
    assert!(first
        .episodes
        .iter()
        .all(|e| e.episode_return == 6.0 && e.length == 3));
    assert_eq!(second.episodes.len(), 4);

    // Episode seeds differ between actors and between episodes.
    let seeds: Vec<u64> = actors.iter().flat_map(|a| a.env().resets.clone()).collect();
    let mut unique = seeds.clone();
    unique.sort_unstable();
    unique.dedup();
    assert_eq!(unique.len(), seeds.len());
}
