//! Oracles shared by the integration suites and the acceptance run.
#![allow(dead_code)]

use lanechange::env::{advances_change, ActionPair, EnvConfig, LaneChangeEnv, COLLISION_PENALTY};
use lanechange::error::Result;
use lanechange::ppo::{
    log_softmax, loss_and_gradients, softmax, total_loss, ActorCritic, Environment,
    LossCoefficients, Minibatch, PpoConfig, Trainer, Transition,
};
use lanechange::traffic_sim::{
    compute_gap, LateralCommand, RoadConfig, VehicleState, World, WorldConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn car(id: u64, y: f64, v: f64, lane: usize, road: &RoadConfig) -> VehicleState {
    VehicleState {
        id,
        y,
        v_y: v,
        a_y: 0.0,
        x: road.lane_center(lane),
        v_x: 0.0,
        lane,
        length: 5.0,
        width: 1.8,
    }
}

// ---------------------------------------------------------------------------
// Advantage estimation

/// Direct δ-sum: A_t = Σ_l (γλ)^l δ_{t+l}, stopping after the first done.
pub fn gae_direct(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: f64,
    gamma: f64,
    lambda: f64,
) -> Vec<f64> {
    let n = rewards.len();
    let value_after = |t: usize| if t + 1 < n { values[t + 1] } else { bootstrap };
    let delta = |t: usize| {
        let next = if dones[t] { 0.0 } else { value_after(t) };
        rewards[t] + gamma * next - values[t]
    };
    (0..n)
        .map(|t| {
            let mut sum = 0.0;
            let mut weight = 1.0;
            for k in t..n {
                sum += weight * delta(k);
                if dones[k] {
                    break;
                }
                weight *= gamma * lambda;
            }
            sum
        })
        .collect()
}

/// Largest deviation of the GAE recursion (advantages and returns) from the direct
/// sum over `cases` random sequences of length 1..=64.
pub fn gae_max_error(seed: u64, cases: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let n = rng.gen_range(1..=64);
        let rewards: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let dones: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.1)).collect();
        let bootstrap = rng.gen_range(-10.0..10.0);
        let gamma = rng.gen_range(0.8..1.0);
        let lambda = rng.gen_range(0.0..1.0);
        let (adv, ret) =
            lanechange::ppo::gae_advantages(&rewards, &values, &dones, bootstrap, gamma, lambda);
        let want = gae_direct(&rewards, &values, &dones, bootstrap, gamma, lambda);
        for t in 0..n {
            worst = worst.max((adv[t] - want[t]).abs());
            worst = worst.max((ret[t] - (want[t] + values[t])).abs());
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// Loss and gradients

pub struct Batch {
    pub features: Vec<f64>,
    pub actions: Vec<usize>,
    pub old: Vec<f64>,
    pub adv: Vec<f64>,
    pub ret: Vec<f64>,
    pub obs_dim: usize,
}

impl Batch {
    pub fn view(&self) -> Minibatch<'_> {
        Minibatch {
            features: &self.features,
            obs_dim: self.obs_dim,
            actions: &self.actions,
            old_log_probs: &self.old,
            advantages: &self.adv,
            returns: &self.ret,
        }
    }
}

pub const COEF: LossCoefficients = LossCoefficients {
    clip_epsilon: 0.2,
    value_coef: 0.5,
    entropy_coef: 0.01,
};

/// Random batch whose probability ratios stay clear of the clip kinks, so the
/// loss is smooth around the current parameters.
pub fn random_batch(net: &ActorCritic, n: usize, rng: &mut ChaCha8Rng) -> Batch {
    let obs_dim = net.obs_dim();
    let mut b = Batch {
        features: Vec::new(),
        actions: Vec::new(),
        old: Vec::new(),
        adv: Vec::new(),
        ret: Vec::new(),
        obs_dim,
    };
    for _ in 0..n {
        let x: Vec<f64> = (0..obs_dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let (logits, _) = net.policy_forward(&x).unwrap();
        let action = rng.gen_range(0..net.n_actions());
        let logp = log_softmax(&logits)[action];
        let shift = loop {
            let s: f64 = rng.gen_range(-0.4..0.4);
            let r = (-s).exp();
            if (r - 1.2).abs() > 0.02 && (r - 0.8).abs() > 0.02 {
                break s;
            }
        };
        b.features.extend(x);
        b.actions.push(action);
        b.old.push(logp + shift);
        b.adv.push(rng.gen_range(-2.0..2.0));
        b.ret.push(rng.gen_range(-5.0..5.0));
    }
    b
}

fn perturbed(net: &ActorCritic, actor: bool, i: usize, h: f64) -> ActorCritic {
    let mut n = net.clone();
    if actor {
        n.actor.params_mut()[i] += h;
    } else {
        n.critic.params_mut()[i] += h;
    }
    n
}

/// Worst relative error (vector 2-norm, per network) of the analytic loss
/// gradient against central differences over `cases` random nets and batches.
pub fn gradient_check_max_error(seed: u64, cases: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let obs_dim = rng.gen_range(1..6);
        let hidden: Vec<usize> = (0..rng.gen_range(1..3))
            .map(|_| rng.gen_range(2..9))
            .collect();
        let n_actions = rng.gen_range(2..7);
        let mut net = ActorCritic::new(obs_dim, &hidden, n_actions, &mut rng).unwrap();
        // Larger head weights than the 0.01 init so the policy term is not negligible.
        for p in net.actor.params_mut() {
            *p *= 1.0 + rng.gen_range(0.0..3.0);
        }
        let batch = random_batch(&net, rng.gen_range(1..12), &mut rng);
        let (_, grads) = loss_and_gradients(&net, &batch.view(), &COEF);
        for (actor, analytic) in [(true, &grads.actor), (false, &grads.critic)] {
            let mut diff = 0.0;
            let mut scale = 0.0;
            for (i, a) in analytic.iter().enumerate() {
                let up = total_loss(&perturbed(&net, actor, i, h), &batch.view(), &COEF).total;
                let down = total_loss(&perturbed(&net, actor, i, -h), &batch.view(), &COEF).total;
                let numeric = (up - down) / (2.0 * h);
                diff += (a - numeric).powi(2);
                scale += a.abs().max(numeric.abs()).powi(2);
            }
            worst = worst.max(diff.sqrt() / scale.sqrt().max(1e-12));
        }
    }
    worst
}

/// With old log-probabilities taken from the current parameters: worst
/// `|mean ratio - 1|`, worst `|surrogate - mean advantage|`, total clip fraction.
pub fn on_policy_identity(seed: u64, cases: usize) -> (f64, f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut ratio_err, mut surr_err, mut clipped): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..cases {
        let net = ActorCritic::new(7, &[16, 16], 6, &mut rng).unwrap();
        let mut batch = random_batch(&net, 32, &mut rng);
        for i in 0..batch.actions.len() {
            let x = &batch.features[i * 7..(i + 1) * 7];
            let (logits, _) = net.policy_forward(x).unwrap();
            batch.old[i] = log_softmax(&logits)[batch.actions[i]];
        }
        let terms = total_loss(&net, &batch.view(), &COEF);
        let mean_adv = batch.adv.iter().sum::<f64>() / batch.adv.len() as f64;
        ratio_err = ratio_err.max((terms.mean_ratio - 1.0).abs());
        surr_err = surr_err.max((terms.surrogate - mean_adv).abs());
        clipped += terms.clip_fraction;
    }
    (ratio_err, surr_err, clipped)
}

// ---------------------------------------------------------------------------
// Learning sanity

/// One-state bandit: action 3 pays 1, everything else pays 0.
pub struct Bandit;

pub const BANDIT_STATE: [f64; 2] = [1.0, -0.5];

impl Environment for Bandit {
    fn observation_dim(&self) -> usize {
        2
    }
    fn n_actions(&self) -> usize {
        6
    }
    fn reset(&mut self, _seed: u64) -> Result<Vec<f64>> {
        Ok(BANDIT_STATE.to_vec())
    }
    fn step(&mut self, action: usize) -> Result<Transition> {
        Ok(Transition {
            features: BANDIT_STATE.to_vec(),
            reward: if action == 3 { 1.0 } else { 0.0 },
            done: true,
            status: None,
        })
    }
}

pub fn small_ppo_config(iters: usize) -> PpoConfig {
    PpoConfig {
        horizon: 128,
        n_actors: 2,
        minibatch_size: 64,
        optim_epochs: 4,
        learning_rate: 3e-3,
        total_iterations: iters,
        ..PpoConfig::default()
    }
}

/// Probability of the paying arm after `iters` PPO iterations.
pub fn bandit_best_arm_probability(iters: usize, seed: u64) -> f64 {
    let mut trainer = Trainer::new(small_ppo_config(iters), seed, |_| Ok(Bandit)).unwrap();
    trainer.train(|_, _| Ok(())).unwrap();
    let (logits, _) = trainer.net().policy_forward(&BANDIT_STATE).unwrap();
    softmax(&logits)[3]
}

// ---------------------------------------------------------------------------
// Reward

/// Nearest vehicles ahead and behind in `lane`, by exhaustive scan.
fn slot(world: &World, ego: &VehicleState, lane: usize, ahead: bool) -> Option<VehicleState> {
    world
        .others()
        .filter(|v| v.lane == lane && (v.y > ego.y) == ahead)
        .min_by(|a, b| (a.y - ego.y).abs().total_cmp(&(b.y - ego.y).abs()))
        .copied()
}

/// Reward for one step recomputed from raw states: comfort from finite-difference
/// jerk, efficiency from lane offset and speed error, near-collision from the
/// table slots of the executed lateral action, then collision and intervention.
#[allow(clippy::too_many_arguments)]
fn reward_by_hand(
    cfg: &EnvConfig,
    road: &RoadConfig,
    dt: f64,
    before: &VehicleState,
    after: &World,
    lateral: LateralCommand,
    intervened: bool,
    prev_acc: (f64, f64),
) -> (f64, (f64, f64)) {
    let ego = after.ego();
    let lat_acc = (ego.v_x - before.v_x) / dt;
    let lon_acc = ego.a_y;
    let jx = (lat_acc - prev_acc.0) / dt;
    let jy = (lon_acc - prev_acc.1) / dt;
    let comfort = -cfg.alpha * jx * jx - cfg.beta * jy * jy;

    let target_x = road.lane_center(road.target_lane);
    let efficiency = cfg.w_t * -dt
        + cfg.w_l * -(ego.x - target_x).abs()
        + cfg.w_s * -(ego.v_y - cfg.v_desired).abs();

    let slots: Vec<Option<VehicleState>> = match lateral {
        LateralCommand::Keep => vec![slot(after, ego, road.target_lane, true)],
        LateralCommand::Change => vec![
            slot(after, ego, road.target_lane, true),
            slot(after, ego, road.target_lane, false),
        ],
        LateralCommand::Abort => vec![
            slot(after, ego, ego.lane, true),
            slot(after, ego, ego.lane, false),
        ],
    };
    let mut f: f64 = 0.0;
    let mut d = f64::INFINITY;
    for other in slots.into_iter().flatten() {
        f = f.min(-1.0 / ((ego.y - other.y).abs() + 0.1));
        d = d.min(((ego.y - other.y).abs() - 5.0).max(0.0));
    }
    let collided = after.others().any(|v| {
        (v.y - ego.y).abs() < 0.5 * (v.length + ego.length)
            && (v.x - ego.x).abs() < 0.5 * (v.width + ego.width)
    });
    let safety = if collided {
        COLLISION_PENALTY
    } else if d < cfg.d_s {
        f
    } else {
        0.0
    } + if intervened { cfg.r_p } else { 0.0 };

    (comfort + efficiency + safety, (lat_acc, lon_acc))
}

/// Close traffic on both lanes so every branch of the safety table is visited.
pub fn reward_scenario() -> (WorldConfig, World) {
    let mut cfg = WorldConfig::default();
    cfg.traffic.arrival_rate_per_lane = 0.0;
    let road = cfg.road;
    let ego = car(0, 200.0, 12.0, 0, &road);
    let others = vec![
        car(1, 209.0, 10.0, 0, &road),
        car(2, 212.0, 13.0, 1, &road),
        car(3, 196.0, 14.0, 1, &road),
        car(4, 185.0, 12.0, 0, &road),
        car(5, 240.0, 15.0, 1, &road),
    ];
    (cfg, World::from_vehicles(cfg, ego, others))
}

/// Actions driving the scenario through keep, blocked changes, aborts and both
/// longitudinal choices.
pub const REWARD_SCRIPT: [usize; 20] = [0, 1, 3, 3, 2, 4, 5, 0, 3, 3, 3, 3, 1, 1, 4, 4, 2, 3, 0, 5];

/// Largest `|r_total - oracle|` over the scripted episode with non-trivial comfort
/// weights, plus a count of steps in which the intervention penalty and the
/// near-collision term were charged.
pub fn reward_oracle_max_error() -> (f64, usize, usize, usize) {
    let (world_cfg, world) = reward_scenario();
    let cfg = EnvConfig {
        alpha: 0.01,
        beta: 0.02,
        w_s: 0.05,
        r_p: -1.5,
        ..EnvConfig::default()
    };
    let road = world_cfg.road;
    let mut env = LaneChangeEnv::new(world_cfg, cfg).unwrap();
    env.reset_with_world(world);
    let mut prev = (0.0, env.world().unwrap().ego().a_y);
    let mut worst: f64 = 0.0;
    let (mut steps, mut penalties, mut near) = (0, 0, 0);
    for &a in REWARD_SCRIPT.iter() {
        let before = *env.world().unwrap().ego();
        let r = env.step(a).unwrap();
        let (want, acc) = reward_by_hand(
            &cfg,
            &road,
            world_cfg.dt,
            &before,
            env.world().unwrap(),
            r.executed.lateral,
            r.intervened,
            prev,
        );
        prev = acc;
        worst = worst.max((r.reward.r_total - want).abs());
        steps += 1;
        penalties += usize::from(r.reward.r_penalty != 0.0);
        near += usize::from(r.reward.r_near != 0.0);
        if r.done {
            break;
        }
    }
    (worst, steps, penalties, near)
}

/// Ego closing on a stopped car with the filter off: the collision step must pay
/// the fixed penalty plus comfort and efficiency terms.
pub fn collision_reward_error() -> (f64, bool) {
    let mut world_cfg = WorldConfig::default();
    world_cfg.traffic.arrival_rate_per_lane = 0.0;
    let road = world_cfg.road;
    let cfg = EnvConfig {
        safety_filter: false,
        ..EnvConfig::default()
    };
    let world = World::from_vehicles(
        world_cfg,
        car(0, 100.0, 25.0, 0, &road),
        vec![car(1, 112.0, 0.0, 0, &road)],
    );
    let mut env = LaneChangeEnv::new(world_cfg, cfg).unwrap();
    env.reset_with_world(world);
    let mut prev = (0.0, env.world().unwrap().ego().a_y);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let before = *env.world().unwrap().ego();
        let r = env.step(ActionPair::KEEP.index()).unwrap();
        let (want, acc) = reward_by_hand(
            &cfg,
            &road,
            world_cfg.dt,
            &before,
            env.world().unwrap(),
            r.executed.lateral,
            false,
            prev,
        );
        prev = acc;
        worst = worst.max((r.reward.r_total - want).abs());
        if r.done {
            return (worst, r.reward.r_collision == COLLISION_PENALTY);
        }
    }
    (worst, false)
}

// ---------------------------------------------------------------------------
// Safety filter

/// Random actions through filtered episodes: returns (steps, executed moves
/// toward the target lane, moves taken while a target-lane gap was below gap_min).
pub fn filter_guarantee(
    world_cfg: WorldConfig,
    env_cfg: EnvConfig,
    steps: usize,
    seed: u64,
) -> (usize, usize, usize) {
    assert!(env_cfg.safety_filter);
    let road = world_cfg.road;
    let mut env = LaneChangeEnv::new(world_cfg, env_cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    env.reset(rng.gen());
    let (mut changes, mut violations) = (0, 0);
    for _ in 0..steps {
        let world = env.world().unwrap();
        let ego = *world.ego();
        let too_close = world
            .others()
            .filter(|v| v.lane == road.target_lane)
            .any(|v| compute_gap(&ego, v) < env_cfg.gap_min);
        let r = env.step(rng.gen_range(0..ActionPair::COUNT)).unwrap();
        if advances_change(&ego, &road, r.executed.lateral) {
            changes += 1;
            if too_close {
                violations += 1;
            }
        }
        if r.done {
            env.reset(rng.gen());
        }
    }
    (steps, changes, violations)
}
