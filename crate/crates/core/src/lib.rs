//! Highway mandatory lane-change simulation and a from-scratch PPO learner.
//!
//! The crate is organised bottom-up:
//!
//! - [`traffic_sim`]: seeded microscopic highway simulation (IDM traffic, kinematic
//!   lateral motion for the ego vehicle, rectangle collision checks).
//! - [`env`]: the episodic decision environment (21-entry observation, 6 combined
//!   actions, comfort/efficiency/safety reward, safety-intervention filter).
//! - [`ppo`]: dense actor/critic networks with hand-written backprop, GAE, the clipped
//!   surrogate loss, Adam and the rollout/epoch/minibatch loop.
//! - [`baselines`]: safety-gap and time-to-collision rule policies.
//! - [`evaluation`]: rollout metrics (average return, success and collision rate).
//! - [`config`] and [`cli`]: the flat key/value run configuration and the `lcsim`
//!   subcommands.

pub mod baselines;
pub mod cli;
pub mod config;
pub mod env;
pub mod error;
pub mod evaluation;
pub mod ppo;
pub mod seed;
pub mod traffic_sim;

pub use error::{Error, Result};
