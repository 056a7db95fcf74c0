//! `lcsim` subcommands: train, eval, replay.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::baselines::BaselineKind;
use crate::config::RunConfig;
use crate::env::{read_trajectory, replay, write_trajectory, EnvConfig, LaneChangeEnv};
use crate::error::{Error, Result};
use crate::evaluation::{
    evaluate_with_logs, BaselinePolicy, DrivingPolicy, EvalReport, GreedyPolicy,
};
use crate::ppo::{Checkpoint, Trainer, STATS_HEADER};

#[derive(Debug, Parser)]
#[command(
    name = "lcsim",
    version,
    about = "Highway mandatory lane-change simulator and PPO trainer"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a PPO policy and write stats and checkpoints.
    Train(TrainArgs),
    /// Evaluate a checkpoint or a rule baseline.
    Eval(EvalArgs),
    /// Re-run a trajectory log and check it bit for bit.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Run configuration file (defaults apply to keys it leaves out).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides run.seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of training iterations; overrides ppo.total_iterations.
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long, default_value = "runs/train")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Checkpoint of a trained policy (acts greedily).
    #[arg(
        long,
        conflicts_with = "baseline",
        required_unless_present = "baseline"
    )]
    pub checkpoint: Option<PathBuf>,
    /// Rule baseline to evaluate instead of a checkpoint.
    #[arg(long, value_parser = parse_baseline)]
    pub baseline: Option<BaselineKind>,
    /// Gap baseline threshold (m); overrides baseline.gap_threshold.
    #[arg(long)]
    pub gap_threshold: Option<f64>,
    /// TTC baseline threshold (s); overrides baseline.ttc_threshold.
    #[arg(long)]
    pub ttc_threshold: Option<f64>,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    pub rollouts: u64,
    /// Step cap of each rollout.
    #[arg(long, default_value_t = 1024, value_parser = clap::value_parser!(u64).range(1..))]
    pub horizon: u64,
    /// Master seed; overrides run.seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "runs/eval")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Trajectory CSV written by `eval`.
    pub trajectory: PathBuf,
    /// Configuration the trajectory was recorded under.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn parse_baseline(s: &str) -> std::result::Result<BaselineKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::file(path, e))
}

fn create_file(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::file(path, e))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => cmd_train(&args),
        Command::Eval(args) => cmd_eval(&args).map(|_| ()),
        Command::Replay(args) => cmd_replay(&args),
    }
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
    }
    if let Some(iters) = args.iters {
        cfg.ppo.total_iterations = iters;
    }
    cfg.validate()?;
    let world = cfg.world();
    let env_cfg = cfg.env;
    let mut trainer = Trainer::new(cfg.ppo, cfg.run.seed, |_| {
        LaneChangeEnv::new(world, env_cfg)
    })?;

    create_dir(&args.out_dir)?;
    let config_path = args.out_dir.join("config.cfg");
    fs::write(&config_path, cfg.to_flat_string()).map_err(|e| Error::file(&config_path, e))?;
    let stats_path = args.out_dir.join("stats.csv");
    let mut stats_out = create_file(&stats_path)?;
    writeln!(stats_out, "{STATS_HEADER}").map_err(|e| Error::file(&stats_path, e))?;

    let every = cfg.run.checkpoint_every;
    let out_dir = args.out_dir.clone();
    let result = trainer.train(|tr, s| {
        writeln!(stats_out, "{}", s.to_csv_row())
            .and_then(|_| stats_out.flush())
            .map_err(|e| Error::file(&stats_path, e))?;
        println!(
            "iter {:>4}  episodes {:>3}  return {:>9.3}  success {:.3}  collision {:.3}  loss {:.4}  entropy {:.3}",
            s.iteration,
            s.episodes,
            s.mean_episode_return,
            s.success_rate(),
            s.collision_rate(),
            s.total_loss,
            s.entropy
        );
        if every > 0 && s.iteration % every == 0 {
            tr.checkpoint().save(&out_dir.join(format!("iter_{:06}.ckpt", s.iteration)))?;
        }
        Ok(())
    });
    match result {
        Ok(_) => {
            let path = args.out_dir.join("final.ckpt");
            trainer.checkpoint().save(&path)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Err(e @ Error::Training { .. }) => {
            // The trainer has rolled back to the state before the failed iteration.
            let path = args.out_dir.join("last_good.ckpt");
            trainer.checkpoint().save(&path)?;
            eprintln!("kept last good state in {}", path.display());
            Err(e)
        }
        Err(e) => Err(e),
    }
}

pub fn cmd_eval(args: &EvalArgs) -> Result<EvalReport> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
    }
    if let Some(kind) = args.baseline {
        cfg.baseline.kind = kind;
    }
    if let Some(t) = args.gap_threshold {
        cfg.baseline.gap_threshold = t;
    }
    if let Some(t) = args.ttc_threshold {
        cfg.baseline.ttc_threshold = t;
    }
    cfg.validate()?;
    let world = cfg.world();

    let checkpoint = args
        .checkpoint
        .as_deref()
        .map(Checkpoint::load)
        .transpose()?;
    let (policy, env_cfg): (Box<dyn DrivingPolicy + '_>, EnvConfig) = match &checkpoint {
        Some(ck) => {
            if ck.net.obs_dim() != crate::env::OBS_DIM
                || ck.net.n_actions() != crate::env::ActionPair::COUNT
            {
                return Err(Error::Checkpoint {
                    field: "actor.sizes".into(),
                    detail: "network does not match the environment's observation/action sizes"
                        .into(),
                });
            }
            (Box::new(GreedyPolicy { net: &ck.net }), cfg.env)
        }
        None => (
            Box::new(BaselinePolicy::new(cfg.baseline, &world)),
            EnvConfig {
                safety_filter: cfg.baseline.safety_filter,
                ..cfg.env
            },
        ),
    };

    let (report, logs) = evaluate_with_logs(
        policy.as_ref(),
        &world,
        &env_cfg,
        args.rollouts as usize,
        args.horizon as usize,
        cfg.run.seed,
        true,
    )?;

    create_dir(&args.out_dir)?;
    let traj_dir = args.out_dir.join("trajectories");
    create_dir(&traj_dir)?;
    let config_path = args.out_dir.join("config.cfg");
    let mut used = cfg;
    used.env = env_cfg;
    used.env.horizon = args.horizon as usize;
    fs::write(&config_path, used.to_flat_string()).map_err(|e| Error::file(&config_path, e))?;
    let report_path = args.out_dir.join("eval_report.csv");
    report
        .write_report(create_file(&report_path)?)
        .map_err(|e| Error::file(&report_path, e))?;
    let episodes_path = args.out_dir.join("episodes.csv");
    report
        .write_episodes(create_file(&episodes_path)?)
        .map_err(|e| Error::file(&episodes_path, e))?;
    for (i, log) in logs.iter().enumerate() {
        let path = traj_dir.join(format!("episode_{i:04}.csv"));
        write_trajectory(create_file(&path)?, log)?;
    }
    println!(
        "rollouts {}  avg_return {:.3}  success_rate {:.3}  collision_rate {:.3}",
        report.n_rollouts, report.avg_return, report.success_rate, report.collision_rate
    );
    Ok(report)
}

pub fn cmd_replay(args: &ReplayArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let file = File::open(&args.trajectory).map_err(|e| Error::file(&args.trajectory, e))?;
    let records = read_trajectory(BufReader::new(file))?;
    let horizon = records.len().max(cfg.env.horizon);
    let mut env = LaneChangeEnv::new(cfg.world(), EnvConfig { horizon, ..cfg.env })?;
    replay(&mut env, &records)?;
    println!("replay matched {} steps", records.len());
    Ok(())
}
