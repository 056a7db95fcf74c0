use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lcsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lcsim"))
        .args(args)
        .output()
        .expect("lcsim runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "lcsim failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn one_iteration_writes_one_stats_row_and_a_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    ok(&lcsim(&[
        "train",
        "--iters",
        "1",
        "--seed",
        "3",
        "--out-dir",
        s(&out_dir),
    ]));
    let stats = fs::read_to_string(out_dir.join("stats.csv")).unwrap();
    let lines: Vec<_> = stats.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("iteration,"));
    assert!(lines[1].starts_with("1,"));
    assert!(out_dir.join("final.ckpt").exists());
    assert!(out_dir.join("config.cfg").exists());
}

#[test]
fn training_is_reproducible_from_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let read = |name: &str, seed: &str| {
        let out_dir = dir.path().join(name);
        ok(&lcsim(&[
            "train",
            "--iters",
            "2",
            "--seed",
            seed,
            "--out-dir",
            s(&out_dir),
        ]));
        (
            fs::read(out_dir.join("stats.csv")).unwrap(),
            fs::read(out_dir.join("final.ckpt")).unwrap(),
        )
    };
    let a = read("a", "11");
    let b = read("b", "11");
    let c = read("c", "12");
    assert_eq!(a, b);
    assert_ne!(a.0, c.0);
}

#[test]
fn missing_config_fails_without_writing_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let missing = dir.path().join("nope.cfg");
    let out = lcsim(&["train", "--config", s(&missing), "--out-dir", s(&out_dir)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.cfg"));
    assert!(!out_dir.exists());
}

#[test]
fn bad_config_key_is_reported_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "[ppo]\nlearning_rate = 1e-4\nnot_a_key = 3\n").unwrap();
    let out = lcsim(&[
        "train",
        "--config",
        s(&cfg),
        "--out-dir",
        s(&dir.path().join("run")),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(err.contains("not_a_key") && err.contains('3'), "{err}");
}

#[test]
fn zero_rollouts_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = lcsim(&[
        "eval",
        "--baseline",
        "gap",
        "--rollouts",
        "0",
        "--out-dir",
        s(dir.path()),
    ]);
    assert!(!out.status.success());
}

#[test]
fn eval_needs_exactly_one_policy() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!lcsim(&["eval", "--out-dir", s(dir.path())])
        .status
        .success());
    let ck = dir.path().join("x.ckpt");
    fs::write(&ck, b"x").unwrap();
    let out = lcsim(&[
        "eval",
        "--baseline",
        "gap",
        "--checkpoint",
        s(&ck),
        "--out-dir",
        s(dir.path()),
    ]);
    assert!(!out.status.success());
}

#[test]
fn corrupt_checkpoint_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    ok(&lcsim(&["train", "--iters", "1", "--out-dir", s(&run)]));
    let ck = run.join("final.ckpt");
    let mut bytes = fs::read(&ck).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 1;
    fs::write(&ck, bytes).unwrap();
    let out = lcsim(&[
        "eval",
        "--checkpoint",
        s(&ck),
        "--rollouts",
        "1",
        "--out-dir",
        s(&dir.path().join("e")),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("checksum"));
}

#[test]
fn baseline_eval_logs_replay_exactly_and_tampering_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    for (seed, baseline) in [("1", "gap"), ("2", "ttc"), ("3", "gap")] {
        let out_dir = dir.path().join(seed);
        ok(&lcsim(&[
            "eval",
            "--baseline",
            baseline,
            "--rollouts",
            "3",
            "--horizon",
            "300",
            "--seed",
            seed,
            "--out-dir",
            s(&out_dir),
        ]));
        let report = fs::read_to_string(out_dir.join("eval_report.csv")).unwrap();
        assert!(report
            .lines()
            .nth(1)
            .unwrap()
            .starts_with(&format!("3,300,{seed},")));
        assert_eq!(
            fs::read_to_string(out_dir.join("episodes.csv"))
                .unwrap()
                .lines()
                .count(),
            4
        );

        let cfg = out_dir.join("config.cfg");
        for i in 0..3 {
            let traj = out_dir
                .join("trajectories")
                .join(format!("episode_{i:04}.csv"));
            ok(&lcsim(&["replay", s(&traj), "--config", s(&cfg)]));
        }

        // Nudge the logged y of the last step in the last digit it prints.
        let traj = out_dir.join("trajectories/episode_0000.csv");
        let text = fs::read_to_string(&traj).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let last = lines.len() - 1;
        let mut cols: Vec<String> = lines[last].split(',').map(String::from).collect();
        let y: f64 = cols[2].parse().unwrap();
        cols[2] = format!("{}", f64::from_bits(y.to_bits() + 1));
        lines[last] = cols.join(",");
        let tampered = out_dir.join("tampered.csv");
        fs::write(&tampered, lines.join("\n") + "\n").unwrap();
        let out = lcsim(&["replay", s(&tampered), "--config", s(&cfg)]);
        assert!(!out.status.success());
        assert!(String::from_utf8_lossy(&out.stderr).contains("diverge"));
    }
}

#[test]
fn shipped_base_config_is_the_default() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/base.cfg");
    let cfg = lanechange::config::RunConfig::load(&path).unwrap();
    assert_eq!(cfg, lanechange::config::RunConfig::default());
}
