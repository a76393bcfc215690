use std::path::Path;
use std::process::{Command, Output};

use hstl::harness::Manifest;

const SMALL: &str = r#"
seed = 9
episodes = 5
option_choices_per_episode = 12
step_cap = 80
trailing_window = 3

[formula]
text = "G[0,inf) (F[0,20) a & F[0,20) b)"

[formula.aliases]
a = "(x > 0) & (x < 2) & (y > 3)"
b = "(x > 4) & (y < 1)"

[environment]
width = 6
height = 5
intent_prob = 0.7
slip_prob = 0.1

[options]
mode = "all-permutations"
"#;

fn hstl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hstl")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = hstl(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn setup(dir: &Path) -> String {
    let config = dir.join("run.toml");
    std::fs::write(&config, SMALL).unwrap();
    config.to_str().unwrap().to_string()
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn train_rollout_eval_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup(dir.path());
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();
    ok(&["train", "--config", &config, "--out", out_s]);
    for f in ["rewards.csv", "option_counts.csv", "manifest.toml", "policy/q_flat_A.csv", "policy/q_flat_B.csv", "policy/q_options.csv", "policy/greedy_policy.csv", "policy/terminations.csv", "policy/options.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let rewards = read(out.join("rewards.csv"));
    assert!(rewards.starts_with("episode,cumulative_reward,eps_options,eps_flat_A,eps_flat_B,steps\n"));
    assert_eq!(rewards.lines().count(), 6);
    let counts = read(out.join("option_counts.csv"));
    assert!(counts.starts_with("episode,A,B,AB,BA,capped\n"));
    for line in counts.lines().skip(1) {
        let cells: Vec<usize> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells[1..5].iter().sum::<usize>(), 12);
    }
    let manifest = Manifest::from_toml(&read(out.join("manifest.toml"))).unwrap();
    assert_eq!(manifest.seed, 9);
    assert_eq!(manifest.options, ["A", "B", "AB", "BA"]);
    assert_eq!(manifest.config_sha256, manifest.config.hash());

    ok(&["rollout", "--config", &config, "--out", out_s, "--start", "0,0", "--steps", "1"]);
    let trace = read(out.join("trace.csv"));
    assert_eq!(trace.lines().count(), 2);
    assert!(trace.starts_with("t,x,y,option_id,action\n0,0,0,"));

    ok(&["rollout", "--config", &config, "--out", out_s, "--steps", "60"]);
    let first = read(out.join("trace.csv"));
    ok(&["rollout", "--config", &config, "--out", out_s, "--steps", "60"]);
    assert_eq!(read(out.join("trace.csv")), first);

    let report = ok(&["eval", "--config", &config, "--out", out_s, "--trace", out.join("trace.csv").to_str().unwrap(), "--window", "20"]);
    assert!(report.contains("of 41 windows satisfied"), "{report}");
    assert_eq!(read(out.join("windows.csv")).lines().count(), 42);
}

#[test]
fn identical_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["train", "--config", &config, "--out", a.to_str().unwrap()]);
    ok(&["train", "--config", &config, "--out", b.to_str().unwrap()]);
    for f in ["rewards.csv", "option_counts.csv", "manifest.toml", "policy/q_options.csv", "policy/q_flat_A.csv", "policy/greedy_policy.csv"] {
        assert_eq!(read(a.join(f)), read(b.join(f)), "{f}");
    }
    let c = dir.path().join("c");
    ok(&["train", "--config", &config, "--out", c.to_str().unwrap(), "--seed", "10"]);
    assert_ne!(read(a.join("rewards.csv")), read(c.join("rewards.csv")));
}

#[test]
fn compare_reports_both_sets() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup(dir.path());
    let out = dir.path().join("cmp");
    let summary = ok(&["compare", "--config", &config, "--out", out.to_str().unwrap(), "--episodes", "4"]);
    assert!(summary.contains("subsets-in-order") && summary.contains("all-permutations"), "{summary}");
    let curves = read(out.join("compare.csv"));
    assert!(curves.starts_with("episode,reward_subsets-in-order,reward_all-permutations\n"));
    assert_eq!(curves.lines().count(), 5);
}

#[test]
fn robustness_of_a_hand_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    std::fs::write(&trace, "x,y\n9,7\n10,7\n11,7\n11,8\n").unwrap();
    let t = trace.to_str().unwrap();
    let psi = ["--alias", "p=(x > 10) & (x < 14) & (y > 5) & (y < 11)"];
    let run = |formula: &str, time: &str| {
        let mut args = vec!["robustness", "--formula", formula, "--trace", t, "--time", time];
        args.extend(psi);
        ok(&args).trim().to_string()
    };
    assert_eq!(run("G[0,4) p", "0"), "-1");
    assert_eq!(run("F[0,4) p", "0"), "1");
    assert_eq!(run("p", "1"), "0");
    // window clipped to the samples left
    assert_eq!(run("F[0,40) p", "0"), "1");
    assert_eq!(run("1/3 * x > 3", "3"), "2/3");
}

#[test]
fn failures_exit_nonzero_with_a_category() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, SMALL.replace("seed = 9", "seed = 9\nepsiodes = 2")).unwrap();
    let out = hstl(&["train", "--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[config]"));

    let zero = dir.path().join("zero.toml");
    std::fs::write(&zero, SMALL.replace("option_choices_per_episode = 12", "option_choices_per_episode = 0")).unwrap();
    let out = hstl(&["train", "--config", zero.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[config]"));

    let formula = dir.path().join("formula.toml");
    std::fs::write(&formula, SMALL.replace("F[0,20) b", "F[0,20) (z > 1)")).unwrap();
    let out = hstl(&["train", "--config", formula.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[formula]"));

    let config = setup(dir.path());
    let out = hstl(&["rollout", "--config", &config, "--policy", dir.path().join("missing").to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[io]"));

    let out_dir = dir.path().join("o");
    ok(&["train", "--config", &config, "--out", out_dir.to_str().unwrap()]);
    let out = hstl(&["rollout", "--config", &config, "--out", out_dir.to_str().unwrap(), "--start", "9,9"]);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[environment]"));
}
