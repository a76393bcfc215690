use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hstl::env::Mdp;
use hstl::harness::{
    compare_option_sets, evaluate_spec, option_counts_csv, read_trace_csv, rewards_csv, rollout, trace_csv, trailing_mean,
    Experiment, HarnessError, Manifest, ModeName, OptionsConfig, PolicyBundle, RunConfig,
};
use hstl::stl::{expand_aliases, format_number, horizon, lumped_reward, parse_stl, robustness, Horizon, State, Trajectory};

#[derive(Parser)]
#[command(name = "hstl", version, about = "Hierarchical Q-learning with signal temporal logic rewards")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Train and export policies, reward curves and a run manifest.
    Train {
        #[command(flatten)]
        common: Common,
        /// Overrides the episode count in the config.
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Follow exported policies and write the visited states.
    Rollout {
        #[command(flatten)]
        common: Common,
        /// Directory written by `train` (defaults to <out>/policy).
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Start cell as `x,y`; random when omitted.
        #[arg(long)]
        start: Option<String>,
        #[arg(long, default_value_t = 500)]
        steps: usize,
        /// Probability of a random option choice.
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
    },
    /// Fraction of sliding windows of a trace that satisfy the persistent
    /// part of the configured formula.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value_t = 40)]
        window: usize,
        /// Windows starting before this step are ignored.
        #[arg(long, default_value_t = 0)]
        skip: usize,
    },
    /// Train with in-order subsets and with all orderings, then compare rewards.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Robustness of a formula over a trace file.
    Robustness {
        /// Formula text.
        #[arg(long)]
        formula: String,
        /// Alias definition `name=formula`; repeatable.
        #[arg(long = "alias")]
        aliases: Vec<String>,
        #[arg(long)]
        trace: PathBuf,
        /// Evaluation time; unbounded or overlong formulas are clipped to the
        /// remaining trace.
        #[arg(long, default_value_t = 0)]
        time: usize,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::FAILURE
        }
    }
}

fn load(common: &Common) -> Result<RunConfig, HarnessError> {
    let mut config = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn write(path: &Path, contents: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Train { common, episodes } => {
            let mut config = load(&common)?;
            if let Some(n) = episodes {
                config.episodes = n;
            }
            let exp = Experiment::new(config)?;
            let out = exp.train()?;
            let dir = &common.out;
            write(&dir.join("rewards.csv"), &rewards_csv(&out.logs, &exp.primitive_ids()))?;
            write(&dir.join("option_counts.csv"), &option_counts_csv(&out.logs, &exp.option_ids()))?;
            write(&dir.join("manifest.toml"), &Manifest::new(&exp).to_toml())?;
            PolicyBundle::from_training(&exp, &out.learning).write(&dir.join("policy"))?;
            let rewards: Vec<f64> = out.logs.iter().map(|l| l.cumulative_reward).collect();
            println!(
                "trained {} episodes, {} primitive steps; mean reward over last {} episodes: {:.4}",
                out.logs.len(),
                out.learning.primitive_steps,
                exp.config.trailing_window,
                trailing_mean(&rewards, exp.config.trailing_window)
            );
        }
        Command::Rollout { common, policy, start, steps, epsilon } => {
            let config = load(&common)?;
            let seed = config.seed;
            let exp = Experiment::new(config)?;
            let policy_dir = policy.unwrap_or_else(|| common.out.join("policy"));
            let bundle = PolicyBundle::read(&policy_dir, &exp.env)?;
            let start = start.map(|s| parse_cell(&s)).transpose()?;
            let rows = rollout(&exp, &bundle, start, steps, epsilon, seed)?;
            let path = common.out.join("trace.csv");
            write(&path, &trace_csv(&rows, exp.env.state_variables()))?;
            println!("wrote {} steps to {}", rows.len(), path.display());
        }
        Command::Eval { common, trace, window, skip } => {
            let exp = Experiment::new(load(&common)?)?;
            let (_, states) = read_trace_csv(&trace)?;
            let report = evaluate_spec(&states, &exp.spec, window, skip)?;
            let mut w = String::from("start,robustness\n");
            for (i, v) in report.values.iter().enumerate() {
                w.push_str(&format!("{},{}\n", skip + i, format_number(*v)));
            }
            write(&common.out.join("windows.csv"), &w)?;
            println!("{} of {} windows satisfied ({:.4})", report.positive, report.values.len(), report.fraction);
        }
        Command::Compare { common, episodes } => {
            let mut config = load(&common)?;
            if let Some(n) = episodes {
                config.episodes = n;
            }
            let sets = [ModeName::SubsetsInOrder, ModeName::AllPermutations].map(|mode| OptionsConfig {
                mode,
                max_sequence_length: config.options.max_sequence_length,
                explicit: None,
            });
            let (report, _) = compare_option_sets(&config, sets)?;
            write(&common.out.join("compare.csv"), &report.curves_csv())?;
            println!("{}", report.summary());
        }
        Command::Robustness { formula, aliases, trace, time } => {
            let (variables, states) = read_trace_csv(&trace)?;
            let mut defs = BTreeMap::new();
            for a in &aliases {
                let (name, def) = a.split_once('=').ok_or_else(|| HarnessError::Config(format!("alias `{a}` is not name=formula")))?;
                defs.insert(name.trim().to_string(), def.to_string());
            }
            let f = parse_stl(&expand_aliases(&formula, &defs)?, &variables)?;
            let traj = Trajectory::new(states)?;
            if time >= traj.len() {
                return Err(HarnessError::Trace(format!("time {time} is past the end of a {}-sample trace", traj.len())));
            }
            let value = match horizon(&f) {
                Horizon::Finite(h) if time + h < traj.len() => robustness(&traj, &f, time)?,
                _ => lumped_reward(&traj.suffix(time)?, &f)?,
            };
            println!("{}", format_number(value));
        }
    }
    Ok(())
}

fn parse_cell(text: &str) -> Result<State, HarnessError> {
    let values = text
        .split(',')
        .map(|v| v.trim().parse::<i64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| HarnessError::Config(format!("bad start `{text}`: {e}")))?;
    Ok(State(values))
}
