use std::path::Path;

use super::{Experiment, HarnessError, PolicyBundle};
use crate::env::{EnvError, Mdp};
use crate::learn::{epsilon_greedy, GreedyFlat};
use crate::options::execute_option;
use crate::rng::{RngStreams, Stream};
use crate::stl::{truncate_horizon, Bound, Formula, Monitor, Robustness, State};

/// One primitive step of a rollout: the state before acting, the option in
/// control and the action it issued.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub state: State,
    pub option: String,
    pub action: String,
}

/// Follows the bundle's option policy for `total_steps` primitive steps, with
/// greedy constituent policies. With `epsilon = 0` the option choice is the
/// exported greedy one; otherwise a random option is taken with probability
/// `epsilon`.
pub fn rollout(
    exp: &Experiment,
    bundle: &PolicyBundle,
    start: Option<State>,
    total_steps: usize,
    epsilon: f64,
    seed: u64,
) -> Result<Vec<TraceRow>, HarnessError> {
    if total_steps == 0 {
        return Err(HarnessError::Config("rollout needs at least one step".into()));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(HarnessError::Config(format!("rollout epsilon must lie in [0, 1], got {epsilon}")));
    }
    if bundle.option_ids != exp.option_ids() {
        return Err(HarnessError::Policy(format!("bundle options {:?} do not match the config's {:?}", bundle.option_ids, exp.option_ids())));
    }
    let expected: Vec<_> = exp.options.primitives().iter().map(|p| &p.termination).collect();
    if bundle.terminations.iter().collect::<Vec<_>>() != expected {
        return Err(HarnessError::Policy("bundle termination sets do not match the config".into()));
    }

    let streams = RngStreams::new(seed);
    let mut transitions = streams.stream(Stream::Transitions);
    let mut picks = streams.stream(Stream::Rollout);
    let mut state = match start {
        Some(s) => s,
        None => exp.env.reset(&mut streams.stream(Stream::Resets)),
    };
    let flat = bundle.flat_policies();
    let mut controller = GreedyFlat { policies: &flat };
    let mut rows = Vec::with_capacity(total_steps);
    while rows.len() < total_steps {
        let s = exp.env.state_index(&state).ok_or_else(|| EnvError::OutOfBounds(state.clone()))?;
        let candidates = exp.options.available(s);
        let option = if epsilon > 0.0 {
            epsilon_greedy(&bundle.option_q, s, &candidates, epsilon, &mut picks)?
        } else {
            greedy_among(bundle, s, &candidates)?
        };
        let cap = exp.config.step_cap.min(total_steps - rows.len());
        let exec = execute_option(&exp.options, option, &state, &exp.env, &mut controller, &mut transitions, cap)?;
        let id = &bundle.option_ids[option];
        for (i, &a) in exec.actions.iter().enumerate() {
            rows.push(TraceRow {
                t: rows.len(),
                state: exec.trajectory.states()[i].clone(),
                option: id.clone(),
                action: bundle.action_names[a].clone(),
            });
        }
        state = exec.trajectory.into_states().pop().expect("non-empty trajectory");
    }
    Ok(rows)
}

fn greedy_among(bundle: &PolicyBundle, s: usize, candidates: &[usize]) -> Result<usize, HarnessError> {
    let row = bundle.option_q.row(s);
    candidates
        .iter()
        .copied()
        .reduce(|best, c| if row[c] > row[best] { c } else { best })
        .ok_or_else(|| HarnessError::Policy(format!("no option can start in {}", bundle.states[s])))
}

/// The formula a persistent specification asks to hold at every step: the
/// operand of an outermost unbounded `G`, or the formula itself otherwise.
pub fn strip_persistence(f: &Formula) -> &Formula {
    match f {
        Formula::Always(w, inner) if w.hi() == Bound::Unbounded => inner,
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecReport {
    pub window: usize,
    pub skip: usize,
    /// Robustness of the window starting at `skip + i`.
    pub values: Vec<Robustness>,
    pub positive: usize,
    pub fraction: f64,
}

/// Evaluates the persistent part of `spec` over every `window`-sample slice
/// of `states` starting at or after `skip`, and reports how many are
/// satisfied with positive robustness.
pub fn evaluate_spec(states: &[State], spec: &Formula, window: usize, skip: usize) -> Result<SpecReport, HarnessError> {
    if window == 0 {
        return Err(HarnessError::Trace("window must be at least one sample".into()));
    }
    if states.len() < window + skip {
        return Err(HarnessError::Trace(format!("{} samples cannot hold a {window}-sample window after skipping {skip}", states.len())));
    }
    // clipped to the window, the horizon is below `window`, so evaluating at
    // t never looks past t + window - 1
    let inner = truncate_horizon(strip_persistence(spec), window)?;
    let monitor = Monitor::new(&inner);
    let table = monitor.leaf_table(states)?;
    let count = states.len() - window + 1 - skip;
    let values = monitor.signal(&table, skip, count)?;
    let positive = values.iter().filter(|v| **v > Robustness::from_integer(0)).count();
    Ok(SpecReport { window, skip, fraction: positive as f64 / values.len() as f64, values, positive })
}

/// Reads a trace CSV. Every column except `t`, `option_id` and `action` is
/// taken as an integer state variable. Returns the variable names and states.
pub fn read_trace_csv(path: &Path) -> Result<(Vec<String>, Vec<State>), HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| HarnessError::io(path, e))?;
    let header: Vec<String> = r.headers().map_err(|e| HarnessError::io(path, e))?.iter().map(String::from).collect();
    let columns: Vec<usize> = (0..header.len()).filter(|&i| !["t", "option_id", "action"].contains(&header[i].as_str())).collect();
    if columns.is_empty() {
        return Err(HarnessError::Trace("trace has no state columns".into()));
    }
    let mut states = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| HarnessError::io(path, e))?;
        let values = columns
            .iter()
            .map(|&c| rec[c].trim().parse::<i64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| HarnessError::Trace(format!("row {}: {e}", line + 1)))?;
        states.push(State(values));
    }
    let names = columns.iter().map(|&c| header[c].clone()).collect();
    Ok((names, states))
}
