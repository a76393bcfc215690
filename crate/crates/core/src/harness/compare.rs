use super::{Experiment, HarnessError, OptionsConfig, RunConfig, TrainOutput};

/// Paired reward curves of two option sets trained under the same seed and
/// budget.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub labels: [String; 2],
    pub rewards: [Vec<f64>; 2],
    pub trailing_window: usize,
    pub means: [f64; 2],
    /// `(means[1] - means[0]) / |means[0]|`; zero when both means are zero.
    pub relative: f64,
}

/// Mean of the last `window` values, or of all of them if there are fewer.
pub fn trailing_mean(values: &[f64], window: usize) -> f64 {
    let tail = &values[values.len().saturating_sub(window)..];
    if tail.is_empty() {
        return 0.0;
    }
    tail.iter().sum::<f64>() / tail.len() as f64
}

fn relative_change(base: f64, other: f64) -> f64 {
    if base == other {
        0.0
    } else {
        (other - base) / base.abs()
    }
}

/// Trains `config` once per option-set configuration, in parallel, and
/// compares trailing mean rewards.
pub fn compare_option_sets(config: &RunConfig, sets: [OptionsConfig; 2]) -> Result<(CompareReport, [TrainOutput; 2]), HarnessError> {
    let experiments = sets
        .iter()
        .map(|options| Experiment::new(RunConfig { options: options.clone(), ..config.clone() }))
        .collect::<Result<Vec<_>, _>>()?;
    let (a, b) = std::thread::scope(|scope| {
        let first = scope.spawn(|| experiments[0].train());
        let second = experiments[1].train();
        (first.join().expect("training thread panicked"), second)
    });
    let outputs = [a?, b?];
    let rewards = outputs.clone().map(|o| o.logs.iter().map(|l| l.cumulative_reward).collect::<Vec<_>>());
    let w = config.trailing_window;
    let means = [trailing_mean(&rewards[0], w), trailing_mean(&rewards[1], w)];
    let labels = sets.map(|s| match s.mode {
        super::ModeName::SubsetsInOrder => "subsets-in-order".to_string(),
        super::ModeName::AllPermutations => "all-permutations".to_string(),
        super::ModeName::Explicit => format!("explicit:{}", s.explicit.unwrap_or_default().join("+")),
    });
    let report = CompareReport { labels, rewards, trailing_window: w, means, relative: relative_change(means[0], means[1]) };
    Ok((report, outputs))
}

impl CompareReport {
    /// Columns: episode, one reward column per option set.
    pub fn curves_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["episode".to_string(), format!("reward_{}", self.labels[0]), format!("reward_{}", self.labels[1])])
            .expect("in-memory write");
        for (i, (a, b)) in self.rewards[0].iter().zip(&self.rewards[1]).enumerate() {
            w.write_record([i.to_string(), a.to_string(), b.to_string()]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    pub fn summary(&self) -> String {
        format!(
            "trailing mean over last {} episodes: {} = {:.4}, {} = {:.4}, relative change {:+.2}%",
            self.trailing_window,
            self.labels[0],
            self.means[0],
            self.labels[1],
            self.means[1],
            100.0 * self.relative
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::ModeName;

    #[test]
    fn trailing_means() {
        assert_eq!(trailing_mean(&[1.0, 2.0, 3.0, 4.0], 2), 3.5);
        assert_eq!(trailing_mean(&[1.0, 2.0], 10), 1.5);
        assert_eq!(trailing_mean(&[], 3), 0.0);
        assert_eq!(relative_change(2.0, 3.0), 0.5);
        assert_eq!(relative_change(-2.0, -1.0), 0.5);
        assert_eq!(relative_change(0.0, 0.0), 0.0);
    }

    #[test]
    fn a_set_compared_with_itself_differs_by_zero() {
        let config = RunConfig::from_toml(
            r#"
seed = 5
episodes = 6
option_choices_per_episode = 5
step_cap = 30
trailing_window = 3
[formula]
text = "G[0,inf) (F[0,10) (x > 2))"
[environment]
width = 4
height = 2
intent_prob = 0.7
slip_prob = 0.1
[options]
mode = "subsets-in-order"
"#,
        )
        .unwrap();
        let single = OptionsConfig { mode: ModeName::SubsetsInOrder, max_sequence_length: None, explicit: None };
        let (report, outputs) = compare_option_sets(&config, [single.clone(), single]).unwrap();
        assert_eq!(report.rewards[0], report.rewards[1]);
        assert_eq!(report.relative, 0.0);
        assert_eq!(outputs[0].learning, outputs[1].learning);
        // recompute from the emitted curves
        let curves = report.curves_csv();
        let mut r = csv::Reader::from_reader(curves.as_bytes());
        let tail: Vec<f64> = r.records().map(|rec| rec.unwrap()[2].parse().unwrap()).collect();
        assert_eq!(trailing_mean(&tail, 3), report.means[1]);
    }
}
