use serde::{Deserialize, Serialize};

use super::{EpisodeLog, Experiment, HarnessError, RunConfig, TraceRow};

fn csv_string(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Columns: episode, cumulative_reward, eps_options, eps_flat_<id>..., steps.
pub fn rewards_csv(logs: &[EpisodeLog], primitive_ids: &[String]) -> String {
    let mut header = vec!["episode".to_string(), "cumulative_reward".into(), "eps_options".into()];
    header.extend(primitive_ids.iter().map(|id| format!("eps_flat_{id}")));
    header.push("steps".into());
    let rows = logs.iter().map(|l| {
        let mut row = vec![l.episode.to_string(), l.cumulative_reward.to_string(), l.eps_options.to_string()];
        row.extend(l.eps_flat.iter().map(f64::to_string));
        row.push(l.steps.to_string());
        row
    });
    csv_string(&header, rows)
}

/// Columns: episode, one count per option id, capped.
pub fn option_counts_csv(logs: &[EpisodeLog], option_ids: &[String]) -> String {
    let mut header = vec!["episode".to_string()];
    header.extend(option_ids.iter().cloned());
    header.push("capped".into());
    let rows = logs.iter().map(|l| {
        let mut row = vec![l.episode.to_string()];
        row.extend(l.option_counts.iter().map(usize::to_string));
        row.push(l.capped.to_string());
        row
    });
    csv_string(&header, rows)
}

/// Columns: t, one per state variable, option_id, action.
pub fn trace_csv(rows: &[TraceRow], variables: &[String]) -> String {
    let mut header = vec!["t".to_string()];
    header.extend(variables.iter().cloned());
    header.extend(["option_id".to_string(), "action".to_string()]);
    let body = rows.iter().map(|r| {
        let mut row = vec![r.t.to_string()];
        row.extend(r.state.values().iter().map(i64::to_string));
        row.extend([r.option.clone(), r.action.clone()]);
        row
    });
    csv_string(&header, body)
}

/// Run description written next to the outputs. The config hash and seed
/// together determine every other output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub seed: u64,
    pub config_sha256: String,
    pub primitive_options: Vec<String>,
    pub options: Vec<String>,
    pub config: RunConfig,
}

impl Manifest {
    pub fn new(exp: &Experiment) -> Self {
        Manifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: exp.config.seed,
            config_sha256: exp.config.hash(),
            primitive_options: exp.primitive_ids(),
            options: exp.option_ids(),
            config: exp.config.clone(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.message().to_string()))
    }
}
