use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::{Experiment, HarnessError};
use crate::env::Mdp;
use crate::learn::{greedy_policy, LearningState, QTable};
use crate::stl::State;

const OPTIONS_FILE: &str = "options.csv";
const TERMINATIONS_FILE: &str = "terminations.csv";
const OPTION_Q_FILE: &str = "q_options.csv";
const GREEDY_FILE: &str = "greedy_policy.csv";

/// Learned tables plus what is needed to interpret them. Exported as a
/// directory of CSV files: one per Q-table, the option ids, the termination
/// sets used, and a greedy-policy summary.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyBundle {
    pub state_variables: Vec<String>,
    pub states: Vec<State>,
    pub action_names: Vec<String>,
    pub primitive_ids: Vec<String>,
    pub option_ids: Vec<String>,
    pub flat_q: Vec<QTable>,
    pub option_q: QTable,
    pub terminations: Vec<BTreeSet<usize>>,
}

fn flat_file(id: &str) -> String {
    format!("q_flat_{id}.csv")
}

fn render(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn read_csv(dir: &Path, name: &str) -> Result<(Vec<String>, Vec<Vec<String>>), HarnessError> {
    let path = dir.join(name);
    let mut r = csv::Reader::from_path(&path).map_err(|e| HarnessError::io(&path, e))?;
    let header = r.headers().map_err(|e| HarnessError::io(&path, e))?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(String::from).collect()))
        .collect::<Result<Vec<Vec<String>>, _>>()
        .map_err(|e| HarnessError::io(&path, e))?;
    Ok((header, rows))
}

impl PolicyBundle {
    pub fn from_training(exp: &Experiment, learning: &LearningState) -> Self {
        PolicyBundle {
            state_variables: exp.env.state_variables().to_vec(),
            states: exp.env.states().expect("grid is finite"),
            action_names: exp.env.action_names().iter().map(|s| s.to_string()).collect(),
            primitive_ids: exp.primitive_ids(),
            option_ids: exp.option_ids(),
            flat_q: learning.flat_q.clone(),
            option_q: learning.option_q.clone(),
            terminations: exp.options.primitives().iter().map(|p| p.termination.clone()).collect(),
        }
    }

    pub fn flat_policies(&self) -> Vec<Vec<usize>> {
        self.flat_q.iter().map(greedy_policy).collect()
    }

    pub fn option_policy(&self) -> Vec<usize> {
        greedy_policy(&self.option_q)
    }

    fn state_cells(&self, s: usize) -> Vec<String> {
        self.states[s].values().iter().map(i64::to_string).collect()
    }

    fn table_csv(&self, q: &QTable, column: &str, names: &[String]) -> String {
        let mut header: Vec<&str> = self.state_variables.iter().map(String::as_str).collect();
        header.extend([column, "value"]);
        let rows = (0..q.states()).flat_map(|s| {
            (0..q.columns()).map(move |c| {
                let mut row = self.state_cells(s);
                row.extend([names[c].clone(), q.get(s, c).to_string()]);
                row
            })
        });
        render(&header, rows)
    }

    /// File name and contents of every exported file.
    pub fn files(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        out.push((
            OPTIONS_FILE.to_string(),
            render(&["index", "option"], self.option_ids.iter().enumerate().map(|(i, id)| vec![i.to_string(), id.clone()])),
        ));
        let mut header = vec!["option"];
        header.extend(self.state_variables.iter().map(String::as_str));
        let rows = self.primitive_ids.iter().zip(&self.terminations).flat_map(|(id, set)| {
            set.iter().map(move |&s| {
                let mut row = vec![id.clone()];
                row.extend(self.state_cells(s));
                row
            })
        });
        out.push((TERMINATIONS_FILE.to_string(), render(&header, rows)));
        for (id, q) in self.primitive_ids.iter().zip(&self.flat_q) {
            out.push((flat_file(id), self.table_csv(q, "action", &self.action_names)));
        }
        out.push((OPTION_Q_FILE.to_string(), self.table_csv(&self.option_q, "option", &self.option_ids)));
        let mut header: Vec<&str> = self.state_variables.iter().map(String::as_str).collect();
        header.push("option");
        header.extend(self.primitive_ids.iter().map(String::as_str));
        let flat = self.flat_policies();
        let options = self.option_policy();
        let rows = (0..self.states.len()).map(|s| {
            let mut row = self.state_cells(s);
            row.push(self.option_ids[options[s]].clone());
            row.extend(flat.iter().map(|p| self.action_names[p[s]].clone()));
            row
        });
        out.push((GREEDY_FILE.to_string(), render(&header, rows)));
        out
    }

    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        for (name, contents) in self.files() {
            let path = dir.join(name);
            std::fs::write(&path, contents).map_err(|e| HarnessError::io(&path, e))?;
        }
        Ok(())
    }

    /// Loads a bundle written by [`PolicyBundle::write`] for the given environment.
    pub fn read<E: Mdp>(dir: &Path, env: &E) -> Result<Self, HarnessError> {
        let bad = |m: String| HarnessError::Policy(m);
        let states = env.states().ok_or_else(|| bad("environment state space is not finite".into()))?;
        let state_variables = env.state_variables().to_vec();
        let action_names: Vec<String> = env.action_names().iter().map(|s| s.to_string()).collect();
        let dim = state_variables.len();

        let parse_state = |cells: &[String]| -> Result<usize, HarnessError> {
            let values = cells.iter().map(|c| c.parse::<i64>()).collect::<Result<Vec<_>, _>>().map_err(|e| bad(format!("bad state value: {e}")))?;
            let s = State(values);
            env.state_index(&s).ok_or_else(|| bad(format!("state {s} is outside the environment")))
        };
        let expect_header = |name: &str, header: &[String], expected: Vec<String>| -> Result<(), HarnessError> {
            if header != expected.as_slice() {
                return Err(bad(format!("{name}: expected header {expected:?}, found {header:?}")));
            }
            Ok(())
        };

        let (header, rows) = read_csv(dir, OPTIONS_FILE)?;
        expect_header(OPTIONS_FILE, &header, vec!["index".into(), "option".into()])?;
        let mut option_ids = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row[0] != i.to_string() {
                return Err(bad(format!("{OPTIONS_FILE}: row {i} has index {}", row[0])));
            }
            option_ids.push(row[1].clone());
        }

        let (header, rows) = read_csv(dir, TERMINATIONS_FILE)?;
        let mut expected = vec!["option".to_string()];
        expected.extend(state_variables.iter().cloned());
        expect_header(TERMINATIONS_FILE, &header, expected)?;
        let mut terminations: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        let mut primitive_ids: Vec<String> = Vec::new();
        for row in &rows {
            if !primitive_ids.contains(&row[0]) {
                primitive_ids.push(row[0].clone());
            }
            terminations.entry(row[0].clone()).or_default().insert(parse_state(&row[1..])?);
        }

        let read_table = |name: &str, column: &str, names: &[String]| -> Result<QTable, HarnessError> {
            let (header, rows) = read_csv(dir, name)?;
            let mut expected = state_variables.clone();
            expected.extend([column.to_string(), "value".to_string()]);
            expect_header(name, &header, expected)?;
            let mut values = vec![None; states.len() * names.len()];
            for row in &rows {
                let s = parse_state(&row[..dim])?;
                let c = names.iter().position(|n| *n == row[dim]).ok_or_else(|| bad(format!("{name}: unknown {column} `{}`", row[dim])))?;
                let v: f64 = row[dim + 1].parse().map_err(|e| bad(format!("{name}: bad value: {e}")))?;
                if values[s * names.len() + c].replace(v).is_some() {
                    return Err(bad(format!("{name}: duplicate entry for {} / {}", states[s], row[dim])));
                }
            }
            let values = values.into_iter().collect::<Option<Vec<_>>>().ok_or_else(|| bad(format!("{name}: missing entries")))?;
            QTable::from_values(states.len(), names.len(), values).map_err(|e| bad(format!("{name}: {e}")))
        };

        let flat_q = primitive_ids
            .iter()
            .map(|id| read_table(&flat_file(id), "action", &action_names))
            .collect::<Result<Vec<_>, _>>()?;
        let option_q = read_table(OPTION_Q_FILE, "option", &option_ids)?;
        let terminations = primitive_ids.iter().map(|id| terminations.remove(id).unwrap_or_default()).collect();
        Ok(PolicyBundle { state_variables, states, action_names, primitive_ids, option_ids, flat_q, option_q, terminations })
    }
}
