//! Primitive options built from the predicates of a formula, temporally
//! combined options that run primitives back to back, and the executor that
//! drives an option against an environment.

use std::collections::BTreeSet;

use rand::Rng;
use thiserror::Error;

use crate::env::{EnvError, Mdp};
use crate::stl::{robustness, Formula, Robustness, State, StlError, Trajectory};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptionError {
    #[error("no predicates to build options from")]
    NoPredicates,
    #[error("at most 26 predicates are supported, got {0}")]
    TooManyPredicates(usize),
    #[error("predicate {0} contains a temporal operator")]
    NotTemporalFree(usize),
    #[error("the environment's state space cannot be enumerated")]
    UnboundedStateSpace,
    #[error("option {0} has an empty termination set")]
    EmptyTermination(String),
    #[error("option `{from}` can terminate outside the initiation set of `{to}`")]
    ChainingViolation { from: String, to: String },
    #[error("unknown option id `{0}`")]
    UnknownOption(String),
    #[error("option set is missing primitive option `{0}`")]
    MissingPrimitive(String),
    #[error("option set is empty")]
    EmptyOptionSet,
    #[error("state {state} is not in the initiation set of option `{option}`")]
    NotInitiable { option: String, state: State },
    #[error("step cap must be at least one")]
    InvalidStepCap,
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Stl(#[from] StlError),
}

/// Where an option may be started.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitiationSet {
    All,
    States(BTreeSet<usize>),
}

impl InitiationSet {
    pub fn contains(&self, state: usize) -> bool {
        match self {
            InitiationSet::All => true,
            InitiationSet::States(set) => set.contains(&state),
        }
    }

    fn includes(&self, other: &BTreeSet<usize>) -> bool {
        match self {
            InitiationSet::All => true,
            InitiationSet::States(set) => other.is_subset(set),
        }
    }
}

/// An option whose internal policy acts on primitive actions. The policy
/// itself is the flat Q-table with the same index held by the learner.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveOption {
    pub id: String,
    pub predicate_index: usize,
    pub predicate: Formula,
    pub initiation: InitiationSet,
    /// States with termination probability one; zero everywhere else.
    pub termination: BTreeSet<usize>,
}

impl PrimitiveOption {
    pub fn terminates_at(&self, state: usize) -> bool {
        self.termination.contains(&state)
    }
}

/// Builds one primitive option per predicate. Each may start anywhere and
/// terminates on every state where the predicate's robustness is maximal.
pub fn build_primitive_options<E: Mdp>(predicates: &[Formula], env: &E) -> Result<Vec<PrimitiveOption>, OptionError> {
    if predicates.is_empty() {
        return Err(OptionError::NoPredicates);
    }
    if predicates.len() > 26 {
        return Err(OptionError::TooManyPredicates(predicates.len()));
    }
    let states = env.states().ok_or(OptionError::UnboundedStateSpace)?;
    predicates
        .iter()
        .enumerate()
        .map(|(i, psi)| {
            if !psi.is_temporal_free() {
                return Err(OptionError::NotTemporalFree(i));
            }
            let id = primitive_id(i);
            let termination = argmax_states(psi, &states)?;
            if termination.is_empty() {
                return Err(OptionError::EmptyTermination(id));
            }
            Ok(PrimitiveOption {
                id,
                predicate_index: i,
                predicate: psi.clone(),
                initiation: InitiationSet::All,
                termination,
            })
        })
        .collect()
}

/// `A`, `B`, `C`, ... in predicate order.
pub fn primitive_id(index: usize) -> String {
    char::from(b'A' + index as u8).to_string()
}

/// Indices of the states where `psi` attains its maximum robustness.
pub fn argmax_states(psi: &Formula, states: &[State]) -> Result<BTreeSet<usize>, StlError> {
    let mut best: Option<Robustness> = None;
    let mut set = BTreeSet::new();
    for (i, s) in states.iter().enumerate() {
        let value = state_robustness(psi, s)?;
        match best {
            Some(b) if value < b => {}
            Some(b) if value == b => {
                set.insert(i);
            }
            _ => {
                best = Some(value);
                set.clear();
                set.insert(i);
            }
        }
    }
    Ok(set)
}

/// Robustness of a temporal-free formula at a single state.
pub fn state_robustness(psi: &Formula, s: &State) -> Result<Robustness, StlError> {
    robustness(&Trajectory::new(vec![s.clone()])?, psi, 0)
}

/// A primitive option or an ordered sequence of them. Ids concatenate the
/// primitive ids in execution order (`"BC"` runs `B` then `C`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptionDef {
    pub id: String,
    pub sequence: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OptionSetMode {
    /// Every non-empty subset with constituents in primitive order.
    SubsetsInOrder,
    /// Every ordering of every non-empty subset.
    AllPermutations,
    /// Exactly the listed ids.
    Explicit(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptionSetSpec {
    pub mode: OptionSetMode,
    pub max_sequence_length: Option<usize>,
}

impl OptionSetSpec {
    pub fn new(mode: OptionSetMode) -> Self {
        OptionSetSpec { mode, max_sequence_length: None }
    }
}

/// The primitives together with the option set the high-level policy picks from.
#[derive(Debug, Clone, PartialEq)]
pub struct OptionSet {
    primitives: Vec<PrimitiveOption>,
    options: Vec<OptionDef>,
}

pub fn build_combined_options(primitives: Vec<PrimitiveOption>, spec: &OptionSetSpec) -> Result<OptionSet, OptionError> {
    if primitives.is_empty() {
        return Err(OptionError::NoPredicates);
    }
    let n = primitives.len();
    let max_len = spec.max_sequence_length.unwrap_or(n).clamp(1, n);
    let sequences: Vec<Vec<usize>> = match &spec.mode {
        OptionSetMode::SubsetsInOrder => (1..=max_len).flat_map(|r| combinations(n, r)).collect(),
        OptionSetMode::AllPermutations => (1..=max_len)
            .flat_map(|r| combinations(n, r))
            .flat_map(|c| permutations(&c))
            .collect(),
        OptionSetMode::Explicit(ids) => {
            let seqs = ids
                .iter()
                .map(|id| parse_sequence(id, &primitives))
                .collect::<Result<Vec<_>, _>>()?;
            for p in &primitives {
                if !seqs.iter().any(|s| s.len() == 1 && primitives[s[0]].id == p.id) {
                    return Err(OptionError::MissingPrimitive(p.id.clone()));
                }
            }
            seqs
        }
    };
    if sequences.is_empty() {
        return Err(OptionError::EmptyOptionSet);
    }
    let mut options: Vec<OptionDef> = Vec::with_capacity(sequences.len());
    for sequence in sequences {
        for pair in sequence.windows(2) {
            let (from, to) = (&primitives[pair[0]], &primitives[pair[1]]);
            if !to.initiation.includes(&from.termination) {
                return Err(OptionError::ChainingViolation { from: from.id.clone(), to: to.id.clone() });
            }
        }
        let id: String = sequence.iter().map(|&p| primitives[p].id.as_str()).collect();
        if !options.iter().any(|o| o.id == id) {
            options.push(OptionDef { id, sequence });
        }
    }
    Ok(OptionSet { primitives, options })
}

fn parse_sequence(id: &str, primitives: &[PrimitiveOption]) -> Result<Vec<usize>, OptionError> {
    if id.is_empty() {
        return Err(OptionError::UnknownOption(id.to_string()));
    }
    id.chars()
        .map(|c| {
            primitives
                .iter()
                .position(|p| p.id.len() == 1 && p.id.starts_with(c))
                .ok_or_else(|| OptionError::UnknownOption(id.to_string()))
        })
        .collect()
}

/// r-element index combinations of `0..n` in lexicographic order.
fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, r, &mut Vec::with_capacity(r), &mut out);
    out
}

/// All orderings of `items` in lexicographic order of positions.
fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for (i, &head) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

impl OptionSet {
    pub fn primitives(&self) -> &[PrimitiveOption] {
        &self.primitives
    }

    pub fn options(&self) -> &[OptionDef] {
        &self.options
    }

    pub fn len(&self) -> usize {
        self.options.len()
    }

    pub fn is_empty(&self) -> bool {
        self.options.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.options.iter().position(|o| o.id == id)
    }

    /// The initiation set of an option is its first constituent's.
    pub fn initiable(&self, option: usize, state: usize) -> bool {
        let first = self.options[option].sequence[0];
        self.primitives[first].initiation.contains(state)
    }

    /// Options that may be started in `state`.
    pub fn available(&self, state: usize) -> Vec<usize> {
        (0..self.options.len()).filter(|&o| self.initiable(o, state)).collect()
    }

    /// Termination set of an option: its last constituent's.
    pub fn termination(&self, option: usize) -> &BTreeSet<usize> {
        let last = *self.options[option].sequence.last().expect("non-empty sequence");
        &self.primitives[last].termination
    }
}

/// Supplies primitive actions for the constituent currently running.
pub trait FlatController {
    fn action(&mut self, primitive: usize, state: usize) -> usize;
}

/// Outcome of running one option.
#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub trajectory: Trajectory,
    /// Dense state indices, parallel to `trajectory`.
    pub state_indices: Vec<usize>,
    pub actions: Vec<usize>,
    /// Number of actions taken when each constituent finished.
    pub constituent_ends: Vec<usize>,
    pub terminated_normally: bool,
}

impl Execution {
    pub fn steps(&self) -> usize {
        self.actions.len()
    }
}

/// Runs `option` from `start` until its last constituent terminates or
/// `step_cap` actions have been taken.
///
/// A constituent started on its own termination set finishes without acting.
/// The option as a whole always takes at least one action: if every
/// constituent would finish immediately, the last one acts once and then runs
/// to termination as usual.
pub fn execute_option<E, C, R>(
    set: &OptionSet,
    option: usize,
    start: &State,
    env: &E,
    controller: &mut C,
    rng: &mut R,
    step_cap: usize,
) -> Result<Execution, OptionError>
where
    E: Mdp,
    C: FlatController + ?Sized,
    R: Rng + ?Sized,
{
    if step_cap == 0 {
        return Err(OptionError::InvalidStepCap);
    }
    let def = &set.options[option];
    let start_idx = env.state_index(start).ok_or_else(|| EnvError::OutOfBounds(start.clone()))?;
    if !set.initiable(option, start_idx) {
        return Err(OptionError::NotInitiable { option: def.id.clone(), state: start.clone() });
    }
    let mut states = vec![start.clone()];
    let mut indices = vec![start_idx];
    let mut actions = Vec::new();
    let mut ends = Vec::with_capacity(def.sequence.len());
    let last = def.sequence.len() - 1;
    for (j, &p) in def.sequence.iter().enumerate() {
        let primitive = &set.primitives[p];
        loop {
            let current = *indices.last().expect("non-empty");
            let must_act = j == last && actions.is_empty();
            if primitive.terminates_at(current) && !must_act {
                break;
            }
            if actions.len() >= step_cap {
                return Ok(Execution {
                    trajectory: Trajectory::new(states)?,
                    state_indices: indices,
                    actions,
                    constituent_ends: ends,
                    terminated_normally: false,
                });
            }
            let a = controller.action(p, current);
            let step = env.step(states.last().expect("non-empty"), a, rng)?;
            let idx = env.state_index(&step.next).ok_or_else(|| EnvError::OutOfBounds(step.next.clone()))?;
            actions.push(a);
            states.push(step.next);
            indices.push(idx);
        }
        ends.push(actions.len());
    }
    Ok(Execution {
        trajectory: Trajectory::new(states)?,
        state_indices: indices,
        actions,
        constituent_ends: ends,
        terminated_normally: true,
    })
}
