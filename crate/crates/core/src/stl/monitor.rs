//! Signal-at-a-time evaluation.
//!
//! A [`Monitor`] flattens a formula into post-order nodes and evaluates whole
//! robustness signals, using monotonic-deque sliding windows for `G`/`F`.
//! Predicate values come from a [`LeafTable`] so callers with a finite state
//! space can cache them per state.

use std::collections::VecDeque;
use std::sync::Arc;

use super::ast::{Bound, Formula, Predicate, Robustness, State};
use super::robustness::Horizon;
use super::StlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Node {
    Leaf(usize),
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Always { lo: usize, hi: Bound, child: usize },
    Eventually { lo: usize, hi: Bound, child: usize },
    Until { lo: usize, hi: Bound, left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct Monitor {
    nodes: Vec<Node>,
    horizons: Vec<Horizon>,
    leaves: Arc<[Predicate]>,
}

/// Predicate values per time step, one row per sample.
#[derive(Debug, Clone, Default)]
pub struct LeafTable {
    width: usize,
    values: Vec<Robustness>,
}

impl LeafTable {
    pub fn new(width: usize) -> Self {
        LeafTable { width, values: Vec::new() }
    }

    pub fn with_capacity(width: usize, rows: usize) -> Self {
        LeafTable { width, values: Vec::with_capacity(width * rows) }
    }

    pub fn push_row(&mut self, row: &[Robustness]) {
        assert_eq!(row.len(), self.width, "leaf row width");
        self.values.extend_from_slice(row);
    }

    pub fn len(&self) -> usize {
        if self.width == 0 {
            0
        } else {
            self.values.len() / self.width
        }
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn get(&self, t: usize, leaf: usize) -> Robustness {
        self.values[t * self.width + leaf]
    }
}

/// A table seen from row `offset` onwards.
#[derive(Debug, Clone, Copy)]
struct View<'a> {
    table: &'a LeafTable,
    offset: usize,
}

impl View<'_> {
    fn len(&self) -> usize {
        self.table.len() - self.offset
    }

    fn get(&self, t: usize, leaf: usize) -> Robustness {
        self.table.get(self.offset + t, leaf)
    }
}

impl Monitor {
    pub fn new(formula: &Formula) -> Self {
        let mut leaves: Vec<Predicate> = Vec::new();
        let mut nodes = Vec::new();
        compile(formula, &mut nodes, &mut leaves);
        Self::from_parts(nodes, leaves.into())
    }

    fn from_parts(nodes: Vec<Node>, leaves: Arc<[Predicate]>) -> Self {
        let mut horizons: Vec<Horizon> = Vec::with_capacity(nodes.len());
        for node in &nodes {
            let h = match *node {
                Node::Leaf(_) => Horizon::Finite(0),
                Node::Not(c) => horizons[c],
                Node::And(a, b) | Node::Or(a, b) => join(horizons[a], horizons[b]),
                Node::Always { hi, child, .. } | Node::Eventually { hi, child, .. } => {
                    extend(hi, horizons[child])
                }
                Node::Until { hi, left, right, .. } => extend(hi, join(horizons[left], horizons[right])),
            };
            horizons.push(h);
        }
        Monitor { nodes, horizons, leaves }
    }

    fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn horizon(&self) -> Horizon {
        self.horizons[self.root()]
    }

    /// Distinct predicates in first-occurrence order; column `i` of a
    /// [`LeafTable`] holds values of `leaves()[i]`.
    pub fn leaves(&self) -> &[Predicate] {
        &self.leaves
    }

    pub fn leaf_row(&self, s: &State) -> Result<Vec<Robustness>, StlError> {
        self.leaves.iter().map(|p| p.robustness(s)).collect()
    }

    pub fn leaf_table(&self, states: &[State]) -> Result<LeafTable, StlError> {
        let mut table = LeafTable::with_capacity(self.leaves.len(), states.len());
        for s in states {
            table.push_row(&self.leaf_row(s)?);
        }
        Ok(table)
    }

    /// Robustness at times `from .. from + count`.
    pub fn signal(&self, table: &LeafTable, from: usize, count: usize) -> Result<Vec<Robustness>, StlError> {
        self.signal_view(View { table, offset: 0 }, from, count)
    }

    fn signal_view(&self, view: View<'_>, from: usize, count: usize) -> Result<Vec<Robustness>, StlError> {
        if count == 0 {
            return Ok(Vec::new());
        }
        match self.horizon() {
            Horizon::Unbounded => Err(StlError::Unbounded),
            Horizon::Finite(h) if from + count - 1 + h >= view.len() => {
                Err(StlError::HorizonExceedsTrajectory { horizon: h, time: from + count - 1, len: view.len() })
            }
            Horizon::Finite(_) => Ok(self.eval(self.root(), view, from, count)),
        }
    }

    pub fn robustness_at(&self, table: &LeafTable, t: usize) -> Result<Robustness, StlError> {
        Ok(self.signal(table, t, 1)?[0])
    }

    fn eval(&self, node: usize, view: View<'_>, from: usize, count: usize) -> Vec<Robustness> {
        match self.nodes[node] {
            Node::Leaf(l) => (from..from + count).map(|t| view.get(t, l)).collect(),
            Node::Not(c) => self.eval(c, view, from, count).into_iter().map(|v| -v).collect(),
            Node::And(a, b) => zip_with(self.eval(a, view, from, count), self.eval(b, view, from, count), Ord::min),
            Node::Or(a, b) => zip_with(self.eval(a, view, from, count), self.eval(b, view, from, count), Ord::max),
            Node::Always { lo, hi, child } => {
                let w = finite(hi) - lo;
                sliding(&self.eval(child, view, from + lo, count + w - 1), w, |a, b| a <= b)
            }
            Node::Eventually { lo, hi, child } => {
                let w = finite(hi) - lo;
                sliding(&self.eval(child, view, from + lo, count + w - 1), w, |a, b| a >= b)
            }
            Node::Until { lo, hi, left, right } => {
                let hi = finite(hi);
                let lefts = self.eval(left, view, from, count + hi - 1);
                let rights = self.eval(right, view, from, count + hi - 1);
                (0..count)
                    .map(|t| {
                        let mut prefix: Option<Robustness> = None;
                        let mut best: Option<Robustness> = None;
                        for u in t..t + hi {
                            if u >= t + lo {
                                let v = match prefix {
                                    Some(p) => rights[u].min(p),
                                    None => rights[u],
                                };
                                best = Some(best.map_or(v, |b| b.max(v)));
                            }
                            prefix = Some(prefix.map_or(lefts[u], |p| p.min(lefts[u])));
                        }
                        best.expect("non-empty window")
                    })
                    .collect()
            }
        }
    }

    /// The monitor of the formula clipped to `k` samples; see
    /// [`super::truncate_horizon`].
    pub fn truncated(&self, k: usize) -> Result<Monitor, StlError> {
        if k == 0 {
            return Err(StlError::InvalidTruncation);
        }
        let mut nodes = Vec::with_capacity(self.nodes.len());
        self.truncate_node(self.root(), k, &mut nodes);
        Ok(Monitor::from_parts(nodes, Arc::clone(&self.leaves)))
    }

    fn truncate_node(&self, node: usize, avail: usize, out: &mut Vec<Node>) -> (usize, usize) {
        let push = |out: &mut Vec<Node>, n: Node, h: usize| {
            out.push(n);
            (out.len() - 1, h)
        };
        match self.nodes[node] {
            Node::Leaf(l) => push(out, Node::Leaf(l), 0),
            Node::Not(c) => {
                let (c, h) = self.truncate_node(c, avail, out);
                push(out, Node::Not(c), h)
            }
            Node::And(a, b) | Node::Or(a, b) => {
                let (a2, ha) = self.truncate_node(a, avail, out);
                let (b2, hb) = self.truncate_node(b, avail, out);
                let n = if matches!(self.nodes[node], Node::And(..)) { Node::And(a2, b2) } else { Node::Or(a2, b2) };
                push(out, n, ha.max(hb))
            }
            Node::Always { lo, hi, child } | Node::Eventually { lo, hi, child } => {
                let lo = lo.min(avail - 1);
                let (c, hc) = self.truncate_node(child, avail - lo, out);
                let hi = clip(hi, avail - hc, lo);
                let n = if matches!(self.nodes[node], Node::Always { .. }) {
                    Node::Always { lo, hi: Bound::Finite(hi), child: c }
                } else {
                    Node::Eventually { lo, hi: Bound::Finite(hi), child: c }
                };
                push(out, n, hi - 1 + hc)
            }
            Node::Until { lo, hi, left, right } => {
                let lo = lo.min(avail - 1);
                let (l, hl) = self.truncate_node(left, avail - lo, out);
                let (r, hr) = self.truncate_node(right, avail - lo, out);
                let hc = hl.max(hr);
                let hi = clip(hi, avail - hc, lo);
                push(out, Node::Until { lo, hi: Bound::Finite(hi), left: l, right: r }, hi - 1 + hc)
            }
        }
    }

    /// Robustness of the formula, clipped to the remaining length, at the
    /// start of every suffix: entry `i` evaluates samples `i..` as a trajectory
    /// of its own. Equivalent to truncating and evaluating each suffix
    /// separately, but linear in the trajectory length for the common shapes
    /// (fully bounded formulas and a single unbounded `G`/`F` at the root).
    pub fn suffix_robustness(&self, table: &LeafTable) -> Result<Vec<Robustness>, StlError> {
        let len = table.len();
        if len == 0 {
            return Err(StlError::EmptyTrajectory);
        }
        let mut out: Vec<Option<Robustness>> = vec![None; len];
        match (self.horizon(), self.nodes[self.root()]) {
            (Horizon::Finite(h), _) if h < len => {
                // suffixes with at least h+1 samples need no clipping
                let full = self.signal(table, 0, len - h)?;
                for (slot, v) in out.iter_mut().zip(full) {
                    *slot = Some(v);
                }
            }
            (Horizon::Unbounded, Node::Always { lo, hi: Bound::Unbounded, child })
            | (Horizon::Unbounded, Node::Eventually { lo, hi: Bound::Unbounded, child }) => {
                if let Horizon::Finite(hc) = self.horizons[child] {
                    let is_always = matches!(self.nodes[self.root()], Node::Always { .. });
                    if len > hc {
                        let sub = self.child_monitor(child);
                        let sig = sub.signal(table, 0, len - hc)?;
                        // running aggregate from the right
                        let mut acc: Vec<Robustness> = sig.clone();
                        for j in (0..acc.len().saturating_sub(1)).rev() {
                            acc[j] = if is_always { acc[j].min(acc[j + 1]) } else { acc[j].max(acc[j + 1]) };
                        }
                        for (i, slot) in out.iter_mut().enumerate() {
                            if len - i > lo + hc {
                                *slot = Some(acc[i + lo]);
                            }
                        }
                    }
                }
            }
            _ => {}
        }
        out.into_iter()
            .enumerate()
            .map(|(i, v)| match v {
                Some(v) => Ok(v),
                None => {
                    let view = View { table, offset: i };
                    self.truncated(len - i)?.signal_view(view, 0, 1).map(|s| s[0])
                }
            })
            .collect()
    }

    /// Robustness of the formula clipped to the table length, at time zero.
    pub fn clipped_robustness(&self, table: &LeafTable) -> Result<Robustness, StlError> {
        if table.is_empty() {
            return Err(StlError::EmptyTrajectory);
        }
        self.truncated(table.len())?.robustness_at(table, 0)
    }

    /// The sub-monitor rooted at `node`, sharing leaf columns with `self`.
    fn child_monitor(&self, node: usize) -> Monitor {
        let mut nodes = Vec::new();
        self.copy_subtree(node, &mut nodes);
        Monitor::from_parts(nodes, Arc::clone(&self.leaves))
    }

    fn copy_subtree(&self, node: usize, out: &mut Vec<Node>) -> usize {
        let n = match self.nodes[node] {
            Node::Leaf(l) => Node::Leaf(l),
            Node::Not(c) => Node::Not(self.copy_subtree(c, out)),
            Node::And(a, b) => {
                let a = self.copy_subtree(a, out);
                Node::And(a, self.copy_subtree(b, out))
            }
            Node::Or(a, b) => {
                let a = self.copy_subtree(a, out);
                Node::Or(a, self.copy_subtree(b, out))
            }
            Node::Always { lo, hi, child } => Node::Always { lo, hi, child: self.copy_subtree(child, out) },
            Node::Eventually { lo, hi, child } => Node::Eventually { lo, hi, child: self.copy_subtree(child, out) },
            Node::Until { lo, hi, left, right } => {
                let left = self.copy_subtree(left, out);
                Node::Until { lo, hi, left, right: self.copy_subtree(right, out) }
            }
        };
        out.push(n);
        out.len() - 1
    }
}

fn compile(f: &Formula, nodes: &mut Vec<Node>, leaves: &mut Vec<Predicate>) -> usize {
    let node = match f {
        Formula::Predicate(p) => {
            let idx = match leaves.iter().position(|q| q == p) {
                Some(i) => i,
                None => {
                    leaves.push(p.clone());
                    leaves.len() - 1
                }
            };
            Node::Leaf(idx)
        }
        Formula::Not(c) => Node::Not(compile(c, nodes, leaves)),
        Formula::And(a, b) => {
            let a = compile(a, nodes, leaves);
            Node::And(a, compile(b, nodes, leaves))
        }
        Formula::Or(a, b) => {
            let a = compile(a, nodes, leaves);
            Node::Or(a, compile(b, nodes, leaves))
        }
        Formula::Always(w, c) => Node::Always { lo: w.lo(), hi: w.hi(), child: compile(c, nodes, leaves) },
        Formula::Eventually(w, c) => Node::Eventually { lo: w.lo(), hi: w.hi(), child: compile(c, nodes, leaves) },
        Formula::Until(w, a, b) => {
            let left = compile(a, nodes, leaves);
            Node::Until { lo: w.lo(), hi: w.hi(), left, right: compile(b, nodes, leaves) }
        }
    };
    nodes.push(node);
    nodes.len() - 1
}

fn join(a: Horizon, b: Horizon) -> Horizon {
    match (a, b) {
        (Horizon::Finite(a), Horizon::Finite(b)) => Horizon::Finite(a.max(b)),
        _ => Horizon::Unbounded,
    }
}

fn extend(hi: Bound, child: Horizon) -> Horizon {
    match (hi, child) {
        (Bound::Finite(hi), Horizon::Finite(h)) => Horizon::Finite(hi - 1 + h),
        _ => Horizon::Unbounded,
    }
}

fn finite(b: Bound) -> usize {
    match b {
        Bound::Finite(hi) => hi,
        Bound::Unbounded => unreachable!("unbounded windows are rejected before evaluation"),
    }
}

fn clip(hi: Bound, room: usize, lo: usize) -> usize {
    let hi = match hi {
        Bound::Finite(hi) => hi.min(room),
        Bound::Unbounded => room,
    };
    hi.max(lo + 1)
}

fn zip_with(a: Vec<Robustness>, b: Vec<Robustness>, f: fn(Robustness, Robustness) -> Robustness) -> Vec<Robustness> {
    a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect()
}

/// Extremum over every window of width `w`; `keeps(a, b)` is true when `a`
/// dominates `b` (`<=` for minimum, `>=` for maximum).
fn sliding(values: &[Robustness], w: usize, keeps: fn(&Robustness, &Robustness) -> bool) -> Vec<Robustness> {
    debug_assert!(w >= 1 && values.len() >= w);
    let mut out = Vec::with_capacity(values.len() + 1 - w);
    let mut deque: VecDeque<usize> = VecDeque::with_capacity(w);
    for (i, v) in values.iter().enumerate() {
        while let Some(&back) = deque.back() {
            if keeps(v, &values[back]) {
                deque.pop_back();
            } else {
                break;
            }
        }
        deque.push_back(i);
        if deque[0] + w <= i {
            deque.pop_front();
        }
        if i + 1 >= w {
            out.push(values[deque[0]]);
        }
    }
    out
}
