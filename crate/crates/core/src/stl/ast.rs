//! Formula tree, predicates and the discrete-time state containers they are
//! evaluated over.

use std::fmt;

use num_rational::Rational64;
use num_traits::{Signed, Zero};

use super::StlError;

/// Robustness values are exact rationals. Grid states are integers, so every
/// value produced in the case study is an integer with denominator one.
pub type Robustness = Rational64;

/// A discrete state: one integer per declared state variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State(pub Vec<i64>);

impl State {
    pub fn new(values: impl Into<Vec<i64>>) -> Self {
        State(values.into())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[i64] {
        &self.0
    }
}

impl From<(i64, i64)> for State {
    fn from((x, y): (i64, i64)) -> Self {
        State(vec![x, y])
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// States `s_t, s_{t+1}, ..., s_{t+k}`. Never empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    states: Vec<State>,
    start_time: i64,
}

impl Trajectory {
    pub fn new(states: Vec<State>) -> Result<Self, StlError> {
        Self::starting_at(states, 0)
    }

    pub fn starting_at(states: Vec<State>, start_time: i64) -> Result<Self, StlError> {
        if states.is_empty() {
            return Err(StlError::EmptyTrajectory);
        }
        Ok(Trajectory { states, start_time })
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn start_time(&self) -> i64 {
        self.start_time
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// The sub-trajectory starting at index `from`, re-based so that its first
    /// sample has local index zero.
    pub fn suffix(&self, from: usize) -> Result<Trajectory, StlError> {
        if from >= self.states.len() {
            return Err(StlError::EmptyTrajectory);
        }
        Ok(Trajectory {
            states: self.states[from..].to_vec(),
            start_time: self.start_time + from as i64,
        })
    }

    pub fn into_states(self) -> Vec<State> {
        self.states
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparator {
    Lt,
    Gt,
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Comparator::Lt => "<",
            Comparator::Gt => ">",
        })
    }
}

/// One `coeff * variable` summand of a linear predicate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    pub var: usize,
    pub name: String,
    pub coeff: Rational64,
}

/// A linear inequality `f(s) < c` or `f(s) > c` with `f(s) = sum coeff_i * s_i`.
///
/// Terms are kept sorted by variable index with repeated variables merged and
/// zero coefficients dropped, so structurally equal predicates compare equal
/// no matter how they were written.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Predicate {
    terms: Vec<Term>,
    comparator: Comparator,
    constant: Rational64,
}

impl Predicate {
    pub fn new(
        terms: impl IntoIterator<Item = Term>,
        comparator: Comparator,
        constant: Rational64,
    ) -> Result<Self, StlError> {
        let mut merged: Vec<Term> = Vec::new();
        for term in terms {
            match merged.iter_mut().find(|t| t.var == term.var) {
                Some(existing) => existing.coeff += term.coeff,
                None => merged.push(term),
            }
        }
        merged.retain(|t| !t.coeff.is_zero());
        if merged.is_empty() {
            return Err(StlError::DegeneratePredicate);
        }
        merged.sort_by_key(|t| t.var);
        Ok(Predicate {
            terms: merged,
            comparator,
            constant,
        })
    }

    /// Shorthand for a single-variable predicate `name cmp constant`.
    pub fn simple(var: usize, name: &str, comparator: Comparator, constant: i64) -> Self {
        Predicate::new(
            [Term {
                var,
                name: name.to_string(),
                coeff: Rational64::from_integer(1),
            }],
            comparator,
            Rational64::from_integer(constant),
        )
        .expect("unit coefficient is nonzero")
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn comparator(&self) -> Comparator {
        self.comparator
    }

    pub fn constant(&self) -> Rational64 {
        self.constant
    }

    /// Highest variable index referenced, plus one.
    pub fn required_dim(&self) -> usize {
        self.terms.last().map(|t| t.var + 1).unwrap_or(0)
    }

    /// `f(s)`.
    pub fn lhs(&self, s: &State) -> Result<Rational64, StlError> {
        if s.dim() < self.required_dim() {
            return Err(StlError::DimensionMismatch {
                expected: self.required_dim(),
                found: s.dim(),
            });
        }
        Ok(self
            .terms
            .iter()
            .map(|t| t.coeff * Rational64::from_integer(s.0[t.var]))
            .sum())
    }

    /// `c - f(s)` for `<`, `f(s) - c` for `>`.
    pub fn robustness(&self, s: &State) -> Result<Robustness, StlError> {
        let f = self.lhs(s)?;
        Ok(match self.comparator {
            Comparator::Lt => self.constant - f,
            Comparator::Gt => f - self.constant,
        })
    }

    /// Boolean reading with strict inequalities.
    pub fn holds(&self, s: &State) -> Result<bool, StlError> {
        let f = self.lhs(s)?;
        Ok(match self.comparator {
            Comparator::Lt => f < self.constant,
            Comparator::Gt => f > self.constant,
        })
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, term) in self.terms.iter().enumerate() {
            let magnitude = if i == 0 { term.coeff } else { term.coeff.abs() };
            if i > 0 {
                f.write_str(if term.coeff.is_negative() { " - " } else { " + " })?;
            }
            if magnitude == Rational64::from_integer(1) {
                f.write_str(&term.name)?;
            } else {
                write!(f, "{}*{}", format_number(magnitude), term.name)?;
            }
        }
        write!(f, " {} {}", self.comparator, format_number(self.constant))
    }
}

/// Renders a rational exactly: integers plainly, terminating fractions as
/// decimals and anything else as `p/q`.
pub fn format_number(value: Rational64) -> String {
    if value.is_integer() {
        return value.to_integer().to_string();
    }
    let mut denom = *value.denom();
    let (mut twos, mut fives) = (0u32, 0u32);
    while denom % 2 == 0 {
        denom /= 2;
        twos += 1;
    }
    while denom % 5 == 0 {
        denom /= 5;
        fives += 1;
    }
    if denom != 1 {
        return format!("{}/{}", value.numer(), value.denom());
    }
    let digits = twos.max(fives);
    let scale = 10i128.pow(digits);
    let scaled = *value.numer() as i128 * scale / *value.denom() as i128;
    let sign = if scaled < 0 { "-" } else { "" };
    let scaled = scaled.abs();
    let int_part = scaled / scale;
    let frac_part = scaled % scale;
    format!(
        "{sign}{int_part}.{frac:0width$}",
        frac = frac_part,
        width = digits as usize
    )
}

/// Upper end of a temporal window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bound {
    Finite(usize),
    Unbounded,
}

/// Half-open window `[lo, hi)` in steps. `lo < hi` always holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: usize,
    hi: Bound,
}

impl Interval {
    pub fn new(lo: usize, hi: usize) -> Result<Self, StlError> {
        if lo >= hi {
            return Err(StlError::EmptyWindow { lo, hi });
        }
        Ok(Interval {
            lo,
            hi: Bound::Finite(hi),
        })
    }

    pub fn unbounded(lo: usize) -> Self {
        Interval {
            lo,
            hi: Bound::Unbounded,
        }
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> Bound {
        self.hi
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self.hi, Bound::Finite(_))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.hi {
            Bound::Finite(hi) => write!(f, "[{},{})", self.lo, hi),
            Bound::Unbounded => write!(f, "[{},inf)", self.lo),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Predicate(Predicate),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Always(Interval, Box<Formula>),
    Eventually(Interval, Box<Formula>),
    /// `left U right`: `right` must hold somewhere in the window and `left`
    /// at every step before that.
    Until(Interval, Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn always(window: Interval, f: Formula) -> Self {
        Formula::Always(window, Box::new(f))
    }

    pub fn eventually(window: Interval, f: Formula) -> Self {
        Formula::Eventually(window, Box::new(f))
    }

    pub fn until(window: Interval, left: Formula, right: Formula) -> Self {
        Formula::Until(window, Box::new(left), Box::new(right))
    }

    /// Right-folds an n-ary conjunction. Panics on an empty list.
    pub fn and_all(parts: impl IntoIterator<Item = Formula>) -> Self {
        fold_right(parts, Formula::and)
    }

    pub fn or_all(parts: impl IntoIterator<Item = Formula>) -> Self {
        fold_right(parts, Formula::or)
    }

    pub fn is_predicate(&self) -> bool {
        matches!(self, Formula::Predicate(_))
    }

    /// True when no temporal operator occurs anywhere below this node.
    pub fn is_temporal_free(&self) -> bool {
        match self {
            Formula::Predicate(_) => true,
            Formula::Not(f) => f.is_temporal_free(),
            Formula::And(a, b) | Formula::Or(a, b) => a.is_temporal_free() && b.is_temporal_free(),
            Formula::Always(..) | Formula::Eventually(..) | Formula::Until(..) => false,
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Formula::Predicate(_) => 1,
            Formula::Not(f) | Formula::Always(_, f) | Formula::Eventually(_, f) => 1 + f.size(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(_, a, b) => {
                1 + a.size() + b.size()
            }
        }
    }

    /// Depth of the tree; a bare predicate has depth zero.
    pub fn depth(&self) -> usize {
        match self {
            Formula::Predicate(_) => 0,
            Formula::Not(f) | Formula::Always(_, f) | Formula::Eventually(_, f) => 1 + f.depth(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(_, a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }

    /// Every predicate leaf, left to right, duplicates included.
    pub fn leaves(&self) -> Vec<&Predicate> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Predicate>) {
        match self {
            Formula::Predicate(p) => out.push(p),
            Formula::Not(f) | Formula::Always(_, f) | Formula::Eventually(_, f) => {
                f.collect_leaves(out)
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(_, a, b) => {
                a.collect_leaves(out);
                b.collect_leaves(out);
            }
        }
    }

    /// The maximal temporal-operator-free subformulas in left-to-right order,
    /// deduplicated structurally. These are the targets of the primitive
    /// options.
    pub fn extract_predicates(&self) -> Vec<Formula> {
        let mut out: Vec<Formula> = Vec::new();
        self.collect_temporal_free(&mut out);
        out
    }

    fn collect_temporal_free(&self, out: &mut Vec<Formula>) {
        if self.is_temporal_free() {
            if !out.contains(self) {
                out.push(self.clone());
            }
            return;
        }
        match self {
            Formula::Predicate(_) => unreachable!("predicates are temporal-free"),
            Formula::Not(f) | Formula::Always(_, f) | Formula::Eventually(_, f) => {
                f.collect_temporal_free(out)
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(_, a, b) => {
                a.collect_temporal_free(out);
                b.collect_temporal_free(out);
            }
        }
    }
}

fn fold_right(
    parts: impl IntoIterator<Item = Formula>,
    join: fn(Formula, Formula) -> Formula,
) -> Formula {
    let mut parts: Vec<Formula> = parts.into_iter().collect();
    let mut acc = parts.pop().expect("at least one operand");
    while let Some(next) = parts.pop() {
        acc = join(next, acc);
    }
    acc
}

/// Writes a child operand, parenthesized unless it is a bare predicate.
fn write_operand(f: &mut fmt::Formatter<'_>, child: &Formula) -> fmt::Result {
    if child.is_predicate() {
        write!(f, "{child}")
    } else {
        write!(f, "({child})")
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Predicate(p) => write!(f, "{p}"),
            Formula::Not(c) => {
                f.write_str("!")?;
                write!(f, "({c})")
            }
            Formula::And(a, b) => {
                write_operand(f, a)?;
                f.write_str(" & ")?;
                write_operand(f, b)
            }
            Formula::Or(a, b) => {
                write_operand(f, a)?;
                f.write_str(" | ")?;
                write_operand(f, b)
            }
            Formula::Always(w, c) => {
                write!(f, "G{w} ")?;
                write_operand(f, c)
            }
            Formula::Eventually(w, c) => {
                write!(f, "F{w} ")?;
                write_operand(f, c)
            }
            Formula::Until(w, a, b) => {
                write_operand(f, a)?;
                write!(f, " U{w} ")?;
                write_operand(f, b)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predicate_merges_and_sorts_terms() {
        let p = Predicate::new(
            [
                Term { var: 1, name: "y".into(), coeff: Rational64::from_integer(2) },
                Term { var: 0, name: "x".into(), coeff: Rational64::from_integer(1) },
                Term { var: 1, name: "y".into(), coeff: Rational64::from_integer(1) },
            ],
            Comparator::Lt,
            Rational64::from_integer(7),
        )
        .unwrap();
        assert_eq!(p.terms().len(), 2);
        assert_eq!(p.terms()[0].var, 0);
        assert_eq!(p.terms()[1].coeff, Rational64::from_integer(3));
        assert_eq!(p.to_string(), "x + 3*y < 7");
    }

    #[test]
    fn cancelling_terms_are_rejected() {
        let err = Predicate::new(
            [
                Term { var: 0, name: "x".into(), coeff: Rational64::from_integer(1) },
                Term { var: 0, name: "x".into(), coeff: Rational64::from_integer(-1) },
            ],
            Comparator::Gt,
            Rational64::from_integer(0),
        )
        .unwrap_err();
        assert_eq!(err, StlError::DegeneratePredicate);
    }

    #[test]
    fn boundary_state_has_zero_robustness() {
        let p = Predicate::simple(0, "x", Comparator::Gt, 10);
        assert_eq!(p.robustness(&State::from((10, 7))).unwrap(), Rational64::from_integer(0));
        assert!(!p.holds(&State::from((10, 7))).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = Predicate::simple(1, "y", Comparator::Lt, 3);
        assert!(matches!(
            p.robustness(&State::new(vec![1])),
            Err(StlError::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn numbers_render_exactly() {
        assert_eq!(format_number(Rational64::new(5, 2)), "2.5");
        assert_eq!(format_number(Rational64::new(-1, 8)), "-0.125");
        assert_eq!(format_number(Rational64::new(1, 3)), "1/3");
        assert_eq!(format_number(Rational64::from_integer(-4)), "-4");
    }

    #[test]
    fn empty_window_is_rejected() {
        assert!(Interval::new(3, 3).is_err());
        assert!(Interval::new(0, 1).is_ok());
    }

    #[test]
    fn trajectory_must_be_non_empty() {
        assert_eq!(Trajectory::new(vec![]).unwrap_err(), StlError::EmptyTrajectory);
    }
}
