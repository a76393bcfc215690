//! Quantitative semantics over discrete trajectories.
//!
//! Windows are half-open: `G[lo,hi) f` at time `t` inspects `t+lo .. t+hi-1`.
//! Until follows the conventional reading: the right operand must be robust at
//! some `t'` in the window while the left operand holds at every step in
//! `[t, t')`.

use super::ast::{Bound, Formula, Interval, Robustness, State, Trajectory};
use super::StlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Finite(usize),
    Unbounded,
}

impl Horizon {
    fn max(self, other: Horizon) -> Horizon {
        match (self, other) {
            (Horizon::Finite(a), Horizon::Finite(b)) => Horizon::Finite(a.max(b)),
            _ => Horizon::Unbounded,
        }
    }

    pub fn finite(self) -> Option<usize> {
        match self {
            Horizon::Finite(h) => Some(h),
            Horizon::Unbounded => None,
        }
    }
}

/// Number of steps past the evaluation time that `f` inspects.
pub fn horizon(f: &Formula) -> Horizon {
    match f {
        Formula::Predicate(_) => Horizon::Finite(0),
        Formula::Not(c) => horizon(c),
        Formula::And(a, b) | Formula::Or(a, b) => horizon(a).max(horizon(b)),
        Formula::Always(w, c) | Formula::Eventually(w, c) => window_horizon(w, horizon(c)),
        Formula::Until(w, a, b) => window_horizon(w, horizon(a).max(horizon(b))),
    }
}

fn window_horizon(w: &Interval, child: Horizon) -> Horizon {
    match (w.hi(), child) {
        (Bound::Finite(hi), Horizon::Finite(h)) => Horizon::Finite(hi - 1 + h),
        _ => Horizon::Unbounded,
    }
}

/// Clips temporal bounds so that `f` can be evaluated at the first sample of
/// a `k`-sample trajectory.
///
/// Inner windows keep as much of their extent as fits; the enclosing window
/// absorbs the shortfall, so `G[0,inf)(F[0,40) p)` over 12 samples becomes
/// `G[0,1)(F[0,12) p)`. A window whose start lies past the last sample is
/// moved onto the last sample. The result always has `horizon <= k - 1`.
pub fn truncate_horizon(f: &Formula, k: usize) -> Result<Formula, StlError> {
    if k == 0 {
        return Err(StlError::InvalidTruncation);
    }
    Ok(truncate(f, k))
}

fn truncate(f: &Formula, avail: usize) -> Formula {
    debug_assert!(avail >= 1);
    match f {
        Formula::Predicate(_) => f.clone(),
        Formula::Not(c) => Formula::not(truncate(c, avail)),
        Formula::And(a, b) => Formula::and(truncate(a, avail), truncate(b, avail)),
        Formula::Or(a, b) => Formula::or(truncate(a, avail), truncate(b, avail)),
        Formula::Always(w, c) => {
            let (window, child) = truncate_window(w, avail, |room| vec![truncate(c, room)]);
            Formula::always(window, child.into_iter().next().expect("one child"))
        }
        Formula::Eventually(w, c) => {
            let (window, child) = truncate_window(w, avail, |room| vec![truncate(c, room)]);
            Formula::eventually(window, child.into_iter().next().expect("one child"))
        }
        Formula::Until(w, a, b) => {
            let (window, children) =
                truncate_window(w, avail, |room| vec![truncate(a, room), truncate(b, room)]);
            let mut it = children.into_iter();
            Formula::until(window, it.next().expect("left"), it.next().expect("right"))
        }
    }
}

fn truncate_window(
    w: &Interval,
    avail: usize,
    children: impl FnOnce(usize) -> Vec<Formula>,
) -> (Interval, Vec<Formula>) {
    let lo = w.lo().min(avail - 1);
    let kids = children(avail - lo);
    let child_h = kids
        .iter()
        .map(|k| horizon(k).finite().expect("truncated children are bounded"))
        .max()
        .unwrap_or(0);
    let room = avail - child_h;
    let hi = match w.hi() {
        Bound::Finite(hi) => hi.min(room),
        Bound::Unbounded => room,
    };
    let hi = hi.max(lo + 1);
    (Interval::new(lo, hi).expect("lo < hi by construction"), kids)
}

/// Robustness of `f` at index `t` of `traj`, evaluated directly from the
/// recursive definition. Exponential in nesting depth; intended for short
/// trajectories and as a reference for [`super::Monitor`].
pub fn robustness(traj: &Trajectory, f: &Formula, t: usize) -> Result<Robustness, StlError> {
    check_evaluable(f, t, traj.states())?;
    Ok(eval(traj.states(), f, t))
}

fn check_evaluable(f: &Formula, t: usize, states: &[State]) -> Result<(), StlError> {
    let len = states.len();
    match horizon(f) {
        Horizon::Unbounded => return Err(StlError::Unbounded),
        Horizon::Finite(h) if t + h >= len => {
            return Err(StlError::HorizonExceedsTrajectory { horizon: h, time: t, len })
        }
        Horizon::Finite(_) => {}
    }
    let expected = f.leaves().iter().map(|p| p.required_dim()).max().unwrap_or(0);
    match states.iter().find(|s| s.dim() < expected) {
        Some(s) => Err(StlError::DimensionMismatch { expected, found: s.dim() }),
        None => Ok(()),
    }
}

fn eval(states: &[State], f: &Formula, t: usize) -> Robustness {
    match f {
        Formula::Predicate(p) => p.robustness(&states[t]).expect("dimension checked by caller"),
        Formula::Not(c) => -eval(states, c, t),
        Formula::And(a, b) => eval(states, a, t).min(eval(states, b, t)),
        Formula::Or(a, b) => eval(states, a, t).max(eval(states, b, t)),
        Formula::Always(w, c) => window(w, t)
            .map(|u| eval(states, c, u))
            .min()
            .expect("non-empty window"),
        Formula::Eventually(w, c) => window(w, t)
            .map(|u| eval(states, c, u))
            .max()
            .expect("non-empty window"),
        Formula::Until(w, a, b) => window(w, t)
            .map(|u| {
                let right = eval(states, b, u);
                (t..u).map(|v| eval(states, a, v)).fold(right, |acc, l| acc.min(l))
            })
            .max()
            .expect("non-empty window"),
    }
}

fn window(w: &Interval, t: usize) -> std::ops::Range<usize> {
    match w.hi() {
        Bound::Finite(hi) => t + w.lo()..t + hi,
        Bound::Unbounded => unreachable!("unbounded windows are rejected before evaluation"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::{parse_stl, Comparator, Predicate};
    use num_rational::Rational64;

    fn xy() -> Vec<String> {
        vec!["x".into(), "y".into()]
    }

    fn r(v: i64) -> Robustness {
        Rational64::from_integer(v)
    }

    fn table1() -> Trajectory {
        Trajectory::new(vec![(9, 7).into(), (10, 7).into(), (11, 7).into(), (11, 8).into()]).unwrap()
    }

    const PSI: &str = "(x > 10) & (x < 14) & (y > 6) & (y < 10)";

    #[test]
    fn square_region_per_state_values() {
        let psi = parse_stl(PSI, &xy()).unwrap();
        let traj = table1();
        let got: Vec<_> = (0..4).map(|t| robustness(&traj, &psi, t).unwrap()).collect();
        assert_eq!(got, vec![r(-1), r(0), r(1), r(1)]);
        let centre = Trajectory::new(vec![(12, 8).into()]).unwrap();
        assert_eq!(robustness(&centre, &psi, 0).unwrap(), r(2));
    }

    #[test]
    fn always_and_eventually_over_table_trajectory() {
        let always = parse_stl(&format!("G[0,4)({PSI})"), &xy()).unwrap();
        let eventually = parse_stl(&format!("F[0,4)({PSI})"), &xy()).unwrap();
        assert_eq!(robustness(&table1(), &always, 0).unwrap(), r(-1));
        assert_eq!(robustness(&table1(), &eventually, 0).unwrap(), r(1));
    }

    #[test]
    fn until_uses_conventional_operand_roles() {
        // left must hold until right becomes robust
        let traj = Trajectory::new(vec![(5, 0).into(), (5, 0).into(), (5, 9).into()]).unwrap();
        let f = parse_stl("x > 3 U[0,3) y > 8", &xy()).unwrap();
        assert_eq!(robustness(&traj, &f, 0).unwrap(), r(1));
        // with the roles swapped, y > 8 would have to hold before x > 3 does
        let g = parse_stl("y > 8 U[1,3) x > 3", &xy()).unwrap();
        assert!(robustness(&traj, &g, 0).unwrap() < r(0));
    }

    #[test]
    fn horizon_examples() {
        let f = parse_stl(&format!("G[0,4)({PSI})"), &xy()).unwrap();
        assert_eq!(horizon(&f), Horizon::Finite(3));
        assert_eq!(horizon(&parse_stl("x > 1", &xy()).unwrap()), Horizon::Finite(0));
        let g = parse_stl("F[0,40) x > 1 & F[0,40) y > 1", &xy()).unwrap();
        assert_eq!(horizon(&g), Horizon::Finite(39));
        let h = parse_stl("G[0,inf) x > 1", &xy()).unwrap();
        assert_eq!(horizon(&h), Horizon::Unbounded);
        let u = parse_stl("x > 1 U[2,5) F[1,3) y > 0", &xy()).unwrap();
        assert_eq!(horizon(&u), Horizon::Finite(4 + 2));
    }

    #[test]
    fn truncation_clips_to_execution_length() {
        let f = parse_stl("F[0,40) x > 1", &xy()).unwrap();
        let t = truncate_horizon(&f, 12).unwrap();
        assert_eq!(t, parse_stl("F[0,12) x > 1", &xy()).unwrap());
    }

    #[test]
    fn truncation_is_a_no_op_when_everything_fits() {
        let f = parse_stl("G[0,4) (F[1,3) x > 1) & y < 3", &xy()).unwrap();
        assert_eq!(truncate_horizon(&f, 10).unwrap(), f);
        assert_eq!(truncate_horizon(&f, 6).unwrap(), f);
    }

    #[test]
    fn unbounded_outer_is_clipped_to_the_trajectory() {
        let f = parse_stl("G[0,inf) x > 1", &xy()).unwrap();
        assert_eq!(truncate_horizon(&f, 200).unwrap(), parse_stl("G[0,200) x > 1", &xy()).unwrap());
        let states: Vec<State> = (0..200).map(|i| State::from(((i * 37) % 23, 0))).collect();
        let traj = Trajectory::new(states.clone()).unwrap();
        let expected = states.iter().map(|s| r(s.0[0] - 1)).min().unwrap();
        let clipped = truncate_horizon(&f, 200).unwrap();
        assert_eq!(robustness(&traj, &clipped, 0).unwrap(), expected);
    }

    #[test]
    fn nested_truncation_keeps_inner_windows() {
        let f = parse_stl("G[0,inf)(F[0,40) x > 1 & F[0,40) y > 1)", &xy()).unwrap();
        let short = truncate_horizon(&f, 12).unwrap();
        assert_eq!(short, parse_stl("G[0,1)(F[0,12) x > 1 & F[0,12) y > 1)", &xy()).unwrap());
        let long = truncate_horizon(&f, 50).unwrap();
        assert_eq!(long, parse_stl("G[0,11)(F[0,40) x > 1 & F[0,40) y > 1)", &xy()).unwrap());
    }

    #[test]
    fn window_starting_past_the_end_moves_onto_last_sample() {
        let f = parse_stl("F[5,9) x > 1", &xy()).unwrap();
        let t = truncate_horizon(&f, 3).unwrap();
        assert_eq!(t, parse_stl("F[2,3) x > 1", &xy()).unwrap());
        let g = parse_stl("F[2,9) x > 1", &xy()).unwrap();
        assert_eq!(truncate_horizon(&g, 3).unwrap(), parse_stl("F[2,3) x > 1", &xy()).unwrap());
    }

    #[test]
    fn single_sample_collapses_every_window() {
        let f = parse_stl("F[0,40) x > 1", &xy()).unwrap();
        let t = truncate_horizon(&f, 1).unwrap();
        assert_eq!(horizon(&t), Horizon::Finite(0));
        let traj = Trajectory::new(vec![(4, 0).into()]).unwrap();
        assert_eq!(robustness(&traj, &t, 0).unwrap(), r(3));
    }

    #[test]
    fn zero_length_truncation_is_an_error() {
        let f = parse_stl("x > 1", &xy()).unwrap();
        assert_eq!(truncate_horizon(&f, 0).unwrap_err(), StlError::InvalidTruncation);
    }

    #[test]
    fn evaluation_errors() {
        let traj = table1();
        let long = parse_stl("G[0,5) x > 1", &xy()).unwrap();
        assert!(matches!(
            robustness(&traj, &long, 0),
            Err(StlError::HorizonExceedsTrajectory { horizon: 4, time: 0, len: 4 })
        ));
        let unbounded = parse_stl("G[0,inf) x > 1", &xy()).unwrap();
        assert_eq!(robustness(&traj, &unbounded, 0).unwrap_err(), StlError::Unbounded);
    }

    #[test]
    fn greater_than_is_the_negation_of_less_than() {
        let lt = Predicate::simple(0, "x", Comparator::Lt, 4);
        let gt = Predicate::simple(0, "x", Comparator::Gt, 4);
        for x in -3..8 {
            let s = State::from((x, 0));
            assert_eq!(gt.robustness(&s).unwrap(), -lt.robustness(&s).unwrap());
        }
    }
}
