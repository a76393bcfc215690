mod common;

use common::*;
use hstl::stl::{horizon, lumped_reward, parse_stl, robustness, Bound, Formula, Horizon, Interval, Monitor, Robustness, Trajectory};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn case(seed: u64) -> (Formula, Trajectory) {
    random_case(&mut ChaCha8Rng::seed_from_u64(seed))
}

fn zero() -> Robustness {
    Robustness::from_integer(0)
}

fn widen(w: &Interval) -> Interval {
    match w.hi() {
        Bound::Finite(h) => Interval::new(w.lo(), h + 1).unwrap(),
        Bound::Unbounded => *w,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn sign_agrees_with_boolean_semantics(seed in any::<u64>()) {
        let (f, traj) = case(seed);
        let r = robustness(&traj, &f, 0).unwrap();
        let holds = satisfies(traj.states(), &f, 0);
        if r > zero() {
            prop_assert!(holds, "{f} has robustness {r} but is false");
        } else if r < zero() {
            prop_assert!(!holds, "{f} has robustness {r} but is true");
        }
    }

    #[test]
    fn negation_and_temporal_dualities(seed in any::<u64>()) {
        let (f, traj) = case(seed);
        let r = robustness(&traj, &f, 0).unwrap();
        prop_assert_eq!(robustness(&traj, &Formula::not(f.clone()), 0).unwrap(), -r);
        let w = Interval::new(0, 1).unwrap();
        let ev = Formula::eventually(w, f.clone());
        let dual = Formula::not(Formula::always(w, Formula::not(f.clone())));
        prop_assert_eq!(robustness(&traj, &ev, 0).unwrap(), robustness(&traj, &dual, 0).unwrap());
    }

    #[test]
    fn de_morgan(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_formula(&mut rng, 2);
        let b = random_formula(&mut rng, 2);
        let need = needed(&a).max(needed(&b)) + 1;
        let traj = Trajectory::new(random_states(&mut rng, need + 1)).unwrap();
        let lhs = Formula::not(Formula::and(a.clone(), b.clone()));
        let rhs = Formula::or(Formula::not(a.clone()), Formula::not(b.clone()));
        prop_assert_eq!(robustness(&traj, &lhs, 0).unwrap(), robustness(&traj, &rhs, 0).unwrap());
        let lhs = Formula::not(Formula::or(a.clone(), b.clone()));
        let rhs = Formula::and(Formula::not(a), Formula::not(b));
        prop_assert_eq!(robustness(&traj, &lhs, 0).unwrap(), robustness(&traj, &rhs, 0).unwrap());
    }

    #[test]
    fn wider_windows_are_monotone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_formula(&mut rng, 1);
        let w = Interval::new(rand::Rng::gen_range(&mut rng, 0..2), 3).unwrap();
        let traj = Trajectory::new(random_states(&mut rng, needed(&g) + 4)).unwrap();
        let f_narrow = robustness(&traj, &Formula::eventually(w, g.clone()), 0).unwrap();
        let f_wide = robustness(&traj, &Formula::eventually(widen(&w), g.clone()), 0).unwrap();
        prop_assert!(f_wide >= f_narrow);
        let g_narrow = robustness(&traj, &Formula::always(w, g.clone()), 0).unwrap();
        let g_wide = robustness(&traj, &Formula::always(widen(&w), g), 0).unwrap();
        prop_assert!(g_wide <= g_narrow);
    }

    #[test]
    fn printing_then_parsing_is_identity(seed in any::<u64>()) {
        let (f, _) = case(seed);
        let text = f.to_string();
        prop_assert_eq!(parse_stl(&text, &xy()).unwrap(), f, "{}", text);
    }

    #[test]
    fn monitor_matches_direct_evaluation(seed in any::<u64>()) {
        let (f, traj) = case(seed);
        let m = Monitor::new(&f);
        let table = m.leaf_table(traj.states()).unwrap();
        let h = horizon(&f).finite().unwrap();
        for t in 0..traj.len() - h {
            prop_assert_eq!(m.robustness_at(&table, t).unwrap(), robustness(&traj, &f, t).unwrap());
        }
    }

    #[test]
    fn lumped_reward_is_plain_robustness_when_nothing_is_clipped(seed in any::<u64>()) {
        let (f, traj) = case(seed);
        prop_assert_eq!(lumped_reward(&traj, &f).unwrap(), robustness(&traj, &f, 0).unwrap());
    }

    #[test]
    fn horizon_matches_independent_count(seed in any::<u64>()) {
        let (f, _) = case(seed);
        prop_assert_eq!(horizon(&f), Horizon::Finite(needed(&f)));
    }

    #[test]
    fn persistent_specs_score_the_worst_window(seed in any::<u64>(), len in 1usize..6) {
        // G[0,inf) over a bounded body, once clipped, is the minimum of the
        // body over every start that still fits
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let body = Formula::eventually(Interval::new(0, 2).unwrap(), random_formula(&mut rng, 1));
        let h = needed(&body);
        let traj = Trajectory::new(random_states(&mut rng, len + h)).unwrap();
        let spec = Formula::always(Interval::unbounded(0), body.clone());
        let expected = (0..len).map(|t| robustness(&traj, &body, t).unwrap()).min().unwrap();
        prop_assert_eq!(lumped_reward(&traj, &spec).unwrap(), expected);
    }
}
