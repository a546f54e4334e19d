use super::*;
use crate::ids::FacilityId;
use crate::plan::{Activity, Leg};
use crate::types::ActivityType;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn plan(ends: &[u32], modes: &[Mode], score: Option<f64>) -> DailyPlan {
    let mut acts: Vec<Activity> = ends
        .iter()
        .enumerate()
        .map(|(i, e)| Activity::new(if i == 0 { ActivityType::Home } else { ActivityType::Work }, FacilityId(i as u32), Some(*e)))
        .collect();
    acts.push(Activity::new(ActivityType::Home, FacilityId(0), None));
    let mut p = DailyPlan::new(acts, modes.iter().map(|m| Leg::new(*m)).collect()).unwrap();
    p.score = score;
    p
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn single_plan_always_selected() {
    let plans = [plan(&[28_800], &[Mode::Walk], Some(-3.0))];
    let mut r = rng(1);
    for _ in 0..100 {
        assert_eq!(select_plan(&plans, 1.0, &mut r).unwrap(), 0);
    }
}

#[test]
fn unscored_plan_cannot_be_selected() {
    let plans = [plan(&[28_800], &[Mode::Walk], None)];
    assert!(select_plan(&plans, 1.0, &mut rng(1)).is_err());
}

fn share_of_first(a: f64, b: f64) -> f64 {
    let plans = [plan(&[28_800], &[Mode::Walk], Some(a)), plan(&[28_800], &[Mode::Pt], Some(b))];
    let mut r = rng(42);
    let n = 10_000;
    let hits = (0..n).filter(|_| select_plan(&plans, 1.0, &mut r).unwrap() == 0).count();
    hits as f64 / n as f64
}

#[test]
fn logit_selection_frequencies() {
    assert!((share_of_first(2.0, 2.0) - 0.5).abs() < 0.02);
    // exp(ln 3) : 1 gives 3/4.
    assert!((share_of_first(3f64.ln(), 0.0) - 0.75).abs() < 0.02);
}

#[test]
fn mode_mutation_only_alternative() {
    let p = plan(&[28_800], &[Mode::Walk], None);
    let mut r = rng(3);
    for _ in 0..50 {
        assert_eq!(mutate_mode(&p, &[Mode::Walk, Mode::Pt], &mut r).legs[0].mode, Mode::Pt);
    }
}

#[test]
fn carless_agents_never_get_a_car() {
    let p = plan(&[28_800, 50_000], &[Mode::Walk, Mode::Pt], None);
    let modes = available_modes(0, true);
    let mut r = rng(4);
    let mut cur = p;
    for _ in 0..10_000 {
        cur = mutate_mode(&cur, &modes, &mut r);
        assert!(cur.legs.iter().all(|l| l.mode != Mode::Car));
    }
}

#[test]
fn mode_mutation_changes_exactly_one_leg() {
    let p = plan(&[25_000, 40_000, 60_000], &[Mode::Car, Mode::Walk, Mode::Pt], Some(1.0));
    let modes = available_modes(1, true);
    let mut r = rng(5);
    for _ in 0..500 {
        let c = mutate_mode(&p, &modes, &mut r);
        let diff = c.legs.iter().zip(&p.legs).filter(|(a, b)| a.mode != b.mode).count();
        assert_eq!(diff, 1);
        assert_eq!(c.score, None);
        assert_eq!(c.activities, p.activities);
    }
}

#[test]
fn single_activity_plan_unchanged_by_time_mutation() {
    let p = DailyPlan::new(vec![Activity::new(ActivityType::Home, FacilityId(0), None)], vec![]).unwrap();
    assert_eq!(mutate_end_times(&p, 1800.0, 300, &mut rng(1)), p);
}

#[test]
fn time_mutation_clamps_to_neighbours() {
    let p = plan(&[28_800, 29_000], &[Mode::Walk, Mode::Walk], None);
    let mut r = rng(9);
    for _ in 0..2000 {
        let c = mutate_end_times(&p, 1800.0, 300, &mut r);
        c.validate().unwrap();
        let e: Vec<u32> = c.activities[..2].iter().map(|a| a.planned_end_sec.unwrap()).collect();
        if e[0] != 28_800 {
            assert!(e[0] <= 28_700);
        }
        if e[1] != 29_000 {
            assert!(e[1] >= 29_100);
        }
    }
}

#[test]
fn time_shift_distribution_before_clamping() {
    // Wide room on both sides so no draw is clamped.
    let p = plan(&[43_200], &[Mode::Walk], None);
    let mut r = rng(11);
    let shifts: Vec<f64> = (0..10_000)
        .map(|_| mutate_end_times(&p, 1800.0, 300, &mut r).activities[0].planned_end_sec.unwrap() as f64 - 43_200.0)
        .collect();
    let mean = shifts.iter().sum::<f64>() / shifts.len() as f64;
    let sd = (shifts.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (shifts.len() - 1) as f64).sqrt();
    assert!(mean.abs() < 60.0, "mean {mean}");
    assert!((sd - 1800.0).abs() < 0.15 * 1800.0, "sd {sd}");
}

fn subject(i: u32) -> ReplanSubject {
    ReplanSubject {
        person: PersonId(i),
        modes: available_modes(1, true),
    }
}

fn full_memory() -> PlanMemory {
    let mut m = PlanMemory::new(plan(&[28_800], &[Mode::Walk], Some(-1.0)));
    for (i, s) in [-5.0, -2.0, -3.0, -4.0].into_iter().enumerate() {
        m.insert(plan(&[28_800 + 60 * (i as u32 + 1)], &[Mode::Walk], Some(s)), 5);
    }
    m
}

#[test]
fn pure_selection_keeps_memory() {
    let mut mems = vec![full_memory(); 20];
    let before = mems.clone();
    let cfg = ReplanningConfig {
        weights: StrategyWeights { select: 1.0, mode: 0.0, time: 0.0 },
        ..Default::default()
    };
    let subjects: Vec<_> = (0..20).map(subject).collect();
    assert_eq!(evolve_iteration(&mut mems, &subjects, &cfg, true, 1, 3).unwrap(), 0);
    for (a, b) in mems.iter().zip(&before) {
        assert_eq!(a.plans, b.plans);
    }
}

#[test]
fn mutation_at_capacity_evicts_worst() {
    let mut mems = vec![full_memory(); 10];
    let cfg = ReplanningConfig {
        weights: StrategyWeights { select: 0.0, mode: 1.0, time: 0.0 },
        ..Default::default()
    };
    let subjects: Vec<_> = (0..10).map(subject).collect();
    assert_eq!(evolve_iteration(&mut mems, &subjects, &cfg, true, 1, 3).unwrap(), 10);
    for m in &mems {
        assert_eq!(m.plans.len(), 5);
        assert_eq!(m.selected_plan().score, None);
        assert!(m.plans.iter().all(|p| p.score != Some(-5.0)));
    }
}

#[test]
fn no_new_plans_after_innovation_stop() {
    let mut mems = vec![full_memory(); 30];
    let cfg = ReplanningConfig {
        weights: StrategyWeights { select: 0.0, mode: 0.5, time: 0.5 },
        ..Default::default()
    };
    let subjects: Vec<_> = (0..30).map(subject).collect();
    assert_eq!(evolve_iteration(&mut mems, &subjects, &cfg, false, 1, 90).unwrap(), 0);
}

#[test]
fn evolution_is_deterministic() {
    let cfg = ReplanningConfig::default();
    let subjects: Vec<_> = (0..50).map(subject).collect();
    let mut a = vec![full_memory(); 50];
    let mut b = a.clone();
    evolve_iteration(&mut a, &subjects, &cfg, true, 77, 1).unwrap();
    evolve_iteration(&mut b, &subjects, &cfg, true, 77, 1).unwrap();
    assert_eq!(a, b);
}

#[test]
fn selected_plan_survives_eviction() {
    let mut m = PlanMemory::new(plan(&[28_800], &[Mode::Walk], Some(-100.0)));
    m.insert(plan(&[30_000], &[Mode::Walk], None), 1);
    assert_eq!(m.plans.len(), 1);
    assert_eq!(m.selected_plan().activities[0].planned_end_sec, Some(30_000));
}

#[test]
fn score_recording() {
    let cfg = ReplanningConfig::default();
    let mut m = PlanMemory::new(plan(&[28_800], &[Mode::Walk], None));
    record_score(&mut m, 10.0, &cfg, false);
    assert_eq!(m.selected_plan().score, Some(10.0));
    record_score(&mut m, 20.0, &cfg, false);
    assert_eq!(m.selected_plan().score, Some(15.0));
    record_score(&mut m, 100.0, &cfg, true);
    assert_eq!(m.selected_plan().score, Some(15.0));
}

#[test]
fn convergence_examples() {
    assert!(has_converged(&[5.0; 20], 10, 1e-3));
    assert!(!has_converged(&[5.0; 19], 10, 1e-3));
    let rising: Vec<f64> = (0..20).map(|i| 100.0 * 1.01f64.powi(i)).collect();
    assert!(!has_converged(&rising, 10, 1e-3));
}

#[test]
fn schedule_cuts_innovation_on_convergence() {
    let mut s = Schedule::new(100, 0.8);
    assert_eq!(s.innovation_stop, 80);
    assert!(s.innovating(79) && !s.innovating(80));
    s.observe(30, true);
    assert_eq!(s.innovation_stop, 30);
    assert!(!s.should_stop(35, true, 10));
    assert!(s.should_stop(40, true, 10));
    assert!(s.should_stop(99, false, 10));
}

proptest! {
    #[test]
    fn memory_bounded_and_selected_present(scores in proptest::collection::vec(-50.0f64..50.0, 1..15), cap in 1usize..6) {
        let mut m = PlanMemory::new(plan(&[20_000], &[Mode::Walk], Some(0.0)));
        for (i, s) in scores.iter().enumerate() {
            let p = plan(&[20_000 + i as u32 + 1], &[Mode::Walk], Some(*s));
            m.insert(p.clone(), cap);
            prop_assert!(m.plans.len() <= cap);
            prop_assert_eq!(m.selected_plan(), &p);
        }
    }

    #[test]
    fn time_mutation_keeps_plans_valid(ends in proptest::collection::btree_set(1000u32..80_000, 1..5), seed in 0u64..500) {
        let mut ends: Vec<u32> = ends.into_iter().collect();
        // Spread so every activity has at least the minimum duration.
        for (i, e) in ends.iter_mut().enumerate() {
            *e = *e / 2 + 400 * i as u32 * 4;
        }
        ends.sort();
        ends.dedup();
        prop_assume!(ends.windows(2).all(|w| w[1] - w[0] >= 600));
        let modes = vec![Mode::Walk; ends.len()];
        let p = plan(&ends, &modes, None);
        let c = mutate_end_times(&p, 1800.0, 300, &mut rng(seed));
        prop_assert!(c.validate().is_ok());
        let changed = c.activities.iter().zip(&p.activities).filter(|(a, b)| a.planned_end_sec != b.planned_end_sec).count();
        prop_assert!(changed <= 1);
    }
}
