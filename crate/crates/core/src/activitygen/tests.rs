use proptest::prelude::*;

use super::*;
use crate::ids::PersonId;
use crate::synthpop::{Household, Person};
use crate::types::{Coord, ParkingLevel, Sex};

fn world() -> (FacilitySet, OdModel) {
    let zones: Vec<Zone> = (0..4)
        .map(|i| Zone {
            id: ZoneId(i),
            min: Coord::new((i % 2) as f64 * 1000.0, (i / 2) as f64 * 1000.0),
            max: Coord::new((i % 2) as f64 * 1000.0 + 1000.0, (i / 2) as f64 * 1000.0 + 1000.0),
            parking: ParkingLevel::Medium,
        })
        .collect();
    let mut facilities = Vec::new();
    for z in &zones {
        let c = z.centroid();
        facilities.push(Facility {
            id: FacilityId(z.id.0 * 10),
            zone_id: z.id,
            coord: c,
            types: vec![ActivityType::Home],
            size: 1.0,
        });
        facilities.push(Facility {
            id: FacilityId(z.id.0 * 10 + 1),
            zone_id: z.id,
            coord: Coord::new(c.x + 200.0, c.y),
            types: ActivityType::ALL[1..].to_vec(),
            size: 2.0,
        });
        facilities.push(Facility {
            id: FacilityId(z.id.0 * 10 + 2),
            zone_id: z.id,
            coord: Coord::new(c.x - 200.0, c.y + 100.0),
            types: vec![ActivityType::Work, ActivityType::Shopping],
            size: 1.0,
        });
    }
    let set = FacilitySet::new(zones, facilities).unwrap();
    let od = OdModel::gravity(&set, 2000.0).unwrap();
    (set, od)
}

fn subject(cars: u32) -> PlanSubject {
    PlanSubject {
        spc: Spc::Employed,
        home_zone: ZoneId(2),
        home_facility: FacilityId(20),
        household_cars: cars,
    }
}

fn point(sec: u32) -> EmpiricalDistribution {
    EmpiricalDistribution::new(vec![DistBin {
        start_sec: sec,
        end_sec: sec + 1,
        weight: 1.0,
    }])
    .unwrap()
}

#[test]
fn stay_home_chain_gives_single_activity() {
    let (set, od) = world();
    let mut rng = rng::stream(1, Domain::Person, &[0]);
    let plan = build_initial_plan(
        &subject(1),
        &ActivityChain::stay_home(),
        &od,
        &set,
        &TimeModels::defaults(),
        &PlanGenConfig::default(),
        &mut rng,
    )
    .unwrap();
    assert_eq!(plan.activities.len(), 1);
    assert!(plan.legs.is_empty());
    assert_eq!(plan.activities[0].facility, FacilityId(20));
    assert_eq!(plan.activities[0].planned_end_sec, None);
}

#[test]
fn home_work_home_assembly() {
    let (set, od) = world();
    let mut models = TimeModels::defaults();
    models.insert(ActivityType::Work, DistKind::StartTime, point(8 * 3600));
    models.insert(ActivityType::Work, DistKind::Duration, point(8 * 3600));
    let mut rng = rng::stream(2, Domain::Person, &[0]);
    let chain: ActivityChain = "H-W-H".parse().unwrap();
    let plan = build_initial_plan(&subject(1), &chain, &od, &set, &models, &PlanGenConfig::default(), &mut rng).unwrap();
    let ends: Vec<Option<u32>> = plan.activities.iter().map(|a| a.planned_end_sec).collect();
    assert_eq!(ends, vec![Some(28_800), Some(57_600), None]);
    assert_eq!(plan.legs.len(), 2);
    assert_eq!(plan.activities[2].facility, FacilityId(20));
}

#[test]
fn carless_households_never_drive() {
    let (set, od) = world();
    let chain: ActivityChain = "H-W-P-H".parse().unwrap();
    for seed in 0..300 {
        let mut rng = rng::stream(seed, Domain::Person, &[0]);
        let plan = build_initial_plan(
            &subject(0),
            &chain,
            &od,
            &set,
            &TimeModels::defaults(),
            &PlanGenConfig::default(),
            &mut rng,
        )
        .unwrap();
        assert!(plan.legs.iter().all(|l| l.mode != Mode::Car));
    }
}

#[test]
fn mode_seed_shares_are_respected() {
    let shares = ModeSeedShares::default();
    let mut rng = rng::stream(3, Domain::Person, &[0]);
    let n = 20_000;
    let mut counts = [0usize; 3];
    for _ in 0..n {
        match shares.draw(true, &mut rng) {
            Mode::Car => counts[0] += 1,
            Mode::Pt => counts[1] += 1,
            Mode::Walk => counts[2] += 1,
            Mode::RoboTaxi => unreachable!(),
        }
    }
    for (c, p) in counts.iter().zip([0.55, 0.15, 0.30]) {
        assert!((*c as f64 / n as f64 - p).abs() < 0.02);
    }
    let n_walk = (0..n).filter(|_| shares.draw(false, &mut rng) == Mode::Walk).count();
    assert!((n_walk as f64 / n as f64 - 0.30 / 0.45).abs() < 0.02);
}

#[test]
fn repeated_work_reuses_the_same_workplace() {
    let (set, od) = world();
    let chain: ActivityChain = "H-W-O-W-H".parse().unwrap();
    for seed in 0..100 {
        let mut rng = rng::stream(seed, Domain::Person, &[0]);
        let plan = build_initial_plan(
            &subject(1),
            &chain,
            &od,
            &set,
            &TimeModels::defaults(),
            &PlanGenConfig::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(plan.activities[1].facility, plan.activities[3].facility);
    }
}

#[test]
fn overrunning_times_fall_back_to_even_spacing() {
    let mut models = TimeModels::defaults();
    models.insert(ActivityType::Work, DistKind::StartTime, point(20 * 3600));
    models.insert(ActivityType::Work, DistKind::Duration, point(10 * 3600));
    let chain: ActivityChain = "H-W-P-H".parse().unwrap();
    let mut rng = rng::stream(4, Domain::Person, &[0]);
    let (ends, spaced) = assemble_end_times(&chain, &models, &PlanGenConfig::default(), &mut rng).unwrap();
    assert!(spaced);
    assert_eq!(ends, vec![72_000, 72_900, 73_800]);

    models.insert(ActivityType::Work, DistKind::StartTime, point(86_000));
    let (ends, spaced) = assemble_end_times(&chain, &models, &PlanGenConfig::default(), &mut rng).unwrap();
    assert!(spaced);
    assert_eq!(ends, vec![83_700, 84_600, 85_500]);
}

/// Critical values of the χ² distribution at the 1% level, by degrees of freedom.
const CHI2_CRIT_01: [f64; 20] = [
    0.0, 6.635, 9.210, 11.345, 13.277, 15.086, 16.812, 18.475, 20.090, 21.666, 23.209, 24.725, 26.217,
    27.688, 29.141, 30.578, 32.000, 33.409, 34.805, 36.191,
];

#[test]
fn chain_frequencies_pass_chi_square() {
    let table = default_chain_table();
    let n = 10_000usize;
    for spc in Spc::ALL {
        let row = table.row(spc).unwrap();
        let mut rng = rng::stream(99, Domain::Person, &[spc.index() as u64]);
        let mut observed = vec![0usize; row.len()];
        for _ in 0..n {
            let c = assign_activity_chain(spc, &table, &mut rng).unwrap();
            observed[row.iter().position(|(rc, _)| *rc == c).unwrap()] += 1;
        }
        let mut stat = 0.0;
        let mut cells = 0;
        for ((_, f), o) in row.iter().zip(&observed) {
            if *f == 0.0 {
                assert_eq!(*o, 0);
                continue;
            }
            let e = f * n as f64;
            stat += (*o as f64 - e).powi(2) / e;
            cells += 1;
        }
        assert!(stat < CHI2_CRIT_01[cells - 1], "{spc}: χ² = {stat} over {cells} cells");
    }
}

fn tiny_population() -> Population {
    let mut pop = Population::default();
    for h in 0..30u32 {
        let zone = ZoneId(h % 4);
        let ids = [PersonId(2 * h), PersonId(2 * h + 1)];
        pop.households.push(Household {
            id: HouseholdId(h),
            zone_id: zone,
            income_eur: 30_000.0,
            cars: h % 3,
            member_ids: ids.to_vec(),
        });
        for (k, id) in ids.into_iter().enumerate() {
            let (age, spc) = if k == 0 { (40, Spc::Employed) } else { (10, Spc::Under14) };
            pop.persons.push(Person {
                id,
                household_id: HouseholdId(h),
                age,
                sex: Sex::Female,
                spc,
                zone_id: zone,
            });
        }
    }
    pop
}

#[test]
fn generated_plans_are_valid_and_deterministic() {
    let (set, od) = world();
    let pop = tiny_population();
    let run = || {
        generate_plans(
            &pop,
            &default_chain_table(),
            &od,
            &set,
            &TimeModels::defaults(),
            &PlanGenConfig::default(),
            5,
        )
        .unwrap()
    };
    let a = run();
    assert_eq!(a, run());
    assert_eq!(a.plans.len(), pop.persons.len());
    for (p, plan) in pop.persons.iter().zip(&a.plans) {
        plan.validate().unwrap();
        let hh = pop.household(p.household_id).unwrap();
        let home = a.home_facilities[&hh.id];
        assert_eq!(set.get(home).unwrap().zone_id, hh.zone_id);
        for act in &plan.activities {
            if act.kind == ActivityType::Home {
                assert_eq!(act.facility, home);
            }
        }
        if hh.cars == 0 {
            assert!(plan.legs.iter().all(|l| l.mode != Mode::Car));
        }
    }
}

#[test]
fn plans_survive_csv_round_trip() {
    let (set, od) = world();
    let pop = tiny_population();
    let g = generate_plans(
        &pop,
        &default_chain_table(),
        &od,
        &set,
        &TimeModels::defaults(),
        &PlanGenConfig::default(),
        6,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plans_initial.csv");
    io::write_plans(&path, pop.persons.iter().map(|p| p.id).zip(&g.plans)).unwrap();
    let back = io::read_plans(&path).unwrap();
    assert_eq!(back.len(), g.plans.len());
    for ((pid, plan), (p, orig)) in back.iter().zip(pop.persons.iter().zip(&g.plans)) {
        assert_eq!(*pid, p.id);
        assert_eq!(plan, orig);
    }
}

#[test]
fn inputs_survive_csv_round_trip() {
    let (set, od) = world();
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    io::write_chain_table(&p("chains.csv"), &default_chain_table()).unwrap();
    assert_eq!(io::read_chain_table(&p("chains.csv")).unwrap(), default_chain_table());
    io::write_od_model(&p("od.csv"), &od).unwrap();
    assert_eq!(io::read_od_model(&p("od.csv")).unwrap(), od);
    io::write_facilities(&p("facilities.csv"), set.all()).unwrap();
    assert_eq!(io::read_facilities(&p("facilities.csv")).unwrap(), set.all());
    let zones: Vec<Zone> = set.zones().cloned().collect();
    io::write_zones(&p("zones.csv"), &zones).unwrap();
    assert_eq!(io::read_zones(&p("zones.csv")).unwrap(), zones);
    io::write_time_models(&p("time.csv"), &TimeModels::defaults()).unwrap();
    assert_eq!(io::read_time_models(&p("time.csv")).unwrap(), TimeModels::defaults());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_default_chain_yields_a_valid_plan(seed in any::<u64>(), idx in 0usize..20, cars in 0u32..3) {
        let (set, od) = world();
        let table = default_chain_table();
        let chain = table.row(Spc::Employed).unwrap()[idx].0.clone();
        let mut rng = rng::stream(seed, Domain::Person, &[0]);
        let plan = build_initial_plan(
            &subject(cars), &chain, &od, &set, &TimeModels::defaults(), &PlanGenConfig::default(), &mut rng,
        ).unwrap();
        prop_assert!(plan.validate().is_ok());
        prop_assert_eq!(plan.legs.len() + 1, plan.activities.len());
        prop_assert_eq!(plan.chain(), chain.types().to_vec());
        let last_end = plan.activities.iter().filter_map(|a| a.planned_end_sec).max().unwrap_or(0);
        prop_assert!(last_end < DAY_SEC);
    }
}
