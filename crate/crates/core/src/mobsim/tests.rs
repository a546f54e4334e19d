use super::events::EventType;
use super::*;
use crate::fleet::{FleetConfig, FleetState, TaskType};
use crate::ids::{FacilityId, LinkId, PersonId};
use crate::network::tests::{link, node};
use crate::network::{Link, Network};
use crate::plan::{Activity, DailyPlan, Leg, LegOutcome};
use crate::types::{ActivityType, Mode};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ttfield::TravelTimeField;

/// Nodes 0..=n along the x axis, forward links 100+i and backward links 200+i.
pub(crate) fn line(n: u32, len: f64, speed: f64) -> Network {
    let nodes = (0..=n).map(|i| node(i, i as f64 * len, 0.0)).collect();
    let mut links = Vec::new();
    for i in 0..n {
        links.push(link(100 + i, i, i + 1, len, speed));
        links.push(link(200 + i, i + 1, i, len, speed));
    }
    Network::new(nodes, links).unwrap()
}

/// Facility `i` sits on forward link 100+i.
pub(crate) fn line_locator(net: &Network, n: u32) -> Locator {
    Locator::from_places((0..n).map(|i| {
        let l = net.link_idx(LinkId(100 + i)).unwrap();
        (FacilityId(i), l, net.to_coord(l))
    }))
}

fn trip(from: u32, to: u32, end: u32, mode: Mode) -> DailyPlan {
    DailyPlan::new(
        vec![
            Activity::new(ActivityType::Home, FacilityId(from), Some(end)),
            Activity::new(ActivityType::Work, FacilityId(to), None),
        ],
        vec![Leg::new(mode)],
    )
    .unwrap()
}

fn run(
    plans: &mut [DailyPlan],
    net: &Network,
    loc: &Locator,
    fleet: Option<FleetState>,
    cfg: &MobsimConfig,
) -> DayResult {
    let tt = TravelTimeField::free_flow(net);
    let mut agents: Vec<DayAgent> = plans
        .iter_mut()
        .enumerate()
        .map(|(i, p)| DayAgent {
            person: PersonId(i as u32),
            plan: p,
        })
        .collect();
    run_day(&mut agents, net, loc, &tt, fleet, cfg).unwrap()
}

fn of_kind(r: &DayResult, k: EventType) -> Vec<&events::Event> {
    r.events.events.iter().filter(|e| e.kind == k).collect()
}

#[test]
fn single_car_on_free_link_takes_length_over_speed() {
    let net = line(2, 500.0, 10.0);
    let loc = line_locator(&net, 2);
    let mut plans = vec![trip(0, 1, 1000, Mode::Car)];
    let r = run(&mut plans, &net, &loc, None, &MobsimConfig::default());
    let enter = of_kind(&r, EventType::LinkEnter);
    let leave = of_kind(&r, EventType::LinkLeave);
    assert_eq!(enter.len(), 1);
    assert_eq!(enter[0].link, Some(LinkId(101)));
    assert_eq!(enter[0].time_sec, 1000);
    assert_eq!(leave[0].time_sec, 1050);
    let leg = plans[0].legs[0].realized.unwrap();
    assert_eq!((leg.departure_sec, leg.arrival_sec), (1000, 1050));
    assert!((leg.distance_km - 0.5).abs() < 1e-12);
    assert_eq!(plans[0].activities[1].realized.unwrap().start_sec, 1050);
    assert_eq!(plans[0].activities[1].realized.unwrap().end_sec, 86_400);
}

#[test]
fn walk_leg_of_one_km_takes_936_seconds() {
    let net = line(3, 500.0, 10.0);
    let loc = line_locator(&net, 3);
    let mut plans = vec![trip(0, 2, 3600, Mode::Walk)];
    let r = run(&mut plans, &net, &loc, None, &MobsimConfig::default());
    let leg = plans[0].legs[0].realized.unwrap();
    assert_eq!(leg.arrival_sec - leg.departure_sec, 936);
    assert!((leg.distance_km - 1.3).abs() < 1e-12);
    assert!(of_kind(&r, EventType::LinkEnter).is_empty());
    assert_eq!(of_kind(&r, EventType::Arrival)[0].time_sec, 3600 + 936);
}

#[test]
fn empty_population_gives_empty_log() {
    let net = line(2, 500.0, 10.0);
    let loc = line_locator(&net, 2);
    let r = run(&mut [], &net, &loc, None, &MobsimConfig::default());
    assert!(r.events.is_empty());
    assert_eq!(r.day_end_sec, 86_400);
}

fn plain_link(cap: f64, len: f64) -> Link {
    let mut l = link(1, 0, 1, len, 10.0);
    l.capacity_veh_per_hour = cap;
    l
}

#[test]
fn same_second_entries_exit_one_second_apart() {
    let mut q = LinkQueue::new(&plain_link(3600.0, 500.0), 1.0, 1.0, 7.5);
    let mut down = LinkQueue::new(&plain_link(3600.0, 500.0), 1.0, 1.0, 7.5);
    q.enter(1, 0);
    q.enter(2, 0);
    assert!(process_link_queue(&mut q, 49, &mut down).is_empty());
    assert_eq!(process_link_queue(&mut q, 50, &mut down), vec![1]);
    assert_eq!(process_link_queue(&mut q, 51, &mut down), vec![2]);
}

#[test]
fn full_downstream_blocks_exit() {
    let mut q = LinkQueue::new(&plain_link(3600.0, 500.0), 1.0, 1.0, 7.5);
    let mut down = LinkQueue::new(&plain_link(3600.0, 7.5), 1.0, 1.0, 7.5);
    assert_eq!(down.storage, 1);
    down.enter(9, 0);
    q.enter(1, 0);
    assert!(process_link_queue(&mut q, 60, &mut down).is_empty());
    assert_eq!(q.occupancy(), 1);
    let mut empty = LinkQueue::new(&plain_link(3600.0, 500.0), 1.0, 1.0, 7.5);
    assert!(process_link_queue(&mut empty, 100, &mut down).is_empty());
}

#[test]
fn storage_capacity_from_cells() {
    let mut l = plain_link(3600.0, 100.0);
    l.lanes = 2.0;
    assert_eq!(LinkQueue::new(&l, 1.0, 1.0, 7.5).storage, 26);
    assert_eq!(LinkQueue::new(&plain_link(3600.0, 3.0), 1.0, 1.0, 7.5).storage, 1);
    assert_eq!(LinkQueue::new(&l, 1.0, f64::INFINITY, 7.5).storage, usize::MAX);
}

#[test]
fn slow_link_releases_at_flow_capacity() {
    // 600 veh/h: one token every six seconds.
    let mut q = LinkQueue::new(&plain_link(600.0, 100.0), 1.0, 1.0, 7.5);
    let mut down = LinkQueue::new(&plain_link(3600.0, 500.0), 1.0, 1.0, 7.5);
    for v in 0..3 {
        q.enter(v, 0);
    }
    let mut exits = Vec::new();
    for t in 0..40 {
        for _ in process_link_queue(&mut q, t, &mut down) {
            exits.push(t);
        }
    }
    assert_eq!(exits, vec![10, 16, 22]);
}

/// Grid of side `k` with two-way links; returns facilities on every link.
fn grid(k: u32, cap: f64) -> (Network, Locator) {
    let id = |x: u32, y: u32| y * k + x;
    let nodes = (0..k)
        .flat_map(|y| (0..k).map(move |x| node(id(x, y), x as f64 * 200.0, y as f64 * 200.0)))
        .collect();
    let mut links = Vec::new();
    let mut next = 1;
    for y in 0..k {
        for x in 0..k {
            for (dx, dy) in [(1i32, 0i32), (0, 1)] {
                let (nx, ny) = (x as i32 + dx, y as i32 + dy);
                if nx < k as i32 && ny < k as i32 {
                    let (a, b) = (id(x, y), id(nx as u32, ny as u32));
                    for (f, t) in [(a, b), (b, a)] {
                        let mut l = link(next, f, t, 200.0, 13.9);
                        l.capacity_veh_per_hour = cap;
                        links.push(l);
                        next += 1;
                    }
                }
            }
        }
    }
    let net = Network::new(nodes, links).unwrap();
    let loc = Locator::from_places((0..net.link_count()).map(|l| (FacilityId(l as u32), l, net.to_coord(l))));
    (net, loc)
}

fn crowd(n: usize, links: usize, seed: u64) -> Vec<DailyPlan> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut next = move |m: usize| rng.random_range(0..m);
    (0..n)
        .map(|_| {
            let a = next(links) as u32;
            let b = next(links) as u32;
            let end = 7 * 3600 + next(600) as u32;
            DailyPlan::new(
                vec![
                    Activity::new(ActivityType::Home, FacilityId(a), Some(end)),
                    Activity::new(ActivityType::Work, FacilityId(b), Some(end + 3600)),
                    Activity::new(ActivityType::Home, FacilityId(a), None),
                ],
                vec![Leg::new(Mode::Car), Leg::new(Mode::Car)],
            )
            .unwrap()
        })
        .collect()
}

#[test]
fn unlimited_capacity_reproduces_free_flow_times() {
    let (net, loc) = grid(5, 50.0);
    let mut plans = crowd(300, net.link_count(), 7);
    let expected: Vec<Vec<f64>> = {
        let tt = TravelTimeField::free_flow(&net);
        let mut router = router::Router::new(&net);
        plans
            .iter()
            .map(|p| {
                p.activities
                    .windows(2)
                    .map(|w| {
                        let a = loc.link(w[0].facility).unwrap();
                        let b = loc.link(w[1].facility).unwrap();
                        router.route(&net, &tt, a, b, 0.0).unwrap().expected_sec
                    })
                    .collect()
            })
            .collect()
    };
    run(&mut plans, &net, &loc, None, &MobsimConfig::uncongested());
    for (p, exp) in plans.iter().zip(&expected) {
        for (leg, e) in p.legs.iter().zip(exp) {
            let r = leg.realized.unwrap();
            assert_eq!(r.outcome, LegOutcome::Completed);
            assert_eq!((r.arrival_sec - r.departure_sec) as f64, *e);
        }
    }
}

fn check_conservation(r: &DayResult) {
    let deps = of_kind(r, EventType::Departure).len();
    let arrs = of_kind(r, EventType::Arrival).len();
    let stuck = of_kind(r, EventType::Stuck).iter().filter(|e| e.person.is_some()).count();
    assert_eq!(deps, arrs + stuck);
    for (enters, leaves) in &r.link_counts {
        assert_eq!(enters, leaves);
    }
    assert!(r.events.events.windows(2).all(|w| w[0].time_sec <= w[1].time_sec));
}

#[test]
fn congested_day_conserves_vehicles_and_is_deterministic() {
    let (net, loc) = grid(4, 120.0);
    let base = crowd(400, net.link_count(), 11);
    let mut a = base.clone();
    let mut b = base.clone();
    let ra = run(&mut a, &net, &loc, None, &MobsimConfig::default());
    let rb = run(&mut b, &net, &loc, None, &MobsimConfig::default());
    check_conservation(&ra);
    assert_eq!(ra.events.to_csv_bytes(), rb.events.to_csv_bytes());
    assert_eq!(a, b);
    // Realized link times never beat free flow.
    let mut entered = std::collections::HashMap::new();
    for e in &ra.events.events {
        match e.kind {
            EventType::LinkEnter => {
                entered.insert(e.vehicle, e.time_sec);
            }
            EventType::LinkLeave => {
                let l = net.link_idx(e.link.unwrap()).unwrap();
                let t0 = entered[&e.vehicle];
                let stuck = ra.events.events.iter().any(|s| s.kind == EventType::Stuck && s.vehicle == e.vehicle && s.time_sec == e.time_sec);
                assert!(stuck || e.time_sec - t0 >= net.free_flow_sec(l));
            }
            _ => {}
        }
    }
}

#[test]
fn blocked_vehicles_get_stuck_and_teleported() {
    // One link of 60 veh/h feeding the destination; ten cars depart together.
    let mut net_links = vec![link(1, 0, 1, 100.0, 10.0), link(2, 1, 2, 100.0, 10.0), link(3, 2, 1, 100.0, 10.0), link(4, 1, 0, 100.0, 10.0)];
    net_links[1].capacity_veh_per_hour = 60.0;
    let net = Network::new(vec![node(0, 0.0, 0.0), node(1, 100.0, 0.0), node(2, 200.0, 0.0)], net_links).unwrap();
    let loc = Locator::from_places([(FacilityId(0), 0, net.to_coord(0)), (FacilityId(1), 2, net.to_coord(2))]);
    let cfg = MobsimConfig {
        stuck_time_sec: 30,
        ..Default::default()
    };
    let mut plans: Vec<DailyPlan> = (0..10).map(|_| trip(0, 1, 100, Mode::Car)).collect();
    let r = run(&mut plans, &net, &loc, None, &cfg);
    check_conservation(&r);
    assert!(r.stuck_legs > 0);
    let stuck = plans.iter().filter(|p| p.legs[0].realized.unwrap().outcome == LegOutcome::Stuck).count();
    assert_eq!(stuck, r.stuck_legs);
    assert!(plans.iter().all(|p| p.is_executed()));
}

fn fleet(net: &Network, size: u32, depot: u32) -> FleetState {
    FleetState::new(
        FleetConfig {
            size,
            depots: vec![LinkId(depot)],
            ingress_sec: 60,
            egress_sec: 120,
        },
        net,
    )
    .unwrap()
}

#[test]
fn robotaxi_trip_timeline() {
    let net = line(4, 500.0, 10.0);
    let loc = line_locator(&net, 4);
    let mut plans = vec![trip(1, 3, 1000, Mode::RoboTaxi)];
    let r = run(&mut plans, &net, &loc, Some(fleet(&net, 1, 100)), &MobsimConfig::default());
    check_conservation(&r);
    let leg = plans[0].legs[0].realized.unwrap();
    // Pickup: depot 100 -> 101 is 50 s; ride 101 -> 103 is 100 s.
    assert_eq!(leg.wait_sec, 50);
    assert_eq!(leg.arrival_sec, 1000 + 50 + 60 + 100 + 120);
    assert!((leg.distance_km - 1.0).abs() < 1e-12);
    let f = r.fleet.unwrap();
    let kinds: Vec<TaskType> = f.tasks.iter().map(|t| t.task).collect();
    assert_eq!(
        kinds,
        vec![TaskType::Stay, TaskType::PickupDrive, TaskType::Ingress, TaskType::OccupiedDrive, TaskType::Egress, TaskType::Stay]
    );
    assert!(f.tasks.windows(2).all(|w| w[0].end_sec == w[1].start_sec));
    assert_eq!(f.tasks.last().unwrap().end_sec, 86_400);
    assert_eq!(f.requests[0].pickup_sec, Some(1050));
    assert!((f.vehicles[0].odometer_km - 1.5).abs() < 1e-12);
}

#[test]
fn robotaxi_without_fleet_is_rejected_and_walked() {
    let net = line(3, 500.0, 10.0);
    let loc = line_locator(&net, 3);
    let mut plans = vec![trip(0, 2, 1000, Mode::RoboTaxi)];
    let r = run(&mut plans, &net, &loc, None, &MobsimConfig::default());
    check_conservation(&r);
    let leg = plans[0].legs[0].realized.unwrap();
    assert_eq!(leg.outcome, LegOutcome::Rejected);
    assert_eq!(leg.arrival_sec - leg.departure_sec, 936);
}

#[test]
fn pending_request_served_when_taxi_frees_up() {
    let net = line(4, 500.0, 10.0);
    let loc = line_locator(&net, 4);
    let mut plans = vec![trip(1, 3, 1000, Mode::RoboTaxi), trip(1, 2, 1001, Mode::RoboTaxi)];
    let r = run(&mut plans, &net, &loc, Some(fleet(&net, 1, 100)), &MobsimConfig::default());
    check_conservation(&r);
    let first = plans[0].legs[0].realized.unwrap();
    let second = plans[1].legs[0].realized.unwrap();
    assert_eq!(second.outcome, LegOutcome::Completed);
    // The taxi frees on 103 and drives 203, 202, 201, 101 back to the pickup.
    assert_eq!(second.departure_sec + second.wait_sec, first.arrival_sec + 200);
}

#[test]
fn pending_request_times_out() {
    let net = line(4, 500.0, 10.0);
    let loc = line_locator(&net, 4);
    let cfg = MobsimConfig {
        stuck_time_sec: 100,
        ..Default::default()
    };
    let mut plans = vec![trip(1, 3, 1000, Mode::RoboTaxi), trip(1, 2, 1001, Mode::RoboTaxi)];
    let r = run(&mut plans, &net, &loc, Some(fleet(&net, 1, 100)), &cfg);
    check_conservation(&r);
    assert_eq!(plans[1].legs[0].realized.unwrap().outcome, LegOutcome::Rejected);
    let rejected = of_kind(&r, EventType::Stuck);
    assert_eq!(rejected.len(), 1);
    assert_eq!(rejected[0].time_sec, 1101);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn any_crowd_conserves_and_repeats(n in 1usize..120, seed in 0u64..1000, cap in 30.0f64..900.0) {
        let (net, loc) = grid(3, cap);
        let base = crowd(n, net.link_count(), seed);
        let mut a = base.clone();
        let mut b = base;
        let ra = run(&mut a, &net, &loc, None, &MobsimConfig::default());
        let rb = run(&mut b, &net, &loc, None, &MobsimConfig::default());
        check_conservation(&ra);
        prop_assert_eq!(ra.events.to_csv_bytes(), rb.events.to_csv_bytes());
        prop_assert!(a.iter().all(|p| p.is_executed()));
    }
}
