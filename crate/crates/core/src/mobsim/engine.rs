//! The discrete-time day loop.
//!
//! Each second: links are served in ascending id order, then scheduled agent
//! and fleet actions due by now run in (time, insertion) order, then waiting
//! departures enter their first link. Nothing depends on randomness, so the
//! same inputs always give the same event log.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};

use super::events::{Event, EventAux, EventLog, EventType};
use super::queue::LinkQueue;
use super::router::{Route, Router};
use super::teleport::teleport_leg;
use super::ttfield::{TravelTimeField, TravelTimeObservations};
use super::{Locator, MobsimConfig};
use crate::activitygen::DAY_SEC;
use crate::error::Result;
use crate::fleet::{FleetState, Request, RoboTaxi, Submission, TaskRecord, TaskType};
use crate::ids::{PersonId, RequestId, TaxiId, VehicleId};
use crate::network::Network;
use crate::plan::{ActivityTiming, DailyPlan, LegExecution, LegOutcome};
use crate::types::Mode;

/// A person and the plan they execute today; realized times are written into it.
#[derive(Debug)]
pub struct DayAgent<'a> {
    pub person: PersonId,
    pub plan: &'a mut DailyPlan,
}

#[derive(Debug, Clone)]
pub struct FleetOutcome {
    pub tasks: Vec<TaskRecord>,
    pub requests: Vec<Request>,
    pub vehicles: Vec<RoboTaxi>,
}

#[derive(Debug)]
pub struct DayResult {
    pub events: EventLog,
    pub observations: TravelTimeObservations,
    /// (enters, leaves) per link index.
    pub link_counts: Vec<(u64, u64)>,
    pub fleet: Option<FleetOutcome>,
    pub day_end_sec: u32,
    pub stuck_legs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Action {
    ActEnd(usize),
    /// Agent reaches the next activity by teleport; `announce` emits the arrival event.
    TeleportArrive { agent: usize, announce: bool },
    IngressEnd(TaxiId),
    EgressEnd(TaxiId),
    RequestTimeout(RequestId),
}

#[derive(Debug, Clone, Copy)]
enum Driver {
    Car(usize),
    Taxi(TaxiId),
}

#[derive(Debug)]
struct Vehicle {
    driver: Driver,
    /// Start link followed by the route.
    path: Vec<usize>,
    pos: usize,
    entered_at: u32,
    waiting_since: u32,
    blocked_since: Option<u32>,
}

#[derive(Debug, Clone, Copy)]
struct LegProgress {
    departure: u32,
    wait: u32,
    distance_km: f64,
    cost_eur: f64,
    outcome: LegOutcome,
}

struct Agent<'p> {
    person: PersonId,
    plan: &'p mut DailyPlan,
    /// Index of the activity being performed or travelled to.
    activity: usize,
    leg: Option<LegProgress>,
}

struct Sim<'n, 'p> {
    net: &'n Network,
    tt: &'n TravelTimeField,
    locator: &'n Locator,
    cfg: &'n MobsimConfig,
    router: Router,
    agents: Vec<Agent<'p>>,
    fleet: Option<FleetState>,
    /// Passenger agent per request id.
    request_agent: Vec<usize>,
    queues: Vec<LinkQueue>,
    active: BTreeSet<usize>,
    active_buf: Vec<usize>,
    vehicles: Vec<Vehicle>,
    waiting: VecDeque<usize>,
    schedule: BinaryHeap<Reverse<(u32, u64, Action)>>,
    seq: u64,
    events: EventLog,
    obs: TravelTimeObservations,
    counts: Vec<(u64, u64)>,
    stuck_legs: usize,
    last_time: u32,
}

/// Executes every agent's plan for one day.
///
/// The fleet, when present, serves all Robo-Taxi legs; without one such legs
/// are rejected. Link times for routing come from `tt`.
pub fn run_day(
    agents: &mut [DayAgent<'_>],
    net: &Network,
    locator: &Locator,
    tt: &TravelTimeField,
    fleet: Option<FleetState>,
    cfg: &MobsimConfig,
) -> Result<DayResult> {
    for a in agents.iter_mut() {
        a.plan.validate()?;
        let score = a.plan.score;
        a.plan.clear_execution();
        a.plan.score = score;
        for act in &a.plan.activities {
            locator.link(act.facility)?;
        }
    }
    let queues = net
        .links()
        .iter()
        .map(|l| LinkQueue::new(l, cfg.flow_capacity_factor, cfg.storage_capacity_factor, cfg.cell_length_m))
        .collect();
    let mut sim = Sim {
        net,
        tt,
        locator,
        cfg,
        router: Router::new(net),
        agents: agents
            .iter_mut()
            .map(|a| Agent {
                person: a.person,
                plan: &mut *a.plan,
                activity: 0,
                leg: None,
            })
            .collect(),
        fleet,
        request_agent: Vec::new(),
        queues,
        active: BTreeSet::new(),
        active_buf: Vec::new(),
        vehicles: Vec::new(),
        waiting: VecDeque::new(),
        schedule: BinaryHeap::new(),
        seq: 0,
        events: EventLog::new(cfg.record_events, cfg.record_link_events),
        obs: TravelTimeObservations::new(net.link_count(), tt.bins()),
        counts: vec![(0, 0); net.link_count()],
        stuck_legs: 0,
        last_time: 0,
    };
    sim.start();
    sim.run()?;
    let day_end = sim.last_time.max(DAY_SEC);
    let fleet = sim.fleet.take().map(|f| {
        let (tasks, requests, vehicles) = f.finish(day_end, net);
        FleetOutcome {
            tasks,
            requests,
            vehicles,
        }
    });
    Ok(DayResult {
        events: sim.events,
        observations: sim.obs,
        link_counts: sim.counts,
        fleet,
        day_end_sec: day_end,
        stuck_legs: sim.stuck_legs,
    })
}

impl Sim<'_, '_> {
    fn at(&mut self, time: u32, action: Action) {
        self.schedule.push(Reverse((time, self.seq, action)));
        self.seq += 1;
    }

    fn emit(&mut self, time: u32, kind: EventType, person: Option<PersonId>, vehicle: Option<VehicleId>, link: Option<usize>, aux: EventAux) {
        self.last_time = self.last_time.max(time);
        let link = link.map(|l| self.net.link(l).id);
        self.events.push(Event {
            time_sec: time,
            kind,
            person,
            vehicle,
            link,
            aux,
        });
    }

    fn start(&mut self) {
        for i in 0..self.agents.len() {
            self.begin_activity(i, 0);
        }
    }

    /// Agent `i` starts its current activity at `now`.
    fn begin_activity(&mut self, i: usize, now: u32) {
        let a = &mut self.agents[i];
        let idx = a.activity;
        let n = a.plan.activities.len();
        let act = &mut a.plan.activities[idx];
        if idx > 0 {
            let kind = act.kind;
            let person = a.person;
            self.emit(now, EventType::ActStart, Some(person), None, None, EventAux::Activity(kind));
        }
        let a = &mut self.agents[i];
        let act = &mut a.plan.activities[idx];
        if idx + 1 == n {
            act.realized = Some(ActivityTiming {
                start_sec: now,
                end_sec: now.max(DAY_SEC),
            });
        } else {
            let end = now.max(act.planned_end_sec.expect("validated plan"));
            act.realized = Some(ActivityTiming {
                start_sec: now,
                end_sec: end,
            });
            self.at(end, Action::ActEnd(i));
        }
    }

    fn run(&mut self) -> Result<()> {
        let mut now: u32 = 0;
        loop {
            if self.active.is_empty() && self.waiting.is_empty() {
                match self.schedule.peek() {
                    Some(Reverse((t, _, _))) => now = now.max(*t),
                    None => break,
                }
            }
            self.move_links(now)?;
            while let Some(Reverse((t, _, _))) = self.schedule.peek() {
                if *t > now {
                    break;
                }
                let Reverse((_, _, action)) = self.schedule.pop().expect("peeked");
                self.handle(action, now)?;
            }
            self.insert_waiting(now)?;
            now += 1;
        }
        Ok(())
    }

    fn handle(&mut self, action: Action, now: u32) -> Result<()> {
        match action {
            Action::ActEnd(i) => self.depart(i, now),
            Action::TeleportArrive { agent, announce } => {
                self.arrive(agent, now, announce, None, None);
                Ok(())
            }
            Action::IngressEnd(taxi) => self.end_ingress(taxi, now),
            Action::EgressEnd(taxi) => self.end_egress(taxi, now),
            Action::RequestTimeout(req) => {
                let expired = self.fleet.as_mut().is_some_and(|f| f.expire(req));
                if expired {
                    self.reject(req, now);
                }
                Ok(())
            }
        }
    }

    fn depart(&mut self, i: usize, now: u32) -> Result<()> {
        let a = &self.agents[i];
        let person = a.person;
        let idx = a.activity;
        let from_fac = a.plan.activities[idx].facility;
        let to_fac = a.plan.activities[idx + 1].facility;
        let kind = a.plan.activities[idx].kind;
        let mode = a.plan.legs[idx].mode;
        self.emit(now, EventType::ActEnd, Some(person), None, None, EventAux::Activity(kind));
        self.emit(now, EventType::Departure, Some(person), None, None, EventAux::Mode(mode));
        self.agents[i].activity += 1;
        let progress = LegProgress {
            departure: now,
            wait: 0,
            distance_km: 0.0,
            cost_eur: 0.0,
            outcome: LegOutcome::Completed,
        };
        self.agents[i].leg = Some(progress);
        let from_link = self.locator.link(from_fac)?;
        let to_link = self.locator.link(to_fac)?;
        match mode {
            Mode::Walk | Mode::Pt => {
                let from = self.locator.coord(from_fac)?;
                let to = self.locator.coord(to_fac)?;
                let t = teleport_leg(mode, &from, &to, &self.cfg.teleport);
                let leg = self.agents[i].leg.as_mut().expect("set above");
                leg.distance_km = t.distance_km;
                leg.cost_eur = t.cost_eur;
                self.at(now + t.travel_sec, Action::TeleportArrive { agent: i, announce: true });
            }
            Mode::Car => {
                if from_link == to_link {
                    self.arrive(i, now, true, Some(VehicleId::Car(person)), Some(to_link));
                    return Ok(());
                }
                match self.router.route(self.net, self.tt, from_link, to_link, now as f64) {
                    Ok(route) => {
                        self.agents[i].leg.as_mut().expect("set above").distance_km = route.distance_m / 1000.0;
                        self.launch(Driver::Car(i), from_link, route, now);
                    }
                    Err(_) => {
                        self.emit(now, EventType::Stuck, Some(person), Some(VehicleId::Car(person)), Some(from_link), EventAux::None);
                        self.agents[i].leg.as_mut().expect("set above").outcome = LegOutcome::Stuck;
                        self.stuck_legs += 1;
                        self.arrive(i, now, false, None, None);
                    }
                }
            }
            Mode::RoboTaxi => self.request_taxi(i, from_link, to_link, now)?,
        }
        Ok(())
    }

    fn request_taxi(&mut self, i: usize, origin: usize, dest: usize, now: u32) -> Result<()> {
        let person = self.agents[i].person;
        let Some(fleet) = self.fleet.as_mut() else {
            self.emit(now, EventType::Stuck, Some(person), None, Some(origin), EventAux::None);
            self.walk_instead(i, now);
            return Ok(());
        };
        let (req, sub) = fleet.submit_request(person, origin, dest, now, self.net, self.tt);
        debug_assert_eq!(req.0 as usize, self.request_agent.len());
        self.request_agent.push(i);
        self.emit(now, EventType::RtRequest, Some(person), None, Some(origin), EventAux::Request(req));
        match sub {
            Submission::Dispatched(taxi, route) => self.dispatch(taxi, req, route, now),
            Submission::Pending => self.at(now + self.cfg.stuck_time_sec, Action::RequestTimeout(req)),
            Submission::Rejected => self.reject(req, now),
        }
        Ok(())
    }

    /// The request will not be served: its passenger walks from here.
    fn reject(&mut self, req: RequestId, now: u32) {
        let i = self.request_agent[req.0 as usize];
        let person = self.agents[i].person;
        let origin = self.fleet.as_ref().map(|f| f.request(req).origin_link).and_then(|l| self.net.link_idx(l));
        self.emit(now, EventType::Stuck, Some(person), None, origin, EventAux::Rejected(req));
        self.walk_instead(i, now);
    }

    fn walk_instead(&mut self, i: usize, now: u32) {
        let a = &self.agents[i];
        let from = self.locator.coord(a.plan.activities[a.activity - 1].facility).expect("located");
        let to = self.locator.coord(a.plan.activities[a.activity].facility).expect("located");
        let t = teleport_leg(Mode::Walk, &from, &to, &self.cfg.teleport);
        let leg = self.agents[i].leg.as_mut().expect("travelling");
        leg.distance_km = t.distance_km;
        leg.cost_eur = 0.0;
        leg.wait = 0;
        leg.outcome = LegOutcome::Rejected;
        self.stuck_legs += 1;
        self.at(now + t.travel_sec, Action::TeleportArrive { agent: i, announce: false });
    }

    fn dispatch(&mut self, taxi: TaxiId, req: RequestId, route: Route, now: u32) {
        let person = self.agents[self.request_agent[req.0 as usize]].person;
        let from = self.fleet.as_ref().expect("fleet").vehicle(taxi).link;
        self.emit(now, EventType::RtDispatch, Some(person), Some(VehicleId::RoboTaxi(taxi)), Some(from), EventAux::Request(req));
        if route.links.is_empty() {
            self.taxi_reached(taxi, from, now);
        } else {
            self.launch(Driver::Taxi(taxi), from, route, now);
        }
    }

    /// Puts a vehicle in line to enter the first link of its route.
    fn launch(&mut self, driver: Driver, start: usize, route: Route, now: u32) {
        let mut path = Vec::with_capacity(route.links.len() + 1);
        path.push(start);
        path.extend(route.links);
        self.vehicles.push(Vehicle {
            driver,
            path,
            pos: 0,
            entered_at: now,
            waiting_since: now,
            blocked_since: None,
        });
        self.waiting.push_back(self.vehicles.len() - 1);
    }

    fn vehicle_id(&self, v: usize) -> VehicleId {
        match self.vehicles[v].driver {
            Driver::Car(i) => VehicleId::Car(self.agents[i].person),
            Driver::Taxi(t) => VehicleId::RoboTaxi(t),
        }
    }

    /// Person on board, for event attribution.
    fn occupant(&self, v: usize) -> Option<PersonId> {
        match self.vehicles[v].driver {
            Driver::Car(i) => Some(self.agents[i].person),
            Driver::Taxi(t) => {
                let f = self.fleet.as_ref().expect("fleet");
                let taxi = f.vehicle(t);
                if taxi.state == TaskType::OccupiedDrive {
                    taxi.request.map(|r| self.agents[self.request_agent[r.0 as usize]].person)
                } else {
                    None
                }
            }
        }
    }

    fn enter_link(&mut self, v: usize, link: usize, now: u32) {
        self.queues[link].enter(v, now);
        self.active.insert(link);
        self.counts[link].0 += 1;
        self.vehicles[v].entered_at = now;
        self.vehicles[v].blocked_since = None;
        let (p, id) = (self.occupant(v), self.vehicle_id(v));
        self.emit(now, EventType::LinkEnter, p, Some(id), Some(link), EventAux::None);
    }

    fn leave_link(&mut self, v: usize, link: usize, now: u32) {
        self.counts[link].1 += 1;
        if self.queues[link].is_empty() {
            self.active.remove(&link);
        }
        let (p, id) = (self.occupant(v), self.vehicle_id(v));
        self.emit(now, EventType::LinkLeave, p, Some(id), Some(link), EventAux::None);
    }

    fn insert_waiting(&mut self, now: u32) -> Result<()> {
        let mut still = VecDeque::new();
        while let Some(v) = self.waiting.pop_front() {
            let first = self.vehicles[v].path[1];
            if self.queues[first].has_space() {
                self.vehicles[v].pos = 1;
                self.enter_link(v, first, now);
            } else if now - self.vehicles[v].waiting_since >= self.cfg.stuck_time_sec {
                self.stuck(v, now);
            } else {
                still.push_back(v);
            }
        }
        self.waiting = still;
        Ok(())
    }

    fn move_links(&mut self, now: u32) -> Result<()> {
        let mut links = std::mem::take(&mut self.active_buf);
        links.clear();
        links.extend(self.active.iter().copied());
        for &link in &links {
            while let Some(v) = self.queues[link].ready_head(now) {
                let veh = &self.vehicles[v];
                let last = veh.pos + 1 == veh.path.len();
                let next = (!last).then(|| veh.path[veh.pos + 1]);
                let space = next.is_none_or(|n| self.queues[n].has_space());
                if space && self.queues[link].has_token(now) {
                    self.queues[link].pop_exit(now);
                    let entered = self.vehicles[v].entered_at;
                    self.obs.record(link, entered, now - entered);
                    self.leave_link(v, link, now);
                    match next {
                        Some(n) => {
                            self.vehicles[v].pos += 1;
                            self.enter_link(v, n, now);
                        }
                        None => self.finish_drive(v, link, now, false),
                    }
                    continue;
                }
                let since = *self.vehicles[v].blocked_since.get_or_insert(now);
                if now - since >= self.cfg.stuck_time_sec {
                    self.queues[link].pop_stuck();
                    self.leave_link(v, link, now);
                    self.stuck(v, now);
                    continue;
                }
                break;
            }
        }
        self.active_buf = links;
        Ok(())
    }

    /// Takes a blocked vehicle off the road and moves it to its destination.
    fn stuck(&mut self, v: usize, now: u32) {
        let (p, id) = (self.occupant(v), self.vehicle_id(v));
        let here = self.vehicles[v].path[self.vehicles[v].pos];
        self.emit(now, EventType::Stuck, p, Some(id), Some(here), EventAux::None);
        let dest = *self.vehicles[v].path.last().expect("non-empty path");
        self.finish_drive(v, dest, now, true);
    }

    fn finish_drive(&mut self, v: usize, link: usize, now: u32, stuck: bool) {
        match self.vehicles[v].driver {
            Driver::Car(i) => {
                let person = self.agents[i].person;
                if stuck {
                    self.agents[i].leg.as_mut().expect("driving").outcome = LegOutcome::Stuck;
                    self.stuck_legs += 1;
                    self.arrive(i, now, false, None, None);
                } else {
                    self.arrive(i, now, true, Some(VehicleId::Car(person)), Some(link));
                }
            }
            Driver::Taxi(t) => {
                if stuck {
                    let f = self.fleet.as_ref().expect("fleet");
                    let taxi = f.vehicle(t);
                    if taxi.state == TaskType::OccupiedDrive {
                        let r = taxi.request.expect("occupied");
                        let i = self.request_agent[r.0 as usize];
                        self.agents[i].leg.as_mut().expect("riding").outcome = LegOutcome::Stuck;
                        self.stuck_legs += 1;
                    }
                }
                self.taxi_reached(t, link, now);
            }
        }
    }

    /// A taxi finished its current drive at `link`.
    fn taxi_reached(&mut self, taxi: TaxiId, link: usize, now: u32) {
        let fleet = self.fleet.as_mut().expect("fleet");
        match fleet.vehicle(taxi).state {
            TaskType::PickupDrive => {
                let req = fleet.arrive_at_origin(taxi, link, now, self.net).expect("pickup drive");
                let i = self.request_agent[req.0 as usize];
                let person = self.agents[i].person;
                let leg = self.agents[i].leg.as_mut().expect("waiting for taxi");
                leg.wait = now - leg.departure;
                self.emit(now, EventType::RtPickup, Some(person), Some(VehicleId::RoboTaxi(taxi)), Some(link), EventAux::Request(req));
                self.at(now + self.cfg_ingress(), Action::IngressEnd(taxi));
            }
            TaskType::OccupiedDrive => {
                fleet.arrive_at_destination(taxi, link, now, self.net).expect("occupied drive");
                self.at(now + self.cfg_egress(), Action::EgressEnd(taxi));
            }
            other => unreachable!("taxi {taxi} drove while in {}", other.as_str()),
        }
    }

    fn cfg_ingress(&self) -> u32 {
        self.fleet.as_ref().map_or(0, |f| f.cfg.ingress_sec)
    }

    fn cfg_egress(&self) -> u32 {
        self.fleet.as_ref().map_or(0, |f| f.cfg.egress_sec)
    }

    fn end_ingress(&mut self, taxi: TaxiId, now: u32) -> Result<()> {
        let fleet = self.fleet.as_ref().expect("fleet");
        let veh = fleet.vehicle(taxi);
        let req = fleet.request(veh.request.expect("boarding"));
        let from = veh.link;
        let dest = self.net.link_idx(req.destination_link).expect("known link");
        let route = match self.router.route(self.net, self.tt, from, dest, now as f64) {
            Ok(r) => r,
            Err(_) => {
                // Unreachable destination: the passenger is dropped where they are.
                let i = self.request_agent[req.id.0 as usize];
                self.agents[i].leg.as_mut().expect("riding").outcome = LegOutcome::Stuck;
                self.stuck_legs += 1;
                Route::empty()
            }
        };
        let i = self.request_agent[req.id.0 as usize];
        self.agents[i].leg.as_mut().expect("riding").distance_km = route.distance_m / 1000.0;
        self.fleet
            .as_mut()
            .expect("fleet")
            .end_ingress(taxi, route.distance_m, now, self.net)?;
        if route.links.is_empty() {
            self.taxi_reached(taxi, from, now);
        } else {
            self.launch(Driver::Taxi(taxi), from, route, now);
        }
        Ok(())
    }

    fn end_egress(&mut self, taxi: TaxiId, now: u32) -> Result<()> {
        let fleet = self.fleet.as_mut().expect("fleet");
        let req = fleet.end_egress(taxi, now, self.net)?;
        let link = fleet.vehicle(taxi).link;
        let i = self.request_agent[req.0 as usize];
        let person = self.agents[i].person;
        self.emit(now, EventType::RtDropoff, Some(person), Some(VehicleId::RoboTaxi(taxi)), Some(link), EventAux::Request(req));
        self.arrive(i, now, true, Some(VehicleId::RoboTaxi(taxi)), Some(link));
        let fleet = self.fleet.as_mut().expect("fleet");
        let (next, rejected) = fleet.on_vehicle_idle(taxi, now, self.net, self.tt);
        for r in rejected {
            self.reject(r, now);
        }
        if let Some((r, route)) = next {
            self.dispatch(taxi, r, route, now);
        }
        Ok(())
    }

    /// Agent `i` reaches the destination of its current leg.
    fn arrive(&mut self, i: usize, now: u32, announce: bool, vehicle: Option<VehicleId>, link: Option<usize>) {
        let a = &mut self.agents[i];
        let idx = a.activity;
        let leg = a.leg.take().expect("travelling");
        let mode = a.plan.legs[idx - 1].mode;
        a.plan.legs[idx - 1].realized = Some(LegExecution {
            departure_sec: leg.departure,
            arrival_sec: now,
            wait_sec: leg.wait,
            distance_km: leg.distance_km,
            cost_eur: leg.cost_eur,
            outcome: leg.outcome,
        });
        let person = a.person;
        if announce {
            self.emit(now, EventType::Arrival, Some(person), vehicle, link, EventAux::Mode(mode));
        }
        self.begin_activity(i, now);
    }
}
