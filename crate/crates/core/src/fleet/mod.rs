//! Robo-Taxi fleet: immediate requests, nearest-idle dispatch, vehicle task
//! chains and the task log behind the in-service KPIs.
//!
//! The fleet only keeps books; moving vehicles over the network is the job of
//! the mobility simulation, which calls the transition methods below as
//! vehicles reach their targets.

pub mod io;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{LinkId, PersonId, RequestId, TaxiId};
use crate::mobsim::router::{Route, Router};
use crate::mobsim::ttfield::TravelTimeField;
use crate::network::Network;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskType {
    #[serde(rename = "STAY")]
    Stay,
    #[serde(rename = "PICKUP_DRIVE")]
    PickupDrive,
    #[serde(rename = "INGRESS")]
    Ingress,
    #[serde(rename = "OCCUPIED_DRIVE")]
    OccupiedDrive,
    #[serde(rename = "EGRESS")]
    Egress,
}

impl TaskType {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskType::Stay => "STAY",
            TaskType::PickupDrive => "PICKUP_DRIVE",
            TaskType::Ingress => "INGRESS",
            TaskType::OccupiedDrive => "OCCUPIED_DRIVE",
            TaskType::Egress => "EGRESS",
        }
    }

    /// The only allowed successor.
    pub fn next(self) -> TaskType {
        match self {
            TaskType::Stay => TaskType::PickupDrive,
            TaskType::PickupDrive => TaskType::Ingress,
            TaskType::Ingress => TaskType::OccupiedDrive,
            TaskType::OccupiedDrive => TaskType::Egress,
            TaskType::Egress => TaskType::Stay,
        }
    }

    pub fn is_drive(self) -> bool {
        matches!(self, TaskType::PickupDrive | TaskType::OccupiedDrive)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetConfig {
    pub size: u32,
    /// Initial positions, assigned round-robin.
    pub depots: Vec<LinkId>,
    pub ingress_sec: u32,
    pub egress_sec: u32,
}

impl FleetConfig {
    pub fn validate(&self, net: &Network) -> Result<()> {
        if self.size == 0 {
            return Err(Error::config("fleet.size", "fleet size must be at least 1"));
        }
        if self.depots.is_empty() {
            return Err(Error::config("fleet.depots", "at least one depot link is required"));
        }
        if let Some(d) = self.depots.iter().find(|d| net.link_idx(**d).is_none()) {
            return Err(Error::config("fleet.depots", format!("unknown depot link {d}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub vehicle: TaxiId,
    pub task: TaskType,
    pub start_sec: u32,
    pub end_sec: u32,
    pub link_from: LinkId,
    pub link_to: LinkId,
    pub distance_km: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RequestStatus {
    Pending,
    Assigned,
    Served,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: RequestId,
    pub person: PersonId,
    pub origin_link: LinkId,
    pub destination_link: LinkId,
    pub submission_sec: u32,
    pub pickup_sec: Option<u32>,
    pub dropoff_sec: Option<u32>,
    pub vehicle: Option<TaxiId>,
    pub status: RequestStatus,
}

impl Request {
    pub fn wait_sec(&self) -> Option<u32> {
        self.pickup_sec.map(|p| p - self.submission_sec)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoboTaxi {
    pub id: TaxiId,
    /// Dense link index of the vehicle's position.
    pub link: usize,
    pub depot_link: usize,
    pub state: TaskType,
    pub task_start_sec: u32,
    task_from_link: usize,
    task_distance_km: f64,
    pub odometer_km: f64,
    pub request: Option<RequestId>,
}

/// What became of a newly submitted request.
#[derive(Debug, Clone, PartialEq)]
pub enum Submission {
    /// A vehicle was assigned and must drive this route to the pickup link.
    Dispatched(TaxiId, Route),
    Pending,
    /// No idle vehicle can reach the origin.
    Rejected,
}

#[derive(Debug, Clone)]
pub struct FleetState {
    pub cfg: FleetConfig,
    pub vehicles: Vec<RoboTaxi>,
    pub requests: Vec<Request>,
    pending: VecDeque<RequestId>,
    log: Vec<TaskRecord>,
    router: Router,
}

impl FleetState {
    pub fn new(cfg: FleetConfig, net: &Network) -> Result<Self> {
        cfg.validate(net)?;
        let depots: Vec<usize> = cfg.depots.iter().map(|d| net.link_idx(*d).expect("validated")).collect();
        let vehicles = (0..cfg.size)
            .map(|i| {
                let link = depots[i as usize % depots.len()];
                RoboTaxi {
                    id: TaxiId(i),
                    link,
                    depot_link: link,
                    state: TaskType::Stay,
                    task_start_sec: 0,
                    task_from_link: link,
                    task_distance_km: 0.0,
                    odometer_km: 0.0,
                    request: None,
                }
            })
            .collect();
        Ok(FleetState {
            cfg,
            vehicles,
            requests: Vec::new(),
            pending: VecDeque::new(),
            log: Vec::new(),
            router: Router::new(net),
        })
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    pub fn request(&self, id: RequestId) -> &Request {
        &self.requests[id.0 as usize]
    }

    pub fn vehicle(&self, id: TaxiId) -> &RoboTaxi {
        &self.vehicles[id.0 as usize]
    }

    fn idle(&self) -> Vec<(TaxiId, usize)> {
        self.vehicles
            .iter()
            .filter(|v| v.state == TaskType::Stay)
            .map(|v| (v.id, v.link))
            .collect()
    }

    /// Registers a request at its submission time and dispatches it if any vehicle is idle.
    pub fn submit_request(
        &mut self,
        person: PersonId,
        origin: usize,
        destination: usize,
        now: u32,
        net: &Network,
        tt: &TravelTimeField,
    ) -> (RequestId, Submission) {
        let id = RequestId(self.requests.len() as u32);
        self.requests.push(Request {
            id,
            person,
            origin_link: net.link(origin).id,
            destination_link: net.link(destination).id,
            submission_sec: now,
            pickup_sec: None,
            dropoff_sec: None,
            vehicle: None,
            status: RequestStatus::Pending,
        });
        let idle = self.idle();
        if idle.is_empty() {
            self.pending.push_back(id);
            return (id, Submission::Pending);
        }
        match dispatch_nearest_idle(origin, &idle, net, tt, now, &mut self.router) {
            Some((taxi, route)) => {
                self.assign(taxi, id, now, &route, net);
                (id, Submission::Dispatched(taxi, route))
            }
            None => {
                self.requests[id.0 as usize].status = RequestStatus::Rejected;
                (id, Submission::Rejected)
            }
        }
    }

    fn close_task(&mut self, v: usize, now: u32, net: &Network) {
        let veh = &mut self.vehicles[v];
        self.log.push(TaskRecord {
            vehicle: veh.id,
            task: veh.state,
            start_sec: veh.task_start_sec,
            end_sec: now,
            link_from: net.link(veh.task_from_link).id,
            link_to: net.link(veh.link).id,
            distance_km: veh.task_distance_km,
        });
        veh.odometer_km += veh.task_distance_km;
        veh.task_distance_km = 0.0;
    }

    fn transition(&mut self, taxi: TaxiId, expect: TaskType, now: u32, net: &Network) -> Result<()> {
        let v = taxi.0 as usize;
        let state = self.vehicles[v].state;
        if state != expect {
            return Err(Error::Data(format!(
                "vehicle {taxi}: cannot leave {} while in {}",
                expect.as_str(),
                state.as_str()
            )));
        }
        self.close_task(v, now, net);
        let veh = &mut self.vehicles[v];
        veh.state = state.next();
        veh.task_start_sec = now;
        veh.task_from_link = veh.link;
        Ok(())
    }

    fn assign(&mut self, taxi: TaxiId, req: RequestId, now: u32, route: &Route, net: &Network) {
        self.transition(taxi, TaskType::Stay, now, net).expect("dispatch only picks idle vehicles");
        let veh = &mut self.vehicles[taxi.0 as usize];
        veh.request = Some(req);
        veh.task_distance_km = route.distance_m / 1000.0;
        let r = &mut self.requests[req.0 as usize];
        r.vehicle = Some(taxi);
        r.status = RequestStatus::Assigned;
    }

    /// The vehicle reached the pickup link: the pickup happens now and boarding starts.
    pub fn arrive_at_origin(&mut self, taxi: TaxiId, link: usize, now: u32, net: &Network) -> Result<RequestId> {
        self.vehicles[taxi.0 as usize].link = link;
        self.transition(taxi, TaskType::PickupDrive, now, net)?;
        let req = self.vehicles[taxi.0 as usize].request.expect("assigned vehicle");
        self.requests[req.0 as usize].pickup_sec = Some(now);
        Ok(req)
    }

    /// Boarding finished; the occupied drive of `distance_m` begins.
    pub fn end_ingress(&mut self, taxi: TaxiId, distance_m: f64, now: u32, net: &Network) -> Result<()> {
        self.transition(taxi, TaskType::Ingress, now, net)?;
        self.vehicles[taxi.0 as usize].task_distance_km = distance_m / 1000.0;
        Ok(())
    }

    pub fn arrive_at_destination(&mut self, taxi: TaxiId, link: usize, now: u32, net: &Network) -> Result<()> {
        self.vehicles[taxi.0 as usize].link = link;
        self.transition(taxi, TaskType::OccupiedDrive, now, net)
    }

    /// Alighting finished: the request is complete and the vehicle is idle again.
    pub fn end_egress(&mut self, taxi: TaxiId, now: u32, net: &Network) -> Result<RequestId> {
        self.transition(taxi, TaskType::Egress, now, net)?;
        let veh = &mut self.vehicles[taxi.0 as usize];
        let req = veh.request.take().expect("assigned vehicle");
        let r = &mut self.requests[req.0 as usize];
        r.dropoff_sec = Some(now);
        r.status = RequestStatus::Served;
        Ok(req)
    }

    /// A vehicle just became idle: it takes the oldest pending request it can
    /// reach, regardless of nearer idle vehicles. Unreachable requests are
    /// rejected and returned in the second element.
    pub fn on_vehicle_idle(
        &mut self,
        taxi: TaxiId,
        now: u32,
        net: &Network,
        tt: &TravelTimeField,
    ) -> (Option<(RequestId, Route)>, Vec<RequestId>) {
        let mut rejected = Vec::new();
        while let Some(req) = self.pending.pop_front() {
            let origin = net.link_idx(self.requests[req.0 as usize].origin_link).expect("known link");
            let from = self.vehicles[taxi.0 as usize].link;
            match self.router.route(net, tt, from, origin, now as f64) {
                Ok(route) => {
                    self.assign(taxi, req, now, &route, net);
                    return (Some((req, route)), rejected);
                }
                Err(_) => {
                    self.requests[req.0 as usize].status = RequestStatus::Rejected;
                    rejected.push(req);
                }
            }
        }
        (None, rejected)
    }

    /// Drops a still-pending request; returns whether it was pending.
    pub fn expire(&mut self, req: RequestId) -> bool {
        match self.pending.iter().position(|r| *r == req) {
            Some(i) => {
                self.pending.remove(i);
                self.requests[req.0 as usize].status = RequestStatus::Rejected;
                true
            }
            None => false,
        }
    }

    /// Closes the open tasks at `day_end` and returns the log sorted by vehicle and time.
    pub fn finish(mut self, day_end: u32, net: &Network) -> (Vec<TaskRecord>, Vec<Request>, Vec<RoboTaxi>) {
        for v in 0..self.vehicles.len() {
            let end = day_end.max(self.vehicles[v].task_start_sec);
            self.close_task(v, end, net);
        }
        self.log.sort_by_key(|r| (r.vehicle, r.start_sec, r.task));
        for r in self.pending.drain(..) {
            self.requests[r.0 as usize].status = RequestStatus::Rejected;
        }
        (self.log, self.requests, self.vehicles)
    }
}

/// Idle vehicle with the smallest expected drive time to `origin` (ties: lowest id).
///
/// Reverse lower bounds order the candidates so that exact routes are only
/// computed while they can still win; the result equals an exhaustive search.
pub fn dispatch_nearest_idle(
    origin: usize,
    idle: &[(TaxiId, usize)],
    net: &Network,
    tt: &TravelTimeField,
    now: u32,
    router: &mut Router,
) -> Option<(TaxiId, Route)> {
    let lb = router.lower_bounds_to(net, tt, origin);
    let mut order: Vec<(f64, TaxiId, usize)> = idle
        .iter()
        .filter(|(_, l)| lb[*l].is_finite())
        .map(|&(id, l)| (lb[l], id, l))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut best: Option<(f64, TaxiId, Route)> = None;
    for (bound, id, link) in order {
        if let Some((cost, _, _)) = &best {
            if bound > *cost {
                break;
            }
        }
        let Ok(route) = router.route(net, tt, link, origin, now as f64) else {
            continue;
        };
        let better = match &best {
            None => true,
            Some((cost, best_id, _)) => route.expected_sec < *cost || (route.expected_sec == *cost && id < *best_id),
        };
        if better {
            best = Some((route.expected_sec, id, route));
        }
    }
    best.map(|(_, id, r)| (id, r))
}

/// Seconds of (counted, all) task time falling into each bin.
///
/// Counted tasks are all non-STAY tasks, or only OCCUPIED_DRIVE when
/// `occupied_only` is set. Time past the last bin is ignored.
pub fn in_service_time(log: &[TaskRecord], bin_sec: u32, bins: usize, occupied_only: bool) -> (Vec<f64>, Vec<f64>) {
    let mut busy = vec![0.0; bins];
    let mut total = vec![0.0; bins];
    if bins == 0 {
        return (busy, total);
    }
    for r in log {
        if r.end_sec <= r.start_sec {
            continue;
        }
        let counts = if occupied_only {
            r.task == TaskType::OccupiedDrive
        } else {
            r.task != TaskType::Stay
        };
        let first = (r.start_sec / bin_sec) as usize;
        let last = ((r.end_sec - 1) / bin_sec) as usize;
        for b in first..=last.min(bins - 1) {
            let lo = (b as u32 * bin_sec).max(r.start_sec);
            let hi = ((b as u32 + 1) * bin_sec).min(r.end_sec);
            let d = (hi - lo) as f64;
            total[b] += d;
            if counts {
                busy[b] += d;
            }
        }
    }
    (busy, total)
}

/// Share of task time spent in service per bin; empty bins report 0.
pub fn in_service_rates(log: &[TaskRecord], bin_sec: u32, bins: usize, occupied_only: bool) -> Vec<f64> {
    let (busy, total) = in_service_time(log, bin_sec, bins, occupied_only);
    busy.iter()
        .zip(&total)
        .map(|(b, t)| if *t > 0.0 { b / t } else { 0.0 })
        .collect()
}
