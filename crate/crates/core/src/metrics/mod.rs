//! Fleet KPIs computed from the closed event and task logs.

pub mod io;
pub mod svg;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fleet::{in_service_time, Request, TaskRecord, TaskType};
use crate::mobsim::events::{Event, EventAux, EventType};
use crate::synthpop::Population;
use crate::types::{Mode, Spc};

pub const HOUR_SEC: u32 = 3600;
/// Hours counted as morning and evening peak (8-10 and 17-19).
pub const MORNING_PEAK: [usize; 2] = [8, 9];
pub const EVENING_PEAK: [usize; 2] = [17, 18];

/// Shares of completed trips per mode, from arrival events.
pub fn modal_split(events: &[Event]) -> BTreeMap<Mode, f64> {
    let mut counts: BTreeMap<Mode, usize> = BTreeMap::new();
    for e in events {
        if let (EventType::Arrival, EventAux::Mode(m)) = (e.kind, e.aux) {
            *counts.entry(m).or_default() += 1;
        }
    }
    let total: usize = counts.values().sum();
    counts
        .into_iter()
        .map(|(m, c)| (m, c as f64 / total as f64))
        .collect()
}

/// Nearest-rank percentile of an ascending slice.
pub fn percentile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaitingStats {
    pub served: usize,
    pub rejected: usize,
    pub mean_sec: Option<f64>,
    pub p50_sec: Option<f64>,
    pub p90_sec: Option<f64>,
    pub p95_sec: Option<f64>,
}

/// Waits over served requests; everything without a dropoff counts as rejected.
pub fn waiting_stats(requests: &[Request]) -> WaitingStats {
    let mut waits: Vec<f64> = requests
        .iter()
        .filter(|r| r.dropoff_sec.is_some())
        .filter_map(|r| r.wait_sec())
        .map(f64::from)
        .collect();
    waits.sort_by(f64::total_cmp);
    let mean = (!waits.is_empty()).then(|| waits.iter().sum::<f64>() / waits.len() as f64);
    WaitingStats {
        served: waits.len(),
        rejected: requests.len() - waits.len(),
        mean_sec: mean,
        p50_sec: percentile(&waits, 50.0),
        p90_sec: percentile(&waits, 90.0),
        p95_sec: percentile(&waits, 95.0),
    }
}

/// Distinct persons with at least one served Robo-Taxi trip, per category.
pub fn usage_by_spc(requests: &[Request], population: &Population) -> Result<BTreeMap<Spc, usize>> {
    let mut users: BTreeMap<Spc, BTreeSet<u32>> = Spc::ALL.iter().map(|s| (*s, BTreeSet::new())).collect();
    for r in requests.iter().filter(|r| r.dropoff_sec.is_some()) {
        let p = population
            .person(r.person)
            .ok_or_else(|| Error::Data(format!("request {} names unknown person {}", r.id, r.person)))?;
        users.get_mut(&p.spc).expect("all categories").insert(r.person.0);
    }
    Ok(users.into_iter().map(|(s, set)| (s, set.len())).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakRates {
    pub morning: f64,
    pub evening: f64,
    pub off_peak: f64,
}

/// In-service rates pooled over the peak hours and over all other hours of the day.
pub fn peak_rates(tasks: &[TaskRecord], occupied_only: bool) -> PeakRates {
    let (busy, total) = in_service_time(tasks, HOUR_SEC, 24, occupied_only);
    let pooled = |hours: &mut dyn Iterator<Item = usize>| {
        let (b, t) = hours.fold((0.0, 0.0), |(b, t), h| (b + busy[h], t + total[h]));
        if t > 0.0 { b / t } else { 0.0 }
    };
    let peak = |h: usize| MORNING_PEAK.contains(&h) || EVENING_PEAK.contains(&h);
    PeakRates {
        morning: pooled(&mut MORNING_PEAK.iter().copied()),
        evening: pooled(&mut EVENING_PEAK.iter().copied()),
        off_peak: pooled(&mut (0..24).filter(|h| !peak(*h))),
    }
}

/// Mean occupied kilometres per fleet vehicle.
pub fn onboard_km_per_vehicle(tasks: &[TaskRecord], fleet_size: u32) -> f64 {
    if fleet_size == 0 {
        return 0.0;
    }
    let km: f64 = tasks
        .iter()
        .filter(|t| t.task == TaskType::OccupiedDrive)
        .map(|t| t.distance_km)
        .sum();
    km / fleet_size as f64
}

/// All KPIs of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiBundle {
    /// Identifies the scenario apart from the taste toggle.
    pub fingerprint: String,
    pub fleet_size: u32,
    pub taste: bool,
    pub modal_shares: BTreeMap<Mode, f64>,
    pub waiting: WaitingStats,
    pub hourly_in_service: Vec<f64>,
    pub onboard_km_per_vehicle: f64,
    pub rt_users_by_spc: BTreeMap<Spc, usize>,
    pub peak_rates: PeakRates,
}

/// Inputs identifying a run inside a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLabel {
    pub fingerprint: String,
    pub fleet_size: u32,
    pub taste: bool,
    pub occupied_only: bool,
}

impl KpiBundle {
    pub fn compute(
        label: &RunLabel,
        events: &[Event],
        tasks: &[TaskRecord],
        requests: &[Request],
        population: &Population,
    ) -> Result<Self> {
        let (busy, total) = in_service_time(tasks, HOUR_SEC, 24, label.occupied_only);
        Ok(KpiBundle {
            fingerprint: label.fingerprint.clone(),
            fleet_size: label.fleet_size,
            taste: label.taste,
            modal_shares: modal_split(events),
            waiting: waiting_stats(requests),
            hourly_in_service: busy
                .iter()
                .zip(&total)
                .map(|(b, t)| if *t > 0.0 { b / t } else { 0.0 })
                .collect(),
            onboard_km_per_vehicle: onboard_km_per_vehicle(tasks, label.fleet_size),
            rt_users_by_spc: usage_by_spc(requests, population)?,
            peak_rates: peak_rates(tasks, label.occupied_only),
        })
    }

    pub fn rt_share(&self) -> f64 {
        self.modal_shares.get(&Mode::RoboTaxi).copied().unwrap_or(0.0)
    }

    /// Named scalar KPIs in a fixed order, for comparisons and summaries.
    pub fn scalars(&self) -> Vec<(String, Option<f64>)> {
        let mut out = Vec::new();
        for m in Mode::ALL {
            out.push((format!("share_{}", m.as_str()), Some(self.modal_shares.get(&m).copied().unwrap_or(0.0))));
        }
        out.push(("wait_mean_sec".into(), self.waiting.mean_sec));
        out.push(("wait_p50_sec".into(), self.waiting.p50_sec));
        out.push(("wait_p90_sec".into(), self.waiting.p90_sec));
        out.push(("wait_p95_sec".into(), self.waiting.p95_sec));
        out.push(("served_requests".into(), Some(self.waiting.served as f64)));
        out.push(("rejected_requests".into(), Some(self.waiting.rejected as f64)));
        out.push(("in_service_morning".into(), Some(self.peak_rates.morning)));
        out.push(("in_service_evening".into(), Some(self.peak_rates.evening)));
        out.push(("in_service_off_peak".into(), Some(self.peak_rates.off_peak)));
        out.push(("onboard_km_per_vehicle".into(), Some(self.onboard_km_per_vehicle)));
        for (s, n) in &self.rt_users_by_spc {
            out.push((format!("rt_users_{}", s.as_str()), Some(*n as f64)));
        }
        out
    }
}

/// One KPI compared between the run with taste factors (A) and without (B).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Change {
    pub fleet_size: u32,
    pub kpi: String,
    pub with_factors: Option<f64>,
    pub without_factors: Option<f64>,
    /// (A − B)/B, or A − B when B is zero.
    pub change: Option<f64>,
    /// Set when `change` is an absolute difference.
    pub absolute: bool,
}

pub fn relative_change(a: f64, b: f64) -> (f64, bool) {
    if b == 0.0 {
        (a - b, true)
    } else {
        ((a - b) / b, false)
    }
}

/// Relative changes of every scalar KPI between two runs of the same scenario.
pub fn comparison_report(a: &KpiBundle, b: &KpiBundle) -> Result<Vec<Change>> {
    if a.fingerprint != b.fingerprint || a.fleet_size != b.fleet_size {
        return Err(Error::Structural(format!(
            "cannot compare runs of different scenarios ({} / {} vs {} / {})",
            a.fingerprint, a.fleet_size, b.fingerprint, b.fleet_size
        )));
    }
    Ok(a.scalars()
        .into_iter()
        .zip(b.scalars())
        .map(|((kpi, va), (_, vb))| {
            let (change, absolute) = match (va, vb) {
                (Some(x), Some(y)) => {
                    let (c, abs) = relative_change(x, y);
                    (Some(c), abs)
                }
                _ => (None, false),
            };
            Change {
                fleet_size: a.fleet_size,
                kpi,
                with_factors: va,
                without_factors: vb,
                change,
                absolute,
            }
        })
        .collect())
}
