//! Initial daily plans: activity chains, locations, times and seed modes.

mod chains;
mod distributions;
pub mod io;
mod locations;

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use chains::{assign_activity_chain, default_chain_table, ActivityChain, ChainFrequencyTable};
pub use distributions::{DistBin, DistKind, EmpiricalDistribution, TimeModels};
pub use locations::{
    choose_destination_zone, choose_facility, gravity_weight, Facility, FacilitySet, OdModel, Zone,
};

use crate::error::{Error, Result};
use crate::ids::{FacilityId, HouseholdId, ZoneId};
use crate::plan::{Activity, DailyPlan, Leg};
use crate::rng::{self, Domain, SimRng};
use crate::synthpop::Population;
use crate::types::{ActivityType, Mode, Spc};

pub const DAY_SEC: u32 = 86_400;

/// Seed shares of the initial leg modes before availability filtering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSeedShares {
    pub car: f64,
    pub pt: f64,
    pub walk: f64,
}

impl Default for ModeSeedShares {
    fn default() -> Self {
        ModeSeedShares {
            car: 0.55,
            pt: 0.15,
            walk: 0.30,
        }
    }
}

impl ModeSeedShares {
    /// Draws a mode; car is only available when the household owns one.
    pub fn draw(&self, has_car: bool, rng: &mut SimRng) -> Mode {
        let options = [
            (Mode::Car, if has_car { self.car } else { 0.0 }),
            (Mode::Pt, self.pt),
            (Mode::Walk, self.walk),
        ];
        let total: f64 = options.iter().map(|(_, w)| w).sum();
        if total <= 0.0 {
            return Mode::Walk;
        }
        let u = rng.random::<f64>() * total;
        let mut acc = 0.0;
        for (m, w) in options {
            acc += w;
            if w > 0.0 && u < acc {
                return m;
            }
        }
        options.iter().rev().find(|(_, w)| *w > 0.0).map(|(m, _)| *m).unwrap_or(Mode::Walk)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanGenConfig {
    /// Distance decay of the facility gravity kernel, meters.
    pub theta_m: f64,
    pub mode_shares: ModeSeedShares,
    /// Re-sampling attempts when the sampled times overrun the day.
    pub max_resamples: u32,
    /// Spacing used when re-sampling fails.
    pub fallback_gap_sec: u32,
}

impl Default for PlanGenConfig {
    fn default() -> Self {
        PlanGenConfig {
            theta_m: 2000.0,
            mode_shares: ModeSeedShares::default(),
            max_resamples: 10,
            fallback_gap_sec: 900,
        }
    }
}

/// What plan construction needs to know about a person beyond the chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanSubject {
    pub spc: Spc,
    pub home_zone: ZoneId,
    pub home_facility: FacilityId,
    pub household_cars: u32,
}

/// End times of all non-final activities: the first Home ends at the sampled start of
/// the next activity, each later activity ends after its sampled duration.
///
/// Returns the ends and whether the fixed-gap fallback was used.
pub fn assemble_end_times(
    chain: &ActivityChain,
    models: &TimeModels,
    cfg: &PlanGenConfig,
    rng: &mut SimRng,
) -> Result<(Vec<u32>, bool)> {
    let types = chain.types();
    let n_ends = types.len().saturating_sub(1);
    if n_ends == 0 {
        return Ok((Vec::new(), false));
    }
    let start = models.get(types[1], DistKind::StartTime)?;
    let durations = types[1..n_ends]
        .iter()
        .map(|t| models.get(*t, DistKind::Duration))
        .collect::<Result<Vec<_>>>()?;
    let mut first = 0;
    for attempt in 0..=cfg.max_resamples {
        let mut ends = Vec::with_capacity(n_ends);
        ends.push(start.sample(rng));
        for d in &durations {
            let prev = *ends.last().expect("non-empty");
            ends.push(prev + d.sample(rng).max(1));
        }
        if attempt == 0 {
            first = ends[0];
        }
        let increasing = ends.windows(2).all(|w| w[0] < w[1]);
        if increasing && *ends.last().expect("non-empty") < DAY_SEC {
            return Ok((ends, false));
        }
    }
    let gap = cfg.fallback_gap_sec.max(1);
    let latest_first = DAY_SEC.saturating_sub(gap * n_ends as u32);
    let e0 = first.min(latest_first).max(1);
    Ok(((0..n_ends as u32).map(|i| e0 + i * gap).collect(), true))
}

pub fn build_initial_plan(
    subject: &PlanSubject,
    chain: &ActivityChain,
    od: &OdModel,
    facilities: &FacilitySet,
    models: &TimeModels,
    cfg: &PlanGenConfig,
    rng: &mut SimRng,
) -> Result<DailyPlan> {
    let home = facilities.facility(subject.home_facility)?;
    let types = chain.types();
    let mut locations = Vec::with_capacity(types.len());
    let mut anchors: BTreeMap<ActivityType, FacilityId> = BTreeMap::new();
    let (mut prev_zone, mut prev_coord) = (subject.home_zone, home.coord);
    for (i, &t) in types.iter().enumerate() {
        let fid = if i == 0 || t == ActivityType::Home {
            subject.home_facility
        } else if let Some(&f) = anchors.get(&t) {
            f
        } else {
            let zone = choose_destination_zone(prev_zone, subject.home_zone, t, od, rng)?;
            let f = choose_facility(zone, t, facilities, &prev_coord, cfg.theta_m, rng)?;
            if matches!(t, ActivityType::Work | ActivityType::Study) {
                anchors.insert(t, f);
            }
            f
        };
        let fac = facilities.facility(fid)?;
        prev_zone = fac.zone_id;
        prev_coord = fac.coord;
        locations.push(fid);
    }

    let (ends, spaced) = assemble_end_times(chain, models, cfg, rng)?;
    if spaced {
        log::warn!("chain {chain}: sampled times overran the day, spacing activities evenly");
    }
    let activities = types
        .iter()
        .zip(&locations)
        .enumerate()
        .map(|(i, (&t, &f))| Activity::new(t, f, ends.get(i).copied()))
        .collect();
    let has_car = subject.household_cars >= 1;
    let legs = (0..types.len() - 1)
        .map(|_| Leg::new(cfg.mode_shares.draw(has_car, rng)))
        .collect();
    DailyPlan::new(activities, legs)
}

/// Plans for a whole population, in person order.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedPlans {
    pub home_facilities: BTreeMap<HouseholdId, FacilityId>,
    pub plans: Vec<DailyPlan>,
}

/// Home facilities are drawn per household, plans per person, each from its own stream.
pub fn generate_plans(
    population: &Population,
    table: &ChainFrequencyTable,
    od: &OdModel,
    facilities: &FacilitySet,
    models: &TimeModels,
    cfg: &PlanGenConfig,
    seed: u64,
) -> Result<GeneratedPlans> {
    let home_facilities = population
        .households
        .par_iter()
        .map(|h| {
            let zone = facilities
                .zone(h.zone_id)
                .ok_or_else(|| Error::Data(format!("household {} lives in unknown zone {}", h.id, h.zone_id)))?;
            let mut rng = rng::stream(seed, Domain::Household, &[h.id.0 as u64]);
            let f = choose_facility(h.zone_id, ActivityType::Home, facilities, &zone.centroid(), cfg.theta_m, &mut rng)?;
            Ok((h.id, f))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    let plans = population
        .persons
        .par_iter()
        .map(|p| {
            let hh = population
                .household(p.household_id)
                .ok_or_else(|| Error::Data(format!("person {} without household", p.id)))?;
            let subject = PlanSubject {
                spc: p.spc,
                home_zone: hh.zone_id,
                home_facility: home_facilities[&hh.id],
                household_cars: hh.cars,
            };
            let mut rng = rng::stream(seed, Domain::Person, &[p.id.0 as u64]);
            let chain = assign_activity_chain(p.spc, table, &mut rng)?;
            build_initial_plan(&subject, &chain, od, facilities, models, cfg, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GeneratedPlans {
        home_facilities,
        plans,
    })
}

#[cfg(test)]
mod tests;
