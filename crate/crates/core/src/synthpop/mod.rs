//! Zone-level population synthesis by fitness-guided household drawing.
//!
//! Households are cloned from a microdata sample. For each zone a starting
//! set is drawn uniformly with replacement, then improved by hill climbing:
//! one household is swapped for a fresh draw and the swap is kept only when
//! the marginal fitness strictly improves. After a run of rejections one
//! proposal is accepted unconditionally to leave plateaus; the best set seen
//! is returned.

mod controls;
pub mod io;

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use controls::{
    controls_by_name, default_controls, BinCounts, BinMatcher, ControlAttribute, ControlBin,
    ControlLevel, ControlSpec,
};

use crate::error::{Error, Result};
use crate::ids::{HouseholdId, PersonId, ZoneId};
use crate::rng::{self, Domain, SimRng};
use crate::types::{Sex, Spc};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Person {
    pub id: PersonId,
    pub household_id: HouseholdId,
    pub age: u32,
    pub sex: Sex,
    pub spc: Spc,
    pub zone_id: ZoneId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Household {
    pub id: HouseholdId,
    pub zone_id: ZoneId,
    pub income_eur: f64,
    pub cars: u32,
    pub member_ids: Vec<PersonId>,
}

/// A household together with its members, the unit that gets drawn and cloned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleHousehold {
    pub household: Household,
    pub members: Vec<Person>,
}

impl SampleHousehold {
    /// Checks the person/household invariants.
    pub fn validate(&self) -> Result<()> {
        let hh = &self.household;
        if self.members.is_empty() {
            return Err(Error::Data(format!("household {} has no members", hh.id)));
        }
        if hh.income_eur <= 0.0 {
            return Err(Error::Data(format!("household {} has non-positive income", hh.id)));
        }
        for p in &self.members {
            if (p.spc == Spc::Under14) != (p.age < 14) {
                return Err(Error::Data(format!(
                    "person {}: category Under14 must match age < 14 (age {})",
                    p.id, p.age
                )));
            }
            if p.household_id != hh.id {
                return Err(Error::Data(format!("person {} in wrong household", p.id)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub households: Vec<Household>,
    pub persons: Vec<Person>,
}

impl Population {
    pub fn person(&self, id: PersonId) -> Option<&Person> {
        // Ids are dense after synthesis; fall back to a scan for loaded files.
        match self.persons.get(id.0 as usize) {
            Some(p) if p.id == id => Some(p),
            _ => self.persons.iter().find(|p| p.id == id),
        }
    }

    pub fn household(&self, id: HouseholdId) -> Option<&Household> {
        match self.households.get(id.0 as usize) {
            Some(h) if h.id == id => Some(h),
            _ => self.households.iter().find(|h| h.id == id),
        }
    }

    /// Groups households of each zone with their members.
    pub fn by_zone(&self) -> BTreeMap<ZoneId, Vec<SampleHousehold>> {
        let persons: BTreeMap<PersonId, &Person> = self.persons.iter().map(|p| (p.id, p)).collect();
        let mut out: BTreeMap<ZoneId, Vec<SampleHousehold>> = BTreeMap::new();
        for hh in &self.households {
            let members = hh
                .member_ids
                .iter()
                .filter_map(|id| persons.get(id).map(|p| (*p).clone()))
                .collect();
            out.entry(hh.zone_id).or_default().push(SampleHousehold {
                household: hh.clone(),
                members,
            });
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneTargets {
    pub zone_id: ZoneId,
    pub household_count: u32,
    pub control_targets: BinCounts,
}

/// Tabulates bin counts of a household set; every control bin is present, zero if empty.
pub fn tabulate(households: &[SampleHousehold], controls: &[ControlSpec]) -> BinCounts {
    let mut out = BinCounts::new();
    for c in controls {
        let mut bins: Vec<f64> = vec![0.0; c.bins.len()];
        for sh in households {
            match c.level {
                ControlLevel::Household => {
                    if let Some(b) = c.household_bin(&sh.household) {
                        bins[b] += 1.0;
                    }
                }
                ControlLevel::Person => {
                    for p in &sh.members {
                        if let Some(b) = c.person_bin(p) {
                            bins[b] += 1.0;
                        }
                    }
                }
            }
        }
        out.insert(
            c.name().to_string(),
            c.bins.iter().map(|b| b.label.clone()).zip(bins).collect(),
        );
    }
    out
}

fn check_bins(counts: &BinCounts, c: &ControlSpec, what: &str) -> Result<()> {
    let got = counts
        .get(c.name())
        .ok_or_else(|| Error::Structural(format!("{what} lacks control `{}`", c.name())))?;
    let want: BTreeSet<&str> = c.bins.iter().map(|b| b.label.as_str()).collect();
    let have: BTreeSet<&str> = got.keys().map(|k| k.as_str()).collect();
    if want != have {
        return Err(Error::Structural(format!(
            "{what} bins for `{}` are {:?}, expected {:?}",
            c.name(),
            have,
            want
        )));
    }
    Ok(())
}

/// Sum of absolute bin deviations over all controls divided by the total target count.
///
/// A zero total target gives 0 for an empty synthesis and +∞ otherwise.
pub fn compute_fitness(
    synth: &BinCounts,
    targets: &ZoneTargets,
    controls: &[ControlSpec],
) -> Result<f64> {
    let mut deviation = 0.0;
    let mut total = 0.0;
    for c in controls {
        check_bins(synth, c, "synthetic counts")?;
        check_bins(&targets.control_targets, c, "targets")?;
        let s = &synth[c.name()];
        let t = &targets.control_targets[c.name()];
        for b in &c.bins {
            let tv = t[&b.label];
            deviation += (s[&b.label] - tv).abs();
            total += tv;
        }
    }
    Ok(if total > 0.0 {
        deviation / total
    } else if deviation > 0.0 {
        f64::INFINITY
    } else {
        0.0
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisSettings {
    /// Swap attempts per target household.
    pub attempts_per_household: u32,
    /// Consecutive rejections before a proposal is force-accepted.
    pub force_accept_after: u32,
}

impl Default for SynthesisSettings {
    fn default() -> Self {
        SynthesisSettings {
            attempts_per_household: 50,
            force_accept_after: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub attempt: u32,
    pub fitness: f64,
    pub forced: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZoneSynthesis {
    pub zone_id: ZoneId,
    /// Clones with zone-local ids `0..n` (households) and `0..m` (persons).
    pub households: Vec<SampleHousehold>,
    pub fitness: f64,
    /// Fitness after the initial draw and after every accepted swap.
    pub trace: Vec<TraceStep>,
    /// The attempt budget ran out before an exact match was found.
    pub budget_exhausted: bool,
}

/// Flat, index-based view of the controls used inside the hill climber.
struct FitnessState {
    target: Vec<f64>,
    count: Vec<f64>,
    /// Per sample household, the (flat bin index, count) contributions.
    contrib: Vec<Vec<(usize, f64)>>,
    deviation: f64,
    total: f64,
}

impl FitnessState {
    fn new(sample: &[SampleHousehold], targets: &ZoneTargets, controls: &[ControlSpec]) -> Result<Self> {
        let mut offsets = Vec::with_capacity(controls.len());
        let mut target = Vec::new();
        for c in controls {
            check_bins(&targets.control_targets, c, "targets")?;
            offsets.push(target.len());
            let t = &targets.control_targets[c.name()];
            target.extend(c.bins.iter().map(|b| t[&b.label]));
        }
        let contrib = sample
            .iter()
            .map(|sh| {
                let mut v: BTreeMap<usize, f64> = BTreeMap::new();
                for (c, &off) in controls.iter().zip(&offsets) {
                    match c.level {
                        ControlLevel::Household => {
                            if let Some(b) = c.household_bin(&sh.household) {
                                *v.entry(off + b).or_default() += 1.0;
                            }
                        }
                        ControlLevel::Person => {
                            for p in &sh.members {
                                if let Some(b) = c.person_bin(p) {
                                    *v.entry(off + b).or_default() += 1.0;
                                }
                            }
                        }
                    }
                }
                v.into_iter().collect()
            })
            .collect();
        let total = target.iter().sum();
        let deviation = target.iter().sum();
        Ok(FitnessState {
            count: vec![0.0; target.len()],
            target,
            contrib,
            deviation,
            total,
        })
    }

    fn fitness_of(&self, deviation: f64) -> f64 {
        if self.total > 0.0 {
            deviation / self.total
        } else if deviation > 1e-9 {
            f64::INFINITY
        } else {
            0.0
        }
    }

    fn fitness(&self) -> f64 {
        self.fitness_of(self.deviation)
    }

    fn apply(&mut self, idx: usize, sign: f64) {
        for &(i, n) in &self.contrib[idx] {
            let before = (self.count[i] - self.target[i]).abs();
            self.count[i] += sign * n;
            self.deviation += (self.count[i] - self.target[i]).abs() - before;
        }
    }

    /// Deviation after swapping `out` for `inn`, without committing.
    fn swapped_deviation(&mut self, out: usize, inn: usize) -> f64 {
        self.apply(out, -1.0);
        self.apply(inn, 1.0);
        let d = self.deviation;
        self.apply(inn, -1.0);
        self.apply(out, 1.0);
        d
    }

    /// Exact recount, removing drift from incremental updates.
    fn recompute(&mut self) {
        self.deviation = self
            .count
            .iter()
            .zip(&self.target)
            .map(|(c, t)| (c - t).abs())
            .sum();
    }
}

fn clone_into_zone(selection: &[usize], sample: &[SampleHousehold], zone: ZoneId) -> Vec<SampleHousehold> {
    let mut next_person = 0u32;
    selection
        .iter()
        .enumerate()
        .map(|(h, &idx)| {
            let src = &sample[idx];
            let hid = HouseholdId(h as u32);
            let members: Vec<Person> = src
                .members
                .iter()
                .map(|p| {
                    let id = PersonId(next_person);
                    next_person += 1;
                    Person {
                        id,
                        household_id: hid,
                        zone_id: zone,
                        ..p.clone()
                    }
                })
                .collect();
            SampleHousehold {
                household: Household {
                    id: hid,
                    zone_id: zone,
                    member_ids: members.iter().map(|p| p.id).collect(),
                    ..src.household.clone()
                },
                members,
            }
        })
        .collect()
}

/// Draws exactly `targets.household_count` households for one zone.
pub fn synthesize_zone(
    sample: &[SampleHousehold],
    targets: &ZoneTargets,
    controls: &[ControlSpec],
    rng: &mut SimRng,
    settings: &SynthesisSettings,
) -> Result<ZoneSynthesis> {
    let n = targets.household_count as usize;
    let mut state = FitnessState::new(sample, targets, controls)?;
    if n == 0 {
        return Ok(ZoneSynthesis {
            zone_id: targets.zone_id,
            households: Vec::new(),
            fitness: state.fitness(),
            trace: vec![TraceStep {
                attempt: 0,
                fitness: state.fitness(),
                forced: false,
            }],
            budget_exhausted: false,
        });
    }
    if sample.is_empty() {
        return Err(Error::config(
            "inputs.microdata_households",
            format!("empty sample but zone {} needs {n} households", targets.zone_id),
        ));
    }

    let mut selection: Vec<usize> = (0..n).map(|_| rng.random_range(0..sample.len())).collect();
    for &idx in &selection {
        state.apply(idx, 1.0);
    }
    state.recompute();
    let mut current = state.fitness();
    let mut trace = vec![TraceStep {
        attempt: 0,
        fitness: current,
        forced: false,
    }];
    let mut best = (current, selection.clone());

    let budget = settings.attempts_per_household.saturating_mul(n as u32);
    let mut rejections = 0u32;
    let mut attempt = 0u32;
    while attempt < budget && current > 0.0 {
        attempt += 1;
        let slot = rng.random_range(0..n);
        let cand = rng.random_range(0..sample.len());
        let old = selection[slot];
        let proposed = if cand == old {
            current
        } else {
            let d = state.swapped_deviation(old, cand);
            state.fitness_of(d)
        };
        let improves = proposed < current;
        let forced = !improves && rejections + 1 >= settings.force_accept_after;
        if improves || forced {
            state.apply(old, -1.0);
            state.apply(cand, 1.0);
            state.recompute();
            selection[slot] = cand;
            current = state.fitness();
            rejections = 0;
            trace.push(TraceStep {
                attempt,
                fitness: current,
                forced,
            });
            if current < best.0 {
                best = (current, selection.clone());
            }
        } else {
            rejections += 1;
        }
    }

    let (fitness, selection) = best;
    Ok(ZoneSynthesis {
        zone_id: targets.zone_id,
        households: clone_into_zone(&selection, sample, targets.zone_id),
        fitness,
        trace,
        budget_exhausted: fitness > 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneSummary {
    pub zone_id: ZoneId,
    pub fitness: f64,
    pub budget_exhausted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizedPopulation {
    pub population: Population,
    pub zones: Vec<ZoneSummary>,
}

/// Runs [`synthesize_zone`] for every zone with a stream derived from `(seed, zone)`
/// and renumbers ids globally in zone-id order.
pub fn synthesize_population(
    sample: &[SampleHousehold],
    all_targets: &[ZoneTargets],
    controls: &[ControlSpec],
    seed: u64,
    settings: &SynthesisSettings,
) -> Result<SynthesizedPopulation> {
    let mut zones: Vec<&ZoneTargets> = all_targets.iter().collect();
    zones.sort_by_key(|z| z.zone_id);
    if let Some(w) = zones.windows(2).find(|w| w[0].zone_id == w[1].zone_id) {
        return Err(Error::config(
            "inputs.zone_targets",
            format!("duplicate zone id {}", w[0].zone_id),
        ));
    }
    for sh in sample {
        sh.validate()?;
    }

    let results: Vec<Result<ZoneSynthesis>> = zones
        .par_iter()
        .map(|t| {
            let mut rng = rng::stream(seed, Domain::Synthesis, &[t.zone_id.0 as u64]);
            synthesize_zone(sample, t, controls, &mut rng, settings).map_err(|e| Error::Zone {
                zone: t.zone_id.0,
                source: Box::new(e),
            })
        })
        .collect();

    let mut population = Population::default();
    let mut summaries = Vec::with_capacity(results.len());
    for r in results {
        let zs = r?;
        if zs.budget_exhausted {
            log::warn!(
                "zone {}: synthesis budget exhausted at fitness {:.4}",
                zs.zone_id,
                zs.fitness
            );
        }
        let hh_base = population.households.len() as u32;
        let p_base = population.persons.len() as u32;
        for sh in zs.households {
            let mut hh = sh.household;
            hh.id = HouseholdId(hh.id.0 + hh_base);
            hh.member_ids = hh.member_ids.iter().map(|p| PersonId(p.0 + p_base)).collect();
            population.households.push(hh.clone());
            for mut p in sh.members {
                p.id = PersonId(p.id.0 + p_base);
                p.household_id = hh.id;
                population.persons.push(p);
            }
        }
        summaries.push(ZoneSummary {
            zone_id: zs.zone_id,
            fitness: zs.fitness,
            budget_exhausted: zs.budget_exhausted,
        });
    }
    population.persons.sort_by_key(|p| p.id);
    Ok(SynthesizedPopulation {
        population,
        zones: summaries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub zone_id: ZoneId,
    pub control: String,
    pub bin: String,
    pub target: f64,
    pub synthesized: f64,
    /// |synth − target| / target, or the absolute deviation when the target is zero.
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneReport {
    pub zone_id: ZoneId,
    pub fitness: f64,
    pub max_rel_error: f64,
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub zones: Vec<ZoneReport>,
}

/// Read-only comparison of a population against the zone targets.
pub fn validate_population(
    population: &Population,
    all_targets: &[ZoneTargets],
    controls: &[ControlSpec],
) -> Result<SynthesisReport> {
    let by_zone = population.by_zone();
    let empty = Vec::new();
    let mut zones: Vec<&ZoneTargets> = all_targets.iter().collect();
    zones.sort_by_key(|z| z.zone_id);
    let mut report = SynthesisReport::default();
    for t in zones {
        let hhs = by_zone.get(&t.zone_id).unwrap_or(&empty);
        let counts = tabulate(hhs, controls);
        let fitness = compute_fitness(&counts, t, controls)?;
        let mut rows = Vec::new();
        for c in controls {
            for b in &c.bins {
                let target = t.control_targets[c.name()][&b.label];
                let synthesized = counts[c.name()][&b.label];
                let dev = (synthesized - target).abs();
                rows.push(ReportRow {
                    zone_id: t.zone_id,
                    control: c.name().to_string(),
                    bin: b.label.clone(),
                    target,
                    synthesized,
                    rel_error: if target > 0.0 { dev / target } else { dev },
                });
            }
        }
        let max_rel_error = rows.iter().map(|r| r.rel_error).fold(0.0, f64::max);
        report.zones.push(ZoneReport {
            zone_id: t.zone_id,
            fitness,
            max_rel_error,
            rows,
        });
    }
    Ok(report)
}
