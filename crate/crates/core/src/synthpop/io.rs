//! CSV readers and writers for microdata, zone targets, populations and reports.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ControlSpec, Household, Person, Population, SampleHousehold, SynthesisReport, ZoneTargets};
use crate::csvio::{read_records, write_records};
use crate::error::{Error, Result};
use crate::ids::{HouseholdId, PersonId, ZoneId};
use crate::types::{Sex, Spc};

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct MicroHouseholdRow {
    household_id: u32,
    income_eur: f64,
    cars: u32,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct MicroPersonRow {
    person_id: u32,
    household_id: u32,
    age: u32,
    sex: Sex,
    spc: Spc,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct TargetRow {
    zone_id: u32,
    household_count: u32,
    control: String,
    bin: String,
    target: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct HouseholdRow {
    household_id: u32,
    zone_id: u32,
    income_eur: f64,
    cars: u32,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct PersonRow {
    person_id: u32,
    household_id: u32,
    age: u32,
    sex: Sex,
    spc: Spc,
    zone_id: u32,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct ReportCsvRow<'a> {
    zone_id: u32,
    control: &'a str,
    bin: &'a str,
    target: f64,
    synthesized: f64,
    rel_error: f64,
    zone_fitness: f64,
}

pub const MICRO_HOUSEHOLD_HEADER: &[&str] = &["householdId", "incomeEur", "cars"];
pub const MICRO_PERSON_HEADER: &[&str] = &["personId", "householdId", "age", "sex", "spc"];
pub const TARGET_HEADER: &[&str] = &["zoneId", "householdCount", "control", "bin", "target"];
pub const HOUSEHOLD_HEADER: &[&str] = &["householdId", "zoneId", "incomeEur", "cars"];
pub const PERSON_HEADER: &[&str] = &["personId", "householdId", "age", "sex", "spc", "zoneId"];
pub const REPORT_HEADER: &[&str] = &[
    "zoneId",
    "control",
    "bin",
    "target",
    "synthesized",
    "relError",
    "zoneFitness",
];

/// Joins microdata households with their members; members keep file order.
pub fn read_sample(households: &Path, persons: &Path) -> Result<Vec<SampleHousehold>> {
    let hh_rows: Vec<MicroHouseholdRow> = read_records(households)?;
    let p_rows: Vec<MicroPersonRow> = read_records(persons)?;
    let mut index = BTreeMap::new();
    let mut sample: Vec<SampleHousehold> = Vec::with_capacity(hh_rows.len());
    for r in hh_rows {
        if index.insert(r.household_id, sample.len()).is_some() {
            return Err(Error::Data(format!("duplicate microdata household {}", r.household_id)));
        }
        sample.push(SampleHousehold {
            household: Household {
                id: HouseholdId(r.household_id),
                zone_id: ZoneId(0),
                income_eur: r.income_eur,
                cars: r.cars,
                member_ids: Vec::new(),
            },
            members: Vec::new(),
        });
    }
    for r in p_rows {
        let &i = index.get(&r.household_id).ok_or_else(|| {
            Error::Data(format!("person {} refers to unknown household {}", r.person_id, r.household_id))
        })?;
        let sh = &mut sample[i];
        sh.household.member_ids.push(PersonId(r.person_id));
        sh.members.push(Person {
            id: PersonId(r.person_id),
            household_id: HouseholdId(r.household_id),
            age: r.age,
            sex: r.sex,
            spc: r.spc,
            zone_id: ZoneId(0),
        });
    }
    for sh in &sample {
        sh.validate()?;
    }
    Ok(sample)
}

pub fn write_sample(households: &Path, persons: &Path, sample: &[SampleHousehold]) -> Result<()> {
    write_records(
        households,
        MICRO_HOUSEHOLD_HEADER,
        sample.iter().map(|sh| MicroHouseholdRow {
            household_id: sh.household.id.0,
            income_eur: sh.household.income_eur,
            cars: sh.household.cars,
        }),
    )?;
    write_records(
        persons,
        MICRO_PERSON_HEADER,
        sample.iter().flat_map(|sh| &sh.members).map(|p| MicroPersonRow {
            person_id: p.id.0,
            household_id: p.household_id.0,
            age: p.age,
            sex: p.sex,
            spc: p.spc,
        }),
    )
}

/// Reads zone targets; bins of a control that are not listed count as zero.
pub fn read_zone_targets(path: &Path, controls: &[ControlSpec]) -> Result<Vec<ZoneTargets>> {
    let rows: Vec<TargetRow> = read_records(path)?;
    let mut zones: BTreeMap<u32, ZoneTargets> = BTreeMap::new();
    for r in rows {
        let z = zones.entry(r.zone_id).or_insert_with(|| ZoneTargets {
            zone_id: ZoneId(r.zone_id),
            household_count: r.household_count,
            control_targets: controls
                .iter()
                .map(|c| {
                    let bins = c.bins.iter().map(|b| (b.label.clone(), 0.0)).collect();
                    (c.name().to_string(), bins)
                })
                .collect(),
        });
        if z.household_count != r.household_count {
            return Err(Error::Data(format!(
                "zone {}: inconsistent householdCount {} vs {}",
                r.zone_id, z.household_count, r.household_count
            )));
        }
        if !(r.target >= 0.0) {
            return Err(Error::Data(format!("zone {}: negative target", r.zone_id)));
        }
        let Some(bins) = z.control_targets.get_mut(r.control.as_str()) else {
            // Targets for controls that are not active are ignored.
            continue;
        };
        let slot = bins.get_mut(r.bin.as_str()).ok_or_else(|| {
            Error::Structural(format!("zone {}: unknown bin `{}` for `{}`", r.zone_id, r.bin, r.control))
        })?;
        *slot = r.target;
    }
    Ok(zones.into_values().collect())
}

pub fn write_zone_targets(path: &Path, targets: &[ZoneTargets]) -> Result<()> {
    let rows = targets.iter().flat_map(|z| {
        z.control_targets.iter().flat_map(move |(c, bins)| {
            bins.iter().map(move |(b, &t)| TargetRow {
                zone_id: z.zone_id.0,
                household_count: z.household_count,
                control: c.clone(),
                bin: b.clone(),
                target: t,
            })
        })
    });
    write_records(path, TARGET_HEADER, rows)
}

pub fn write_population(households: &Path, persons: &Path, population: &Population) -> Result<()> {
    write_records(
        households,
        HOUSEHOLD_HEADER,
        population.households.iter().map(|h| HouseholdRow {
            household_id: h.id.0,
            zone_id: h.zone_id.0,
            income_eur: h.income_eur,
            cars: h.cars,
        }),
    )?;
    write_records(
        persons,
        PERSON_HEADER,
        population.persons.iter().map(|p| PersonRow {
            person_id: p.id.0,
            household_id: p.household_id.0,
            age: p.age,
            sex: p.sex,
            spc: p.spc,
            zone_id: p.zone_id.0,
        }),
    )
}

pub fn read_population(households: &Path, persons: &Path) -> Result<Population> {
    let hh_rows: Vec<HouseholdRow> = read_records(households)?;
    let p_rows: Vec<PersonRow> = read_records(persons)?;
    let mut index = BTreeMap::new();
    let mut population = Population::default();
    for r in hh_rows {
        index.insert(r.household_id, population.households.len());
        population.households.push(Household {
            id: HouseholdId(r.household_id),
            zone_id: ZoneId(r.zone_id),
            income_eur: r.income_eur,
            cars: r.cars,
            member_ids: Vec::new(),
        });
    }
    for r in p_rows {
        let &i = index.get(&r.household_id).ok_or_else(|| {
            Error::Data(format!("person {} refers to unknown household {}", r.person_id, r.household_id))
        })?;
        let hh = &mut population.households[i];
        if hh.zone_id.0 != r.zone_id {
            return Err(Error::Data(format!("person {} lives outside its household zone", r.person_id)));
        }
        hh.member_ids.push(PersonId(r.person_id));
        population.persons.push(Person {
            id: PersonId(r.person_id),
            household_id: HouseholdId(r.household_id),
            age: r.age,
            sex: r.sex,
            spc: r.spc,
            zone_id: ZoneId(r.zone_id),
        });
    }
    population.persons.sort_by_key(|p| p.id);
    if let Some(h) = population.households.iter().find(|h| h.member_ids.is_empty()) {
        return Err(Error::Data(format!("household {} has no members", h.id)));
    }
    Ok(population)
}

pub fn write_report(path: &Path, report: &SynthesisReport) -> Result<()> {
    let rows = report.zones.iter().flat_map(|z| {
        z.rows.iter().map(move |r| ReportCsvRow {
            zone_id: r.zone_id.0,
            control: &r.control,
            bin: &r.bin,
            target: r.target,
            synthesized: r.synthesized,
            rel_error: r.rel_error,
            zone_fitness: z.fitness,
        })
    });
    write_records(path, REPORT_HEADER, rows)
}
