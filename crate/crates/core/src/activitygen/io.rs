//! CSV formats of the activity generation inputs and the initial plans.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    ActivityChain, ChainFrequencyTable, DistBin, DistKind, EmpiricalDistribution, Facility, OdModel,
    TimeModels, Zone,
};
use crate::csvio::{read_records, write_records};
use crate::error::{Error, Result};
use crate::ids::{FacilityId, PersonId, ZoneId};
use crate::plan::{Activity, DailyPlan, Leg};
use crate::types::{ActivityType, Coord, Mode, ParkingLevel, Spc};

#[derive(Serialize, Deserialize)]
struct ChainRow {
    spc: Spc,
    chain: String,
    frequency: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct OdRow {
    origin_zone: u32,
    activity_type: ActivityType,
    dest_zone: u32,
    prob: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct FacilityRow {
    facility_id: u32,
    zone_id: u32,
    x: f64,
    y: f64,
    /// Activity letters separated by `;`, e.g. `W;P`.
    types: String,
    size: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ZoneRow {
    zone_id: u32,
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
    parking_level: ParkingLevel,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct TimeModelRow {
    activity_type: ActivityType,
    kind: DistKind,
    bin_start_sec: u32,
    bin_end_sec: u32,
    weight: f64,
}

#[derive(Serialize, Deserialize)]
struct PlanRow {
    #[serde(rename = "personId")]
    person_id: u32,
    #[serde(rename = "elemIndex")]
    elem_index: u32,
    kind: String,
    #[serde(rename = "activityType|mode")]
    what: String,
    #[serde(rename = "facilityId")]
    facility_id: Option<u32>,
    #[serde(rename = "plannedEndTimeSec")]
    planned_end_sec: Option<u32>,
}

pub const CHAIN_HEADER: &[&str] = &["spc", "chain", "frequency"];
pub const OD_HEADER: &[&str] = &["originZone", "activityType", "destZone", "prob"];
pub const FACILITY_HEADER: &[&str] = &["facilityId", "zoneId", "x", "y", "types", "size"];
pub const ZONE_HEADER: &[&str] = &["zoneId", "xMin", "yMin", "xMax", "yMax", "parkingLevel"];
pub const TIME_MODEL_HEADER: &[&str] = &["activityType", "kind", "binStartSec", "binEndSec", "weight"];
pub const PLAN_HEADER: &[&str] = &[
    "personId",
    "elemIndex",
    "kind",
    "activityType|mode",
    "facilityId",
    "plannedEndTimeSec",
];

pub fn read_chain_table(path: &Path) -> Result<ChainFrequencyTable> {
    let rows: Vec<ChainRow> = read_records(path)?;
    let mut table: BTreeMap<Spc, Vec<(ActivityChain, f64)>> = BTreeMap::new();
    for r in rows {
        table.entry(r.spc).or_default().push((r.chain.parse()?, r.frequency));
    }
    ChainFrequencyTable::new(table)
}

pub fn write_chain_table(path: &Path, table: &ChainFrequencyTable) -> Result<()> {
    let rows = table.rows().flat_map(|(spc, row)| {
        row.iter().map(move |(c, f)| ChainRow {
            spc,
            chain: c.to_string(),
            frequency: *f,
        })
    });
    write_records(path, CHAIN_HEADER, rows)
}

pub fn read_od_model(path: &Path) -> Result<OdModel> {
    let rows: Vec<OdRow> = read_records(path)?;
    let mut od: BTreeMap<(ZoneId, ActivityType), Vec<(ZoneId, f64)>> = BTreeMap::new();
    for r in rows {
        od.entry((ZoneId(r.origin_zone), r.activity_type))
            .or_default()
            .push((ZoneId(r.dest_zone), r.prob));
    }
    OdModel::new(od)
}

pub fn write_od_model(path: &Path, od: &OdModel) -> Result<()> {
    let rows = od.rows().flat_map(|(o, t, row)| {
        row.iter().map(move |(d, p)| OdRow {
            origin_zone: o.0,
            activity_type: t,
            dest_zone: d.0,
            prob: *p,
        })
    });
    write_records(path, OD_HEADER, rows)
}

fn parse_types(s: &str) -> Result<Vec<ActivityType>> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let p = p.trim();
            let mut cs = p.chars();
            match (cs.next(), cs.next()) {
                (Some(c), None) => ActivityType::from_letter(c.to_ascii_uppercase())
                    .ok_or_else(|| Error::Data(format!("unknown activity letter `{p}`"))),
                _ => p.parse(),
            }
        })
        .collect()
}

pub fn read_facilities(path: &Path) -> Result<Vec<Facility>> {
    let rows: Vec<FacilityRow> = read_records(path)?;
    rows.into_iter()
        .map(|r| {
            Ok(Facility {
                id: FacilityId(r.facility_id),
                zone_id: ZoneId(r.zone_id),
                coord: Coord::new(r.x, r.y),
                types: parse_types(&r.types)?,
                size: r.size,
            })
        })
        .collect()
}

pub fn write_facilities(path: &Path, facilities: &[Facility]) -> Result<()> {
    let rows = facilities.iter().map(|f| FacilityRow {
        facility_id: f.id.0,
        zone_id: f.zone_id.0,
        x: f.coord.x,
        y: f.coord.y,
        types: f.types.iter().map(|t| t.letter().to_string()).collect::<Vec<_>>().join(";"),
        size: f.size,
    });
    write_records(path, FACILITY_HEADER, rows)
}

pub fn read_zones(path: &Path) -> Result<Vec<Zone>> {
    let rows: Vec<ZoneRow> = read_records(path)?;
    rows.into_iter()
        .map(|r| {
            if r.x_min > r.x_max || r.y_min > r.y_max {
                return Err(Error::Data(format!("zone {} has an inverted bounding box", r.zone_id)));
            }
            Ok(Zone {
                id: ZoneId(r.zone_id),
                min: Coord::new(r.x_min, r.y_min),
                max: Coord::new(r.x_max, r.y_max),
                parking: r.parking_level,
            })
        })
        .collect()
}

pub fn write_zones(path: &Path, zones: &[Zone]) -> Result<()> {
    let rows = zones.iter().map(|z| ZoneRow {
        zone_id: z.id.0,
        x_min: z.min.x,
        y_min: z.min.y,
        x_max: z.max.x,
        y_max: z.max.y,
        parking_level: z.parking,
    });
    write_records(path, ZONE_HEADER, rows)
}

pub fn read_time_models(path: &Path) -> Result<TimeModels> {
    let rows: Vec<TimeModelRow> = read_records(path)?;
    let mut grouped: BTreeMap<(ActivityType, DistKind), Vec<DistBin>> = BTreeMap::new();
    for r in rows {
        grouped.entry((r.activity_type, r.kind)).or_default().push(DistBin {
            start_sec: r.bin_start_sec,
            end_sec: r.bin_end_sec,
            weight: r.weight,
        });
    }
    let mut models = TimeModels::default();
    for ((t, k), mut bins) in grouped {
        bins.sort_by_key(|b| b.start_sec);
        let dist = EmpiricalDistribution::new(bins)
            .map_err(|e| Error::config("inputs.time_models", format!("{t} {}: {e}", k.as_str())))?;
        models.insert(t, k, dist);
    }
    Ok(models)
}

pub fn write_time_models(path: &Path, models: &TimeModels) -> Result<()> {
    let rows = models.iter().flat_map(|(t, k, d)| {
        d.bins().iter().map(move |b| TimeModelRow {
            activity_type: t,
            kind: k,
            bin_start_sec: b.start_sec,
            bin_end_sec: b.end_sec,
            weight: b.weight,
        })
    });
    write_records(path, TIME_MODEL_HEADER, rows)
}

/// Activities and legs interleaved; `elemIndex` counts both.
pub fn write_plans<'a>(path: &Path, plans: impl IntoIterator<Item = (PersonId, &'a DailyPlan)>) -> Result<()> {
    let rows = plans.into_iter().flat_map(|(pid, plan)| {
        let mut rows = Vec::with_capacity(plan.activities.len() * 2);
        for (i, a) in plan.activities.iter().enumerate() {
            rows.push(PlanRow {
                person_id: pid.0,
                elem_index: 2 * i as u32,
                kind: "activity".into(),
                what: a.kind.as_str().into(),
                facility_id: Some(a.facility.0),
                planned_end_sec: a.planned_end_sec,
            });
            if let Some(l) = plan.legs.get(i) {
                rows.push(PlanRow {
                    person_id: pid.0,
                    elem_index: 2 * i as u32 + 1,
                    kind: "leg".into(),
                    what: l.mode.as_str().into(),
                    facility_id: None,
                    planned_end_sec: None,
                });
            }
        }
        rows
    });
    write_records(path, PLAN_HEADER, rows)
}

pub fn read_plans(path: &Path) -> Result<Vec<(PersonId, DailyPlan)>> {
    let rows: Vec<PlanRow> = read_records(path)?;
    let mut grouped: BTreeMap<u32, Vec<PlanRow>> = BTreeMap::new();
    for r in rows {
        grouped.entry(r.person_id).or_default().push(r);
    }
    grouped
        .into_iter()
        .map(|(pid, mut rows)| {
            rows.sort_by_key(|r| r.elem_index);
            let mut activities = Vec::new();
            let mut legs = Vec::new();
            for r in rows {
                match r.kind.as_str() {
                    "activity" => {
                        let f = r
                            .facility_id
                            .ok_or_else(|| Error::Data(format!("person {pid}: activity without facility")))?;
                        activities.push(Activity::new(r.what.parse()?, FacilityId(f), r.planned_end_sec));
                    }
                    "leg" => legs.push(Leg::new(r.what.parse::<Mode>()?)),
                    other => return Err(Error::Data(format!("person {pid}: unknown element kind `{other}`"))),
                }
            }
            Ok((PersonId(pid), DailyPlan::new(activities, legs)?))
        })
        .collect()
}
