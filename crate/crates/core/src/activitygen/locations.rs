//! Zones, facilities, the OD model, and gravity-based location choice.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::chains::categorical;
use crate::error::{Error, Result};
use crate::ids::{FacilityId, ZoneId};
use crate::rng::SimRng;
use crate::types::{ActivityType, Coord, ParkingLevel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub id: ZoneId,
    pub min: Coord,
    pub max: Coord,
    pub parking: ParkingLevel,
}

impl Zone {
    pub fn centroid(&self) -> Coord {
        Coord::new((self.min.x + self.max.x) / 2.0, (self.min.y + self.max.y) / 2.0)
    }

    pub fn contains(&self, c: &Coord) -> bool {
        c.x >= self.min.x && c.x <= self.max.x && c.y >= self.min.y && c.y <= self.max.y
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Facility {
    pub id: FacilityId,
    pub zone_id: ZoneId,
    pub coord: Coord,
    pub types: Vec<ActivityType>,
    pub size: f64,
}

impl Facility {
    pub fn serves(&self, t: ActivityType) -> bool {
        self.types.contains(&t)
    }
}

/// Facilities indexed by id and by (zone, activity type).
#[derive(Debug, Clone, Default)]
pub struct FacilitySet {
    facilities: Vec<Facility>,
    by_id: BTreeMap<FacilityId, usize>,
    by_zone_type: BTreeMap<(ZoneId, ActivityType), Vec<usize>>,
    zones: BTreeMap<ZoneId, Zone>,
}

impl FacilitySet {
    pub fn new(zones: Vec<Zone>, mut facilities: Vec<Facility>) -> Result<Self> {
        facilities.sort_by_key(|f| f.id);
        let zones: BTreeMap<ZoneId, Zone> = zones.into_iter().map(|z| (z.id, z)).collect();
        let mut set = FacilitySet {
            by_id: BTreeMap::new(),
            by_zone_type: BTreeMap::new(),
            facilities: Vec::new(),
            zones,
        };
        for (i, f) in facilities.iter().enumerate() {
            if !(f.size > 0.0) {
                return Err(Error::Data(format!("facility {} has non-positive size", f.id)));
            }
            let zone = set
                .zones
                .get(&f.zone_id)
                .ok_or_else(|| Error::Data(format!("facility {} in unknown zone {}", f.id, f.zone_id)))?;
            if !zone.contains(&f.coord) {
                return Err(Error::Data(format!("facility {} lies outside zone {}", f.id, f.zone_id)));
            }
            if set.by_id.insert(f.id, i).is_some() {
                return Err(Error::Data(format!("duplicate facility id {}", f.id)));
            }
            for &t in &f.types {
                set.by_zone_type.entry((f.zone_id, t)).or_default().push(i);
            }
        }
        set.facilities = facilities;
        Ok(set)
    }

    pub fn get(&self, id: FacilityId) -> Option<&Facility> {
        self.by_id.get(&id).map(|&i| &self.facilities[i])
    }

    pub fn facility(&self, id: FacilityId) -> Result<&Facility> {
        self.get(id).ok_or_else(|| Error::Data(format!("unknown facility {id}")))
    }

    pub fn all(&self) -> &[Facility] {
        &self.facilities
    }

    pub fn zone(&self, id: ZoneId) -> Option<&Zone> {
        self.zones.get(&id)
    }

    pub fn zones(&self) -> impl Iterator<Item = &Zone> {
        self.zones.values()
    }

    pub fn eligible(&self, zone: ZoneId, t: ActivityType) -> impl Iterator<Item = &Facility> {
        self.by_zone_type
            .get(&(zone, t))
            .into_iter()
            .flatten()
            .map(|&i| &self.facilities[i])
    }

    /// Parking level of the zone a facility belongs to.
    pub fn parking_at(&self, id: FacilityId) -> ParkingLevel {
        self.get(id)
            .and_then(|f| self.zones.get(&f.zone_id))
            .map(|z| z.parking)
            .unwrap_or(ParkingLevel::Low)
    }
}

/// Per (origin zone, activity type), a probability row over destination zones.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OdModel {
    rows: BTreeMap<(ZoneId, ActivityType), Vec<(ZoneId, f64)>>,
}

impl OdModel {
    pub fn new(rows: BTreeMap<(ZoneId, ActivityType), Vec<(ZoneId, f64)>>) -> Result<Self> {
        for ((o, t), row) in &rows {
            let sum: f64 = row.iter().map(|(_, p)| p).sum();
            if row.iter().any(|(_, p)| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::config(
                    "inputs.od_model",
                    format!("row ({o}, {t}) sums to {sum}, expected 1"),
                ));
            }
        }
        Ok(OdModel { rows })
    }

    pub fn row(&self, origin: ZoneId, t: ActivityType) -> Option<&[(ZoneId, f64)]> {
        self.rows.get(&(origin, t)).map(|r| r.as_slice())
    }

    pub fn rows(&self) -> impl Iterator<Item = (ZoneId, ActivityType, &[(ZoneId, f64)])> {
        self.rows.iter().map(|((o, t), r)| (*o, *t, r.as_slice()))
    }

    /// Gravity OD: destination weight = attraction (sum of facility sizes serving the
    /// type) × exp(−centroid distance / theta). Home rows are omitted.
    pub fn gravity(facilities: &FacilitySet, theta_m: f64) -> Result<Self> {
        let zones: Vec<&Zone> = facilities.zones().collect();
        let mut rows = BTreeMap::new();
        for t in ActivityType::ALL {
            if t == ActivityType::Home {
                continue;
            }
            let attraction: Vec<f64> = zones
                .iter()
                .map(|z| facilities.eligible(z.id, t).map(|f| f.size).sum())
                .collect();
            for o in &zones {
                let w: Vec<f64> = zones
                    .iter()
                    .zip(&attraction)
                    .map(|(d, a)| a * (-o.centroid().distance(&d.centroid()) / theta_m).exp())
                    .collect();
                let total: f64 = w.iter().sum();
                if total <= 0.0 {
                    continue;
                }
                let row: Vec<(ZoneId, f64)> = zones
                    .iter()
                    .zip(&w)
                    .filter(|(_, w)| **w > 0.0)
                    .map(|(d, w)| (d.id, w / total))
                    .collect();
                rows.insert((o.id, t), row);
            }
        }
        OdModel::new(rows)
    }
}

/// Home activities are anchored to the home zone; other types draw from the OD row.
pub fn choose_destination_zone(
    origin: ZoneId,
    home_zone: ZoneId,
    t: ActivityType,
    od: &OdModel,
    rng: &mut SimRng,
) -> Result<ZoneId> {
    if t == ActivityType::Home {
        return Ok(home_zone);
    }
    let row = od
        .row(origin, t)
        .filter(|r| !r.is_empty())
        .ok_or_else(|| Error::config("inputs.od_model", format!("no row for origin {origin}, type {t}")))?;
    Ok(row[categorical(row.iter().map(|(_, p)| *p), rng)].0)
}

pub fn gravity_weight(size: f64, origin: &Coord, at: &Coord, theta_m: f64) -> f64 {
    size * (-origin.distance(at) / theta_m).exp()
}

/// Gravity draw among the zone's facilities serving `t`; if there is none, the nearest
/// eligible facility anywhere (ties by id) is returned and the fallback is logged.
pub fn choose_facility(
    zone: ZoneId,
    t: ActivityType,
    facilities: &FacilitySet,
    origin: &Coord,
    theta_m: f64,
    rng: &mut SimRng,
) -> Result<FacilityId> {
    let eligible: Vec<&Facility> = facilities.eligible(zone, t).collect();
    if !eligible.is_empty() {
        let weights: Vec<f64> = eligible
            .iter()
            .map(|f| gravity_weight(f.size, origin, &f.coord, theta_m))
            .collect();
        // Far-away facilities can underflow to zero weight; fall back to size alone.
        let i = if weights.iter().sum::<f64>() > 0.0 {
            categorical(weights.iter().copied(), rng)
        } else {
            categorical(eligible.iter().map(|f| f.size), rng)
        };
        return Ok(eligible[i].id);
    }
    let nearest = facilities
        .all()
        .iter()
        .filter(|f| f.serves(t))
        .min_by(|a, b| origin.distance(&a.coord).total_cmp(&origin.distance(&b.coord)).then(a.id.cmp(&b.id)))
        .ok_or_else(|| Error::config("inputs.facilities", format!("no facility serves {t}")))?;
    log::warn!("zone {zone} has no {t} facility; using nearest facility {}", nearest.id);
    Ok(nearest.id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};

    fn zone(id: u32, x0: f64) -> Zone {
        Zone {
            id: ZoneId(id),
            min: Coord::new(x0, 0.0),
            max: Coord::new(x0 + 1000.0, 1000.0),
            parking: ParkingLevel::Low,
        }
    }

    fn fac(id: u32, zone: u32, x: f64, y: f64, types: &[ActivityType], size: f64) -> Facility {
        Facility {
            id: FacilityId(id),
            zone_id: ZoneId(zone),
            coord: Coord::new(x, y),
            types: types.to_vec(),
            size,
        }
    }

    #[test]
    fn home_is_anchored() {
        let od = OdModel::default();
        let mut rng = stream(0, Domain::Person, &[0]);
        let z = choose_destination_zone(ZoneId(4), ZoneId(9), ActivityType::Home, &od, &mut rng).unwrap();
        assert_eq!(z, ZoneId(9));
        assert!(choose_destination_zone(ZoneId(4), ZoneId(9), ActivityType::Work, &od, &mut rng)
            .unwrap_err()
            .is_config());
    }

    #[test]
    fn uniform_row_over_four_zones() {
        let row: Vec<(ZoneId, f64)> = (0..4).map(|z| (ZoneId(z), 0.25)).collect();
        let od = OdModel::new([((ZoneId(0), ActivityType::Shopping), row)].into_iter().collect()).unwrap();
        let mut rng = stream(1, Domain::Person, &[0]);
        let mut hits = [0usize; 4];
        for _ in 0..10_000 {
            let z = choose_destination_zone(ZoneId(0), ZoneId(0), ActivityType::Shopping, &od, &mut rng).unwrap();
            hits[z.0 as usize] += 1;
        }
        for h in hits {
            assert!((h as f64 / 10_000.0 - 0.25).abs() < 0.02);
        }
    }

    #[test]
    fn single_destination_row() {
        let od = OdModel::new(
            [((ZoneId(0), ActivityType::Work), vec![(ZoneId(3), 1.0)])].into_iter().collect(),
        )
        .unwrap();
        let mut rng = stream(1, Domain::Person, &[0]);
        for _ in 0..50 {
            let z = choose_destination_zone(ZoneId(0), ZoneId(0), ActivityType::Work, &od, &mut rng).unwrap();
            assert_eq!(z, ZoneId(3));
        }
    }

    #[test]
    fn gravity_probabilities_follow_sizes() {
        let w = ActivityType::Work;
        let set = FacilitySet::new(
            vec![zone(0, 0.0)],
            vec![fac(1, 0, 400.0, 500.0, &[w], 2.0), fac(2, 0, 600.0, 500.0, &[w], 1.0)],
        )
        .unwrap();
        let origin = Coord::new(500.0, 500.0);
        let w1 = gravity_weight(2.0, &origin, &Coord::new(400.0, 500.0), 2000.0);
        let w2 = gravity_weight(1.0, &origin, &Coord::new(600.0, 500.0), 2000.0);
        let p1 = w1 / (w1 + w2);
        assert!((p1 - 2.0 / 3.0).abs() < 1e-12);
        let mut rng = stream(7, Domain::Person, &[0]);
        let n = 10_000;
        let first = (0..n)
            .filter(|_| choose_facility(ZoneId(0), w, &set, &origin, 2000.0, &mut rng).unwrap() == FacilityId(1))
            .count();
        assert!((first as f64 / n as f64 - p1).abs() < 0.02);
    }

    #[test]
    fn gravity_prefers_closer_facilities() {
        let s = ActivityType::Shopping;
        let set = FacilitySet::new(
            vec![zone(0, 0.0)],
            vec![fac(1, 0, 0.0, 0.0, &[s], 1.0), fac(2, 0, 1000.0, 1000.0, &[s], 1.0)],
        )
        .unwrap();
        let origin = Coord::new(0.0, 0.0);
        let d = 1000.0f64 * 2f64.sqrt();
        let exact = 1.0 / (1.0 + (-d / 500.0).exp());
        let mut rng = stream(8, Domain::Person, &[0]);
        let n = 10_000;
        let near = (0..n)
            .filter(|_| choose_facility(ZoneId(0), s, &set, &origin, 500.0, &mut rng).unwrap() == FacilityId(1))
            .count();
        assert!((near as f64 / n as f64 - exact).abs() < 0.02);
    }

    #[test]
    fn missing_type_falls_back_to_nearest_anywhere() {
        let e = ActivityType::Errands;
        let set = FacilitySet::new(
            vec![zone(0, 0.0), zone(1, 1000.0), zone(2, 2000.0)],
            vec![fac(5, 1, 1100.0, 0.0, &[e], 1.0), fac(6, 2, 2900.0, 0.0, &[e], 9.0)],
        )
        .unwrap();
        let mut rng = stream(9, Domain::Person, &[0]);
        let f = choose_facility(ZoneId(0), e, &set, &Coord::new(0.0, 0.0), 2000.0, &mut rng).unwrap();
        assert_eq!(f, FacilityId(5));
    }

    #[test]
    fn facility_outside_zone_is_rejected() {
        let res = FacilitySet::new(vec![zone(0, 0.0)], vec![fac(1, 0, 5000.0, 0.0, &[ActivityType::Home], 1.0)]);
        assert!(res.is_err());
    }

    #[test]
    fn gravity_od_rows_are_normalized_and_distance_decaying() {
        let p = ActivityType::Shopping;
        let set = FacilitySet::new(
            vec![zone(0, 0.0), zone(1, 1000.0), zone(2, 5000.0)],
            vec![
                fac(1, 0, 500.0, 500.0, &[p], 1.0),
                fac(2, 1, 1500.0, 500.0, &[p], 1.0),
                fac(3, 2, 5500.0, 500.0, &[p], 1.0),
            ],
        )
        .unwrap();
        let od = OdModel::gravity(&set, 2000.0).unwrap();
        let row = od.row(ZoneId(0), p).unwrap();
        assert!((row.iter().map(|(_, p)| p).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(row[0].1 > row[1].1 && row[1].1 > row[2].1);
        assert!(od.row(ZoneId(0), ActivityType::Work).is_none());
    }
}
