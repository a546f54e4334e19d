//! Synthetic stand-in scenario: a Manhattan grid town with zones, facilities,
//! household microdata and zone targets drawn from a hidden population.

use std::path::{Path, PathBuf};

use rand::Rng;

use crate::activitygen::io::{write_chain_table, write_facilities, write_od_model, write_time_models, write_zones};
use crate::activitygen::{default_chain_table, Facility, FacilitySet, OdModel, TimeModels, Zone};
use crate::csvio::write_bytes;
use crate::error::{Error, Result};
use crate::ids::{FacilityId, HouseholdId, LinkId, NodeId, PersonId, ZoneId};
use crate::network::{write_network, Link, Network, Node};
use crate::rng::{self, Domain, SimRng};
use crate::scoring::DEFAULT_SCORING_CSV;
use crate::synthpop::io::{write_sample, write_zone_targets};
use crate::synthpop::{default_controls, tabulate, Household, Person, SampleHousehold, ZoneTargets};
use crate::types::{ActivityType, Coord, ParkingLevel, Sex, Spc};

pub const LINK_LENGTH_M: f64 = 500.0;
pub const FREESPEED_MPS: f64 = 50.0 / 3.6;
pub const CAPACITY_PER_LANE: f64 = 600.0;
pub const SAMPLE_HOUSEHOLDS: u32 = 400;
pub const GRAVITY_THETA_M: f64 = 2000.0;

/// Default zone grid for a network of `grid_n` nodes per side.
pub fn default_zones_per_side(grid_n: u32) -> u32 {
    (grid_n / 3).max(1)
}

/// `grid_n`×`grid_n` nodes 500 m apart, neighbours joined in both directions.
pub fn grid_network(grid_n: u32) -> Result<Network> {
    if grid_n < 2 {
        return Err(Error::config("demo.grid_n", "grid must have at least 2 nodes per side"));
    }
    let node = |i: u32, j: u32| NodeId(j * grid_n + i);
    let mut nodes = Vec::new();
    for j in 0..grid_n {
        for i in 0..grid_n {
            nodes.push(Node {
                id: node(i, j),
                coord: Coord::new(i as f64 * LINK_LENGTH_M, j as f64 * LINK_LENGTH_M),
            });
        }
    }
    let mut links = Vec::new();
    let mut add = |from: NodeId, to: NodeId| {
        links.push(Link {
            id: LinkId(links.len() as u32),
            from,
            to,
            length_m: LINK_LENGTH_M,
            freespeed_mps: FREESPEED_MPS,
            capacity_veh_per_hour: CAPACITY_PER_LANE,
            lanes: 1.0,
        });
    };
    for j in 0..grid_n {
        for i in 0..grid_n {
            if i + 1 < grid_n {
                add(node(i, j), node(i + 1, j));
                add(node(i + 1, j), node(i, j));
            }
            if j + 1 < grid_n {
                add(node(i, j), node(i, j + 1));
                add(node(i, j + 1), node(i, j));
            }
        }
    }
    Network::new(nodes, links)
}

fn extent(grid_n: u32) -> f64 {
    (grid_n - 1) as f64 * LINK_LENGTH_M
}

/// 1 at the town centre, 0 at the corners.
fn centrality(c: &Coord, size: f64) -> f64 {
    let mid = Coord::new(size / 2.0, size / 2.0);
    let max = mid.distance(&Coord::new(0.0, 0.0));
    if max == 0.0 {
        1.0
    } else {
        1.0 - c.distance(&mid) / max
    }
}

pub fn grid_zones(grid_n: u32, zones_per_side: u32) -> Vec<Zone> {
    let size = extent(grid_n);
    let step = size / zones_per_side as f64;
    let mut zones = Vec::new();
    for j in 0..zones_per_side {
        for i in 0..zones_per_side {
            let min = Coord::new(i as f64 * step, j as f64 * step);
            let max = Coord::new(min.x + step, min.y + step);
            let c = centrality(&Coord::new(min.x + step / 2.0, min.y + step / 2.0), size);
            let parking = if c > 0.6 {
                ParkingLevel::High
            } else if c > 0.3 {
                ParkingLevel::Medium
            } else {
                ParkingLevel::Low
            };
            zones.push(Zone {
                id: ZoneId(zones.len() as u32),
                min,
                max,
                parking,
            });
        }
    }
    zones
}

/// Every zone gets homes, two workplaces, a school and a commercial site, so
/// each activity type can be served locally; sizes grow towards the centre.
pub fn grid_facilities(zones: &[Zone], size: f64, rng: &mut SimRng) -> Vec<Facility> {
    use ActivityType::*;
    let mut out = Vec::new();
    for z in zones {
        let c = centrality(&z.centroid(), size);
        let kinds: [(&[ActivityType], f64); 7] = [
            (&[Home], 1.0),
            (&[Home], 1.0),
            (&[Home], 1.0),
            (&[Work, OtherWork], 5.0 + 45.0 * c * c),
            (&[Work, OtherWork, Errands], 3.0 + 20.0 * c),
            (&[Study, Escort], 4.0),
            (&[Shopping, LeisureVisit, Errands, Escort], 2.0 + 20.0 * c),
        ];
        for (types, base) in kinds {
            let coord = Coord::new(
                rng.random_range(z.min.x..z.max.x),
                rng.random_range(z.min.y..z.max.y),
            );
            out.push(Facility {
                id: FacilityId(out.len() as u32),
                zone_id: z.id,
                coord,
                types: types.to_vec(),
                size: (base * rng.random_range(0.8..1.2) * 100.0).round() / 100.0,
            });
        }
    }
    out
}

/// Links nearest to the centroids of the four quadrants.
pub fn quadrant_depots(net: &Network, grid_n: u32) -> Vec<LinkId> {
    let size = extent(grid_n);
    [(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)]
        .iter()
        .map(|(fx, fy)| {
            let l = net.nearest_link(&Coord::new(fx * size, fy * size)).expect("grid has links");
            net.link(l).id
        })
        .collect()
}

struct Builder {
    households: Vec<SampleHousehold>,
    next_person: u32,
}

impl Builder {
    fn push(&mut self, members: &[(u32, Sex, Spc)], rng: &mut SimRng) {
        let hid = HouseholdId(self.households.len() as u32);
        let persons: Vec<Person> = members
            .iter()
            .map(|&(age, sex, spc)| {
                let p = Person {
                    id: PersonId(self.next_person),
                    household_id: hid,
                    age,
                    sex,
                    spc,
                    zone_id: ZoneId(0),
                };
                self.next_person += 1;
                p
            })
            .collect();
        let earners = persons.iter().filter(|p| p.spc == Spc::Employed).count() as f64;
        let pensions = persons.iter().filter(|p| p.spc == Spc::Retired).count() as f64;
        let adults = persons.iter().filter(|p| p.age >= 18).count() as f64;
        let base = 700.0 + 1600.0 * earners + 1100.0 * pensions + 250.0 * adults;
        let income = (base * rng.random_range(0.6f64..1.6)).round();
        let car_odds = (income / 5000.0).min(0.95);
        let cars = if rng.random::<f64>() > car_odds + 0.15 {
            0
        } else if adults >= 2.0 && rng.random::<f64>() < car_odds * 0.6 {
            2
        } else {
            1
        };
        self.households.push(SampleHousehold {
            household: Household {
                id: hid,
                zone_id: ZoneId(0),
                income_eur: income,
                cars,
                member_ids: persons.iter().map(|p| p.id).collect(),
            },
            members: persons,
        });
    }
}

fn sex(rng: &mut SimRng, p_female: f64) -> Sex {
    if rng.random::<f64>() < p_female {
        Sex::Female
    } else {
        Sex::Male
    }
}

fn child(rng: &mut SimRng) -> (u32, Sex, Spc) {
    let age = rng.random_range(0..21);
    let spc = if age < 14 { Spc::Under14 } else { Spc::Student14Plus };
    (age, sex(rng, 0.5), spc)
}

/// Household microdata with a plausible mix: retirees older and mostly
/// female, homemakers mostly female, children under 14 in families.
pub fn demo_microdata(n: u32, rng: &mut SimRng) -> Vec<SampleHousehold> {
    let mut b = Builder {
        households: Vec::new(),
        next_person: 0,
    };
    for _ in 0..n {
        let kind = rng.random::<f64>();
        let mut m = Vec::new();
        if kind < 0.15 {
            m.push((rng.random_range(22..60), sex(rng, 0.5), Spc::Employed));
        } else if kind < 0.25 {
            m.push((rng.random_range(65..92), sex(rng, 0.7), Spc::Retired));
        } else if kind < 0.34 {
            m.push((rng.random_range(62..88), Sex::Male, Spc::Retired));
            m.push((rng.random_range(60..88), Sex::Female, Spc::Retired));
        } else if kind < 0.45 {
            m.push((rng.random_range(24..60), Sex::Male, Spc::Employed));
            m.push((rng.random_range(22..60), Sex::Female, Spc::Employed));
        } else if kind < 0.75 {
            m.push((rng.random_range(28..55), Sex::Male, Spc::Employed));
            let second = if rng.random::<f64>() < 0.35 { Spc::Homemaker } else { Spc::Employed };
            let s = if second == Spc::Homemaker { sex(rng, 0.9) } else { Sex::Female };
            m.push((rng.random_range(26..52), s, second));
            for _ in 0..rng.random_range(1..=3) {
                m.push(child(rng));
            }
        } else if kind < 0.83 {
            m.push((rng.random_range(18..26), sex(rng, 0.5), Spc::Student14Plus));
        } else if kind < 0.90 {
            m.push((rng.random_range(20..62), sex(rng, 0.5), Spc::Unemployed));
        } else if kind < 0.95 {
            let spc = if rng.random::<f64>() < 0.6 { Spc::Employed } else { Spc::Unemployed };
            m.push((rng.random_range(25..50), sex(rng, 0.8), spc));
            for _ in 0..rng.random_range(1..=2) {
                m.push(child(rng));
            }
        } else {
            m.push((rng.random_range(30..64), sex(rng, 0.85), Spc::Homemaker));
            m.push((rng.random_range(30..64), Sex::Male, Spc::Employed));
        }
        b.push(&m, rng);
    }
    b.households
}

/// Zone targets tabulated from a hidden draw of sample households, so an
/// exact fit exists. Persons are split evenly across zones; each zone stops
/// at the draw that brings it closest to its share.
pub fn hidden_targets(sample: &[SampleHousehold], zones: &[Zone], persons_target: u32, seed: u64) -> Vec<ZoneTargets> {
    let controls = default_controls();
    let nz = zones.len() as u32;
    zones
        .iter()
        .enumerate()
        .map(|(k, z)| {
            let share = persons_target / nz + u32::from((k as u32) < persons_target % nz);
            let mut rng = rng::stream(seed, Domain::Demo, &[1, z.id.0 as u64]);
            let mut drawn: Vec<SampleHousehold> = Vec::new();
            let mut persons = 0u32;
            while persons < share {
                let h = &sample[rng.random_range(0..sample.len())];
                let size = h.members.len() as u32;
                if persons + size > share && (persons + size - share) > (share - persons) {
                    break;
                }
                persons += size;
                drawn.push(h.clone());
            }
            ZoneTargets {
                zone_id: z.id,
                household_count: drawn.len() as u32,
                control_targets: tabulate(&drawn, &controls),
            }
        })
        .collect()
}

/// Options of [`generate_demo_scenario`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoOptions {
    pub grid_n: u32,
    pub zones_per_side: u32,
    pub persons_target: u32,
    pub seed: u64,
    pub fleet_size: u32,
    pub max_iterations: u32,
}

impl DemoOptions {
    pub fn new(grid_n: u32, persons_target: u32, seed: u64) -> Self {
        DemoOptions {
            grid_n,
            zones_per_side: default_zones_per_side(grid_n),
            persons_target,
            seed,
            fleet_size: 50,
            max_iterations: 200,
        }
    }
}

/// Writes the complete input set plus `scenario.toml` into `out_dir` and
/// returns the config path.
pub fn generate_demo_scenario(opts: &DemoOptions, out_dir: &Path) -> Result<PathBuf> {
    if opts.zones_per_side == 0 {
        return Err(Error::config("demo.zones_per_side", "must be at least 1"));
    }
    if opts.persons_target == 0 {
        return Err(Error::config("demo.persons", "must be at least 1"));
    }
    let net = grid_network(opts.grid_n)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let size = extent(opts.grid_n);
    let zones = grid_zones(opts.grid_n, opts.zones_per_side);
    let facilities = grid_facilities(&zones, size, &mut rng::stream(opts.seed, Domain::Demo, &[2]));
    let sample = demo_microdata(SAMPLE_HOUSEHOLDS, &mut rng::stream(opts.seed, Domain::Demo, &[3]));
    let targets = hidden_targets(&sample, &zones, opts.persons_target, opts.seed);
    let od = OdModel::gravity(&FacilitySet::new(zones.clone(), facilities.clone())?, GRAVITY_THETA_M)?;
    let depots = quadrant_depots(&net, opts.grid_n);

    let p = |name: &str| out_dir.join(name);
    write_network(&p("nodes.csv"), &p("links.csv"), &net)?;
    write_zones(&p("zones.csv"), &zones)?;
    write_facilities(&p("facilities.csv"), &facilities)?;
    write_sample(&p("microdata_households.csv"), &p("microdata_persons.csv"), &sample)?;
    write_zone_targets(&p("zone_targets.csv"), &targets)?;
    write_chain_table(&p("chains.csv"), &default_chain_table())?;
    write_time_models(&p("time_models.csv"), &TimeModels::defaults())?;
    write_od_model(&p("od_model.csv"), &od)?;
    write_bytes(&p("scoring_params.csv"), DEFAULT_SCORING_CSV.as_bytes())?;
    let config = demo_config_text(opts, &depots);
    let path = p("scenario.toml");
    write_bytes(&path, config.as_bytes())?;
    Ok(path)
}

fn demo_config_text(opts: &DemoOptions, depots: &[LinkId]) -> String {
    let depots: Vec<String> = depots.iter().map(|d| d.to_string()).collect();
    format!(
        r#"[run]
seed = {seed}
max_iterations = {iters}
output_dir = "output"

[inputs]
nodes = "nodes.csv"
links = "links.csv"
zones = "zones.csv"
facilities = "facilities.csv"
microdata_households = "microdata_households.csv"
microdata_persons = "microdata_persons.csv"
zone_targets = "zone_targets.csv"
chains = "chains.csv"
time_models = "time_models.csv"
od_model = "od_model.csv"
scoring_params = "scoring_params.csv"

[fleet]
size = {fleet}
depots = [{depots}]
ingress_sec = 60
egress_sec = 120

[taste_factors]
enabled = true
"#,
        seed = opts.seed,
        iters = opts.max_iterations,
        fleet = opts.fleet_size,
        depots = depots.join(", "),
    )
}
