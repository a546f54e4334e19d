//! One simulated day over a capacitated queue network.
//!
//! Cars and Robo-Taxis move link by link through FIFO queues with a flow
//! capacity (token bucket) and a storage capacity (spillback). Walk and pt
//! legs are teleported. The loop advances in one-second steps and jumps over
//! idle stretches.

mod engine;
pub mod events;
pub mod queue;
pub mod router;
pub mod teleport;
pub mod ttfield;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use engine::{run_day, DayAgent, DayResult, FleetOutcome};
pub use queue::{process_link_queue, LinkQueue};

use crate::activitygen::FacilitySet;
use crate::error::{Error, Result};
use crate::ids::FacilityId;
use crate::network::Network;
use crate::types::Coord;
use teleport::TeleportConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobsimConfig {
    pub stuck_time_sec: u32,
    pub cell_length_m: f64,
    /// Multiplies every link's flow capacity; `inf` removes the limit.
    pub flow_capacity_factor: f64,
    /// Multiplies every link's storage capacity; `inf` removes the limit.
    pub storage_capacity_factor: f64,
    pub teleport: TeleportConfig,
    pub record_events: bool,
    /// Keep linkEnter/linkLeave events (the bulk of the log).
    pub record_link_events: bool,
}

impl Default for MobsimConfig {
    fn default() -> Self {
        MobsimConfig {
            stuck_time_sec: 3600,
            cell_length_m: 7.5,
            flow_capacity_factor: 1.0,
            storage_capacity_factor: 1.0,
            teleport: TeleportConfig::default(),
            record_events: true,
            record_link_events: true,
        }
    }
}

impl MobsimConfig {
    /// No capacity limits at all: cars travel at free flow.
    pub fn uncongested() -> Self {
        MobsimConfig {
            flow_capacity_factor: f64::INFINITY,
            storage_capacity_factor: f64::INFINITY,
            ..Default::default()
        }
    }
}

/// Where each facility touches the road network.
#[derive(Debug, Clone, Default)]
pub struct Locator {
    places: BTreeMap<FacilityId, (usize, Coord)>,
}

impl Locator {
    /// Attaches every facility to its nearest link.
    pub fn new(net: &Network, facilities: &FacilitySet) -> Self {
        let places = facilities
            .all()
            .iter()
            .map(|f| {
                let link = net.nearest_link(&f.coord).expect("network has links");
                (f.id, (link, f.coord))
            })
            .collect();
        Locator { places }
    }

    pub fn from_places(places: impl IntoIterator<Item = (FacilityId, usize, Coord)>) -> Self {
        Locator {
            places: places.into_iter().map(|(f, l, c)| (f, (l, c))).collect(),
        }
    }

    pub fn link(&self, f: FacilityId) -> Result<usize> {
        self.place(f).map(|p| p.0)
    }

    pub fn coord(&self, f: FacilityId) -> Result<Coord> {
        self.place(f).map(|p| p.1)
    }

    fn place(&self, f: FacilityId) -> Result<(usize, Coord)> {
        self.places
            .get(&f)
            .copied()
            .ok_or_else(|| Error::Data(format!("facility {f} is not located on the network")))
    }
}

#[cfg(test)]
mod tests;
