//! Analytically computed legs for walking and public transport.

use serde::{Deserialize, Serialize};

use crate::types::{Coord, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeleportConfig {
    pub walk_speed_kmh: f64,
    pub walk_detour: f64,
    pub pt_speed_kmh: f64,
    pub pt_detour: f64,
    pub pt_fare_eur: f64,
}

impl Default for TeleportConfig {
    fn default() -> Self {
        TeleportConfig {
            walk_speed_kmh: 5.0,
            walk_detour: 1.3,
            pt_speed_kmh: 20.0,
            pt_detour: 1.3,
            pt_fare_eur: 1.43,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TeleportLeg {
    pub travel_sec: u32,
    pub distance_km: f64,
    pub cost_eur: f64,
}

/// Beeline times detour at constant speed, rounded to whole seconds.
///
/// Only walk and pt are teleported; other modes are treated as walking.
pub fn teleport_leg(mode: Mode, from: &Coord, to: &Coord, cfg: &TeleportConfig) -> TeleportLeg {
    let (speed, detour, fare) = match mode {
        Mode::Pt => (cfg.pt_speed_kmh, cfg.pt_detour, cfg.pt_fare_eur),
        _ => (cfg.walk_speed_kmh, cfg.walk_detour, 0.0),
    };
    let distance_km = from.distance(to) * detour / 1000.0;
    TeleportLeg {
        travel_sec: (distance_km / speed * 3600.0).round() as u32,
        distance_km,
        cost_eur: fare,
    }
}
