//! Logarithmic activity-performing utility with an optional lateness penalty.

use serde::{Deserialize, Serialize};

use crate::types::ActivityType;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityTypeParams {
    pub beta_perf_per_hour: f64,
    pub typical_duration_sec: f64,
    pub zero_utility_duration_sec: f64,
    /// Non-positive.
    pub beta_late_per_hour: f64,
    pub latest_start_sec: Option<u32>,
}

impl ActivityTypeParams {
    pub fn with_typical_hours(hours: f64) -> Self {
        let typ = hours * 3600.0;
        ActivityTypeParams {
            beta_perf_per_hour: 6.0,
            typical_duration_sec: typ,
            zero_utility_duration_sec: typ / std::f64::consts::E,
            beta_late_per_hour: 0.0,
            latest_start_sec: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityScoringParams {
    by_type: [ActivityTypeParams; 8],
}

impl Default for ActivityScoringParams {
    fn default() -> Self {
        let by_type = ActivityType::ALL.map(|t| {
            let hours = match t {
                ActivityType::Home => 12.0,
                ActivityType::Work => 8.0,
                ActivityType::Study => 6.0,
                _ => 1.0,
            };
            let mut p = ActivityTypeParams::with_typical_hours(hours);
            if matches!(t, ActivityType::Work | ActivityType::Study) {
                p.beta_late_per_hour = -18.0;
                p.latest_start_sec = Some(9 * 3600);
            }
            p
        });
        ActivityScoringParams { by_type }
    }
}

impl ActivityScoringParams {
    pub fn get(&self, t: ActivityType) -> &ActivityTypeParams {
        &self.by_type[t.index()]
    }

    pub fn set(&mut self, t: ActivityType, p: ActivityTypeParams) {
        self.by_type[t.index()] = p;
    }
}

/// Shortest duration fed to the logarithm.
pub const MIN_DURATION_SEC: f64 = 1.0;

pub fn score_activity(
    kind: ActivityType,
    realized_duration_sec: f64,
    realized_start_sec: f64,
    params: &ActivityScoringParams,
) -> f64 {
    let p = params.get(kind);
    let typ_h = p.typical_duration_sec / 3600.0;
    let dur = realized_duration_sec.max(MIN_DURATION_SEC);
    let mut utility = p.beta_perf_per_hour * typ_h * (dur / p.zero_utility_duration_sec).ln();
    if let Some(latest) = p.latest_start_sec {
        let late_h = (realized_start_sec - latest as f64).max(0.0) / 3600.0;
        utility += p.beta_late_per_hour * late_h;
    }
    utility
}
