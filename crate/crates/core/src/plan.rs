//! Daily plans: an alternating sequence of activities and legs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::FacilityId;
use crate::types::{ActivityType, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityTiming {
    pub start_sec: u32,
    pub end_sec: u32,
}

impl ActivityTiming {
    pub fn duration_sec(&self) -> u32 {
        self.end_sec.saturating_sub(self.start_sec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Activity {
    pub kind: ActivityType,
    pub facility: FacilityId,
    /// `None` only for the final, open-ended activity.
    pub planned_end_sec: Option<u32>,
    pub realized: Option<ActivityTiming>,
}

impl Activity {
    pub fn new(kind: ActivityType, facility: FacilityId, planned_end_sec: Option<u32>) -> Self {
        Activity {
            kind,
            facility,
            planned_end_sec,
            realized: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LegOutcome {
    Completed,
    /// Stuck in traffic (or unroutable); the agent was teleported.
    Stuck,
    /// Robo-Taxi request never served; scored as a walk with a penalty.
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegExecution {
    pub departure_sec: u32,
    pub arrival_sec: u32,
    /// Time between the request and the pickup (Robo-Taxi only).
    pub wait_sec: u32,
    pub distance_km: f64,
    pub cost_eur: f64,
    pub outcome: LegOutcome,
}

impl LegExecution {
    /// In-vehicle (or on-foot) time: total travel minus waiting.
    pub fn in_vehicle_sec(&self) -> u32 {
        self.arrival_sec
            .saturating_sub(self.departure_sec)
            .saturating_sub(self.wait_sec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub mode: Mode,
    pub realized: Option<LegExecution>,
}

impl Leg {
    pub fn new(mode: Mode) -> Self {
        Leg {
            mode,
            realized: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyPlan {
    pub activities: Vec<Activity>,
    pub legs: Vec<Leg>,
    pub score: Option<f64>,
}

impl DailyPlan {
    pub fn new(activities: Vec<Activity>, legs: Vec<Leg>) -> Result<Self> {
        let plan = DailyPlan {
            activities,
            legs,
            score: None,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Checks alternation, open final activity and strictly increasing end times.
    pub fn validate(&self) -> Result<()> {
        let n = self.activities.len();
        if n == 0 {
            return Err(Error::Plan("plan has no activities".into()));
        }
        if self.legs.len() != n - 1 {
            return Err(Error::Plan(format!(
                "{} activities need {} legs, found {}",
                n,
                n - 1,
                self.legs.len()
            )));
        }
        let mut prev: Option<u32> = None;
        for (i, a) in self.activities.iter().enumerate() {
            let last = i + 1 == n;
            match (a.planned_end_sec, last) {
                (Some(_), true) if n > 1 => {
                    return Err(Error::Plan("final activity must be open-ended".into()))
                }
                (None, false) => {
                    return Err(Error::Plan(format!("activity {i} lacks a planned end time")))
                }
                (Some(t), false) => {
                    if prev.is_some_and(|p| t <= p) {
                        return Err(Error::Plan(format!(
                            "planned end time of activity {i} is not increasing"
                        )));
                    }
                    prev = Some(t);
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn chain(&self) -> Vec<ActivityType> {
        self.activities.iter().map(|a| a.kind).collect()
    }

    pub fn is_executed(&self) -> bool {
        self.legs.iter().all(|l| l.realized.is_some())
            && self.activities.iter().all(|a| a.realized.is_some())
    }

    /// Drops realized times and the score, e.g. after a mutation.
    pub fn clear_execution(&mut self) {
        for a in &mut self.activities {
            a.realized = None;
        }
        for l in &mut self.legs {
            l.realized = None;
        }
        self.score = None;
    }

    /// Identity of the plan's genes (modes, locations, end times), ignoring execution data.
    pub fn same_genes(&self, other: &DailyPlan) -> bool {
        self.activities.len() == other.activities.len()
            && self
                .activities
                .iter()
                .zip(&other.activities)
                .all(|(a, b)| {
                    a.kind == b.kind
                        && a.facility == b.facility
                        && a.planned_end_sec == b.planned_end_sec
                })
            && self.legs.iter().zip(&other.legs).all(|(a, b)| a.mode == b.mode)
    }
}
