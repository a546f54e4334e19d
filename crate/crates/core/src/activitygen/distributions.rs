//! Binned empirical distributions for activity start times and durations.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::types::ActivityType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum DistKind {
    StartTime,
    Duration,
}

impl DistKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DistKind::StartTime => "startTime",
            DistKind::Duration => "duration",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistBin {
    pub start_sec: u32,
    pub end_sec: u32,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    bins: Vec<DistBin>,
    cumulative: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(bins: Vec<DistBin>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::Data("distribution without bins".into()));
        }
        let mut prev_end = 0;
        let mut cumulative = Vec::with_capacity(bins.len());
        let mut acc = 0.0;
        for b in &bins {
            if b.start_sec >= b.end_sec || b.start_sec < prev_end {
                return Err(Error::Data(format!(
                    "bins must be ascending and non-overlapping, got [{}, {})",
                    b.start_sec, b.end_sec
                )));
            }
            if !(b.weight >= 0.0) || !b.weight.is_finite() {
                return Err(Error::Data(format!("invalid bin weight {}", b.weight)));
            }
            prev_end = b.end_sec;
            acc += b.weight;
            cumulative.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::Data("distribution weights sum to zero".into()));
        }
        Ok(EmpiricalDistribution { bins, cumulative })
    }

    /// Bins given as `(start_h, end_h, weight)` in hours.
    pub fn from_hours(bins: &[(f64, f64, f64)]) -> Result<Self> {
        Self::new(
            bins.iter()
                .map(|&(a, b, w)| DistBin {
                    start_sec: (a * 3600.0).round() as u32,
                    end_sec: (b * 3600.0).round() as u32,
                    weight: w,
                })
                .collect(),
        )
    }

    pub fn bins(&self) -> &[DistBin] {
        &self.bins
    }

    fn total(&self) -> f64 {
        self.cumulative[self.cumulative.len() - 1]
    }

    /// Inverse CDF at `u_bin` picks the bin, `u_jitter` places the value inside it.
    pub fn sample_at(&self, u_bin: f64, u_jitter: f64) -> u32 {
        let target = u_bin * self.total();
        let i = self
            .cumulative
            .iter()
            .zip(&self.bins)
            .position(|(c, b)| b.weight > 0.0 && target < *c)
            .unwrap_or_else(|| self.bins.iter().rposition(|b| b.weight > 0.0).expect("positive mass"));
        let b = self.bins[i];
        let width = (b.end_sec - b.start_sec) as f64;
        b.start_sec + ((u_jitter * width).floor() as u32).min(b.end_sec - b.start_sec - 1)
    }

    pub fn sample(&self, rng: &mut SimRng) -> u32 {
        let u_bin = rng.random::<f64>();
        let u_jitter = rng.random::<f64>();
        self.sample_at(u_bin, u_jitter)
    }

    /// Probability mass inside `[from, to)`, assuming uniform density within bins.
    pub fn mass_between(&self, from: u32, to: u32) -> f64 {
        self.bins
            .iter()
            .map(|b| {
                let lo = b.start_sec.max(from);
                let hi = b.end_sec.min(to);
                if hi > lo {
                    b.weight * (hi - lo) as f64 / (b.end_sec - b.start_sec) as f64
                } else {
                    0.0
                }
            })
            .sum::<f64>()
            / self.total()
    }

    pub fn mean(&self) -> f64 {
        self.bins
            .iter()
            .map(|b| b.weight * (b.start_sec as f64 + b.end_sec as f64) / 2.0)
            .sum::<f64>()
            / self.total()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeModels {
    models: BTreeMap<(ActivityType, DistKind), EmpiricalDistribution>,
}

impl TimeModels {
    pub fn insert(&mut self, t: ActivityType, kind: DistKind, dist: EmpiricalDistribution) {
        self.models.insert((t, kind), dist);
    }

    pub fn get(&self, t: ActivityType, kind: DistKind) -> Result<&EmpiricalDistribution> {
        self.models.get(&(t, kind)).ok_or_else(|| {
            Error::config("inputs.time_models", format!("no {} model for {t}", kind.as_str()))
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (ActivityType, DistKind, &EmpiricalDistribution)> {
        self.models.iter().map(|((t, k), d)| (*t, *k, d))
    }

    /// Shipped defaults in half-hour or hour bins.
    pub fn defaults() -> Self {
        use ActivityType::*;
        let mut m = TimeModels::default();
        let mut put = |t: ActivityType, kind: DistKind, bins: &[(f64, f64, f64)]| {
            m.insert(t, kind, EmpiricalDistribution::from_hours(bins).expect("valid default"));
        };
        let work_start: &[(f64, f64, f64)] = &[
            (5.0, 6.0, 2.0),
            (6.0, 6.5, 3.0),
            (6.5, 7.0, 6.0),
            (7.0, 7.5, 11.0),
            (7.5, 8.0, 15.0),
            (8.0, 8.5, 14.0),
            (8.5, 9.0, 10.0),
            (9.0, 9.5, 6.0),
            (9.5, 10.0, 3.0),
            (10.0, 11.0, 2.5),
            (11.0, 12.0, 2.0),
            (12.0, 12.5, 3.0),
            (12.5, 13.0, 5.0),
            (13.0, 13.5, 6.0),
            (13.5, 14.0, 4.0),
            (14.0, 14.5, 2.0),
            (14.5, 16.0, 2.0),
            (16.0, 20.0, 1.5),
        ];
        put(Work, DistKind::StartTime, work_start);
        put(OtherWork, DistKind::StartTime, work_start);
        put(
            Study,
            DistKind::StartTime,
            &[
                (7.0, 7.5, 6.0),
                (7.5, 8.0, 24.0),
                (8.0, 8.5, 32.0),
                (8.5, 9.0, 12.0),
                (9.0, 10.0, 5.0),
                (10.0, 12.0, 3.0),
                (12.0, 13.0, 2.0),
                (13.0, 14.0, 7.0),
                (14.0, 16.0, 2.0),
            ],
        );
        let daytime: &[(f64, f64, f64)] = &[
            (8.0, 9.0, 3.0),
            (9.0, 10.0, 8.0),
            (10.0, 11.0, 11.0),
            (11.0, 12.0, 9.0),
            (12.0, 13.0, 5.0),
            (13.0, 14.0, 6.0),
            (14.0, 15.0, 9.0),
            (15.0, 16.0, 10.0),
            (16.0, 17.0, 10.0),
            (17.0, 18.0, 10.0),
            (18.0, 19.0, 7.0),
            (19.0, 20.0, 3.0),
        ];
        put(Shopping, DistKind::StartTime, daytime);
        put(Errands, DistKind::StartTime, daytime);
        put(
            LeisureVisit,
            DistKind::StartTime,
            &[
                (9.0, 10.0, 4.0),
                (10.0, 12.0, 10.0),
                (12.0, 14.0, 8.0),
                (14.0, 16.0, 12.0),
                (16.0, 18.0, 12.0),
                (18.0, 20.0, 10.0),
                (20.0, 21.0, 4.0),
            ],
        );
        put(
            Escort,
            DistKind::StartTime,
            &[
                (7.0, 7.5, 8.0),
                (7.5, 8.0, 18.0),
                (8.0, 8.5, 16.0),
                (8.5, 9.0, 6.0),
                (9.0, 11.0, 4.0),
                (11.0, 12.0, 6.0),
                (12.0, 13.5, 6.0),
                (13.5, 16.0, 5.0),
                (16.0, 16.5, 12.0),
                (16.5, 17.0, 10.0),
                (17.0, 18.0, 8.0),
                (18.0, 19.0, 3.0),
            ],
        );
        put(Home, DistKind::StartTime, &[(6.0, 12.0, 1.0), (12.0, 20.0, 1.0)]);

        put(
            Work,
            DistKind::Duration,
            &[
                (1.0, 2.0, 1.0),
                (2.0, 4.0, 4.0),
                (4.0, 6.0, 6.0),
                (6.0, 7.0, 8.0),
                (7.0, 8.0, 18.0),
                (8.0, 9.0, 24.0),
                (9.0, 10.0, 14.0),
                (10.0, 11.0, 5.0),
            ],
        );
        put(
            OtherWork,
            DistKind::Duration,
            &[(0.5, 1.0, 4.0), (1.0, 2.0, 6.0), (2.0, 3.0, 4.0), (3.0, 5.0, 2.0)],
        );
        put(
            Study,
            DistKind::Duration,
            &[
                (1.0, 2.0, 2.0),
                (2.0, 3.0, 4.0),
                (3.0, 4.0, 8.0),
                (4.0, 5.0, 10.0),
                (5.0, 6.0, 12.0),
                (6.0, 7.0, 16.0),
                (7.0, 8.0, 20.0),
                (8.0, 9.0, 10.0),
            ],
        );
        let short: &[(f64, f64, f64)] = &[
            (0.0833, 0.25, 10.0),
            (0.25, 0.5, 14.0),
            (0.5, 0.75, 10.0),
            (0.75, 1.0, 7.0),
            (1.0, 1.5, 5.0),
            (1.5, 2.0, 3.0),
            (2.0, 3.0, 1.5),
        ];
        put(Shopping, DistKind::Duration, short);
        put(Errands, DistKind::Duration, short);
        put(
            LeisureVisit,
            DistKind::Duration,
            &[(0.5, 1.0, 6.0), (1.0, 2.0, 10.0), (2.0, 3.0, 7.0), (3.0, 4.0, 4.0), (4.0, 6.0, 2.0)],
        );
        put(
            Escort,
            DistKind::Duration,
            &[(0.0833, 0.1667, 14.0), (0.1667, 0.3333, 8.0), (0.3333, 0.5, 3.0), (0.5, 1.0, 1.0)],
        );
        put(
            Home,
            DistKind::Duration,
            &[(0.5, 1.0, 10.0), (1.0, 2.0, 9.0), (2.0, 3.0, 7.0), (3.0, 4.0, 5.0), (4.0, 6.0, 3.0)],
        );
        m
    }
}
