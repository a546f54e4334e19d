//! Mode coefficients per socio-professional category.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Mode, Spc};

/// The categorized coefficient table shipped with the crate.
pub const DEFAULT_SCORING_CSV: &str = include_str!("../../data/scoring_params.csv");

/// Coefficients of one (category, mode) cell group.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ModeParams {
    /// Alternative-specific constant, utils.
    pub c: f64,
    /// Marginal utility of travel time, utils/min.
    pub beta_trav_per_min: f64,
    /// Marginal utility of distance, utils/km (car only).
    pub beta_dist_per_km: f64,
    /// Household owns exactly one car.
    pub nu_car1: f64,
    /// Household owns two or more cars.
    pub nu_car2plus: f64,
    pub gamma_park_med: f64,
    pub gamma_park_high: f64,
}

/// Parameter names as they appear in `scoring_params.csv`.
pub const PARAM_NAMES: [&str; 7] = [
    "C",
    "beta_trav",
    "beta_dist",
    "nu_1",
    "nu_2plus",
    "gamma_m",
    "gamma_h",
];

impl ModeParams {
    fn slot(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "C" => &mut self.c,
            "beta_trav" => &mut self.beta_trav_per_min,
            "beta_dist" => &mut self.beta_dist_per_km,
            "nu_1" => &mut self.nu_car1,
            "nu_2plus" => &mut self.nu_car2plus,
            "gamma_m" => &mut self.gamma_park_med,
            "gamma_h" => &mut self.gamma_park_high,
            _ => return None,
        })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        let mut copy = *self;
        copy.slot(name).map(|v| *v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringParams {
    /// Rows indexed by `[spc][mode]`; Robo-Taxi rows are usually derived from car rows.
    rows: [[Option<ModeParams>; 4]; 6],
    /// Which parameters of each row were explicitly given (for round-tripping).
    given: Vec<(Spc, Mode, String)>,
    pub beta_money_per_eur: f64,
    /// Multiplier on Robo-Taxi waiting time disutility.
    pub wait_multiplier: f64,
    pub pt_fare_eur: f64,
    /// Added to the car constant to obtain the Robo-Taxi constant when no explicit row exists.
    pub rt_constant_offset: f64,
    /// Applied to stuck legs and rejected Robo-Taxi requests.
    pub stuck_penalty: f64,
}

impl ScoringParams {
    fn empty() -> Self {
        ScoringParams {
            rows: [[None; 4]; 6],
            given: Vec::new(),
            beta_money_per_eur: -1.0,
            wait_multiplier: 10.0,
            pt_fare_eur: 1.43,
            rt_constant_offset: 0.0,
            stuck_penalty: -100.0,
        }
    }

    /// Shipped table with uncalibrated Robo-Taxi constants (C_RT = C_car).
    pub fn defaults() -> Self {
        Self::from_csv_str(DEFAULT_SCORING_CSV).expect("shipped scoring table is valid")
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text)
    }

    /// Parses `spc,mode,param,value` rows.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut params = Self::empty();
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        for (line, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::csv("scoring_params.csv", e))?;
            let field = |i: usize| rec.get(i).unwrap_or("").trim();
            let spc: Spc = field(0).parse()?;
            let mode: Mode = field(1).parse()?;
            let name = field(2);
            let value: f64 = field(3).parse().map_err(|_| {
                Error::config(
                    format!("scoring_params.csv:{}", line + 2),
                    format!("bad value `{}`", field(3)),
                )
            })?;
            let row = params.rows[spc.index()][mode as usize].get_or_insert_with(ModeParams::default);
            let slot = row.slot(name).ok_or_else(|| {
                Error::config(
                    format!("scoring_params.csv:{}", line + 2),
                    format!("unknown parameter `{name}`"),
                )
            })?;
            *slot = value;
            params.given.push((spc, mode, name.to_string()));
        }
        params.check()?;
        Ok(params)
    }

    fn check(&self) -> Result<()> {
        if self.wait_multiplier < 1.0 {
            return Err(Error::config("scoring.wait_multiplier", "must be >= 1"));
        }
        for spc in Spc::ALL {
            if let Some(w) = self.rows[spc.index()][Mode::Walk as usize] {
                if w.nu_car1 != 0.0
                    || w.nu_car2plus != 0.0
                    || w.gamma_park_med != 0.0
                    || w.gamma_park_high != 0.0
                    || w.beta_dist_per_km != 0.0
                {
                    return Err(Error::config(
                        "scoring_params.csv",
                        format!("walk row for {spc} must not carry ownership, parking or distance terms"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Coefficients for (spc, mode). Robo-Taxi falls back to the car row with the constant offset.
    pub fn row(&self, spc: Spc, mode: Mode) -> Result<ModeParams> {
        if let Some(r) = self.rows[spc.index()][mode as usize] {
            return Ok(r);
        }
        if mode == Mode::RoboTaxi {
            if let Some(car) = self.rows[spc.index()][Mode::Car as usize] {
                return Ok(ModeParams {
                    c: car.c + self.rt_constant_offset,
                    beta_trav_per_min: car.beta_trav_per_min,
                    ..ModeParams::default()
                });
            }
        }
        Err(Error::config(
            "scoring_params",
            format!("no parameter row for ({spc}, {mode})"),
        ))
    }

    pub fn set_row(&mut self, spc: Spc, mode: Mode, row: ModeParams) {
        self.rows[spc.index()][mode as usize] = Some(row);
    }

    /// Explicitly provided cells, in file order.
    pub fn cells(&self) -> impl Iterator<Item = (Spc, Mode, &str, f64)> + '_ {
        self.given.iter().map(|(spc, mode, name)| {
            let v = self.rows[spc.index()][*mode as usize]
                .and_then(|r| r.get(name))
                .unwrap_or(f64::NAN);
            (*spc, *mode, name.as_str(), v)
        })
    }

    /// Serializes the explicit cells back to `spc,mode,param,value` at four decimals.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("spc,mode,param,value\n");
        for (spc, mode, name, v) in self.cells() {
            out.push_str(&format!("{spc},{mode},{name},{v:.4}\n"));
        }
        out
    }
}
