//! Systematic taste variation for the Robo-Taxi mode: user trust from age and
//! sex, willingness-to-use from household income.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Sex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TasteFactorConfig {
    pub enabled: bool,
    pub sex_female: f64,
    pub sex_male: f64,
    /// κ_Age below `age_young_max`.
    pub age_young_value: f64,
    /// κ_Age at or above `age_old_min`.
    pub age_old_value: f64,
    pub age_young_max: f64,
    pub age_old_min: f64,
    pub income_lambda: f64,
    /// Reference income; `None` until set explicitly or by normalization (population median).
    pub income_ref_eur: Option<f64>,
    pub income_clip_lo: f64,
    pub income_clip_hi: f64,
    /// Multiplier applied after clipping so the population mean of κ_Income is one.
    pub income_scale: f64,
}

impl Default for TasteFactorConfig {
    fn default() -> Self {
        TasteFactorConfig {
            enabled: true,
            sex_female: 0.8,
            sex_male: 1.2,
            age_young_value: 1.15,
            age_old_value: 0.70,
            age_young_max: 45.0,
            age_old_min: 60.0,
            income_lambda: 0.25,
            income_ref_eur: None,
            income_clip_lo: 0.5,
            income_clip_hi: 2.0,
            income_scale: 1.0,
        }
    }
}

/// Multipliers applied to a Robo-Taxi leg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TasteFactors {
    /// User trust, scales the mode constant.
    pub k_ut: f64,
    /// Scales in-vehicle time.
    pub k_ivt: f64,
    /// Scales waiting time.
    pub k_wt: f64,
}

impl TasteFactors {
    pub const ONE: TasteFactors = TasteFactors {
        k_ut: 1.0,
        k_ivt: 1.0,
        k_wt: 1.0,
    };
}

/// The person attributes the factors depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TasteSubject {
    pub age: f64,
    pub sex: Sex,
    pub income_eur: f64,
}

impl TasteFactorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.income_clip_lo > 0.0 && self.income_clip_lo <= self.income_clip_hi) {
            return Err(Error::config(
                "taste_factors.income.clip_lo",
                "clip bounds must satisfy 0 < lo <= hi",
            ));
        }
        if self.age_young_max > self.age_old_min {
            return Err(Error::config(
                "taste_factors.age.young_max",
                "young_max must not exceed old_min",
            ));
        }
        if let Some(r) = self.income_ref_eur {
            if r <= 0.0 {
                return Err(Error::config("taste_factors.income.ref_eur", "must be > 0"));
            }
        }
        Ok(())
    }

    pub fn sex_factor(&self, sex: Sex) -> f64 {
        match sex {
            Sex::Female => self.sex_female,
            Sex::Male => self.sex_male,
        }
    }

    /// Constant below the young breakpoint, constant from the old breakpoint on,
    /// linear in between.
    pub fn age_factor(&self, age: f64) -> f64 {
        if age < self.age_young_max {
            self.age_young_value
        } else if age >= self.age_old_min {
            self.age_old_value
        } else {
            let span = self.age_old_min - self.age_young_max;
            let w = (age - self.age_young_max) / span;
            self.age_young_value + (self.age_old_value - self.age_young_value) * w
        }
    }

    /// Logarithmic in income, clipped, then rescaled.
    pub fn income_factor(&self, income_eur: f64) -> f64 {
        self.income_scale * self.income_factor_unscaled(income_eur)
    }

    fn income_factor_unscaled(&self, income_eur: f64) -> f64 {
        let ratio = match self.income_ref_eur {
            Some(r) => income_eur / r,
            None => 1.0,
        };
        let raw = 1.0 + self.income_lambda * ratio.ln();
        raw.clamp(self.income_clip_lo, self.income_clip_hi)
    }

    pub fn factors(&self, subject: &TasteSubject) -> TasteFactors {
        if !self.enabled {
            return TasteFactors::ONE;
        }
        let k_age = self.age_factor(subject.age);
        let k_sex = self.sex_factor(subject.sex);
        let k_income = self.income_factor(subject.income_eur);
        TasteFactors {
            k_ut: 2.0 - (k_age + k_sex) / 2.0,
            k_ivt: 1.0 / k_income,
            k_wt: k_income,
        }
    }
}

/// Computes (κ_ut, κ_ivt, κ_wt) for one person; `(1, 1, 1)` when disabled.
pub fn taste_factors(subject: &TasteSubject, cfg: &TasteFactorConfig) -> TasteFactors {
    cfg.factors(subject)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Rescales each factor curve multiplicatively so its population mean is one.
///
/// Fills in the reference income with the population median when unset.
pub fn normalize_taste_factors(
    population: &[TasteSubject],
    raw: &TasteFactorConfig,
) -> Result<TasteFactorConfig> {
    if population.is_empty() {
        return Err(Error::Data("cannot normalize taste factors over an empty population".into()));
    }
    raw.validate()?;
    let mut cfg = raw.clone();
    if cfg.income_ref_eur.is_none() {
        cfg.income_ref_eur = Some(median(population.iter().map(|p| p.income_eur).collect()));
    }
    let n = population.len() as f64;
    let mean = |f: &dyn Fn(&TasteSubject) -> f64| population.iter().map(f).sum::<f64>() / n;

    let sex_mean = mean(&|p| cfg.sex_factor(p.sex));
    let age_mean = mean(&|p| cfg.age_factor(p.age));
    let income_mean = mean(&|p| cfg.income_factor(p.income_eur));

    cfg.sex_female /= sex_mean;
    cfg.sex_male /= sex_mean;
    cfg.age_young_value /= age_mean;
    cfg.age_old_value /= age_mean;
    cfg.income_scale /= income_mean;
    Ok(cfg)
}
