//! The scenario configuration file (TOML). Key paths such as `fleet.size` or
//! `inputs.links` are the names used in error messages.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::activitygen::PlanGenConfig;
use crate::error::{Error, Result};
use crate::fleet::FleetConfig;
use crate::ids::LinkId;
use crate::mobsim::teleport::TeleportConfig;
use crate::mobsim::MobsimConfig;
use crate::replanning::{ConvergenceConfig, ReplanningConfig, StrategyWeights};
use crate::scoring::{ScoringParams, TasteFactorConfig};
use crate::synthpop::SynthesisSettings;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    pub nodes: PathBuf,
    pub links: PathBuf,
    pub zones: PathBuf,
    pub facilities: PathBuf,
    pub chains: PathBuf,
    pub time_models: PathBuf,
    /// Gravity model from the facilities when absent.
    pub od_model: Option<PathBuf>,
    /// Shipped defaults when absent.
    pub scoring_params: Option<PathBuf>,
    pub microdata_households: Option<PathBuf>,
    pub microdata_persons: Option<PathBuf>,
    pub zone_targets: Option<PathBuf>,
    /// A ready population; skips synthesis when both are given.
    pub population_households: Option<PathBuf>,
    pub population_persons: Option<PathBuf>,
}

impl InputPaths {
    fn entries(&self) -> Vec<(&'static str, Option<&PathBuf>)> {
        vec![
            ("inputs.nodes", Some(&self.nodes)),
            ("inputs.links", Some(&self.links)),
            ("inputs.zones", Some(&self.zones)),
            ("inputs.facilities", Some(&self.facilities)),
            ("inputs.chains", Some(&self.chains)),
            ("inputs.time_models", Some(&self.time_models)),
            ("inputs.od_model", self.od_model.as_ref()),
            ("inputs.scoring_params", self.scoring_params.as_ref()),
            ("inputs.microdata_households", self.microdata_households.as_ref()),
            ("inputs.microdata_persons", self.microdata_persons.as_ref()),
            ("inputs.zone_targets", self.zone_targets.as_ref()),
            ("inputs.population_households", self.population_households.as_ref()),
            ("inputs.population_persons", self.population_persons.as_ref()),
        ]
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut self.nodes, &mut self.links, &mut self.zones, &mut self.facilities, &mut self.chains, &mut self.time_models] {
            fix(p);
        }
        for p in [
            &mut self.od_model,
            &mut self.scoring_params,
            &mut self.microdata_households,
            &mut self.microdata_persons,
            &mut self.zone_targets,
            &mut self.population_households,
            &mut self.population_persons,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn uses_population_file(&self) -> bool {
        self.population_households.is_some() && self.population_persons.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: u32,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Share of synthesized households kept; network capacities scale with it.
    #[serde(default = "one")]
    pub sample_fraction: f64,
}

fn default_max_iterations() -> u32 {
    200
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("output")
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisSection {
    /// Control names; the default car/age/category set when empty.
    pub controls: Vec<String>,
    pub attempts_per_household: u32,
    pub force_accept_after: u32,
}

impl Default for SynthesisSection {
    fn default() -> Self {
        let s = SynthesisSettings::default();
        SynthesisSection {
            controls: Vec::new(),
            attempts_per_household: s.attempts_per_household,
            force_accept_after: s.force_accept_after,
        }
    }
}

impl SynthesisSection {
    pub fn settings(&self) -> SynthesisSettings {
        SynthesisSettings {
            attempts_per_household: self.attempts_per_household,
            force_accept_after: self.force_accept_after,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlansSection {
    pub theta_m: f64,
    pub seed_share_car: f64,
    pub seed_share_pt: f64,
    pub seed_share_walk: f64,
}

impl Default for PlansSection {
    fn default() -> Self {
        let d = PlanGenConfig::default();
        PlansSection {
            theta_m: d.theta_m,
            seed_share_car: d.mode_shares.car,
            seed_share_pt: d.mode_shares.pt,
            seed_share_walk: d.mode_shares.walk,
        }
    }
}

impl PlansSection {
    pub fn plan_gen(&self) -> PlanGenConfig {
        let mut c = PlanGenConfig::default();
        c.theta_m = self.theta_m;
        c.mode_shares.car = self.seed_share_car;
        c.mode_shares.pt = self.seed_share_pt;
        c.mode_shares.walk = self.seed_share_walk;
        c
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobsimSection {
    pub stuck_time_sec: u32,
    pub flow_capacity_factor: f64,
    pub storage_capacity_factor: f64,
    /// Weight of the newest day when blending observed link times into the router's field.
    pub travel_time_alpha: f64,
    pub teleport: TeleportConfig,
}

impl Default for MobsimSection {
    fn default() -> Self {
        let m = MobsimConfig::default();
        MobsimSection {
            stuck_time_sec: m.stuck_time_sec,
            flow_capacity_factor: m.flow_capacity_factor,
            storage_capacity_factor: m.storage_capacity_factor,
            travel_time_alpha: 0.3,
            teleport: m.teleport,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleetSection {
    #[serde(default)]
    pub size: u32,
    #[serde(default)]
    pub depots: Vec<u32>,
    #[serde(default = "ingress")]
    pub ingress_sec: u32,
    #[serde(default = "egress")]
    pub egress_sec: u32,
}

fn ingress() -> u32 {
    60
}

fn egress() -> u32 {
    120
}

impl FleetSection {
    pub fn fleet_config(&self, size: u32) -> FleetConfig {
        FleetConfig {
            size,
            depots: self.depots.iter().map(|d| LinkId(*d)).collect(),
            ingress_sec: self.ingress_sec,
            egress_sec: self.egress_sec,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SexSection {
    pub male: f64,
    pub female: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgeSection {
    pub young_value: f64,
    pub old_value: f64,
    pub young_max: f64,
    pub old_min: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IncomeSection {
    pub lambda: f64,
    pub ref_eur: Option<f64>,
    pub clip_lo: f64,
    pub clip_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TasteSection {
    pub enabled: bool,
    pub sex: SexSection,
    pub age: AgeSection,
    pub income: IncomeSection,
}

impl Default for SexSection {
    fn default() -> Self {
        let d = TasteFactorConfig::default();
        SexSection {
            male: d.sex_male,
            female: d.sex_female,
        }
    }
}

impl Default for AgeSection {
    fn default() -> Self {
        let d = TasteFactorConfig::default();
        AgeSection {
            young_value: d.age_young_value,
            old_value: d.age_old_value,
            young_max: d.age_young_max,
            old_min: d.age_old_min,
        }
    }
}

impl Default for IncomeSection {
    fn default() -> Self {
        let d = TasteFactorConfig::default();
        IncomeSection {
            lambda: d.income_lambda,
            ref_eur: d.income_ref_eur,
            clip_lo: d.income_clip_lo,
            clip_hi: d.income_clip_hi,
        }
    }
}

impl Default for TasteSection {
    fn default() -> Self {
        TasteSection {
            enabled: TasteFactorConfig::default().enabled,
            sex: SexSection::default(),
            age: AgeSection::default(),
            income: IncomeSection::default(),
        }
    }
}

impl TasteSection {
    pub fn taste_config(&self) -> TasteFactorConfig {
        TasteFactorConfig {
            enabled: self.enabled,
            sex_female: self.sex.female,
            sex_male: self.sex.male,
            age_young_value: self.age.young_value,
            age_old_value: self.age.old_value,
            age_young_max: self.age.young_max,
            age_old_min: self.age.old_min,
            income_lambda: self.income.lambda,
            income_ref_eur: self.income.ref_eur,
            income_clip_lo: self.income.clip_lo,
            income_clip_hi: self.income.clip_hi,
            income_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightsSection {
    pub select: f64,
    pub mode: f64,
    pub time: f64,
}

impl Default for WeightsSection {
    fn default() -> Self {
        let w = StrategyWeights::default();
        WeightsSection {
            select: w.select,
            mode: w.mode,
            time: w.time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplanningSection {
    pub max_plans: usize,
    pub weights: WeightsSection,
    pub innovation_stop_fraction: f64,
    pub beta_select: f64,
    pub sigma_sec: f64,
    pub min_activity_sec: u32,
    pub score_smoothing: f64,
    pub freeze_scores_after_innovation: bool,
}

impl Default for ReplanningSection {
    fn default() -> Self {
        let r = ReplanningConfig::default();
        ReplanningSection {
            max_plans: r.max_plans,
            weights: WeightsSection::default(),
            innovation_stop_fraction: r.innovation_stop_fraction,
            beta_select: r.beta_select,
            sigma_sec: r.sigma_sec,
            min_activity_sec: r.min_activity_sec,
            score_smoothing: r.score_smoothing,
            freeze_scores_after_innovation: r.freeze_scores_after_innovation,
        }
    }
}

impl ReplanningSection {
    pub fn replanning_config(&self) -> ReplanningConfig {
        ReplanningConfig {
            max_plans: self.max_plans,
            weights: StrategyWeights {
                select: self.weights.select,
                mode: self.weights.mode,
                time: self.weights.time,
            },
            innovation_stop_fraction: self.innovation_stop_fraction,
            beta_select: self.beta_select,
            sigma_sec: self.sigma_sec,
            min_activity_sec: self.min_activity_sec,
            score_smoothing: self.score_smoothing,
            freeze_scores_after_innovation: self.freeze_scores_after_innovation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceSection {
    pub window: usize,
    pub epsilon: f64,
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        let c = ConvergenceConfig::default();
        ConvergenceSection {
            window: c.window,
            epsilon: c.epsilon,
        }
    }
}

/// Overrides applied on top of the scoring table.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringSection {
    /// Added to the car constant where the table has no Robo-Taxi row.
    pub rt_constant_offset: f64,
    pub wait_multiplier: f64,
    pub stuck_penalty: f64,
}

impl Default for ScoringSection {
    fn default() -> Self {
        ScoringSection {
            rt_constant_offset: -0.5,
            wait_multiplier: 10.0,
            stuck_penalty: -100.0,
        }
    }
}

impl ScoringSection {
    pub fn apply(&self, params: &mut ScoringParams) {
        params.rt_constant_offset = self.rt_constant_offset;
        params.wait_multiplier = self.wait_multiplier;
        params.stuck_penalty = self.stuck_penalty;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    /// Count only passenger-carrying tasks as in service.
    pub in_service_occupied_only: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub run: RunSection,
    pub inputs: InputPaths,
    #[serde(default)]
    pub synthesis: SynthesisSection,
    #[serde(default)]
    pub plans: PlansSection,
    #[serde(default)]
    pub scoring: ScoringSection,
    #[serde(default)]
    pub mobsim: MobsimSection,
    pub fleet: FleetSection,
    #[serde(default)]
    pub taste_factors: TasteSection,
    #[serde(default)]
    pub replanning: ReplanningSection,
    #[serde(default)]
    pub convergence: ConvergenceSection,
    #[serde(default)]
    pub metrics: MetricsSection,
    /// SHA-256 of the file contents, hex encoded.
    #[serde(skip)]
    pub hash: String,
}

impl ScenarioConfig {
    /// Reads, resolves relative paths against the file's directory, and validates.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.inputs.resolve(base);
        if cfg.run.output_dir.is_relative() {
            cfg.run.output_dir = base.join(&cfg.run.output_dir);
        }
        cfg.check_files()?;
        Ok(cfg)
    }

    /// Parses and validates the values without touching the file system.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            Error::config(key_of(text, e.span(), &msg), msg)
        })?;
        cfg.hash = hex::encode(Sha256::digest(text.as_bytes()));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.run.sample_fraction > 0.0 && self.run.sample_fraction <= 1.0) {
            return Err(Error::config("run.sample_fraction", "must lie in (0, 1]"));
        }
        if self.run.max_iterations == 0 {
            return Err(Error::config("run.max_iterations", "must be at least 1"));
        }
        if self.fleet.size > 0 && self.fleet.depots.is_empty() {
            return Err(Error::config("fleet.depots", "at least one depot link is required"));
        }
        if !(self.scoring.wait_multiplier >= 1.0) {
            return Err(Error::config("scoring.wait_multiplier", "must be >= 1"));
        }
        if !self.scoring.rt_constant_offset.is_finite() || !(self.scoring.stuck_penalty <= 0.0) {
            return Err(Error::config("scoring", "offset must be finite and the stuck penalty not positive"));
        }
        if self.convergence.window == 0 {
            return Err(Error::config("convergence.window", "must be at least 1"));
        }
        if !(self.convergence.epsilon > 0.0) {
            return Err(Error::config("convergence.epsilon", "must be positive"));
        }
        if !(self.mobsim.travel_time_alpha > 0.0 && self.mobsim.travel_time_alpha <= 1.0) {
            return Err(Error::config("mobsim.travel_time_alpha", "must lie in (0, 1]"));
        }
        if !(self.mobsim.flow_capacity_factor > 0.0 && self.mobsim.storage_capacity_factor > 0.0) {
            return Err(Error::config("mobsim.flow_capacity_factor", "capacity factors must be positive"));
        }
        if self.inputs.population_households.is_some() != self.inputs.population_persons.is_some() {
            return Err(Error::config(
                "inputs.population_persons",
                "population households and persons must be given together",
            ));
        }
        if !self.inputs.uses_population_file() {
            for (key, p) in [
                ("inputs.microdata_households", &self.inputs.microdata_households),
                ("inputs.microdata_persons", &self.inputs.microdata_persons),
                ("inputs.zone_targets", &self.inputs.zone_targets),
            ] {
                if p.is_none() {
                    return Err(Error::config(key, "required unless a population is given"));
                }
            }
        }
        self.taste_factors.taste_config().validate()?;
        self.replanning.replanning_config().validate()
    }

    fn check_files(&self) -> Result<()> {
        for (key, p) in self.inputs.entries() {
            if let Some(p) = p {
                if !p.is_file() {
                    return Err(Error::config(key, format!("file not found: {}", p.display())));
                }
            }
        }
        Ok(())
    }

    pub fn mobsim_config(&self) -> MobsimConfig {
        let f = self.run.sample_fraction;
        MobsimConfig {
            stuck_time_sec: self.mobsim.stuck_time_sec,
            flow_capacity_factor: self.mobsim.flow_capacity_factor * f,
            storage_capacity_factor: self.mobsim.storage_capacity_factor * f,
            teleport: self.mobsim.teleport,
            ..MobsimConfig::default()
        }
    }

    pub fn convergence_config(&self) -> ConvergenceConfig {
        ConvergenceConfig {
            window: self.convergence.window,
            epsilon: self.convergence.epsilon,
        }
    }
}

/// Best-effort key path of a TOML error: the enclosing `[section]` before
/// the error position joined with the field named in the message.
fn key_of(text: &str, span: Option<std::ops::Range<usize>>, msg: &str) -> String {
    let section = span.and_then(|s| {
        let start = s.start.min(text.len());
        let line_end = text[start..].find('\n').map_or(text.len(), |i| start + i);
        text[..line_end]
            .lines()
            .rev()
            .find_map(|l| l.trim().strip_prefix('[').and_then(|l| l.strip_suffix(']')).map(str::to_string))
    });
    let field = msg.split('`').nth(1).filter(|f| !f.contains(' '));
    match (section, field) {
        (Some(s), Some(f)) => format!("{s}.{f}"),
        (Some(s), None) => s,
        (None, Some(f)) => f.to_string(),
        (None, None) => "config".to_string(),
    }
}
