//! Scenario runs: load inputs, synthesize or load the population, build
//! initial plans, iterate mobsim, scoring and replanning until the mean score
//! settles, then write logs, KPIs and a manifest. Sweeps repeat the iteration
//! loop over fleet sizes and the taste toggle from one shared population.

pub mod config;
pub mod demo;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use config::ScenarioConfig;
pub use demo::{generate_demo_scenario, DemoOptions};

use crate::activitygen::io::{read_chain_table, read_facilities, read_od_model, read_time_models, read_zones, write_plans};
use crate::activitygen::{generate_plans, FacilitySet, OdModel};
use crate::csvio::{write_bytes, write_records};
use crate::error::{Error, Result};
use crate::fleet::io::{write_requests, write_tasks};
use crate::fleet::FleetState;
use crate::ids::{HouseholdId, PersonId};
use crate::metrics::{self, comparison_report, Change, KpiBundle, RunLabel};
use crate::mobsim::events::EventLog;
use crate::mobsim::ttfield::TravelTimeField;
use crate::mobsim::{run_day, DayAgent, FleetOutcome, Locator, MobsimConfig};
use crate::network::{read_network, Network};
use crate::plan::DailyPlan;
use crate::replanning::{
    available_modes, evolve_iteration, record_score, ConvergenceMonitor, IterationScores, PlanMemory,
    ReplanSubject, Schedule, ITERATION_HEADER,
};
use crate::rng::{self, Domain};
use crate::scoring::{
    normalize_taste_factors, score_plan, ActivityScoringParams, PlanScoringContext, ScoringParams,
    TasteFactors, TasteSubject,
};
use crate::synthpop::io::{read_population, read_sample, read_zone_targets, write_population, write_report};
use crate::synthpop::{
    controls_by_name, default_controls, synthesize_population, validate_population, Population,
    SynthesisReport, ZoneSummary,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything shared by the runs of one scenario and seed.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub cfg: ScenarioConfig,
    pub seed: u64,
    /// Hash of the config and seed; equal across the cells of a sweep.
    pub fingerprint: String,
    pub net: Network,
    pub facilities: FacilitySet,
    pub locator: Locator,
    pub params: ScoringParams,
    pub activity_params: ActivityScoringParams,
    pub population: Population,
    pub zones: Vec<ZoneSummary>,
    pub report: Option<SynthesisReport>,
    pub plans: Vec<DailyPlan>,
}

fn fingerprint(cfg: &ScenarioConfig, seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(cfg.hash.as_bytes());
    h.update(seed.to_le_bytes());
    hex::encode(h.finalize())
}

/// Population from file, or synthesized from microdata and zone targets.
pub fn load_population(cfg: &ScenarioConfig, seed: u64) -> Result<(Population, Vec<ZoneSummary>, Option<SynthesisReport>)> {
    let inputs = &cfg.inputs;
    if let (Some(h), Some(p)) = (&inputs.population_households, &inputs.population_persons) {
        return Ok((read_population(h, p)?, Vec::new(), None));
    }
    let missing = |k: &str| Error::config(k, "required unless a population is given");
    let controls = if cfg.synthesis.controls.is_empty() {
        default_controls()
    } else {
        controls_by_name(&cfg.synthesis.controls).map_err(|e| Error::config("synthesis.controls", e.to_string()))?
    };
    let sample = read_sample(
        inputs.microdata_households.as_ref().ok_or_else(|| missing("inputs.microdata_households"))?,
        inputs.microdata_persons.as_ref().ok_or_else(|| missing("inputs.microdata_persons"))?,
    )?;
    let targets = read_zone_targets(inputs.zone_targets.as_ref().ok_or_else(|| missing("inputs.zone_targets"))?, &controls)?;
    let synth = synthesize_population(&sample, &targets, &controls, seed, &cfg.synthesis.settings())?;
    let report = validate_population(&synth.population, &targets, &controls)?;
    let population = subsample(synth.population, cfg.run.sample_fraction, seed);
    Ok((population, synth.zones, Some(report)))
}

/// Keeps each household with probability `fraction` and renumbers ids densely.
pub fn subsample(population: Population, fraction: f64, seed: u64) -> Population {
    if fraction >= 1.0 {
        return population;
    }
    let mut out = Population::default();
    for h in &population.households {
        let u: f64 = rng::stream(seed, Domain::Synthesis, &[u64::MAX, h.id.0 as u64]).random();
        if u >= fraction {
            continue;
        }
        let mut hh = h.clone();
        hh.id = HouseholdId(out.households.len() as u32);
        hh.member_ids.clear();
        for pid in &h.member_ids {
            let mut p = population.person(*pid).expect("member exists").clone();
            p.id = PersonId(out.persons.len() as u32);
            p.household_id = hh.id;
            hh.member_ids.push(p.id);
            out.persons.push(p);
        }
        out.households.push(hh);
    }
    out
}

/// Loads every input and builds the population and initial plans.
pub fn prepare(cfg: &ScenarioConfig, seed: u64) -> Result<Prepared> {
    let inputs = &cfg.inputs;
    let net = read_network(&inputs.nodes, &inputs.links)?;
    let facilities = FacilitySet::new(read_zones(&inputs.zones)?, read_facilities(&inputs.facilities)?)?;
    let locator = Locator::new(&net, &facilities);
    let mut params = match &inputs.scoring_params {
        Some(p) => ScoringParams::from_csv_path(p)?,
        None => ScoringParams::defaults(),
    };
    cfg.scoring.apply(&mut params);
    if cfg.fleet.size > 0 {
        cfg.fleet.fleet_config(cfg.fleet.size).validate(&net)?;
    }
    let (population, zones, report) = load_population(cfg, seed)?;
    let chains = read_chain_table(&inputs.chains)?;
    let models = read_time_models(&inputs.time_models)?;
    let od = match &inputs.od_model {
        Some(p) => read_od_model(p)?,
        None => OdModel::gravity(&facilities, cfg.plans.theta_m)?,
    };
    let plans = generate_plans(&population, &chains, &od, &facilities, &models, &cfg.plans.plan_gen(), seed)?.plans;
    Ok(Prepared {
        cfg: cfg.clone(),
        seed,
        fingerprint: fingerprint(cfg, seed),
        net,
        facilities,
        locator,
        params,
        activity_params: ActivityScoringParams::default(),
        population,
        zones,
        report,
        plans,
    })
}

/// Per-person taste factors, normalized over the population when enabled.
pub fn person_factors(prep: &Prepared, enabled: bool) -> Result<Vec<TasteFactors>> {
    let mut raw = prep.cfg.taste_factors.taste_config();
    raw.enabled = enabled;
    if !enabled {
        return Ok(vec![TasteFactors::ONE; prep.population.persons.len()]);
    }
    let subjects = taste_subjects(&prep.population)?;
    let cfg = normalize_taste_factors(&subjects, &raw)?;
    Ok(subjects.iter().map(|s| cfg.factors(s)).collect())
}

pub fn taste_subjects(population: &Population) -> Result<Vec<TasteSubject>> {
    population
        .persons
        .iter()
        .map(|p| {
            let hh = population
                .household(p.household_id)
                .ok_or_else(|| Error::Data(format!("person {} without household", p.id)))?;
            Ok(TasteSubject {
                age: p.age as f64,
                sex: p.sex,
                income_eur: hh.income_eur,
            })
        })
        .collect()
}

/// Result of one iterated run.
#[derive(Debug)]
pub struct RunOutcome {
    pub fleet_size: u32,
    pub taste: bool,
    pub iterations: u32,
    pub converged: bool,
    pub innovation_stop: u32,
    pub scores: Vec<IterationScores>,
    /// Full event log of the final day.
    pub events: EventLog,
    pub fleet: Option<FleetOutcome>,
    pub kpis: KpiBundle,
    pub memories: Vec<PlanMemory>,
}

fn fresh_fleet(prep: &Prepared, size: u32) -> Result<Option<FleetState>> {
    if size == 0 {
        return Ok(None);
    }
    FleetState::new(prep.cfg.fleet.fleet_config(size), &prep.net).map(Some)
}

fn execute_day(
    prep: &Prepared,
    memories: &mut [PlanMemory],
    tt: &TravelTimeField,
    fleet_size: u32,
    cfg: &MobsimConfig,
) -> Result<crate::mobsim::DayResult> {
    let mut agents: Vec<DayAgent<'_>> = memories
        .iter_mut()
        .zip(&prep.population.persons)
        .map(|(m, p)| DayAgent {
            person: p.id,
            plan: m.selected_plan_mut(),
        })
        .collect();
    run_day(&mut agents, &prep.net, &prep.locator, tt, fresh_fleet(prep, fleet_size)?, cfg)
}

/// Scores every executed selected plan, records it in memory and returns the executed scores.
fn score_day(prep: &Prepared, memories: &mut [PlanMemory], factors: &[TasteFactors], frozen: bool) -> Result<Vec<f64>> {
    let rcfg = prep.cfg.replanning.replanning_config();
    memories
        .par_iter_mut()
        .zip(prep.population.persons.par_iter())
        .zip(factors.par_iter())
        .map(|((mem, p), f)| {
            let hh = prep
                .population
                .household(p.household_id)
                .ok_or_else(|| Error::Data(format!("person {} without household", p.id)))?;
            let ctx = PlanScoringContext {
                spc: p.spc,
                household_cars: hh.cars,
                factors: *f,
                params: &prep.params,
                activity_params: &prep.activity_params,
            };
            let plan = mem.selected_plan_mut();
            let remembered = plan.score;
            let executed = score_plan(plan, &ctx, |fac| prep.facilities.parking_at(fac))?;
            plan.score = remembered;
            record_score(mem, executed, &rcfg, frozen);
            Ok(executed)
        })
        .collect()
}

/// Runs the iteration loop for one fleet size and taste setting.
pub fn run_iterations(prep: &Prepared, fleet_size: u32, taste: bool) -> Result<RunOutcome> {
    let cfg = &prep.cfg;
    let rcfg = cfg.replanning.replanning_config();
    let conv = cfg.convergence_config();
    let factors = person_factors(prep, taste)?;
    let subjects: Vec<ReplanSubject> = prep
        .population
        .persons
        .iter()
        .map(|p| {
            let cars = prep.population.household(p.household_id).map(|h| h.cars).unwrap_or(0);
            ReplanSubject {
                person: p.id,
                modes: available_modes(cars, fleet_size > 0),
            }
        })
        .collect();
    let mut memories: Vec<PlanMemory> = prep.plans.iter().cloned().map(PlanMemory::new).collect();
    let mut quiet = cfg.mobsim_config();
    quiet.record_events = false;
    let mut tt = TravelTimeField::free_flow(&prep.net);
    let mut monitor = ConvergenceMonitor::new(conv);
    let mut schedule = Schedule::new(cfg.run.max_iterations, rcfg.innovation_stop_fraction);
    let mut scores = Vec::new();
    let mut iteration = 0;
    let (converged, final_tt) = loop {
        let day = execute_day(prep, &mut memories, &tt, fleet_size, &quiet)?;
        let frozen = rcfg.freeze_scores_after_innovation && !schedule.innovating(iteration);
        let executed = score_day(prep, &mut memories, &factors, frozen)?;
        let row = IterationScores::compute(iteration, &executed, &memories);
        monitor.push(row.mean_executed);
        scores.push(row);
        let converged = monitor.has_converged();
        schedule.observe(iteration, converged);
        log::info!(
            "fleet {fleet_size} taste {taste}: iteration {iteration} mean score {:.4}{}",
            row.mean_executed,
            if converged { " (converged)" } else { "" }
        );
        let used = tt.clone();
        tt.update(&day.observations, cfg.mobsim.travel_time_alpha);
        if schedule.should_stop(iteration, converged, conv.window) {
            break (converged, used);
        }
        evolve_iteration(&mut memories, &subjects, &rcfg, schedule.innovating(iteration), prep.seed, iteration)?;
        iteration += 1;
    };

    // Same plans and link times as the last iteration, now with the full log.
    let day = execute_day(prep, &mut memories, &final_tt, fleet_size, &cfg.mobsim_config())?;
    let (tasks, requests) = match &day.fleet {
        Some(f) => (f.tasks.as_slice(), f.requests.as_slice()),
        None => (&[][..], &[][..]),
    };
    let label = RunLabel {
        fingerprint: prep.fingerprint.clone(),
        fleet_size,
        taste,
        occupied_only: cfg.metrics.in_service_occupied_only,
    };
    let kpis = KpiBundle::compute(&label, &day.events.events, tasks, requests, &prep.population)?;
    Ok(RunOutcome {
        fleet_size,
        taste,
        iterations: iteration + 1,
        converged,
        innovation_stop: schedule.innovation_stop,
        scores,
        events: day.events,
        fleet: day.fleet,
        kpis,
        memories,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub version: String,
    pub config_sha256: String,
    pub fingerprint: String,
    pub seed: u64,
    pub fleet_size: u32,
    pub taste_factors: bool,
    pub persons: usize,
    pub sample_fraction: f64,
    pub iterations: u32,
    pub innovation_stop: u32,
    pub converged: bool,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Data(format!("json: {e}")))?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

/// Population, synthesis report and initial plans.
pub fn write_inputs_snapshot(dir: &Path, prep: &Prepared) -> Result<()> {
    write_population(&dir.join("population_households.csv"), &dir.join("population_persons.csv"), &prep.population)?;
    if let Some(r) = &prep.report {
        write_report(&dir.join("synthesis_report.csv"), r)?;
    }
    write_plans(
        &dir.join("plans_initial.csv"),
        prep.population.persons.iter().map(|p| p.id).zip(prep.plans.iter()),
    )
}

/// Logs, scores, KPI tables, charts and the manifest of one run.
pub fn write_run(dir: &Path, prep: &Prepared, out: &RunOutcome) -> Result<()> {
    out.events.write_csv(&dir.join("events.csv"))?;
    let (tasks, requests) = match &out.fleet {
        Some(f) => (f.tasks.as_slice(), f.requests.as_slice()),
        None => (&[][..], &[][..]),
    };
    write_tasks(&dir.join("fleet_tasks.csv"), tasks)?;
    write_requests(&dir.join("requests.csv"), requests)?;
    write_records(&dir.join("iteration_scores.csv"), ITERATION_HEADER, &out.scores)?;
    metrics::io::write_tables(dir, std::slice::from_ref(&out.kpis))?;
    metrics::io::write_bundle(&dir.join("kpis.json"), &out.kpis)?;
    write_charts(dir, std::slice::from_ref(&out.kpis))?;
    write_json(
        &dir.join("manifest.json"),
        &Manifest {
            version: VERSION.to_string(),
            config_sha256: prep.cfg.hash.clone(),
            fingerprint: prep.fingerprint.clone(),
            seed: prep.seed,
            fleet_size: out.fleet_size,
            taste_factors: out.taste,
            persons: prep.population.persons.len(),
            sample_fraction: prep.cfg.run.sample_fraction,
            iterations: out.iterations,
            innovation_stop: out.innovation_stop,
            converged: out.converged,
        },
    )
}

fn write_charts(dir: &Path, bundles: &[KpiBundle]) -> Result<()> {
    let charts = dir.join("charts");
    write_bytes(&charts.join("modal_split.svg"), metrics::svg::modal_split_chart(bundles).as_bytes())?;
    write_bytes(&charts.join("in_service_hourly.svg"), metrics::svg::in_service_heatmap(bundles).as_bytes())
}

/// Synthesis only: writes the population and the fit report.
pub fn run_synthesis(cfg: &ScenarioConfig, out_dir: &Path) -> Result<Population> {
    let (population, _, report) = load_population(cfg, cfg.run.seed)?;
    write_population(&out_dir.join("population_households.csv"), &out_dir.join("population_persons.csv"), &population)?;
    if let Some(r) = &report {
        write_report(&out_dir.join("synthesis_report.csv"), r)?;
    }
    Ok(population)
}

/// One complete run with the configured fleet size and taste setting.
pub fn run_scenario(cfg: &ScenarioConfig, seed: u64, out_dir: &Path) -> Result<RunOutcome> {
    let prep = prepare(cfg, seed)?;
    write_inputs_snapshot(out_dir, &prep)?;
    let out = run_iterations(&prep, cfg.fleet.size, cfg.taste_factors.enabled)?;
    write_run(out_dir, &prep, &out)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TasteMode {
    On,
    Off,
    Both,
}

impl TasteMode {
    pub fn toggles(self) -> Vec<bool> {
        match self {
            TasteMode::On => vec![true],
            TasteMode::Off => vec![false],
            TasteMode::Both => vec![true, false],
        }
    }
}

impl FromStr for TasteMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "on" => Ok(TasteMode::On),
            "off" => Ok(TasteMode::Off),
            "both" => Ok(TasteMode::Both),
            _ => Err(Error::config("taste", format!("expected on, off or both, got `{s}`"))),
        }
    }
}

pub fn validate_fleet_sizes(sizes: &[u32]) -> Result<()> {
    if sizes.is_empty() {
        return Err(Error::config("fleet_sizes", "at least one fleet size is required"));
    }
    if sizes.contains(&0) {
        return Err(Error::config("fleet_sizes", "fleet sizes must be positive"));
    }
    if sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("fleet_sizes", "fleet sizes must be strictly increasing"));
    }
    Ok(())
}

pub fn cell_dir_name(fleet_size: u32, taste: bool) -> String {
    format!("fleet_{fleet_size}_taste_{}", if taste { "on" } else { "off" })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub fleet_size: u32,
    pub taste: bool,
    pub iterations: u32,
    pub converged: bool,
    pub kpis: KpiBundle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub cells: Vec<CellSummary>,
    pub comparisons: Vec<Change>,
}

/// Runs one toggle's fleet sizes in order; the first failure ends that toggle.
fn sweep_toggle(prep: &Prepared, sizes: &[u32], taste: bool, out_dir: &Path) -> (Vec<CellSummary>, Option<Error>) {
    let mut done = Vec::new();
    for &n in sizes {
        let dir = out_dir.join(cell_dir_name(n, taste));
        let result = run_iterations(prep, n, taste).and_then(|out| {
            write_run(&dir, prep, &out)?;
            Ok(out)
        });
        match result {
            Ok(out) => done.push(CellSummary {
                fleet_size: n,
                taste,
                iterations: out.iterations,
                converged: out.converged,
                kpis: out.kpis,
            }),
            Err(e) => return (done, Some(e)),
        }
    }
    (done, None)
}

pub fn sweep_summary_csv(cells: &[CellSummary]) -> String {
    let mut s = String::from("fleetSize,taste,iterations,converged");
    if let Some(c) = cells.first() {
        for (k, _) in c.kpis.scalars() {
            let _ = write!(s, ",{k}");
        }
    }
    s.push('\n');
    for c in cells {
        let _ = write!(s, "{},{},{},{}", c.fleet_size, if c.taste { "on" } else { "off" }, c.iterations, c.converged);
        for (_, v) in c.kpis.scalars() {
            let _ = write!(s, ",{}", v.map(|x| x.to_string()).unwrap_or_default());
        }
        s.push('\n');
    }
    s
}

/// Runs every (fleet size, taste) cell from one shared population and plan set.
pub fn run_sweep(cfg: &ScenarioConfig, seed: u64, sizes: &[u32], taste: TasteMode, out_dir: &Path) -> Result<SweepOutcome> {
    validate_fleet_sizes(sizes)?;
    if cfg.fleet.depots.is_empty() {
        return Err(Error::config("fleet.depots", "at least one depot link is required"));
    }
    let prep = prepare(cfg, seed)?;
    prep.cfg.fleet.fleet_config(sizes[0]).validate(&prep.net)?;
    write_inputs_snapshot(out_dir, &prep)?;
    let results: Vec<(Vec<CellSummary>, Option<Error>)> =
        taste.toggles().into_par_iter().map(|t| sweep_toggle(&prep, sizes, t, out_dir)).collect();
    let mut cells = Vec::new();
    let mut first_error = None;
    for (c, e) in results {
        cells.extend(c);
        if first_error.is_none() {
            first_error = e;
        }
    }
    let bundles: Vec<KpiBundle> = cells.iter().map(|c| c.kpis.clone()).collect();
    write_bytes(&out_dir.join("sweep_summary.csv"), sweep_summary_csv(&cells).as_bytes())?;
    metrics::io::write_tables(out_dir, &bundles)?;
    write_charts(out_dir, &bundles)?;
    let mut comparisons = Vec::new();
    if taste == TasteMode::Both {
        for &n in sizes {
            let on = cells.iter().find(|c| c.fleet_size == n && c.taste);
            let off = cells.iter().find(|c| c.fleet_size == n && !c.taste);
            if let (Some(a), Some(b)) = (on, off) {
                comparisons.extend(comparison_report(&a.kpis, &b.kpis)?);
            }
        }
        write_bytes(&out_dir.join("comparison.csv"), metrics::io::comparison_csv(&comparisons).as_bytes())?;
    }
    match first_error {
        Some(e) => Err(e),
        None => Ok(SweepOutcome { cells, comparisons }),
    }
}

/// Output directory for a run: the CLI flag when given, else the config's.
pub fn output_dir(cfg: &ScenarioConfig, flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf).unwrap_or_else(|| cfg.run.output_dir.clone())
}
