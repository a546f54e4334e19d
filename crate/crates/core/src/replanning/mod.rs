//! Co-evolutionary replanning: plan memories, selection, mutation and the
//! convergence monitor.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::activitygen::DAY_SEC;
use crate::error::{Error, Result};
use crate::ids::PersonId;
use crate::plan::DailyPlan;
use crate::rng::{stream, Domain};
use crate::types::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyWeights {
    pub select: f64,
    pub mode: f64,
    pub time: f64,
}

impl Default for StrategyWeights {
    fn default() -> Self {
        StrategyWeights {
            select: 0.8,
            mode: 0.1,
            time: 0.1,
        }
    }
}

impl StrategyWeights {
    pub fn validate(&self) -> Result<()> {
        let w = [self.select, self.mode, self.time];
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::config("replanning.weights", "weights must be finite and non-negative"));
        }
        if (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::config("replanning.weights", "weights must sum to 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplanningConfig {
    pub max_plans: usize,
    pub weights: StrategyWeights,
    pub innovation_stop_fraction: f64,
    pub beta_select: f64,
    pub sigma_sec: f64,
    pub min_activity_sec: u32,
    /// Weight of the newest score when a plan is executed again.
    pub score_smoothing: f64,
    /// Once innovation stops, keep the scores of already scored plans fixed.
    pub freeze_scores_after_innovation: bool,
}

impl Default for ReplanningConfig {
    fn default() -> Self {
        ReplanningConfig {
            max_plans: 5,
            weights: StrategyWeights::default(),
            innovation_stop_fraction: 0.8,
            beta_select: 1.0,
            sigma_sec: 1800.0,
            min_activity_sec: 300,
            score_smoothing: 0.5,
            freeze_scores_after_innovation: true,
        }
    }
}

impl ReplanningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_plans == 0 {
            return Err(Error::config("replanning.max_plans", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.innovation_stop_fraction) {
            return Err(Error::config("replanning.innovation_stop_fraction", "must lie in [0, 1]"));
        }
        if !(self.beta_select.is_finite() && self.beta_select >= 0.0) {
            return Err(Error::config("replanning.beta_select", "must be finite and non-negative"));
        }
        self.weights.validate()
    }
}

/// An agent's remembered plans and the one to execute next.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanMemory {
    pub plans: Vec<DailyPlan>,
    pub selected: usize,
}

impl PlanMemory {
    pub fn new(initial: DailyPlan) -> Self {
        PlanMemory {
            plans: vec![initial],
            selected: 0,
        }
    }

    pub fn selected_plan(&self) -> &DailyPlan {
        &self.plans[self.selected]
    }

    pub fn selected_plan_mut(&mut self) -> &mut DailyPlan {
        &mut self.plans[self.selected]
    }

    /// Adds `plan`, selects it, and evicts the worst other plan beyond `max_plans`.
    pub fn insert(&mut self, plan: DailyPlan, max_plans: usize) {
        self.plans.push(plan);
        self.selected = self.plans.len() - 1;
        while self.plans.len() > max_plans.max(1) {
            let worst = (0..self.plans.len())
                .filter(|&i| i != self.selected)
                .min_by(|&a, &b| score_or_low(&self.plans[a]).total_cmp(&score_or_low(&self.plans[b])).then(b.cmp(&a)))
                .expect("more than one plan");
            self.plans.remove(worst);
            if worst < self.selected {
                self.selected -= 1;
            }
        }
    }

    pub fn best_score(&self) -> Option<f64> {
        self.plans.iter().filter_map(|p| p.score).max_by(f64::total_cmp)
    }

    pub fn worst_score(&self) -> Option<f64> {
        self.plans.iter().filter_map(|p| p.score).min_by(f64::total_cmp)
    }
}

fn score_or_low(p: &DailyPlan) -> f64 {
    p.score.unwrap_or(f64::NEG_INFINITY)
}

/// Logit choice: plan `i` with probability ∝ exp(β·(S_i − max S)).
pub fn select_plan(plans: &[DailyPlan], beta: f64, rng: &mut impl Rng) -> Result<usize> {
    if plans.is_empty() {
        return Err(Error::Plan("cannot select from an empty memory".into()));
    }
    let scores: Vec<f64> = plans
        .iter()
        .enumerate()
        .map(|(i, p)| p.score.ok_or_else(|| Error::Plan(format!("plan {i} has no score"))))
        .collect::<Result<_>>()?;
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores.iter().map(|s| (beta * (s - max)).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return Ok(i);
        }
        u -= w;
    }
    Ok(weights.iter().rposition(|w| *w > 0.0).unwrap_or(0))
}

/// Modes an agent may use on any leg.
pub fn available_modes(household_cars: u32, robotaxi: bool) -> Vec<Mode> {
    let mut m = Vec::with_capacity(4);
    if household_cars >= 1 {
        m.push(Mode::Car);
    }
    m.push(Mode::Pt);
    m.push(Mode::Walk);
    if robotaxi {
        m.push(Mode::RoboTaxi);
    }
    m
}

/// Copy of `plan` with one leg switched to another available mode.
pub fn mutate_mode(plan: &DailyPlan, available: &[Mode], rng: &mut impl Rng) -> DailyPlan {
    let mut out = plan.clone();
    out.clear_execution();
    let legs: Vec<usize> = (0..plan.legs.len())
        .filter(|&i| available.iter().any(|m| *m != plan.legs[i].mode))
        .collect();
    if legs.is_empty() {
        return out;
    }
    let leg = legs[rng.random_range(0..legs.len())];
    let alternatives: Vec<Mode> = available.iter().copied().filter(|m| *m != plan.legs[leg].mode).collect();
    out.legs[leg].mode = alternatives[rng.random_range(0..alternatives.len())];
    out
}

/// Copy of `plan` with one activity end time shifted by a normal draw, kept
/// at least `min_gap` seconds from its neighbours.
pub fn mutate_end_times(plan: &DailyPlan, sigma_sec: f64, min_gap: u32, rng: &mut impl Rng) -> DailyPlan {
    let mut out = plan.clone();
    out.clear_execution();
    let n = plan.activities.len();
    if n < 2 {
        return out;
    }
    let j = rng.random_range(0..n - 1);
    let shift = Normal::new(0.0, sigma_sec).expect("valid sigma").sample(rng);
    let ends: Vec<u32> = plan.activities[..n - 1]
        .iter()
        .map(|a| a.planned_end_sec.expect("non-final activity"))
        .collect();
    let old = ends[j] as i64;
    let lower = if j == 0 { 0 } else { ends[j - 1] as i64 + min_gap as i64 };
    let upper = if j + 2 < n { ends[j + 1] as i64 } else { DAY_SEC as i64 } - min_gap as i64;
    let new = if lower > upper {
        old
    } else {
        (old + shift.round() as i64).clamp(lower, upper)
    };
    out.activities[j].planned_end_sec = Some(new as u32);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    Select,
    MutateMode,
    MutateTime,
}

/// Per-agent inputs for one replanning step.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplanSubject {
    pub person: PersonId,
    pub modes: Vec<Mode>,
}

/// Applies one strategy per agent and returns how many new plans were created.
///
/// Each agent draws from its own stream keyed by person and iteration, so the
/// outcome does not depend on thread scheduling.
pub fn evolve_iteration(
    memories: &mut [PlanMemory],
    subjects: &[ReplanSubject],
    cfg: &ReplanningConfig,
    innovate: bool,
    seed: u64,
    iteration: u32,
) -> Result<usize> {
    if memories.len() != subjects.len() {
        return Err(Error::Structural(format!(
            "{} plan memories for {} agents",
            memories.len(),
            subjects.len()
        )));
    }
    let created = memories
        .par_iter_mut()
        .zip(subjects.par_iter())
        .map(|(mem, subj)| -> Result<usize> {
            let mut rng = stream(seed, Domain::Replanning, &[subj.person.0 as u64, iteration as u64]);
            let w = cfg.weights;
            let strategy = if !innovate {
                Strategy::Select
            } else {
                let u: f64 = rng.random::<f64>() * (w.select + w.mode + w.time);
                if u < w.select {
                    Strategy::Select
                } else if u < w.select + w.mode {
                    Strategy::MutateMode
                } else {
                    Strategy::MutateTime
                }
            };
            match strategy {
                Strategy::Select => {
                    mem.selected = select_plan(&mem.plans, cfg.beta_select, &mut rng)?;
                    Ok(0)
                }
                Strategy::MutateMode | Strategy::MutateTime => {
                    let parent = mem.selected_plan();
                    let child = if strategy == Strategy::MutateMode {
                        mutate_mode(parent, &subj.modes, &mut rng)
                    } else {
                        mutate_end_times(parent, cfg.sigma_sec, cfg.min_activity_sec, &mut rng)
                    };
                    mem.insert(child, cfg.max_plans);
                    Ok(1)
                }
            }
        })
        .collect::<Result<Vec<usize>>>()?;
    Ok(created.iter().sum())
}

/// Stores the score of the day just executed on the selected plan.
///
/// A plan executed before is smoothed towards the new value; when `frozen`,
/// plans that already carry a score keep it.
pub fn record_score(mem: &mut PlanMemory, executed: f64, cfg: &ReplanningConfig, frozen: bool) {
    let plan = mem.selected_plan_mut();
    plan.score = Some(match plan.score {
        Some(old) if frozen => old,
        Some(old) => (1.0 - cfg.score_smoothing) * old + cfg.score_smoothing * executed,
        None => executed,
    });
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub window: usize,
    pub epsilon: f64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            window: 10,
            epsilon: 1e-3,
        }
    }
}

/// History of the mean executed score per iteration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceMonitor {
    pub history: Vec<f64>,
    pub window: usize,
    pub epsilon: f64,
}

impl ConvergenceMonitor {
    pub fn new(cfg: ConvergenceConfig) -> Self {
        ConvergenceMonitor {
            history: Vec::new(),
            window: cfg.window,
            epsilon: cfg.epsilon,
        }
    }

    pub fn push(&mut self, mean_executed: f64) {
        self.history.push(mean_executed);
    }

    pub fn has_converged(&self) -> bool {
        has_converged(&self.history, self.window, self.epsilon)
    }
}

/// Relative change between the means of the last two windows is below `epsilon`.
pub fn has_converged(history: &[f64], window: usize, epsilon: f64) -> bool {
    let w = window.max(1);
    if history.len() < 2 * w {
        return false;
    }
    let n = history.len();
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let last = mean(&history[n - w..]);
    let prev = mean(&history[n - 2 * w..n - w]);
    (last - prev).abs() / prev.abs().max(1.0) < epsilon
}

/// One row of `iteration_scores.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IterationScores {
    pub iteration: u32,
    pub mean_executed: f64,
    pub mean_best: f64,
    pub mean_worst: f64,
}

impl IterationScores {
    pub fn compute(iteration: u32, executed: &[f64], memories: &[PlanMemory]) -> Self {
        let mean = |v: &mut dyn Iterator<Item = f64>| {
            let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
            if n == 0 { 0.0 } else { s / n as f64 }
        };
        IterationScores {
            iteration,
            mean_executed: mean(&mut executed.iter().copied()),
            mean_best: mean(&mut memories.iter().filter_map(|m| m.best_score())),
            mean_worst: mean(&mut memories.iter().filter_map(|m| m.worst_score())),
        }
    }
}

pub const ITERATION_HEADER: &[&str] = &["iteration", "meanExecuted", "meanBest", "meanWorst"];

/// Iteration after which no more plans are created, and the final one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub max_iterations: u32,
    pub innovation_stop: u32,
}

impl Schedule {
    pub fn new(max_iterations: u32, fraction: f64) -> Self {
        Schedule {
            max_iterations,
            innovation_stop: (max_iterations as f64 * fraction).floor() as u32,
        }
    }

    /// Innovation ends at the configured fraction or at the first converged iteration.
    pub fn observe(&mut self, iteration: u32, converged: bool) {
        if converged && iteration < self.innovation_stop {
            self.innovation_stop = iteration;
        }
    }

    pub fn innovating(&self, iteration: u32) -> bool {
        iteration < self.innovation_stop
    }

    /// Stop once the selection-only phase has run a full window and is converged.
    pub fn should_stop(&self, iteration: u32, converged: bool, window: usize) -> bool {
        iteration + 1 >= self.max_iterations || (converged && iteration >= self.innovation_stop + window as u32)
    }
}

#[cfg(test)]
mod tests;
