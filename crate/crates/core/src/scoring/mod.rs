//! Leg, activity and plan scoring.
//!
//! Legs use the categorized mode utility: a constant, travel time, distance,
//! money, car-ownership and parking terms, with coefficients indexed by
//! socio-professional category. Robo-Taxi legs reuse the car time coefficient,
//! weight waiting time by a multiplier, and apply the per-person taste factors
//! to the constant, in-vehicle time and waiting time.

mod activity;
mod params;
mod taste;

pub use activity::{
    score_activity, ActivityScoringParams, ActivityTypeParams, MIN_DURATION_SEC,
};
pub use params::{ModeParams, ScoringParams, DEFAULT_SCORING_CSV, PARAM_NAMES};
pub use taste::{
    normalize_taste_factors, taste_factors, TasteFactorConfig, TasteFactors, TasteSubject,
};

use crate::error::{Error, Result};
use crate::ids::FacilityId;
use crate::plan::{DailyPlan, LegOutcome};
use crate::types::{Mode, ParkingLevel, Spc};

/// Everything needed to score one executed leg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegRecord {
    pub mode: Mode,
    pub spc: Spc,
    pub t_ivt_min: f64,
    pub t_wait_min: f64,
    pub dist_km: f64,
    pub monetary_cost_eur: f64,
    pub household_cars: u32,
    pub parking: ParkingLevel,
}

pub fn score_leg(leg: &LegRecord, params: &ScoringParams, factors: &TasteFactors) -> Result<f64> {
    let row = params.row(leg.spc, leg.mode)?;
    if leg.mode == Mode::RoboTaxi {
        let time = factors.k_ivt * leg.t_ivt_min
            + params.wait_multiplier * factors.k_wt * leg.t_wait_min;
        return Ok(factors.k_ut * row.c + row.beta_trav_per_min * time);
    }
    let mut s = row.c
        + row.beta_trav_per_min * (leg.t_ivt_min + leg.t_wait_min)
        + row.beta_dist_per_km * leg.dist_km
        + params.beta_money_per_eur * leg.monetary_cost_eur;
    if leg.mode != Mode::Walk {
        s += match leg.household_cars {
            0 => 0.0,
            1 => row.nu_car1,
            _ => row.nu_car2plus,
        };
        s += match leg.parking {
            ParkingLevel::Low => 0.0,
            ParkingLevel::Medium => row.gamma_park_med,
            ParkingLevel::High => row.gamma_park_high,
        };
    }
    Ok(s)
}

/// Per-person inputs for [`score_plan`].
#[derive(Debug, Clone, Copy)]
pub struct PlanScoringContext<'a> {
    pub spc: Spc,
    pub household_cars: u32,
    pub factors: TasteFactors,
    pub params: &'a ScoringParams,
    pub activity_params: &'a ActivityScoringParams,
}

/// Sums activity and leg scores of an executed plan and stores the total in `plan.score`.
pub fn score_plan(
    plan: &mut DailyPlan,
    ctx: &PlanScoringContext<'_>,
    parking_at: impl Fn(FacilityId) -> ParkingLevel,
) -> Result<f64> {
    let mut total = 0.0;
    for (i, a) in plan.activities.iter().enumerate() {
        let t = a
            .realized
            .ok_or_else(|| Error::Plan(format!("activity {i} was not executed")))?;
        total += score_activity(
            a.kind,
            t.duration_sec() as f64,
            t.start_sec as f64,
            ctx.activity_params,
        );
    }
    for (i, leg) in plan.legs.iter().enumerate() {
        let ex = leg
            .realized
            .ok_or_else(|| Error::Plan(format!("leg {i} was not executed")))?;
        let mode = match ex.outcome {
            LegOutcome::Rejected => Mode::Walk,
            _ => leg.mode,
        };
        let record = LegRecord {
            mode,
            spc: ctx.spc,
            t_ivt_min: ex.in_vehicle_sec() as f64 / 60.0,
            t_wait_min: ex.wait_sec as f64 / 60.0,
            dist_km: ex.distance_km,
            monetary_cost_eur: ex.cost_eur,
            household_cars: ctx.household_cars,
            parking: parking_at(plan.activities[i + 1].facility),
        };
        total += score_leg(&record, ctx.params, &ctx.factors)?;
        if ex.outcome != LegOutcome::Completed {
            total += ctx.params.stuck_penalty;
        }
    }
    plan.score = Some(total);
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::{Activity, ActivityTiming, Leg, LegExecution};
    use crate::types::ActivityType;

    fn leg(mode: Mode, ivt: f64, wait: f64, dist: f64) -> LegRecord {
        LegRecord {
            mode,
            spc: Spc::Employed,
            t_ivt_min: ivt,
            t_wait_min: wait,
            dist_km: dist,
            monetary_cost_eur: 0.0,
            household_cars: 1,
            parking: ParkingLevel::Medium,
        }
    }

    #[test]
    fn employed_car_leg() {
        let p = ScoringParams::defaults();
        let s = score_leg(&leg(Mode::Car, 20.0, 0.0, 10.0), &p, &TasteFactors::ONE).unwrap();
        assert!((s - (-6.2468)).abs() < 1e-9, "{s}");
    }

    #[test]
    fn employed_walk_legs() {
        let p = ScoringParams::defaults();
        let s = score_leg(&leg(Mode::Walk, 15.0, 0.0, 0.0), &p, &TasteFactors::ONE).unwrap();
        assert!((s - (-12.2055)).abs() < 1e-9);
        let z = score_leg(&leg(Mode::Walk, 0.0, 0.0, 0.0), &p, &TasteFactors::ONE).unwrap();
        assert_eq!(z, 0.0);
    }

    #[test]
    fn employed_robotaxi_leg_with_wait_multiplier() {
        let p = ScoringParams::defaults();
        let s = score_leg(&leg(Mode::RoboTaxi, 20.0, 5.0, 7.0), &p, &TasteFactors::ONE).unwrap();
        assert!((s - (-11.0360)).abs() < 1e-9, "{s}");
    }

    #[test]
    fn pt_fare_enters_through_money_term() {
        let p = ScoringParams::defaults();
        let mut l = leg(Mode::Pt, 10.0, 0.0, 3.0);
        l.monetary_cost_eur = 1.43;
        l.parking = ParkingLevel::Low;
        let s = score_leg(&l, &p, &TasteFactors::ONE).unwrap();
        let expected = -3.9290 + -0.0327 * 10.0 - 1.43 + -0.7330;
        assert!((s - expected).abs() < 1e-12);
    }

    #[test]
    fn taste_factors_only_touch_robotaxi() {
        let p = ScoringParams::defaults();
        let f = TasteFactors {
            k_ut: 1.3,
            k_ivt: 0.7,
            k_wt: 1.4,
        };
        for mode in [Mode::Car, Mode::Pt, Mode::Walk] {
            let l = leg(mode, 12.0, 3.0, 4.0);
            assert_eq!(
                score_leg(&l, &p, &f).unwrap(),
                score_leg(&l, &p, &TasteFactors::ONE).unwrap()
            );
        }
        let rt = leg(Mode::RoboTaxi, 12.0, 3.0, 4.0);
        assert_ne!(
            score_leg(&rt, &p, &f).unwrap(),
            score_leg(&rt, &p, &TasteFactors::ONE).unwrap()
        );
    }

    fn executed_walk_plan(home_dur: f64) -> DailyPlan {
        let t0 = home_dur as u32;
        let mut plan = DailyPlan::new(
            vec![
                Activity::new(ActivityType::Home, FacilityId(0), Some(t0)),
                Activity::new(ActivityType::Home, FacilityId(1), None),
            ],
            vec![Leg::new(Mode::Walk)],
        )
        .unwrap();
        plan.activities[0].realized = Some(ActivityTiming {
            start_sec: 0,
            end_sec: t0,
        });
        plan.activities[1].realized = Some(ActivityTiming {
            start_sec: t0 + 900,
            end_sec: 2 * t0 + 900,
        });
        plan.legs[0].realized = Some(LegExecution {
            departure_sec: t0,
            arrival_sec: t0 + 900,
            wait_sec: 0,
            distance_km: 1.25,
            cost_eur: 0.0,
            outcome: LegOutcome::Completed,
        });
        plan
    }

    #[test]
    fn plan_score_sums_components() {
        let params = ScoringParams::defaults();
        let mut act = ActivityScoringParams::default();
        // Make a home stay of exactly t_0 worth zero.
        let mut home = act.get(ActivityType::Home).clone();
        home.zero_utility_duration_sec = 4.0 * 3600.0;
        act.set(ActivityType::Home, home);
        let ctx = PlanScoringContext {
            spc: Spc::Employed,
            household_cars: 0,
            factors: TasteFactors::ONE,
            params: &params,
            activity_params: &act,
        };
        let mut plan = executed_walk_plan(4.0 * 3600.0);
        let s = score_plan(&mut plan, &ctx, |_| ParkingLevel::Low).unwrap();
        assert!((s - (-12.2055)).abs() < 1e-9, "{s}");
        assert_eq!(plan.score, Some(s));
    }

    #[test]
    fn unexecuted_plan_is_an_error() {
        let params = ScoringParams::defaults();
        let act = ActivityScoringParams::default();
        let ctx = PlanScoringContext {
            spc: Spc::Employed,
            household_cars: 0,
            factors: TasteFactors::ONE,
            params: &params,
            activity_params: &act,
        };
        let mut plan = executed_walk_plan(3600.0);
        plan.legs[0].realized = None;
        assert!(score_plan(&mut plan, &ctx, |_| ParkingLevel::Low).is_err());
    }

    #[test]
    fn rejected_request_scores_as_penalized_walk() {
        let params = ScoringParams::defaults();
        let act = ActivityScoringParams::default();
        let ctx = PlanScoringContext {
            spc: Spc::Employed,
            household_cars: 0,
            factors: TasteFactors::ONE,
            params: &params,
            activity_params: &act,
        };
        let mut walk = executed_walk_plan(3600.0);
        let base = score_plan(&mut walk, &ctx, |_| ParkingLevel::Low).unwrap();
        let mut rej = walk.clone();
        rej.legs[0].mode = Mode::RoboTaxi;
        rej.legs[0].realized.as_mut().unwrap().outcome = LegOutcome::Rejected;
        let s = score_plan(&mut rej, &ctx, |_| ParkingLevel::Low).unwrap();
        assert!((s - (base - 100.0)).abs() < 1e-9);
    }
}
