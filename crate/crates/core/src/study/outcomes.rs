use std::collections::BTreeMap;

use chrono::Duration;
use serde::{Deserialize, Serialize};

use super::cohort::StudyStay;
use super::config::StudyConfig;
use super::matching::MatchResult;
use super::stats::{chi_square_2x2, mean, median, rank_sum, variance, TestResult};
use crate::error::{Error, Result};
use crate::store::{EhrStore, IcuStayId};
use crate::time::days_between;

/// Smallest ICU stay used as a denominator for per-day rates, one hour.
const MIN_RATE_DAYS: f64 = 1.0 / 24.0;

/// Outcomes of one ICU stay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StayOutcomes {
    pub icustay_id: IcuStayId,
    pub died_within_horizon: bool,
    pub icu_discharge_alive_within_horizon: bool,
    pub icu_los_days: f64,
    pub hospital_los_days: f64,
    pub ventilation_days: f64,
    pub arterial_gases_per_day: f64,
    pub venous_gases_per_day: f64,
}

/// Outcomes of a study stay. Mortality counts a death up to the horizon
/// after ICU admission. ICU discharge alive requires leaving the ICU within
/// the horizon without a death inside the ICU margin of the stay.
pub fn stay_outcomes(store: &EhrStore, stay: &StudyStay, config: &StudyConfig) -> Result<StayOutcomes> {
    let adm = store
        .admission(stay.hadm_id)
        .ok_or_else(|| Error::NotFound(format!("admission {}", stay.hadm_id)))?;
    let horizon = stay.intime + Duration::days(config.horizon_days);
    let margin = Duration::hours(config.icu_death_margin_hours);
    let death = store.death_time(stay.subject_id, Some(adm));
    let icu_death = death.is_some_and(|t| stay.intime - margin <= t && t <= stay.outtime + margin);
    let vent: Vec<_> = store
        .chart_events_of_stay(stay.icustay_id)
        .filter(|e| config.ventilation_items.contains(&e.itemid))
        .map(|e| e.charttime)
        .collect();
    let ventilation_days = match (vent.iter().min(), vent.iter().max()) {
        (Some(a), Some(b)) => days_between(a, b),
        _ => 0.0,
    };
    let icu_days = days_between(&stay.intime, &stay.outtime);
    let gases = |specimen: &str| {
        store
            .lab_events_of_admission(stay.hadm_id)
            .filter(|e| {
                e.itemid == config.specimen_item
                    && e.value == specimen
                    && stay.intime <= e.charttime
                    && e.charttime <= stay.outtime
            })
            .count() as f64
            / icu_days.max(MIN_RATE_DAYS)
    };
    Ok(StayOutcomes {
        icustay_id: stay.icustay_id,
        died_within_horizon: death.is_some_and(|t| t <= horizon),
        icu_discharge_alive_within_horizon: !icu_death && stay.outtime <= horizon,
        icu_los_days: icu_days,
        hospital_los_days: days_between(&adm.admittime, &adm.dischtime),
        ventilation_days,
        arterial_gases_per_day: gases(&config.arterial_specimen),
        venous_gases_per_day: gases(&config.venous_specimen),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRate {
    pub n: usize,
    pub events: usize,
    pub rate: f64,
}

impl GroupRate {
    fn of(flags: &[bool]) -> GroupRate {
        let events = flags.iter().filter(|&&f| f).count();
        GroupRate {
            n: flags.len(),
            events,
            rate: if flags.is_empty() { 0.0 } else { events as f64 / flags.len() as f64 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateComparison {
    pub treated: GroupRate,
    pub control: GroupRate,
    /// Treated rate minus control rate.
    pub difference: f64,
    pub test: TestResult,
}

fn compare_rates(treated: &[bool], control: &[bool]) -> RateComparison {
    let (t, c) = (GroupRate::of(treated), GroupRate::of(control));
    let test = chi_square_2x2(
        t.events as u64,
        (t.n - t.events) as u64,
        c.events as u64,
        (c.n - c.events) as u64,
    );
    RateComparison {
        difference: t.rate - c.rate,
        treated: t,
        control: c,
        test,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
}

impl GroupSummary {
    fn of(v: &[f64]) -> GroupSummary {
        GroupSummary {
            n: v.len(),
            mean: mean(v),
            median: median(v),
            sd: variance(v).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousComparison {
    pub unit: String,
    pub treated: GroupSummary,
    pub control: GroupSummary,
    pub test: TestResult,
}

fn compare_values(unit: &str, treated: &[f64], control: &[f64]) -> ContinuousComparison {
    ContinuousComparison {
        unit: unit.into(),
        treated: GroupSummary::of(treated),
        control: GroupSummary::of(control),
        test: rank_sum(treated, control),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub pairs: usize,
    pub horizon_days: i64,
    /// Time origin of the mortality horizon.
    pub mortality_reference: String,
    pub mortality: RateComparison,
    pub icu_discharge_alive: RateComparison,
    pub icu_los: ContinuousComparison,
    pub hospital_los: ContinuousComparison,
    pub ventilation_duration: ContinuousComparison,
    pub arterial_gases_per_day: ContinuousComparison,
    pub venous_gases_per_day: ContinuousComparison,
}

/// Compare outcomes between the treated and control members of the matched
/// pairs.
pub fn compare_outcomes(store: &EhrStore, matches: &MatchResult, stays: &[StudyStay], config: &StudyConfig) -> Result<StudyResult> {
    if matches.pairs.is_empty() {
        return Err(Error::Degenerate("no matched pairs to compare".into()));
    }
    let by_id: BTreeMap<IcuStayId, &StudyStay> = stays.iter().map(|s| (s.icustay_id, s)).collect();
    let outcomes = |id: IcuStayId| -> Result<StayOutcomes> {
        let stay = by_id
            .get(&id)
            .ok_or_else(|| Error::NotFound(format!("matched ICU stay {id} is not in the cohort")))?;
        stay_outcomes(store, stay, config)
    };
    let treated: Vec<StayOutcomes> = matches.pairs.iter().map(|p| outcomes(p.treated)).collect::<Result<_>>()?;
    let control: Vec<StayOutcomes> = matches.pairs.iter().map(|p| outcomes(p.control)).collect::<Result<_>>()?;
    let flag = |v: &[StayOutcomes], f: fn(&StayOutcomes) -> bool| v.iter().map(f).collect::<Vec<_>>();
    let value = |v: &[StayOutcomes], f: fn(&StayOutcomes) -> f64| v.iter().map(f).collect::<Vec<_>>();
    let cmp = |unit: &str, f: fn(&StayOutcomes) -> f64| compare_values(unit, &value(&treated, f), &value(&control, f));
    Ok(StudyResult {
        pairs: matches.pairs.len(),
        horizon_days: config.horizon_days,
        mortality_reference: "ICU admission".into(),
        mortality: compare_rates(&flag(&treated, |o| o.died_within_horizon), &flag(&control, |o| o.died_within_horizon)),
        icu_discharge_alive: compare_rates(
            &flag(&treated, |o| o.icu_discharge_alive_within_horizon),
            &flag(&control, |o| o.icu_discharge_alive_within_horizon),
        ),
        icu_los: cmp("days", |o| o.icu_los_days),
        hospital_los: cmp("days", |o| o.hospital_los_days),
        ventilation_duration: cmp("days", |o| o.ventilation_days),
        arterial_gases_per_day: cmp("events per ICU day", |o| o.arterial_gases_per_day),
        venous_gases_per_day: cmp("events per ICU day", |o| o.venous_gases_per_day),
    })
}
