use std::collections::BTreeMap;

use chrono::Duration;
use serde::{Deserialize, Serialize};

use super::filter::CohortFilter;
use super::report::{Binner, HistogramReport, OutcomeReport};
use crate::error::{Error, Result};
use crate::store::{AdmissionRecord, CareUnit, EhrStore};
use crate::time::{days_between, Timestamp};

pub const DEFAULT_BOUNDARY_HOURS: i64 = 6;
pub const ICU_MORTALITY_MIN_AGE: f64 = 60.0;
pub const NO_ICU: &str = "NO_ICU";
pub const LOS_BIN_DAYS: f64 = 1.0;

/// First care unit of the earliest ICU stay of an admission.
pub fn first_icu_unit(store: &EhrStore, hadm_id: i64) -> Option<CareUnit> {
    store.icustays_of_admission(hadm_id).next().map(|s| s.first_careunit)
}

fn stratum_key(unit: Option<CareUnit>) -> String {
    unit.map_or_else(|| NO_ICU.to_string(), |u| u.to_string())
}

/// Inclusive containment of `t` in `[lo, hi]`.
fn within(t: Timestamp, lo: Timestamp, hi: Timestamp) -> bool {
    lo <= t && t <= hi
}

/// Admissions passing the filter on age at hospital admission and the first
/// ICU unit of the admission.
pub fn qualifying_admissions<'a>(
    store: &'a EhrStore,
    filter: &'a CohortFilter,
) -> impl Iterator<Item = (&'a AdmissionRecord, Option<CareUnit>)> + 'a {
    store.admissions().iter().filter_map(move |a| {
        let p = store.patient(a.subject_id)?;
        let unit = first_icu_unit(store, a.hadm_id);
        filter
            .admits(filter.age(&p.dob, &a.admittime), unit, p.gender)
            .then_some((a, unit))
    })
}

fn tally(counts: &mut BTreeMap<String, (u64, u64)>, key: String, event: bool) {
    let c = counts.entry(key).or_default();
    c.0 += u64::from(event);
    c.1 += 1;
}

fn into_rows(counts: BTreeMap<String, (u64, u64)>) -> impl Iterator<Item = (String, u64, u64)> {
    counts.into_iter().map(|(k, (n, d))| (k, n, d))
}

/// ICU mortality per first care unit.
///
/// A stay counts as an ICU death when the patient's death time falls in
/// `[intime - boundary, outtime + boundary]`. The rule is applied as written,
/// so deaths shortly before ICU admission also count. Age is taken at ICU
/// admission. Use `CohortFilter::older_than(60.0)` for the usual stratum.
pub fn icu_mortality(store: &EhrStore, filter: &CohortFilter, boundary_hours: i64) -> Result<OutcomeReport> {
    filter.validate()?;
    if boundary_hours < 0 {
        return Err(Error::Usage(format!("boundary hours must be non-negative, got {boundary_hours}")));
    }
    let margin = Duration::hours(boundary_hours);
    let mut counts = BTreeMap::new();
    for s in super::descriptive::qualifying_stays(store, filter) {
        let adm = store.admission(s.hadm_id);
        let died = store
            .death_time(s.subject_id, adm)
            .is_some_and(|t| within(t, s.intime - margin, s.outtime + margin));
        tally(&mut counts, s.first_careunit.to_string(), died);
    }
    let definition = format!(
        "unit of analysis: ICU stay; death in [intime - {boundary_hours}h, outtime + {boundary_hours}h] \
         (deaths before ICU admission included as stated); death time = admission deathtime else dod; {}",
        filter.describe("ICU admission")
    );
    Ok(OutcomeReport::build("icu_mortality", definition, into_rows(counts)))
}

/// In-hospital mortality from `hospital_expire_flag`, per first ICU unit of
/// the admission. Admissions without an ICU stay form the `NO_ICU` stratum.
pub fn hospital_mortality(store: &EhrStore, filter: &CohortFilter) -> Result<OutcomeReport> {
    filter.validate()?;
    let mut counts = BTreeMap::new();
    for (a, unit) in qualifying_admissions(store, filter) {
        tally(&mut counts, stratum_key(unit), a.hospital_expire_flag);
    }
    let definition = format!(
        "unit of analysis: hospital admission; death iff hospital_expire_flag; stratified by first ICU unit; {}",
        filter.describe("hospital admission")
    );
    Ok(OutcomeReport::build("hospital_mortality", definition, into_rows(counts)))
}

/// Deaths within `horizon_days` of hospital admission, inclusive at both ends.
pub fn mortality_within(store: &EhrStore, horizon_days: i64, filter: &CohortFilter) -> Result<OutcomeReport> {
    filter.validate()?;
    if horizon_days <= 0 {
        return Err(Error::Usage(format!("horizon must be positive, got {horizon_days} days")));
    }
    let horizon = Duration::days(horizon_days);
    let mut counts = BTreeMap::new();
    for (a, unit) in qualifying_admissions(store, filter) {
        let died = store
            .death_time(a.subject_id, Some(a))
            .is_some_and(|t| within(t, a.admittime, a.admittime + horizon));
        tally(&mut counts, stratum_key(unit), died);
    }
    let definition = format!(
        "unit of analysis: hospital admission; death in [admittime, admittime + {horizon_days}d]; {}",
        filter.describe("hospital admission")
    );
    Ok(OutcomeReport::build(&format!("mortality_{horizon_days}d"), definition, into_rows(counts)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LosSummary {
    pub n: u64,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl LosSummary {
    pub fn of(values: &[f64]) -> LosSummary {
        if values.is_empty() {
            return LosSummary {
                n: 0,
                mean: 0.0,
                median: 0.0,
                min: 0.0,
                max: 0.0,
            };
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 };
        LosSummary {
            n: n as u64,
            mean: v.iter().sum::<f64>() / n as f64,
            median,
            min: v[0],
            max: v[n - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LosReport {
    pub histogram: HistogramReport,
    pub summary: LosSummary,
    /// Admissions dropped for having two or more ICU stays.
    pub excluded_multi_stay: u64,
    /// Admissions dropped because discharge precedes admission.
    pub excluded_negative: u64,
}

/// Hospital length of stay (`dischtime - admittime`, fractional days).
///
/// With `one_icustay_per_admission`, admissions linked to two or more ICU
/// stays are left out. Age is taken at hospital admission.
pub fn hospital_los(store: &EhrStore, filter: &CohortFilter, one_icustay_per_admission: bool) -> Result<LosReport> {
    filter.validate()?;
    let mut values = Vec::new();
    let (mut multi, mut negative) = (0, 0);
    for (a, _) in qualifying_admissions(store, filter) {
        if one_icustay_per_admission && store.icustays_of_admission(a.hadm_id).count() >= 2 {
            multi += 1;
            continue;
        }
        let los = days_between(&a.admittime, &a.dischtime);
        if los < 0.0 {
            negative += 1;
            continue;
        }
        values.push(los);
    }
    let mut binner = Binner::new(0.0, 1.0, LOS_BIN_DAYS, None);
    for &v in &values {
        binner.add(v);
    }
    let definition = format!(
        "unit of analysis: hospital admission; LOS = dischtime - admittime in days; {}{}",
        if one_icustay_per_admission { "admissions with one ICU stay at most; " } else { "" },
        filter.describe("hospital admission")
    );
    Ok(LosReport {
        histogram: binner.finish("los_days", None, definition),
        summary: LosSummary::of(&values),
        excluded_multi_stay: multi,
        excluded_negative: negative,
    })
}
