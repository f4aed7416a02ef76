use std::collections::BTreeMap;

use chrono::Duration;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::plan::{hours, DeathKind, PatientPlan, PlannedDeath};
use super::spec::PopulationSpec;
use crate::error::{Error, Result};
use crate::store::CareUnit;
use crate::time::{age_at, Timestamp, DEFAULT_ELDERLY_SENTINEL};

pub const ADULT_AGE_YEARS: f64 = 16.0;
pub const ICU_DEATH_BOUNDARY_HOURS: i64 = 6;

/// Stay-level age used by ICU queries: age at ICU admission.
pub(crate) fn stay_age(p: &PatientPlan, intime: &Timestamp) -> f64 {
    age_at(&p.dob, intime, DEFAULT_ELDERLY_SENTINEL).years
}

/// Admission-level age used by hospital queries: age at hospital admission.
pub(crate) fn admission_age(p: &PatientPlan, admittime: &Timestamp) -> f64 {
    age_at(&p.dob, admittime, DEFAULT_ELDERLY_SENTINEL).years
}

/// Counts of deaths placed by [`plant_outcomes`], by stratum.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlantedDeaths {
    /// ICU deaths among stays above the age threshold, per first care unit.
    pub icu_older: BTreeMap<CareUnit, u64>,
    /// Stays above the age threshold, per first care unit.
    pub stays_older: BTreeMap<CareUnit, u64>,
    pub icu_younger: u64,
    /// In-hospital deaths among adult admissions, per first ICU unit.
    pub hospital: BTreeMap<CareUnit, u64>,
    pub admissions_adult: BTreeMap<CareUnit, u64>,
    pub boundary: u64,
    pub ward: u64,
    pub post_30d: u64,
    pub post_1y: u64,
}

fn quota(rate: f64, n: u64) -> u64 {
    (rate * n as f64).round() as u64
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, pool: &mut Vec<T>, n: u64, what: &str) -> Result<Vec<T>> {
    if n as usize > pool.len() {
        return Err(Error::Config(format!(
            "{what}: {n} deaths requested but only {} candidates are eligible",
            pool.len()
        )));
    }
    let (chosen, _) = pool.partial_shuffle(rng, n as usize);
    Ok(chosen.to_vec())
}

fn icu_death(p: &mut PatientPlan, rng: &mut ChaCha8Rng, boundary: bool) {
    let adm = p.admissions.last_mut().expect("patient has admissions");
    let stay = adm.stays.last_mut().expect("admission has stays");
    let last = adm.intervals.len() - 1;
    let time = if boundary {
        // Strictly inside the six-hour margin after ICU discharge.
        stay.group.outtime + Duration::seconds(rng.gen_range(60..ICU_DEATH_BOUNDARY_HOURS * 3600 - 60))
    } else {
        let iv = &mut adm.intervals[last];
        let span = (iv.end - iv.start).num_seconds().max(1);
        // A death before a scripted catheter placement would erase the placement.
        let after_iac = stay
            .iac_time
            .filter(|t| *t >= iv.start)
            .map_or(0, |t| (t - iv.start).num_seconds() + 60);
        let lo = (span / 20).max(after_iac).min(span);
        let t = iv.start + Duration::seconds(rng.gen_range(lo..=span).max(1).min(span));
        iv.end = t;
        stay.group.outtime = t;
        t
    };
    stay.died_in_icu = true;
    adm.deathtime = Some(time);
    adm.dischtime = time;
    p.death = Some(PlannedDeath {
        time,
        kind: if boundary { DeathKind::IcuBoundary } else { DeathKind::Icu },
    });
}

fn ward_death(p: &mut PatientPlan, rng: &mut ChaCha8Rng) {
    let adm = p.admissions.last_mut().expect("patient has admissions");
    let earliest = adm.last_outtime() + hours(ICU_DEATH_BOUNDARY_HOURS as f64) + Duration::minutes(1);
    let room = (adm.dischtime - earliest).num_seconds();
    let time = if room > 0 {
        earliest + Duration::seconds(rng.gen_range(0..=room))
    } else {
        earliest + Duration::minutes(rng.gen_range(0..180))
    };
    adm.deathtime = Some(time);
    adm.dischtime = time;
    p.death = Some(PlannedDeath { time, kind: DeathKind::Ward });
}

fn post_discharge_death(p: &mut PatientPlan, rng: &mut ChaCha8Rng, spec: &PopulationSpec) -> Option<DeathKind> {
    let adm = p.admissions.last().expect("patient has admissions");
    let after = adm.dischtime + hours(ICU_DEATH_BOUNDARY_HOURS as f64) + Duration::minutes(1);
    let d30 = adm.admittime + Duration::days(30);
    let d365 = adm.admittime + Duration::days(365);
    let r: f64 = rng.gen();
    let within = |rng: &mut ChaCha8Rng, lo: Timestamp, hi: Timestamp| {
        lo + Duration::seconds(rng.gen_range(0..=(hi - lo).num_seconds()))
    };
    let (time, kind) = if r < spec.post_discharge_30d && after < d30 {
        (within(rng, after, d30), DeathKind::Within30Days)
    } else if r < spec.post_discharge_30d + spec.post_discharge_1y {
        let lo = after.max(d30 + Duration::seconds(1));
        if lo >= d365 {
            return None;
        }
        (within(rng, lo, d365), DeathKind::WithinYear)
    } else {
        return None;
    };
    p.death = Some(PlannedDeath { time, kind });
    Some(kind)
}

/// Place deaths across the population so realised rates match the population spec.
///
/// In-ICU deaths are allocated by quota per care unit among the final stays
/// of each stratum. In-hospital deaths are topped up with ward deaths so each
/// unit's adult admissions reach the configured hospital rate. Remaining
/// adults may die after discharge within 30 days or one year. Every patient
/// dies at most once and only during or after their last stay.
pub fn plant_outcomes(patients: &mut [PatientPlan], spec: &PopulationSpec, rng: &mut ChaCha8Rng) -> Result<PlantedDeaths> {
    let mut out = PlantedDeaths::default();
    let threshold = spec.mortality_age_threshold;

    // Denominators and eligible final stays.
    let mut older_pool: BTreeMap<CareUnit, Vec<usize>> = BTreeMap::new();
    let mut younger_pool = Vec::new();
    let mut n_younger = 0u64;
    for (pi, p) in patients.iter().enumerate() {
        if p.neonate {
            continue;
        }
        let n_adm = p.admissions.len();
        for (ai, adm) in p.admissions.iter().enumerate() {
            let n_stay = adm.stays.len();
            for (si, stay) in adm.stays.iter().enumerate() {
                let is_final = ai + 1 == n_adm && si + 1 == n_stay;
                let age = stay_age(p, &stay.group.intime);
                if age > threshold {
                    *out.stays_older.entry(stay.unit()).or_default() += 1;
                    if is_final {
                        older_pool.entry(stay.unit()).or_default().push(pi);
                    }
                } else if age > ADULT_AGE_YEARS {
                    n_younger += 1;
                    if is_final {
                        younger_pool.push(pi);
                    }
                }
            }
        }
    }

    let mut icu_dead = Vec::new();
    for (unit, n) in &out.stays_older {
        let rate = spec.icu_mortality.get(unit).copied().unwrap_or(0.0);
        let pool = older_pool.entry(*unit).or_default();
        let chosen = pick(rng, pool, quota(rate, *n), &format!("ICU mortality for {unit}"))?;
        out.icu_older.insert(*unit, chosen.len() as u64);
        icu_dead.extend(chosen);
    }
    let chosen = pick(rng, &mut younger_pool, quota(spec.icu_mortality_younger, n_younger), "ICU mortality, younger stratum")?;
    out.icu_younger = chosen.len() as u64;
    icu_dead.extend(chosen);
    icu_dead.sort_unstable();
    for pi in icu_dead {
        let boundary = rng.gen_bool(spec.boundary_death_fraction);
        icu_death(&mut patients[pi], rng, boundary);
        out.boundary += u64::from(boundary);
    }

    // Hospital deaths by the first ICU unit of each adult admission.
    let mut ward_pool: BTreeMap<CareUnit, Vec<usize>> = BTreeMap::new();
    for (pi, p) in patients.iter().enumerate() {
        if p.neonate {
            continue;
        }
        let n_adm = p.admissions.len();
        for (ai, adm) in p.admissions.iter().enumerate() {
            if admission_age(p, &adm.admittime) <= ADULT_AGE_YEARS {
                continue;
            }
            let unit = adm.first_unit();
            *out.admissions_adult.entry(unit).or_default() += 1;
            if adm.deathtime.is_some() {
                *out.hospital.entry(unit).or_default() += 1;
            } else if ai + 1 == n_adm && p.death.is_none() {
                ward_pool.entry(unit).or_default().push(pi);
            }
        }
    }
    let mut ward_dead = Vec::new();
    for (unit, n) in &out.admissions_adult {
        let target = quota(spec.hospital_mortality.get(unit).copied().unwrap_or(0.0), *n);
        let already = out.hospital.get(unit).copied().unwrap_or(0);
        let extra = target.saturating_sub(already);
        let pool = ward_pool.entry(*unit).or_default();
        ward_dead.extend(pick(rng, pool, extra, &format!("hospital mortality for {unit}"))?);
        out.hospital.insert(*unit, already + extra);
    }
    ward_dead.sort_unstable();
    out.ward = ward_dead.len() as u64;
    for pi in ward_dead {
        ward_death(&mut patients[pi], rng);
    }

    for p in patients.iter_mut() {
        if p.neonate || p.death.is_some() {
            continue;
        }
        match post_discharge_death(p, rng, spec) {
            Some(DeathKind::Within30Days) => out.post_30d += 1,
            Some(_) => out.post_1y += 1,
            None => {}
        }
    }
    Ok(out)
}
