//! Deterministic synthetic ICU populations with planted outcome rates.
//!
//! [`generate`] builds a population in three passes: per-patient structure
//! (admissions, ICU episodes, clinical scripts), population-wide death
//! planting by quota, and per-patient event emission. Each patient draws
//! from its own seeded substream.

mod events;
mod grouping;
mod outcomes;
mod plan;
mod spec;

use std::collections::BTreeMap;

use chrono::Duration;
use serde::{Deserialize, Serialize};

pub use grouping::{script_icu_grouping, IcuInterval, StayGroup, ICU_GROUPING_GAP_HOURS};
pub use outcomes::{plant_outcomes, PlantedDeaths, ADULT_AGE_YEARS, ICU_DEATH_BOUNDARY_HOURS};
pub use plan::{AdmissionPlan, Baseline, DeathKind, PatientPlan, PlannedDeath, StayScript, SEPSIS_CODES};
pub use spec::{
    IacSpec, LabsSpec, LosParams, PopulationSpec, VitalParams, VitalsSpec, DEFAULT_HOSPITAL_MORTALITY,
    DEFAULT_ICU_MORTALITY, DEFAULT_MICU_DEATH_SHARE, DEFAULT_MICU_HOSPITAL_DEATH_SHARE, DEFAULT_MICU_PATIENT_SHARE,
};

use crate::error::Result;
use crate::items::default_dictionary;
use crate::rng::{keyed_stream, substream};
use crate::store::{CareUnit, EhrStore, Tables};

/// One planted statistic and the subpopulation it is defined over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedStatistic {
    pub name: String,
    /// The analytics query that measures this statistic.
    pub query: String,
    pub subpopulation: String,
    /// Rate implied by the population spec, when the statistic is a rate.
    pub nominal: Option<f64>,
    pub numerator: u64,
    pub denominator: u64,
    pub realized: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub n_patients: usize,
    pub statistics: Vec<PlantedStatistic>,
}

impl GroundTruth {
    pub fn get(&self, name: &str) -> Option<&PlantedStatistic> {
        self.statistics.iter().find(|s| s.name == name)
    }
}

fn ratio(n: u64, d: u64) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

fn stat(name: &str, query: &str, subpopulation: &str, nominal: Option<f64>, numerator: u64, denominator: u64) -> PlantedStatistic {
    PlantedStatistic {
        name: name.into(),
        query: query.into(),
        subpopulation: subpopulation.into(),
        nominal,
        numerator,
        denominator,
        realized: ratio(numerator, denominator),
    }
}

fn ground_truth(spec: &PopulationSpec, patients: &[PatientPlan], planted: &PlantedDeaths) -> GroundTruth {
    let mix = |u: &CareUnit| spec.careunit_mix.get(u).copied().unwrap_or(0.0);
    let nominal_icu: f64 = spec.careunit_mix.keys().map(|u| mix(u) * spec.icu_mortality[u]).sum();
    let nominal_hosp: f64 = spec.careunit_mix.keys().map(|u| mix(u) * spec.hospital_mortality[u]).sum();
    let micu = CareUnit::MICU;
    let get = |m: &BTreeMap<CareUnit, u64>, u: &CareUnit| m.get(u).copied().unwrap_or(0);
    let icu_dead: u64 = planted.icu_older.values().sum();
    let older: u64 = planted.stays_older.values().sum();
    let hosp_dead: u64 = planted.hospital.values().sum();
    let adult_adm: u64 = planted.admissions_adult.values().sum();
    let older_label = format!("ICU stays, age at ICU admission > {}", spec.mortality_age_threshold);
    let adult_label = format!("hospital admissions, age at admission > {ADULT_AGE_YEARS}");

    let mut stats = vec![
        stat("icu_mortality", "icu_mortality", &older_label, Some(nominal_icu), icu_dead, older),
        stat(
            "icu_mortality_micu_death_share",
            "icu_mortality",
            &older_label,
            Some(mix(&micu) * spec.icu_mortality[&micu] / nominal_icu.max(f64::MIN_POSITIVE)),
            get(&planted.icu_older, &micu),
            icu_dead,
        ),
        stat("icu_micu_stay_share", "icu_mortality", &older_label, Some(mix(&micu)), get(&planted.stays_older, &micu), older),
        stat("hospital_mortality", "hospital_mortality", &adult_label, Some(nominal_hosp), hosp_dead, adult_adm),
        stat(
            "hospital_mortality_micu_death_share",
            "hospital_mortality",
            &adult_label,
            Some(mix(&micu) * spec.hospital_mortality[&micu] / nominal_hosp.max(f64::MIN_POSITIVE)),
            get(&planted.hospital, &micu),
            hosp_dead,
        ),
    ];
    for (unit, n) in &planted.stays_older {
        stats.push(stat(
            &format!("icu_mortality_{unit}"),
            "icu_mortality",
            &older_label,
            Some(spec.icu_mortality[unit]),
            get(&planted.icu_older, unit),
            *n,
        ));
    }
    for (unit, n) in &planted.admissions_adult {
        stats.push(stat(
            &format!("hospital_mortality_{unit}"),
            "hospital_mortality",
            &adult_label,
            Some(spec.hospital_mortality[unit]),
            get(&planted.hospital, unit),
            *n,
        ));
    }

    for (name, horizon) in [("mortality_30d", 30), ("mortality_1y", 365)] {
        let (mut num, mut den) = (0, 0);
        for p in patients {
            for adm in &p.admissions {
                if outcomes::admission_age(p, &adm.admittime) <= ADULT_AGE_YEARS {
                    continue;
                }
                den += 1;
                let end = adm.admittime + Duration::days(horizon);
                if p.death.is_some_and(|d| adm.admittime <= d.time && d.time <= end) {
                    num += 1;
                }
            }
        }
        stats.push(stat(name, &format!("mortality_within_{horizon}d"), &adult_label, None, num, den));
    }

    let n_adm: u64 = patients.iter().map(|p| p.admissions.len() as u64).sum();
    let n_stay: u64 = patients
        .iter()
        .flat_map(|p| &p.admissions)
        .map(|a| a.stays.len() as u64)
        .sum();
    let n_pat = patients.len() as u64;
    stats.push(stat("patients", "count_distinct", "all", None, n_pat, n_pat));
    stats.push(stat("hospital_admissions", "count_distinct", "all", None, n_adm, n_adm));
    stats.push(stat("icu_stays", "count_distinct", "all", None, n_stay, n_stay));
    stats.push(stat("icu_deaths_boundary", "icu_mortality", "planted deaths after ICU discharge within 6h", None, planted.boundary, icu_dead + planted.icu_younger));

    GroundTruth {
        seed: spec.seed,
        n_patients: spec.n_patients,
        statistics: stats,
    }
}

/// Plan the population and plant its deaths without emitting events.
pub fn plan_population(spec: &PopulationSpec) -> Result<(Vec<PatientPlan>, PlantedDeaths)> {
    spec.validate()?;
    let mut ids = plan::IdCounter::default();
    let mut patients = Vec::with_capacity(spec.n_patients);
    for i in 0..spec.n_patients {
        let mut rng = keyed_stream(spec.seed, i as u64, 0);
        patients.push(plan::plan_patient(i, spec, &mut ids, &mut rng)?);
    }
    let mut rng = substream(spec.seed, u64::MAX);
    let planted = plant_outcomes(&mut patients, spec, &mut rng)?;
    Ok((patients, planted))
}

/// Generate a frozen store and the statistics planted in it.
pub fn generate(spec: &PopulationSpec) -> Result<(EhrStore, GroundTruth)> {
    let (patients, planted) = plan_population(spec)?;
    let truth = ground_truth(spec, &patients, &planted);
    let mut tables = Tables {
        items: default_dictionary(),
        ..Tables::default()
    };
    for (i, p) in patients.iter().enumerate() {
        let mut rng = keyed_stream(spec.seed, i as u64, 1);
        events::emit_patient(p, spec, &mut tables, &mut rng);
    }
    Ok((tables.freeze(), truth))
}
