use std::collections::BTreeMap;

use chrono::Duration;

use super::cohort::StudyStay;
use super::config::{CovariateSource, StudyConfig};
use super::logistic::Design;
use crate::error::{Error, Result};
use crate::icd::{comorbidity_flags, IcdResources};
use crate::store::{EhrStore, Gender, ItemId, MeasurementEvent};
use crate::time::{age_years, Timestamp};

/// Last numeric value of `itemid` in `[from, to]`.
fn last_value<'a>(events: impl Iterator<Item = &'a MeasurementEvent>, itemid: ItemId, from: Timestamp, to: Timestamp) -> Option<f64> {
    events
        .filter(|e| e.itemid == itemid && from <= e.charttime && e.charttime <= to)
        .filter_map(|e| e.valuenum.map(|v| (e.charttime, v)))
        .max_by_key(|(t, _)| *t)
        .map(|(_, v)| v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovariateMatrix {
    pub design: Design,
    /// Values imputed with the cohort mean, per covariate.
    pub imputed: BTreeMap<String, usize>,
}

/// One row per stay with every configured covariate. Charted vitals and labs
/// take the last value in the lookback window ending at ventilation onset;
/// missing values are replaced by the mean of the observed ones.
pub fn build_design(store: &EhrStore, stays: &[StudyStay], config: &StudyConfig, resources: &IcdResources) -> Result<CovariateMatrix> {
    let table = &resources.comorbidities;
    let lookback = Duration::hours(config.lookback_hours);
    let mut columns = Vec::new();
    let mut imputed = BTreeMap::new();
    let flags: Vec<Vec<bool>> = stays
        .iter()
        .map(|s| comorbidity_flags(store.diagnoses_of_admission(s.hadm_id), table).flags)
        .collect();
    for cov in &config.covariates {
        let raw: Vec<Option<f64>> = match &cov.source {
            CovariateSource::Age => stays
                .iter()
                .map(|s| store.patient(s.subject_id).map(|p| age_years(&p.dob, &s.intime)))
                .collect(),
            CovariateSource::Female => stays
                .iter()
                .map(|s| store.patient(s.subject_id).map(|p| f64::from(u8::from(p.gender == Gender::F))))
                .collect(),
            CovariateSource::Comorbidity { category } => {
                let idx = table
                    .index_of(category)
                    .ok_or_else(|| Error::Config(format!("unknown comorbidity category {category}")))?;
                flags.iter().map(|f| Some(f64::from(u8::from(f[idx])))).collect()
            }
            CovariateSource::Chart { itemid } => stays
                .iter()
                .map(|s| last_value(store.chart_events_of_stay(s.icustay_id), *itemid, s.vent_onset - lookback, s.vent_onset))
                .collect(),
            CovariateSource::Lab { itemid } => stays
                .iter()
                .map(|s| last_value(store.lab_events_of_admission(s.hadm_id), *itemid, s.vent_onset - lookback, s.vent_onset))
                .collect(),
        };
        let observed: Vec<f64> = raw.iter().flatten().copied().collect();
        let fill = if observed.is_empty() {
            0.0
        } else {
            observed.iter().sum::<f64>() / observed.len() as f64
        };
        imputed.insert(cov.name.clone(), raw.len() - observed.len());
        columns.push(raw.into_iter().map(|v| v.unwrap_or(fill)).collect());
    }
    let names = config.covariates.iter().map(|c| c.name.clone()).collect();
    Ok(CovariateMatrix {
        design: Design::new(names, columns, stays.len())?,
        imputed,
    })
}
