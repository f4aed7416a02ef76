use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::icd::CodeMatcher;
use crate::items;
use crate::store::{CareUnit, ItemId};

/// Where a candidate covariate is read from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum CovariateSource {
    /// Age in years at ICU admission.
    Age,
    /// 1 for female patients.
    Female,
    /// 1 when the admission's diagnoses set the named comorbidity category.
    Comorbidity { category: String },
    /// Last charted value of the item in the lookback window before
    /// ventilation onset.
    Chart { itemid: ItemId },
    /// Last lab value of the item in the lookback window before ventilation
    /// onset.
    Lab { itemid: ItemId },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covariate {
    pub name: String,
    #[serde(flatten)]
    pub source: CovariateSource,
}

impl Covariate {
    fn new(name: &str, source: CovariateSource) -> Self {
        Covariate {
            name: name.into(),
            source,
        }
    }
}

pub fn default_covariates() -> Vec<Covariate> {
    use CovariateSource::*;
    let comorbidity = |c: &str| Comorbidity { category: c.into() };
    vec![
        Covariate::new("age", Age),
        Covariate::new("female", Female),
        Covariate::new("chf", comorbidity("congestive_heart_failure")),
        Covariate::new("hypertension", comorbidity("hypertension")),
        Covariate::new("diabetes", comorbidity("diabetes_uncomplicated")),
        Covariate::new("renal_failure", comorbidity("renal_failure")),
        Covariate::new("chronic_pulmonary", comorbidity("chronic_pulmonary")),
        Covariate::new("heart_rate", Chart { itemid: items::HEART_RATE }),
        Covariate::new("spo2", Chart { itemid: items::SPO2 }),
        Covariate::new("resp_rate", Chart { itemid: items::RESP_RATE }),
        Covariate::new("gcs", Chart { itemid: items::GCS_TOTAL }),
        Covariate::new("lactate", Lab { itemid: items::LAB_LACTATE }),
        Covariate::new("creatinine", Lab { itemid: items::LAB_CREATININE }),
        Covariate::new("wbc", Lab { itemid: items::LAB_WBC }),
        Covariate::new("hemoglobin", Lab { itemid: items::LAB_HEMOGLOBIN }),
        Covariate::new("potassium", Lab { itemid: items::LAB_POTASSIUM }),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    /// Per-gene flip probability.
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub elitism: usize,
    pub cv_folds: usize,
    /// Fitness penalty per selected covariate.
    pub penalty: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 24,
            generations: 20,
            mutation_rate: 0.06,
            crossover_rate: 0.8,
            elitism: 2,
            cv_folds: 5,
            penalty: 0.002,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population == 0 || self.generations == 0 {
            return Err(Error::Config("GA population and generations must be positive".into()));
        }
        if self.elitism >= self.population {
            return Err(Error::Config("GA elitism must be smaller than the population".into()));
        }
        if !(self.mutation_rate > 0.0 && self.mutation_rate <= 1.0) || !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(Error::Config("GA mutation rate must be in (0, 1] and crossover rate in [0, 1]".into()));
        }
        if self.cv_folds < 2 {
            return Err(Error::Config("GA needs at least 2 cross-validation folds".into()));
        }
        if !(self.penalty >= 0.0 && self.penalty.is_finite()) {
            return Err(Error::Config("GA penalty must be finite and non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    /// ICD-9 prefixes or ranges, e.g. `038` or `995.91`.
    pub sepsis_codes: Vec<String>,
    pub vasopressor_items: Vec<ItemId>,
    pub ventilation_items: Vec<ItemId>,
    pub iac_items: Vec<ItemId>,
    pub excluded_units: Vec<CareUnit>,
    /// Adults are strictly older than this at ICU admission.
    pub adult_min_age: f64,
    pub vent_window_hours: i64,
    pub min_stay_hours: i64,
    pub lookback_hours: i64,
    pub horizon_days: i64,
    /// Margin around the ICU stay within which a death counts as an ICU death.
    pub icu_death_margin_hours: i64,
    pub specimen_item: ItemId,
    pub arterial_specimen: String,
    pub venous_specimen: String,
    pub covariates: Vec<Covariate>,
    pub ga: GaConfig,
    pub caliper_multiplier: f64,
    pub seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            sepsis_codes: ["038", "995.91", "995.92", "785.52"].map(String::from).to_vec(),
            vasopressor_items: items::VASOPRESSORS.to_vec(),
            ventilation_items: vec![items::VENT_MODE],
            iac_items: vec![items::ARTERIAL_LINE],
            excluded_units: vec![CareUnit::CSRU, CareUnit::CCU],
            adult_min_age: 16.0,
            vent_window_hours: 24,
            min_stay_hours: 24,
            lookback_hours: 24,
            horizon_days: 28,
            icu_death_margin_hours: 6,
            specimen_item: items::LAB_SPECIMEN_TYPE,
            arterial_specimen: items::ARTERIAL_SPECIMEN.into(),
            venous_specimen: items::VENOUS_SPECIMEN.into(),
            covariates: default_covariates(),
            ga: GaConfig::default(),
            caliper_multiplier: 0.2,
            seed: 42,
        }
    }
}

impl StudyConfig {
    pub fn from_json_str(data: &str) -> Result<Self> {
        let cfg: StudyConfig = serde_json::from_str(data)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let data = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&data)
    }

    pub fn sepsis_matchers(&self) -> Result<Vec<CodeMatcher>> {
        self.sepsis_codes.iter().map(|c| CodeMatcher::parse(c)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("sepsis_codes", self.sepsis_codes.is_empty()),
            ("vasopressor_items", self.vasopressor_items.is_empty()),
            ("ventilation_items", self.ventilation_items.is_empty()),
            ("iac_items", self.iac_items.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::Config(format!("{name} must not be empty")));
        }
        self.sepsis_matchers()?;
        if self.vent_window_hours <= 0 || self.min_stay_hours < 0 || self.lookback_hours <= 0 || self.horizon_days <= 0 {
            return Err(Error::Config("study windows must be positive".into()));
        }
        if !(self.caliper_multiplier > 0.0 && self.caliper_multiplier.is_finite()) {
            return Err(Error::Config("caliper multiplier must be positive".into()));
        }
        let mut names: Vec<&str> = self.covariates.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("covariate names must be unique".into()));
        }
        self.ga.validate()
    }
}
