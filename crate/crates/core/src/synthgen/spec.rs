use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::CareUnit;

/// Log-normal length of stay, parameterised by its median.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LosParams {
    pub median_days: f64,
    pub sigma: f64,
}

/// Hourly vital-sign generator: per-stay baselines drawn around `mean` with
/// `between_sd`, hourly readings around the baseline with `within_sd`,
/// clamped to `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VitalParams {
    pub mean: f64,
    pub between_sd: f64,
    pub within_sd: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VitalsSpec {
    pub heart_rate: VitalParams,
    pub spo2: VitalParams,
    pub resp_rate: VitalParams,
    /// GCS total is charted every `gcs_every_hours` as an integer in 3..=15.
    pub gcs: VitalParams,
    pub gcs_every_hours: u32,
    /// Hourly charting stops this many hours after ICU admission.
    pub max_hours: u32,
}

impl Default for VitalsSpec {
    fn default() -> Self {
        VitalsSpec {
            heart_rate: VitalParams { mean: 88.0, between_sd: 14.0, within_sd: 6.0, min: 30.0, max: 200.0 },
            spo2: VitalParams { mean: 96.0, between_sd: 2.0, within_sd: 1.2, min: 70.0, max: 100.0 },
            resp_rate: VitalParams { mean: 19.0, between_sd: 4.0, within_sd: 2.0, min: 6.0, max: 45.0 },
            gcs: VitalParams { mean: 13.0, between_sd: 2.5, within_sd: 1.0, min: 3.0, max: 15.0 },
            gcs_every_hours: 4,
            max_hours: 72,
        }
    }
}

/// Laboratory baselines (per stay) and draw-to-draw noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabsSpec {
    pub lactate: VitalParams,
    pub creatinine: VitalParams,
    pub wbc: VitalParams,
    pub hemoglobin: VitalParams,
    pub potassium: VitalParams,
    pub magnesium: VitalParams,
    /// Probability that a chart copy of a lab value disagrees with it.
    pub chart_copy_discrepancy: f64,
}

impl Default for LabsSpec {
    fn default() -> Self {
        LabsSpec {
            lactate: VitalParams { mean: 2.0, between_sd: 0.9, within_sd: 0.3, min: 0.3, max: 15.0 },
            creatinine: VitalParams { mean: 1.2, between_sd: 0.5, within_sd: 0.1, min: 0.2, max: 10.0 },
            wbc: VitalParams { mean: 10.0, between_sd: 3.5, within_sd: 1.0, min: 0.5, max: 60.0 },
            hemoglobin: VitalParams { mean: 11.0, between_sd: 1.8, within_sd: 0.4, min: 4.0, max: 19.0 },
            potassium: VitalParams { mean: 4.1, between_sd: 0.4, within_sd: 0.2, min: 2.0, max: 7.5 },
            magnesium: VitalParams { mean: 2.0, between_sd: 0.25, within_sd: 0.1, min: 0.8, max: 4.0 },
            chart_copy_discrepancy: 0.3,
        }
    }
}

/// Logistic model for indwelling arterial catheter placement after the start
/// of ventilation. Coefficients apply to covariates standardised by the
/// generator's population parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IacSpec {
    pub intercept: f64,
    pub lactate: f64,
    pub heart_rate: f64,
    pub spo2: f64,
    pub age: f64,
    pub chf: f64,
    /// Multiplier applied to the ICU length of stay of catheterised stays.
    pub los_multiplier: f64,
    /// Probability of a catheter charted before ICU admission.
    pub pre_icu_probability: f64,
    /// Probability of a catheter charted after ICU admission but before ventilation.
    pub before_vent_probability: f64,
}

impl Default for IacSpec {
    fn default() -> Self {
        IacSpec {
            intercept: -0.6,
            lactate: 1.0,
            heart_rate: 0.5,
            spo2: -0.4,
            age: 0.3,
            chf: 0.4,
            los_multiplier: 1.0,
            pre_icu_probability: 0.03,
            before_vent_probability: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PopulationSpec {
    pub n_patients: usize,
    pub seed: u64,
    pub careunit_mix: BTreeMap<CareUnit, f64>,
    /// Adds neonates as a separate NICU subpopulation.
    pub neonate_fraction: f64,
    pub age_mean: f64,
    pub age_sd: f64,
    pub age_min: f64,
    pub age_max: f64,
    pub female_fraction: f64,
    pub first_admission_years: (i32, i32),
    /// In-ICU mortality per first care unit for stays of patients older than
    /// `mortality_age_threshold`.
    pub icu_mortality: BTreeMap<CareUnit, f64>,
    /// In-ICU mortality for adult stays at or below the threshold.
    pub icu_mortality_younger: f64,
    pub mortality_age_threshold: f64,
    /// In-hospital mortality per first care unit of the admission, adults.
    pub hospital_mortality: BTreeMap<CareUnit, f64>,
    /// Fraction of planted ICU deaths placed after ICU discharge but within 6 hours.
    pub boundary_death_fraction: f64,
    pub post_discharge_30d: f64,
    pub post_discharge_1y: f64,
    pub readmission_probability: f64,
    pub max_admissions: u32,
    pub second_icu_episode_probability: f64,
    /// Probability that an ICU stay is split by a ward interval shorter than 24 hours.
    pub icu_bounce_probability: f64,
    pub unit_change_probability: f64,
    pub los: BTreeMap<CareUnit, LosParams>,
    pub hospital_pre_icu_hours: (f64, f64),
    pub hospital_post_icu_days: LosParams,
    pub ventilation_within_24h: f64,
    pub ventilation_late: f64,
    pub vasopressor_probability: f64,
    pub input_probability: f64,
    pub sepsis_prevalence: f64,
    pub iac: IacSpec,
    /// Weighted primary-diagnosis codes per care unit.
    pub diagnosis_profiles: BTreeMap<CareUnit, Vec<(String, f64)>>,
    /// Secondary codes with independent per-admission probabilities.
    pub secondary_codes: Vec<(String, f64)>,
    /// Probability of a hypertension code by 10-year age band starting at 0.
    pub hypertension_by_decade: Vec<f64>,
    pub arterial_gases_per_day: (f64, f64),
    pub venous_gases_per_day: f64,
    pub vitals: VitalsSpec,
    pub labs: LabsSpec,
}

fn units(pairs: &[(CareUnit, f64)]) -> BTreeMap<CareUnit, f64> {
    pairs.iter().copied().collect()
}

fn codes(pairs: &[(&str, f64)]) -> Vec<(String, f64)> {
    pairs.iter().map(|&(c, w)| (c.to_string(), w)).collect()
}

pub const DEFAULT_ICU_MORTALITY: f64 = 0.085;
pub const DEFAULT_MICU_DEATH_SHARE: f64 = 0.49;
pub const DEFAULT_MICU_PATIENT_SHARE: f64 = 0.39;
pub const DEFAULT_HOSPITAL_MORTALITY: f64 = 0.115;
pub const DEFAULT_MICU_HOSPITAL_DEATH_SHARE: f64 = 0.50;

impl Default for PopulationSpec {
    fn default() -> Self {
        use CareUnit::*;
        let micu = DEFAULT_MICU_PATIENT_SHARE;
        let rest = 1.0 - micu;
        let icu_micu = DEFAULT_MICU_DEATH_SHARE * DEFAULT_ICU_MORTALITY / micu;
        let icu_rest = (1.0 - DEFAULT_MICU_DEATH_SHARE) * DEFAULT_ICU_MORTALITY / rest;
        let hosp_micu = DEFAULT_MICU_HOSPITAL_DEATH_SHARE * DEFAULT_HOSPITAL_MORTALITY / micu;
        let hosp_rest = (1.0 - DEFAULT_MICU_HOSPITAL_DEATH_SHARE) * DEFAULT_HOSPITAL_MORTALITY / rest;
        let los = |median_days, sigma| LosParams { median_days, sigma };
        PopulationSpec {
            n_patients: 1000,
            seed: 0,
            careunit_mix: units(&[(MICU, micu), (SICU, 0.15), (CCU, 0.15), (CSRU, 0.18), (TSICU, 0.13)]),
            neonate_fraction: 0.0,
            age_mean: 64.0,
            age_sd: 17.0,
            age_min: 17.0,
            age_max: 96.0,
            female_fraction: 0.44,
            first_admission_years: (2001, 2011),
            icu_mortality: units(&[
                (MICU, icu_micu),
                (SICU, icu_rest),
                (CCU, icu_rest),
                (CSRU, icu_rest),
                (TSICU, icu_rest),
                (NICU, 0.0),
            ]),
            icu_mortality_younger: 0.04,
            mortality_age_threshold: 60.0,
            hospital_mortality: units(&[
                (MICU, hosp_micu),
                (SICU, hosp_rest),
                (CCU, hosp_rest),
                (CSRU, hosp_rest),
                (TSICU, hosp_rest),
                (NICU, 0.0),
            ]),
            boundary_death_fraction: 0.05,
            post_discharge_30d: 0.03,
            post_discharge_1y: 0.10,
            readmission_probability: 0.12,
            max_admissions: 5,
            second_icu_episode_probability: 0.04,
            icu_bounce_probability: 0.06,
            unit_change_probability: 0.05,
            los: [
                (MICU, los(2.6, 0.85)),
                (SICU, los(2.3, 0.85)),
                (CCU, los(2.0, 0.8)),
                (CSRU, los(1.8, 0.7)),
                (TSICU, los(2.4, 0.9)),
                (NICU, los(4.0, 1.0)),
            ]
            .into_iter()
            .collect(),
            hospital_pre_icu_hours: (0.0, 12.0),
            hospital_post_icu_days: los(3.0, 0.6),
            ventilation_within_24h: 0.45,
            ventilation_late: 0.05,
            vasopressor_probability: 0.2,
            input_probability: 0.93,
            sepsis_prevalence: 0.10,
            iac: IacSpec::default(),
            diagnosis_profiles: [
                (MICU, codes(&[("51881", 3.0), ("486", 3.0), ("5849", 2.0), ("5070", 1.5), ("49121", 1.0), ("5789", 1.0), ("5712", 0.5)])),
                (SICU, codes(&[("431", 2.0), ("43491", 2.0), ("5789", 1.5), ("5722", 1.0), ("5990", 1.0)])),
                (CCU, codes(&[("41071", 4.0), ("4280", 3.0), ("41401", 3.0), ("42731", 2.0), ("42789", 1.0)])),
                (CSRU, codes(&[("41401", 5.0), ("4241", 3.0), ("41071", 1.5), ("42731", 1.0)])),
                (TSICU, codes(&[("85220", 3.0), ("80501", 2.0), ("86121", 2.0)])),
                (NICU, codes(&[("V3000", 5.0), ("7742", 2.0), ("76519", 1.0)])),
            ]
            .into_iter()
            .collect(),
            secondary_codes: codes(&[
                ("4280", 0.12),
                ("42731", 0.15),
                ("5849", 0.10),
                ("25000", 0.14),
                ("2724", 0.18),
                ("496", 0.06),
                ("5990", 0.06),
                ("2762", 0.05),
                ("2859", 0.08),
                ("53081", 0.07),
                ("V4581", 0.05),
                ("V5861", 0.07),
                ("3051", 0.08),
                ("30500", 0.02),
            ]),
            hypertension_by_decade: vec![0.0, 0.0, 0.03, 0.08, 0.18, 0.30, 0.45, 0.52, 0.45, 0.35],
            arterial_gases_per_day: (1.0, 3.5),
            venous_gases_per_day: 0.6,
            vitals: VitalsSpec::default(),
            labs: LabsSpec::default(),
        }
    }
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} = {p} is not a probability")))
    }
}

impl PopulationSpec {
    pub fn with_patients(n_patients: usize, seed: u64) -> Self {
        PopulationSpec {
            n_patients,
            seed,
            ..PopulationSpec::default()
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let data = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: PopulationSpec = serde_json::from_str(&data)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Spec with every optional event and outcome probability set to zero.
    pub fn quiet(n_patients: usize, seed: u64) -> Self {
        let mut s = PopulationSpec::with_patients(n_patients, seed);
        for v in s.icu_mortality.values_mut().chain(s.hospital_mortality.values_mut()) {
            *v = 0.0;
        }
        s.icu_mortality_younger = 0.0;
        s.boundary_death_fraction = 0.0;
        s.post_discharge_30d = 0.0;
        s.post_discharge_1y = 0.0;
        s.readmission_probability = 0.0;
        s.second_icu_episode_probability = 0.0;
        s.icu_bounce_probability = 0.0;
        s.unit_change_probability = 0.0;
        s.ventilation_within_24h = 0.0;
        s.ventilation_late = 0.0;
        s.vasopressor_probability = 0.0;
        s.input_probability = 0.0;
        s.sepsis_prevalence = 0.0;
        s.iac.pre_icu_probability = 0.0;
        s.iac.before_vent_probability = 0.0;
        s.secondary_codes.iter_mut().for_each(|c| c.1 = 0.0);
        s.hypertension_by_decade.iter_mut().for_each(|p| *p = 0.0);
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_patients == 0 {
            return Err(Error::Config("n_patients must be at least 1".into()));
        }
        let adult_units: Vec<CareUnit> = self.careunit_mix.keys().copied().collect();
        if adult_units.is_empty() || self.careunit_mix.contains_key(&CareUnit::NICU) {
            return Err(Error::Config("careunit_mix must list adult units only; use neonate_fraction for NICU".into()));
        }
        let total: f64 = self.careunit_mix.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("careunit_mix sums to {total}, expected 1")));
        }
        for (u, p) in &self.careunit_mix {
            check_prob(&format!("careunit_mix.{u}"), *p)?;
        }
        for (name, p) in [
            ("neonate_fraction", self.neonate_fraction),
            ("female_fraction", self.female_fraction),
            ("icu_mortality_younger", self.icu_mortality_younger),
            ("boundary_death_fraction", self.boundary_death_fraction),
            ("post_discharge_30d", self.post_discharge_30d),
            ("post_discharge_1y", self.post_discharge_1y),
            ("readmission_probability", self.readmission_probability),
            ("second_icu_episode_probability", self.second_icu_episode_probability),
            ("icu_bounce_probability", self.icu_bounce_probability),
            ("unit_change_probability", self.unit_change_probability),
            ("ventilation_within_24h", self.ventilation_within_24h),
            ("ventilation_late", self.ventilation_late),
            ("vasopressor_probability", self.vasopressor_probability),
            ("input_probability", self.input_probability),
            ("sepsis_prevalence", self.sepsis_prevalence),
            ("iac.pre_icu_probability", self.iac.pre_icu_probability),
            ("iac.before_vent_probability", self.iac.before_vent_probability),
            ("labs.chart_copy_discrepancy", self.labs.chart_copy_discrepancy),
        ] {
            check_prob(name, p)?;
        }
        if self.ventilation_within_24h + self.ventilation_late > 1.0 {
            return Err(Error::Config("ventilation probabilities sum above 1".into()));
        }
        let mut all_units = adult_units.clone();
        if self.neonate_fraction > 0.0 {
            all_units.push(CareUnit::NICU);
        }
        for u in &all_units {
            let icu = *self.icu_mortality.get(u).ok_or_else(|| Error::Config(format!("icu_mortality missing {u}")))?;
            let hosp = *self
                .hospital_mortality
                .get(u)
                .ok_or_else(|| Error::Config(format!("hospital_mortality missing {u}")))?;
            check_prob(&format!("icu_mortality.{u}"), icu)?;
            check_prob(&format!("hospital_mortality.{u}"), hosp)?;
            let in_icu = icu.max(self.icu_mortality_younger);
            if *u != CareUnit::NICU && hosp < in_icu {
                return Err(Error::Config(format!(
                    "hospital_mortality for {u} ({hosp}) is below its in-ICU mortality ({in_icu})"
                )));
            }
            if hosp + self.post_discharge_30d + self.post_discharge_1y > 1.0 {
                return Err(Error::Config(format!(
                    "mortality for {u} sums above 1 ({hosp} in hospital, {} and {} after discharge)",
                    self.post_discharge_30d, self.post_discharge_1y
                )));
            }
            let los = self.los.get(u).ok_or_else(|| Error::Config(format!("los missing {u}")))?;
            if !(los.median_days > 0.0 && los.sigma >= 0.0) {
                return Err(Error::Config(format!("los parameters for {u} invalid")));
            }
            let profile = self
                .diagnosis_profiles
                .get(u)
                .ok_or_else(|| Error::Config(format!("diagnosis_profiles missing {u}")))?;
            if profile.iter().all(|(_, w)| *w <= 0.0) || profile.iter().any(|(_, w)| *w < 0.0) {
                return Err(Error::Config(format!("diagnosis profile for {u} has no positive weight")));
            }
        }
        for (code, p) in &self.secondary_codes {
            crate::icd::parse_icd9(code)?;
            check_prob(&format!("secondary_codes.{code}"), *p)?;
        }
        for p in &self.hypertension_by_decade {
            check_prob("hypertension_by_decade", *p)?;
        }
        for (code, _) in self.diagnosis_profiles.values().flatten() {
            crate::icd::parse_icd9(code)?;
        }
        if !(self.age_min <= self.age_mean && self.age_mean <= self.age_max && self.age_sd > 0.0 && self.age_min > 16.0) {
            return Err(Error::Config("age distribution must be adult with age_min ≤ age_mean ≤ age_max".into()));
        }
        if self.first_admission_years.0 > self.first_admission_years.1 {
            return Err(Error::Config("first_admission_years is empty".into()));
        }
        if self.max_admissions == 0 {
            return Err(Error::Config("max_admissions must be at least 1".into()));
        }
        if !(self.iac.los_multiplier > 0.0) {
            return Err(Error::Config("iac.los_multiplier must be positive".into()));
        }
        if self.hospital_pre_icu_hours.0 < 0.0 || self.hospital_pre_icu_hours.0 > self.hospital_pre_icu_hours.1 {
            return Err(Error::Config("hospital_pre_icu_hours is not a valid range".into()));
        }
        if self.vitals.gcs_every_hours == 0 {
            return Err(Error::Config("vitals.gcs_every_hours must be positive".into()));
        }
        Ok(())
    }
}
