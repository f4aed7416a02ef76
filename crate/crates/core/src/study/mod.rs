//! Arterial catheter cohort study: staged cohort, treatment groups,
//! propensity model with genetic covariate selection, caliper matching and
//! outcome comparison.

mod cohort;
mod config;
mod covariates;
mod ga;
mod logistic;
mod matching;
mod outcomes;
pub mod stats;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use cohort::{assign_groups, build_cohort, ventilation_onset, Cohort, CohortFlowchart, Stage, StudyStay};
pub use config::{default_covariates, Covariate, CovariateSource, GaConfig, StudyConfig};
pub use covariates::{build_design, CovariateMatrix};
pub use ga::{ga_select_features, subset_fitness, GaResult, EMPTY_SUBSET_FITNESS};
pub use logistic::{
    auc, cross_validated_scores, fit_logistic, fit_propensity, fit_standardized, gradient, log_likelihood, logit, sigmoid, Design,
    LogisticFit, PropensityModel, COEFFICIENT_CAP, GRADIENT_TOLERANCE, MAX_ITERATIONS,
};
pub use matching::{match_cohorts, MatchResult, MatchedPair, Scored};
pub use outcomes::{compare_outcomes, stay_outcomes, ContinuousComparison, GroupRate, GroupSummary, RateComparison, StayOutcomes, StudyResult};

use crate::error::{Error, Result};
use crate::icd::IcdResources;
use crate::store::EhrStore;

pub(crate) fn csv_string<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io("<memory>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceRow {
    pub covariate: String,
    pub smd_pre: Option<f64>,
    pub smd_post: Option<f64>,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRun {
    pub seed: u64,
    pub flowchart: CohortFlowchart,
    pub treated: usize,
    pub control: usize,
    pub imputed: std::collections::BTreeMap<String, usize>,
    pub feature_selection: GaResult,
    pub model: PropensityModel,
    pub matching: MatchResult,
    pub balance: Vec<BalanceRow>,
    pub outcomes: StudyResult,
    pub warnings: Vec<String>,
}

pub const FLOWCHART_FILE: &str = "flowchart.csv";
pub const MODEL_FILE: &str = "model.json";
pub const MATCHES_FILE: &str = "matches.csv";
pub const BALANCE_FILE: &str = "balance.csv";
pub const OUTCOMES_FILE: &str = "outcomes.json";

/// An output file of a study run.
#[derive(Debug, Clone, PartialEq)]
pub enum Artifact {
    Csv { name: &'static str, body: String },
    Json { name: &'static str, body: serde_json::Value },
}

impl Artifact {
    pub fn name(&self) -> &'static str {
        match self {
            Artifact::Csv { name, .. } | Artifact::Json { name, .. } => name,
        }
    }
}

fn smd_columns(design: &Design, labels: &[bool], rows: Option<&[usize]>, col: usize) -> Option<f64> {
    let (mut t, mut c) = (Vec::new(), Vec::new());
    let all: Vec<usize> = (0..design.rows).collect();
    for &r in rows.unwrap_or(&all) {
        let v = design.columns[col][r];
        if labels[r] {
            t.push(v);
        } else {
            c.push(v);
        }
    }
    stats::standardized_mean_difference(&t, &c)
}

/// Full study pipeline on a store.
pub fn run_study(store: &EhrStore, config: &StudyConfig, resources: &IcdResources) -> Result<StudyRun> {
    config.validate()?;
    let cohort = build_cohort(store, config)?;
    let mut warnings = cohort.warnings.clone();
    let labels = assign_groups(store, &cohort.stays, config);
    let treated = labels.iter().filter(|&&l| l).count();
    let control = labels.len() - treated;
    if treated == 0 || control == 0 {
        return Err(Error::Degenerate(format!(
            "study cohort has {treated} treated and {control} control stays; both groups are required"
        )));
    }
    let matrix = build_design(store, &cohort.stays, config, resources)?;
    let design = &matrix.design;
    let selection = ga_select_features(design, &labels, &config.ga, config.seed)?;
    warnings.extend(selection.warnings.iter().cloned());
    let chosen: Vec<usize> = (0..design.columns.len()).filter(|&i| selection.genes[i]).collect();
    let model = fit_propensity(&design.select(&chosen), &labels, config.ga.cv_folds)?;
    for name in &model.dropped {
        warnings.push(format!("covariate {name} has zero variance and was dropped"));
    }
    if model.separated {
        warnings.push("propensity model shows separation; coefficients are capped".into());
    }
    let scores = model.scores(design)?;
    let clamp = |p: f64| p.clamp(1e-12, 1.0 - 1e-12);
    let split = |want: bool| -> Vec<Scored> {
        cohort
            .stays
            .iter()
            .zip(&labels)
            .zip(&scores)
            .filter(|((_, &l), _)| l == want)
            .map(|((s, _), &p)| Scored {
                icustay_id: s.icustay_id,
                score: clamp(p),
            })
            .collect()
    };
    let matching = match_cohorts(&split(true), &split(false), config.caliper_multiplier)?;
    if matching.unmatched_treated > 0 {
        warnings.push(format!("{} treated stays had no control within the caliper", matching.unmatched_treated));
    }

    let row_of: std::collections::BTreeMap<_, _> = cohort.stays.iter().enumerate().map(|(i, s)| (s.icustay_id, i)).collect();
    let matched_rows: Vec<usize> = matching.pairs.iter().flat_map(|p| [row_of[&p.treated], row_of[&p.control]]).collect();
    let balance = design
        .names
        .iter()
        .enumerate()
        .map(|(i, name)| BalanceRow {
            covariate: name.clone(),
            smd_pre: smd_columns(design, &labels, None, i),
            smd_post: smd_columns(design, &labels, Some(&matched_rows), i),
            selected: selection.genes[i],
        })
        .collect();
    let outcomes = compare_outcomes(store, &matching, &cohort.stays, config)?;
    Ok(StudyRun {
        seed: config.seed,
        flowchart: cohort.flowchart,
        treated,
        control,
        imputed: matrix.imputed,
        feature_selection: selection,
        model,
        matching,
        balance,
        outcomes,
        warnings,
    })
}

impl StudyRun {
    pub fn artifacts(&self) -> Result<Vec<Artifact>> {
        Ok(vec![
            Artifact::Csv {
                name: FLOWCHART_FILE,
                body: self.flowchart.to_csv()?,
            },
            Artifact::Json {
                name: MODEL_FILE,
                body: serde_json::json!({
                    "model": self.model,
                    "feature_selection": self.feature_selection,
                    "treated": self.treated,
                    "control": self.control,
                    "imputed": self.imputed,
                }),
            },
            Artifact::Csv {
                name: MATCHES_FILE,
                body: csv_string(&self.matching.pairs)?,
            },
            Artifact::Csv {
                name: BALANCE_FILE,
                body: csv_string(&self.balance)?,
            },
            Artifact::Json {
                name: OUTCOMES_FILE,
                body: serde_json::json!({
                    "outcomes": self.outcomes,
                    "matching": {
                        "pairs": self.matching.pairs.len(),
                        "caliper": self.matching.caliper,
                        "unmatched_treated": self.matching.unmatched_treated,
                    },
                    "warnings": self.warnings,
                }),
            },
        ])
    }

    /// Write every artifact into `dir`, returning the written paths.
    pub fn write_outputs(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        for a in self.artifacts()? {
            let path = dir.join(a.name());
            let body = match a {
                Artifact::Csv { body, .. } => body,
                Artifact::Json { body, .. } => serde_json::to_string_pretty(&body)? + "\n",
            };
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}
