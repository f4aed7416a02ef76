use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{PointValue, TimelineSeries};
use crate::error::{Error, Result};

pub const LABEL_EQUIVALENCE_FILE: &str = "label_equivalence.csv";
const BUILTIN_EQUIVALENCE: &str = include_str!("../../data/label_equivalence.csv");

/// Chart labels and the lab label measuring the same quantity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelEquivalence {
    chart_to_lab: BTreeMap<String, String>,
}

#[derive(Deserialize)]
struct Row {
    chart_label: String,
    lab_label: String,
}

impl LabelEquivalence {
    pub fn new<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        LabelEquivalence {
            chart_to_lab: pairs.into_iter().map(|(c, l)| (c.to_string(), l.to_string())).collect(),
        }
    }

    pub fn from_csv_str(data: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(data.as_bytes());
        let mut map = BTreeMap::new();
        for row in rdr.deserialize::<Row>() {
            let row = row?;
            let (c, l) = (row.chart_label.trim(), row.lab_label.trim());
            if c.is_empty() || l.is_empty() {
                return Err(Error::Config("label equivalence rows need both labels".into()));
            }
            map.insert(c.to_string(), l.to_string());
        }
        Ok(LabelEquivalence { chart_to_lab: map })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let data = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&data)
    }

    pub fn builtin() -> &'static LabelEquivalence {
        static BUILTIN: OnceLock<LabelEquivalence> = OnceLock::new();
        BUILTIN.get_or_init(|| LabelEquivalence::from_csv_str(BUILTIN_EQUIVALENCE).expect("builtin label equivalence"))
    }

    pub fn lab_label(&self, chart_label: &str) -> Option<&str> {
        self.chart_to_lab.get(chart_label).map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconcileConfig {
    pub window_minutes: i64,
    /// Absolute difference at or below which values agree.
    pub tolerance: f64,
}

impl Default for ReconcileConfig {
    fn default() -> Self {
        ReconcileConfig {
            window_minutes: 60,
            tolerance: 1e-6,
        }
    }
}

/// One chart value replaced by a lab value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conflict {
    pub chart_label: String,
    pub lab_label: String,
    pub chart_hours: f64,
    pub lab_hours: f64,
    pub chart_value: f64,
    pub lab_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconciled {
    pub chart: Vec<TimelineSeries>,
    pub lab: Vec<TimelineSeries>,
    pub conflicts: Vec<Conflict>,
}

/// Replace chart values that disagree with a lab measurement of the same
/// quantity taken within the match window. Labs are authoritative and are
/// returned unchanged.
///
/// Each numeric chart point is compared with the closest numeric lab point
/// of the equivalent series (the earlier one on a tie).
pub fn reconcile(chart: &[TimelineSeries], lab: &[TimelineSeries], equivalence: &LabelEquivalence, config: &ReconcileConfig) -> Reconciled {
    let window = config.window_minutes * 60;
    let mut conflicts = Vec::new();
    let chart = chart
        .iter()
        .map(|series| {
            let mut series = series.clone();
            let Some(lab_label) = equivalence.lab_label(&series.label) else {
                return series;
            };
            let lab_points: Vec<(i64, f64)> = lab
                .iter()
                .filter(|l| l.label == lab_label)
                .flat_map(|l| &l.points)
                .filter_map(|p| p.value.as_f64().map(|v| (p.seconds, v)))
                .collect();
            for point in &mut series.points {
                let Some(cv) = point.value.as_f64() else { continue };
                let nearest = lab_points
                    .iter()
                    .filter(|(t, _)| (t - point.seconds).abs() <= window)
                    .min_by_key(|(t, _)| ((t - point.seconds).abs(), *t));
                if let Some(&(t, lv)) = nearest {
                    if (cv - lv).abs() > config.tolerance {
                        conflicts.push(Conflict {
                            chart_label: series.label.clone(),
                            lab_label: lab_label.to_string(),
                            chart_hours: point.hours,
                            lab_hours: t as f64 / 3600.0,
                            chart_value: cv,
                            lab_value: lv,
                        });
                        point.value = PointValue::Number(lv);
                    }
                }
            }
            series
        })
        .collect();
    Reconciled {
        chart,
        lab: lab.to_vec(),
        conflicts,
    }
}
