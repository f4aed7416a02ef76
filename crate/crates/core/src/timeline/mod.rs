//! Single-stay timelines: every event stream of one ICU stay on a common
//! time axis of hours since ICU admission.

mod reconcile;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use reconcile::{reconcile, Conflict, LabelEquivalence, ReconcileConfig, Reconciled, LABEL_EQUIVALENCE_FILE};

use crate::error::{Error, Result};
use crate::store::{AdmissionType, CareUnit, EhrStore, HadmId, IcuStayId, ItemId, MeasurementEvent, SubjectId};
use crate::time::{seconds_between, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Chart,
    Lab,
    Input,
    Output,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Chart => "chart",
            EventKind::Lab => "lab",
            EventKind::Input => "input",
            EventKind::Output => "output",
        })
    }
}

/// Which event streams to extract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventSelector {
    Chart,
    Lab,
    Input,
    Output,
    All,
}

impl EventSelector {
    pub fn includes(&self, kind: EventKind) -> bool {
        match self {
            EventSelector::All => true,
            EventSelector::Chart => kind == EventKind::Chart,
            EventSelector::Lab => kind == EventKind::Lab,
            EventSelector::Input => kind == EventKind::Input,
            EventSelector::Output => kind == EventKind::Output,
        }
    }
}

/// Time range searched for lab events, which link to the hospital admission
/// rather than the ICU stay.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabWindow {
    #[default]
    Admission,
    IcuStay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointValue {
    Number(f64),
    Text(String),
}

impl PointValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            PointValue::Number(v) => Some(*v),
            PointValue::Text(_) => None,
        }
    }
}

impl fmt::Display for PointValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointValue::Number(v) => write!(f, "{v}"),
            PointValue::Text(t) => f.write_str(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelinePoint {
    /// Seconds since ICU admission; negative for labs drawn before it.
    pub seconds: i64,
    pub hours: f64,
    pub value: PointValue,
    pub unit: String,
    /// Input events only: end of administration, in hours since ICU admission.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub end_hours: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_unit: Option<String>,
}

impl TimelinePoint {
    fn at(seconds: i64, value: PointValue, unit: &str) -> TimelinePoint {
        TimelinePoint {
            seconds,
            hours: seconds as f64 / 3600.0,
            value,
            unit: unit.to_string(),
            end_hours: None,
            rate: None,
            rate_unit: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineSeries {
    pub label: String,
    pub kind: EventKind,
    pub itemid: ItemId,
    pub points: Vec<TimelinePoint>,
    /// Input series only: administrations per day of ICU stay.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequency_per_day: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientContext {
    pub subject_id: SubjectId,
    pub hadm_id: HadmId,
    pub icustay_id: IcuStayId,
    pub admission_type: AdmissionType,
    pub diagnosis: String,
    pub first_careunit: CareUnit,
    pub last_careunit: CareUnit,
    pub intime: Timestamp,
    pub outtime: Timestamp,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub series: Vec<TimelineSeries>,
    /// Events whose item id has no dictionary entry.
    pub unknown_items: u64,
}

impl Extraction {
    pub fn of_kind(&self, kind: EventKind) -> impl Iterator<Item = &TimelineSeries> {
        self.series.iter().filter(move |s| s.kind == kind)
    }

    pub fn point_count(&self, kind: EventKind) -> usize {
        self.of_kind(kind).map(|s| s.points.len()).sum()
    }
}

/// Smallest stay length used for administration frequency, one hour.
const MIN_FREQUENCY_DAYS: f64 = 1.0 / 24.0;

struct Collector<'a> {
    store: &'a EhrStore,
    intime: Timestamp,
    series: BTreeMap<(EventKind, ItemId), Vec<TimelinePoint>>,
}

impl Collector<'_> {
    fn offset(&self, t: &Timestamp) -> i64 {
        seconds_between(&self.intime, t)
    }

    fn measurement(&mut self, kind: EventKind, e: &MeasurementEvent) {
        let value = match e.valuenum {
            Some(v) => PointValue::Number(v),
            None => PointValue::Text(e.value.to_string()),
        };
        let point = TimelinePoint::at(self.offset(&e.charttime), value, &e.valueuom);
        self.series.entry((kind, e.itemid)).or_default().push(point);
    }

    fn finish(self, stay_days: f64) -> Extraction {
        let mut unknown = 0;
        let mut series: Vec<TimelineSeries> = self
            .series
            .into_iter()
            .map(|((kind, itemid), mut points)| {
                points.sort_by_key(|p| p.seconds);
                let label = match self.store.item(itemid) {
                    Some(item) => item.label.clone(),
                    None => {
                        unknown += points.len() as u64;
                        format!("UNKNOWN({itemid})")
                    }
                };
                let frequency_per_day =
                    (kind == EventKind::Input).then(|| points.len() as f64 / stay_days.max(MIN_FREQUENCY_DAYS));
                TimelineSeries {
                    label,
                    kind,
                    itemid,
                    points,
                    frequency_per_day,
                }
            })
            .collect();
        sort_series(&mut series);
        Extraction {
            series,
            unknown_items: unknown,
        }
    }
}

/// Deterministic bundle order: kind, then label, then item id.
fn sort_series(series: &mut [TimelineSeries]) {
    series.sort_by(|a, b| (a.kind, &a.label, a.itemid).cmp(&(b.kind, &b.label, b.itemid)));
}

/// Events of one ICU stay grouped into one series per (kind, item).
///
/// Chart, input and output events are selected by ICU stay. Lab events are
/// selected by hospital admission over `[admittime, dischtime]`, or over the
/// ICU window with [`LabWindow::IcuStay`]. Input series report
/// administrations per day of ICU stay.
pub fn extract_events(store: &EhrStore, icustay_id: IcuStayId, selector: EventSelector, lab_window: LabWindow) -> Result<Extraction> {
    let stay = store
        .icustay(icustay_id)
        .ok_or_else(|| Error::NotFound(format!("ICU stay {icustay_id}")))?;
    let adm = store
        .admission(stay.hadm_id)
        .ok_or_else(|| Error::NotFound(format!("admission {} of ICU stay {icustay_id}", stay.hadm_id)))?;
    let mut c = Collector {
        store,
        intime: stay.intime,
        series: BTreeMap::new(),
    };
    if selector.includes(EventKind::Chart) {
        for e in store.chart_events_of_stay(icustay_id) {
            c.measurement(EventKind::Chart, e);
        }
    }
    if selector.includes(EventKind::Output) {
        for e in store.output_events_of_stay(icustay_id) {
            c.measurement(EventKind::Output, e);
        }
    }
    if selector.includes(EventKind::Lab) {
        let (lo, hi) = match lab_window {
            LabWindow::Admission => (adm.admittime, adm.dischtime),
            LabWindow::IcuStay => (stay.intime, stay.outtime),
        };
        for e in store.lab_events_of_admission(adm.hadm_id) {
            if lo <= e.charttime && e.charttime <= hi {
                c.measurement(EventKind::Lab, e);
            }
        }
    }
    if selector.includes(EventKind::Input) {
        for e in store.input_events_of_stay(icustay_id) {
            let mut p = TimelinePoint::at(c.offset(&e.starttime), PointValue::Number(e.amount), &e.amountuom);
            p.end_hours = Some(c.offset(&e.endtime) as f64 / 3600.0);
            p.rate = e.rate;
            p.rate_unit = e.rate.map(|_| e.rateuom.to_string());
            c.series.entry((EventKind::Input, e.itemid)).or_default().push(p);
        }
    }
    Ok(c.finish(stay.los_days))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub context: PatientContext,
    pub series: Vec<TimelineSeries>,
    pub conflicts: Vec<Conflict>,
    pub unknown_items: u64,
}

impl Timeline {
    pub fn series(&self, kind: EventKind, label: &str) -> Option<&TimelineSeries> {
        self.series.iter().find(|s| s.kind == kind && s.label == label)
    }
}

/// Context and the full reconciled series bundle of one ICU stay.
pub fn assemble_timeline(
    store: &EhrStore,
    icustay_id: IcuStayId,
    lab_window: LabWindow,
    equivalence: &LabelEquivalence,
    config: &ReconcileConfig,
) -> Result<Timeline> {
    let extraction = extract_events(store, icustay_id, EventSelector::All, lab_window)?;
    let stay = store.icustay(icustay_id).expect("extract_events checked the stay");
    let adm = store.admission(stay.hadm_id).expect("extract_events checked the admission");
    let (chart, rest): (Vec<_>, Vec<_>) = extraction.series.into_iter().partition(|s| s.kind == EventKind::Chart);
    let labs: Vec<TimelineSeries> = rest.iter().filter(|s| s.kind == EventKind::Lab).cloned().collect();
    let reconciled = reconcile(&chart, &labs, equivalence, config);
    let mut series = reconciled.chart;
    series.extend(rest);
    sort_series(&mut series);
    Ok(Timeline {
        context: PatientContext {
            subject_id: stay.subject_id,
            hadm_id: stay.hadm_id,
            icustay_id,
            admission_type: adm.admission_type,
            diagnosis: adm.diagnosis.clone(),
            first_careunit: stay.first_careunit,
            last_careunit: stay.last_careunit,
            intime: stay.intime,
            outtime: stay.outtime,
        },
        series,
        conflicts: reconciled.conflicts,
        unknown_items: extraction.unknown_items,
    })
}

#[cfg(test)]
mod tests;
