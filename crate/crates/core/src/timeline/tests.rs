use proptest::prelude::*;

use super::*;
use crate::items::{CHART_MAGNESIUM, CODE_STATUS, HEART_RATE, LAB_MAGNESIUM, NACL};
use crate::store::{Gender, StoreBuilder};

fn base() -> StoreBuilder {
    StoreBuilder::new()
        .patient(1, Gender::F, "2080-01-01 00:00:00")
        .admission(10, 1, "2150-01-01 00:00:00", "2150-01-06 00:00:00")
        .icustay(100, 10, CareUnit::MICU, "2150-01-02 00:00:00", "2150-01-04 00:00:00")
}

#[test]
fn single_heart_rate_reading() {
    let s = base().chart(100, HEART_RATE, "2150-01-02 02:00:00", "88").build();
    let x = extract_events(&s, 100, EventSelector::All, LabWindow::Admission).unwrap();
    assert_eq!(x.series.len(), 1);
    let hr = &x.series[0];
    assert_eq!((hr.kind, hr.label.as_str()), (EventKind::Chart, "Heart Rate"));
    assert_eq!(hr.points[0].hours, 2.0);
    assert_eq!(hr.points[0].value, PointValue::Number(88.0));
    assert_eq!(x.of_kind(EventKind::Input).count(), 0);
}

#[test]
fn unknown_stay_is_not_found() {
    let s = base().build();
    assert!(matches!(
        extract_events(&s, 999, EventSelector::All, LabWindow::Admission),
        Err(Error::NotFound(_))
    ));
}

#[test]
fn unknown_item_is_labelled_and_counted() {
    let mut b = base().chart(100, HEART_RATE, "2150-01-02 02:00:00", "88");
    b.tables_mut().chartevents[0].itemid = 4242;
    let x = extract_events(&b.build(), 100, EventSelector::Chart, LabWindow::Admission).unwrap();
    assert_eq!(x.series[0].label, "UNKNOWN(4242)");
    assert_eq!(x.unknown_items, 1);
}

#[test]
fn labs_follow_admission_window() {
    let s = base()
        .lab(10, LAB_MAGNESIUM, "2150-01-01 12:00:00", "2.0")
        .lab(10, LAB_MAGNESIUM, "2150-01-03 12:00:00", "2.1")
        .build();
    let x = extract_events(&s, 100, EventSelector::Lab, LabWindow::Admission).unwrap();
    let hours: Vec<f64> = x.series[0].points.iter().map(|p| p.hours).collect();
    assert_eq!(hours, vec![-12.0, 36.0]);
    let x = extract_events(&s, 100, EventSelector::Lab, LabWindow::IcuStay).unwrap();
    assert_eq!(x.point_count(EventKind::Lab), 1);
}

#[test]
fn text_values_pass_through() {
    let s = base().chart(100, CODE_STATUS, "2150-01-02 00:00:00", "Full code").build();
    let x = extract_events(&s, 100, EventSelector::Chart, LabWindow::Admission).unwrap();
    assert_eq!(x.series[0].points[0].value, PointValue::Text("Full code".into()));
    assert_eq!(x.series[0].points[0].hours, 0.0);
}

#[test]
fn input_frequency_is_per_stay_day() {
    let s = base()
        .input(100, NACL, "2150-01-02 01:00:00", "2150-01-02 02:00:00", 250.0)
        .input(100, NACL, "2150-01-03 01:00:00", "2150-01-03 02:00:00", 250.0)
        .input(100, NACL, "2150-01-03 05:00:00", "2150-01-03 06:00:00", 250.0)
        .build();
    let x = extract_events(&s, 100, EventSelector::Input, LabWindow::Admission).unwrap();
    let nacl = &x.series[0];
    assert_eq!(nacl.frequency_per_day, Some(1.5));
    assert_eq!(nacl.points[0].end_hours, Some(2.0));
}

#[test]
fn lab_overrides_disagreeing_chart_value() {
    let s = base()
        .chart(100, CHART_MAGNESIUM, "2150-01-02 10:00:00", "1.8")
        .lab(10, LAB_MAGNESIUM, "2150-01-02 10:10:00", "2.1")
        .build();
    let t = assemble_timeline(&s, 100, LabWindow::Admission, LabelEquivalence::builtin(), &ReconcileConfig::default()).unwrap();
    assert_eq!(t.conflicts.len(), 1);
    let chart = t.series(EventKind::Chart, "Magnesium").unwrap();
    assert_eq!(chart.points[0].value, PointValue::Number(2.1));
    let lab = t.series(EventKind::Lab, "Magnesium").unwrap();
    assert_eq!(lab.points[0].value, PointValue::Number(2.1));
}

#[test]
fn agreement_and_distance_leave_chart_alone() {
    let s = base()
        .chart(100, CHART_MAGNESIUM, "2150-01-02 10:00:00", "2.1")
        .chart(100, CHART_MAGNESIUM, "2150-01-03 10:00:00", "1.5")
        .lab(10, LAB_MAGNESIUM, "2150-01-02 10:10:00", "2.1")
        .lab(10, LAB_MAGNESIUM, "2150-01-03 11:00:01", "2.2")
        .build();
    let t = assemble_timeline(&s, 100, LabWindow::Admission, LabelEquivalence::builtin(), &ReconcileConfig::default()).unwrap();
    assert!(t.conflicts.is_empty());
    let chart = t.series(EventKind::Chart, "Magnesium").unwrap();
    assert_eq!(chart.points[1].value, PointValue::Number(1.5));
}

#[test]
fn bundle_is_ordered_by_kind_then_label() {
    let s = base()
        .chart(100, HEART_RATE, "2150-01-02 02:00:00", "88")
        .chart(100, CODE_STATUS, "2150-01-02 00:00:00", "Full code")
        .lab(10, LAB_MAGNESIUM, "2150-01-02 10:10:00", "2.1")
        .input(100, NACL, "2150-01-02 01:00:00", "2150-01-02 02:00:00", 250.0)
        .build();
    let t = assemble_timeline(&s, 100, LabWindow::Admission, LabelEquivalence::builtin(), &ReconcileConfig::default()).unwrap();
    let order: Vec<(EventKind, &str)> = t.series.iter().map(|s| (s.kind, s.label.as_str())).collect();
    assert_eq!(
        order,
        vec![
            (EventKind::Chart, "Code Status"),
            (EventKind::Chart, "Heart Rate"),
            (EventKind::Lab, "Magnesium"),
            (EventKind::Input, "NaCl 0.9%"),
        ]
    );
    assert_eq!(t.context.icustay_id, 100);
    assert_eq!(t.context.hadm_id, 10);
}

fn series(kind: EventKind, points: &[(i64, f64)]) -> TimelineSeries {
    TimelineSeries {
        label: "Magnesium".into(),
        kind,
        itemid: 0,
        points: points
            .iter()
            .map(|&(s, v)| TimelinePoint::at(s, PointValue::Number(v), "mg/dL"))
            .collect(),
        frequency_per_day: None,
    }
}

proptest! {
    #[test]
    fn labs_are_never_overwritten(
        chart in prop::collection::vec((0i64..200_000, 0.5f64..4.0), 0..30),
        lab in prop::collection::vec((0i64..200_000, 0.5f64..4.0), 0..30),
    ) {
        let c = vec![series(EventKind::Chart, &chart)];
        let l = vec![series(EventKind::Lab, &lab)];
        let r = reconcile(&c, &l, LabelEquivalence::builtin(), &ReconcileConfig::default());
        prop_assert_eq!(&r.lab, &l);
        for (before, after) in c[0].points.iter().zip(&r.chart[0].points) {
            prop_assert_eq!(before.seconds, after.seconds);
            if before.value != after.value {
                let v = after.value.as_f64().unwrap();
                prop_assert!(lab.iter().any(|&(t, lv)| lv == v && (t - before.seconds).abs() <= 3600));
            }
        }
        prop_assert_eq!(
            r.conflicts.len(),
            c[0].points.iter().zip(&r.chart[0].points).filter(|(a, b)| a.value != b.value).count()
        );
    }
}
