use std::fs;
use std::path::Path;

use super::*;
use crate::time::parse_timestamp;

fn ts(s: &str) -> crate::time::Timestamp {
    parse_timestamp(s).unwrap()
}

fn write_headers_only(dir: &Path) {
    for t in TableName::ALL {
        if t == TableName::Callout {
            continue;
        }
        fs::write(dir.join(t.file_name()), format!("{}\n", t.columns().join(","))).unwrap();
    }
}

fn minimal_tables() -> Tables {
    Tables {
        patients: vec![PatientRecord {
            subject_id: 1,
            gender: Gender::F,
            dob: ts("2080-01-01 00:00:00"),
            dod: None,
            dod_hosp: None,
            expire_flag: false,
        }],
        admissions: vec![AdmissionRecord {
            hadm_id: 10,
            subject_id: 1,
            admittime: ts("2140-03-01 08:00:00"),
            dischtime: ts("2140-03-06 08:00:00"),
            deathtime: None,
            admission_type: AdmissionType::Emergency,
            diagnosis: "PNEUMONIA".into(),
            hospital_expire_flag: false,
        }],
        icustays: vec![IcuStayRecord {
            icustay_id: 100,
            hadm_id: 10,
            subject_id: 1,
            first_careunit: CareUnit::MICU,
            last_careunit: CareUnit::MICU,
            intime: ts("2140-03-01 10:00:00"),
            outtime: ts("2140-03-03 10:00:00"),
            los_days: 2.0,
        }],
        items: vec![DictionaryItem {
            itemid: 220045,
            label: "Heart Rate".into(),
            category: "Routine Vital Signs".into(),
            unitname: "bpm".into(),
        }],
        chartevents: vec![MeasurementEvent {
            subject_id: 1,
            hadm_id: 10,
            icustay_id: Some(100),
            itemid: 220045,
            charttime: ts("2140-03-01 12:00:00"),
            value: "88".into(),
            valuenum: Some(88.0),
            valueuom: "bpm".into(),
        }],
        diagnoses: vec![
            CodedRecord {
                subject_id: 1,
                hadm_id: 10,
                seq_num: 1,
                icd9_code: "486".into(),
            },
            CodedRecord {
                subject_id: 1,
                hadm_id: 10,
                seq_num: 2,
                icd9_code: "4019".into(),
            },
        ],
        ..Tables::default()
    }
}

#[test]
fn empty_headered_csvs_ingest_to_empty_store() {
    let dir = tempfile::tempdir().unwrap();
    write_headers_only(dir.path());
    let (store, report) = ingest_csv(dir.path(), Strictness::Strict).unwrap();
    assert!(store.patients().is_empty());
    assert!(validate_store(&store).is_clean());
    assert_eq!(report.total_dropped(), 0);
}

#[test]
fn minimal_fixture_round_trips_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let store = minimal_tables().freeze();
    write_csv(&store, dir.path()).unwrap();
    let (back, _) = ingest_csv(dir.path(), Strictness::Strict).unwrap();
    assert_eq!(
        (back.patients().len(), back.admissions().len(), back.icustays().len()),
        (1, 1, 1)
    );
    assert_eq!(back.tables(), store.tables());
}

#[test]
fn missing_table_is_named() {
    let dir = tempfile::tempdir().unwrap();
    write_headers_only(dir.path());
    fs::remove_file(dir.path().join("ADMISSIONS.csv")).unwrap();
    let err = ingest_csv(dir.path(), Strictness::Lenient).unwrap_err();
    assert!(err.to_string().contains("ADMISSIONS"), "{err}");
}

#[test]
fn malformed_timestamp_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    write_headers_only(dir.path());
    fs::write(
        dir.path().join("PATIENTS.csv"),
        "SUBJECT_ID,GENDER,DOB,DOD,DOD_HOSP,EXPIRE_FLAG\n1,M,2100-01-01 00:00:00,,,0\n2,F,2100/01/01,,,0\n",
    )
    .unwrap();
    match ingest_csv(dir.path(), Strictness::Strict).unwrap_err() {
        crate::Error::Row { table, line, message } => {
            assert_eq!(table, "PATIENTS");
            assert_eq!(line, 3);
            assert!(message.contains("timestamp"));
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn unknown_care_unit_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut t = minimal_tables();
    t.icustays.clear();
    write_csv(&t.freeze(), dir.path()).unwrap();
    fs::write(
        dir.path().join("ICUSTAYS.csv"),
        "SUBJECT_ID,HADM_ID,ICUSTAY_ID,FIRST_CAREUNIT,LAST_CAREUNIT,INTIME,OUTTIME,LOS\n\
         1,10,100,BURN,MICU,2140-03-01 10:00:00,2140-03-03 10:00:00,2\n",
    )
    .unwrap();
    let err = ingest_csv(dir.path(), Strictness::Lenient).unwrap_err();
    assert!(err.to_string().contains("BURN"));
}

#[test]
fn dangling_icustay_strict_vs_lenient() {
    let dir = tempfile::tempdir().unwrap();
    let mut t = minimal_tables();
    t.icustays[0].hadm_id = 99;
    t.chartevents.clear();
    write_csv(&t.freeze(), dir.path()).unwrap();

    match ingest_csv(dir.path(), Strictness::Strict).unwrap_err() {
        crate::Error::Integrity { table, line, .. } => {
            assert_eq!(table, "ICUSTAYS");
            assert_eq!(line, 2);
        }
        other => panic!("unexpected {other}"),
    }

    let (store, report) = ingest_csv(dir.path(), Strictness::Lenient).unwrap();
    assert!(store.icustays().is_empty());
    assert_eq!(report.dropped.get("ICUSTAYS"), Some(&1));
    assert!(validate_store(&store).is_clean());
}

#[test]
fn seq_gaps_renumbered_leniently_rejected_strictly() {
    let dir = tempfile::tempdir().unwrap();
    let mut t = minimal_tables();
    t.diagnoses[1].seq_num = 4;
    write_csv(&t.freeze(), dir.path()).unwrap();
    assert!(matches!(
        ingest_csv(dir.path(), Strictness::Strict),
        Err(crate::Error::Integrity { table: "DIAGNOSES_ICD", .. })
    ));
    let (store, report) = ingest_csv(dir.path(), Strictness::Lenient).unwrap();
    assert_eq!(report.renumbered_admissions, 1);
    let seqs: Vec<u32> = store.diagnoses_of_admission(10).map(|d| d.seq_num).collect();
    assert_eq!(seqs, vec![1, 2]);
}

#[test]
fn injected_time_ordering_violation() {
    let mut t = minimal_tables();
    t.admissions[0].dischtime = ts("2140-02-28 00:00:00");
    t.icustays.clear();
    t.chartevents.clear();
    let report = validate_store(&t.freeze());
    assert_eq!(report.count(ViolationKind::TimeOrdering), 1);
    assert_eq!(report.total(), 1);
}

#[test]
fn injected_flag_violation() {
    let mut t = minimal_tables();
    t.admissions[0].hospital_expire_flag = true;
    let report = validate_store(&t.freeze());
    assert_eq!(report.count(ViolationKind::ExpireFlag), 1);
    assert_eq!(report.total(), 1);
}

#[test]
fn lookups_follow_keys() {
    let store = minimal_tables().freeze();
    assert_eq!(store.admissions_of(1).count(), 1);
    assert_eq!(store.icustays_of_admission(10).next().unwrap().icustay_id, 100);
    assert_eq!(store.chart_events_of_stay(100).count(), 1);
    assert_eq!(store.chart_events_of_stay(101).count(), 0);
    assert_eq!(store.item(220045).unwrap().label, "Heart Rate");
    let codes: Vec<&str> = store.diagnoses_of_admission(10).map(|d| d.icd9_code.as_str()).collect();
    assert_eq!(codes, ["486", "4019"]);
}

#[test]
fn quoted_fields_survive() {
    let dir = tempfile::tempdir().unwrap();
    let mut t = minimal_tables();
    t.admissions[0].diagnosis = "CHEST PAIN, \"R/O\" MI\nSECOND LINE".into();
    let store = t.freeze();
    write_csv(&store, dir.path()).unwrap();
    let (back, _) = ingest_csv(dir.path(), Strictness::Strict).unwrap();
    assert_eq!(back.admissions()[0].diagnosis, store.admissions()[0].diagnosis);
}
