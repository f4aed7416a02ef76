use super::*;
use crate::icd::IcdResources;
use crate::store::{CareUnit, EhrStore, Gender, StoreBuilder};

fn three_patient_fixture() -> EhrStore {
    StoreBuilder::new()
        .patient(1, Gender::M, "2080-01-01 00:00:00")
        .patient(2, Gender::F, "2070-06-01 00:00:00")
        .admission(10, 1, "2150-01-01 00:00:00", "2150-01-05 00:00:00")
        .admission(11, 1, "2151-01-01 00:00:00", "2151-01-10 00:00:00")
        .admission(20, 2, "2150-03-01 00:00:00", "2150-03-04 00:00:00")
        .icustay(100, 10, CareUnit::MICU, "2150-01-01 02:00:00", "2150-01-03 00:00:00")
        .icustay(110, 11, CareUnit::SICU, "2151-01-01 02:00:00", "2151-01-02 00:00:00")
        .icustay(111, 11, CareUnit::SICU, "2151-01-05 00:00:00", "2151-01-07 00:00:00")
        .icustay(200, 20, CareUnit::CCU, "2150-03-01 01:00:00", "2150-03-02 00:00:00")
        .build()
}

#[test]
fn count_distinct_on_fixture() {
    let s = three_patient_fixture();
    let f = CohortFilter::all();
    assert_eq!(count_distinct(&s, Entity::Patients, &f).unwrap(), 2);
    assert_eq!(count_distinct(&s, Entity::HospitalAdmissions, &f).unwrap(), 3);
    assert_eq!(count_distinct(&s, Entity::IcuStays, &f).unwrap(), 4);
}

#[test]
fn count_distinct_empty_store() {
    let s = StoreBuilder::new().build();
    for e in [Entity::Patients, Entity::HospitalAdmissions, Entity::IcuStays] {
        assert_eq!(count_distinct(&s, e, &CohortFilter::adult()).unwrap(), 0);
    }
}

#[test]
fn single_sixty_year_old_lands_in_sixty_bin() {
    let s = StoreBuilder::new()
        .patient(1, Gender::F, "2100-01-01 00:00:00")
        .admission(10, 1, "2160-01-01 00:00:00", "2160-01-05 00:00:00")
        .icustay(100, 10, CareUnit::MICU, "2160-01-02 00:00:00", "2160-01-03 00:00:00")
        .build();
    let r = demographic_distribution(&s, Dimension::Age, &CohortFilter::adult()).unwrap();
    let micu = r.unit(CareUnit::MICU).unwrap();
    assert_eq!(micu.count("[60,65)"), 1);
    assert_eq!(micu.total(), 1);
    assert_eq!(r.by_unit.len(), 1);
}

#[test]
fn fifteen_year_old_is_not_adult() {
    let s = StoreBuilder::new()
        .patient(1, Gender::F, "2145-01-01 00:00:00")
        .admission(10, 1, "2160-01-01 00:00:00", "2160-01-05 00:00:00")
        .icustay(100, 10, CareUnit::MICU, "2160-01-02 00:00:00", "2160-01-03 00:00:00")
        .build();
    let r = demographic_distribution(&s, Dimension::Gender, &CohortFilter::adult()).unwrap();
    assert!(r.by_unit.is_empty());
    assert_eq!(count_distinct(&s, Entity::Patients, &CohortFilter::adult()).unwrap(), 0);
}

#[test]
fn obfuscated_age_goes_to_elderly_bin() {
    let s = StoreBuilder::new()
        .patient(1, Gender::M, "1850-01-01 00:00:00")
        .admission(10, 1, "2150-01-01 00:00:00", "2150-01-05 00:00:00")
        .icustay(100, 10, CareUnit::CCU, "2150-01-02 00:00:00", "2150-01-03 00:00:00")
        .build();
    let r = demographic_distribution(&s, Dimension::Age, &CohortFilter::adult()).unwrap();
    assert_eq!(r.unit(CareUnit::CCU).unwrap().count(ELDERLY_BIN), 1);
}

fn one_stay_with_death(death: Option<&str>) -> EhrStore {
    let b = StoreBuilder::new()
        .patient(1, Gender::M, "2080-01-01 00:00:00")
        .admission(10, 1, "2150-01-01 00:00:00", "2150-01-10 00:00:00")
        .icustay(100, 10, CareUnit::MICU, "2150-01-02 00:00:00", "2150-01-04 00:00:00");
    match death {
        Some(t) => b.death(1, t).build(),
        None => b.build(),
    }
}

fn icu_deaths(s: &EhrStore) -> u64 {
    icu_mortality(s, &CohortFilter::older_than(60.0), DEFAULT_BOUNDARY_HOURS)
        .unwrap()
        .overall
        .numerator
}

#[test]
fn icu_mortality_boundary() {
    assert_eq!(icu_deaths(&one_stay_with_death(Some("2150-01-04 03:00:00"))), 1);
    assert_eq!(icu_deaths(&one_stay_with_death(Some("2150-01-04 06:00:00"))), 1);
    assert_eq!(icu_deaths(&one_stay_with_death(Some("2150-01-04 06:00:01"))), 0);
    assert_eq!(icu_deaths(&one_stay_with_death(Some("2150-01-01 18:00:00"))), 1);
    assert_eq!(icu_deaths(&one_stay_with_death(Some("2150-01-01 17:59:59"))), 0);
    assert_eq!(icu_deaths(&one_stay_with_death(None)), 0);
}

#[test]
fn icu_mortality_definition_flags_pre_admission_rule() {
    let r = icu_mortality(&one_stay_with_death(None), &CohortFilter::older_than(60.0), 6).unwrap();
    assert!(r.definition.contains("before ICU admission"));
    assert_eq!(r.overall.denominator, 1);
}

#[test]
fn hospital_mortality_uses_flag_only() {
    let s = one_stay_with_death(Some("2150-01-12 00:00:00"));
    let r = hospital_mortality(&s, &CohortFilter::adult()).unwrap();
    assert_eq!(r.overall.numerator, 0);
    assert_eq!(r.overall.denominator, 1);

    let s = StoreBuilder::new()
        .patient(1, Gender::M, "2080-01-01 00:00:00")
        .patient(2, Gender::F, "2080-01-01 00:00:00")
        .admission(10, 1, "2150-01-01 00:00:00", "2150-01-10 00:00:00")
        .admission(20, 2, "2150-01-01 00:00:00", "2150-01-10 00:00:00")
        .icustay(100, 10, CareUnit::MICU, "2150-01-02 00:00:00", "2150-01-04 00:00:00")
        .hospital_death(10, "2150-01-06 00:00:00")
        .hospital_death(20, "2150-01-03 00:00:00")
        .build();
    let r = hospital_mortality(&s, &CohortFilter::adult()).unwrap();
    assert_eq!(r.overall.numerator, 2);
    assert_eq!(r.stratum("MICU").unwrap().numerator, 1);
    assert_eq!(r.stratum(NO_ICU).unwrap().numerator, 1);
    assert_eq!(r.stratum("MICU").unwrap().share_of_events, 0.5);
}

#[test]
fn thirty_day_boundaries() {
    let s = one_stay_with_death(Some("2150-01-30 23:00:00"));
    assert_eq!(mortality_within(&s, 30, &CohortFilter::adult()).unwrap().overall.numerator, 1);
    let s = one_stay_with_death(Some("2150-01-31 01:00:00"));
    assert_eq!(mortality_within(&s, 30, &CohortFilter::adult()).unwrap().overall.numerator, 0);
    assert_eq!(mortality_within(&s, 365, &CohortFilter::adult()).unwrap().overall.numerator, 1);
    assert!(mortality_within(&s, 0, &CohortFilter::adult()).is_err());
}

#[test]
fn los_is_exact_and_multi_stay_excluded() {
    let s = StoreBuilder::new()
        .patient(1, Gender::M, "2080-01-01 00:00:00")
        // 2150-01-05 is a Monday.
        .admission(10, 1, "2150-01-05 08:00:00", "2150-01-08 08:00:00")
        .admission(11, 1, "2150-03-01 00:00:00", "2150-03-10 00:00:00")
        .icustay(100, 10, CareUnit::MICU, "2150-01-05 09:00:00", "2150-01-06 09:00:00")
        .icustay(110, 11, CareUnit::SICU, "2150-03-01 01:00:00", "2150-03-02 00:00:00")
        .icustay(111, 11, CareUnit::SICU, "2150-03-05 00:00:00", "2150-03-06 00:00:00")
        .build();
    let r = hospital_los(&s, &CohortFilter::older_than(60.0), true).unwrap();
    assert_eq!(r.summary.n, 1);
    assert_eq!(r.summary.mean, 3.0);
    assert_eq!(r.excluded_multi_stay, 1);
    assert_eq!(r.histogram.count("[3,4)"), 1);
    let r = hospital_los(&s, &CohortFilter::older_than(60.0), false).unwrap();
    assert_eq!(r.summary.n, 2);
    assert_eq!(r.summary.median, 6.0);
}

#[test]
fn negative_los_is_counted_and_dropped() {
    let mut b = StoreBuilder::new()
        .patient(1, Gender::M, "2080-01-01 00:00:00")
        .admission(10, 1, "2150-01-04 08:00:00", "2150-01-07 08:00:00");
    b.tables_mut().admissions[0].dischtime = crate::store::ts("2150-01-03 08:00:00");
    let r = hospital_los(&b.build(), &CohortFilter::all(), false).unwrap();
    assert_eq!(r.excluded_negative, 1);
    assert_eq!(r.summary.n, 0);
}

fn hypertensive(dob: &str) -> EhrStore {
    StoreBuilder::new()
        .patient(1, Gender::M, dob)
        .admission(10, 1, "2150-01-01 00:00:00", "2150-01-05 00:00:00")
        .icustay(100, 10, CareUnit::MICU, "2150-01-01 02:00:00", "2150-01-02 00:00:00")
        .diagnosis(10, "486")
        .diagnosis(10, "4019")
        .build()
}

#[test]
fn code_range_counts_and_filters() {
    let s = hypertensive("2104-07-01 00:00:00");
    let r = patients_with_code_range(&s, "401", "405", MinAge::AtLeast(30.0)).unwrap();
    assert_eq!(r.patients, 1);
    assert_eq!(r.histogram.count("[45,50)"), 1);
    let r = patients_with_code_range(&s, "401", "405", MinAge::AtLeast(50.0)).unwrap();
    assert_eq!(r.patients, 0);
    assert!(patients_with_code_range(&s, "405", "401", MinAge::AtLeast(0.0)).is_err());
    assert!(patients_with_code_range(&s, "401", "E880", MinAge::AtLeast(0.0)).is_err());
}

#[test]
fn top_k_fewer_codes_and_ties() {
    let mut b = StoreBuilder::new().patient(1, Gender::M, "2070-01-01 00:00:00");
    let codes = ["4280", "41401", "4280", "41401", "42731"];
    for (i, code) in codes.iter().enumerate() {
        let hadm = 10 + i as i64;
        let day = format!("2150-0{}-01", i + 1);
        b = b
            .admission(hadm, 1, &format!("{day} 00:00:00"), &format!("{day} 12:00:00"))
            .icustay(100 + hadm, hadm, CareUnit::CCU, &format!("{day} 01:00:00"), &format!("{day} 10:00:00"))
            .diagnosis(hadm, code);
    }
    let s = b.build();
    let r = top_k_primary_codes_by_unit(&s, 5, &CohortFilter::older_than(60.0), IcdResources::builtin()).unwrap();
    let ccu = r.unit(CareUnit::CCU).unwrap();
    let got: Vec<(&str, u64)> = ccu.codes.iter().map(|c| (c.code.as_str(), c.count)).collect();
    assert_eq!(got, vec![("41401", 2), ("4280", 2), ("42731", 1)]);
    assert!(ccu.codes[0].chapter.as_deref().unwrap().to_lowercase().contains("circulatory"));
    assert!(top_k_primary_codes_by_unit(&s, 0, &CohortFilter::all(), IcdResources::builtin()).is_err());
}

#[test]
fn strata_add_up() {
    let s = three_patient_fixture();
    let r = icu_mortality(&s, &CohortFilter::all(), 6).unwrap();
    let n: u64 = r.strata.iter().map(|s| s.numerator).sum();
    let d: u64 = r.strata.iter().map(|s| s.denominator).sum();
    assert_eq!((n, d), (r.overall.numerator, r.overall.denominator));
    assert_eq!(d, 4);
}

#[test]
fn min_above_max_is_usage_error() {
    let f = CohortFilter::older_than(70.0).with_max_age(60.0);
    assert!(matches!(
        count_distinct(&three_patient_fixture(), Entity::Patients, &f),
        Err(crate::Error::Usage(_))
    ));
}
