mod common;

use chrono::Datelike;
use ehrforge::deid::{deidentify, DeidConfig, ShiftConfig};
use ehrforge::store::EhrStore;
use ehrforge::synthgen::{generate, PopulationSpec};
use proptest::prelude::*;

fn config(seed: u64) -> DeidConfig {
    DeidConfig {
        seed,
        shift: ShiftConfig::default(),
        names: vec!["Smith".into()],
        obfuscate_elderly: true,
    }
}

fn check(store: &EhrStore, out: &EhrStore, with_dob: bool) {
    let bad = common::deid::violations(store, out, with_dob);
    assert!(bad.is_empty(), "{bad:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn shift_preserves_intervals_weekdays_and_clock(seed in 0u64..1_000, deid_seed in any::<u64>()) {
        let (store, _) = generate(&PopulationSpec::with_patients(80, seed)).unwrap();
        let (out, report) = deidentify(&store, &config(deid_seed)).unwrap();
        check(&store, &out, false);
        prop_assert!(report.max_seasonal_drift_days <= 15.0);
        prop_assert_eq!(report.subjects_shifted, store.patients().len());
    }
}

#[test]
fn birth_dates_shift_with_everything_else_when_ages_are_kept() {
    let (store, _) = generate(&PopulationSpec::with_patients(80, 17)).unwrap();
    let cfg = DeidConfig {
        obfuscate_elderly: false,
        ..config(3)
    };
    let (out, report) = deidentify(&store, &cfg).unwrap();
    assert_eq!(report.elderly_obfuscated, 0);
    check(&store, &out, true);
}

#[test]
fn elderly_patients_get_implausible_birth_dates() {
    let (store, _) = generate(&PopulationSpec::with_patients(300, 4)).unwrap();
    let (out, report) = deidentify(&store, &config(1)).unwrap();
    assert!(report.elderly_obfuscated > 0);
    let aged = out
        .patients()
        .iter()
        .filter(|p| {
            let first = out.admissions_of(p.subject_id).map(|a| a.admittime).min();
            first.is_some_and(|f| (f - p.dob).num_days() > 200 * 365)
        })
        .count();
    assert_eq!(aged, report.elderly_obfuscated);
}

#[test]
fn output_is_deterministic_per_seed() {
    let (store, _) = generate(&PopulationSpec::with_patients(60, 8)).unwrap();
    let (a, ra) = deidentify(&store, &config(11)).unwrap();
    let (b, rb) = deidentify(&store, &config(11)).unwrap();
    assert_eq!(a.tables(), b.tables());
    assert_eq!(ra, rb);
    let (c, _) = deidentify(&store, &config(12)).unwrap();
    assert_ne!(a.tables(), c.tables());
}

#[test]
fn shifted_years_land_in_the_window() {
    let (store, _) = generate(&PopulationSpec::with_patients(60, 2)).unwrap();
    let (out, _) = deidentify(&store, &config(5)).unwrap();
    for p in out.patients() {
        let first = out.admissions_of(p.subject_id).map(|a| a.admittime).min().unwrap();
        assert!((2099..=2201).contains(&first.year()), "{}", first);
    }
}
