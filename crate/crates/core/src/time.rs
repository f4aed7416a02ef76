//! Timestamps at second resolution without time zones, and age arithmetic.

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

pub type Timestamp = NaiveDateTime;

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S";
pub const DAYS_PER_YEAR: f64 = 365.25;
pub const SECONDS_PER_DAY: i64 = 86_400;

/// Ages strictly above this are treated as obfuscated.
pub const ELDERLY_THRESHOLD_YEARS: f64 = 89.0;
pub const DEFAULT_ELDERLY_SENTINEL: f64 = 91.4;

pub fn parse_timestamp(raw: &str) -> Result<Timestamp, chrono::ParseError> {
    NaiveDateTime::parse_from_str(raw.trim(), TIMESTAMP_FORMAT)
}

pub fn format_timestamp(t: &Timestamp) -> String {
    t.format(TIMESTAMP_FORMAT).to_string()
}

pub fn seconds_between(from: &Timestamp, to: &Timestamp) -> i64 {
    (*to - *from).num_seconds()
}

pub fn hours_between(from: &Timestamp, to: &Timestamp) -> f64 {
    seconds_between(from, to) as f64 / 3600.0
}

pub fn days_between(from: &Timestamp, to: &Timestamp) -> f64 {
    seconds_between(from, to) as f64 / SECONDS_PER_DAY as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Age {
    pub years: f64,
    /// Set when the raw age exceeded the elderly threshold and was replaced
    /// by the sentinel.
    pub obfuscated: bool,
}

/// Age in years at `at`, replacing ages above 89 with `sentinel`.
///
/// `at` may precede `dob`; de-identified birth dates of elderly patients can
/// produce implausible raw values and no ordering is enforced.
pub fn age_at(dob: &Timestamp, at: &Timestamp, sentinel: f64) -> Age {
    let years = days_between(dob, at) / DAYS_PER_YEAR;
    if years > ELDERLY_THRESHOLD_YEARS {
        Age {
            years: sentinel,
            obfuscated: true,
        }
    } else {
        Age {
            years,
            obfuscated: false,
        }
    }
}

/// [`age_at`] with the default 91.4 sentinel.
pub fn age_years(dob: &Timestamp, at: &Timestamp) -> f64 {
    age_at(dob, at, DEFAULT_ELDERLY_SENTINEL).years
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> Timestamp {
        parse_timestamp(s).unwrap()
    }

    #[test]
    fn sixty_years() {
        let age = age_at(&ts("2100-01-01 00:00:00"), &ts("2160-01-01 00:00:00"), 91.4);
        assert!((age.years - 60.0).abs() < 0.05);
        assert!(!age.obfuscated);
    }

    #[test]
    fn identity_is_zero() {
        let t = ts("2130-05-06 07:08:09");
        assert_eq!(age_at(&t, &t, 91.4).years, 0.0);
    }

    #[test]
    fn raw_age_300_hits_sentinel() {
        let at = ts("2150-01-01 00:00:00");
        let dob = at - chrono::Duration::days(300 * 365 + 75);
        let age = age_at(&dob, &at, 91.4);
        assert_eq!(age.years, 91.4);
        assert!(age.obfuscated);
        assert_eq!(age_at(&dob, &at, 95.0).years, 95.0);
    }

    #[test]
    fn exactly_89_is_not_obfuscated() {
        let at = ts("2150-01-01 00:00:00");
        let dob = at - chrono::Duration::seconds((89.0 * DAYS_PER_YEAR * 86_400.0) as i64);
        let age = age_at(&dob, &at, 91.4);
        assert!(!age.obfuscated);
        assert!((age.years - 89.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_timestamp("2100-01-01").is_err());
        assert!(parse_timestamp("2100-13-01 00:00:00").is_err());
        assert_eq!(format_timestamp(&ts("2101-02-03 04:05:06")), "2101-02-03 04:05:06");
    }
}
