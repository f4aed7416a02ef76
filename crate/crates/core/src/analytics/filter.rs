use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::{CareUnit, Gender};
use crate::time::{age_at, Timestamp, DEFAULT_ELDERLY_SENTINEL};

pub const ADULT_MIN_AGE: f64 = 16.0;

/// Lower age bound, strict ("older than") or inclusive ("at least").
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinAge {
    Over(f64),
    AtLeast(f64),
}

impl MinAge {
    pub fn admits(&self, age: f64) -> bool {
        match *self {
            MinAge::Over(a) => age > a,
            MinAge::AtLeast(a) => age >= a,
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            MinAge::Over(a) | MinAge::AtLeast(a) => a,
        }
    }
}

impl fmt::Display for MinAge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MinAge::Over(a) => write!(f, "> {a}"),
            MinAge::AtLeast(a) => write!(f, ">= {a}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortFilter {
    pub min_age: Option<MinAge>,
    /// Inclusive upper bound.
    pub max_age: Option<f64>,
    /// Empty means every unit.
    pub units: Vec<CareUnit>,
    pub gender: Option<Gender>,
    pub elderly_sentinel: f64,
}

impl Default for CohortFilter {
    fn default() -> Self {
        CohortFilter {
            min_age: None,
            max_age: None,
            units: Vec::new(),
            gender: None,
            elderly_sentinel: DEFAULT_ELDERLY_SENTINEL,
        }
    }
}

impl CohortFilter {
    pub fn all() -> Self {
        CohortFilter::default()
    }

    /// Patients older than 16.
    pub fn adult() -> Self {
        CohortFilter::older_than(ADULT_MIN_AGE)
    }

    pub fn older_than(age: f64) -> Self {
        CohortFilter {
            min_age: Some(MinAge::Over(age)),
            ..CohortFilter::default()
        }
    }

    pub fn at_least(age: f64) -> Self {
        CohortFilter {
            min_age: Some(MinAge::AtLeast(age)),
            ..CohortFilter::default()
        }
    }

    pub fn with_units(mut self, units: &[CareUnit]) -> Self {
        self.units = units.to_vec();
        self
    }

    pub fn with_gender(mut self, gender: Gender) -> Self {
        self.gender = Some(gender);
        self
    }

    pub fn with_max_age(mut self, age: f64) -> Self {
        self.max_age = Some(age);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let (Some(min), Some(max)) = (self.min_age, self.max_age) {
            if min.value() > max {
                return Err(Error::Usage(format!("min age {} exceeds max age {max}", min.value())));
            }
        }
        Ok(())
    }

    pub fn age(&self, dob: &Timestamp, at: &Timestamp) -> f64 {
        age_at(dob, at, self.elderly_sentinel).years
    }

    pub fn admits_age(&self, age: f64) -> bool {
        self.min_age.map_or(true, |m| m.admits(age)) && self.max_age.map_or(true, |m| age <= m)
    }

    /// A missing unit (no ICU stay) passes only an unrestricted unit filter.
    pub fn admits_unit(&self, unit: Option<CareUnit>) -> bool {
        self.units.is_empty() || unit.is_some_and(|u| self.units.contains(&u))
    }

    pub fn admits(&self, age: f64, unit: Option<CareUnit>, gender: Gender) -> bool {
        self.admits_age(age) && self.admits_unit(unit) && self.gender.map_or(true, |g| g == gender)
    }

    pub fn describe(&self, age_reference: &str) -> String {
        let mut parts = Vec::new();
        if let Some(m) = self.min_age {
            parts.push(format!("age at {age_reference} {m}"));
        }
        if let Some(m) = self.max_age {
            parts.push(format!("age at {age_reference} <= {m}"));
        }
        if !self.units.is_empty() {
            let u: Vec<&str> = self.units.iter().map(|u| u.as_str()).collect();
            parts.push(format!("unit in {{{}}}", u.join(",")));
        }
        if let Some(g) = self.gender {
            parts.push(format!("gender {g}"));
        }
        if parts.is_empty() {
            "no filter".into()
        } else {
            parts.join("; ")
        }
    }
}
