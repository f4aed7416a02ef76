//! Descriptive statistics and outcome queries over a frozen store.
//!
//! Every report carries a definition string naming the unit of analysis, the
//! age reference point and the filter it was computed under.

mod codes;
mod descriptive;
mod filter;
mod outcomes;
mod report;

pub use codes::{
    patients_with_code_range, top_k_primary_codes_by_unit, CodeRangeReport, RankedCode, TopCodesReport, UnitCodes,
    HYPERTENSION_RANGE,
};
pub use descriptive::{
    count_distinct, demographic_distribution, qualifying_stays, DemographicReport, Dimension, Entity, AGE_BIN_YEARS,
    ELDERLY_BIN,
};
pub use filter::{CohortFilter, MinAge, ADULT_MIN_AGE};
pub use outcomes::{
    first_icu_unit, hospital_los, hospital_mortality, icu_mortality, mortality_within, qualifying_admissions, LosReport,
    LosSummary, DEFAULT_BOUNDARY_HOURS, ICU_MORTALITY_MIN_AGE, LOS_BIN_DAYS, NO_ICU,
};
pub use report::{Bin, HistogramReport, OutcomeReport, Stratum};

#[cfg(test)]
mod tests;
