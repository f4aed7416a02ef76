pub mod analytics;
pub mod cli;
pub mod deid;
pub mod error;
pub mod icd;
pub mod items;
pub mod rng;
pub mod store;
pub mod study;
pub mod synthgen;
pub mod timeline;
pub mod time;

pub use error::{Error, Result};
