//! Runs the code listings of the guide in `book/src` as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/generating.md")]
pub mod generating {}
#[doc = include_str!("../../../book/src/store.md")]
pub mod store {}
#[doc = include_str!("../../../book/src/analytics.md")]
pub mod analytics {}
#[doc = include_str!("../../../book/src/icd.md")]
pub mod icd {}
#[doc = include_str!("../../../book/src/deid.md")]
pub mod deid {}
#[doc = include_str!("../../../book/src/timeline.md")]
pub mod timeline {}
#[doc = include_str!("../../../book/src/study.md")]
pub mod study {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
