//! Diagnostics computed from finished runs.

pub mod kspace;
pub mod ledger;
pub mod metrics;
pub mod spectrum;
