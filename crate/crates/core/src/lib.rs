//! Interbank stress testing: balance sheets, network reconstruction,
//! distress contagion, fire sales and loss-distribution metrics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contagion;
pub mod error;
pub mod fire_sales;
pub mod ingest;
pub mod model;
pub mod reconstruction;
pub mod risk;
pub mod scenario;
pub mod seed;
pub mod series;
pub mod stress;
pub mod synth;

pub use error::{Error, Result};
pub use model::{derive_leverage, BankRecord, Cohort, ExposureMatrix, LeverageNetworks};
