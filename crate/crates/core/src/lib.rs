//! Historical-average (HA) and residual linear-regression (HA+LR) forecasting
//! baselines for panel time series.
//!
//! The crate is `no_std` and only needs an allocator. Everything that touches
//! the filesystem, JSON or the command line lives in the companion `mobench`
//! crate.
//!
//! Pipeline in one paragraph: a [`panel::PanelDataset`] is split in time,
//! [`seasonal::fit_profile`] estimates the mean and spread of every weekly slot
//! (holidays count as Sundays), [`seasonal::residualize`] removes that pattern,
//! [`arres::fit_halr`] regresses each residual on its `h` predecessors, and
//! [`arres::forecast_halr`] rolls the model over an evaluation window and adds
//! the weekly pattern back. [`metrics`] scores the result.

#![no_std]
#![forbid(unsafe_code)]
// Validation is written as `!(x >= 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod arres;
pub mod calendar;
pub mod error;
pub mod lstsq;
pub mod metrics;
pub mod panel;
pub mod seasonal;
pub mod tensor;

pub use error::{Error, Result};
