// SPDX-License-Identifier: Apache-2.0

//! Approximate-operator design-space exploration by selective LUT removal.
//!
//! The crate is `no_std` (with `alloc`) and carries every algorithm of the
//! flow: netlist simulation, characterization, sampling, correlation
//! analysis, surrogate fitting, pseudo-boolean optimization, NSGA-II search,
//! hypervolume scoring and the application kernels. File formats, threading
//! and the command line live in the `axomap` crate.

#![no_std]
#![deny(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod apps;
pub mod charac;
pub mod config;
pub mod dataset;
pub mod dse;
mod error;
pub mod estimate;
mod linalg;
pub mod map;
pub mod netlist;
pub mod stats;

pub use config::Config;
pub use error::{Error, Result};
