// SPDX-License-Identifier: Apache-2.0

//! File formats, parallel drivers, reports and the `axomap` command line on
//! top of `axomap-core`.

pub mod cli;
pub mod formats;
pub mod parallel;
pub mod pipeline;
pub mod report;
pub mod svg;
