// SPDX-License-Identifier: Apache-2.0

//! Exhaustive behavioural metrics and surrogate PPA metrics of configurations.
//!
//! Errors are `accurate output - approximate output` over every operand pair.
//! The PPA surrogate counts output toggles of live cells across the operand
//! space applied in Gray-code order (power), takes the longest live path
//! (LUT = 1.0, carry = 0.1) as critical-path delay, and the number of kept
//! removable LUTs as utilisation.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::config::Config;
use crate::error::{bail, Error, Result};
use crate::netlist::{Evaluator, InputOrder, Netlist};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BehavMetrics {
    pub avg_abs_err: f64,
    /// Mean of `|err| / |accurate|` over pairs whose accurate output is nonzero.
    pub avg_abs_rel_err: f64,
    /// Percentage of pairs with a nonzero error.
    pub prob_err: f64,
    pub max_abs_err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PpaMetrics {
    pub power: f64,
    pub cpd: f64,
    pub luts: f64,
    pub pdp: f64,
    pub pdplut: f64,
}

impl PpaMetrics {
    /// Builds the record with `pdp` and `pdplut` as exact products of the parts.
    pub fn from_parts(power: f64, cpd: f64, luts: f64) -> Self {
        let pdp = power * cpd;
        Self { power, cpd, luts, pdp, pdplut: pdp * luts }
    }
}

/// Toggle model of the power surrogate.
pub type ToggleModel = InputOrder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Source {
    #[default]
    Simulated,
    Ingested,
}

impl Source {
    pub fn as_str(&self) -> &'static str {
        match self {
            Source::Simulated => "simulated",
            Source::Ingested => "ingested",
        }
    }
}

impl FromStr for Source {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simulated" => Ok(Source::Simulated),
            "ingested" => Ok(Source::Ingested),
            other => bail!(Validation, "unknown source {other:?}"),
        }
    }
}

/// One characterised design point.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsRecord {
    pub config: Config,
    pub behav: BehavMetrics,
    pub ppa: PpaMetrics,
    pub source: Source,
}

/// A scalar column of a [`MetricsRecord`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Metric {
    AvgAbsErr,
    AvgAbsRelErr,
    ProbErr,
    MaxAbsErr,
    Power,
    Cpd,
    Luts,
    Pdp,
    Pdplut,
}

impl Metric {
    pub const ALL: [Metric; 9] = [
        Metric::AvgAbsErr,
        Metric::AvgAbsRelErr,
        Metric::ProbErr,
        Metric::MaxAbsErr,
        Metric::Power,
        Metric::Cpd,
        Metric::Luts,
        Metric::Pdp,
        Metric::Pdplut,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Metric::AvgAbsErr => "avg_abs_err",
            Metric::AvgAbsRelErr => "avg_abs_rel_err",
            Metric::ProbErr => "prob_err",
            Metric::MaxAbsErr => "max_abs_err",
            Metric::Power => "power",
            Metric::Cpd => "cpd",
            Metric::Luts => "luts",
            Metric::Pdp => "pdp",
            Metric::Pdplut => "pdplut",
        }
    }

    pub fn is_behav(&self) -> bool {
        matches!(self, Metric::AvgAbsErr | Metric::AvgAbsRelErr | Metric::ProbErr | Metric::MaxAbsErr)
    }

    pub fn of(&self, r: &MetricsRecord) -> f64 {
        match self {
            Metric::AvgAbsErr => r.behav.avg_abs_err,
            Metric::AvgAbsRelErr => r.behav.avg_abs_rel_err,
            Metric::ProbErr => r.behav.prob_err,
            Metric::MaxAbsErr => r.behav.max_abs_err,
            Metric::Power => r.ppa.power,
            Metric::Cpd => r.ppa.cpd,
            Metric::Luts => r.ppa.luts,
            Metric::Pdp => r.ppa.pdp,
            Metric::Pdplut => r.ppa.pdplut,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Metric::ALL.into_iter().find(|m| m.name() == lower).ok_or_else(|| Error::Validation(alloc::format!("unknown metric {s:?}")))
    }
}

/// Error statistics of `approx` against `accurate`, both in pattern order.
pub fn behav_from_outputs(accurate: &[i64], approx: &[i64]) -> BehavMetrics {
    debug_assert_eq!(accurate.len(), approx.len());
    let total = accurate.len();
    if total == 0 {
        return BehavMetrics::default();
    }
    let mut sum_abs: u128 = 0;
    let mut max_abs: u64 = 0;
    let mut mismatches = 0usize;
    let mut rel_sum = 0.0;
    let mut rel_count = 0usize;
    for (&acc, &out) in accurate.iter().zip(approx) {
        let err = (acc - out).unsigned_abs();
        sum_abs += err as u128;
        max_abs = max_abs.max(err);
        if err != 0 {
            mismatches += 1;
        }
        if acc != 0 {
            rel_sum += err as f64 / acc.unsigned_abs() as f64;
            rel_count += 1;
        }
    }
    BehavMetrics {
        avg_abs_err: sum_abs as f64 / total as f64,
        avg_abs_rel_err: if rel_count == 0 { 0.0 } else { rel_sum / rel_count as f64 },
        prob_err: 100.0 * mismatches as f64 / total as f64,
        max_abs_err: max_abs as f64,
    }
}

/// Characterises configurations of one netlist against its accurate outputs.
#[derive(Debug, Clone)]
pub struct Characterizer<'a> {
    netlist: &'a Netlist,
    accurate: Vec<i64>,
    toggle_model: ToggleModel,
}

impl<'a> Characterizer<'a> {
    pub fn new(netlist: &'a Netlist) -> Result<Self> {
        Self::with_toggle_model(netlist, ToggleModel::Gray)
    }

    pub fn with_toggle_model(netlist: &'a Netlist, toggle_model: ToggleModel) -> Result<Self> {
        let ones = Config::ones(netlist.removable_count());
        let accurate = Evaluator::new(netlist, &ones)?.sweep(false)?.outputs;
        Ok(Self { netlist, accurate, toggle_model })
    }

    pub fn netlist(&self) -> &Netlist {
        self.netlist
    }

    /// Outputs of the accurate configuration in pattern order.
    pub fn accurate_outputs(&self) -> &[i64] {
        &self.accurate
    }

    pub fn behav(&self, config: &Config) -> Result<BehavMetrics> {
        let sweep = Evaluator::new(self.netlist, config)?.sweep(false)?;
        Ok(behav_from_outputs(&self.accurate, &sweep.outputs))
    }

    pub fn ppa(&self, config: &Config) -> Result<PpaMetrics> {
        let ev = Evaluator::new(self.netlist, config)?;
        let sweep = ev.sweep_in(self.toggle_model, true)?;
        Ok(self.ppa_from(&ev, sweep.toggles))
    }

    fn ppa_from(&self, ev: &Evaluator<'_>, toggles: u64) -> PpaMetrics {
        let power = toggles as f64 / self.accurate.len() as f64;
        let cpd = ev.timing().critical_path;
        PpaMetrics::from_parts(power, cpd, ev.config().count_ones() as f64)
    }

    /// Behavioural and PPA metrics from a single sweep.
    pub fn record(&self, config: &Config) -> Result<MetricsRecord> {
        let ev = Evaluator::new(self.netlist, config)?;
        let sweep = ev.sweep_in(self.toggle_model, true)?;
        Ok(MetricsRecord {
            config: *config,
            behav: behav_from_outputs(&self.accurate, &sweep.outputs),
            ppa: self.ppa_from(&ev, sweep.toggles),
            source: Source::Simulated,
        })
    }
}

pub fn behav_metrics(netlist: &Netlist, config: &Config) -> Result<BehavMetrics> {
    Characterizer::new(netlist)?.behav(config)
}

pub fn ppa_metrics(netlist: &Netlist, config: &Config, toggle_model: ToggleModel) -> Result<PpaMetrics> {
    Characterizer::with_toggle_model(netlist, toggle_model)?.ppa(config)
}

/// Rejects repeated or wrongly sized configurations.
pub fn check_distinct(netlist: &Netlist, configs: &[Config]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for c in configs {
        netlist.config_len_check(c)?;
        if !seen.insert(*c) {
            bail!(Validation, "duplicate config {c}");
        }
    }
    Ok(())
}

/// Serial batch characterisation, records in input order.
pub fn characterize(netlist: &Netlist, configs: &[Config]) -> Result<Vec<MetricsRecord>> {
    check_distinct(netlist, configs)?;
    if configs.is_empty() {
        return Ok(Vec::new());
    }
    let ch = Characterizer::new(netlist)?;
    configs.iter().map(|c| ch.record(c)).collect()
}
