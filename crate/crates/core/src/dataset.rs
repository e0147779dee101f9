// SPDX-License-Identifier: Apache-2.0

//! Training-set sampling and the in-memory dataset.
//!
//! Two mechanisms feed a dataset: uniform random configurations and a fixed
//! family of structured patterns (runs and alternating fills placed in a
//! moving window). Pattern configurations are listed first and keep their
//! provenance when the random draw hits the same configuration.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::charac::{Characterizer, Metric, MetricsRecord};
use crate::config::{mask, Config};
use crate::error::{bail, Error, Result};
use crate::netlist::Netlist;

/// Dataset size used for the signed 8x8 operator in the original study.
pub const STANDARD_DATASET_SIZE: usize = 10_650;

/// Relative tolerance of the `pdp`/`pdplut` product identities on ingest.
pub const PRODUCT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Provenance {
    Random,
    Pattern,
    Combined,
    Ingested,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Random => "random",
            Provenance::Pattern => "pattern",
            Provenance::Combined => "combined",
            Provenance::Ingested => "ingested",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PatternFamily {
    /// A run of `w` zeros in an all-ones background.
    RunsOfZeros,
    /// A run of `w` ones in an all-zeros background.
    RunsOfOnes,
    /// `1010..` and `0101..` fills of the window, on both backgrounds.
    Alternating,
    /// An all-ones or all-zeros window on an alternating `1010..` background.
    SlidingWindow,
}

impl PatternFamily {
    pub const ALL: [PatternFamily; 4] =
        [PatternFamily::RunsOfZeros, PatternFamily::RunsOfOnes, PatternFamily::Alternating, PatternFamily::SlidingWindow];

    pub fn as_str(&self) -> &'static str {
        match self {
            PatternFamily::RunsOfZeros => "runs_of_zeros",
            PatternFamily::RunsOfOnes => "runs_of_ones",
            PatternFamily::Alternating => "alternating",
            PatternFamily::SlidingWindow => "sliding_window",
        }
    }
}

impl FromStr for PatternFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PatternFamily::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::Validation(alloc::format!("unknown pattern family {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SamplingPlan {
    pub n_random: usize,
    pub seed: u64,
    pub pattern_families: Vec<PatternFamily>,
    /// Window sizes; empty means every size `1..=L`.
    pub window_sizes: Vec<usize>,
}

impl SamplingPlan {
    pub fn random_only(n_random: usize, seed: u64) -> Self {
        Self { n_random, seed, pattern_families: Vec::new(), window_sizes: Vec::new() }
    }

    /// All four families over every window size.
    pub fn full(n_random: usize, seed: u64) -> Self {
        Self { n_random, seed, pattern_families: PatternFamily::ALL.to_vec(), window_sizes: Vec::new() }
    }

    /// Full pattern set topped up with random draws to [`STANDARD_DATASET_SIZE`]
    /// (or the whole space when it is smaller).
    pub fn standard(len: usize, seed: u64) -> Self {
        let mut plan = Self::full(0, seed);
        let patterns = sample_patterns(len, &plan).map(|p| p.len()).unwrap_or(0);
        let space = if len >= 63 { usize::MAX } else { 1usize << len };
        plan.n_random = STANDARD_DATASET_SIZE.min(space).saturating_sub(patterns);
        plan
    }

    pub fn validate(&self, len: usize) -> Result<()> {
        if let Some(&w) = self.window_sizes.iter().find(|&&w| w == 0 || w > len) {
            bail!(Validation, "window size {w} outside 1..={len}");
        }
        Ok(())
    }

    fn windows(&self, len: usize) -> Vec<usize> {
        if self.window_sizes.is_empty() {
            (1..=len).collect()
        } else {
            self.window_sizes.clone()
        }
    }
}

/// `n` distinct uniformly drawn configurations of length `len`.
pub fn sample_random(len: usize, n: usize, seed: u64) -> Result<Vec<Config>> {
    sample_random_excluding(len, n, seed, &BTreeSet::new())
}

/// As [`sample_random`], additionally rejecting members of `exclude`.
pub fn sample_random_excluding(len: usize, n: usize, seed: u64, exclude: &BTreeSet<Config>) -> Result<Vec<Config>> {
    if len == 0 || len > crate::config::MAX_LUTS {
        bail!(Config, "config length {len} outside 1..={}", crate::config::MAX_LUTS);
    }
    let space = if len >= 64 { u128::MAX } else { 1u128 << len };
    if (n as u128).saturating_add(exclude.len() as u128) > space {
        bail!(Capacity, "{n} distinct configs requested from a space of 2^{len} with {} excluded", exclude.len());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let c = Config::from_bits(rng.random::<u64>() & mask(len), len)?;
        if !exclude.contains(&c) && seen.insert(c) {
            out.push(c);
        }
    }
    Ok(out)
}

/// Deterministic structured configurations, corners first, duplicates removed.
pub fn sample_patterns(len: usize, plan: &SamplingPlan) -> Result<Vec<Config>> {
    plan.validate(len)?;
    let ones = Config::ones(len);
    let zeros = Config::zeros(len);
    let alternating = |phase: usize, lo: usize, hi: usize| -> u64 {
        (lo..hi).filter(|k| (k + phase).is_multiple_of(2)).fold(0u64, |acc, k| acc | 1 << k)
    };
    let background = alternating(0, 0, len);
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut push = |bits: u64| {
        let c = Config::from_bits(bits & mask(len), len).expect("masked");
        if seen.insert(c) {
            out.push(c);
        }
    };
    push(ones.bits());
    push(zeros.bits());
    for family in &plan.pattern_families {
        for w in plan.windows(len) {
            for offset in 0..=len - w {
                let window = mask(w) << offset;
                match family {
                    PatternFamily::RunsOfZeros => push(ones.bits() & !window),
                    PatternFamily::RunsOfOnes => push(window),
                    PatternFamily::Alternating => {
                        for phase in [0, 1] {
                            let fill = alternating(phase, offset, offset + w);
                            push(fill);
                            push((ones.bits() & !window) | fill);
                        }
                    }
                    PatternFamily::SlidingWindow => {
                        push(background | window);
                        push(background & !window);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Pattern configurations followed by random ones drawn outside the pattern
/// set, each tagged with its origin.
pub fn sample_plan(len: usize, plan: &SamplingPlan) -> Result<Vec<(Config, Provenance)>> {
    let patterns = if plan.pattern_families.is_empty() && plan.n_random > 0 { Vec::new() } else { sample_patterns(len, plan)? };
    let exclude: BTreeSet<Config> = patterns.iter().copied().collect();
    let random = sample_random_excluding(len, plan.n_random, plan.seed, &exclude)?;
    Ok(patterns.into_iter().map(|c| (c, Provenance::Pattern)).chain(random.into_iter().map(|c| (c, Provenance::Random))).collect())
}

/// Overall provenance of a sampled list.
pub fn provenance_of(origins: &[(Config, Provenance)]) -> Provenance {
    let pattern = origins.iter().any(|(_, p)| *p == Provenance::Pattern);
    let random = origins.iter().any(|(_, p)| *p == Provenance::Random);
    match (pattern, random) {
        (true, true) => Provenance::Combined,
        (false, true) => Provenance::Random,
        _ => Provenance::Pattern,
    }
}

/// Per-record note raised while validating ingested data.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RecordWarning {
    pub record: usize,
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dataset {
    pub netlist_name: String,
    pub removable_count: usize,
    pub provenance: Provenance,
    pub records: Vec<MetricsRecord>,
    pub warnings: Vec<RecordWarning>,
}

impl Dataset {
    pub fn new(netlist_name: &str, removable_count: usize, provenance: Provenance, records: Vec<MetricsRecord>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for r in &records {
            if r.config.len() != removable_count {
                bail!(Validation, "config {} has length {}, expected {removable_count}", r.config, r.config.len());
            }
            if !seen.insert(r.config) {
                bail!(Validation, "duplicate config {}", r.config);
            }
        }
        Ok(Self { netlist_name: netlist_name.to_string(), removable_count, provenance, records, warnings: Vec::new() })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn configs(&self) -> impl Iterator<Item = Config> + '_ {
        self.records.iter().map(|r| r.config)
    }

    pub fn column(&self, metric: Metric) -> Vec<f64> {
        self.records.iter().map(|r| metric.of(r)).collect()
    }

    /// LUT `i` usage as 0/1 values.
    pub fn lut_column(&self, i: usize) -> Vec<f64> {
        self.records.iter().map(|r| if r.config.get(i) { 1.0 } else { 0.0 }).collect()
    }

    /// Largest value of `metric`, 0 for an empty dataset.
    pub fn max_of(&self, metric: Metric) -> f64 {
        self.records.iter().map(|r| metric.of(r)).fold(0.0, f64::max)
    }

    /// Records at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            netlist_name: self.netlist_name.clone(),
            removable_count: self.removable_count,
            provenance: self.provenance,
            records: indices.iter().map(|&i| self.records[i]).collect(),
            warnings: Vec::new(),
        }
    }
}

/// Samples `plan` and characterises every configuration serially.
pub fn build_dataset(netlist: &Netlist, plan: &SamplingPlan) -> Result<Dataset> {
    let sampled = sample_plan(netlist.removable_count(), plan)?;
    let ch = Characterizer::new(netlist)?;
    let records = sampled.iter().map(|(c, _)| ch.record(c)).collect::<Result<Vec<_>>>()?;
    Dataset::new(netlist.name(), netlist.removable_count(), provenance_of(&sampled), records)
}

/// Checks an externally supplied record. Hard violations are errors; an
/// inconsistent `pdp`/`pdplut` product yields a warning message.
pub fn validate_record(record: &MetricsRecord, len: usize) -> Result<Option<String>> {
    if record.config.len() != len {
        bail!(Validation, "config length {} differs from L = {len}", record.config.len());
    }
    for m in Metric::ALL {
        let v = m.of(record);
        if !v.is_finite() || v < 0.0 {
            bail!(Validation, "{m} = {v} is not a finite non-negative value");
        }
    }
    if record.behav.prob_err > 100.0 {
        bail!(Validation, "prob_err = {} exceeds 100", record.behav.prob_err);
    }
    if record.ppa.luts > len as f64 {
        bail!(Validation, "luts = {} exceeds L = {len}", record.ppa.luts);
    }
    let p = &record.ppa;
    let close = |x: f64, y: f64| (x - y).abs() <= PRODUCT_TOLERANCE * x.abs().max(y.abs()).max(f64::MIN_POSITIVE);
    if !close(p.pdp, p.power * p.cpd) {
        return Ok(Some(alloc::format!("pdp {} differs from power*cpd {}", p.pdp, p.power * p.cpd)));
    }
    if !close(p.pdplut, p.pdp * p.luts) {
        return Ok(Some(alloc::format!("pdplut {} differs from pdp*luts {}", p.pdplut, p.pdp * p.luts)));
    }
    Ok(None)
}
