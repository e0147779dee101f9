// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use std::collections::HashMap;

use axomap_core::netlist::{Net, Netlist};
use axomap_core::Config;

/// Scalar, memoised interpreter over the netlist structure. Shares no code
/// with the compiled bit-parallel evaluator.
pub fn naive_eval(nl: &Netlist, config: &Config, a: i64, b: i64) -> i64 {
    let (m, n) = nl.widths();
    let am = (a as u64) & ((1 << m) - 1);
    let bm = (b as u64) & ((1 << n) - 1);
    let pattern = am | bm << m;
    let mut memo: HashMap<Net, bool> = HashMap::new();
    let mut bits = 0u64;
    for (j, &o) in nl.outputs().iter().enumerate() {
        if value(nl, config, pattern, o, &mut memo) {
            bits |= 1 << j;
        }
    }
    let w = nl.outputs().len() as u32;
    if nl.signed() {
        ((bits << (64 - w)) as i64) >> (64 - w)
    } else {
        bits as i64
    }
}

fn lut_removed(nl: &Netlist, config: &Config, idx: usize) -> bool {
    let l = &nl.luts()[idx];
    l.removable && !config.get(l.id)
}

fn value(nl: &Netlist, config: &Config, pattern: u64, net: Net, memo: &mut HashMap<Net, bool>) -> bool {
    if let Some(&v) = memo.get(&net) {
        return v;
    }
    let v = match net {
        Net::Const(b) => b,
        Net::Input(i) => pattern >> i & 1 == 1,
        Net::Lut(i) | Net::Lut5(i) => {
            if lut_removed(nl, config, i) {
                false
            } else {
                let l = &nl.luts()[i];
                let take = if matches!(net, Net::Lut5(_)) { l.inputs.len().min(5) } else { l.inputs.len() };
                let mut idx = 0usize;
                for (k, &inp) in l.inputs.iter().take(take).enumerate() {
                    if value(nl, config, pattern, inp, memo) {
                        idx |= 1 << k;
                    }
                }
                let table = if matches!(net, Net::Lut5(_)) { l.init5.unwrap() } else { l.init };
                table >> idx & 1 == 1
            }
        }
        Net::Sum(i) | Net::CarryOut(i) => {
            let c = nl.carries()[i];
            let owner = match (c.sel, c.din) {
                (Net::Lut(j), _) => Some(j),
                (_, Net::Lut(j) | Net::Lut5(j)) => Some(j),
                _ => None,
            };
            let dead = owner.is_some_and(|j| lut_removed(nl, config, j));
            let (s, d) =
                if dead { (false, false) } else { (value(nl, config, pattern, c.sel, memo), value(nl, config, pattern, c.din, memo)) };
            let ci = value(nl, config, pattern, c.cin, memo);
            if matches!(net, Net::Sum(_)) {
                s ^ ci
            } else if s {
                ci
            } else {
                d
            }
        }
    };
    memo.insert(net, v);
    v
}

/// SplitMix64, used to draw test inputs independently of the library RNG.
pub struct TestRng(pub u64);

impl TestRng {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn config(&mut self, len: usize) -> Config {
        let mask = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
        Config::from_bits(self.next_u64() & mask, len).unwrap()
    }
}

/// Characterised 4x4 signed multiplier over all 1024 configurations.
pub fn full_4x4() -> (Netlist, axomap_core::dataset::Dataset) {
    use axomap_core::dataset::{build_dataset, SamplingPlan};
    let nl = axomap_core::netlist::build_multiplier(4, true).unwrap();
    let ds = build_dataset(&nl, &SamplingPlan::standard(10, 0)).unwrap();
    assert_eq!(ds.len(), 1024);
    (nl, ds)
}

/// All `2^len` configurations in bit-value order.
pub fn all_configs(len: usize) -> Vec<Config> {
    (0..1u64 << len).map(|b| Config::from_bits(b, len).unwrap()).collect()
}

/// Dataset over every length-`len` configuration whose `avg_abs_err`
/// column holds `f(config)`.
pub fn synthetic(len: usize, f: impl Fn(&Config) -> f64) -> axomap_core::dataset::Dataset {
    use axomap_core::charac::{BehavMetrics, MetricsRecord, PpaMetrics, Source};
    use axomap_core::dataset::{Dataset, Provenance};
    let records = all_configs(len)
        .into_iter()
        .map(|config| MetricsRecord {
            config,
            behav: BehavMetrics { avg_abs_err: f(&config), ..Default::default() },
            ppa: PpaMetrics::from_parts(1.0, 1.0, config.count_ones() as f64),
            source: Source::Ingested,
        })
        .collect();
    Dataset::new("synthetic", len, Provenance::Ingested, records).unwrap()
}
