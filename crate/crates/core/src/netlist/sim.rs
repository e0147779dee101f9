// SPDX-License-Identifier: Apache-2.0

//! Bit-parallel evaluation: 64 operand patterns per machine word.

use alloc::vec;
use alloc::vec::Vec;

use super::{Cell, Net, Netlist};
use crate::config::Config;
use crate::error::{bail, Result};

/// Largest operand space (in bits of `a` and `b` together) that exhaustive
/// operations accept.
pub const MAX_OPERAND_BITS: u32 = 20;

const LANE_MASKS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

const LUT_DELAY: f64 = 1.0;
const CARRY_DELAY: f64 = 0.1;

#[derive(Debug, Clone, Copy)]
enum Op {
    Lut {
        ins: [u32; 6],
        k: u8,
        init: u64,
        init5: Option<u64>,
        o6: u32,
        o5: u32,
    },
    Carry {
        sel: u32,
        din: u32,
        cin: u32,
        sum: u32,
        cout: u32,
    },
    /// Carry cell whose owning LUT is removed: the sum follows carry-in.
    Pass {
        cin: u32,
        sum: u32,
    },
}

/// A netlist specialised to one configuration.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    netlist: &'a Netlist,
    config: Config,
    ops: Vec<Op>,
    slots: usize,
    out_slots: Vec<u32>,
}

/// Order in which an exhaustive sweep applies operand patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum InputOrder {
    /// Reflected-binary Gray code of the pattern index: one input bit
    /// changes per step.
    #[default]
    Gray,
    /// Plain binary counting.
    Natural,
}

/// Result of an exhaustive sweep over the operand space.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    /// Output for every operand pair, indexed by [`Netlist::pattern_index`].
    pub outputs: Vec<i64>,
    /// Output transitions summed over live cells, inputs applied in
    /// reflected-binary Gray-code order of the pattern index.
    pub toggles: u64,
}

/// Structural timing of the live logic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    /// Longest input-to-output path; 0 when every output is constant.
    pub critical_path: f64,
    pub live_luts: usize,
    pub live_carries: usize,
}

impl<'a> Evaluator<'a> {
    pub fn new(netlist: &'a Netlist, config: &Config) -> Result<Self> {
        netlist.config_len_check(config)?;
        let ni = netlist.inputs().len();
        let nl = netlist.luts().len();
        let slot = |net: Net| -> u32 {
            (match net {
                Net::Input(i) => i,
                Net::Const(false) => ni,
                Net::Const(true) => ni + 1,
                Net::Lut(i) => ni + 2 + 2 * i,
                Net::Lut5(i) => ni + 3 + 2 * i,
                Net::Sum(i) => ni + 2 + 2 * nl + 2 * i,
                Net::CarryOut(i) => ni + 3 + 2 * nl + 2 * i,
            }) as u32
        };
        let removed = |lut: usize| {
            let cell = &netlist.luts()[lut];
            cell.removable && !config.get(cell.id)
        };
        let mut ops = Vec::with_capacity(netlist.order().len());
        for cell in netlist.order() {
            match *cell {
                Cell::Lut(i) => {
                    if removed(i) {
                        continue;
                    }
                    let l = &netlist.luts()[i];
                    let mut ins = [0u32; 6];
                    for (dst, &net) in ins.iter_mut().zip(&l.inputs) {
                        *dst = slot(net);
                    }
                    ops.push(Op::Lut {
                        ins,
                        k: l.inputs.len() as u8,
                        init: l.init,
                        init5: l.init5,
                        o6: slot(Net::Lut(i)),
                        o5: slot(Net::Lut5(i)),
                    });
                }
                Cell::Carry(i) => {
                    let c = &netlist.carries()[i];
                    let dead = netlist.carry_owner(i).is_some_and(removed);
                    if dead {
                        ops.push(Op::Pass { cin: slot(c.cin), sum: slot(Net::Sum(i)) });
                    } else {
                        ops.push(Op::Carry {
                            sel: slot(c.sel),
                            din: slot(c.din),
                            cin: slot(c.cin),
                            sum: slot(Net::Sum(i)),
                            cout: slot(Net::CarryOut(i)),
                        });
                    }
                }
            }
        }
        Ok(Self {
            netlist,
            config: *config,
            ops,
            slots: ni + 2 + 2 * nl + 2 * netlist.carries().len(),
            out_slots: netlist.outputs().iter().map(|&n| slot(n)).collect(),
        })
    }

    pub fn netlist(&self) -> &Netlist {
        self.netlist
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    fn scratch(&self) -> Vec<u64> {
        let mut s = vec![0u64; self.slots];
        s[self.netlist.inputs().len() + 1] = u64::MAX;
        s
    }

    /// Evaluates every op for one word of patterns; input words must already
    /// be in `scratch[0..inputs]`.
    fn run(&self, scratch: &mut [u64]) {
        for op in &self.ops {
            match *op {
                Op::Lut { ins, k, init, init5, o6, o5 } => {
                    let mut words = [0u64; 6];
                    for j in 0..k as usize {
                        words[j] = scratch[ins[j] as usize];
                    }
                    let k = k as usize;
                    scratch[o6 as usize] = lut_word(init, &words[..k]);
                    if let Some(t5) = init5 {
                        scratch[o5 as usize] = lut_word(t5, &words[..k.min(5)]);
                    }
                }
                Op::Carry { sel, din, cin, sum, cout } => {
                    let (s, d, c) = (scratch[sel as usize], scratch[din as usize], scratch[cin as usize]);
                    scratch[sum as usize] = s ^ c;
                    scratch[cout as usize] = (s & c) | (!s & d);
                }
                Op::Pass { cin, sum } => scratch[sum as usize] = scratch[cin as usize],
            }
        }
    }

    fn lane_output(&self, scratch: &[u64], lane: u32) -> i64 {
        let mut bits = 0u64;
        for (j, &s) in self.out_slots.iter().enumerate() {
            bits |= (scratch[s as usize] >> lane & 1) << j;
        }
        self.netlist.decode_output(bits)
    }

    /// Output for one operand pair, one bit per slot.
    pub fn evaluate(&self, a: i64, b: i64) -> Result<i64> {
        let p = self.netlist.pattern_index(a, b)?;
        let ni = self.netlist.inputs().len();
        let mut s = vec![0u8; self.slots];
        s[ni + 1] = 1;
        for (i, v) in s[..ni].iter_mut().enumerate() {
            *v = (p >> i & 1) as u8;
        }
        for op in &self.ops {
            match *op {
                Op::Lut { ins, k, init, init5, o6, o5 } => {
                    let mut idx = 0usize;
                    for (j, &slot) in ins[..k as usize].iter().enumerate() {
                        idx |= (s[slot as usize] as usize) << j;
                    }
                    s[o6 as usize] = (init >> idx & 1) as u8;
                    if let Some(t5) = init5 {
                        s[o5 as usize] = (t5 >> (idx & 31) & 1) as u8;
                    }
                }
                Op::Carry { sel, din, cin, sum, cout } => {
                    let (x, d, c) = (s[sel as usize], s[din as usize], s[cin as usize]);
                    s[sum as usize] = x ^ c;
                    s[cout as usize] = if x == 1 { c } else { d };
                }
                Op::Pass { cin, sum } => s[sum as usize] = s[cin as usize],
            }
        }
        let mut bits = 0u64;
        for (j, &slot) in self.out_slots.iter().enumerate() {
            bits |= (s[slot as usize] as u64) << j;
        }
        Ok(self.netlist.decode_output(bits))
    }

    /// Outputs for a list of pattern indices, 64 per pass.
    pub fn evaluate_patterns(&self, patterns: &[usize]) -> Vec<i64> {
        let ni = self.netlist.inputs().len();
        let mut scratch = self.scratch();
        let mut out = Vec::with_capacity(patterns.len());
        for chunk in patterns.chunks(64) {
            for (i, w) in scratch[..ni].iter_mut().enumerate() {
                let mut word = 0u64;
                for (lane, &p) in chunk.iter().enumerate() {
                    word |= ((p >> i) as u64 & 1) << lane;
                }
                *w = word;
            }
            self.run(&mut scratch);
            out.extend((0..chunk.len() as u32).map(|lane| self.lane_output(&scratch, lane)));
        }
        out
    }

    /// Applies every operand pair in Gray-code order, collecting outputs and
    /// (optionally) toggle counts of live cell outputs.
    pub fn sweep(&self, count_toggles: bool) -> Result<Sweep> {
        self.sweep_in(InputOrder::Gray, count_toggles)
    }

    /// [`Evaluator::sweep`] with an explicit input ordering.
    pub fn sweep_in(&self, order: InputOrder, count_toggles: bool) -> Result<Sweep> {
        let (m, n) = self.netlist.widths();
        if m + n > MAX_OPERAND_BITS {
            bail!(Capacity, "operand space 2^{} exceeds 2^{MAX_OPERAND_BITS}", m + n);
        }
        let ni = self.netlist.inputs().len();
        let total = 1usize << (m + n);
        let words = total.div_ceil(64);
        let counted: Vec<u32> = if count_toggles {
            self.ops
                .iter()
                .flat_map(|op| match *op {
                    Op::Lut { o6, o5, init5, .. } => {
                        let mut v = vec![o6];
                        if init5.is_some() {
                            v.push(o5);
                        }
                        v
                    }
                    Op::Carry { sum, cout, .. } => vec![sum, cout],
                    Op::Pass { .. } => vec![],
                })
                .collect()
        } else {
            Vec::new()
        };
        let mut prev = vec![0u64; counted.len()];
        let mut toggles = 0u64;
        let mut outputs = vec![0i64; total];
        let mut scratch = self.scratch();
        let natural = |i: usize, w: usize| -> u64 {
            if i >= ni {
                0
            } else if i < 6 {
                LANE_MASKS[i]
            } else if w >> (i - 6) & 1 == 1 {
                u64::MAX
            } else {
                0
            }
        };
        for w in 0..words {
            for i in 0..ni {
                scratch[i] = match order {
                    InputOrder::Gray => natural(i, w) ^ natural(i + 1, w),
                    InputOrder::Natural => natural(i, w),
                };
            }
            self.run(&mut scratch);
            let valid = (total - 64 * w).min(64);
            let valid_mask = if valid == 64 { u64::MAX } else { (1u64 << valid) - 1 };
            for (k, &s) in counted.iter().enumerate() {
                let x = scratch[s as usize];
                let before = if w == 0 { x & 1 } else { prev[k] };
                toggles += ((x ^ (x << 1 | before)) & valid_mask).count_ones() as u64;
                prev[k] = x >> 63;
            }
            for lane in 0..valid {
                let p = 64 * w + lane;
                let index = match order {
                    InputOrder::Gray => p ^ (p >> 1),
                    InputOrder::Natural => p,
                };
                outputs[index] = self.lane_output(&scratch, lane as u32);
            }
        }
        Ok(Sweep { outputs, toggles })
    }

    /// Longest path through live, non-constant logic (LUT = 1.0, carry = 0.1).
    pub fn timing(&self) -> Timing {
        let ni = self.netlist.inputs().len();
        let mut arrival: Vec<Option<f64>> = vec![None; self.slots];
        for a in arrival.iter_mut().take(ni) {
            *a = Some(0.0);
        }
        let latest = |arrival: &[Option<f64>], slots: &[u32]| -> Option<f64> {
            slots.iter().filter_map(|&s| arrival[s as usize]).fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.max(t))))
        };
        let (mut live_luts, mut live_carries) = (0, 0);
        for op in &self.ops {
            match *op {
                Op::Lut { ins, k, o6, o5, init5, .. } => {
                    let t = latest(&arrival, &ins[..k as usize]).map(|t| t + LUT_DELAY);
                    arrival[o6 as usize] = t;
                    if init5.is_some() {
                        arrival[o5 as usize] = t;
                    }
                    if t.is_some() {
                        live_luts += 1;
                    }
                }
                Op::Carry { sel, din, cin, sum, cout } => {
                    let t = latest(&arrival, &[sel, din, cin]).map(|t| t + CARRY_DELAY);
                    arrival[sum as usize] = t;
                    arrival[cout as usize] = t;
                    if t.is_some() {
                        live_carries += 1;
                    }
                }
                Op::Pass { cin, sum } => arrival[sum as usize] = arrival[cin as usize],
            }
        }
        let critical_path = latest(&arrival, &self.out_slots).unwrap_or(0.0);
        Timing { critical_path, live_luts, live_carries }
    }

    /// Per-net values for one word of pattern indices `64*word .. 64*word+63`
    /// (natural order). Removed and constant nets read as constant words.
    pub fn net_words(&self, word: usize) -> impl Fn(Net) -> u64 + '_ {
        let ni = self.netlist.inputs().len();
        let mut scratch = self.scratch();
        for (i, w) in scratch[..ni].iter_mut().enumerate() {
            *w = if i < 6 {
                LANE_MASKS[i]
            } else if word >> (i - 6) & 1 == 1 {
                u64::MAX
            } else {
                0
            };
        }
        self.run(&mut scratch);
        let nl = self.netlist.luts().len();
        move |net| {
            let s = match net {
                Net::Input(i) => i,
                Net::Const(false) => ni,
                Net::Const(true) => ni + 1,
                Net::Lut(i) => ni + 2 + 2 * i,
                Net::Lut5(i) => ni + 3 + 2 * i,
                Net::Sum(i) => ni + 2 + 2 * nl + 2 * i,
                Net::CarryOut(i) => ni + 3 + 2 * nl + 2 * i,
            };
            scratch[s]
        }
    }
}

/// Shannon expansion of a truth table over input words.
fn lut_word(init: u64, ins: &[u64]) -> u64 {
    match ins.len() {
        0 => {
            if init & 1 == 1 {
                u64::MAX
            } else {
                0
            }
        }
        k => {
            let half = 1u32 << (k - 1);
            let lo_mask = if half == 64 { u64::MAX } else { (1u64 << half) - 1 };
            let lo_init = init & lo_mask;
            let hi_init = if half == 64 { 0 } else { init >> half };
            let x = ins[k - 1];
            if lo_init == hi_init {
                return lut_word(lo_init, &ins[..k - 1]);
            }
            let lo = lut_word(lo_init, &ins[..k - 1]);
            let hi = lut_word(hi_init, &ins[..k - 1]);
            (lo & !x) | (hi & x)
        }
    }
}

/// Output of the approximate circuit for one operand pair.
pub fn evaluate(netlist: &Netlist, config: &Config, operands: (i64, i64)) -> Result<i64> {
    Evaluator::new(netlist, config)?.evaluate(operands.0, operands.1)
}

/// Dense table of outputs over the operand space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductTable {
    widths: (u32, u32),
    signed: bool,
    values: Vec<i64>,
}

impl ProductTable {
    pub fn widths(&self) -> (u32, u32) {
        self.widths
    }

    pub fn signed(&self) -> bool {
        self.signed
    }

    /// Entries in pattern-index order.
    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn from_values(widths: (u32, u32), signed: bool, values: Vec<i64>) -> Result<Self> {
        if values.len() != 1usize << (widths.0 + widths.1) {
            bail!(Validation, "table has {} entries for widths {:?}", values.len(), widths);
        }
        Ok(Self { widths, signed, values })
    }

    pub fn get(&self, a: i64, b: i64) -> Result<i64> {
        let (m, n) = self.widths;
        let range = |w: u32| {
            if self.signed {
                (-(1i64 << (w - 1)), (1i64 << (w - 1)) - 1)
            } else {
                (0, (1i64 << w) - 1)
            }
        };
        let ((alo, ahi), (blo, bhi)) = (range(m), range(n));
        if a < alo || a > ahi || b < blo || b > bhi {
            bail!(Domain, "operands ({a}, {b}) outside the table range");
        }
        let am = (a as u64) & ((1u64 << m) - 1);
        let bm = (b as u64) & ((1u64 << n) - 1);
        Ok(self.values[(am | bm << m) as usize])
    }

    /// Lookup for signed 8-bit operands.
    #[inline]
    pub fn mul_i8(&self, a: i8, b: i8) -> i64 {
        debug_assert!(self.widths == (8, 8) && self.signed);
        self.values[(a as u8 as usize) | (b as u8 as usize) << 8]
    }
}

/// Output table of a configuration over the whole operand space.
pub fn product_table(netlist: &Netlist, config: &Config) -> Result<ProductTable> {
    let sweep = Evaluator::new(netlist, config)?.sweep(false)?;
    Ok(ProductTable { widths: netlist.widths(), signed: netlist.signed(), values: sweep.outputs })
}
