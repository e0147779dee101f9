// SPDX-License-Identifier: Apache-2.0

//! Built-in accurate operator generators.
//!
//! Multipliers use radix-4 Booth rows. Every partial-product bit is one
//! removable dual-output LUT (O6 = propagate, O5 = generate) on a carry chain
//! that adds the row's negation bit; an extra carry cell recovers the row's
//! sign bit. Rows are summed by ripple adders built from non-removable LUTs.
//! Removal order is row by row, least significant position first, which is a
//! topological order of the removable LUTs.
//!
//! A signed `n x n` multiplier has `n/2` rows of `n + 1` LUTs, so
//! `L = n(n+1)/2`: 10 for 4x4 and 36 for 8x8. Nothing in the netlist is a
//! constant source, so removing every LUT yields 0 for every operand pair.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{CarryCell, LutCell, Net, Netlist};
use crate::error::{bail, Result};

/// Boolean function of the signals visible through a lookup.
type TruthFn = dyn Fn(&dyn Fn(Net) -> bool) -> bool;

struct Builder {
    luts: Vec<LutCell>,
    carries: Vec<CarryCell>,
    next_removable: usize,
    next_fixed: usize,
}

impl Builder {
    fn new(removable_count: usize) -> Self {
        Self { luts: Vec::new(), carries: Vec::new(), next_removable: 0, next_fixed: removable_count }
    }

    /// Adds a LUT over the distinct non-constant nets of `signals`. The
    /// closures see each signal's value through the lookup they receive.
    fn lut(&mut self, signals: &[Net], removable: bool, o6: impl Fn(&dyn Fn(Net) -> bool) -> bool, o5: Option<&TruthFn>) -> usize {
        let mut inputs: Vec<Net> = Vec::new();
        for &s in signals {
            if !matches!(s, Net::Const(_)) && !inputs.contains(&s) {
                inputs.push(s);
            }
        }
        assert!(!inputs.is_empty() && inputs.len() <= 5, "generator LUT arity out of range");
        let k = inputs.len();
        let mut init = 0u64;
        let mut init5 = 0u64;
        for p in 0..1u64 << k {
            let value = |net: Net| match net {
                Net::Const(b) => b,
                other => {
                    let pos = inputs.iter().position(|&n| n == other).expect("signal not wired");
                    p >> pos & 1 == 1
                }
            };
            if o6(&value) {
                init |= 1 << p;
            }
            if let Some(f) = o5 {
                if f(&value) {
                    init5 |= 1 << p;
                }
            }
        }
        let id = if removable {
            self.next_removable += 1;
            self.next_removable - 1
        } else {
            self.next_fixed += 1;
            self.next_fixed - 1
        };
        self.luts.push(LutCell { id, inputs, init, init5: o5.map(|_| init5), removable });
        self.luts.len() - 1
    }

    fn carry(&mut self, sel: Net, din: Net, cin: Net) -> usize {
        self.carries.push(CarryCell { sel, din, cin });
        self.carries.len() - 1
    }

    /// Ripple adder of two equal-length bit vectors; returns the sum bits.
    fn ripple_add(&mut self, x: &[Net], y: &[Net], removable: bool) -> (Vec<Net>, Net) {
        let mut cin = Net::Const(false);
        let mut sums = Vec::with_capacity(x.len());
        for (&xi, &yi) in x.iter().zip(y) {
            let l = self.lut(&[xi, yi], removable, move |v| v(xi) ^ v(yi), Some(&move |v: &dyn Fn(Net) -> bool| v(xi)));
            let c = self.carry(Net::Lut(l), Net::Lut5(l), cin);
            sums.push(Net::Sum(c));
            cin = Net::CarryOut(c);
        }
        (sums, cin)
    }
}

fn operand_names(m: u32, n: u32) -> Vec<String> {
    (0..m).map(|i| format!("a{i}")).chain((0..n).map(|i| format!("b{i}"))).collect()
}

/// Accurate `width x width` multiplier; `width` in `2..=8`.
pub fn build_multiplier(width: u32, signed: bool) -> Result<Netlist> {
    if !(2..=8).contains(&width) {
        bail!(Config, "multiplier width {width} unsupported, expected 2..=8");
    }
    booth_multiplier(width, width, signed)
}

fn booth_multiplier(m: u32, n: u32, signed: bool) -> Result<Netlist> {
    let a_bit = |j: i64| -> Net {
        if j < 0 {
            Net::Const(false)
        } else if j < m as i64 {
            Net::Input(j as usize)
        } else if signed {
            Net::Input(m as usize - 1)
        } else {
            Net::Const(false)
        }
    };
    let b_bit = |j: i64| -> Net {
        if j < 0 {
            Net::Const(false)
        } else if j < n as i64 {
            Net::Input((m as i64 + j) as usize)
        } else if signed {
            Net::Input((m + n) as usize - 1)
        } else {
            Net::Const(false)
        }
    };
    // Operand widths as two's complement values; B is padded to an even width.
    let wa = if signed { m } else { m + 1 } as i64;
    let wb = {
        let w = if signed { n } else { n + 1 };
        w.div_ceil(2) * 2
    } as i64;
    let rows = wb / 2;
    let out_width = (m + n) as usize;
    let removable_count = (rows * (wa + 1)) as usize;

    let mut b = Builder::new(removable_count);
    let mut row_bits: Vec<Vec<Net>> = Vec::new();
    for k in 0..rows {
        let (b2, b1, b0) = (b_bit(2 * k + 1), b_bit(2 * k), b_bit(2 * k - 1));
        let mut cin = Net::Const(false);
        let mut bits = Vec::new();
        let mut last_lut = 0;
        for i in 0..=wa {
            let (ai, aim1) = (a_bit(i), a_bit(i - 1));
            let x = move |v: &dyn Fn(Net) -> bool| {
                let (q2, q1, q0) = (v(b2), v(b1), v(b0));
                let one = q1 ^ q0;
                let two = (q2 && !q1 && !q0) || (!q2 && q1 && q0);
                let neg = q2 && !(q1 && q0);
                ((one && v(ai)) || (two && v(aim1))) ^ neg
            };
            let first = i == 0;
            let l = b.lut(
                &[ai, aim1, b2, b1, b0],
                true,
                move |v| {
                    let neg = v(b2) && !(v(b1) && v(b0));
                    if first {
                        x(v) ^ neg
                    } else {
                        x(v)
                    }
                },
                Some(&x),
            );
            let c = b.carry(Net::Lut(l), Net::Lut5(l), cin);
            bits.push(Net::Sum(c));
            cin = Net::CarryOut(c);
            last_lut = l;
        }
        let sign = b.carry(Net::Lut(last_lut), Net::Const(false), cin);
        bits.push(Net::Sum(sign));
        bits.truncate(out_width - 2 * k as usize);
        row_bits.push(bits);
    }

    let extend = |bits: &[Net], j: usize| -> Net { bits.get(j).copied().unwrap_or(*bits.last().unwrap()) };
    let mut acc: Vec<Net> = (0..out_width).map(|j| extend(&row_bits[0], j)).collect();
    for (k, row) in row_bits.iter().enumerate().skip(1) {
        let lo = 2 * k;
        let y: Vec<Net> = (lo..out_width).map(|j| extend(row, j - lo)).collect();
        let (sums, _) = b.ripple_add(&acc[lo..], &y, false);
        acc.splice(lo.., sums);
    }

    debug_assert_eq!(b.next_removable, removable_count);
    Netlist::new(format!("mul{m}x{n}{}", if signed { 's' } else { 'u' }), (m, n), signed, operand_names(m, n), acc, b.luts, b.carries)
}

/// Accurate unsigned ripple-carry adder; `width` in `2..=16`, `L = width`.
pub fn build_adder(width: u32) -> Result<Netlist> {
    if !(2..=16).contains(&width) {
        bail!(Config, "adder width {width} unsupported, expected 2..=16");
    }
    let w = width as usize;
    let mut b = Builder::new(w);
    let x: Vec<Net> = (0..w).map(Net::Input).collect();
    let y: Vec<Net> = (w..2 * w).map(Net::Input).collect();
    let (mut outputs, cout) = b.ripple_add(&x, &y, true);
    outputs.push(cout);
    Netlist::new(format!("add{width}u"), (width, width), false, operand_names(width, width), outputs, b.luts, b.carries)
}
