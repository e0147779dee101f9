// SPDX-License-Identifier: Apache-2.0

//! LUT + carry-chain netlists of arithmetic operators under selective LUT removal.
//!
//! A [`Netlist`] is a DAG of dual-output [`LutCell`]s and [`CarryCell`]s.
//! Removable LUTs carry a removal index `0..L`; a [`Config`] bit `l_i = 0`
//! removes LUT `i`. A removed LUT drives constant 0 on both outputs and the
//! carry cell it feeds loses its propagate and generate inputs, so its sum
//! becomes `carry_in` and its carry-out becomes 0.

mod build;
mod sim;

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

pub use build::{build_adder, build_multiplier};
pub use sim::{evaluate, product_table, Evaluator, InputOrder, ProductTable, Sweep, Timing, MAX_OPERAND_BITS};

use crate::config::{Config, MAX_LUTS};
use crate::error::{bail, Result};

/// Reference to a net.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Net {
    Const(bool),
    /// Primary input by position.
    Input(usize),
    /// Primary (O6) output of the LUT at this position in [`Netlist::luts`].
    Lut(usize),
    /// Secondary (O5) output of the LUT at this position.
    Lut5(usize),
    /// Sum output of the carry cell at this position in [`Netlist::carries`].
    Sum(usize),
    /// Carry-out of the carry cell at this position.
    CarryOut(usize),
}

/// A LUT with up to six inputs and an optional O5-style second output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LutCell {
    /// Removal index for removable LUTs (`0..L`), otherwise any unique id `>= L`.
    pub id: usize,
    pub inputs: Vec<Net>,
    /// Bit `k` is the output for input pattern `k` (input 0 is the LSB of `k`).
    pub init: u64,
    /// Truth table of the second output over the first `min(|inputs|, 5)` inputs.
    pub init5: Option<u64>,
    pub removable: bool,
}

/// One mux/xor stage of a carry chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CarryCell {
    /// Propagate.
    pub sel: Net,
    /// Generate, taken when `sel` is 0.
    pub din: Net,
    pub cin: Net,
}

/// Arithmetic function realised by an accurate netlist.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    Multiply,
    Add,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Cell {
    Lut(usize),
    Carry(usize),
}

#[derive(Debug, Clone)]
pub struct Netlist {
    name: String,
    widths: (u32, u32),
    signed: bool,
    inputs: Vec<String>,
    outputs: Vec<Net>,
    luts: Vec<LutCell>,
    carries: Vec<CarryCell>,
    removable_count: usize,
    order: Vec<Cell>,
    carry_owner: Vec<Option<usize>>,
    removal_to_lut: Vec<usize>,
}

impl Netlist {
    /// Validates structure and computes the evaluation order.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        widths: (u32, u32),
        signed: bool,
        inputs: Vec<String>,
        outputs: Vec<Net>,
        luts: Vec<LutCell>,
        carries: Vec<CarryCell>,
    ) -> Result<Self> {
        let name = name.into();
        let (m, n) = widths;
        if m == 0 || n == 0 || (m + n) as usize != inputs.len() {
            bail!(Config, "widths {m}x{n} do not match {} primary inputs", inputs.len());
        }
        if m + n > 40 {
            bail!(Capacity, "operand widths {m}x{n} too large");
        }
        if outputs.is_empty() || outputs.len() > 63 {
            bail!(Config, "netlist must have 1..=63 outputs, got {}", outputs.len());
        }

        let check = |net: Net, what: &str| -> Result<()> {
            let ok = match net {
                Net::Const(_) => true,
                Net::Input(i) => i < inputs.len(),
                Net::Lut(i) => i < luts.len(),
                Net::Lut5(i) => i < luts.len() && luts[i].init5.is_some(),
                Net::Sum(i) | Net::CarryOut(i) => i < carries.len(),
            };
            if ok {
                Ok(())
            } else {
                bail!(Config, "{what} references unknown net {net:?}")
            }
        };

        let mut removal_slots = vec![usize::MAX; luts.len()];
        let mut ids = alloc::collections::BTreeSet::new();
        for (idx, lut) in luts.iter().enumerate() {
            let k = lut.inputs.len();
            if !(1..=6).contains(&k) {
                bail!(Config, "LUT {} has {k} inputs, expected 1..=6", lut.id);
            }
            for &net in &lut.inputs {
                check(net, &format!("LUT {}", lut.id))?;
            }
            if k < 6 && lut.init >> (1u32 << k) != 0 {
                bail!(Validation, "LUT {} init has bits above 2^{k}", lut.id);
            }
            if let Some(init5) = lut.init5 {
                let k5 = k.min(5);
                if init5 >> (1u32 << k5) != 0 {
                    bail!(Validation, "LUT {} init5 has bits above 2^{k5}", lut.id);
                }
            }
            if !ids.insert(lut.id) {
                bail!(Config, "duplicate LUT id {}", lut.id);
            }
            if lut.removable {
                if lut.id >= luts.len() {
                    bail!(Config, "removable LUT id {} out of range", lut.id);
                }
                removal_slots[lut.id] = idx;
            }
        }
        let removable_count = luts.iter().filter(|l| l.removable).count();
        if removable_count > MAX_LUTS {
            bail!(Capacity, "{removable_count} removable LUTs exceed {MAX_LUTS}");
        }
        let removal_to_lut: Vec<usize> = removal_slots[..removable_count].to_vec();
        if removal_to_lut.contains(&usize::MAX) {
            bail!(Config, "removable LUT ids are not exactly 0..{removable_count}");
        }
        if let Some(l) = luts.iter().find(|l| !l.removable && l.id < removable_count) {
            bail!(Config, "non-removable LUT uses id {} inside the removal range", l.id);
        }

        for (i, c) in carries.iter().enumerate() {
            check(c.sel, &format!("carry {i}"))?;
            check(c.din, &format!("carry {i}"))?;
            check(c.cin, &format!("carry {i}"))?;
            if !matches!(c.cin, Net::Const(_) | Net::CarryOut(_)) {
                bail!(Config, "carry {i} carry-in must be a constant or a carry-out");
            }
        }
        for &o in &outputs {
            check(o, "primary output")?;
        }

        let carry_owner = carries
            .iter()
            .map(|c| match (c.sel, c.din) {
                (Net::Lut(j), _) => Some(j),
                (_, Net::Lut(j) | Net::Lut5(j)) => Some(j),
                _ => None,
            })
            .collect();

        let order = topological_order(&luts, &carries)?;
        Ok(Self { name, widths, signed, inputs, outputs, luts, carries, removable_count, order, carry_owner, removal_to_lut })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Operand bit widths `(m, n)`.
    pub fn widths(&self) -> (u32, u32) {
        self.widths
    }

    pub fn signed(&self) -> bool {
        self.signed
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    /// Output nets, least significant first.
    pub fn outputs(&self) -> &[Net] {
        &self.outputs
    }

    pub fn luts(&self) -> &[LutCell] {
        &self.luts
    }

    pub fn carries(&self) -> &[CarryCell] {
        &self.carries
    }

    /// `L`, the number of removable LUTs.
    pub fn removable_count(&self) -> usize {
        self.removable_count
    }

    /// Position in [`Netlist::luts`] of the LUT with removal index `i`.
    pub fn lut_for_removal_index(&self, i: usize) -> usize {
        self.removal_to_lut[i]
    }

    /// The LUT whose removal disables carry cell `i`, if any.
    pub fn carry_owner(&self, i: usize) -> Option<usize> {
        self.carry_owner[i]
    }

    pub(crate) fn order(&self) -> &[Cell] {
        &self.order
    }

    /// Operator recognised from the name prefix (`mul…` or `add…`).
    pub fn operator(&self) -> Option<Operator> {
        if self.name.starts_with("mul") {
            Some(Operator::Multiply)
        } else if self.name.starts_with("add") {
            Some(Operator::Add)
        } else {
            None
        }
    }

    /// Inclusive operand ranges for `a` and `b`.
    pub fn operand_ranges(&self) -> ((i64, i64), (i64, i64)) {
        let r = |w: u32| {
            if self.signed {
                (-(1i64 << (w - 1)), (1i64 << (w - 1)) - 1)
            } else {
                (0, (1i64 << w) - 1)
            }
        };
        (r(self.widths.0), r(self.widths.1))
    }

    /// Number of operand pairs, `2^(m+n)`.
    pub fn operand_space(&self) -> usize {
        1usize << (self.widths.0 + self.widths.1)
    }

    /// Dense pattern index of an operand pair: the raw bits of `a` in the low
    /// `m` positions and the raw bits of `b` above them.
    pub fn pattern_index(&self, a: i64, b: i64) -> Result<usize> {
        let ((alo, ahi), (blo, bhi)) = self.operand_ranges();
        if a < alo || a > ahi || b < blo || b > bhi {
            bail!(Domain, "operands ({a}, {b}) outside [{alo},{ahi}]x[{blo},{bhi}]");
        }
        let (m, n) = self.widths;
        let am = (a as u64) & ((1u64 << m) - 1);
        let bm = (b as u64) & ((1u64 << n) - 1);
        Ok((am | bm << m) as usize)
    }

    /// Operand pair of a pattern index.
    pub fn operands_of(&self, pattern: usize) -> (i64, i64) {
        let (m, n) = self.widths;
        let a = (pattern as u64) & ((1u64 << m) - 1);
        let b = (pattern as u64 >> m) & ((1u64 << n) - 1);
        if self.signed {
            (sign_extend(a, m), sign_extend(b, n))
        } else {
            (a as i64, b as i64)
        }
    }

    /// Interprets output bits (LSB first) as the operator result.
    pub fn decode_output(&self, bits: u64) -> i64 {
        let w = self.outputs.len() as u32;
        if self.signed {
            sign_extend(bits, w)
        } else {
            bits as i64
        }
    }

    /// Exact result of the operator this netlist implements.
    pub fn exact(&self, a: i64, b: i64) -> Option<i64> {
        self.operator().map(|op| match op {
            Operator::Multiply => a * b,
            Operator::Add => a + b,
        })
    }

    /// Forward cone of a removal index: every net whose value can depend on
    /// that LUT, including the LUT's own outputs.
    pub fn fanout_cone(&self, removal_index: usize) -> alloc::collections::BTreeSet<Net> {
        let root = self.removal_to_lut[removal_index];
        let mut cone = alloc::collections::BTreeSet::new();
        cone.insert(Net::Lut(root));
        if self.luts[root].init5.is_some() {
            cone.insert(Net::Lut5(root));
        }
        for cell in &self.order {
            match *cell {
                Cell::Lut(i) => {
                    if self.luts[i].inputs.iter().any(|n| cone.contains(n)) {
                        cone.insert(Net::Lut(i));
                        if self.luts[i].init5.is_some() {
                            cone.insert(Net::Lut5(i));
                        }
                    }
                }
                Cell::Carry(i) => {
                    let c = &self.carries[i];
                    let owned = self.carry_owner[i] == Some(root);
                    if owned || [c.sel, c.din, c.cin].iter().any(|n| cone.contains(n)) {
                        cone.insert(Net::Sum(i));
                        cone.insert(Net::CarryOut(i));
                    }
                }
            }
        }
        cone
    }

    pub fn config_len_check(&self, config: &Config) -> Result<()> {
        if config.len() != self.removable_count {
            bail!(Validation, "config length {} does not match removable count {}", config.len(), self.removable_count);
        }
        Ok(())
    }
}

fn sign_extend(bits: u64, width: u32) -> i64 {
    let shift = 64 - width;
    ((bits << shift) as i64) >> shift
}

fn topological_order(luts: &[LutCell], carries: &[CarryCell]) -> Result<Vec<Cell>> {
    let nl = luts.len();
    let total = nl + carries.len();
    let node_of = |net: Net| -> Option<usize> {
        match net {
            Net::Lut(i) | Net::Lut5(i) => Some(i),
            Net::Sum(i) | Net::CarryOut(i) => Some(nl + i),
            _ => None,
        }
    };
    let mut indegree = vec![0usize; total];
    let mut fanout: Vec<Vec<usize>> = vec![Vec::new(); total];
    let mut add_edge = |from: Option<usize>, to: usize, indegree: &mut Vec<usize>| {
        if let Some(f) = from {
            fanout[f].push(to);
            indegree[to] += 1;
        }
    };
    for (i, l) in luts.iter().enumerate() {
        for &n in &l.inputs {
            add_edge(node_of(n), i, &mut indegree);
        }
    }
    for (i, c) in carries.iter().enumerate() {
        for n in [c.sel, c.din, c.cin] {
            add_edge(node_of(n), nl + i, &mut indegree);
        }
    }
    // Kahn with a FIFO seeded in declaration order keeps the order stable.
    let mut queue: VecDeque<usize> = (0..total).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(total);
    while let Some(node) = queue.pop_front() {
        order.push(if node < nl { Cell::Lut(node) } else { Cell::Carry(node - nl) });
        for &next in &fanout[node] {
            indegree[next] -= 1;
            if indegree[next] == 0 {
                queue.push_back(next);
            }
        }
    }
    if order.len() != total {
        bail!(Config, "netlist contains a combinational cycle");
    }
    Ok(order)
}
