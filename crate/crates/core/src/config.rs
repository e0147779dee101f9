// SPDX-License-Identifier: Apache-2.0

//! LUT-usage vectors.

use alloc::string::String;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use crate::error::{bail, Error, Result};

/// Largest supported removable-LUT count.
pub const MAX_LUTS: usize = 64;

/// Binary LUT-usage vector `l_0 .. l_{L-1}`; bit `i` set means LUT `i` is kept.
///
/// Ordering is lexicographic over the text form, where index 0 is the
/// leftmost character.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Config {
    bits: u64,
    len: u8,
}

impl Config {
    pub fn from_bits(bits: u64, len: usize) -> Result<Self> {
        if len == 0 || len > MAX_LUTS {
            bail!(Config, "config length {len} outside 1..={MAX_LUTS}");
        }
        if len < 64 && bits >> len != 0 {
            bail!(Validation, "bits above position {len} are set");
        }
        Ok(Self { bits, len: len as u8 })
    }

    pub fn ones(len: usize) -> Self {
        assert!((1..=MAX_LUTS).contains(&len));
        Self { bits: mask(len), len: len as u8 }
    }

    pub fn zeros(len: usize) -> Self {
        assert!((1..=MAX_LUTS).contains(&len));
        Self { bits: 0, len: len as u8 }
    }

    pub fn from_slice(values: &[bool]) -> Result<Self> {
        let mut bits = 0u64;
        for (i, &v) in values.iter().enumerate() {
            if v {
                bits |= 1 << i;
            }
        }
        Self::from_bits(bits, values.len())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn bits(&self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len());
        self.bits >> i & 1 == 1
    }

    #[inline]
    pub fn with(mut self, i: usize, value: bool) -> Self {
        debug_assert!(i < self.len());
        if value {
            self.bits |= 1 << i;
        } else {
            self.bits &= !(1 << i);
        }
        self
    }

    #[inline]
    pub fn flipped(mut self, i: usize) -> Self {
        debug_assert!(i < self.len());
        self.bits ^= 1 << i;
        self
    }

    /// Number of kept LUTs.
    #[inline]
    pub fn count_ones(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn is_all_ones(&self) -> bool {
        self.bits == mask(self.len())
    }

    /// Numeric key whose natural order is the lexicographic order of the
    /// bitstring.
    #[inline]
    pub fn lex_key(&self) -> u64 {
        self.bits.reverse_bits() >> (64 - self.len())
    }

    /// Inverse of [`Config::lex_key`].
    pub fn from_lex_key(key: u64, len: usize) -> Result<Self> {
        if len == 0 || len > MAX_LUTS {
            bail!(Config, "config length {len} outside 1..={MAX_LUTS}");
        }
        let bits = (key << (64 - len)).reverse_bits();
        Self::from_bits(bits, len)
    }

    pub fn to_bitstring(&self) -> String {
        (0..self.len()).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }

    /// Single-point crossover: positions `< cut` from `self`, the rest from `other`.
    pub fn splice(&self, other: &Config, cut: usize) -> Config {
        debug_assert_eq!(self.len, other.len);
        let low = if cut >= 64 { u64::MAX } else { (1u64 << cut) - 1 };
        Config { bits: (self.bits & low) | (other.bits & !low), len: self.len }
    }
}

#[inline]
pub(crate) fn mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

impl Ord for Config {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len.cmp(&other.len).then(self.lex_key().cmp(&other.lex_key()))
    }
}

impl PartialOrd for Config {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Config({self})")
    }
}

impl FromStr for Config {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut bits = 0u64;
        let mut len = 0usize;
        for ch in s.chars() {
            if len >= MAX_LUTS {
                bail!(Config, "bitstring longer than {MAX_LUTS}");
            }
            match ch {
                '1' => bits |= 1 << len,
                '0' => {}
                other => bail!(Validation, "invalid character {other:?} in config bitstring"),
            }
            len += 1;
        }
        Self::from_bits(bits, len)
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for Config {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for Config {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let s = <String as serde::Deserialize>::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
