//! Blockade-constrained Hilbert space of the Rydberg chain.
//!
//! Site `0` is the least-significant bit of the integer encoding. Text
//! representations print the most-significant site first, so `"0101"` is the
//! integer `0b0101` with sites 0 and 2 excited.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Serialize, Serializer};

use crate::{Error, Result};

/// Largest chain length accepted by [`enumerate_basis`].
pub const DEFAULT_MAX_LENGTH: usize = 20;

/// Hard limit imposed by the `u64` encoding.
pub const ENCODING_LIMIT: usize = 64;

/// Boundary conditions of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Periodic,
    Open,
}

impl Boundary {
    pub fn is_periodic(self) -> bool {
        matches!(self, Boundary::Periodic)
    }
}

/// Occupations of `len` sites: bit `i` set means site `i` is Rydberg excited.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    len: u8,
    bits: u64,
}

impl BitString {
    pub fn new(bits: u64, len: usize) -> Result<Self> {
        if len == 0 || len > ENCODING_LIMIT {
            return Err(Error::LengthOutOfRange { length: len, min: 1, max: ENCODING_LIMIT });
        }
        if len < 64 && bits >> len != 0 {
            return Err(Error::InvalidArgument(alloc::format!("encoding {bits:#x} has bits beyond {len} sites")));
        }
        Ok(Self { len: len as u8, bits })
    }

    pub(crate) fn from_raw(bits: u64, len: usize) -> Self {
        debug_assert!((1..=ENCODING_LIMIT).contains(&len));
        Self { len: len as u8, bits }
    }

    /// All sites in the ground state.
    pub fn ground(len: usize) -> Self {
        Self::from_raw(0, len)
    }

    /// Néel state `|0101...01>`: excitations on even sites.
    pub fn z2(len: usize) -> Self {
        let mut bits = 0;
        for site in (0..len).step_by(2) {
            bits |= 1 << site;
        }
        if len % 2 == 1 && len > 1 {
            // odd periodic chains cannot host a perfect Néel pattern
            bits &= !(1 << (len - 1));
        }
        Self::from_raw(bits, len)
    }

    /// Translated Néel state `|1010...10>`: excitations on odd sites.
    pub fn z2_prime(len: usize) -> Self {
        let mut bits = 0;
        for site in (1..len).step_by(2) {
            bits |= 1 << site;
        }
        Self::from_raw(bits, len)
    }

    /// Period-3 density wave `|001001...>` read from site 0.
    pub fn z3(len: usize) -> Self {
        let mut bits = 0;
        for site in (0..len).step_by(3) {
            if site + 1 < len || len % 3 != 1 {
                bits |= 1 << site;
            }
        }
        Self::from_raw(bits, len)
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn get(&self, site: usize) -> bool {
        site < self.len() && (self.bits >> site) & 1 == 1
    }

    pub fn count_ones(&self) -> u32 {
        self.bits.count_ones()
    }

    /// Flip the occupation of one site.
    pub fn flipped(&self, site: usize) -> Self {
        debug_assert!(site < self.len());
        Self { len: self.len, bits: self.bits ^ (1 << site) }
    }

    fn mask(&self) -> u64 {
        if self.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.len) - 1
        }
    }

    /// Cyclic translation by one site (site `i` moves to `i + 1`).
    pub fn translated(&self) -> Self {
        let n = self.len();
        let top = (self.bits >> (n - 1)) & 1;
        Self { len: self.len, bits: ((self.bits << 1) | top) & self.mask() }
    }

    /// Adjacent pairs `(i, i+1 mod L)` where both sites are excited.
    pub fn blockade_violations(&self, boundary: Boundary) -> Vec<(usize, usize)> {
        let n = self.len();
        let pairs = if boundary.is_periodic() && n > 1 { n } else { n - 1 };
        (0..pairs).map(|i| (i, (i + 1) % n)).filter(|&(i, j)| i != j && self.get(i) && self.get(j)).collect()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for site in (0..self.len()).rev() {
            f.write_str(if self.get(site) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{self}>")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s.len() > ENCODING_LIMIT {
            return Err(Error::ParseBitString(String::from(s)));
        }
        let mut bits = 0u64;
        for c in s.chars() {
            bits = (bits << 1)
                | match c {
                    '0' => 0,
                    '1' => 1,
                    _ => return Err(Error::ParseBitString(String::from(s))),
                };
        }
        Ok(Self::from_raw(bits, s.len()))
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// True iff no two adjacent sites are both excited.
pub fn is_valid(bits: &BitString, boundary: Boundary) -> bool {
    let n = bits.len();
    let b = bits.bits;
    if b & (b >> 1) != 0 {
        return false;
    }
    !(boundary.is_periodic() && n > 1 && bits.get(0) && bits.get(n - 1))
}

/// Number of sites where `a` and `b` differ.
pub fn hamming(a: &BitString, b: &BitString) -> Result<u32> {
    if a.len != b.len {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    Ok(hamming_unchecked(a, b))
}

#[inline]
pub(crate) fn hamming_unchecked(a: &BitString, b: &BitString) -> u32 {
    (a.bits ^ b.bits).count_ones()
}

/// The blockade-valid bitstrings of a chain, in ascending integer order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstrainedBasis {
    length: usize,
    boundary: Boundary,
    states: Vec<BitString>,
}

impl ConstrainedBasis {
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn states(&self) -> &[BitString] {
        &self.states
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, index: usize) -> BitString {
        self.states[index]
    }

    /// Position of `bits` in the basis; `None` if it violates the constraint
    /// or has the wrong length.
    pub fn index_of(&self, bits: &BitString) -> Option<usize> {
        if bits.len() != self.length {
            return None;
        }
        self.states.binary_search_by_key(&bits.bits, |s| s.bits).ok()
    }

    /// Like [`index_of`](Self::index_of) but reports why a state is rejected.
    pub fn require_index(&self, bits: &BitString) -> Result<usize> {
        if bits.len() != self.length {
            return Err(Error::LengthMismatch { left: bits.len(), right: self.length });
        }
        self.index_of(bits).ok_or_else(|| Error::BlockadeViolation {
            state: alloc::format!("{bits}"),
            sites: bits.blockade_violations(self.boundary),
        })
    }
}

/// Enumerate the constrained basis for `length` sites (at most
/// [`DEFAULT_MAX_LENGTH`]).
pub fn enumerate_basis(length: usize, boundary: Boundary) -> Result<ConstrainedBasis> {
    enumerate_basis_with_max(length, boundary, DEFAULT_MAX_LENGTH)
}

pub fn enumerate_basis_with_max(length: usize, boundary: Boundary, max_length: usize) -> Result<ConstrainedBasis> {
    let max = max_length.min(ENCODING_LIMIT - 1);
    if !(2..=max).contains(&length) {
        return Err(Error::LengthOutOfRange { length, min: 2, max });
    }

    // Grow strings site by site from the top, never placing a 1 next to a 1.
    let mut states = Vec::new();
    let mut stack: Vec<(usize, u64)> = alloc::vec![(0, 0)];
    while let Some((filled, bits)) = stack.pop() {
        if filled == length {
            let s = BitString::from_raw(bits, length);
            if is_valid(&s, boundary) {
                states.push(s);
            }
            continue;
        }
        stack.push((filled + 1, bits << 1));
        if bits & 1 == 0 {
            stack.push((filled + 1, (bits << 1) | 1));
        }
    }
    states.sort_unstable();
    Ok(ConstrainedBasis { length, boundary, states })
}
