//! Four-valued logic and LUT truth tables.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum number of LUT address lines.
pub const MAX_LUT_INPUTS: u8 = 6;

/// A four-state logic value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LogicValue {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "x")]
    X,
    #[serde(rename = "z")]
    Z,
}

impl LogicValue {
    pub fn from_bool(b: bool) -> Self {
        if b {
            LogicValue::One
        } else {
            LogicValue::Zero
        }
    }

    /// `Some(bit)` for 0/1, `None` for X/Z.
    pub fn to_bool(self) -> Option<bool> {
        match self {
            LogicValue::Zero => Some(false),
            LogicValue::One => Some(true),
            _ => None,
        }
    }

    pub fn is_known(self) -> bool {
        matches!(self, LogicValue::Zero | LogicValue::One)
    }

    pub fn to_char(self) -> char {
        match self {
            LogicValue::Zero => '0',
            LogicValue::One => '1',
            LogicValue::X => 'x',
            LogicValue::Z => 'z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            '0' => Some(LogicValue::Zero),
            '1' => Some(LogicValue::One),
            'x' | 'X' => Some(LogicValue::X),
            'z' | 'Z' => Some(LogicValue::Z),
            _ => None,
        }
    }
}

impl fmt::Display for LogicValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TruthTableError {
    #[error("LUT input count {0} outside 0..=6")]
    InputCount(u8),
    #[error("value {value:#x} does not fit in {len} bits")]
    Overflow { value: u64, len: usize },
    #[error("truth tables have different widths ({0} vs {1} bits)")]
    LengthMismatch(usize, usize),
    #[error("malformed hex literal '{0}'")]
    BadHex(String),
}

/// A 2^k-entry bit vector indexed by LUT address (address line 0 is the LSB).
///
/// Used both for LUT INIT vectors and for reconstructed address coverage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TruthTable {
    inputs: u8,
    bits: u64,
}

impl TruthTable {
    pub fn new(inputs: u8, bits: u64) -> Result<Self, TruthTableError> {
        if inputs > MAX_LUT_INPUTS {
            return Err(TruthTableError::InputCount(inputs));
        }
        let t = TruthTable { inputs, bits: 0 };
        if bits & !t.mask() != 0 {
            return Err(TruthTableError::Overflow {
                value: bits,
                len: t.len(),
            });
        }
        Ok(TruthTable { inputs, bits })
    }

    pub fn zeros(inputs: u8) -> Self {
        TruthTable::new(inputs, 0).expect("input count checked by caller")
    }

    pub fn ones(inputs: u8) -> Self {
        let t = TruthTable::zeros(inputs);
        TruthTable {
            bits: t.mask(),
            ..t
        }
    }

    /// Number of address lines.
    pub fn inputs(&self) -> u8 {
        self.inputs
    }

    /// Number of entries, `2^inputs`.
    pub fn len(&self) -> usize {
        1usize << self.inputs
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    fn mask(&self) -> u64 {
        if self.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.len()) - 1
        }
    }

    pub fn bit(&self, addr: usize) -> bool {
        assert!(addr < self.len(), "address {addr} out of range");
        (self.bits >> addr) & 1 == 1
    }

    pub fn set(&mut self, addr: usize, value: bool) {
        assert!(addr < self.len(), "address {addr} out of range");
        if value {
            self.bits |= 1 << addr;
        } else {
            self.bits &= !(1 << addr);
        }
    }

    pub fn count_ones(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn is_full(&self) -> bool {
        self.bits == self.mask()
    }

    /// Addresses whose bit is clear.
    pub fn clear_bits(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| !self.bit(i))
    }

    /// Bitwise exclusive NOR.
    pub fn xnor(&self, other: &TruthTable) -> Result<TruthTable, TruthTableError> {
        if self.inputs != other.inputs {
            return Err(TruthTableError::LengthMismatch(self.len(), other.len()));
        }
        Ok(TruthTable {
            inputs: self.inputs,
            bits: !(self.bits ^ other.bits) & self.mask(),
        })
    }

    /// Number of hex digits needed to print the table.
    pub fn hex_digits(&self) -> usize {
        self.len().div_ceil(4)
    }

    /// Lower-case hex without prefix, zero-padded to the table width, e.g. `accc`.
    pub fn to_hex(&self) -> String {
        format!("{:0width$x}", self.bits, width = self.hex_digits())
    }

    pub fn from_hex(inputs: u8, hex: &str) -> Result<Self, TruthTableError> {
        let digits = hex.trim().trim_start_matches("0x").replace('_', "");
        if digits.is_empty() {
            return Err(TruthTableError::BadHex(hex.to_string()));
        }
        let bits =
            u64::from_str_radix(&digits, 16).map_err(|_| TruthTableError::BadHex(hex.to_string()))?;
        TruthTable::new(inputs, bits)
    }

    /// Sized Verilog literal, e.g. `16'haccc`.
    pub fn to_verilog(&self) -> String {
        format!("{}'h{}", self.len(), self.to_hex())
    }
}

impl fmt::Display for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_verilog())
    }
}

impl FromStr for TruthTable {
    type Err = TruthTableError;

    /// Parses `16'haccc`-style literals (hex or binary).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TruthTableError::BadHex(s.to_string());
        let (width, rest) = s.split_once('\'').ok_or_else(bad)?;
        let width: usize = width.trim().parse().map_err(|_| bad())?;
        if !width.is_power_of_two() || width > 64 {
            return Err(bad());
        }
        let inputs = width.trailing_zeros() as u8;
        let mut chars = rest.chars();
        let radix = match chars.next().map(|c| c.to_ascii_lowercase()) {
            Some('h') => 16,
            Some('b') => 2,
            Some('d') => 10,
            _ => return Err(bad()),
        };
        let digits: String = chars.filter(|c| *c != '_').collect();
        let bits = u64::from_str_radix(&digits, radix).map_err(|_| bad())?;
        TruthTable::new(inputs, bits)
    }
}

impl Serialize for TruthTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_verilog())
    }
}

impl<'de> Deserialize<'de> for TruthTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
