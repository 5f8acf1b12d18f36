//! Fixed-width bit strings and the one-bit function `g`.
//!
//! Text form is big-endian: the leftmost character is bit 1, so
//! `unit_string(1, 4)` prints as `1000`. Internally the string is packed into
//! a `u32` whose binary expansion reads the same way, which also makes the
//! packed value the computational-basis index of a register holding it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Result, RfsError};

/// Largest supported width.
pub const MAX_WIDTH: usize = 24;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    width: u8,
    value: u32,
}

impl BitString {
    pub fn new(width: usize, value: u32) -> Result<Self> {
        check_width(width)?;
        if u64::from(value) >> width != 0 {
            return Err(RfsError::contract(format!(
                "value {value:#x} does not fit in {width} bits"
            )));
        }
        Ok(BitString {
            width: width as u8,
            value,
        })
    }

    pub fn zero(width: usize) -> Result<Self> {
        Self::new(width, 0)
    }

    /// Every string of the given width, in increasing packed order.
    pub fn all(width: usize) -> Result<impl Iterator<Item = BitString>> {
        check_width(width)?;
        let w = width as u8;
        Ok((0..(1u32 << width)).map(move |value| BitString { width: w, value }))
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    /// Packed value; equal to the basis index of a register holding this string.
    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn count_ones(&self) -> u32 {
        self.value.count_ones()
    }

    /// Bit `j`, 1-indexed from the left.
    pub fn bit(&self, j: usize) -> Result<bool> {
        if j == 0 || j > self.width() {
            return Err(RfsError::contract(format!(
                "bit index {j} outside 1..={}",
                self.width
            )));
        }
        Ok((self.value >> (self.width() - j)) & 1 == 1)
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        same_width(self, other)?;
        Ok(BitString {
            width: self.width,
            value: self.value ^ other.value,
        })
    }
}

fn check_width(width: usize) -> Result<()> {
    if width == 0 || width > MAX_WIDTH {
        return Err(RfsError::contract(format!(
            "width {width} outside 1..={MAX_WIDTH}"
        )));
    }
    Ok(())
}

fn same_width(a: &BitString, b: &BitString) -> Result<()> {
    if a.width != b.width {
        return Err(RfsError::contract(format!(
            "width mismatch: {} vs {}",
            a.width, b.width
        )));
    }
    Ok(())
}

/// Inner product over GF(2).
pub fn inner_product(a: &BitString, b: &BitString) -> Result<bool> {
    same_width(a, b)?;
    Ok((a.value & b.value).count_ones() & 1 == 1)
}

/// The string of width `n` with only bit `j` (1-indexed) set.
pub fn unit_string(j: usize, n: usize) -> Result<BitString> {
    check_width(n)?;
    if j == 0 || j > n {
        return Err(RfsError::contract(format!(
            "unit index {j} outside 1..={n}"
        )));
    }
    BitString::new(n, 1u32 << (n - j))
}

/// Choice of the function `g : {0,1}^n -> {0,1}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GVariant {
    /// 1 iff the Hamming weight is congruent to 1 mod 3.
    #[default]
    HammingMod3,
    /// Hamming weight mod 2. Makes the problem classically easy; test fixture only.
    Parity,
}

impl GVariant {
    pub fn name(&self) -> &'static str {
        match self {
            GVariant::HammingMod3 => "hamming-mod3",
            GVariant::Parity => "parity",
        }
    }
}

impl fmt::Display for GVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GVariant {
    type Err = RfsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hamming-mod3" => Ok(GVariant::HammingMod3),
            "parity" => Ok(GVariant::Parity),
            _ => Err(RfsError::contract(format!("unknown g variant `{s}`"))),
        }
    }
}

pub fn g_eval(s: &BitString, variant: GVariant) -> bool {
    g_of_weight(s.count_ones(), variant)
}

#[inline]
pub(crate) fn g_of_weight(weight: u32, variant: GVariant) -> bool {
    match variant {
        GVariant::HammingMod3 => weight % 3 == 1,
        GVariant::Parity => weight % 2 == 1,
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:0width$b}", self.value, width = self.width())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = RfsError;

    fn from_str(s: &str) -> Result<Self> {
        check_width(s.len())?;
        let mut value = 0u32;
        for c in s.chars() {
            value = (value << 1)
                | match c {
                    '0' => 0,
                    '1' => 1,
                    _ => {
                        return Err(RfsError::contract(format!(
                            "invalid character {c:?} in bit string `{s}`"
                        )))
                    }
                };
        }
        BitString::new(s.len(), value)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Serde adapter writing a `bool` as the digit `0` or `1`.
pub mod digit {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bit: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(*bit as u8)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(serde::de::Error::custom(format!(
                "expected 0 or 1, got {v}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn inner_product_examples() {
        assert!(!inner_product(&bs("0000"), &bs("1111")).unwrap());
        assert!(inner_product(&bs("1011"), &bs("0101")).unwrap());
        let s = bs("1101100");
        assert_eq!(s.count_ones() % 2, 0);
        assert!(!inner_product(&s, &s).unwrap());
        let odd = bs("1101101");
        assert!(inner_product(&odd, &odd).unwrap());
    }

    #[test]
    fn inner_product_width_mismatch() {
        assert!(matches!(
            inner_product(&bs("101"), &bs("1010")),
            Err(RfsError::Contract(_))
        ));
    }

    #[test]
    fn g_examples() {
        let g = |s: &str| g_eval(&bs(s), GVariant::HammingMod3);
        assert!(!g("0000"));
        assert!(!g("0110"));
        assert!(g("0100"));
        assert!(!g("0111"));
        assert!(g("1111"));
        assert!(g_eval(&bs("0111"), GVariant::Parity));
    }

    #[test]
    fn unit_strings() {
        assert_eq!(unit_string(1, 4).unwrap().to_string(), "1000");
        assert_eq!(unit_string(4, 4).unwrap().to_string(), "0001");
        assert!(inner_product(&bs("1011"), &unit_string(3, 4).unwrap()).unwrap());
        assert!(unit_string(0, 4).is_err());
        assert!(unit_string(5, 4).is_err());
    }

    #[test]
    fn unit_string_extracts_bits() {
        for s in BitString::all(6).unwrap() {
            for j in 1..=6 {
                let e = unit_string(j, 6).unwrap();
                assert_eq!(inner_product(&s, &e).unwrap(), s.bit(j).unwrap());
            }
        }
    }

    #[test]
    fn both_g_classes_nonempty() {
        for n in 1..=MAX_WIDTH {
            // weight 0 gives g = 0 and weight 1 gives g = 1 at every width
            assert!(!g_of_weight(0, GVariant::HammingMod3));
            assert!(g_of_weight(1, GVariant::HammingMod3));
            assert!(BitString::new(n, 1).unwrap().count_ones() == 1);
        }
    }

    #[test]
    fn text_form() {
        let s = bs("0010110");
        assert_eq!(s.width(), 7);
        assert_eq!(s.value(), 0b0010110);
        assert_eq!(s.to_string(), "0010110");
        assert_eq!(serde_json::to_string(&s).unwrap(), "\"0010110\"");
        let back: BitString = serde_json::from_str("\"0010110\"").unwrap();
        assert_eq!(back, s);
        assert!("01a".parse::<BitString>().is_err());
        assert!("".parse::<BitString>().is_err());
        assert!(BitString::new(3, 8).is_err());
        assert!(BitString::new(25, 0).is_err());
    }
}
