//! Significant-digit extraction.
//!
//! Exact inputs (CSV cells, synthetic series) are held as [`Decimal`]s and
//! never pass through binary floating point before their digits are read.
//! Values produced by a floating computation go through
//! [`extract_from_real`], which first renders them to
//! [`REAL_SIGNIFICANT_DIGITS`] significant digits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Significant digits kept when a computed real is rendered to decimal
/// before digit extraction. Double precision carries 15-16 digits; the
/// last few are noise after a transform.
pub const REAL_SIGNIFICANT_DIGITS: usize = 12;

const MAX_EXPONENT: i32 = 1000;

/// A positive exact decimal, `0.d1 d2 d3 ... x 10^exponent`.
///
/// `digits[0]` is never zero and trailing zeros are stripped, so two
/// spellings of the same number compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Decimal {
    digits: Vec<u8>,
    exponent: i32,
}

impl Decimal {
    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn exponent(&self) -> i32 {
        self.exponent
    }

    /// The k-th significant digit (1-based), zero-padded past the stored
    /// digits: `7` reads as `7.000...`.
    pub fn digit(&self, k: usize) -> Result<u8> {
        if k == 0 {
            return Err(Error::Domain("digit position must be >= 1".into()));
        }
        Ok(self.digits.get(k - 1).copied().unwrap_or(0))
    }

    /// Leading `len` significant digits as an integer, zero-padded.
    pub fn leading(&self, len: usize) -> u64 {
        (0..len).fold(0u64, |acc, i| {
            acc * 10 + u64::from(self.digits.get(i).copied().unwrap_or(0))
        })
    }

    /// Renders a positive finite real to [`REAL_SIGNIFICANT_DIGITS`]
    /// significant digits.
    pub fn from_real(value: f64) -> Result<Self> {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::Domain(format!(
                "digit extraction needs a positive finite value, got {value}"
            )));
        }
        let rendered = format!("{:.*e}", REAL_SIGNIFICANT_DIGITS - 1, value);
        rendered.parse()
    }

    pub fn to_f64(&self) -> f64 {
        // Display output is a plain decimal literal, which f64 parsing
        // rounds correctly.
        self.to_string().parse().unwrap_or(f64::NAN)
    }

    /// Multiplies by `10^shift`.
    pub fn scaled_by_power_of_ten(&self, shift: i32) -> Self {
        Decimal {
            digits: self.digits.clone(),
            exponent: self.exponent + shift,
        }
    }
}

impl FromStr for Decimal {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("not a decimal number: {text:?}"));
        let s = text.trim();
        let s = s.strip_prefix('+').unwrap_or(s);
        if s.starts_with('-') {
            return Err(Error::Domain(format!("value must be positive, got {s}")));
        }

        let (mantissa, sci) = match s.find(['e', 'E']) {
            Some(i) => {
                let exp: i32 = s[i + 1..].parse().map_err(|_| bad())?;
                (&s[..i], exp)
            }
            None => (s, 0),
        };
        let (int_part, frac_part) = match mantissa.split_once('.') {
            Some((a, b)) => (a, b),
            None => (mantissa, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part
            .bytes()
            .chain(frac_part.bytes())
            .all(|b| b.is_ascii_digit())
        {
            return Err(bad());
        }

        let mut exponent = i32::try_from(int_part.len()).map_err(|_| bad())?;
        let mut digits: Vec<u8> = int_part
            .bytes()
            .chain(frac_part.bytes())
            .map(|b| b - b'0')
            .skip_while(|&d| {
                if d == 0 {
                    exponent -= 1;
                }
                d == 0
            })
            .collect();
        while digits.last() == Some(&0) {
            digits.pop();
        }
        if digits.is_empty() {
            return Err(Error::Domain(format!("value must be positive, got {s}")));
        }
        let exponent = exponent.checked_add(sci).ok_or_else(bad)?;
        if exponent.abs() > MAX_EXPONENT {
            return Err(Error::Domain(format!("exponent out of range in {s}")));
        }
        Ok(Decimal { digits, exponent })
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits: String = self.digits.iter().map(|d| char::from(b'0' + d)).collect();
        let n = self.digits.len() as i64;
        let e = i64::from(self.exponent);
        if e <= 0 {
            write!(f, "0.{}{}", "0".repeat((-e) as usize), digits)
        } else if e >= n {
            write!(f, "{}{}", digits, "0".repeat((e - n) as usize))
        } else {
            let (a, b) = digits.split_at(e as usize);
            write!(f, "{a}.{b}")
        }
    }
}

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// k-th significant digit of an exact decimal.
pub fn extract(value: &Decimal, k: usize) -> Result<u8> {
    value.digit(k)
}

/// k-th significant digit of a computed real, after rounding it to
/// [`REAL_SIGNIFICANT_DIGITS`] significant digits (so `9.9999999999999`
/// reads as `10` and yields first digit 1).
pub fn extract_from_real(value: f64, k: usize) -> Result<u8> {
    if k == 0 {
        return Err(Error::Domain("digit position must be >= 1".into()));
    }
    Decimal::from_real(value)?.digit(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dec(s: &str) -> Decimal {
        s.parse().unwrap()
    }

    #[test]
    fn reads_digits_directly() {
        assert_eq!(extract(&dec("7013"), 1).unwrap(), 7);
        assert_eq!(extract(&dec("7013"), 4).unwrap(), 3);
        assert_eq!(extract(&dec("0.00892"), 1).unwrap(), 8);
        assert_eq!(extract(&dec("1.0"), 2).unwrap(), 0);
        assert_eq!(extract(&dec("7"), 2).unwrap(), 0);
    }

    #[test]
    fn normalizes_representation() {
        let d = dec("0.00892");
        assert_eq!(d.digits(), &[8, 9, 2]);
        assert_eq!(d.exponent(), -2);
        assert_eq!(dec("7013").exponent(), 4);
        assert_eq!(dec("7000"), dec("7e3"));
        assert_eq!(dec("007000.000").to_string(), "7000");
        assert_eq!(dec("1.25E-3").to_string(), "0.00125");
        assert_eq!(dec("12.5").to_string(), "12.5");
        assert_eq!(dec(".5").to_string(), "0.5");
        assert_eq!(dec("123").leading(2), 12);
        assert_eq!(dec("5").leading(3), 500);
    }

    #[test]
    fn rejects_non_positive_and_garbage() {
        for s in ["0", "0.000", "-5", "", ".", "1e", "12a", "1,000", "--1"] {
            assert!(s.parse::<Decimal>().is_err(), "{s:?} accepted");
        }
        assert!(extract(&dec("5"), 0).is_err());
        assert!(extract_from_real(0.0, 1).is_err());
        assert!(extract_from_real(-3.0, 1).is_err());
        assert!(extract_from_real(f64::NAN, 1).is_err());
    }

    #[test]
    fn computed_reals_are_rounded_first() {
        let x = 10.0 * 10f64.ln();
        assert_eq!(extract_from_real(x, 1).unwrap(), 2);
        let below_five = f64::from_bits(5.0f64.to_bits() - 1);
        assert!(below_five < 5.0);
        assert_eq!(extract_from_real(below_five, 1).unwrap(), 5);
        assert_eq!(extract_from_real(std::f64::consts::E, 2).unwrap(), 7);
        assert_eq!(extract_from_real(9.999_999_999_999_9, 1).unwrap(), 1);
        assert_eq!(extract_from_real(0.1 + 0.2, 2).unwrap(), 0);
    }

    proptest! {
        #[test]
        fn power_of_ten_shift_keeps_digits(
            mantissa in 1u64..10_000_000_000,
            shift in -30i32..30,
            k in 1usize..8,
        ) {
            let d = dec(&mantissa.to_string());
            let shifted = d.scaled_by_power_of_ten(shift);
            prop_assert_eq!(extract(&d, k).unwrap(), extract(&shifted, k).unwrap());
            // Round trip through the rendered string.
            prop_assert_eq!(&dec(&shifted.to_string()), &shifted);
        }

        #[test]
        fn matches_characterwise_reading(int in 0u64..1_000_000, frac in 0u64..1_000_000, k in 1usize..6) {
            prop_assume!(int > 0 || frac > 0);
            let text = format!("{int}.{frac:06}");
            let sig: String = text
                .chars()
                .filter(|c| c.is_ascii_digit())
                .skip_while(|&c| c == '0')
                .collect();
            let expected = sig.as_bytes().get(k - 1).map_or(0, |b| b - b'0');
            let got = extract(&dec(&text), k).unwrap();
            prop_assert_eq!(got, expected);
            if k == 1 {
                prop_assert!(got != 0);
            }
        }

        #[test]
        fn real_scale_shift(m in 1.0f64..10.0, shift in -20i32..20) {
            let a = extract_from_real(m, 1).unwrap();
            let b = extract_from_real(m * 10f64.powi(shift), 1).unwrap();
            // Rounding can only move a digit across the 9.99.. -> 10 edge.
            prop_assert!(a == b || (m > 9.999_999_99));
        }
    }
}
