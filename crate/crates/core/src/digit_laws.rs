//! Closed-form digit-probability laws: Benford first digit, leading digit
//! strings, n-th digit, uniform, the generalized `(r, q)` law and the
//! imperfect `(s, N_s)` count law.
//!
//! Every function is pure; digits are plain `u32`s checked against the
//! law's domain.

use std::f64::consts::LN_10;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Past this position the n-th digit law is reported as exactly uniform.
pub const MAX_SUMMED_POSITION: u32 = 9;

fn log10_1p(x: f64) -> f64 {
    x.ln_1p() / LN_10
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

fn check_first_digit(d: u32) -> Result<()> {
    if (1..=9).contains(&d) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "leading digit must be in 1..=9, got {d}"
        )))
    }
}

/// `log10(1 + 1/d)`, the Benford probability of leading digit `d`.
pub fn benford_first_digit_prob(d: u32) -> Result<f64> {
    check_first_digit(d)?;
    Ok(log10_1p(1.0 / f64::from(d)))
}

/// Probability that a number starts with the digit string `prefix`:
/// `log10((n + 1) / n)` with `n` the prefix read as an integer.
pub fn string_prob(prefix: &str) -> Result<f64> {
    if prefix.is_empty() || prefix.len() > 18 || !prefix.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::Domain(format!(
            "prefix must be 1 to 18 decimal digits, got {prefix:?}"
        )));
    }
    if prefix.starts_with('0') {
        return Err(Error::Domain(format!(
            "prefix cannot start with 0, got {prefix:?}"
        )));
    }
    let n: u64 = prefix
        .parse()
        .map_err(|_| Error::Domain(format!("bad prefix {prefix:?}")))?;
    Ok(log10_1p(1.0 / n as f64))
}

/// Value of the n-th digit law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NthDigitProb {
    pub value: f64,
    /// Set when the position is past [`MAX_SUMMED_POSITION`] and the
    /// uniform value 0.1 is returned instead of the sum.
    pub approximate: bool,
}

/// Probability that `d` is the n-th significant digit (`n >= 2`):
/// `sum_{k=10^(n-2)}^{10^(n-1)-1} log10(1 + 1/(10k + d))`.
///
/// Summed directly (compensated) up to position 9, which is 9·10^7 terms;
/// beyond that the law is within 1e-9 of uniform and 0.1 is returned with
/// the `approximate` flag set.
pub fn nth_digit_prob(d: u32, n: u32) -> Result<NthDigitProb> {
    if n < 2 {
        return Err(Error::Domain(format!(
            "n-th digit law needs position >= 2, got {n}"
        )));
    }
    if d > 9 {
        return Err(Error::Domain(format!("digit must be in 0..=9, got {d}")));
    }
    if n > MAX_SUMMED_POSITION {
        return Ok(NthDigitProb {
            value: 0.1,
            approximate: true,
        });
    }
    let lo = 10u64.pow(n - 2);
    let hi = 10u64.pow(n - 1);
    let d = u64::from(d);
    let value = compensated_sum((lo..hi).map(|k| log10_1p(1.0 / (10 * k + d) as f64)));
    Ok(NthDigitProb {
        value,
        approximate: false,
    })
}

/// Uniform reference: 1/9 over 1..=9 at position 1, 1/10 over 0..=9 past it.
pub fn uniform_prob(d: u32, position: u32) -> Result<f64> {
    match position {
        0 => Err(Error::Domain("digit position must be >= 1".into())),
        1 => check_first_digit(d).map(|_| 1.0 / 9.0),
        _ if d <= 9 => Ok(0.1),
        _ => Err(Error::Domain(format!("digit must be in 0..=9, got {d}"))),
    }
}

/// Admissible digits for a law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DigitDomain {
    OneToNine,
    ZeroToNine,
}

impl DigitDomain {
    pub fn digits(self) -> std::ops::RangeInclusive<u32> {
        match self {
            DigitDomain::OneToNine => 1..=9,
            DigitDomain::ZeroToNine => 0..=9,
        }
    }

    pub fn contains(self, d: u32) -> bool {
        self.digits().contains(&d)
    }
}

fn check_generalized(r: f64, q: f64, domain: DigitDomain) -> Result<()> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::Domain(format!("r must be finite and >= 0, got {r}")));
    }
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::Domain(format!("q must be finite and > 0, got {q}")));
    }
    if domain == DigitDomain::ZeroToNine && r < 1.0 {
        return Err(Error::Domain(format!(
            "digit 0 is only admissible for r >= 1, got r = {r}"
        )));
    }
    Ok(())
}

fn generalized_weight(x: u32, r: f64, q: f64) -> f64 {
    log10_1p(1.0 / (r + f64::from(x).powf(q)))
}

/// Generalized law `log10(1 + 1/(r + d^q))`, normalized by its finite sum
/// over `domain`. `r = 0, q = 1` on 1..=9 is the Benford law.
pub fn generalized_prob(d: u32, r: f64, q: f64, domain: DigitDomain) -> Result<f64> {
    check_generalized(r, q, domain)?;
    if !domain.contains(d) {
        return Err(Error::Domain(format!(
            "digit {d} outside the generalized law's domain {domain:?}"
        )));
    }
    let z = compensated_sum(domain.digits().map(|x| generalized_weight(x, r, q)));
    Ok(generalized_weight(d, r, q) / z)
}

/// Imperfect-law curve at a real abscissa: `n_s * log10(1/x + 1 + s*x)`.
pub fn imperfect_density(x: f64, s: f64, n_s: f64) -> f64 {
    n_s * (1.0 / x + 1.0 + s * x).log10()
}

/// Expected count of leading digit `d` under the imperfect law,
/// `N_s * log10(1/d + 1 + s*d)`. With `s = 0` this is `N_s` times the
/// Benford probability; the continuous curve has its minimum
/// `N_s * log10(1 + 2*sqrt(s))` at `x = 1/sqrt(s)`.
pub fn imperfect_counts(d: u32, s: f64, n_s: u64) -> Result<f64> {
    check_first_digit(d)?;
    check_imperfect(s, n_s)?;
    Ok(imperfect_density(f64::from(d), s, n_s as f64))
}

pub(crate) fn check_imperfect(s: f64, n_s: u64) -> Result<()> {
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::Domain(format!("s must be finite and >= 0, got {s}")));
    }
    if n_s == 0 {
        return Err(Error::Domain("N_s must be a positive integer".into()));
    }
    Ok(())
}

/// Location of the continuous minimum of the imperfect law, `1/sqrt(s)`
/// (infinite for `s = 0`).
pub fn imperfect_minimum_location(s: f64) -> f64 {
    1.0 / s.sqrt()
}

/// A parametrized digit law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DigitLaw {
    /// Benford leading digit.
    Benford1,
    /// Uniform digit at the given position.
    Uniform {
        position: u32,
    },
    /// Leading digit strings of the given length.
    StringLaw {
        len: u32,
    },
    /// Benford law of the n-th digit.
    NthDigit {
        n: u32,
    },
    Generalized {
        r: f64,
        q: f64,
        domain: DigitDomain,
    },
    /// Not normalized: values are expected counts.
    Imperfect {
        s: f64,
        n_s: u64,
    },
}

impl DigitLaw {
    /// Outcomes (digits, or integer prefixes for `StringLaw`) paired with
    /// their probability, or expected count for `Imperfect`.
    pub fn table(&self) -> Result<Vec<(u64, f64)>> {
        let digits = |range: std::ops::RangeInclusive<u32>, f: &dyn Fn(u32) -> Result<f64>| {
            range
                .map(|d| f(d).map(|p| (u64::from(d), p)))
                .collect::<Result<Vec<_>>>()
        };
        match *self {
            DigitLaw::Benford1 => digits(1..=9, &benford_first_digit_prob),
            DigitLaw::Uniform { position } => {
                let range = if position == 1 { 1..=9 } else { 0..=9 };
                digits(range, &|d| uniform_prob(d, position))
            }
            DigitLaw::StringLaw { len } => {
                if !(1..=6).contains(&len) {
                    return Err(Error::Domain(format!(
                        "string law tables support lengths 1..=6, got {len}"
                    )));
                }
                let lo = 10u64.pow(len - 1);
                Ok((lo..lo * 10)
                    .map(|n| (n, log10_1p(1.0 / n as f64)))
                    .collect())
            }
            DigitLaw::NthDigit { n } => digits(0..=9, &|d| nth_digit_prob(d, n).map(|p| p.value)),
            DigitLaw::Generalized { r, q, domain } => {
                digits(domain.digits(), &|d| generalized_prob(d, r, q, domain))
            }
            DigitLaw::Imperfect { s, n_s } => digits(1..=9, &|d| imperfect_counts(d, s, n_s)),
        }
    }

    /// Whether [`DigitLaw::table`] is a probability distribution.
    pub fn is_normalized(&self) -> bool {
        !matches!(self, DigitLaw::Imperfect { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Direct loop over the n-th digit sum, kept separate from the
    // implementation's compensated iterator.
    fn nth_digit_oracle(d: u32, n: u32) -> f64 {
        let mut total = 0.0;
        let mut k = 10u64.pow(n - 2);
        while k < 10u64.pow(n - 1) {
            total += (1.0 + 1.0 / (10 * k + u64::from(d)) as f64).log10();
            k += 1;
        }
        total
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn first_digit_values() {
        assert!((benford_first_digit_prob(1).unwrap() - 0.30103).abs() < 1e-5);
        assert!((benford_first_digit_prob(9).unwrap() - 0.04576).abs() < 1e-5);
        let total: f64 = (1..=9).map(|d| benford_first_digit_prob(d).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(benford_first_digit_prob(0).is_err());
        assert!(benford_first_digit_prob(10).is_err());
    }

    #[test]
    fn first_digit_strictly_decreasing() {
        for d in 1..9 {
            assert!(
                benford_first_digit_prob(d).unwrap() > benford_first_digit_prob(d + 1).unwrap()
            );
        }
    }

    #[test]
    fn string_values() {
        assert!((string_prob("123").unwrap() - 0.003_516_574).abs() < 1e-9);
        assert!((string_prob("99").unwrap() - (100.0f64 / 99.0).log10()).abs() < 1e-15);
        assert!((string_prob("99").unwrap() - 0.004365).abs() < 1e-6);
        for d in 1..=9 {
            let p = string_prob(&d.to_string()).unwrap();
            assert!((p - benford_first_digit_prob(d).unwrap()).abs() < 1e-15);
        }
        for bad in ["", "0", "012", "1a", "1234567890123456789"] {
            assert!(string_prob(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn chain_rule_over_second_digit() {
        for d1 in 1..=9u32 {
            let split: f64 = (0..=9)
                .map(|d2| string_prob(&format!("{d1}{d2}")).unwrap())
                .sum();
            assert!((split - benford_first_digit_prob(d1).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn second_digit_worked_example() {
        let p = nth_digit_prob(2, 2).unwrap();
        assert!(!p.approximate);
        assert!((p.value - 0.1088).abs() < 5e-5);
        let total: f64 = (0..=9).map(|d| nth_digit_prob(d, 2).unwrap().value).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nth_digit_matches_loop_oracle() {
        for n in 2..=4 {
            for d in 0..=9 {
                let got = nth_digit_prob(d, n).unwrap().value;
                assert!((got - nth_digit_oracle(d, n)).abs() < 1e-13, "d={d} n={n}");
            }
        }
        // (0, 3): k = 10..=99
        assert!((nth_digit_prob(0, 3).unwrap().value - 0.10178).abs() < 1e-5);
    }

    #[test]
    fn nth_digit_domain_and_overflow_guard() {
        assert!(nth_digit_prob(3, 1).is_err());
        assert!(nth_digit_prob(10, 2).is_err());
        let far = nth_digit_prob(7, 12).unwrap();
        assert!(far.approximate);
        assert_eq!(far.value, 0.1);
    }

    #[test]
    fn uniform_limit() {
        let dev = |n| {
            (0..=9)
                .map(|d| (nth_digit_prob(d, n).unwrap().value - 0.1).abs())
                .fold(0.0, f64::max)
        };
        let devs: Vec<f64> = (2..=5).map(dev).collect();
        assert!(devs.windows(2).all(|w| w[1] < w[0]), "{devs:?}");
        assert!(devs[2] < 0.01);
    }

    #[test]
    fn generalized_reduces_to_benford() {
        for d in 1..=9 {
            let g = generalized_prob(d, 0.0, 1.0, DigitDomain::OneToNine).unwrap();
            assert!((g - benford_first_digit_prob(d).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn generalized_zero_digit() {
        let z: f64 = (0..=9)
            .map(|x| (1.0 + 1.0 / (1.0 + f64::from(x))).log10())
            .sum();
        let p = generalized_prob(0, 1.0, 1.0, DigitDomain::ZeroToNine).unwrap();
        assert!((p - 2f64.log10() / z).abs() < 1e-14);
        assert!(generalized_prob(0, 0.0, 1.0, DigitDomain::OneToNine).is_err());
        assert!(generalized_prob(0, 0.5, 1.0, DigitDomain::ZeroToNine).is_err());
        assert!(generalized_prob(3, 1.0, 0.0, DigitDomain::OneToNine).is_err());
        assert!(generalized_prob(3, -1.0, 1.0, DigitDomain::OneToNine).is_err());
    }

    #[test]
    fn imperfect_values() {
        for d in 1..=9 {
            let c = imperfect_counts(d, 0.0, 64).unwrap();
            assert!((c - 64.0 * (1.0 + 1.0 / f64::from(d)).log10()).abs() < 1e-12);
        }
        let direct = 61.0 * (1.0f64 / 9.0 + 1.0 + 0.0031 * 9.0).log10();
        assert!((imperfect_counts(9, 0.0031, 61).unwrap() - direct).abs() < 1e-12);
        assert!((direct - 3.448_206).abs() < 1e-5);
        assert!(imperfect_counts(0, 0.1, 10).is_err());
        assert!(imperfect_counts(3, -0.1, 10).is_err());
        assert!(imperfect_counts(3, 0.1, 0).is_err());
        assert_eq!(imperfect_minimum_location(0.04), 5.0);
        assert!((imperfect_density(5.0, 0.04, 1.0) - 1.4f64.log10()).abs() < 1e-15);
    }

    #[test]
    fn law_tables_normalize() {
        let laws = [
            DigitLaw::Benford1,
            DigitLaw::Uniform { position: 1 },
            DigitLaw::Uniform { position: 3 },
            DigitLaw::StringLaw { len: 1 },
            DigitLaw::StringLaw { len: 2 },
            DigitLaw::StringLaw { len: 3 },
            DigitLaw::NthDigit { n: 2 },
            DigitLaw::NthDigit { n: 3 },
            DigitLaw::NthDigit { n: 4 },
            DigitLaw::NthDigit { n: 11 },
            DigitLaw::Generalized {
                r: 0.0,
                q: 1.0,
                domain: DigitDomain::OneToNine,
            },
            DigitLaw::Generalized {
                r: 2.5,
                q: 0.7,
                domain: DigitDomain::OneToNine,
            },
            DigitLaw::Generalized {
                r: 1.0,
                q: 1.3,
                domain: DigitDomain::ZeroToNine,
            },
        ];
        for law in laws {
            assert!(law.is_normalized());
            let total = compensated_sum(law.table().unwrap().into_iter().map(|(_, p)| p));
            assert!((total - 1.0).abs() < 1e-12, "{law:?}: {total}");
        }
        assert!(!DigitLaw::Imperfect { s: 0.01, n_s: 64 }.is_normalized());
    }

    #[test]
    fn curl_up_fails_just_below_nine() {
        // 1/sqrt(s) = 8.49 is nearest to 8, yet c(9) < c(8) since s < 1/72.
        let s = 1.0 / (8.49f64 * 8.49);
        assert!(imperfect_counts(9, s, 100).unwrap() < imperfect_counts(8, s, 100).unwrap());
    }

    proptest! {
        #[test]
        fn imperfect_monotone_in_s(d in 1u32..=9, s in 0.0f64..1.0, ds in 1e-6f64..0.5, n_s in 1u64..500) {
            let a = imperfect_counts(d, s, n_s).unwrap();
            let b = imperfect_counts(d, s + ds, n_s).unwrap();
            prop_assert!(b > a);
        }

        #[test]
        fn imperfect_curls_up(s in (1.0f64 / 72.0 + 1e-9)..1.0, n_s in 1u64..500) {
            // c(9) > c(8) iff s > 1/72, i.e. 1/sqrt(s) < sqrt(72) ~ 8.485.
            let star = (1.0 / s.sqrt()).round().clamp(1.0, 9.0) as u32;
            prop_assume!(star < 9);
            prop_assert!(imperfect_counts(9, s, n_s).unwrap() > imperfect_counts(star, s, n_s).unwrap());
        }

        #[test]
        fn generalized_normalizes(r in 0.0f64..20.0, q in 0.05f64..5.0) {
            let total = compensated_sum((1..=9).map(|d| generalized_prob(d, r, q, DigitDomain::OneToNine).unwrap()));
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
