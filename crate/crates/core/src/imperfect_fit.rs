//! Least-chi-square fit of the imperfect Benford law
//! `c(d) = N_s * log10(1/d + 1 + s*d)` to a first-digit histogram.
//!
//! `N_s` is an integer in `[ceil(N/2), 2N]` and `s` is in `[0, 1]`. For each
//! `N_s` the best `s` is located on a 1e-4 grid and then refined by golden
//! section on the neighbouring grid cells. Ties go to the smaller `s`, then
//! the smaller `N_s`.

use serde::{Deserialize, Serialize};

use crate::digit_laws::{check_imperfect, imperfect_density, imperfect_minimum_location};
use crate::error::{Error, Result};
use crate::gof_tests::{pearson_chi2, DigitHistogram};

pub const S_MAX: f64 = 1.0;
pub const S_GRID_STEP: f64 = 1e-4;
/// Golden-section stops once the bracket is narrower than this.
pub const S_TOLERANCE: f64 = 1e-7;
const GRID_POINTS: usize = 10_001;
const TIE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImperfectFitResult {
    pub s: f64,
    pub n_s: u64,
    pub chi2: f64,
    /// Sum of the fitted expected counts.
    pub surface: f64,
    /// `1/sqrt(s)`; absent when `s = 0`.
    pub minimum_location: Option<f64>,
    /// All observed mass sits on one digit.
    pub degenerate: bool,
}

/// Expected counts for digits 1..=9.
pub fn imperfect_curve(s: f64, n_s: u64) -> Result<[f64; 9]> {
    check_imperfect(s, n_s)?;
    Ok(curve(s, n_s as f64))
}

fn curve(s: f64, n_s: f64) -> [f64; 9] {
    std::array::from_fn(|i| imperfect_density((i + 1) as f64, s, n_s))
}

fn objective(observed: &[f64; 9], s: f64, n_s: f64) -> f64 {
    pearson_chi2(observed, &curve(s, n_s))
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > S_TOLERANCE {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        }
    }
    (lo + hi) / 2.0
}

fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_RTOL * (1.0 + a.abs().max(b.abs()))
}

/// Fits a position-1 histogram.
pub fn fit_imperfect(hist: &DigitHistogram) -> Result<ImperfectFitResult> {
    if hist.position != 1 {
        return Err(Error::Domain(format!(
            "the imperfect law is fitted to first digits, got position {}",
            hist.position
        )));
    }
    let observed: [f64; 9] = std::array::from_fn(|i| hist.counts[i + 1] as f64);
    fit_imperfect_counts(&observed)
}

/// Fits observed (possibly fractional) counts of digits 1..=9.
pub fn fit_imperfect_counts(observed: &[f64; 9]) -> Result<ImperfectFitResult> {
    if observed.iter().any(|o| !(o.is_finite() && *o >= 0.0)) {
        return Err(Error::Domain(
            "observed counts must be finite and >= 0".into(),
        ));
    }
    let total: f64 = observed.iter().sum();
    if total < 9.0 {
        return Err(Error::Domain(format!(
            "imperfect-law fit needs at least 9 observations, got {total}"
        )));
    }
    let degenerate = observed.iter().filter(|&&o| o > 0.0).count() <= 1;
    if degenerate {
        log::warn!("imperfect-law fit on a degenerate histogram (one digit holds all mass)");
    }

    // chi2(s, n) = A(s)/n - 2T + n B(s), with A = sum O^2/p and B = sum p.
    let grid: Vec<f64> = (0..GRID_POINTS).map(|i| i as f64 * S_GRID_STEP).collect();
    let (a, b): (Vec<f64>, Vec<f64>) = grid
        .iter()
        .map(|&s| {
            let p = curve(s, 1.0);
            let a = observed.iter().zip(&p).map(|(o, p)| o * o / p).sum::<f64>();
            (a, p.iter().sum::<f64>())
        })
        .unzip();

    let n_lo = ((total / 2.0).ceil() as u64).max(1);
    let n_hi = (2.0 * total).floor() as u64;
    let mut best: Option<(f64, f64, u64)> = None; // (chi2, s, n)
    for n in n_lo..=n_hi {
        let nf = n as f64;
        let mut i_best = 0;
        let mut v_best = f64::INFINITY;
        for i in 0..GRID_POINTS {
            let v = a[i] / nf - 2.0 * total + nf * b[i];
            if v < v_best {
                v_best = v;
                i_best = i;
            }
        }
        let s_grid = grid[i_best];
        let chi_grid = objective(observed, s_grid, nf);
        let lo = grid[i_best.saturating_sub(1)];
        let hi = grid[(i_best + 1).min(GRID_POINTS - 1)];
        let s_ref = golden_section(|s| objective(observed, s, nf), lo, hi).clamp(0.0, S_MAX);
        let chi_ref = objective(observed, s_ref, nf);
        let (chi, s) = if chi_ref < chi_grid && !ties(chi_ref, chi_grid) {
            (chi_ref, s_ref)
        } else {
            (chi_grid, s_grid)
        };
        best = match best {
            Some((bc, bs, bn)) if chi > bc || ties(chi, bc) && s >= bs => Some((bc, bs, bn)),
            _ => Some((chi, s, n)),
        };
    }
    let (chi2, s, n_s) = best.expect("nonempty N_s range");
    Ok(ImperfectFitResult {
        s,
        n_s,
        chi2,
        surface: curve(s, n_s as f64).iter().sum(),
        minimum_location: (s > 0.0).then(|| imperfect_minimum_location(s)),
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digit_laws::benford_first_digit_prob;

    #[test]
    fn curve_values() {
        let c = imperfect_curve(0.0, 64).unwrap();
        for (i, v) in c.iter().enumerate() {
            let p = benford_first_digit_prob(i as u32 + 1).unwrap();
            assert!((v - 64.0 * p).abs() < 1e-12);
        }
        let s: f64 = imperfect_curve(0.0012, 63).unwrap().iter().sum();
        assert!((s - 64.2411).abs() < 1e-3);
        let s: f64 = imperfect_curve(0.0031, 61).unwrap().iter().sum();
        assert!((s - 64.0879).abs() < 1e-3);
        assert!(imperfect_curve(-1.0, 5).is_err());
        assert!(imperfect_curve(0.1, 0).is_err());
    }

    #[test]
    fn curve_dips_then_rises() {
        let c = imperfect_curve(0.04, 100).unwrap();
        let argmin = (0..9).min_by(|&i, &j| c[i].total_cmp(&c[j])).unwrap();
        assert_eq!(argmin + 1, 5);
        assert!((c[4] - 100.0 * 1.4f64.log10()).abs() < 1e-12);
        assert!(c[..5].windows(2).all(|w| w[1] < w[0]));
        assert!(c[4..].windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let x = golden_section(|x| (x - 0.31234).powi(2), 0.0, 1.0);
        assert!((x - 0.31234).abs() < S_TOLERANCE);
    }

    #[test]
    fn noiseless_benford_recovers_s_zero() {
        let obs = curve(0.0, 64.0);
        let fit = fit_imperfect_counts(&obs).unwrap();
        assert_eq!(fit.s, 0.0);
        assert_eq!(fit.n_s, 64);
        assert!(fit.chi2 < 1e-20);
        assert_eq!(fit.minimum_location, None);
        assert!(!fit.degenerate);
    }

    #[test]
    fn fits_rounded_forward_counts() {
        // Rounding (0.003, 62) gives [19, 11, 8, 6, 5, 5, 4, 4, 3]; a brute-force
        // scan over N_s in 32..=128 and s in steps of 1e-6 puts the minimum at
        // N_s = 63, s = 0.002250, chi2 = 0.1512187.
        let obs = curve(0.003, 62.0).map(f64::round);
        assert_eq!(obs, [19.0, 11.0, 8.0, 6.0, 5.0, 5.0, 4.0, 4.0, 3.0]);
        let fit = fit_imperfect_counts(&obs).unwrap();
        assert_eq!(fit.n_s, 63);
        assert!((fit.s - 0.002_25).abs() < 2e-6, "{fit:?}");
        assert!((fit.chi2 - 0.151_218_7).abs() < 1e-6, "{fit:?}");
    }

    #[test]
    fn recovers_unrounded_forward_counts() {
        let obs = curve(0.003, 62.0);
        let fit = fit_imperfect_counts(&obs).unwrap();
        assert_eq!(fit.n_s, 62);
        assert!((fit.s - 0.003).abs() < 1e-6, "{fit:?}");
    }

    #[test]
    fn surface_matches_curve_sum() {
        let obs = [22.0, 10.0, 7.0, 5.0, 4.0, 4.0, 4.0, 4.0, 4.0];
        let fit = fit_imperfect_counts(&obs).unwrap();
        let sum: f64 = imperfect_curve(fit.s, fit.n_s).unwrap().iter().sum();
        assert!((fit.surface - sum).abs() < 1e-9);
        assert!(fit.s > 0.0);
        assert_eq!(fit.minimum_location, Some(1.0 / fit.s.sqrt()));
    }

    #[test]
    fn never_worse_than_benford() {
        let obs = [30.0, 9.0, 6.0, 4.0, 3.0, 2.0, 3.0, 3.0, 4.0];
        let fit = fit_imperfect_counts(&obs).unwrap();
        let total: f64 = obs.iter().sum();
        assert!(fit.chi2 <= objective(&obs, 0.0, total));
    }

    #[test]
    fn optimal_on_coarse_grid() {
        let obs = [19.0, 12.0, 8.0, 6.0, 4.0, 4.0, 3.0, 4.0, 4.0];
        let fit = fit_imperfect_counts(&obs).unwrap();
        for n in 32..=128u32 {
            for i in (0..GRID_POINTS).step_by(10) {
                let v = objective(&obs, i as f64 * S_GRID_STEP, f64::from(n));
                assert!(
                    v >= fit.chi2 - 1e-9,
                    "n={n} s={} beats fit {fit:?}",
                    i as f64 * S_GRID_STEP
                );
            }
        }
    }

    #[test]
    fn degenerate_and_small_inputs() {
        let mut obs = [0.0; 9];
        obs[0] = 64.0;
        let fit = fit_imperfect_counts(&obs).unwrap();
        assert!(fit.degenerate);
        assert!(fit_imperfect_counts(&[1.0; 9].map(|x| x * 0.5)).is_err());
        assert!(fit_imperfect_counts(&[f64::NAN; 9]).is_err());
        let h = DigitHistogram::from_counts(2, &[7; 10]).unwrap();
        assert!(fit_imperfect(&h).is_err());
    }

    #[test]
    fn is_a_pure_function() {
        let obs = [25.0, 11.0, 6.0, 5.0, 3.0, 3.0, 3.0, 4.0, 4.0];
        assert_eq!(
            fit_imperfect_counts(&obs).unwrap(),
            fit_imperfect_counts(&obs).unwrap()
        );
    }
}
