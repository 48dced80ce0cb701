//! Digit-law forensics for numeric datasets.
//!
//! The crate evaluates Benford-family digit laws, extracts significant
//! digits from exact decimals and computed reals, applies the Theil map and
//! related normalizations to budget series, runs Pearson chi-square
//! conformity tests against Benford and uniform references, and fits the
//! imperfect Benford law `N_s * log10(1/x + 1 + s*x)` to first-digit
//! histograms. The [`audit`] module ties these together into the batch
//! pipeline behind the `benford-audit` binary.

pub mod audit;
pub mod digit_extract;
pub mod digit_laws;
pub mod error;
pub mod imperfect_fit;
pub mod ingest;
pub mod transforms;

pub use digit_extract::{extract, extract_from_real, Decimal};
pub use digit_laws::{
    benford_first_digit_prob, generalized_prob, imperfect_counts, nth_digit_prob, string_prob,
    DigitDomain, DigitLaw,
};
pub use error::{Error, Result};
pub use gof_tests::{chi2_benford, chi2_uniform, run_battery, DigitHistogram, GofResult};
pub use imperfect_fit::{fit_imperfect, imperfect_curve, ImperfectFitResult};
pub use ingest::{RegimeSpec, TimeSeries};
pub use transforms::{TheilBase, TransformKind};
