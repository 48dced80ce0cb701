//! wasm-bindgen bindings behind `www/index.html`.
//!
//! Each export has a plain-Rust twin returning `Result<_, String>` so the
//! logic is testable off the browser.

use benford_audit::digit_laws::{
    benford_first_digit_prob, imperfect_minimum_location, nth_digit_prob,
};
use benford_audit::gof_tests::{
    benford_reference, chi2_benford, chi2_uniform, DigitHistogram, GofResult,
};
use benford_audit::imperfect_fit::{fit_imperfect_counts, imperfect_curve, ImperfectFitResult};
use benford_audit::ingest::{synth_benford, Generator};
use benford_audit::transforms::{self, TransformKind};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn js_err(e: String) -> JsError {
    JsError::new(&e)
}

#[derive(Debug, Serialize)]
pub struct CurveView {
    pub counts: Vec<f64>,
    pub benford: Vec<f64>,
    pub surface: f64,
    pub minimum_location: Option<f64>,
    pub minimum_value: f64,
}

/// Imperfect-law counts next to Benford counts with the same scale.
pub fn curve_view(s: f64, n_s: u32) -> Result<CurveView, String> {
    let counts = imperfect_curve(s, u64::from(n_s)).map_err(|e| e.to_string())?;
    let benford = (1..=9)
        .map(|d| benford_first_digit_prob(d).map(|p| p * f64::from(n_s)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    Ok(CurveView {
        surface: counts.iter().sum(),
        counts: counts.to_vec(),
        benford,
        minimum_location: (s > 0.0).then(|| imperfect_minimum_location(s)),
        minimum_value: f64::from(n_s) * (1.0 + 2.0 * s.sqrt()).log10(),
    })
}

#[wasm_bindgen(js_name = imperfectCurve)]
pub fn imperfect_curve_js(s: f64, n_s: u32) -> Result<String, JsError> {
    let view = curve_view(s, n_s).map_err(js_err)?;
    serde_json::to_string(&view).map_err(|e| js_err(e.to_string()))
}

/// Fits comma- or space-separated first-digit counts.
pub fn fit_text(counts: &str) -> Result<ImperfectFitResult, String> {
    let values = counts
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| format!("not a count: {t:?}")))
        .collect::<Result<Vec<_>, _>>()?;
    let observed: [f64; 9] = values
        .try_into()
        .map_err(|v: Vec<f64>| format!("need 9 counts (digits 1..9), got {}", v.len()))?;
    fit_imperfect_counts(&observed).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = fitCounts)]
pub fn fit_counts_js(counts: &str) -> Result<String, JsError> {
    let fit = fit_text(counts).map_err(js_err)?;
    serde_json::to_string(&fit).map_err(|e| js_err(e.to_string()))
}

#[derive(Debug, Serialize)]
pub struct SynthView {
    pub position: u32,
    pub digits: Vec<u32>,
    pub observed: Vec<u64>,
    pub expected: Vec<f64>,
    pub tests: Vec<TestView>,
    pub excluded: usize,
}

#[derive(Debug, Serialize)]
pub struct TestView {
    pub name: String,
    pub statistic: f64,
    pub critical_value: f64,
    pub rejected: bool,
}

impl From<GofResult> for TestView {
    fn from(r: GofResult) -> Self {
        TestView {
            name: r.name(),
            statistic: r.statistic,
            critical_value: r.critical_value,
            rejected: r.statistic > r.critical_value,
        }
    }
}

/// Generates a synthetic series, optionally transforms it, and tests the
/// chosen digit position (1 or 2) against Benford and uniform.
pub fn synth_view(
    count: u32,
    generator: &str,
    seed: u32,
    scale: f64,
    decades: u32,
    transform: &str,
    position: u32,
) -> Result<SynthView, String> {
    let generator = match generator {
        "weyl" => Generator::Weyl,
        "seeded-random" => Generator::SeededRandom {
            seed: u64::from(seed),
        },
        other => return Err(format!("unknown generator {other:?}")),
    };
    let kind: TransformKind = transform
        .parse()
        .map_err(|e: benford_audit::Error| e.to_string())?;
    let series = synth_benford("synthetic", count as usize, generator, scale, decades, 0)
        .map_err(|e| e.to_string())?;
    let mapped = transforms::apply(&series, kind, None).map_err(|e| e.to_string())?;
    if mapped.kept.is_empty() {
        return Err(format!("every point has a non-positive image under {kind}"));
    }
    let hist =
        DigitHistogram::from_samples(position, &mapped.kept, None).map_err(|e| e.to_string())?;
    let probs = benford_reference(position).map_err(|e| e.to_string())?;
    let tests = vec![
        chi2_benford(&hist).map_err(|e| e.to_string())?.into(),
        chi2_uniform(&hist).map_err(|e| e.to_string())?.into(),
    ];
    Ok(SynthView {
        position,
        digits: hist.digits().collect(),
        observed: hist.domain_counts().to_vec(),
        expected: probs.iter().map(|p| p * hist.total as f64).collect(),
        tests,
        excluded: mapped.excluded.len(),
    })
}

#[wasm_bindgen(js_name = synthAudit)]
pub fn synth_audit_js(
    count: u32,
    generator: &str,
    seed: u32,
    scale: f64,
    decades: u32,
    transform: &str,
    position: u32,
) -> Result<String, JsError> {
    let view =
        synth_view(count, generator, seed, scale, decades, transform, position).map_err(js_err)?;
    serde_json::to_string(&view).map_err(|e| js_err(e.to_string()))
}

/// Probabilities of digits 0..=9 at position `n >= 2`.
pub fn nth_digit_table(n: u32) -> Result<Vec<f64>, String> {
    if n > 7 {
        return Err("positions past 7 are too slow to sum in the browser".into());
    }
    (0..=9)
        .map(|d| nth_digit_prob(d, n).map(|p| p.value))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = nthDigitLaw)]
pub fn nth_digit_law_js(n: u32) -> Result<Vec<f64>, JsError> {
    nth_digit_table(n).map_err(js_err)
}
