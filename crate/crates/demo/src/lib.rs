//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export returns a flat `Float64Array`; the layouts are documented on
//! the native functions, which are also what the tests call.

use finder::bounds::markov_rhs;
use finder::evaluation::{build_transform, MaPolicy, PipelineConfig};
use finder::kle::{self, DEFAULT_RANK_TOL};
use finder::synth::{self, CoefficientLaw, SynthSpec};
use finder::{ClassLabel, Dataset, FinderError, Result, Variant};
use nalgebra::DVector;
use wasm_bindgen::prelude::*;

pub const DIM: usize = 16;
const N_A: usize = 80;
const N_B: usize = 40;

/// Class A: eight decaying modes. Class B: four unit modes, the first
/// `overlap` shared with A and the rest on axes A never uses.
fn scenario(overlap: usize, seed: u64) -> Result<(SynthSpec, SynthSpec)> {
    let a: Vec<f64> = (0..8).map(|r| 3.0 * 0.75f64.powi(r)).collect();
    synth::two_class_scenario(DIM, &DVector::zeros(DIM), &a, &[1.0; 4], overlap, seed)
}

/// Residual coordinates of a two-class sample as `[x, y, class]` triples,
/// class 0 for A and 1 for B. `y` is 0 when `m_res` is 1.
pub fn project(
    variant: &str,
    m_a: usize,
    m_res: usize,
    overlap: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let variant: Variant = variant.parse()?;
    let (a, b) = scenario(overlap, seed)?;
    let data: Dataset = synth::labeled_dataset(&a, &b, N_A, N_B)?;
    let rows_a = data.values.select_rows(&data.class_rows(ClassLabel::A)?);
    let rows_b = data.values.select_rows(&data.class_rows(ClassLabel::B)?);
    let cfg = PipelineConfig {
        variant,
        m_a: MaPolicy::Fixed(m_a),
        m_res,
        ..PipelineConfig::default()
    };
    let (transform, _) = build_transform(&rows_a, &rows_b, &cfg)?;
    let coords = transform.apply_rows(&data.values)?;
    let labels = data.labels.as_ref().ok_or(FinderError::Empty("labels"))?;
    let mut out = Vec::with_capacity(3 * coords.nrows());
    for (i, label) in labels.iter().enumerate() {
        out.push(coords[(i, 0)]);
        out.push(if coords.ncols() > 1 {
            coords[(i, 1)]
        } else {
            0.0
        });
        out.push(if *label == ClassLabel::B { 1.0 } else { 0.0 });
    }
    Ok(out)
}

/// `[eps, bound, frequency]` triples for class A projected on the ACA-S
/// residual basis: the Markov bound from the true eigen-system against the
/// exceedance frequency over `n` draws.
pub fn markov_curve(law: &str, m_a: usize, m_res: usize, n: usize, seed: u64) -> Result<Vec<f64>> {
    let (mut a, b) = scenario(2, seed)?;
    a.coefficient_law = law.parse::<CoefficientLaw>()?;
    let draws = synth::sample_matrix(&a, n)?;
    let rows_b = synth::sample_matrix(&b, N_B)?;
    let cfg = PipelineConfig {
        variant: Variant::AcaS,
        m_a: MaPolicy::Fixed(m_a),
        m_res,
        ..PipelineConfig::default()
    };
    let (transform, _) = build_transform(&draws, &rows_b, &cfg)?;
    let truth = a.eigensystem();
    let centered = kle::center_rows(&draws, &a.mean)?;
    let norms: Vec<f64> = (centered * &transform.basis.vectors)
        .row_iter()
        .map(|r| r.norm_squared())
        .collect();
    let mut out = Vec::new();
    for k in 1..=40 {
        let eps = 0.075 * k as f64;
        let bound = markov_rhs(&truth, &transform.basis, eps)?.rhs;
        let hits = norms.iter().filter(|&&x| x >= eps * eps).count();
        out.extend([eps, bound, hits as f64 / n as f64]);
    }
    Ok(out)
}

/// True class-A eigenvalues, then the estimates from `n` samples (both
/// padded to `DIM`), then the smallest truncation capturing `fraction` of
/// the estimated variance.
pub fn spectrum(n: usize, fraction: f64, seed: u64) -> Result<Vec<f64>> {
    let (a, _) = scenario(0, seed)?;
    let rows = synth::sample_matrix(&a, n)?;
    let mean = kle::row_mean(&rows)?;
    let eig = kle::estimate(&rows, &mean, DEFAULT_RANK_TOL)?;
    let mut out = vec![0.0; 2 * DIM + 1];
    for (k, l) in a.eigenvalues.iter().enumerate() {
        out[k] = *l;
    }
    for (k, l) in eig.eigenvalues.iter().take(DIM).enumerate() {
        out[DIM + k] = *l;
    }
    out[2 * DIM] = kle::energy_truncation(&eig, fraction)? as f64;
    Ok(out)
}

fn js(r: Result<Vec<f64>>) -> std::result::Result<Vec<f64>, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = projectScenario)]
pub fn project_scenario(
    variant: &str,
    m_a: usize,
    m_res: usize,
    overlap: usize,
    seed: u32,
) -> std::result::Result<Vec<f64>, JsError> {
    js(project(variant, m_a, m_res, overlap, seed.into()))
}

#[wasm_bindgen(js_name = markovCurve)]
pub fn markov_curve_js(
    law: &str,
    m_a: usize,
    m_res: usize,
    n: usize,
    seed: u32,
) -> std::result::Result<Vec<f64>, JsError> {
    js(markov_curve(law, m_a, m_res, n, seed.into()))
}

#[wasm_bindgen(js_name = spectrum)]
pub fn spectrum_js(n: usize, fraction: f64, seed: u32) -> std::result::Result<Vec<f64>, JsError> {
    js(spectrum(n, fraction, seed.into()))
}

#[wasm_bindgen(js_name = dimension)]
pub fn dimension() -> usize {
    DIM
}
