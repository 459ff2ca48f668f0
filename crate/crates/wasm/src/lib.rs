//! Browser bindings. Every export takes a JSON settings string and returns a
//! JSON string, so the page needs no generated type glue beyond strings.

use mcassm::analysis::{self, UubEvaluator};
use mcassm::array::{self, EffectiveChannel};
use mcassm::channel::{self, ArrayConfig, ChannelScenario, MultipathComponent};
use mcassm::constellation::Constellation;
use mcassm::design::{self, Baseline};
use serde::Deserialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct Settings {
    /// `psk16`, `qam16`, `qam8r`, ...
    pub constellation: String,
    pub l: usize,
    pub n_s: usize,
    pub n_tx: usize,
    pub n_rx: usize,
    pub spacing: f64,
    /// `[gain, aod, aoa]` per path, angles in radians. Empty means the reference link.
    pub paths: Vec<[f64; 3]>,
    pub snr_lo: f64,
    pub snr_hi: f64,
    pub snr_points: usize,
    pub sweep_points: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            constellation: "psk16".into(),
            l: 4,
            n_s: 4,
            n_tx: 16,
            n_rx: 16,
            spacing: 0.5,
            paths: vec![],
            snr_lo: -10.0,
            snr_hi: 30.0,
            snr_points: 41,
            sweep_points: 201,
        }
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn setup(settings: &str) -> Result<(Settings, Constellation, EffectiveChannel), String> {
    let s: Settings = serde_json::from_str(if settings.trim().is_empty() { "{}" } else { settings }).map_err(err)?;
    let c: Constellation = s.constellation.parse().map_err(err)?;
    let arr = ArrayConfig::new(s.n_tx, s.n_rx, s.spacing, s.spacing).map_err(err)?;
    let scenario = if s.paths.is_empty() {
        channel::reference_scenario().with_array(arr)
    } else {
        let comps: Vec<MultipathComponent> = s.paths.iter().map(|p| MultipathComponent::new(p[0], p[1], p[2])).collect();
        ChannelScenario::new("custom", channel::normalize_gains(&comps).map_err(err)?, arr).map_err(err)?
    };
    let eff = array::effective_channel(&scenario, s.n_s).map_err(err)?;
    Ok((s, c, eff))
}

/// Spectrum, power split and candidate table.
pub fn optimize_json(settings: &str) -> Result<String, String> {
    let (s, c, eff) = setup(settings)?;
    let opt = design::optimize(&eff, &c, s.l, 2).map_err(err)?;
    Ok(json!({
        "eigvals": opt.eigvals,
        "iota": opt.design.iota,
        "xi2": opt.design.xi.iter().map(|x| x * x).collect::<Vec<_>>(),
        "min_ed": opt.design.min_ed,
        "candidates": opt.selection.table,
        "selected": opt.selection.index,
    })
    .to_string())
}

/// Minimum squared distance against `ι₂`, three decades either side of `λ₁/λ₂`.
pub fn ed_sweep_json(settings: &str) -> Result<String, String> {
    let (s, c, eff) = setup(settings)?;
    let book = design::design_upsilon(s.l, 2, s.n_s).map_err(err)?;
    let opt = design::optimize_with_book(&eff, &c, &book).map_err(err)?;
    let r = eff.eigvals[0] / eff.eigvals[1];
    let grid = analysis::log_grid(1e-3 * r, 1e3 * r, s.sweep_points.max(2));
    let pts = analysis::ed_sweep(&eff, &book, &c, &grid).map_err(err)?;
    Ok(json!({
        "iota2": pts.iter().map(|p| p.iota2).collect::<Vec<_>>(),
        "min_ed": pts.iter().map(|p| p.min_ed).collect::<Vec<_>>(),
        "optimum": opt.design.iota[1],
        "ratio": r,
    })
    .to_string())
}

/// Bound curves for the designed matrix and for one beam per path (`W = I`).
pub fn uub_curves_json(settings: &str) -> Result<String, String> {
    let (s, c, eff) = setup(settings)?;
    let n = s.snr_points.max(2);
    let snr: Vec<f64> = (0..n).map(|i| s.snr_lo + (s.snr_hi - s.snr_lo) * i as f64 / (n - 1) as f64).collect();
    let curve = |b: Baseline, l: usize| -> Result<Vec<f64>, String> {
        let pre = design::build_precoder(b, &eff, &c, l, 2).map_err(err)?;
        Ok(UubEvaluator::new(&pre.w, &eff, &c).map_err(err)?.curve(&snr))
    };
    Ok(json!({
        "snr_db": snr,
        "mca": curve(Baseline::Mca, s.l)?,
        "ssm": curve(Baseline::Ssm, s.n_s)?,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn optimize(settings: &str) -> Result<String, JsError> {
    optimize_json(settings).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn ed_sweep(settings: &str) -> Result<String, JsError> {
    ed_sweep_json(settings).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn uub_curves(settings: &str) -> Result<String, JsError> {
    uub_curves_json(settings).map_err(|e| JsError::new(&e))
}
