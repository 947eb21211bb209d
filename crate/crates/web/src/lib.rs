//! Browser bindings. Each export takes and returns a JSON string; the
//! functions in [`demo`] do the work and are plain Rust.

use wasm_bindgen::prelude::*;

pub mod demo;

fn to_js(result: Result<String, String>) -> Result<String, JsValue> {
    result.map_err(|e| JsValue::from_str(&e))
}

/// Runs one episode and returns positions, the association of the chosen
/// slot and per-slot energies.
#[wasm_bindgen]
pub fn explore_episode(request: &str) -> Result<String, JsValue> {
    to_js(demo::explore_json(request))
}

/// Averages energy and cost over a few realizations along one axis.
#[wasm_bindgen]
pub fn sweep_curve(request: &str) -> Result<String, JsValue> {
    to_js(demo::sweep_json(request))
}

/// Per-slot AoI of a few devices under the cyclic schedule.
#[wasm_bindgen]
pub fn aoi_sawtooth(request: &str) -> Result<String, JsValue> {
    to_js(demo::sawtooth_json(request))
}
