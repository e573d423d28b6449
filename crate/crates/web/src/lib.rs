//! JSON entry points for the browser demo. Each `*_json` function returns the same document
//! the `twisted` CLI prints; the `wasm_bindgen` wrappers turn errors into JS exceptions.

use twisted_cocycle::combinatorics::Permutation;
use twisted_cocycle::lyapunov::{benettin_spectrum, BenettinConfig, MeasureSpec};
use twisted_cocycle::mahler::MahlerConfig;
use twisted_cocycle::substitution::{certify, Substitution2};
use wasm_bindgen::prelude::*;

/// Browser runs are single-threaded; keep them short.
pub const MAX_STEPS: usize = 200_000;
pub const MAX_SEEDS: usize = 16;

pub fn rauzy_class(perm: &str) -> Result<String, String> {
    let p = Permutation::parse_irreducible(perm).map_err(|e| e.to_string())?;
    let class = p.rauzy_class().map_err(|e| e.to_string())?;
    serde_json::to_string(&class.report()).map_err(|e| e.to_string())
}

/// `measure` is `lebesgue`, `hpi` or `qk`; `k` is ignored unless the measure is `qk`.
pub fn spectrum(perm: &str, measure: &str, k: u32, steps: usize, seeds: usize, seed: u64) -> Result<String, String> {
    let p = Permutation::parse_irreducible(perm).map_err(|e| e.to_string())?;
    let m = match measure {
        "lebesgue" => MeasureSpec::lebesgue(),
        "hpi" => MeasureSpec::hpi(),
        "qk" => MeasureSpec::qk(k),
        other => return Err(format!("unknown measure {other:?}")),
    };
    if steps > MAX_STEPS || seeds > MAX_SEEDS {
        return Err(format!("demo limits: steps <= {MAX_STEPS}, seeds <= {MAX_SEEDS}"));
    }
    let cfg = BenettinConfig { steps, seeds, seed, burn_in: 200, ..BenettinConfig::default() };
    let est = benettin_spectrum(&p, &m, &cfg).map_err(|e| e.to_string())?;
    serde_json::to_string(&est).map_err(|e| e.to_string())
}

pub fn certificate(rule: &str, n_max: u32, mc_samples: usize, seed: u64) -> Result<String, String> {
    let s = Substitution2::parse(rule).map_err(|e| e.to_string())?;
    let cfg = MahlerConfig { mc_samples, seed, ..MahlerConfig::default() };
    let cert = certify(&s, n_max, &cfg).map_err(|e| e.to_string())?;
    serde_json::to_string(&cert).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn rauzy_class_json(perm: &str) -> Result<String, JsError> {
    rauzy_class(perm).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn spectrum_json(
    perm: &str,
    measure: &str,
    k: u32,
    steps: usize,
    seeds: usize,
    seed: u64,
) -> Result<String, JsError> {
    spectrum(perm, measure, k, steps, seeds, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn certify_json(rule: &str, n_max: u32, mc_samples: usize, seed: u64) -> Result<String, JsError> {
    certificate(rule, n_max, mc_samples, seed).map_err(|e| JsError::new(&e))
}
