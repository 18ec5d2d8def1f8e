//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Three operations, each returning JSON: build an adapted system for a zoo
//! operator and factor through it, the norm and dual norm of a step function,
//! and the Rademacher pairing decay table. The `*_json` functions hold the
//! logic and run natively; the exported wrappers only convert errors.

use haarfact::diagnostics::rademacher_pairing_decay;
use haarfact::factorize::{factor_through, FactorOptions};
use haarfact::faithful::{build_adapted, BuildParams};
use haarfact::operator::zoo;
use haarfact::rng::{stream, stream_id};
use haarfact::{haar, interval_of, DyadicInterval, RiNormSpec, StepFunction};
use rand::Rng;
use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Browser builds stay at or below this resolution.
pub const MAX_DEMO_RESOLUTION: u32 = 10;

fn spec(space: &str) -> Result<RiNormSpec, String> {
    space.parse().map_err(|e: haarfact::HaarError| e.to_string())
}

fn check_resolution(n: u32) -> Result<(), String> {
    if n == 0 || n > MAX_DEMO_RESOLUTION {
        return Err(format!("resolution must be in 1..={MAX_DEMO_RESOLUTION}"));
    }
    Ok(())
}

#[derive(Serialize)]
struct Entry {
    j: u64,
    level: Option<u32>,
    c3: Option<f64>,
    c4: Option<f64>,
    diagonal: Option<f64>,
    values: Vec<f64>,
}

pub fn build_json(operator: &str, space: &str, resolution: u32, delta: f64, eta: f64, seed: u64) -> Result<String, String> {
    check_resolution(resolution)?;
    let spec = spec(space)?;
    let t = zoo(operator, resolution, seed).map_err(|e| e.to_string())?;
    let params = BuildParams { delta, eta, seed, ..Default::default() };
    let built = build_adapted(&t, &spec, &params).map_err(|e| e.to_string())?;
    let opts = FactorOptions { eta: Some(eta), seed, probes: 16, power_iterations: 100 };
    let fr = factor_through(&t, &built.system, &spec, &opts).map_err(|e| e.to_string())?;
    let mut entries = Vec::with_capacity(built.system.len());
    for j in 1..=built.system.len() as u64 {
        let row = built.certificates.iter().find(|r| r.j == j);
        entries.push(Entry {
            j,
            level: row.map(|r| r.m),
            c3: row.map(|r| r.c3),
            c4: row.map(|r| r.c4),
            diagonal: row.map(|r| r.diagonal),
            values: built.system.materialize(j).map_err(|e| e.to_string())?.into_values(),
        });
    }
    let value = json!({
        "resolution": resolution,
        "entries": entries,
        "grand_sum": built.grand_sum,
        "stop": built.stop.map(|s| s.to_string()),
        "certified_err": fr.certified_err,
        "probe_err": fr.probe_err,
        "diag_entries": fr.diag_entries,
        "residual_l2": fr.norms.residual_l2,
    });
    Ok(value.to_string())
}

pub fn norm_json(space: &str, values: &[f64]) -> Result<String, String> {
    let spec = spec(space)?;
    let f = StepFunction::from_values(values.to_vec()).map_err(|e| e.to_string())?;
    let dual = spec.dual_norm(&f);
    let value = json!({
        "norm": spec.norm(&f),
        "dual": dual.value,
        "certificate": dual.certificate,
        "rearrangement": f.decreasing_rearrangement().into_values(),
    });
    Ok(value.to_string())
}

fn parse_set(set: &str) -> Result<Vec<DyadicInterval>, String> {
    set.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (l, o) = p.split_once(':').ok_or_else(|| format!("`{p}` is not level:offset"))?;
            let level = l.trim().parse().map_err(|e| format!("{p}: {e}"))?;
            let offset = o.trim().parse().map_err(|e| format!("{p}: {e}"))?;
            DyadicInterval::new(level, offset).map_err(|e| e.to_string())
        })
        .collect()
}

/// `g = h_j`, or a seeded random `g` uniform in `[-1, 1]` per atom when `haar_index` is 0.
pub fn decay_json(resolution: u32, haar_index: u64, set: &str, from: u32, to: u32, seed: u64) -> Result<String, String> {
    check_resolution(resolution)?;
    let g = if haar_index == 0 {
        let mut rng = stream(seed, stream_id(0x60, resolution as u64, 0, 0));
        StepFunction::new(resolution, (0..1usize << resolution).map(|_| rng.gen_range(-1.0..1.0)).collect())
    } else {
        interval_of(haar_index).and_then(|node| haar(node, resolution))
    }
    .map_err(|e| e.to_string())?;
    let table = rademacher_pairing_decay(&g, &parse_set(set)?, seed, from..=to).map_err(|e| e.to_string())?;
    serde_json::to_string(&table.rows).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn build(operator: &str, space: &str, resolution: u32, delta: f64, eta: f64, seed: u32) -> Result<String, JsValue> {
    build_json(operator, space, resolution, delta, eta, seed as u64).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn norm(space: &str, values: &[f64]) -> Result<String, JsValue> {
    norm_json(space, values).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn decay(resolution: u32, haar_index: u32, set: &str, from: u32, to: u32, seed: u32) -> Result<String, JsValue> {
    decay_json(resolution, haar_index as u64, set, from, to, seed as u64).map_err(|e| JsValue::from_str(&e))
}
