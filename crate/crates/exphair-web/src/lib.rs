//! Browser bindings. Points cross the boundary as flat `[re0, im0, re1, im1, ...]` arrays.

use exphair::dynamics::{contraction_experiment, orbit, Side};
use exphair::hair::tail_polyline;
use exphair::itinerary::parse_itinerary;
use num_complex::Complex64;
use wasm_bindgen::prelude::*;

fn flatten(points: impl IntoIterator<Item = Complex64>) -> Vec<f64> {
    points.into_iter().flat_map(|z| [z.re, z.im]).collect()
}

/// Tail samples of the hair with the given itinerary, from `Re = zeta` up to `eta_max`.
pub fn hair_points(itinerary: &str, lambda: f64, zeta: f64, eta_max: f64) -> Result<Vec<f64>, String> {
    let s = parse_itinerary(itinerary).map_err(|e| e.to_string())?;
    let tail = tail_polyline(&s, zeta, eta_max, 0.25, lambda).map_err(|e| e.to_string())?;
    Ok(flatten(tail.samples.iter().map(|p| p.point)))
}

/// Machine-range part of the forward orbit of `re + i im`.
pub fn forward_orbit(re: f64, im: f64, lambda: f64, steps: usize) -> Vec<f64> {
    flatten(orbit(Complex64::new(re, im), lambda, steps).machine_points())
}

/// `[m0, terminal.re, terminal.im, q.re, q.im, d_1, d_2, ...]`.
pub fn contraction_summary(n: u32, lambda: f64, steps: usize, plus: bool) -> Result<Vec<f64>, String> {
    let side = if plus { Side::Plus } else { Side::Minus };
    let rep = contraction_experiment(n, lambda, steps, side).map_err(|e| e.to_string())?;
    let mut out = vec![rep.m0 as f64, rep.terminal.re, rep.terminal.im, rep.fixed_point.re, rep.fixed_point.im];
    out.extend(rep.diameters);
    Ok(out)
}

#[wasm_bindgen]
pub fn trace_hair(itinerary: &str, lambda: f64, zeta: f64, eta_max: f64) -> Result<Vec<f64>, JsValue> {
    hair_points(itinerary, lambda, zeta, eta_max).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn orbit_points(re: f64, im: f64, lambda: f64, steps: usize) -> Vec<f64> {
    forward_orbit(re, im, lambda, steps)
}

#[wasm_bindgen]
pub fn contraction(n: u32, lambda: f64, steps: usize, plus: bool) -> Result<Vec<f64>, JsValue> {
    contraction_summary(n, lambda, steps, plus).map_err(|e| JsValue::from_str(&e))
}
