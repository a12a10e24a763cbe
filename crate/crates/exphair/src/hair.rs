//! Hair points by inverse-branch pullback, tails, crossing parameters and bases.
//!
//! A point `γ_s(η)` is recovered from the asymptotic value at depth `d`,
//! `z_d ≈ F^d(η) − ln λ + 2πi s_d`, by applying `L_{λ,s_j}` for `j = d−1..0`.
//! Coordinates are kept in offset form `z_j = F^j(η) + w_j`, using
//! `ln(e^t − 1 + w) = t + ln(1 + (w − 1)e^{−t})`, so the huge values `F^j(η)`
//! never need to be materialized.

use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

use crate::itinerary::{exp_bounded_witness, ItinerarySpec};
use crate::xnum::{complex_ln_1p, ComplexPoint, NumError, TowerReal, XPoint, XReal};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HairError {
    #[error(transparent)]
    Num(#[from] NumError),
    #[error("pullback did not settle: depth difference {0:e}")]
    DepthInsufficient(f64),
    #[error("no crossing of the vertical line found")]
    NoBracket,
    #[error("eta {eta} is below the admissible threshold {threshold}")]
    Inadmissible { eta: f64, threshold: f64 },
    #[error("itinerary has no exponential-boundedness witness on the search grid")]
    NotExpBounded,
}

/// Largest depth used by the pullback.
pub const MAX_DEPTH: u32 = 64;
/// Largest accepted difference between depth `d` and `d − 1`.
pub const DEPTH_TOL: f64 = 1e-8;
/// Largest planar spacing between consecutive tail samples.
pub const TAIL_SPACING: f64 = 0.25;
const WITNESS_HORIZON: u64 = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HairSample {
    pub eta: f64,
    pub point: ComplexPoint,
    pub depth: u32,
    pub err_bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailSegment {
    pub s: ItinerarySpec,
    pub zeta: f64,
    pub theta: f64,
    pub samples: Vec<HairSample>,
}

/// Parameter interval `[θ_s, F^{level+1}(θ_{0_{level+1} s}))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BaseSegment {
    pub eta_lo: f64,
    pub eta_hi: TowerReal,
    pub level: u32,
}

/// Smallest admissible potential `η* = x + 2 ln(ln λ + 3)`.
pub fn eta_star(s: &ItinerarySpec, lambda: f64) -> Result<f64, HairError> {
    let (_, x) = exp_bounded_witness(s, WITNESS_HORIZON).ok_or(HairError::NotExpBounded)?;
    Ok(x + 2.0 * (lambda.ln() + 3.0).ln())
}

/// Depth rule: the first `d` with `F^d(η)` at tower level 2 or more, plus two.
pub fn default_depth(eta: f64) -> u32 {
    let mut t = TowerReal::from_f64(eta);
    let mut d = 0;
    while t.level() < 2 && d < MAX_DEPTH {
        t = t.f();
        d += 1;
    }
    (d + 2).min(MAX_DEPTH)
}

fn anchor(s: &ItinerarySpec, j: u64, lambda: f64) -> Complex64 {
    Complex64::new(-lambda.ln(), 2.0 * PI * s.symbol_at(j) as f64)
}

/// `w_0` at the given depth; `γ_s(η) = η + w_0`.
fn pullback_offset(s: &ItinerarySpec, eta: f64, depth: u32, lambda: f64) -> Result<Complex64, NumError> {
    let mut ts = Vec::with_capacity(depth as usize);
    let mut t = TowerReal::from_f64(eta);
    for _ in 0..depth {
        ts.push(t);
        t = t.f();
    }
    let mut w = anchor(s, depth as u64, lambda);
    for j in (0..depth as usize).rev() {
        let decay = match ts[j].to_f64() {
            Some(v) if v < 745.0 => (-v).exp(),
            _ => 0.0,
        };
        let v = (w - 1.0) * decay;
        if v.re <= -1.0 && v.im == 0.0 {
            return Err(NumError::BranchCut);
        }
        w = complex_ln_1p(v) + anchor(s, j as u64, lambda);
    }
    Ok(w)
}

fn pullback(s: &ItinerarySpec, eta: f64, depth: u32, lambda: f64) -> Result<Complex64, NumError> {
    Ok(pullback_offset(s, eta, depth, lambda)? + eta)
}

/// `γ_s(η)` with a Cauchy error estimate; no admissibility check.
pub fn trace_unchecked(s: &ItinerarySpec, eta: f64, depth: Option<u32>, lambda: f64) -> Result<HairSample, HairError> {
    let d = depth.unwrap_or_else(|| default_depth(eta)).min(MAX_DEPTH);
    let z = pullback(s, eta, d, lambda)?;
    let other = if d == 0 { pullback(s, eta, 1, lambda)? } else { pullback(s, eta, d - 1, lambda)? };
    let diff = (z - other).norm();
    if diff > DEPTH_TOL {
        return Err(HairError::DepthInsufficient(diff));
    }
    Ok(HairSample { eta, point: z, depth: d, err_bound: diff })
}

/// `γ_s(η)` for admissible `η ≥ η*`.
pub fn trace_point(s: &ItinerarySpec, eta: f64, depth: Option<u32>, lambda: f64) -> Result<HairSample, HairError> {
    let threshold = eta_star(s, lambda)?;
    if eta < threshold {
        return Err(HairError::Inadmissible { eta, threshold });
    }
    trace_unchecked(s, eta, depth, lambda)
}

/// First index `j` with `s_j ≠ 0`.
pub fn first_nonzero(s: &ItinerarySpec) -> u64 {
    (0..).find(|&j| s.symbol_at(j) != 0).expect("itinerary has non-zero symbols")
}

/// `γ_s(η)` for a potential of any magnitude. Tiny imaginary parts are kept exactly.
pub fn trace_ext(s: &ItinerarySpec, eta: XReal, depth: Option<u32>, lambda: f64) -> Result<XPoint, HairError> {
    let base = match eta.to_f64() {
        Some(v) if v < 1e6 => default_depth(v),
        _ => 2,
    };
    let d = depth.unwrap_or_else(|| base.max(first_nonzero(s) as u32 + 3)).min(MAX_DEPTH);
    let mut ts = Vec::with_capacity(d as usize);
    let mut t = eta;
    for _ in 0..d {
        ts.push(t);
        t = t.exp() - XReal::ONE;
    }
    let ln_l = XReal::from(-lambda.ln());
    let anchor_x = |j: u64| XPoint::new(ln_l, XReal::from(2.0 * PI * s.symbol_at(j) as f64));
    let mut w = anchor_x(d as u64);
    for j in (0..d as usize).rev() {
        let decay = (-ts[j]).exp();
        let v = w.sub(&XPoint::new(XReal::ONE, XReal::ZERO)).scale(decay);
        w = v.ln_1p().add(&anchor_x(j as u64));
    }
    Ok(XPoint::new(eta + w.re, w.im))
}

/// `θ_s`: the largest parameter with `Re γ_s(θ) = ζ`.
pub fn find_theta(s: &ItinerarySpec, zeta: f64, lambda: f64) -> Result<f64, HairError> {
    let floor = eta_star(s, lambda)?;
    let re = |eta: f64| -> Result<f64, HairError> { Ok(trace_unchecked(s, eta, None, lambda)?.point.re) };
    let mut hi = (zeta + lambda.ln().abs() + 10.0).max(floor + 10.0);
    if re(hi)? <= zeta {
        return Err(HairError::NoBracket);
    }
    let mut lo = hi - 0.5;
    loop {
        if lo < floor {
            return Err(HairError::NoBracket);
        }
        if re(lo)? <= zeta {
            break;
        }
        hi = lo;
        lo -= 0.5;
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if re(mid)? > zeta {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Samples the tail `γ_s([θ_s, eta_max])`, refined to planar spacing at most [`TAIL_SPACING`].
pub fn tail_polyline(s: &ItinerarySpec, zeta: f64, eta_max: f64, step: f64, lambda: f64) -> Result<TailSegment, HairError> {
    assert!(step > 0.0, "step must be positive");
    let theta = find_theta(s, zeta, lambda)?;
    let sample = |eta: f64| trace_unchecked(s, eta, None, lambda);
    let mut samples = vec![sample(theta)?];
    let mut k = 1u64;
    loop {
        let eta = (theta + k as f64 * step).min(eta_max);
        if eta <= samples.last().unwrap().eta {
            break;
        }
        let next = sample(eta)?;
        refine(&sample, *samples.last().unwrap(), next, &mut samples, 0)?;
        samples.push(next);
        if eta >= eta_max {
            break;
        }
        k += 1;
    }
    Ok(TailSegment { s: s.clone(), zeta, theta, samples })
}

fn refine<G>(sample: &G, a: HairSample, b: HairSample, out: &mut Vec<HairSample>, level: u32) -> Result<(), HairError>
where
    G: Fn(f64) -> Result<HairSample, HairError>,
{
    if (a.point - b.point).norm() <= TAIL_SPACING || level > 30 {
        return Ok(());
    }
    let m = sample(0.5 * (a.eta + b.eta))?;
    refine(sample, a, m, out, level + 1)?;
    out.push(m);
    refine(sample, m, b, out, level + 1)
}

/// Parameter interval of the base `α_s^level`, with `ŝ^n = 0_n s`.
pub fn base_segment(s: &ItinerarySpec, zeta: f64, level: u32, lambda: f64) -> Result<BaseSegment, HairError> {
    let eta_lo = find_theta(s, zeta, lambda)?;
    let hat = s.prepend_zeros(level as usize + 1);
    let theta_hat = find_theta(&hat, zeta, lambda)?;
    let eta_hi = TowerReal::from_f64(theta_hat).f_iter(level + 1);
    Ok(BaseSegment { eta_lo, eta_hi, level })
}
