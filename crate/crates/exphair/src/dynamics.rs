//! Forward orbits of `E_λ`, shadowing of the orbit of `0`, ω-limit
//! classification, the singular point locator and contraction toward `q_±`.

use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

use crate::itinerary::{ItineraryError, ItinerarySpec};
use crate::target::{is_delta_vertical, tower_exp_map};
use crate::xnum::{exp_map, find_fixed_points, inverse_branch, strip_index, ComplexPoint, NumError, TowerReal, XReal, OVERFLOW_RE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Itinerary(#[from] ItineraryError),
    #[error("hypothesis Re(z) < 1 − E(r_n) cannot be certified for n = {0}")]
    HypothesisUnverifiable(u32),
    #[error("orbit leaves the itinerary at step {0}")]
    ItineraryMismatch(usize),
    #[error("window {0} is left by the inverse-branch chain")]
    EmptyWindow(usize),
}

/// `E_λ^n(0)` as a tower.
pub fn orbit0(n: u32, lambda: f64) -> TowerReal {
    let mut x = TowerReal::ZERO;
    for _ in 0..n {
        x = tower_exp_map(x, lambda);
    }
    x
}

/// `r_n = E_λ^n(0) − 1` in machine range.
fn r_machine(n: u32, lambda: f64) -> Option<f64> {
    orbit0(n, lambda).to_f64().map(|v| v - 1.0)
}

/// The `n` with `x ∈ T_n = [r_n, r_{n+1})`, if `x ≥ r_0 = −1`.
pub fn t_level(x: f64, lambda: f64) -> Option<u32> {
    if x < -1.0 {
        return None;
    }
    let mut n = 0;
    loop {
        match r_machine(n + 1, lambda) {
            Some(r) if x >= r => n += 1,
            _ => return Some(n),
        }
    }
}

/// [`t_level`] for a value beyond machine range.
pub fn t_level_tower(x: TowerReal, lambda: f64) -> u32 {
    let mut n = 0;
    while orbit0(n + 1, lambda).add_small(-1.0) <= x {
        n += 1;
    }
    n
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepPoint {
    Machine(ComplexPoint),
    /// Modulus of a point whose real part left machine range; its strip is unknown.
    Tower(TowerReal),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitStep {
    pub point: StepPoint,
    pub strip: Option<i64>,
    pub t_level: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrbitVerdict {
    Escaping,
    ShadowingOrbit0,
    BoundedWindow,
    BudgetExhausted,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitRecord {
    pub z0: ComplexPoint,
    pub steps: Vec<OrbitStep>,
    pub verdict: OrbitVerdict,
    /// `n` of the successful shadowing report, if any.
    pub shadow_n: Option<u32>,
}

/// Distance from `Im z` to the nearest strip boundary `(2k+1)π`.
pub fn strip_margin(z: ComplexPoint) -> f64 {
    let t = (z.im - PI).rem_euclid(2.0 * PI);
    t.min(2.0 * PI - t)
}

impl OrbitRecord {
    /// Forward error bounds for the machine steps, from rounding of size
    /// `ε|z|` per step amplified by `|E'(z)| = |E(z)|`.
    pub fn error_bounds(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.steps.len());
        let mut err = f64::EPSILON * self.z0.norm();
        for s in &self.steps {
            match s.point {
                StepPoint::Machine(z) => {
                    if !out.is_empty() {
                        err = err * z.norm() + f64::EPSILON * z.norm();
                    }
                    out.push(err);
                }
                StepPoint::Tower(_) => out.push(f64::INFINITY),
            }
        }
        out
    }

    pub fn machine_points(&self) -> Vec<ComplexPoint> {
        self.steps
            .iter()
            .filter_map(|s| match s.point {
                StepPoint::Machine(z) => Some(z),
                StepPoint::Tower(_) => None,
            })
            .collect()
    }
}

/// Consecutive strict increases of the T-level needed for an escape verdict.
pub const ESCAPE_RUN: usize = 10;
/// Radius of the window used for the bounded verdict.
pub const BOUNDED_RADIUS: f64 = 1e3;

fn step(z: ComplexPoint, lambda: f64) -> StepPoint {
    if z.re > OVERFLOW_RE {
        let m = TowerReal::from_f64(z.re).add_small(lambda.ln()).exp();
        StepPoint::Tower(m)
    } else {
        StepPoint::Machine(exp_map(z, lambda).expect("checked range"))
    }
}

fn annotate(p: StepPoint, lambda: f64) -> OrbitStep {
    match p {
        StepPoint::Machine(z) => OrbitStep { point: p, strip: Some(strip_index(z)), t_level: t_level(z.re, lambda) },
        StepPoint::Tower(_) => OrbitStep { point: p, strip: None, t_level: None },
    }
}

/// Longest run of strict T-level increases ending at the last machine step.
fn trailing_increase(steps: &[OrbitStep]) -> usize {
    let levels: Vec<Option<u32>> = steps.iter().filter(|s| matches!(s.point, StepPoint::Machine(_))).map(|s| s.t_level).collect();
    let mut run = 0;
    for w in levels.windows(2).rev() {
        match (w[0], w[1]) {
            (Some(a), Some(b)) if b > a => run += 1,
            _ => break,
        }
    }
    run
}

fn longest_increase(steps: &[OrbitStep]) -> usize {
    let mut best = 0;
    let mut run = 0;
    for w in steps.windows(2) {
        match (w[0].t_level, w[1].t_level) {
            (Some(a), Some(b)) if b > a => {
                run += 1;
                best = best.max(run);
            }
            _ => run = 0,
        }
    }
    best
}

/// Forward orbit `z, E(z), …` for at most `n_max` steps.
pub fn orbit(z: ComplexPoint, lambda: f64, n_max: usize) -> OrbitRecord {
    assert!(n_max >= 1);
    let mut steps = vec![annotate(StepPoint::Machine(z), lambda)];
    let mut cur = z;
    let mut shadow_n = None;
    for _ in 0..n_max {
        if shadow_n.is_none() {
            shadow_n = shadow_from(cur, lambda);
        }
        let next = step(cur, lambda);
        steps.push(annotate(next, lambda));
        match next {
            StepPoint::Machine(w) => cur = w,
            StepPoint::Tower(_) => break,
        }
    }
    let overflow = matches!(steps.last().unwrap().point, StepPoint::Tower(_));
    let verdict = if shadow_n.is_some() {
        OrbitVerdict::ShadowingOrbit0
    } else if longest_increase(&steps) >= ESCAPE_RUN || (overflow && trailing_increase(&steps) >= 1) {
        OrbitVerdict::Escaping
    } else if !overflow && steps.iter().all(|s| matches!(s.point, StepPoint::Machine(w) if w.norm() <= BOUNDED_RADIUS)) {
        OrbitVerdict::BoundedWindow
    } else {
        OrbitVerdict::BudgetExhausted
    };
    OrbitRecord { z0: z, steps, verdict, shadow_n }
}

/// Largest `n ≥ 1` whose shadowing hypothesis holds at `z` and whose report succeeds.
fn shadow_from(z: ComplexPoint, lambda: f64) -> Option<u32> {
    let mut found = None;
    for n in 1..8 {
        match shadow_threshold(n, lambda) {
            Some(t) if z.re < t => {
                if let Ok(r) = shadow_check(z, n, lambda) {
                    if r.all_within {
                        found = Some(n);
                    }
                }
            }
            _ => break,
        }
    }
    found
}

/// `1 − E_λ(r_n)`, when representable.
pub fn shadow_threshold(n: u32, lambda: f64) -> Option<f64> {
    let e = orbit0(n + 1, lambda).to_f64()?;
    Some(1.0 - e / std::f64::consts::E)
}

/// `ln ρ_{j,n} = ln λ − E^{n+1}(0)/e + (j+1) + Σ_{k=1}^{j} ln E^k(0)`.
pub fn ln_rho(j: u32, n: u32, lambda: f64) -> XReal {
    assert!(j <= n + 1);
    let ln_l = lambda.ln();
    let mut acc = XReal::from(ln_l + (j + 1) as f64) - XReal::from(orbit0(n + 1, lambda)) / XReal::from(std::f64::consts::E);
    // ln E^k(0) = ln λ + E^{k−1}(0)
    for k in 1..=j {
        acc = acc + XReal::from(ln_l) + XReal::from(orbit0(k - 1, lambda));
    }
    acc
}

/// `ρ_{j,n}`, saturating to `+∞` beyond machine range.
pub fn rho(j: u32, n: u32, lambda: f64) -> f64 {
    ln_rho(j, n, lambda).exp().to_f64_sat()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShadowReport {
    pub n: u32,
    pub hypothesis: bool,
    pub radii: Vec<f64>,
    pub distances: Vec<f64>,
    pub all_within: bool,
    /// T-level of `Re E^{n+2}(z)`.
    pub final_level: Option<u32>,
}

/// Compares `E^{j+1}(z)` with `E^j(0)` for `j = 0..=n+1`.
pub fn shadow_check(z: ComplexPoint, n: u32, lambda: f64) -> Result<ShadowReport, DynamicsError> {
    let threshold = shadow_threshold(n, lambda).ok_or(DynamicsError::HypothesisUnverifiable(n))?;
    let hypothesis = z.re < threshold;
    let mut radii = Vec::new();
    let mut distances = Vec::new();
    let mut w = z;
    let mut final_level = None;
    for j in 0..=n + 1 {
        w = exp_map(w, lambda)?;
        let target = orbit0(j, lambda).to_f64().ok_or(DynamicsError::HypothesisUnverifiable(n))?;
        radii.push(rho(j, n, lambda));
        distances.push((w - Complex64::new(target, 0.0)).norm());
        if j == n + 1 {
            final_level = t_level(w.re, lambda);
        }
    }
    let all_within = distances.iter().zip(&radii).all(|(d, r)| d < r);
    Ok(ShadowReport { n, hypothesis, radii, distances, all_within, final_level })
}

/// `g(N, m) = m(N+4) + m(m−1)/2`.
pub fn g_steps(n: u64, m: u64) -> u64 {
    m * (n + 4) + m * m.saturating_sub(1) / 2
}

/// Smallest `N` for which `κ(E_λ(r_{N'+m}))` is 1-vertical at height
/// `(2M_{g(N',m)+1} + 1)π` for `N' ∈ {N, N+1}`, `m ≤ 6`.
pub fn vertical_ladder_threshold(m_bound: u64, p: u64, lambda: f64) -> u64 {
    (0..64)
        .find(|&n| {
            (n..=n + 1).all(|np| {
                (0..=6).all(|m| {
                    let r = tower_exp_map(orbit0((np + m) as u32, lambda).add_small(-1.0), lambda);
                    let mg = m_bound + (g_steps(np, m) + 1) * p;
                    is_delta_vertical(r, 1.0, (2 * mg + 1) as f64 * PI)
                })
            })
        })
        .expect("threshold below 64")
}

/// Smallest `N` with `A n^k + B Σ_{j≤n} E^j(0) < E^{n+1}(0)` for `n = N..N+5`.
pub fn exp_inequality_threshold(a: f64, b: f64, k: u32, lambda: f64) -> u64 {
    assert!(a > 0.0 && b > 0.0);
    let holds = |n: u64| {
        let mut sum = XReal::ZERO;
        for j in 0..=n {
            sum = sum + XReal::from(orbit0(j as u32, lambda));
        }
        let lhs = XReal::from(a)
            * XReal::from(n as f64).ln().map(|l| (l * XReal::from(k as f64)).exp()).unwrap_or(XReal::from(if k == 0 { 1.0 } else { 0.0 }))
            + XReal::from(b) * sum;
        lhs < XReal::from(orbit0(n as u32 + 1, lambda))
    };
    (0..64).find(|&n| (n..n + 6).all(holds)).expect("threshold below 64")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OmegaClass {
    Escaping,
    Orbit0Infinity,
    SingularCandidate,
    Unresolved,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OmegaReport {
    pub class: OmegaClass,
    pub steps: usize,
    /// Start indices of shadowing episodes.
    pub episodes: Vec<usize>,
    /// Block markers `d_j` visited, with whether the window test held.
    pub markers: Vec<(u64, bool)>,
    pub max_re: f64,
    pub longest_increase: usize,
}

/// Steps in a shadowing episode.
pub const EPISODE_LEN: usize = 3;

fn episodes(points: &[ComplexPoint], lambda: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < points.len() {
        let ok = (0..EPISODE_LEN).all(|k| {
            points
                .get(i + k)
                .zip(orbit0(k as u32, lambda).to_f64())
                .map(|(z, o)| (z - Complex64::new(o, 0.0)).norm() < 1.0)
                .unwrap_or(false)
        });
        if ok {
            out.push(i);
            i += EPISODE_LEN;
        } else {
            i += 1;
        }
    }
    out
}

/// Window half-width `c`: largest `|Re|` on `L_{λ,0}(B(q_±, 1))`, plus `2π`.
pub fn default_window(lambda: f64) -> Result<f64, DynamicsError> {
    let q = find_fixed_points(lambda)?.q_plus;
    let lo = (q.norm() - 1.0).max(f64::MIN_POSITIVE);
    let hi = q.norm() + 1.0;
    let ext = ((lo / lambda).ln().abs()).max((hi / lambda).ln().abs());
    Ok(ext + 2.0 * PI)
}

/// Classifies the ω-limit set of `z` from `budget` forward steps.
pub fn classify_omega(z: ComplexPoint, s: Option<&ItinerarySpec>, lambda: f64, budget: usize) -> Result<OmegaReport, DynamicsError> {
    let rec = orbit(z, lambda, budget.max(1));
    if let Some(s) = s {
        for (i, (st, err)) in rec.steps.iter().zip(rec.error_bounds()).enumerate() {
            let z = match st.point {
                StepPoint::Machine(z) => z,
                StepPoint::Tower(_) => break,
            };
            // Beyond this the strip of the computed point says nothing about the true orbit.
            if err >= strip_margin(z) {
                break;
            }
            if st.strip != Some(s.symbol_at(i as u64)) {
                return Err(DynamicsError::ItineraryMismatch(i));
            }
        }
    }
    let points = rec.machine_points();
    let overflow = rec.steps.len() > points.len();
    let eps = episodes(&points, lambda);
    let longest = longest_increase(&rec.steps);
    let max_re = if overflow { f64::INFINITY } else { points.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max) };

    let mut markers = Vec::new();
    if let Some(s) = s {
        let c = default_window(lambda)?;
        for j in 0.. {
            let m = match s.block_markers(j) {
                Ok(m) => m,
                Err(_) => break,
            };
            if m.d as usize >= points.len() {
                break;
            }
            let w = points[m.d as usize];
            markers.push((m.d, w.re.abs() <= c && strip_index(w) == m.e));
        }
    }

    let escaping = eps.is_empty() && (longest >= ESCAPE_RUN || (overflow && trailing_increase(&rec.steps) >= 1));
    let class = if escaping {
        OmegaClass::Escaping
    } else if markers.len() >= 2 && markers.iter().all(|m| m.1) {
        OmegaClass::SingularCandidate
    } else if eps.len() >= 2 && max_re > r_machine(3, lambda).unwrap_or(f64::INFINITY) {
        OmegaClass::Orbit0Infinity
    } else {
        OmegaClass::Unresolved
    };
    Ok(OmegaReport { class, steps: rec.steps.len() - 1, episodes: eps, markers, max_re, longest_increase: longest })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SingularEstimate {
    pub point: ComplexPoint,
    pub depth: usize,
    pub diameter_bound: f64,
    /// Diameter of the window `D` the chains start from.
    pub window_diameter: f64,
    /// Measured diameters of `Φ_0∘…∘Φ_j(D_{e_j})` for `j = 0..=depth`.
    pub measured: Vec<f64>,
    /// Number of leading symbols of `s` followed by the forward orbit of `point`.
    pub certified_prefix: u64,
}

fn window_corners(e: i64, c: f64) -> Vec<ComplexPoint> {
    let (lo, hi) = ((2 * e - 1) as f64 * PI, (2 * e + 1) as f64 * PI);
    // Open at the lower edge: the strip is `(2e−1)π < Im ≤ (2e+1)π`.
    let lo = lo + 1e-9;
    let mut out = Vec::new();
    for i in 0..=8 {
        let t = i as f64 / 8.0;
        let x = -c + 2.0 * c * t;
        let y = lo + (hi - lo) * t;
        out.extend([Complex64::new(x, lo), Complex64::new(x, hi), Complex64::new(-c, y), Complex64::new(c, y)]);
    }
    out
}

fn pull(w: ComplexPoint, s: &ItinerarySpec, from: u64, to: u64, lambda: f64) -> Result<ComplexPoint, DynamicsError> {
    let mut w = w;
    for i in (to..from).rev() {
        w = inverse_branch(w, s.symbol_at(i), lambda)?;
    }
    Ok(w)
}

fn diameter(points: &[ComplexPoint]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            d = d.max((a - b).norm());
        }
    }
    d
}

/// `Φ_0∘…∘Φ_depth` applied to the centre of `D_{e_depth}`.
pub fn find_singular_point(s: &ItinerarySpec, lambda: f64, depth: usize, c: f64) -> Result<SingularEstimate, DynamicsError> {
    let marks: Vec<_> = (0..=depth).map(|j| s.block_markers(j)).collect::<Result<_, _>>()?;
    let window_diameter = ((2.0 * c).powi(2) + (2.0 * PI).powi(2)).sqrt();
    let chain = |seed: ComplexPoint, top: usize| -> Result<ComplexPoint, DynamicsError> {
        let mut w = seed;
        for j in (1..=top).rev() {
            w = pull(w, s, marks[j].d, marks[j - 1].d, lambda)?;
            if w.re.abs() > c || strip_index(w) != marks[j - 1].e {
                return Err(DynamicsError::EmptyWindow(j));
            }
        }
        pull(w, s, marks[0].d, 0, lambda)
    };
    let center = |e: i64| Complex64::new(0.0, 2.0 * PI * e as f64);
    let point = chain(center(marks[depth].e), depth)?;
    let mut measured = Vec::with_capacity(depth + 1);
    for j in 0..=depth {
        let imgs: Vec<_> = window_corners(marks[j].e, c).into_iter().map(|w| chain(w, j)).collect::<Result<_, _>>()?;
        measured.push(diameter(&imgs));
    }
    let horizon = marks[depth].d + 1;
    let mut z = point;
    let mut certified_prefix = 0;
    for i in 0..horizon {
        if strip_index(z) != s.symbol_at(i) {
            break;
        }
        certified_prefix = i + 1;
        if i + 1 < horizon {
            z = exp_map(z, lambda)?;
        }
    }
    Ok(SingularEstimate {
        point,
        depth,
        diameter_bound: window_diameter / PI.powi(depth as i32 + 1),
        window_diameter,
        measured,
        certified_prefix,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractionReport {
    pub diameters: Vec<f64>,
    /// Distance of the image's first sample point to `q_±` after each step.
    pub distances: Vec<f64>,
    /// First `m` from which the diameters decrease strictly.
    pub m0: usize,
    pub terminal: ComplexPoint,
    pub fixed_point: ComplexPoint,
}

const CONTRACTION_SIDE_SAMPLES: usize = 64;
const CONTRACTION_CIRCLE_SAMPLES: usize = 24;

/// Boundary samples of `A^±(n)`: the half-strip rectangle `|Re| ≤ E(r_n) − 1`
/// and the circles `|z − E^j(0)| = ρ_{j,n}` around the excluded forward images of `H(n)`.
pub fn contraction_boundary(n: u32, lambda: f64, side: Side) -> Vec<ComplexPoint> {
    let half = -shadow_threshold(n, lambda).expect("machine-range n");
    let sgn = if side == Side::Plus { 1.0 } else { -1.0 };
    let mut discs = Vec::new();
    for j in 0..=n + 1 {
        if let Some(o) = orbit0(j, lambda).to_f64().filter(|o| o.abs() < half) {
            discs.push((o, rho(j, n, lambda)));
        }
    }
    let mut pts = Vec::new();
    let ns = CONTRACTION_SIDE_SAMPLES;
    for i in 0..ns {
        let t = i as f64 / ns as f64;
        let x = -half + 2.0 * half * t;
        let y = PI * t;
        pts.push(Complex64::new(x, 0.0));
        pts.push(Complex64::new(x, sgn * PI));
        pts.push(Complex64::new(-half, sgn * y));
        pts.push(Complex64::new(half, sgn * y));
    }
    pts.retain(|z| discs.iter().all(|&(o, r)| (z - Complex64::new(o, 0.0)).norm() >= r));
    for &(o, r) in &discs {
        for i in 0..=CONTRACTION_CIRCLE_SAMPLES {
            let a = PI * i as f64 / CONTRACTION_CIRCLE_SAMPLES as f64;
            pts.push(Complex64::new(o + r * a.cos(), sgn * r * a.sin()));
        }
    }
    pts
}

fn l0_side(w: ComplexPoint, lambda: f64, side: Side) -> ComplexPoint {
    let v = w / lambda;
    let mut arg = v.im.atan2(v.re);
    // Points of the negative real axis belong to the closed half-strip of their side.
    if v.im == 0.0 && v.re < 0.0 {
        arg = if side == Side::Plus { PI } else { -PI };
    }
    Complex64::new(v.norm().ln(), arg)
}

/// Iterates `L_{λ,0}` on the boundary of `A^±(n)` and tracks diameters.
pub fn contraction_experiment(n: u32, lambda: f64, m_max: usize, side: Side) -> Result<ContractionReport, DynamicsError> {
    let fp = find_fixed_points(lambda)?;
    let q = if side == Side::Plus { fp.q_plus } else { fp.q_minus };
    let mut pts = contraction_boundary(n, lambda, side);
    let mut diameters = Vec::with_capacity(m_max);
    let mut distances = Vec::with_capacity(m_max);
    for _ in 0..m_max {
        pts = pts.into_iter().map(|w| l0_side(w, lambda, side)).collect();
        diameters.push(diameter(&pts));
        distances.push((pts[0] - q).norm());
    }
    let mut m0 = diameters.len();
    while m0 > 1 && diameters[m0 - 1] < diameters[m0 - 2] {
        m0 -= 1;
    }
    // m0 indexes steps from 1.
    let m0 = m0.max(1);
    Ok(ContractionReport { diameters, distances, m0, terminal: pts[0], fixed_point: q })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_levels_of_orbit0() {
        assert_eq!(t_level(-0.5, 1.0), Some(0));
        // r_1 = 0 is the left end of T_1.
        assert_eq!(t_level(0.0, 1.0), Some(1));
        let mut x = 1.0f64;
        for n in 1..5 {
            assert_eq!(t_level(x, 1.0), Some(n));
            x = x.exp();
        }
        assert_eq!(t_level(-2.0, 1.0), None);
    }

    #[test]
    fn g_examples() {
        assert_eq!(g_steps(7, 0), 0);
        assert_eq!(g_steps(3, 2), 15);
    }

    #[test]
    fn rho_first_term() {
        let e3 = 1f64.exp().exp();
        assert!((rho(0, 2, 1.0) - std::f64::consts::E * (-e3 / std::f64::consts::E).exp()).abs() < 1e-15);
    }

    #[test]
    fn window_half_width() {
        let c = default_window(1.0).unwrap();
        assert!(c > 2.0 * PI && c < 2.0 * PI + 1.5, "{c}");
    }
}
