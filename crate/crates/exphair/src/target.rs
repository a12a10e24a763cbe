//! Target rectangles `V(a, b, K)`, the ladder `a_n`, `b_n`, vertical circles,
//! covering certificates and pass-twice counting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use crate::hair::{find_theta, HairError};
use crate::itinerary::{Block, ItinerarySpec, TailRule};
use crate::xnum::{Cut, NumError, TowerReal, XPoint, XReal};

/// Default `ζ` for `λ = 1`, `M ≤ 4`, `p ≤ 2`.
pub const DEFAULT_ZETA: f64 = 30.0;
/// Random itineraries added to the ladder's witness family by default.
pub const DEFAULT_SAMPLE_BUDGET: usize = 8;
const FAMILY_SEED: u64 = 0x6c61_6464_6572;

/// Closed rectangle `[a−1, b+1] × [−(2K+1)π, (2K+1)π]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetRect {
    pub a: TowerReal,
    pub b: TowerReal,
    pub k: u64,
}

impl TargetRect {
    pub fn left(&self) -> XReal {
        XReal::from(self.a) - XReal::ONE
    }

    pub fn right(&self) -> XReal {
        XReal::from(self.b) + XReal::ONE
    }

    pub fn half_height(&self) -> f64 {
        (2 * self.k + 1) as f64 * PI
    }
}

/// A discretized curve.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Polyline {
    pub points: Vec<XPoint>,
}

impl Polyline {
    pub fn from_complex(points: &[num_complex::Complex64]) -> Polyline {
        Polyline { points: points.iter().map(|&z| XPoint::from(z)).collect() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Machine coordinates, when every vertex fits.
    pub fn to_complex(&self) -> Option<Vec<num_complex::Complex64>> {
        self.points.iter().map(|p| p.to_complex()).collect()
    }
}

/// The sequences `a_n` and `b_n` for fixed `(λ, ζ, M, p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetLadder {
    pub lambda: f64,
    pub zeta: f64,
    pub m: u64,
    pub p: u64,
    pub a_seq: Vec<TowerReal>,
    pub b_seq: Vec<TowerReal>,
    /// `min θ_s` over the witness family.
    pub theta_star: f64,
    pub family: Vec<ItinerarySpec>,
}

impl TargetLadder {
    /// `M_n = M + n p`.
    pub fn m_at(&self, n: u64) -> u64 {
        self.m + n * self.p
    }

    /// `V(a_n, b_{n+k}, M_n)`.
    pub fn rect(&self, n: usize, k: usize) -> TargetRect {
        TargetRect { a: self.a_seq[n], b: self.b_seq[n + k], k: self.m_at(n as u64) }
    }

    /// `a_n = H_n + α_n` with `H_n = F^n(θ*)`.
    fn split_a(&self, n: usize) -> (TowerReal, f64) {
        let h = TowerReal::from_f64(self.theta_star).f_iter(n as u32);
        let alpha = if n == 0 { self.zeta - self.theta_star } else { -self.lambda.ln() };
        (h, alpha)
    }
}

/// `E_λ(x) = λ e^x` on tower reals.
pub fn tower_exp_map(x: TowerReal, lambda: f64) -> TowerReal {
    x.add_small(lambda.ln()).exp()
}

/// Witness family: constants `±M`, the alternating itinerary and `budget` random members of `Σ_M^p`.
pub fn witness_family(m: u64, p: u64, budget: usize) -> Vec<ItinerarySpec> {
    let mi = m.max(1) as i64;
    let mut fam = vec![ItinerarySpec::constant(mi), ItinerarySpec::constant(-mi), ItinerarySpec::periodic(vec![mi, -mi])];
    let mut rng = ChaCha8Rng::seed_from_u64(FAMILY_SEED ^ (m << 16) ^ p);
    const PREFIX: u64 = 6;
    for _ in 0..budget {
        let prefix: Vec<i64> = (0..PREFIX)
            .map(|j| {
                let b = (m + j * p) as i64;
                rng.gen_range(-b..=b)
            })
            .collect();
        let b = (m + PREFIX * p).max(1) as i64;
        let mut period: Vec<i64> = (0..3).map(|_| rng.gen_range(-b..=b)).collect();
        if period.iter().all(|&x| x == 0) {
            period[0] = 1;
        }
        let spec = ItinerarySpec::new(vec![Block::literal(prefix)], TailRule::Period(period)).expect("non-zero period");
        fam.push(spec);
    }
    fam
}

/// Builds `a_0..a_{n_max}` and `b_0..b_{n_max}`.
///
/// `b_n = E_λ^{n+1}(ζ) + 1` exactly. `a_n` is estimated from the start points
/// of the bases of a finite witness family: `a_0 = ζ`, and for `n ≥ 1`
/// `a_n = F^n(θ*) − ln λ` where `θ*` is the smallest `θ_s` in the family (the
/// remainder term at `F^n(θ*)` is below `e^{−F(θ*)}`).
pub fn build_ladder(lambda: f64, zeta: f64, m: u64, p: u64, n_max: usize, sample_budget: usize) -> Result<TargetLadder, HairError> {
    let family = witness_family(m, p, sample_budget);
    let mut theta_star = f64::INFINITY;
    for s in &family {
        theta_star = theta_star.min(find_theta(s, zeta, lambda)?);
    }
    let mut ladder =
        TargetLadder { lambda, zeta, m, p, a_seq: Vec::with_capacity(n_max + 1), b_seq: Vec::with_capacity(n_max + 1), theta_star, family };
    let mut e = tower_exp_map(TowerReal::from_f64(zeta), lambda);
    for n in 0..=n_max {
        let (h, alpha) = ladder.split_a(n);
        ladder.a_seq.push(if n == 0 { TowerReal::from_f64(zeta) } else { h.add_small(alpha) });
        ladder.b_seq.push(e.add_small(1.0));
        e = tower_exp_map(e, lambda);
    }
    Ok(ladder)
}

/// `κ(r)` meets the line `Im = y` within `δ` of its rightmost point: `2δr ≥ y² + δ²`.
pub fn is_delta_vertical(r: TowerReal, delta: f64, y: f64) -> bool {
    match r.to_f64() {
        Some(rv) if rv < 1e300 => 2.0 * delta * rv >= y * y + delta * delta,
        _ => true,
    }
}

/// `q = ln(((2p+1)²π² + 1) / (π² + 1))`.
pub fn vertical_growth_constant(p: u64, _m: u64) -> f64 {
    let c = (2 * p + 1) as f64;
    ((c * c * PI * PI + 1.0) / (PI * PI + 1.0)).ln()
}

/// One checked inequality family with its margins.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub check: String,
    pub n: u64,
    pub k: u64,
    pub margins: Vec<XReal>,
    pub pass: bool,
}

impl Certificate {
    /// `{check, n, k, margins[], pass}` text record.
    pub fn record(&self) -> String {
        let m: Vec<String> = self.margins.iter().map(|x| format!("\"{}\"", x.literal())).collect();
        format!(
            "{{\"check\": \"{}\", \"n\": {}, \"k\": {}, \"margins\": [{}], \"pass\": {}}}",
            self.check,
            self.n,
            self.k,
            m.join(", "),
            self.pass
        )
    }
}

/// Verifies, as log-ratios `ln(lhs) − ln(rhs)`,
/// 1. `a_{n+1} − 1 ≥ E_λ(a_n − 1)`,
/// 2. `E_λ(b_{n+k} + 1) − 1 ≥ b_{n+k+1} + 1`,
/// 3. `κ(E_λ(b_{n+k} + 1))` is 1-vertical at height `(2M_{n+1} + 1)π`.
pub fn covering_check(ladder: &TargetLadder, n: usize, k: usize, lambda: f64) -> Certificate {
    assert!(n + k + 1 < ladder.b_seq.len(), "ladder too short");
    let ln_l = lambda.ln();

    let (h, alpha_n) = ladder.split_a(n);
    let alpha_next = ladder.split_a(n + 1).1;
    // ln(a_{n+1} − 1) = H + ln(1 + (α_{n+1} − 2)e^{−H}); ln E(a_n − 1) = ln λ + H + α_n − 1
    let decay = XReal::exp_neg_tower(h).to_f64().unwrap_or(0.0);
    let inner = (alpha_next - 2.0) * decay;
    let m1 = if inner <= -1.0 { XReal::from(f64::MIN) } else { XReal::from(inner.ln_1p() - ln_l - alpha_n + 1.0) };

    // E(b_m + 1) = e²(b_{m+1} − 1)
    let big_b = XReal::from(ladder.b_seq[n + k + 1]);
    let ratio = (XReal::from(2.0 + (-2f64).exp()) / (big_b + XReal::ONE)).to_f64().unwrap_or(0.0);
    let m2 = XReal::from(2.0 + (-ratio).ln_1p());

    let y = (2 * ladder.m_at(n as u64 + 1) + 1) as f64 * PI;
    let ln_r = XReal::from(ladder.b_seq[n + k]) + XReal::from(1.0 + ln_l);
    let m3 = ln_r + XReal::from(2f64.ln() - (y * y + 1.0).ln());

    let margins = vec![m1, m2, m3];
    let pass = margins.iter().all(|x| x.is_positive());
    Certificate { check: "covering".into(), n: n as u64, k: k as u64, margins, pass }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Side {
    Left,
    Right,
}

fn im_at_clip(p: &XPoint, q: &XPoint, x: XReal) -> Option<f64> {
    let (px, qx) = (p.re.to_f64()?, q.re.to_f64()?);
    let (py, qy) = (p.im.to_f64_sat(), q.im.to_f64_sat());
    let t = if qx == px { 0.0 } else { (x.to_f64()? - px) / (qx - px) };
    Some(py + t.clamp(0.0, 1.0) * (qy - py))
}

/// Number of sub-arcs of `curve` that cross the rectangle from one vertical
/// side to the other while staying within its height.
pub fn passes_twice(curve: &Polyline, rect: &TargetRect) -> usize {
    let (lo, hi, h) = (rect.left(), rect.right(), rect.half_height());
    let hx = XReal::from(h);
    let side = |p: &XPoint| {
        if p.re < lo {
            Some(Side::Left)
        } else if p.re > hi {
            Some(Side::Right)
        } else {
            None
        }
    };
    let mut anchor: Option<Side> = None;
    let mut clean = false;
    let mut count = 0;
    let mut touch = |e: Side, anchor: &mut Option<Side>, clean: &mut bool| {
        if *clean && anchor.map(|a| a != e).unwrap_or(false) {
            count += 1;
        }
        *anchor = Some(e);
        *clean = true;
    };
    if let Some(first) = curve.points.first() {
        if side(first).is_none() {
            if first.re == lo {
                touch(Side::Left, &mut anchor, &mut clean);
            } else if first.re == hi {
                touch(Side::Right, &mut anchor, &mut clean);
            }
            if first.im.abs() > hx {
                clean = false;
            }
        }
    }
    for w in curve.points.windows(2) {
        let (p, q) = (&w[0], &w[1]);
        let (sp, sq) = (side(p), side(q));
        if sp.is_some() && sp == sq {
            continue;
        }
        if let Some(e) = sp {
            touch(e, &mut anchor, &mut clean);
        }
        // Height check on the part of the segment inside the band.
        let ends_ok = p.im.abs() <= hx && q.im.abs() <= hx;
        if !ends_ok {
            let enter = match sp {
                Some(Side::Left) => lo,
                Some(Side::Right) => hi,
                None => p.re,
            };
            let leave = match sq {
                Some(Side::Left) => lo,
                Some(Side::Right) => hi,
                None => q.re,
            };
            let ok = match (im_at_clip(p, q, enter), im_at_clip(p, q, leave)) {
                (Some(a), Some(b)) => a.abs() <= h && b.abs() <= h,
                _ => false,
            };
            if !ok {
                clean = false;
            }
        }
        if let Some(e) = sq {
            touch(e, &mut anchor, &mut clean);
        } else if q.re == lo {
            touch(Side::Left, &mut anchor, &mut clean);
        } else if q.re == hi {
            touch(Side::Right, &mut anchor, &mut clean);
        }
    }
    count
}

/// Boundary samples per rectangle side before refinement.
pub const SIDE_SAMPLES: usize = 256;
const MAX_REFINE_POINTS: usize = 1 << 15;
const REGION_SPACING: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct RegionError {
    pub level: usize,
    pub source: NumError,
}

fn pull_back(z: XPoint, s: &ItinerarySpec, n: usize, lambda: f64) -> Result<XPoint, RegionError> {
    let mut w = z;
    for j in (0..n).rev() {
        w = w.log_branch(s.symbol_at(j as u64), lambda, Cut::Open).map_err(|source| RegionError { level: j, source })?;
    }
    Ok(w)
}

/// Real pullback `x ↦ ln(x/λ)` applied `n` times.
fn real_pull(x: XReal, n: usize, lambda: f64) -> XReal {
    let mut v = x;
    for _ in 0..n {
        v = v.ln().expect("positive real pullback") - XReal::from(lambda.ln());
    }
    v
}

fn real_push(x: XReal, n: usize, lambda: f64) -> XReal {
    let mut v = x;
    for _ in 0..n {
        v = (v + XReal::from(lambda.ln())).exp();
    }
    v
}

/// Boundary of `P_s^n`, the pullback of `V(a_n, b_{n+k}, M_n)` along `s_0..s_{n−1}`.
pub fn nested_region(s: &ItinerarySpec, n: usize, k: usize, ladder: &TargetLadder, lambda: f64) -> Result<Polyline, RegionError> {
    assert!(n >= 1, "region level starts at 1");
    let rect = ladder.rect(n, k);
    let (lo, hi, h) = (rect.left(), rect.right(), rect.half_height());
    // Horizontal sides are parametrized by the pulled-back real coordinate.
    let (u_lo, u_hi) = (real_pull(lo, n, lambda), real_pull(hi, n, lambda));
    let u_lo_f = u_lo.to_f64_sat();
    let u_hi_f = u_hi.to_f64_sat();
    let corner = |re: XReal, im: f64| XPoint::new(re, XReal::from(im));
    let at = |side: usize, t: f64| -> XPoint {
        match side {
            0 => corner(lo, h - 2.0 * h * t),
            1 => {
                let u = u_lo_f + t * (u_hi_f - u_lo_f);
                let re = if t >= 1.0 { hi } else { real_push(XReal::from(u), n, lambda).max(lo).min(hi) };
                corner(re, -h)
            }
            2 => corner(hi, -h + 2.0 * h * t),
            _ => {
                let u = u_hi_f + t * (u_lo_f - u_hi_f);
                let re = if t >= 1.0 { lo } else { real_push(XReal::from(u), n, lambda).max(lo).min(hi) };
                corner(re, h)
            }
        }
    };
    let mut out = Vec::new();
    for side in 0..4 {
        let mut ts: Vec<f64> = (0..SIDE_SAMPLES).map(|i| i as f64 / SIDE_SAMPLES as f64).collect();
        ts.push(1.0);
        let mut pts: Vec<XPoint> = ts.iter().map(|&t| pull_back(at(side, t), s, n, lambda)).collect::<Result<_, _>>()?;
        // Double the sampling where consecutive pulled-back points are far apart.
        loop {
            let mut nts = vec![ts[0]];
            let mut npts = vec![pts[0]];
            let mut changed = false;
            for i in 1..ts.len() {
                let far = match (pts[i - 1].to_complex(), pts[i].to_complex()) {
                    (Some(a), Some(b)) => {
                        let d = (a - b).norm();
                        d > REGION_SPACING && d > REGION_SPACING * 1e-3 * a.norm().max(b.norm())
                    }
                    _ => false,
                };
                if far && ts.len() < MAX_REFINE_POINTS && ts[i] - ts[i - 1] > 1e-9 {
                    let tm = 0.5 * (ts[i - 1] + ts[i]);
                    nts.push(tm);
                    npts.push(pull_back(at(side, tm), s, n, lambda)?);
                    changed = true;
                }
                nts.push(ts[i]);
                npts.push(pts[i]);
            }
            ts = nts;
            pts = npts;
            if !changed {
                break;
            }
        }
        pts.pop();
        out.extend(pts);
    }
    if let Some(&first) = out.first() {
        out.push(first);
    }
    Ok(Polyline { points: out })
}

/// Even-odd point-in-polygon test in machine coordinates.
pub fn point_in_polygon(z: num_complex::Complex64, poly: &[num_complex::Complex64]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a.im > z.im) != (b.im > z.im) {
            let x = a.re + (z.im - a.im) * (b.re - a.re) / (b.im - a.im);
            if z.re < x {
                inside = !inside;
            }
        }
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn delta_vertical_examples() {
        let r = (PI * PI + 1.0) / 2.0;
        assert!(is_delta_vertical(TowerReal::from_f64(r + 1e-12), 1.0, PI));
        assert!(!is_delta_vertical(TowerReal::from_f64(5.0), 1.0, PI));
        assert!(is_delta_vertical(TowerReal::new(9, 1.5), 1.0, 1e100));
    }

    #[test]
    fn growth_constant_p1() {
        let q = vertical_growth_constant(1, 2);
        assert!((q - ((9.0 * PI * PI + 1.0) / (PI * PI + 1.0)).ln()).abs() < 1e-15);
        assert!((q - 2.112).abs() < 1e-3);
    }

    fn rect(a: f64, b: f64, k: u64) -> TargetRect {
        TargetRect { a: TowerReal::from_f64(a), b: TowerReal::from_f64(b), k }
    }

    #[test]
    fn pass_counts_on_simple_curves() {
        let r = rect(10.0, 20.0, 0);
        let once = Polyline::from_complex(&[Complex64::new(0.0, 0.0), Complex64::new(30.0, 0.0)]);
        assert_eq!(passes_twice(&once, &r), 1);
        let s = Polyline::from_complex(&[
            Complex64::new(0.0, 0.0),
            Complex64::new(30.0, 1.0),
            Complex64::new(0.0, 2.0),
            Complex64::new(30.0, 3.0),
        ]);
        assert_eq!(passes_twice(&s, &r), 3);
        let left = Polyline::from_complex(&[Complex64::new(0.0, 0.0), Complex64::new(5.0, 0.0)]);
        assert_eq!(passes_twice(&left, &r), 0);
        let high = Polyline::from_complex(&[Complex64::new(0.0, 5.0), Complex64::new(30.0, 5.0)]);
        assert_eq!(passes_twice(&high, &r), 0);
        // Only the part inside the band has to respect the height.
        let slanted = Polyline::from_complex(&[Complex64::new(0.0, 10.0), Complex64::new(9.0, 0.0), Complex64::new(30.0, 0.0)]);
        assert_eq!(passes_twice(&slanted, &r), 1);
    }

    #[test]
    fn ladder_basics() {
        let l = build_ladder(1.0, 20.0, 2, 1, 3, 2).unwrap();
        assert_eq!(l.a_seq[0].to_f64(), Some(20.0));
        let b0 = l.b_seq[0].to_f64().unwrap();
        assert!((b0 - (20f64.exp() + 1.0)).abs() < 1e-6 * b0);
        for w in l.a_seq.windows(2) {
            assert!(w[1] > w[0]);
        }
        for (a, b) in l.a_seq.iter().zip(&l.b_seq) {
            assert!(a <= b);
        }
    }

    #[test]
    fn covering_at_zeta_30() {
        let l = build_ladder(1.0, 30.0, 2, 1, 4, 2).unwrap();
        let c = covering_check(&l, 0, 0, 1.0);
        assert!(c.pass, "{}", c.record());
    }
}
