//! Hairs of `0_k u` passing twice through target rectangles, the smallest
//! working zero block, and assembly of itineraries whose hairs accumulate.
//!
//! The descent starts from the tail `μ` of the hair of `0_k u`, which lies
//! within `ε` of the real axis, and applies `L_{λ,0}` until the curve has
//! visited the unit disc and left it again. The next pullback `ν_0` ends at
//! `Re = 0`; `ν_1 = L(ν_0)` runs out to `Re = τ`; `ν_2 = L(ν_1)` then starts
//! at `Re ≈ ln|τ|`, dips to `Re ≈ ln π` and returns to `Re ≈ ln|τ|`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use thiserror::Error;

use crate::hair::{find_theta, tail_polyline, trace_ext, HairError, MAX_DEPTH};
use crate::itinerary::{parse_itinerary, Block, BlockKind, ItinerarySpec, TailRule};
use crate::target::{build_ladder, passes_twice, Polyline, TargetLadder, TargetRect, DEFAULT_SAMPLE_BUDGET};
use crate::xnum::{Cut, TowerReal, XPoint, XReal};

/// Largest admissible flatness `ε` of the starting tail.
pub const EPSILON_0: f64 = 0.05;
/// Traced samples on the resolvable part of `ν_0`.
pub const TRACED_SAMPLES: usize = 48;
/// Samples per machine-range decade of the continued parts.
const LADDER_SAMPLES: usize = 24;
// Range of |Re ν_0| where the pullback chain can be inverted in machine precision.
const RESOLVABLE_LO: f64 = 1e-6;
const RESOLVABLE_HI: f64 = 30.0;
const MAX_STAGES: usize = 64;
// Potential range of the direct trace used when the descent does not apply.
const DIRECT_ETA_SPAN: f64 = 40.0;
const CERT_HEADER: &str = "exphair construction certificate v1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstructError {
    #[error(transparent)]
    Hair(#[from] HairError),
    #[error("zero block {k} too short: flatness {epsilon:e} is not below {EPSILON_0}")]
    FlatnessInsufficient { k: usize, epsilon: f64 },
    #[error("descent stage {0} not reached at the sampled resolution")]
    StageNotReached(&'static str),
    #[error("no zero block up to {k_max} passes twice (best crossing count {best})")]
    NotFound { k_max: usize, best: usize },
    #[error("target for stage {j} is beyond tower depth")]
    TowerInfeasible { j: usize, certificate: Box<ConstructionCertificate> },
    #[error("certificate parse error on line {line}: {msg}")]
    Certificate { line: usize, msg: String },
    #[error("every block needs a non-zero symbol (block {0})")]
    ZeroBlock(usize),
}

/// `f^{k−1}(π)` with `f(r) = arctan(r/ζ)`.
pub fn zeros_flatten_bound(k: usize, zeta: f64) -> f64 {
    assert!(k >= 1 && zeta > 0.0);
    let mut r = PI;
    for _ in 1..k {
        r = (r / zeta).atan();
    }
    r
}

/// All stages of one descent.
#[derive(Clone, Debug, PartialEq)]
pub struct DescentTrace {
    pub k: usize,
    /// First stage at which the start of `μ` is in the closed unit disc.
    pub entry: usize,
    /// First stage after `entry` at which it has left the disc again.
    pub q: usize,
    pub p: usize,
    /// Stages `0..=q+p` (`μ` and its pullbacks), then `ν_0`, `ν_1`, `ν_2`.
    pub stages: Vec<Polyline>,
    pub tau: XReal,
    pub epsilon: f64,
    /// Uniform bound on `|Im|` used on the continued parts of `ν_0`'s preimage.
    pub im_bound: XReal,
    pub traced: usize,
    pub continued: usize,
}

impl DescentTrace {
    pub fn nu0(&self) -> &Polyline {
        &self.stages[self.stages.len() - 3]
    }

    pub fn nu1(&self) -> &Polyline {
        &self.stages[self.stages.len() - 2]
    }

    pub fn nu2(&self) -> &Polyline {
        &self.stages[self.stages.len() - 1]
    }

    /// `K` such that `ν_2` lies on the hair of `0_K u`.
    pub fn hair_index(&self) -> usize {
        self.k + self.stages.len() - 1
    }

    /// Stages before `ν_0`.
    pub fn pre_stages(&self) -> &[Polyline] {
        &self.stages[..self.stages.len() - 3]
    }
}

fn l0(z: &XPoint, lambda: f64) -> Result<XPoint, ConstructError> {
    z.log_branch(0, lambda, Cut::Open).map_err(|e| ConstructError::Hair(HairError::Num(e)))
}

/// Stage `s` real coordinates pulled back to `μ`: `x_{s−1} = λ e^{x_s}`.
fn lift(x: XReal, stages: usize, lambda: f64) -> XReal {
    let ln_l = XReal::from(lambda.ln());
    let mut v = x;
    for _ in 0..stages {
        v = (v + ln_l).exp();
    }
    v
}

/// Traces the `μ` point lying over stage coordinate `x` (at stage `s0 − 1`)
/// and returns its chain of stages `0..s0`.
fn chain(hair: &ItinerarySpec, x: XReal, s0: usize, lambda: f64) -> Result<Vec<XPoint>, ConstructError> {
    let eta = lift(x, s0 - 1, lambda) + XReal::from(lambda.ln());
    let mut z = trace_ext(hair, eta, None, lambda)?;
    let mut out = Vec::with_capacity(s0 + 1);
    out.push(z);
    for _ in 0..s0 {
        z = l0(&z, lambda)?;
        out.push(z);
    }
    Ok(out)
}

/// Magnitudes from `hi` down to `lo` (both positive): logarithmic steps above
/// machine range, then a geometric grid.
fn magnitude_ladder(hi: XReal, lo: f64) -> Vec<XReal> {
    let mut out = Vec::new();
    let mut m = hi;
    while m > XReal::from(700.0) {
        out.push(m);
        m = m.ln().expect("positive");
    }
    let top = m.to_f64().expect("machine range");
    if top > lo {
        let n = LADDER_SAMPLES;
        for i in 0..n {
            let t = i as f64 / n as f64;
            out.push(XReal::from(top.powf(1.0 - t) * lo.powf(t)));
        }
    }
    out
}

enum Sample {
    Traced(f64),
    /// `Re ν_1 = u`, i.e. `x_{s0} = −λ e^u`.
    Continued(XReal),
}

/// Runs the descent for the hair of `0_k u` with the given `τ < 0`.
pub fn descent_trace(u: &ItinerarySpec, k: usize, zeta: f64, tau: XReal, lambda: f64) -> Result<DescentTrace, ConstructError> {
    assert!(tau.is_negative(), "tau must be negative");
    let epsilon = zeros_flatten_bound(k.max(1), zeta);
    if k == 0 || epsilon >= EPSILON_0 {
        return Err(ConstructError::FlatnessInsufficient { k, epsilon });
    }
    let hair = u.prepend_zeros(k);
    let lam = XReal::from(lambda);

    // Entry into and exit from the unit disc of the start of μ.
    let theta = find_theta(&hair, zeta, lambda)?;
    let mut z = trace_ext(&hair, XReal::from(theta), None, lambda)?;
    let mut entry = None;
    let mut exit = None;
    for s in 1..MAX_STAGES {
        z = l0(&z, lambda)?;
        let inside = z.ln_abs().map(|r| r <= XReal::ZERO).unwrap_or(true);
        match entry {
            None if inside => entry = Some(s),
            Some(_) if !inside => {
                exit = Some((s, z));
                break;
            }
            _ => {}
        }
    }
    let (q, mut zq) = exit.ok_or(ConstructError::StageNotReached("exit from the unit disc"))?;
    let entry = entry.unwrap();
    let mut p = 0;
    while zq.ln_abs().map(|r| r <= XReal::from(-1.0)).unwrap_or(true) {
        zq = l0(&zq, lambda)?;
        p += 1;
        if q + p >= MAX_STAGES {
            return Err(ConstructError::StageNotReached("radius 1/e"));
        }
    }
    if !zq.re.is_negative() {
        return Err(ConstructError::StageNotReached("negative exit point"));
    }
    let s0 = q + p + 1;

    // Sample plan for ν_0, ordered from the far end to Re = 0.
    let t_far = lam * (lam * (-tau)).exp();
    let x_near = lam * tau.exp();
    let mut plan = Vec::new();
    if t_far > XReal::from(RESOLVABLE_HI) {
        let hi = (t_far / lam).ln().unwrap();
        let lo = (RESOLVABLE_HI / lambda).ln();
        for u in magnitude_ladder(hi, lo) {
            plan.push(Sample::Continued(u));
        }
    }
    let top = t_far.min(XReal::from(RESOLVABLE_HI)).to_f64().unwrap();
    let bottom = x_near.max(XReal::from(RESOLVABLE_LO)).to_f64().unwrap();
    for i in 0..=TRACED_SAMPLES {
        let t = i as f64 / TRACED_SAMPLES as f64;
        plan.push(Sample::Traced(top.powf(1.0 - t) * bottom.powf(t)));
    }
    if x_near < XReal::from(RESOLVABLE_LO) {
        let hi = -tau;
        let lo = -(RESOLVABLE_LO / lambda).ln();
        let mut us: Vec<XReal> = magnitude_ladder(hi, lo).into_iter().map(|m| -m).collect();
        us.reverse();
        plan.extend(us.into_iter().map(Sample::Continued));
    }

    // Traced chains, plus the two ends of ν_0's preimage.
    let mut pre: Vec<Vec<XPoint>> = vec![Vec::new(); s0];
    let mut nu0 = Vec::new();
    let mut im_bound = XReal::ZERO;
    let mut sign = 0.0;
    let limit_chain = chain(&hair, XReal::ZERO, s0, lambda)?;
    let note = |c: &[XPoint], bound: &mut XReal, sign: &mut f64| {
        let y = c[s0 - 1].im;
        if y.abs() > *bound {
            *bound = y.abs();
        }
        if *sign == 0.0 {
            *sign = y.signum();
        }
    };
    note(&limit_chain, &mut im_bound, &mut sign);
    let mut traced_chains = Vec::new();
    for smp in &plan {
        if let Sample::Traced(mag) = smp {
            let x = XReal::from(lambda * (-mag).exp());
            let c = chain(&hair, x, s0, lambda)?;
            note(&c, &mut im_bound, &mut sign);
            traced_chains.push(c);
        }
    }
    let end_chain = chain(&hair, lam, s0, lambda)?;
    note(&end_chain, &mut im_bound, &mut sign);
    let y_cont = if sign < 0.0 { -im_bound } else { im_bound };

    let mut traced_iter = traced_chains.into_iter();
    let mut continued = 0;
    for smp in &plan {
        match smp {
            Sample::Traced(_) => {
                let c = traced_iter.next().unwrap();
                for (s, st) in pre.iter_mut().enumerate() {
                    st.push(c[s]);
                }
                nu0.push(c[s0]);
            }
            Sample::Continued(u) => {
                let x = -(lam * u.exp());
                // ν_0 = L(λe^x + iy): Re = x + ln|1 + ir|, Im = arg(1 + ir)
                let r = y_cont * (-x).exp() / lam;
                let rf = r.to_f64().unwrap_or(f64::INFINITY);
                if rf.abs() > EPSILON_0 {
                    return Err(ConstructError::StageNotReached("near-real ν_0"));
                }
                let point = if rf.abs() < 1e-8 {
                    XPoint::new(x, r)
                } else {
                    XPoint::new(x + XReal::from(0.5 * (rf * rf).ln_1p()), XReal::from(rf.atan()))
                };
                nu0.push(point);
                continued += 1;
            }
        }
    }
    for (s, st) in pre.iter_mut().enumerate() {
        st.insert(0, limit_chain[s]);
        st.push(end_chain[s]);
    }
    let end = end_chain[s0];
    if end.re.abs() > XReal::from(1e-9) {
        return Err(ConstructError::StageNotReached("ν_0 endpoint at Re = 0"));
    }

    let mut nu1 = Vec::with_capacity(nu0.len());
    for z in &nu0 {
        nu1.push(l0(z, lambda)?);
    }
    nu0.push(end);
    let last = nu1.last().unwrap().re;
    if ((last - tau).abs() / tau.abs()) > XReal::from(1e-9) {
        return Err(ConstructError::StageNotReached("ν_1 endpoint at Re = τ"));
    }
    let mut nu2 = Vec::with_capacity(nu1.len());
    for z in &nu1 {
        nu2.push(l0(z, lambda)?);
    }
    let mut stages: Vec<Polyline> = pre.into_iter().map(|points| Polyline { points }).collect();
    stages.push(Polyline { points: nu0 });
    stages.push(Polyline { points: nu1 });
    stages.push(Polyline { points: nu2 });
    Ok(DescentTrace { k, entry, q, p, stages, tau, epsilon, im_bound, traced: TRACED_SAMPLES + 1, continued })
}

/// `τ = −e^{b+2}` for a target with right data `b`.
pub fn default_tau(rect: &TargetRect) -> XReal {
    -(XReal::from(rect.b) + XReal::from(2.0)).exp()
}

/// Outcome of [`min_zero_block`].
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroBlockSearch {
    /// Smallest `K` whose hair of `0_K u` passes twice.
    pub k: usize,
    /// Crossing counts at `K`, `K+1`, `K+2`.
    pub counts: [usize; 3],
}

impl ZeroBlockSearch {
    pub fn persistent(&self) -> bool {
        self.counts.iter().all(|&c| c >= 2)
    }
}

/// Crossing count of the hair of `0_big_k u` through `rect`.
pub fn crossing_count(u: &ItinerarySpec, big_k: usize, rect: &TargetRect, lambda: f64, zeta: f64) -> Result<usize, ConstructError> {
    let offset = descent_offset(zeta, lambda);
    if let Some(off) = offset {
        if big_k > off {
            match descent_trace(u, big_k - off, zeta, default_tau(rect), lambda) {
                Ok(tr) if tr.hair_index() == big_k => return Ok(passes_twice(tr.nu2(), rect)),
                Ok(_) => {}
                Err(ConstructError::FlatnessInsufficient { .. }) | Err(ConstructError::StageNotReached(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    // Direct trace of the tail.
    let hair = u.prepend_zeros(big_k);
    match tail_polyline(&hair, zeta, zeta + DIRECT_ETA_SPAN, 0.5, lambda) {
        Ok(t) => {
            let pts: Vec<_> = t.samples.iter().map(|s| s.point).collect();
            Ok(passes_twice(&Polyline::from_complex(&pts), rect))
        }
        Err(HairError::NoBracket) | Err(HairError::DepthInsufficient(_)) => Ok(0),
        Err(e) => Err(e.into()),
    }
}

/// Number of pullbacks between `μ` and `ν_2`, from the real `L`-orbit of `ζ`.
pub fn descent_offset(zeta: f64, lambda: f64) -> Option<usize> {
    let mut x = zeta;
    let mut entered = false;
    for s in 1..MAX_STAGES {
        if x <= 0.0 {
            return None;
        }
        x = (x / lambda).ln();
        if !entered && x.abs() <= 1.0 {
            entered = true;
        } else if entered && x.abs() > 1.0 {
            let mut p = 0;
            while x.abs() <= (-1f64).exp() {
                x = (x.abs() / lambda).ln();
                p += 1;
            }
            return Some(s + p + 3);
        }
    }
    None
}

/// Smallest `K ≤ k_max` such that the hair of `0_K u` passes twice through `rect`,
/// with the counts at `K+1` and `K+2`.
pub fn min_zero_block(
    u: &ItinerarySpec,
    rect: &TargetRect,
    k_max: usize,
    lambda: f64,
    zeta: f64,
) -> Result<ZeroBlockSearch, ConstructError> {
    assert!(k_max >= 1);
    let mut best = 0;
    for big_k in 1..=k_max {
        let c = crossing_count(u, big_k, rect, lambda, zeta)?;
        best = best.max(c);
        if c >= 2 {
            let c1 = crossing_count(u, big_k + 1, rect, lambda, zeta)?;
            let c2 = crossing_count(u, big_k + 2, rect, lambda, zeta)?;
            return Ok(ZeroBlockSearch { k: big_k, counts: [c, c1, c2] });
        }
    }
    Err(ConstructError::NotFound { k_max, best })
}

/// Output of [`assemble_theorem_a`].
#[derive(Clone, Debug, PartialEq)]
pub struct ConstructionCertificate {
    pub lambda: f64,
    pub zeta: f64,
    pub m: u64,
    pub p: u64,
    pub blocks: Vec<Block>,
    /// `n_0, n_1, …`
    pub zero_lengths: Vec<usize>,
    /// `q_0, q_1, …`
    pub q_indices: Vec<u64>,
    /// `V(a_{q_j}, b_{2q_j}, M_{q_j})`.
    pub targets: Vec<TargetRect>,
    pub crossing_counts: Vec<usize>,
    /// Stage at which assembly stopped for lack of tower depth.
    pub truncated_at: Option<usize>,
    pub config_digest: String,
}

/// Parses a whitespace-separated list of bracketed groups, e.g. `"[1] [-1 2]"`.
pub fn parse_blocks(text: &str) -> Result<Vec<Block>, ConstructError> {
    let spec = parse_itinerary(&format!("{text} | period [1]")).map_err(|e| ConstructError::Certificate { line: 0, msg: e.to_string() })?;
    for (i, b) in spec.blocks.iter().enumerate() {
        if b.kind != BlockKind::Literal || !b.has_nonzero() {
            return Err(ConstructError::ZeroBlock(i));
        }
    }
    Ok(spec.blocks)
}

fn block_at(blocks: &[Block], j: usize) -> &Block {
    &blocks[j % blocks.len()]
}

/// Itinerary after the zero block preceding `t_j`, cycling the blocks.
fn tail_from(blocks: &[Block], j: usize) -> ItinerarySpec {
    let mut period = Vec::new();
    for i in 0..blocks.len() {
        period.extend_from_slice(&block_at(blocks, j + i).symbols);
    }
    ItinerarySpec::new(vec![Block::literal(period.clone())], TailRule::Period(period)).expect("blocks have non-zero symbols")
}

/// Zeros needed in front of a block starting at `pos` so that `|s_i| ≤ M + ip`.
fn growth_padding(block: &Block, pos: u64, m: u64, p: u64) -> usize {
    let mut c = 0u64;
    loop {
        let ok = block.symbols.iter().enumerate().all(|(i, &x)| x.unsigned_abs() <= m + (pos + c + i as u64) * p);
        if ok {
            return c as usize;
        }
        if p == 0 {
            // Bounded case: no amount of padding helps; the caller's M must cover the block.
            return 0;
        }
        c += 1;
    }
}

fn ladder_for(lambda: f64, zeta: f64, m: u64, p: u64, n_max: usize) -> Result<TargetLadder, ConstructError> {
    Ok(build_ladder(lambda, zeta, m, p, n_max, DEFAULT_SAMPLE_BUDGET)?)
}

/// Tower level beyond which a target cannot be sampled.
fn target_feasible(rect: &TargetRect) -> bool {
    rect.b.level() + 8 <= MAX_DEPTH
}

/// Chooses the zero blocks `n_1, …, n_{depth_j}` in front of the literal
/// blocks so that each shifted hair passes twice through its target.
pub fn assemble_theorem_a(
    blocks: &[Block],
    lambda: f64,
    m: u64,
    p: u64,
    depth_j: usize,
    zeta: f64,
) -> Result<ConstructionCertificate, ConstructError> {
    for (i, b) in blocks.iter().enumerate() {
        if !b.has_nonzero() {
            return Err(ConstructError::ZeroBlock(i));
        }
    }
    let n0 = growth_padding(&blocks[0], 0, m, p);
    let mut cert = ConstructionCertificate {
        lambda,
        zeta,
        m,
        p,
        blocks: blocks.to_vec(),
        zero_lengths: vec![n0],
        q_indices: vec![(n0 + blocks[0].len()) as u64],
        targets: Vec::new(),
        crossing_counts: Vec::new(),
        truncated_at: None,
        config_digest: String::new(),
    };
    let mut ladder: Option<TargetLadder> = None;
    for j in 0..depth_j {
        let q = *cert.q_indices.last().unwrap() as usize;
        let need = 2 * q + 1;
        if ladder.as_ref().map(|l| l.b_seq.len() <= need).unwrap_or(true) {
            // Level of b grows by one per index; stop before allocating hopeless ladders.
            if need > MAX_DEPTH as usize {
                cert.truncated_at = Some(j);
                return Err(ConstructError::TowerInfeasible { j, certificate: Box::new(cert) });
            }
            ladder = Some(ladder_for(lambda, zeta, m, p, need)?);
        }
        let l = ladder.as_ref().unwrap();
        let rect = l.rect(q, q);
        if !target_feasible(&rect) {
            cert.truncated_at = Some(j);
            return Err(ConstructError::TowerInfeasible { j, certificate: Box::new(cert) });
        }
        let u = tail_from(blocks, j + 1);
        let k_max = MAX_DEPTH as usize - 8;
        let found = min_zero_block(&u, &rect, k_max, lambda, zeta)?;
        let next = block_at(blocks, j + 1);
        let pad = growth_padding(next, q as u64, m, p);
        let n = found.k.max(pad);
        let count = if n == found.k { found.counts[0] } else { crossing_count(&u, n, &rect, lambda, zeta)? };
        cert.targets.push(rect);
        cert.crossing_counts.push(count);
        cert.zero_lengths.push(n);
        cert.q_indices.push((q + n + next.len()) as u64);
    }
    Ok(cert)
}

impl ConstructionCertificate {
    /// Number of certified stages.
    pub fn depth(&self) -> usize {
        self.targets.len()
    }

    /// Full itinerary prefix `0_{n_0} t_0 0_{n_1} t_1 …` through the last certified block,
    /// continued by cycling the blocks.
    pub fn itinerary(&self) -> ItinerarySpec {
        let mut groups = Vec::new();
        for (j, &n) in self.zero_lengths.iter().enumerate() {
            if n > 0 {
                groups.push(Block::zeros(n));
            }
            groups.push(block_at(&self.blocks, j).clone());
        }
        let tail = tail_from(&self.blocks, self.zero_lengths.len());
        let period = match tail.tail {
            TailRule::Period(p) => p,
            _ => unreachable!(),
        };
        ItinerarySpec::new(groups, TailRule::Period(period)).expect("non-zero blocks")
    }

    /// Versioned text form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{CERT_HEADER}");
        if !self.config_digest.is_empty() {
            let _ = writeln!(out, "digest {}", self.config_digest);
        }
        let _ = writeln!(out, "lambda {:e}", self.lambda);
        let _ = writeln!(out, "zeta {:e}", self.zeta);
        let _ = writeln!(out, "M {}", self.m);
        let _ = writeln!(out, "p {}", self.p);
        let blocks: Vec<String> = self.blocks.iter().map(|b| b.to_string()).collect();
        let _ = writeln!(out, "blocks {}", blocks.join(" "));
        let _ = writeln!(out, "resolution traced={} ladder={} family={}", TRACED_SAMPLES + 1, LADDER_SAMPLES, DEFAULT_SAMPLE_BUDGET);
        let _ = writeln!(out, "n0 {}", self.zero_lengths[0]);
        for j in 0..self.targets.len() {
            let t = &self.targets[j];
            let _ = writeln!(
                out,
                "stage {} q={} n={} a={} b={} K={} crossings={}",
                j,
                self.q_indices[j],
                self.zero_lengths[j + 1],
                t.a.literal(),
                t.b.literal(),
                t.k,
                self.crossing_counts[j]
            );
        }
        if let Some(j) = self.truncated_at {
            let _ = writeln!(out, "truncated {j}");
        }
        out.push_str("end\n");
        out
    }

    /// Inverse of [`to_text`](Self::to_text).
    pub fn parse(text: &str) -> Result<ConstructionCertificate, ConstructError> {
        let err = |line: usize, msg: &str| ConstructError::Certificate { line, msg: msg.to_string() };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        match lines.next() {
            Some((_, h)) if h == CERT_HEADER => {}
            _ => return Err(err(1, "missing header")),
        }
        let mut cert = ConstructionCertificate {
            lambda: f64::NAN,
            zeta: f64::NAN,
            m: 0,
            p: 0,
            blocks: Vec::new(),
            zero_lengths: Vec::new(),
            q_indices: Vec::new(),
            targets: Vec::new(),
            crossing_counts: Vec::new(),
            truncated_at: None,
            config_digest: String::new(),
        };
        let mut ended = false;
        for (ln, line) in lines {
            if ended {
                return Err(err(ln, "content after end"));
            }
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(ln, "bad number"));
            let int = |s: &str| s.parse::<u64>().map_err(|_| err(ln, "bad integer"));
            match key {
                "digest" => cert.config_digest = rest.to_string(),
                "lambda" => cert.lambda = num(rest)?,
                "zeta" => cert.zeta = num(rest)?,
                "M" => cert.m = int(rest)?,
                "p" => cert.p = int(rest)?,
                "blocks" => cert.blocks = parse_blocks(rest).map_err(|_| err(ln, "bad blocks"))?,
                "resolution" => {}
                "n0" => {
                    cert.zero_lengths = vec![int(rest)? as usize];
                }
                "stage" => {
                    let mut fields = rest.split_whitespace();
                    let j = int(fields.next().ok_or_else(|| err(ln, "missing stage index"))?)? as usize;
                    if j != cert.targets.len() {
                        return Err(err(ln, "stages out of order"));
                    }
                    let mut get = |name: &str| -> Result<String, ConstructError> {
                        let f = fields.next().ok_or_else(|| err(ln, "missing field"))?;
                        f.strip_prefix(name)
                            .and_then(|v| v.strip_prefix('='))
                            .map(|v| v.to_string())
                            .ok_or_else(|| err(ln, "unexpected field"))
                    };
                    let q = int(&get("q")?)?;
                    let n = int(&get("n")?)? as usize;
                    let a = TowerReal::parse_literal(&get("a")?).ok_or_else(|| err(ln, "bad tower literal"))?;
                    let b = TowerReal::parse_literal(&get("b")?).ok_or_else(|| err(ln, "bad tower literal"))?;
                    let k = int(&get("K")?)?;
                    let c = int(&get("crossings")?)? as usize;
                    cert.q_indices.push(q);
                    cert.zero_lengths.push(n);
                    cert.targets.push(TargetRect { a, b, k });
                    cert.crossing_counts.push(c);
                }
                "truncated" => cert.truncated_at = Some(int(rest)? as usize),
                "end" => ended = true,
                _ => return Err(err(ln, "unknown record")),
            }
        }
        if !ended {
            return Err(err(0, "missing end marker"));
        }
        if cert.blocks.is_empty() || cert.zero_lengths.is_empty() || !cert.lambda.is_finite() || !cert.zeta.is_finite() {
            return Err(err(0, "incomplete certificate"));
        }
        // q_j of the next, uncertified stage.
        let j = cert.targets.len();
        let last_q = if j == 0 {
            (cert.zero_lengths[0] + cert.blocks[0].len()) as u64
        } else {
            cert.q_indices[j - 1] + (cert.zero_lengths[j] + block_at(&cert.blocks, j).len()) as u64
        };
        cert.q_indices.push(last_q);
        Ok(cert)
    }

    /// Recomputes every crossing count from the recorded itinerary and targets.
    pub fn verify(&self) -> Result<Vec<usize>, ConstructError> {
        let s = self.itinerary();
        let mut out = Vec::with_capacity(self.targets.len());
        for (j, rect) in self.targets.iter().enumerate() {
            let q = self.q_indices[j];
            let shifted = s.shift(q).normalized();
            let n = self.zero_lengths[j + 1];
            if shifted.symbols(n).iter().any(|&x| x != 0) || shifted.symbol_at(n as u64) == 0 {
                return Err(ConstructError::Certificate { line: 0, msg: format!("stage {j} does not start with {n} zeros") });
            }
            let u = tail_from(&self.blocks, j + 1);
            out.push(crossing_count(&u, n, rect, self.lambda, self.zeta)?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_bound_values() {
        assert_eq!(zeros_flatten_bound(1, 30.0), PI);
        assert!((zeros_flatten_bound(2, 30.0) - (PI / 30.0).atan()).abs() < 1e-15);
        assert!(zeros_flatten_bound(5, 30.0) < zeros_flatten_bound(4, 30.0));
    }

    #[test]
    fn offset_for_default_zeta() {
        // 30 → 3.40 → 1.22 → 0.20 → −1.60: entry at 3, exit at 4.
        assert_eq!(descent_offset(30.0, 1.0), Some(7));
    }

    #[test]
    fn blocks_parse() {
        let b = parse_blocks("[1] [-1 2]").unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b[1].symbols, vec![-1, 2]);
        assert!(matches!(parse_blocks("[0]"), Err(ConstructError::ZeroBlock(0))));
    }

    #[test]
    fn padding_for_large_symbols() {
        let b = Block::literal(vec![5]);
        assert_eq!(growth_padding(&b, 0, 2, 1), 3);
        assert_eq!(growth_padding(&b, 4, 2, 1), 0);
    }
}
