//! Finitely described infinite itineraries.
//!
//! An itinerary is an explicit prefix of groups followed by a tail rule. The
//! text form is
//!
//! ```text
//! spec  := group+ "|" tail
//! group := "0^" INT | "[" INT+ "]"
//! tail  := "repeat" | "arith" ["[" INT "]"] | "period" "[" INT+ "]"
//! ```
//!
//! `repeat` repeats the last group, `arith` continues with consecutive
//! integers (by default `s_j = j`; `arith [c]` starts the tail at `c`), and
//! `period [..]` repeats the given block.

use std::fmt;

use thiserror::Error;

use crate::xnum::TowerReal;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ItineraryError {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("itinerary has no literal block {0}")]
    Structure(usize),
}

fn perr(pos: usize, msg: impl Into<String>) -> ItineraryError {
    ItineraryError::Parse { pos, msg: msg.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    Zeros,
    Literal,
}

/// A finite group of symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub symbols: Vec<i64>,
    pub kind: BlockKind,
}

impl Block {
    pub fn zeros(len: usize) -> Block {
        assert!(len >= 1, "zero block needs positive length");
        Block { symbols: vec![0; len], kind: BlockKind::Zeros }
    }

    pub fn literal(symbols: Vec<i64>) -> Block {
        assert!(!symbols.is_empty(), "literal block needs symbols");
        Block { symbols, kind: BlockKind::Literal }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn has_nonzero(&self) -> bool {
        self.symbols.iter().any(|&x| x != 0)
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            BlockKind::Zeros => write!(f, "0^{}", self.symbols.len()),
            BlockKind::Literal => {
                let parts: Vec<String> = self.symbols.iter().map(|x| x.to_string()).collect();
                write!(f, "[{}]", parts.join(" "))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TailRule {
    /// Repeat the last prefix group forever.
    Repeat,
    /// Symbol at `prefix_len + i` is `start + i`.
    Arith { start: i64 },
    /// Repeat this block forever.
    Period(Vec<i64>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ItinerarySpec {
    pub blocks: Vec<Block>,
    pub tail: TailRule,
    /// Number of leading symbols removed by shifts.
    pub offset: u64,
}

impl ItinerarySpec {
    /// Builds a spec, rejecting tails that end in zeros.
    pub fn new(blocks: Vec<Block>, tail: TailRule) -> Result<ItinerarySpec, ItineraryError> {
        if blocks.is_empty() {
            return Err(perr(0, "at least one group is required"));
        }
        match &tail {
            TailRule::Repeat if !blocks.last().unwrap().has_nonzero() => return Err(perr(0, "repeated group is all zeros")),
            TailRule::Period(p) if p.is_empty() || p.iter().all(|&x| x == 0) => return Err(perr(0, "period block is all zeros")),
            _ => {}
        }
        Ok(ItinerarySpec { blocks, tail, offset: 0 })
    }

    /// Constant itinerary `(c c c ...)`, `c ≠ 0`.
    pub fn constant(c: i64) -> ItinerarySpec {
        ItinerarySpec::new(vec![Block::literal(vec![c])], TailRule::Repeat).expect("non-zero constant")
    }

    /// Periodic itinerary repeating `period`.
    pub fn periodic(period: Vec<i64>) -> ItinerarySpec {
        ItinerarySpec::new(vec![Block::literal(period.clone())], TailRule::Period(period)).expect("non-zero period")
    }

    /// Length of the explicit prefix before shifting.
    pub fn prefix_len(&self) -> u64 {
        self.blocks.iter().map(|b| b.len() as u64).sum()
    }

    fn raw_symbol(&self, idx: u64) -> i64 {
        let mut i = idx;
        for b in &self.blocks {
            if i < b.len() as u64 {
                return b.symbols[i as usize];
            }
            i -= b.len() as u64;
        }
        match &self.tail {
            TailRule::Repeat => {
                let last = &self.blocks.last().unwrap().symbols;
                last[(i % last.len() as u64) as usize]
            }
            TailRule::Arith { start } => start + i as i64,
            TailRule::Period(p) => p[(i % p.len() as u64) as usize],
        }
    }

    /// `s_j`.
    pub fn symbol_at(&self, j: u64) -> i64 {
        self.raw_symbol(j + self.offset)
    }

    pub fn symbols(&self, n: usize) -> Vec<i64> {
        (0..n as u64).map(|j| self.symbol_at(j)).collect()
    }

    /// `σ^n(s)`.
    pub fn shift(&self, n: u64) -> ItinerarySpec {
        ItinerarySpec { offset: self.offset + n, ..self.clone() }
    }

    /// `0_k s`.
    pub fn prepend_zeros(&self, k: usize) -> ItinerarySpec {
        let base = self.normalized();
        if k == 0 {
            return base;
        }
        let mut blocks = Vec::with_capacity(base.blocks.len() + 1);
        match base.blocks.first() {
            Some(b) if b.kind == BlockKind::Zeros => {
                blocks.push(Block::zeros(k + b.len()));
                blocks.extend(base.blocks[1..].iter().cloned());
            }
            _ => {
                blocks.push(Block::zeros(k));
                blocks.extend(base.blocks.iter().cloned());
            }
        }
        ItinerarySpec { blocks, tail: base.tail, offset: 0 }
    }

    /// Equivalent spec with `offset = 0`.
    pub fn normalized(&self) -> ItinerarySpec {
        if self.offset == 0 {
            return self.clone();
        }
        let mut skip = self.offset;
        let mut blocks = Vec::new();
        for b in &self.blocks {
            let len = b.len() as u64;
            if skip >= len {
                skip -= len;
                continue;
            }
            let rest = b.symbols[skip as usize..].to_vec();
            skip = 0;
            blocks.push(Block { symbols: rest, kind: b.kind });
        }
        // Repeat refers to the last group; pin it down before the prefix changes.
        let tail = match &self.tail {
            TailRule::Repeat => TailRule::Period(self.blocks.last().unwrap().symbols.clone()),
            t => t.clone(),
        };
        let tail = match tail {
            TailRule::Period(p) => {
                let r = (skip % p.len() as u64) as usize;
                let mut q = p[r..].to_vec();
                q.extend_from_slice(&p[..r]);
                TailRule::Period(q)
            }
            TailRule::Arith { start } => TailRule::Arith { start: start + skip as i64 },
            TailRule::Repeat => unreachable!(),
        };
        if blocks.is_empty() {
            match &tail {
                TailRule::Period(p) => blocks.push(Block::literal(p.clone())),
                TailRule::Arith { start } => {
                    blocks.push(Block::literal(vec![*start]));
                    return ItinerarySpec { blocks, tail: TailRule::Arith { start: start + 1 }, offset: 0 };
                }
                TailRule::Repeat => unreachable!(),
            }
        }
        let tail = match tail {
            // Keep the shorter `repeat` form when it says the same thing.
            TailRule::Period(p) if blocks.last().map(|b| b.symbols == p).unwrap_or(false) => TailRule::Repeat,
            t => t,
        };
        ItinerarySpec { blocks, tail, offset: 0 }
    }

    /// Literal groups in order, with their start index, including groups
    /// produced by a periodic tail. Groups without a non-zero symbol are skipped.
    fn literal_group(&self, j: usize) -> Option<(u64, Vec<i64>)> {
        let s = self.normalized();
        let mut start = 0u64;
        let mut count = 0usize;
        for b in &s.blocks {
            if b.kind == BlockKind::Literal && b.has_nonzero() {
                if count == j {
                    return Some((start, b.symbols.clone()));
                }
                count += 1;
            }
            start += b.len() as u64;
        }
        let period = match &s.tail {
            TailRule::Repeat => s.blocks.last().unwrap().symbols.clone(),
            TailRule::Period(p) => p.clone(),
            TailRule::Arith { .. } => return None,
        };
        let extra = (j - count) as u64;
        Some((start + extra * period.len() as u64, period))
    }

    /// Markers of the `j`-th literal group `t_j`.
    pub fn block_markers(&self, j: usize) -> Result<BlockMarkers, ItineraryError> {
        let (start, g) = self.literal_group(j).ok_or(ItineraryError::Structure(j))?;
        let first = g.iter().position(|&x| x != 0).ok_or(ItineraryError::Structure(j))?;
        let last = g.iter().rposition(|&x| x != 0).unwrap();
        Ok(BlockMarkers { a: start + first as u64, d: start + last as u64, b: g[first], e: g[last] })
    }

    /// Largest `|s_j|` over the tail, or `None` if the tail is unbounded.
    fn tail_bound(&self) -> Option<i64> {
        match &self.tail {
            TailRule::Repeat => self.blocks.last().unwrap().symbols.iter().map(|x| x.abs()).max(),
            TailRule::Period(p) => p.iter().map(|x| x.abs()).max(),
            TailRule::Arith { .. } => None,
        }
    }

    fn prefix_bound(&self) -> i64 {
        self.blocks.iter().flat_map(|b| b.symbols.iter()).map(|x| x.abs()).max().unwrap_or(0)
    }
}

impl fmt::Display for ItinerarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.normalized();
        let groups: Vec<String> = s.blocks.iter().map(|b| b.to_string()).collect();
        write!(f, "{} | ", groups.join(" "))?;
        match &s.tail {
            TailRule::Repeat => write!(f, "repeat"),
            TailRule::Arith { start } if *start == s.prefix_len() as i64 => write!(f, "arith"),
            TailRule::Arith { start } => write!(f, "arith [{start}]"),
            TailRule::Period(p) => {
                let parts: Vec<String> = p.iter().map(|x| x.to_string()).collect();
                write!(f, "period [{}]", parts.join(" "))
            }
        }
    }
}

/// Positions of the first and last non-zero entries of a literal group.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockMarkers {
    pub a: u64,
    pub d: u64,
    pub b: i64,
    pub e: i64,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(i64),
    Pow,
    Open,
    Close,
    Bar,
    Word(String),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ItineraryError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'[' => {
                out.push((i, Tok::Open));
                i += 1
            }
            b']' => {
                out.push((i, Tok::Close));
                i += 1
            }
            b'|' => {
                out.push((i, Tok::Bar));
                i += 1
            }
            b'^' => {
                out.push((i, Tok::Pow));
                i += 1
            }
            b'-' | b'0'..=b'9' => {
                let start = i;
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let v: i64 = text[start..i].parse().map_err(|_| perr(start, "bad integer"))?;
                out.push((start, Tok::Int(v)));
            }
            b'a'..=b'z' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_alphabetic() {
                    i += 1;
                }
                out.push((start, Tok::Word(text[start..i].to_string())));
            }
            _ => return Err(perr(i, format!("unexpected character {:?}", c as char))),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    i: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.1)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.i).map(|t| t.0).unwrap_or(self.end)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.i).map(|t| t.1.clone());
        self.i += 1;
        t
    }

    fn int_list(&mut self) -> Result<Vec<i64>, ItineraryError> {
        let at = self.pos();
        if self.next() != Some(Tok::Open) {
            return Err(perr(at, "expected '['"));
        }
        let mut v = Vec::new();
        loop {
            let at = self.pos();
            match self.next() {
                Some(Tok::Int(x)) => v.push(x),
                Some(Tok::Close) if !v.is_empty() => return Ok(v),
                _ => return Err(perr(at, "expected integer or ']'")),
            }
        }
    }
}

/// Parses the itinerary text form.
pub fn parse_itinerary(text: &str) -> Result<ItinerarySpec, ItineraryError> {
    let mut p = Parser { toks: lex(text)?, i: 0, end: text.len() };
    let mut blocks = Vec::new();
    loop {
        let at = p.pos();
        match p.peek() {
            Some(Tok::Int(0)) => {
                p.next();
                if p.next() != Some(Tok::Pow) {
                    return Err(perr(at, "expected '^' after 0"));
                }
                let at = p.pos();
                match p.next() {
                    Some(Tok::Int(n)) if n >= 1 => blocks.push(Block::zeros(n as usize)),
                    _ => return Err(perr(at, "zero block needs a positive length")),
                }
            }
            Some(Tok::Open) => blocks.push(Block::literal(p.int_list()?)),
            Some(Tok::Bar) => break,
            None => return Err(perr(at, "missing '|' and tail rule")),
            _ => return Err(perr(at, "expected a group")),
        }
    }
    if blocks.is_empty() {
        return Err(perr(p.pos(), "at least one group is required"));
    }
    p.next();
    let at = p.pos();
    let tail = match p.next() {
        Some(Tok::Word(w)) if w == "repeat" => TailRule::Repeat,
        Some(Tok::Word(w)) if w == "arith" => {
            let prefix: u64 = blocks.iter().map(|b| b.len() as u64).sum();
            if p.peek() == Some(&Tok::Open) {
                let at = p.pos();
                let v = p.int_list()?;
                if v.len() != 1 {
                    return Err(perr(at, "arith takes one start value"));
                }
                TailRule::Arith { start: v[0] }
            } else {
                TailRule::Arith { start: prefix as i64 }
            }
        }
        Some(Tok::Word(w)) if w == "period" => TailRule::Period(p.int_list()?),
        _ => return Err(perr(at, "expected repeat, arith or period")),
    };
    if p.peek().is_some() {
        return Err(perr(p.pos(), "trailing input"));
    }
    ItinerarySpec::new(blocks, tail).map_err(|e| match e {
        ItineraryError::Parse { msg, .. } => perr(at, msg),
        other => other,
    })
}

/// Witness that `|s_j| ≤ M + jp` for every `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GrowthWitness {
    pub m: u64,
    pub p: u64,
    pub checked_horizon: u64,
}

/// Checks membership in `Σ_M^p`; returns the first violating index otherwise.
///
/// The explicit scan is extended past `horizon` far enough that the tail rule
/// settles the remaining indices.
pub fn classify_linear_growth(s: &ItinerarySpec, m: u64, p: u64, horizon: u64) -> Result<GrowthWitness, u64> {
    let n = s.normalized();
    let pre = n.prefix_len();
    let (mi, pi) = (m as i128, p as i128);
    let scan_to = match &n.tail {
        TailRule::Repeat | TailRule::Period(_) => {
            let bound = n.tail_bound().unwrap() as i128;
            let period = match &n.tail {
                TailRule::Period(q) => q.len() as u64,
                _ => n.blocks.last().unwrap().len() as u64,
            };
            let settle = if pi > 0 { ((bound - mi).max(0) + pi - 1) / pi } else { 0 } as u64;
            horizon.max(pre + 2 * period).max(settle + period)
        }
        TailRule::Arith { start } => {
            let c = *start as i128;
            // |c + i| ≤ M + (pre + i) p holds for all large i iff p ≥ 2, or p = 1 and c - pre ≤ M.
            let settle = if pi >= 2 { ((c - mi - pre as i128 * pi).max(0) / (pi - 1) + 1) as u64 } else { 0 };
            horizon.max(pre + c.unsigned_abs() as u64 + m + settle + 2)
        }
    };
    for j in 0..scan_to {
        if (n.symbol_at(j) as i128).abs() > mi + j as i128 * pi {
            return Err(j);
        }
    }
    if let TailRule::Arith { start } = &n.tail {
        let c = *start as i128;
        let eventually_ok = pi >= 2 || (pi == 1 && c - pre as i128 <= mi);
        if !eventually_ok {
            // Linear tail outgrows the bound; locate the first violation.
            let mut j = scan_to;
            loop {
                if (n.symbol_at(j) as i128).abs() > mi + j as i128 * pi {
                    return Err(j);
                }
                j += 1;
            }
        }
    }
    Ok(GrowthWitness { m, p, checked_horizon: horizon })
}

/// Candidate values of `A` searched for exponential boundedness.
pub const WITNESS_A: [f64; 6] = [1.0 / (2.0 * std::f64::consts::PI), 0.5, 1.0, 2.0, 4.0, 8.0];

/// `A · F^k(x) > v`, decided in tower arithmetic.
fn tower_exceeds(a: f64, fk: TowerReal, v: f64) -> bool {
    match fk.to_f64() {
        Some(t) if t < 1e290 => a * t > v,
        _ => true,
    }
}

/// `A F^k(x) < v`, strictly.
fn tower_below(a: f64, fk: TowerReal, v: f64) -> bool {
    match fk.to_f64() {
        Some(t) if t < 1e290 => a * t < v,
        _ => false,
    }
}

/// Searches the grid for `(A, x)` with `|s_k| < A F^k(x)` for all `k`.
pub fn exp_bounded_witness(s: &ItinerarySpec, horizon: u64) -> Option<(f64, f64)> {
    let n = s.normalized();
    let pre = n.prefix_len();
    for xi in 1..=16 {
        let x = 0.5 * xi as f64;
        'a: for &a in &WITNESS_A {
            let mut fk = TowerReal::from_f64(x);
            let mut k = 0u64;
            loop {
                let sym = n.symbol_at(k).abs() as f64;
                if !tower_exceeds(a, fk, sym) {
                    continue 'a;
                }
                if k + 1 >= horizon && k >= pre {
                    // Beyond here the tail is bounded or linear while A·F^k(x) is
                    // already large and growing faster than linearly.
                    let settled = match n.tail_bound() {
                        Some(b) => tower_exceeds(a, fk, b as f64),
                        None => {
                            let lin = (n.prefix_bound() as f64) + (k as f64) * 2.0 + 1e6;
                            tower_exceeds(a, fk, lin) && tower_exceeds(1.0, fk, 10.0)
                        }
                    };
                    if settled {
                        return Some((a, x));
                    }
                }
                if k > horizon + 64 {
                    continue 'a;
                }
                k += 1;
                fk = fk.f();
            }
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FastVerdict {
    /// Some `k` has `|s_{n+k}| > A F^k(x)`.
    Pass {
        k: u32,
    },
    /// No such `k` exists.
    Fail,
    Unknown,
}

const FAST_K_CAP: u32 = 64;

/// For each `n` in `[N, horizon)`, decides whether `|s_{n+k}| > A F^k(x)` for some `k`.
pub fn is_fast(s: &ItinerarySpec, x: f64, a: f64, n_start: u64, horizon: u64) -> Vec<FastVerdict> {
    let norm = s.normalized();
    let pre = norm.prefix_len();
    let pb = norm.prefix_bound() as f64;
    let mut ladder = vec![TowerReal::from_f64(x)];
    for _ in 0..FAST_K_CAP {
        let next = ladder.last().unwrap().f();
        ladder.push(next);
    }
    (n_start..horizon)
        .map(|n| {
            for k in 0..=FAST_K_CAP {
                let fk = ladder[k as usize];
                let sym = norm.symbol_at(n + k as u64).abs() as f64;
                if tower_below(a, fk, sym) {
                    return FastVerdict::Pass { k };
                }
                // Upper bound for |s_j| over all j ≥ n + k.
                let j = n + k as u64;
                let rest = match norm.tail_bound() {
                    Some(b) if j >= pre => b as f64,
                    Some(b) => (b as f64).max(pb),
                    None => pb + (j as f64) + norm_arith_start(&norm).unsigned_abs() as f64 + 1.0,
                };
                // Once A F^k(x) tops that bound (and, for linear tails, F^k(x) is
                // large enough to outpace unit steps), no later k can succeed.
                let bounded = norm.tail_bound().is_some();
                if tower_exceeds(a, fk, rest) && (bounded || tower_exceeds(1.0, fk, 10.0)) {
                    return FastVerdict::Fail;
                }
            }
            FastVerdict::Unknown
        })
        .collect()
}

fn norm_arith_start(s: &ItinerarySpec) -> i64 {
    match s.tail {
        TailRule::Arith { start } => start,
        _ => 0,
    }
}

/// Zero-block lengths `n_p` for the fast-itinerary generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZeroLengths {
    Constant(u64),
    /// `n_p = base + step · p`.
    Linear {
        base: u64,
        step: u64,
    },
}

impl ZeroLengths {
    pub fn get(&self, p: u64) -> u64 {
        match *self {
            ZeroLengths::Constant(c) => c,
            ZeroLengths::Linear { base, step } => base + step * p,
        }
    }
}

/// Record of the insertion construction.
#[derive(Clone, Debug, PartialEq)]
pub struct FastItinerary {
    pub spec: ItinerarySpec,
    /// Indices `l_p`, `p ≥ 1`, of the base sequence after which zeros were inserted.
    pub insert_after: Vec<u64>,
}

/// Inserts `0_{n_0}` in front of `(0 1 2 ...)` and `0_{n_p}` after `s_{l_p}`,
/// where `l_p` is the first index past `l_{p-1}` with `l_p ≥ F^{n_p+p}(1)`.
pub fn build_fast_itinerary(zero_lengths: ZeroLengths, horizon: u64) -> FastItinerary {
    let one = TowerReal::from_f64(1.0);
    let mut ls = Vec::new();
    let mut prev: Option<u64> = None;
    for p in 1.. {
        let need = one.f_iter((zero_lengths.get(p) + p) as u32);
        let lo = prev.map(|v| v + 1).unwrap_or(0);
        let l = match need.to_f64() {
            Some(t) if t <= horizon as f64 => (t.ceil() as u64).max(lo),
            _ => break,
        };
        ls.push(l);
        prev = Some(l);
    }
    let mut blocks = Vec::new();
    let n0 = zero_lengths.get(0);
    if n0 > 0 {
        blocks.push(Block::zeros(n0 as usize));
    }
    let mut next = 0u64;
    for (i, &l) in ls.iter().enumerate() {
        blocks.push(Block::literal((next..=l).map(|v| v as i64).collect()));
        let np = zero_lengths.get(i as u64 + 1);
        if np > 0 {
            blocks.push(Block::zeros(np as usize));
        }
        next = l + 1;
    }
    if blocks.is_empty() {
        blocks.push(Block::literal(vec![0]));
        next = 1;
    }
    let spec = ItinerarySpec::new(blocks, TailRule::Arith { start: next as i64 }).expect("arith tail is never all zeros");
    FastItinerary { spec, insert_after: ls }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_examples() {
        let s = parse_itinerary("0^3 [1 -2] | repeat").unwrap();
        assert_eq!(s.symbols(9), vec![0, 0, 0, 1, -2, 1, -2, 1, -2]);
        let a = parse_itinerary("[1] | arith").unwrap();
        assert_eq!(a.symbols(5), vec![1, 1, 2, 3, 4]);
        let c = parse_itinerary("[1] 0^2 | arith [10]").unwrap();
        assert_eq!(c.symbols(6), vec![1, 0, 0, 10, 11, 12]);
        let p = parse_itinerary("0^1 [2] | period [3 0]").unwrap();
        assert_eq!(p.symbols(6), vec![0, 2, 3, 0, 3, 0]);
    }

    #[test]
    fn parse_errors_carry_positions() {
        assert!(matches!(parse_itinerary("0^2 [5]"), Err(ItineraryError::Parse { pos: 7, .. })));
        assert!(matches!(parse_itinerary("0^2 [5] | bogus"), Err(ItineraryError::Parse { pos: 10, .. })));
        assert!(parse_itinerary("[1] 0^3 | repeat").is_err());
        assert!(parse_itinerary("[1] | period [0 0]").is_err());
        assert!(parse_itinerary("[] | repeat").is_err());
        assert!(parse_itinerary("0^0 [1] | repeat").is_err());
        assert!(parse_itinerary("| repeat").is_err());
    }

    #[test]
    fn printer_round_trip() {
        for t in ["0^3 [1 -2] | repeat", "[1] | arith", "[4 5] 0^2 | arith [9]", "0^1 [2] | period [3 0]"] {
            let s = parse_itinerary(t).unwrap();
            assert_eq!(s.to_string(), t);
            assert_eq!(parse_itinerary(&s.to_string()).unwrap(), s);
        }
    }

    #[test]
    fn shifted_spec_prints_equivalently() {
        let s = parse_itinerary("0^2 [3 4] | repeat").unwrap();
        for n in 0..9 {
            let t = s.shift(n);
            let back = parse_itinerary(&t.to_string()).unwrap();
            assert_eq!(back.symbols(20), t.symbols(20), "n={n}: {t}");
        }
        let a = parse_itinerary("[7] | arith").unwrap().shift(5);
        assert_eq!(parse_itinerary(&a.to_string()).unwrap().symbols(4), vec![5, 6, 7, 8]);
    }

    #[test]
    fn shift_examples() {
        let s = parse_itinerary("[1 2 3] | repeat").unwrap();
        assert_eq!(s.shift(0), s);
        assert_eq!(s.shift(1).symbol_at(0), 2);
        assert_eq!(s.shift(2).shift(3), s.shift(5));
    }

    #[test]
    fn block_marker_examples() {
        let s = parse_itinerary("0^2 [3] 0^4 [1 -5] | repeat").unwrap();
        assert_eq!(s.block_markers(0).unwrap(), BlockMarkers { a: 2, d: 2, b: 3, e: 3 });
        assert_eq!(s.block_markers(1).unwrap(), BlockMarkers { a: 7, d: 8, b: 1, e: -5 });
        assert_eq!(s.block_markers(2).unwrap().a, 9);
        let a = parse_itinerary("0^2 [3] | arith").unwrap();
        assert_eq!(a.block_markers(1), Err(ItineraryError::Structure(1)));
    }

    #[test]
    fn growth_examples() {
        let id = parse_itinerary("[0] | arith").unwrap();
        assert!(classify_linear_growth(&id, 0, 1, 50).is_ok());
        assert_eq!(classify_linear_growth(&ItinerarySpec::constant(5), 4, 0, 10), Err(0));
        let alt = ItinerarySpec::periodic(vec![0, 1]);
        assert!(classify_linear_growth(&alt, 1, 0, 10).is_ok());
        // Violation beyond the horizon is still found.
        let late = parse_itinerary("0^30 [9] | repeat").unwrap();
        assert_eq!(classify_linear_growth(&late, 0, 0, 5), Err(30));
        assert_eq!(classify_linear_growth(&parse_itinerary("[0] | arith [3]").unwrap(), 1, 1, 4), Err(1));
    }

    #[test]
    fn exp_bounded_examples() {
        let (a, x) = exp_bounded_witness(&ItinerarySpec::constant(2), 20).unwrap();
        assert!(a >= WITNESS_A[0] && x > 0.0);
        assert!(exp_bounded_witness(&parse_itinerary("[1000000] | repeat").unwrap(), 10).is_none());
    }

    #[test]
    fn bounded_itineraries_are_never_fast() {
        let v = is_fast(&ItinerarySpec::constant(3), 2.5, 2.5, 0, 50);
        assert!(v.iter().all(|&x| x == FastVerdict::Fail));
    }

    #[test]
    fn fast_generator_first_insertion() {
        let f = build_fast_itinerary(ZeroLengths::Constant(1), 10_000);
        assert_eq!(f.insert_after, vec![5, 97]);
        assert_eq!(f.spec.blocks[0].kind, BlockKind::Zeros);
        assert!(classify_linear_growth(&f.spec, 0, 1, 10_000).is_ok());
    }
}
