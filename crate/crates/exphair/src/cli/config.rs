//! Run configuration: flat `key=value` files merged with command-line flags.

use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::hair::{DEPTH_TOL, MAX_DEPTH};
use crate::target::DEFAULT_ZETA;

#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances {
    /// Largest accepted pullback error per hair sample.
    pub depth_tol: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DepthCaps {
    /// Largest pullback depth accepted per hair sample.
    pub max_depth: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub lambda: f64,
    pub zeta: f64,
    pub m: u64,
    pub p: u64,
    pub tolerances: Tolerances,
    pub caps: DepthCaps,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            lambda: 1.0,
            zeta: DEFAULT_ZETA,
            m: 2,
            p: 1,
            tolerances: Tolerances { depth_tol: DEPTH_TOL },
            caps: DepthCaps { max_depth: MAX_DEPTH },
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.lambda > (-1f64).exp()) || !self.lambda.is_finite() {
            return Err(format!("lambda must exceed 1/e, got {}", self.lambda));
        }
        if !(self.zeta > 0.0) || !self.zeta.is_finite() {
            return Err(format!("zeta must be positive, got {}", self.zeta));
        }
        if !(self.tolerances.depth_tol > 0.0) {
            return Err("depth_tol must be positive".into());
        }
        if self.caps.max_depth == 0 || self.caps.max_depth > MAX_DEPTH {
            return Err(format!("max_depth must be in 1..={MAX_DEPTH}"));
        }
        Ok(())
    }

    /// Applies `key=value` pairs; unknown keys are an error.
    pub fn apply(&mut self, pairs: &BTreeMap<String, String>) -> Result<(), String> {
        for (k, v) in pairs {
            let bad = || format!("bad value for {k}: {v:?}");
            match k.as_str() {
                "lambda" => self.lambda = v.parse().map_err(|_| bad())?,
                "zeta" => self.zeta = v.parse().map_err(|_| bad())?,
                "M" | "m" => self.m = v.parse().map_err(|_| bad())?,
                "p" => self.p = v.parse().map_err(|_| bad())?,
                "seed" => self.seed = v.parse().map_err(|_| bad())?,
                "depth_tol" => self.tolerances.depth_tol = v.parse().map_err(|_| bad())?,
                "max_depth" => self.caps.max_depth = v.parse().map_err(|_| bad())?,
                _ => return Err(format!("unknown config key {k:?}")),
            }
        }
        Ok(())
    }

    /// Canonical text used for the digest.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "lambda={:e}", self.lambda);
        let _ = writeln!(s, "zeta={:e}", self.zeta);
        let _ = writeln!(s, "M={}", self.m);
        let _ = writeln!(s, "p={}", self.p);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "depth_tol={:e}", self.tolerances.depth_tol);
        let _ = writeln!(s, "max_depth={}", self.caps.max_depth);
        s
    }

    /// SHA-256 of the canonical configuration and the command line, in hex.
    pub fn digest(&self, command: &str) -> String {
        let mut h = Sha256::new();
        h.update(self.canonical().as_bytes());
        h.update(command.as_bytes());
        h.finalize().iter().fold(String::with_capacity(64), |mut acc, b| {
            let _ = write!(acc, "{b:02x}");
            acc
        })
    }
}

/// Parses a flat `key=value` file; `#` starts a comment line.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key=value", i + 1))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(format!("line {}: empty key", i + 1));
        }
        if out.insert(k.to_string(), v.trim().to_string()).is_some() {
            return Err(format!("line {}: duplicate key {k}", i + 1));
        }
    }
    Ok(out)
}
