//! Tower reals: values of the form `F^level(residual)` with `F(t) = e^t - 1`.

use std::cmp::Ordering;
use std::fmt;

use super::NumError;

/// Lower edge of the residual band used when `level > 0`.
pub const BAND_LO: f64 = 1.0;
/// Upper edge (exclusive) of the residual band: `F(1)`.
pub const BAND_HI: f64 = std::f64::consts::E - 1.0;

/// The model map `F(t) = e^t - 1`.
#[inline]
pub fn f(t: f64) -> f64 {
    t.exp_m1()
}

/// Inverse of the model map, `ln(1 + t)`.
#[inline]
pub fn f_inv(t: f64) -> f64 {
    t.ln_1p()
}

/// A real number stored as `F^level(residual)`.
///
/// Canonical form: `level == 0` holds every value below `F(1)`; for
/// `level > 0` the residual lies in `[1, F(1))`. Since that band is a
/// fundamental domain of `F`, the derived ordering on `(level, residual)`
/// matches the ordering of represented values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TowerReal {
    level: u32,
    residual: f64,
}

impl TowerReal {
    pub const ZERO: TowerReal = TowerReal { level: 0, residual: 0.0 };

    /// Builds `F^level(residual)` and normalizes it.
    pub fn new(level: u32, residual: f64) -> TowerReal {
        assert!(residual.is_finite(), "tower residual must be finite");
        let mut t = TowerReal { level, residual };
        t.normalize();
        t
    }

    pub fn from_f64(x: f64) -> TowerReal {
        TowerReal::new(0, x)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    fn normalize(&mut self) {
        while self.level > 0 && self.residual < BAND_LO {
            self.residual = f(self.residual);
            self.level -= 1;
        }
        while self.residual >= BAND_HI {
            // Rounding in ln_1p may land just below the band; clamp instead of
            // bouncing between adjacent levels.
            self.residual = f_inv(self.residual).max(BAND_LO);
            self.level += 1;
        }
    }

    /// Machine value, or `None` when it does not fit in an `f64`.
    pub fn to_f64(&self) -> Option<f64> {
        let mut v = self.residual;
        for _ in 0..self.level {
            if v > 709.7 {
                return None;
            }
            v = f(v);
        }
        if v.is_finite() {
            Some(v)
        } else {
            None
        }
    }

    /// Machine value, saturating to `+inf`.
    pub fn to_f64_sat(&self) -> f64 {
        self.to_f64().unwrap_or(f64::INFINITY)
    }

    pub fn is_positive(&self) -> bool {
        self.level > 0 || self.residual > 0.0
    }

    /// One application of `F`.
    pub fn f(&self) -> TowerReal {
        if self.level > 0 {
            TowerReal { level: self.level + 1, residual: self.residual }
        } else {
            TowerReal::new(0, f(self.residual))
        }
    }

    /// One application of `F^{-1}`; requires a value above `-1`.
    pub fn f_inv(&self) -> TowerReal {
        if self.level > 0 {
            TowerReal::new(self.level - 1, self.residual)
        } else {
            TowerReal::new(0, f_inv(self.residual))
        }
    }

    /// Iterate `F` `n` times.
    pub fn f_iter(&self, n: u32) -> TowerReal {
        let mut t = *self;
        for i in 0..n {
            if t.level > 0 {
                return TowerReal { level: t.level + (n - i), residual: t.residual };
            }
            t = t.f();
        }
        t
    }

    /// Natural logarithm; errors when the value is not positive.
    pub fn ln(&self) -> Result<TowerReal, NumError> {
        if !self.is_positive() {
            return Err(NumError::Domain("logarithm of a non-positive tower real"));
        }
        if let Some(v) = self.to_f64() {
            if v < 1e300 {
                return Ok(TowerReal::from_f64(v.ln()));
            }
        }
        // ln(F^L(r)) = F^{L-1}(r) + ln(1 - e^{-F^{L-1}(r)})
        let inner = TowerReal::new(self.level - 1, self.residual);
        let corr = match inner.to_f64() {
            Some(v) => (-(-v).exp()).ln_1p(),
            None => 0.0,
        };
        Ok(inner.add_small(corr))
    }

    /// `e^x` for this value `x`; equals `F(x) + 1`.
    pub fn exp(&self) -> TowerReal {
        self.f().add_small(1.0)
    }

    /// Adds a machine-range constant `c` (value stays above `-1`).
    pub fn add_small(&self, c: f64) -> TowerReal {
        if c == 0.0 {
            return *self;
        }
        if let Some(v) = self.to_f64() {
            if v.abs() < 1e300 {
                return TowerReal::from_f64(v + c);
            }
        }
        // x = F(y) with y = F^{-1}(x); x + c = F(y + ln(1 + c e^{-y})) exactly.
        let y = TowerReal::new(self.level - 1, self.residual);
        let dy = match y.to_f64() {
            Some(yv) => (c * (-yv).exp()).ln_1p(),
            None => 0.0,
        };
        if dy == 0.0 {
            return *self;
        }
        y.add_small(dy).f()
    }

    /// Formats as the literal `F^L(r)`.
    pub fn literal(&self) -> String {
        format!("F^{}({:.17e})", self.level, self.residual)
    }

    /// Parses the literal produced by [`TowerReal::literal`].
    pub fn parse_literal(text: &str) -> Option<TowerReal> {
        let t = text.trim();
        let rest = t.strip_prefix("F^")?;
        let open = rest.find('(')?;
        let level: u32 = rest[..open].parse().ok()?;
        let inner = rest[open + 1..].strip_suffix(')')?;
        let residual: f64 = inner.parse().ok()?;
        residual.is_finite().then(|| TowerReal::new(level, residual))
    }
}

impl PartialOrd for TowerReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.level.cmp(&other.level).then(self.residual.total_cmp(&other.residual)))
    }
}

impl fmt::Display for TowerReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_f64() {
            Some(v) if self.level <= 3 => write!(f, "{v}"),
            _ => write!(f, "{}", self.literal()),
        }
    }
}
