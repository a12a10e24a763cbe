//! Signed reals whose magnitude may be tower-large or tower-small.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::tower::TowerReal;

const FIN_HI: f64 = 1e300;
const FIN_LO: f64 = 1e-300;
// ln(FIN_HI)
const LN_FIN_HI: f64 = 690.7755278982137;
// Relative contributions below e^-GAP are dropped in sums.
const GAP: f64 = 40.0;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Mag {
    Zero,
    /// Machine magnitude in `[FIN_LO, FIN_HI]`.
    Fin(f64),
    /// Magnitude `T` above `FIN_HI`.
    Huge(TowerReal),
    /// Magnitude `e^{-T}` below `FIN_LO`.
    Tiny(TowerReal),
}

/// Extended real number.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XReal {
    neg: bool,
    mag: Mag,
}

impl XReal {
    pub const ZERO: XReal = XReal { neg: false, mag: Mag::Zero };
    pub const ONE: XReal = XReal { neg: false, mag: Mag::Fin(1.0) };

    pub fn from_f64(v: f64) -> XReal {
        assert!(v.is_finite(), "XReal::from_f64 needs a finite value");
        let neg = v < 0.0;
        let a = v.abs();
        let mag = if a == 0.0 {
            Mag::Zero
        } else if a > FIN_HI {
            Mag::Huge(TowerReal::from_f64(a))
        } else if a < FIN_LO {
            Mag::Tiny(TowerReal::from_f64(-a.ln()))
        } else {
            Mag::Fin(a)
        };
        XReal { neg, mag }
    }

    /// Positive value represented by a tower.
    pub fn from_tower(t: TowerReal) -> XReal {
        match t.to_f64() {
            Some(v) if v <= FIN_HI => XReal::from_f64(v),
            _ => XReal { neg: false, mag: Mag::Huge(t) },
        }
    }

    /// The positive value `e^{-t}`.
    pub fn exp_neg_tower(t: TowerReal) -> XReal {
        match t.to_f64() {
            Some(v) if v <= LN_FIN_HI => XReal::from_f64((-v).exp()),
            _ => XReal { neg: false, mag: Mag::Tiny(t) },
        }
    }

    pub fn to_f64(&self) -> Option<f64> {
        let a = match self.mag {
            Mag::Zero => 0.0,
            Mag::Fin(m) => m,
            Mag::Huge(_) => return None,
            Mag::Tiny(_) => 0.0,
        };
        Some(if self.neg { -a } else { a })
    }

    /// Machine value with saturation to `±inf` and flush to zero.
    pub fn to_f64_sat(&self) -> f64 {
        match self.to_f64() {
            Some(v) => v,
            None if self.neg => f64::NEG_INFINITY,
            None => f64::INFINITY,
        }
    }

    /// Positive value as a tower, if it is at least `FIN_LO`.
    pub fn to_tower(&self) -> Option<TowerReal> {
        if self.neg {
            return None;
        }
        match self.mag {
            Mag::Fin(m) => Some(TowerReal::from_f64(m)),
            Mag::Huge(t) => Some(t),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mag == Mag::Zero
    }

    pub fn is_negative(&self) -> bool {
        self.neg && !self.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        !self.neg && !self.is_zero()
    }

    /// True when the magnitude is below the machine range.
    pub fn is_tiny(&self) -> bool {
        matches!(self.mag, Mag::Tiny(_))
    }

    pub fn is_huge(&self) -> bool {
        matches!(self.mag, Mag::Huge(_))
    }

    pub fn abs(&self) -> XReal {
        XReal { neg: false, mag: self.mag }
    }

    pub fn signum(&self) -> f64 {
        match (self.is_zero(), self.neg) {
            (true, _) => 0.0,
            (false, true) => -1.0,
            (false, false) => 1.0,
        }
    }

    /// `ln|x|`; `None` for zero.
    pub fn ln_abs(&self) -> Option<XReal> {
        match self.mag {
            Mag::Zero => None,
            Mag::Fin(m) => Some(XReal::from_f64(m.ln())),
            Mag::Huge(t) => Some(XReal::from_tower(t.ln().expect("huge magnitude is positive"))),
            Mag::Tiny(t) => Some(-XReal::from_tower(t)),
        }
    }

    /// Natural logarithm of a positive value.
    pub fn ln(&self) -> Option<XReal> {
        if self.is_positive() {
            self.ln_abs()
        } else {
            None
        }
    }

    pub fn exp(&self) -> XReal {
        match (self.mag, self.neg) {
            (Mag::Zero, _) | (Mag::Tiny(_), _) => XReal::ONE,
            (Mag::Fin(m), false) if m > LN_FIN_HI => XReal::from_tower(TowerReal::from_f64(m).exp()),
            (Mag::Fin(m), true) if m > LN_FIN_HI => XReal::exp_neg_tower(TowerReal::from_f64(m)),
            (Mag::Fin(m), neg) => XReal::from_f64(if neg { (-m).exp() } else { m.exp() }),
            (Mag::Huge(t), false) => XReal::from_tower(t.exp()),
            (Mag::Huge(t), true) => XReal::exp_neg_tower(t),
        }
    }

    fn from_sign_ln(neg: bool, ln_mag: XReal) -> XReal {
        let mut r = ln_mag.exp();
        r.neg = neg && !r.is_zero();
        r
    }

    fn add_mag(self, rhs: XReal) -> XReal {
        if let (Mag::Fin(_), Mag::Fin(_)) = (self.mag, rhs.mag) {
            return XReal::from_f64(self.to_f64().unwrap() + rhs.to_f64().unwrap());
        }
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (big, small) = if self.abs() >= rhs.abs() { (self, rhs) } else { (rhs, self) };
        // |big ± small| = |big| (1 ± |small|/|big|)
        let gap = big.ln_abs().unwrap() - small.ln_abs().unwrap();
        let g = gap.to_f64_sat();
        if g > GAP {
            return big;
        }
        let ratio = (-g).exp();
        let factor = if big.neg == small.neg { ratio.ln_1p() } else { (-ratio).ln_1p() };
        if factor == f64::NEG_INFINITY {
            return XReal::ZERO;
        }
        let ln_new = big.ln_abs().unwrap() + XReal::from_f64(factor);
        XReal::from_sign_ln(big.neg, ln_new)
    }

    pub fn min(self, other: XReal) -> XReal {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: XReal) -> XReal {
        if self >= other {
            self
        } else {
            other
        }
    }

    fn mag_cmp(&self, other: &XReal) -> Ordering {
        fn rank(m: &Mag) -> u8 {
            match m {
                Mag::Zero => 0,
                Mag::Tiny(_) => 1,
                Mag::Fin(_) => 2,
                Mag::Huge(_) => 3,
            }
        }
        match (self.mag, other.mag) {
            (Mag::Fin(a), Mag::Fin(b)) => a.total_cmp(&b),
            (Mag::Huge(a), Mag::Huge(b)) => a.partial_cmp(&b).unwrap(),
            (Mag::Tiny(a), Mag::Tiny(b)) => b.partial_cmp(&a).unwrap(),
            (a, b) => rank(&a).cmp(&rank(&b)),
        }
    }

    /// Text form: a plain decimal, or `F^L(r)` for huge and `exp(-F^L(r))` for tiny magnitudes.
    pub fn literal(&self) -> String {
        let sign = if self.is_negative() { "-" } else { "" };
        match self.mag {
            Mag::Zero => "0".to_string(),
            Mag::Fin(m) => format!("{sign}{m:e}"),
            Mag::Huge(t) => format!("{sign}{}", t.literal()),
            Mag::Tiny(t) => format!("{sign}exp(-{})", t.literal()),
        }
    }

    pub fn parse_literal(text: &str) -> Option<XReal> {
        let t = text.trim();
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t),
        };
        let v = if let Some(inner) = body.strip_prefix("exp(-").and_then(|r| r.strip_suffix(')')) {
            XReal::exp_neg_tower(TowerReal::parse_literal(inner)?)
        } else if body.starts_with("F^") {
            XReal::from_tower(TowerReal::parse_literal(body)?)
        } else {
            XReal::from_f64(body.parse::<f64>().ok().filter(|v| v.is_finite())?)
        };
        Some(if neg { -v } else { v })
    }
}

impl From<f64> for XReal {
    fn from(v: f64) -> XReal {
        XReal::from_f64(v)
    }
}

impl From<TowerReal> for XReal {
    fn from(t: TowerReal) -> XReal {
        if t.is_positive() {
            XReal::from_tower(t)
        } else {
            XReal::from_f64(t.residual())
        }
    }
}

impl Neg for XReal {
    type Output = XReal;
    fn neg(self) -> XReal {
        if self.is_zero() {
            self
        } else {
            XReal { neg: !self.neg, mag: self.mag }
        }
    }
}

impl Add for XReal {
    type Output = XReal;
    fn add(self, rhs: XReal) -> XReal {
        self.add_mag(rhs)
    }
}

impl Sub for XReal {
    type Output = XReal;
    fn sub(self, rhs: XReal) -> XReal {
        self.add_mag(-rhs)
    }
}

impl Mul for XReal {
    type Output = XReal;
    fn mul(self, rhs: XReal) -> XReal {
        if self.is_zero() || rhs.is_zero() {
            return XReal::ZERO;
        }
        let neg = self.neg != rhs.neg;
        if let (Mag::Fin(a), Mag::Fin(b)) = (self.mag, rhs.mag) {
            let p = a * b;
            if p.is_finite() && p > 0.0 {
                let r = XReal::from_f64(p);
                return if neg { -r } else { r };
            }
        }
        XReal::from_sign_ln(neg, self.ln_abs().unwrap() + rhs.ln_abs().unwrap())
    }
}

impl Div for XReal {
    type Output = XReal;
    fn div(self, rhs: XReal) -> XReal {
        assert!(!rhs.is_zero(), "XReal division by zero");
        if self.is_zero() {
            return XReal::ZERO;
        }
        let neg = self.neg != rhs.neg;
        if let (Mag::Fin(a), Mag::Fin(b)) = (self.mag, rhs.mag) {
            let q = a / b;
            if q.is_finite() && q > 0.0 {
                let r = XReal::from_f64(q);
                return if neg { -r } else { r };
            }
        }
        XReal::from_sign_ln(neg, self.ln_abs().unwrap() - rhs.ln_abs().unwrap())
    }
}

impl PartialOrd for XReal {
    fn partial_cmp(&self, other: &XReal) -> Option<Ordering> {
        let sa = self.signum();
        let sb = other.signum();
        if sa != sb {
            return sa.partial_cmp(&sb);
        }
        let m = self.mag_cmp(other);
        Some(if sa < 0.0 { m.reverse() } else { m })
    }
}

impl fmt::Display for XReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mag {
            Mag::Fin(_) | Mag::Zero => write!(f, "{}", self.to_f64().unwrap()),
            _ => f.write_str(&self.literal()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn machine_range_arithmetic_is_plain() {
        let a = XReal::from(3.5);
        let b = XReal::from(-1.25);
        assert_eq!((a + b).to_f64(), Some(2.25));
        assert_eq!((a * b).to_f64(), Some(-4.375));
        assert_eq!((a / b).to_f64(), Some(-2.8));
    }

    #[test]
    fn exp_ln_round_trip_through_towers() {
        for v in [800.0, 1e5, 3e200] {
            let x = XReal::from(v);
            let e = x.exp();
            assert!(e.is_huge());
            let back = e.ln().unwrap().to_f64().unwrap();
            assert!((back - v).abs() <= 1e-12 * v, "{v} -> {back}");
            let t = (-x).exp();
            assert!(t.is_tiny());
            let back = t.ln().unwrap().to_f64().unwrap();
            assert!((back + v).abs() <= 1e-12 * v);
        }
    }

    #[test]
    fn ordering_across_kinds() {
        let tiny = XReal::from(-800.0).exp();
        let huge = XReal::from(800.0).exp();
        let vals = [-huge, XReal::from(-2.0), -tiny, XReal::ZERO, tiny, XReal::from(1.0), huge];
        for w in vals.windows(2) {
            assert!(w[0] < w[1], "{} < {}", w[0], w[1]);
        }
    }

    #[test]
    fn tiny_products_add_exponents() {
        let a = XReal::from(-800.0).exp();
        let b = XReal::from(-900.0).exp();
        let p = (a * b).ln().unwrap().to_f64().unwrap();
        assert!((p + 1700.0).abs() < 1e-9);
    }

    #[test]
    fn sum_drops_negligible_terms_and_cancels() {
        let huge = XReal::from(800.0).exp();
        assert_eq!(huge + XReal::from(1.0), huge);
        assert!((huge - huge).is_zero());
        let h2 = huge + huge;
        let l = h2.ln().unwrap().to_f64().unwrap();
        assert!((l - (800.0 + 2f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn literal_round_trip() {
        for x in [XReal::from(-3.25), XReal::from(1e5).exp(), -XReal::from(-1e5).exp(), XReal::ZERO] {
            assert_eq!(XReal::parse_literal(&x.literal()), Some(x));
        }
    }
}
