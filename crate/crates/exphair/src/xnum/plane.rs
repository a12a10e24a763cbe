//! Complex points with extended components.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI};

use super::xreal::XReal;
use super::NumError;

/// How the negative real axis is treated by the logarithm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cut {
    /// The ray is excluded; points on it are an error.
    Open,
    /// Points on the ray take argument `+π`.
    Above,
    /// Points on the ray take argument `-π`.
    Below,
}

/// Complex number with [`XReal`] components.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XPoint {
    pub re: XReal,
    pub im: XReal,
}

impl XPoint {
    pub fn new(re: XReal, im: XReal) -> XPoint {
        XPoint { re, im }
    }

    pub fn to_complex(&self) -> Option<Complex64> {
        Some(Complex64::new(self.re.to_f64()?, self.im.to_f64()?))
    }

    pub fn add(&self, o: &XPoint) -> XPoint {
        XPoint::new(self.re + o.re, self.im + o.im)
    }

    pub fn sub(&self, o: &XPoint) -> XPoint {
        XPoint::new(self.re - o.re, self.im - o.im)
    }

    pub fn mul(&self, o: &XPoint) -> XPoint {
        XPoint::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }

    pub fn scale(&self, k: XReal) -> XPoint {
        XPoint::new(self.re * k, self.im * k)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    /// `ln|z|`.
    pub fn ln_abs(&self) -> Option<XReal> {
        let (a, b) = (self.re.abs(), self.im.abs());
        let (big, small) = if a >= b { (a, b) } else { (b, a) };
        let lb = big.ln()?;
        if small.is_zero() {
            return Some(lb);
        }
        let r = (small / big).to_f64().unwrap_or(0.0);
        Some(lb + XReal::from(0.5 * (r * r).ln_1p()))
    }

    /// Principal argument in `(-π, π]`, with the ray `x < 0, y = 0` handled by `cut`.
    pub fn arg(&self, cut: Cut) -> Result<XReal, NumError> {
        let (x, y) = (self.re, self.im);
        if self.is_zero() {
            return Err(NumError::Domain("argument of zero"));
        }
        if y.is_zero() {
            if x.is_positive() {
                return Ok(XReal::ZERO);
            }
            return match cut {
                Cut::Open => Err(NumError::BranchCut),
                Cut::Above => Ok(XReal::from(PI)),
                Cut::Below => Ok(XReal::from(-PI)),
            };
        }
        if x.is_zero() {
            return Ok(XReal::from(FRAC_PI_2 * y.signum()));
        }
        if y.abs() <= x.abs() {
            let t = y / x;
            let base = small_atan(t);
            if x.is_positive() {
                Ok(base)
            } else {
                Ok(base + XReal::from(PI * y.signum()))
            }
        } else {
            let t = x / y;
            Ok(XReal::from(FRAC_PI_2 * y.signum()) - small_atan(t))
        }
    }

    /// `ln(z / λ) + 2πik` on the principal branch.
    pub fn log_branch(&self, k: i64, lambda: f64, cut: Cut) -> Result<XPoint, NumError> {
        let la = self.ln_abs().ok_or(NumError::Domain("logarithm of zero"))?;
        let arg = self.arg(cut)?;
        Ok(XPoint::new(la - XReal::from(lambda.ln()), arg + XReal::from(2.0 * PI * k as f64)))
    }

    /// `λ e^z`; the imaginary part must be machine-sized.
    pub fn exp_map(&self, lambda: f64) -> Result<XPoint, NumError> {
        let modulus = (self.re + XReal::from(lambda.ln())).exp();
        if self.im.is_tiny() || self.im.is_zero() {
            return Ok(XPoint::new(modulus, modulus * self.im));
        }
        let y = self.im.to_f64().ok_or(NumError::OverflowToTower)?;
        Ok(XPoint::new(modulus * XReal::from(y.cos()), modulus * XReal::from(y.sin())))
    }

    /// `ln(1 + v)` for small `v`.
    pub fn ln_1p(&self) -> XPoint {
        let size = self.re.abs().max(self.im.abs());
        if size < XReal::from(1e-8) {
            let sq = self.mul(self).scale(XReal::from(0.5));
            return self.sub(&sq);
        }
        // The real part only needs machine precision; the argument goes through
        // the extended path so a tiny imaginary part is not flushed to zero.
        let v = self.to_complex().expect("ln_1p argument is machine-sized");
        let re = complex_ln_1p(v).re;
        let one = XPoint::new(XReal::ONE + self.re, self.im);
        let im = one.arg(Cut::Above).expect("1 + v is non-zero");
        XPoint::new(XReal::from(re), im)
    }
}

impl From<Complex64> for XPoint {
    fn from(c: Complex64) -> XPoint {
        XPoint::new(XReal::from(c.re), XReal::from(c.im))
    }
}

fn small_atan(t: XReal) -> XReal {
    if t.abs() < XReal::from(1e-8) {
        t
    } else {
        XReal::from(t.to_f64().expect("ratio bounded by one").atan())
    }
}

/// `ln(1 + v)` without cancellation for small `v`.
pub fn complex_ln_1p(v: Complex64) -> Complex64 {
    let re = 0.5 * (v.re * (2.0 + v.re) + v.im * v.im).ln_1p();
    let im = v.im.atan2(1.0 + v.re);
    Complex64::new(re, im)
}
