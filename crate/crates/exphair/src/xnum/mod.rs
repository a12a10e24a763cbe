//! Extended-magnitude numbers, the map `E_λ(z) = λe^z`, its inverse branches
//! and its repelling fixed points.

mod plane;
mod tower;
mod xreal;

use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

pub use plane::{complex_ln_1p, Cut, XPoint};
pub use tower::{f, f_inv, TowerReal, BAND_HI, BAND_LO};
pub use xreal::XReal;

/// A point of the plane.
pub type ComplexPoint = Complex64;

/// Largest real part fed to the machine exponential.
pub const OVERFLOW_RE: f64 = 700.0;
/// Distance from the negative real ray treated as lying on it.
pub const CUT_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumError {
    #[error("real part exceeds machine range; use tower arithmetic")]
    OverflowToTower,
    #[error("point lies on the branch cut")]
    BranchCut,
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("Newton iteration did not converge")]
    NoConvergence,
}

/// `λ e^z`.
pub fn exp_map(z: ComplexPoint, lambda: f64) -> Result<ComplexPoint, NumError> {
    if z.re > OVERFLOW_RE {
        return Err(NumError::OverflowToTower);
    }
    Ok(lambda * z.exp())
}

/// The branch `L_{λ,k}(z) = Log(z/λ) + 2πik`, valued in the strip of index `k`.
pub fn inverse_branch(z: ComplexPoint, k: i64, lambda: f64) -> Result<ComplexPoint, NumError> {
    if z == Complex64::new(0.0, 0.0) {
        return Err(NumError::Domain("inverse branch at zero"));
    }
    let w = z / lambda;
    let dist = if w.re <= 0.0 { w.im.abs() } else { w.norm() };
    if dist <= CUT_TOLERANCE {
        return Err(NumError::BranchCut);
    }
    Ok(Complex64::new(w.norm().ln(), w.im.atan2(w.re) + 2.0 * PI * k as f64))
}

/// `F^n(x)`.
pub fn f_iter(x: TowerReal, n: u32) -> TowerReal {
    x.f_iter(n)
}

/// Natural logarithm of a tower real.
pub fn tower_ln(x: TowerReal) -> Result<TowerReal, NumError> {
    x.ln()
}

/// Index `k` of the strip `R_k = {(2k-1)π < Im ≤ (2k+1)π}` containing `z`.
pub fn strip_index(z: ComplexPoint) -> i64 {
    ((z.im - PI) / (2.0 * PI)).ceil() as i64
}

/// The repelling fixed points in the strip `R_0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPointPair {
    pub q_plus: ComplexPoint,
    pub q_minus: ComplexPoint,
    pub multiplier_modulus: f64,
}

pub const FIXED_POINT_TOL: f64 = 1e-13;

/// Newton's method on `λe^z - z` from a seed in the upper half of `R_0`.
pub fn find_fixed_points(lambda: f64) -> Result<FixedPointPair, NumError> {
    if !(lambda > (-1f64).exp()) {
        return Err(NumError::Domain("lambda must exceed 1/e"));
    }
    let mut z = if lambda == 1.0 { Complex64::new(0.3, 1.3) } else { Complex64::new(lambda.ln(), 1.3) };
    for _ in 0..100 {
        let e = lambda * z.exp();
        let step = (e - z) / (e - 1.0);
        z -= step;
        if !z.is_finite() {
            return Err(NumError::NoConvergence);
        }
        if step.norm() < 1e-15 * z.norm().max(1.0) {
            break;
        }
    }
    let residual = (lambda * z.exp() - z).norm();
    if residual > FIXED_POINT_TOL || !(z.im > 0.0 && z.im < PI) {
        return Err(NumError::NoConvergence);
    }
    let multiplier_modulus = z.norm();
    if multiplier_modulus <= 1.0 {
        return Err(NumError::NoConvergence);
    }
    Ok(FixedPointPair { q_plus: z, q_minus: z.conj(), multiplier_modulus })
}
