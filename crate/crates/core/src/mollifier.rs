//! The standard mollifier `φ(u) = exp(1/(u² − 1)) / K` on `]−1, 1[`, its
//! scaled versions `φ_α(u) = φ(u/α)/α`, and partial integrals of `φ_α`.
//!
//! The normalization `K` is computed once, to [`DEFAULT_TOL`], and cached for
//! the life of the process.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::quadrature;

/// Absolute tolerance used to compute the cached normalization.
pub const DEFAULT_TOL: f64 = 1e-12;

/// `exp` of anything below this is zero in double precision.
const EXP_UNDERFLOW: f64 = -745.2;

/// Normalization of the mollifier and bounds derived from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifierConstants {
    /// `∫_{−1}^{1} exp(1/(u² − 1)) du`.
    pub k: f64,
    /// `max φ = φ(0) = e^{−1}/K`.
    pub sup_phi: f64,
    pub quadrature_tol: f64,
}

impl MollifierConstants {
    /// `1/(0.4 e)`, the closed-form upper bound on `sup φ`.
    pub fn sup_bound() -> f64 {
        1.0 / (0.4 * std::f64::consts::E)
    }
}

static CONSTANTS: OnceLock<MollifierConstants> = OnceLock::new();

/// The cached constants; computed on first use.
pub fn constants() -> &'static MollifierConstants {
    CONSTANTS.get_or_init(|| {
        let k = compute_k(DEFAULT_TOL).expect("normalization quadrature converges");
        MollifierConstants { k, sup_phi: (-1.0_f64).exp() / k, quadrature_tol: DEFAULT_TOL }
    })
}

/// Unnormalized bump `exp(1/(u² − 1))`, zero off `]−1, 1[`.
pub fn bump(u: f64) -> f64 {
    if !(u.abs() < 1.0) {
        return 0.0;
    }
    let exponent = 1.0 / (u * u - 1.0);
    if exponent < EXP_UNDERFLOW {
        0.0
    } else {
        exponent.exp()
    }
}

/// The normalized mollifier. Total on the reals, never negative.
pub fn phi(u: f64) -> f64 {
    bump(u) / constants().k
}

/// `φ_α(u) = φ(u/α)/α`, supported in `[−α, α]`.
pub fn phi_scaled(alpha: f64, u: f64) -> Result<f64> {
    check_scale(alpha)?;
    Ok(phi(u / alpha) / alpha)
}

fn check_scale(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidScale { alpha })
    }
}

/// `K = ∫_{−1}^{1} exp(1/(u² − 1)) du` by adaptive Gauss–Kronrod quadrature.
///
/// The integrand is flat to all orders at `±1`, so no endpoint treatment is
/// needed.
pub fn compute_k(tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be > 0, got {tol}")));
    }
    Ok(quadrature::gauss_kronrod(bump, -1.0, 1.0, tol)?.value)
}

/// `K` by the adaptive Simpson rule; an independent route to [`compute_k`].
pub fn compute_k_simpson(tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be > 0, got {tol}")));
    }
    Ok(quadrature::adaptive_simpson(bump, -1.0, 1.0, tol)?.value)
}

/// `∫_a^b φ_α(u) du`, a value in `[0, 1]`.
///
/// Intervals covering the whole support return exactly 1 and intervals
/// missing it return exactly 0; otherwise the integral of `φ_α` over the
/// clipped interval is computed to absolute accuracy `tol`.
pub fn mollifier_integral(alpha: f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    check_scale(alpha)?;
    if !(a <= b) {
        return Err(Error::InvalidRange { a, b });
    }
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be > 0, got {tol}")));
    }
    let lo = a.max(-alpha);
    let hi = b.min(alpha);
    if lo >= hi {
        return Ok(0.0);
    }
    if lo == -alpha && hi == alpha {
        return Ok(1.0);
    }
    let q = quadrature::gauss_kronrod(|u| phi(u / alpha) / alpha, lo, hi, tol)?;
    Ok(q.value.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_vanishes_off_support() {
        assert_eq!(phi(1.5), 0.0);
        assert_eq!(phi(-1.0), 0.0);
        assert_eq!(phi(1.0), 0.0);
        assert_eq!(phi(f64::NAN), 0.0);
        assert_eq!(phi(f64::INFINITY), 0.0);
    }

    #[test]
    fn phi_near_boundary_underflows_to_zero() {
        for u in [1.0 - 1e-3, 1.0 - 1e-9, 1.0 - f64::EPSILON, -1.0 + f64::EPSILON] {
            let v = phi(u);
            assert!(v.is_finite() && v >= 0.0);
        }
        assert_eq!(phi(1.0 - 1e-9), 0.0);
    }

    #[test]
    fn phi_at_zero_is_sup() {
        let c = constants();
        assert_eq!(phi(0.0), c.sup_phi);
        // e^{-1}/K with K from an mpmath reference: 0.44399381616807943782
        assert!((c.sup_phi - 0.828_568_839_869_105).abs() < 1e-12);
    }

    #[test]
    fn phi_is_even() {
        for i in 0..2000 {
            let u = -1.0 + (i as f64 + 0.5) / 1000.0;
            assert_eq!(phi(u), phi(-u));
        }
    }

    #[test]
    fn phi_bounded_by_sup() {
        let c = constants();
        for i in 0..20_000 {
            let u = -1.0 + (i as f64 + 0.5) / 10_000.0;
            let v = phi(u);
            assert!((0.0..=c.sup_phi).contains(&v));
        }
    }

    #[test]
    fn k_matches_reference_and_rules_agree() {
        let gk = compute_k(1e-10).unwrap();
        let si = compute_k_simpson(1e-10).unwrap();
        assert!((gk - 0.443_993_816_168_079_4).abs() < 1e-10);
        assert!((gk - si).abs() < 2e-10);
        assert!(gk > 0.4);
    }

    #[test]
    fn normalization_integrates_to_one() {
        let c = constants();
        let q = quadrature::gauss_kronrod(phi, -1.0, 1.0, c.quadrature_tol).unwrap();
        assert!((q.value - 1.0).abs() <= 10.0 * c.quadrature_tol);
    }

    #[test]
    fn sup_below_closed_form_bound() {
        assert!(constants().sup_phi < MollifierConstants::sup_bound());
        assert!(MollifierConstants::sup_bound() < 1.0);
    }

    #[test]
    fn scaled_mollifier() {
        assert_eq!(phi_scaled(0.1, 0.2).unwrap(), 0.0);
        for i in 0..100 {
            let u = -1.2 + 0.024 * i as f64;
            assert_eq!(phi_scaled(1.0, u).unwrap(), phi(u));
        }
        let q = quadrature::gauss_kronrod(|u| phi_scaled(0.1, u).unwrap(), -0.1, 0.1, 1e-12).unwrap();
        assert!((q.value - 1.0).abs() < 1e-11);
        assert!(matches!(phi_scaled(0.0, 0.1), Err(Error::InvalidScale { .. })));
        assert!(matches!(phi_scaled(-1.0, 0.1), Err(Error::InvalidScale { .. })));
    }

    #[test]
    fn integral_examples() {
        assert_eq!(mollifier_integral(0.1, -0.1, 0.1, 1e-10).unwrap(), 1.0);
        assert_eq!(mollifier_integral(0.1, 0.1, 0.5, 1e-10).unwrap(), 0.0);
        assert!((mollifier_integral(0.1, 0.0, 0.1, 1e-10).unwrap() - 0.5).abs() < 1e-10);
        assert!(matches!(mollifier_integral(0.1, 0.2, 0.1, 1e-10), Err(Error::InvalidRange { .. })));
    }
}
