//! The mollified-translation family `c_t`, `|t| < 1/4`.
//!
//! `c_t(x) = x + t·(1_{[|t|, 1−|t|]} ∗ φ_{|t|})(x)`: an exact translation by
//! `t` on the plateau `[2|t|, 1 − 2|t|]`, smoothly damped to the identity at
//! both endpoints. The path `t ↦ c_t` passes through the identity at `t = 0`
//! with velocity identically 1.

use crate::diffeo::{Diffeo, SmoothFn};
use crate::error::{Error, Result};
use crate::mollifier::{mollifier_integral, phi_scaled};

/// Absolute quadrature tolerance for the edge branches.
pub const EDGE_TOL: f64 = 1e-11;

/// Admissible family parameter, `−1/4 < t < 1/4`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FamilyParam(f64);

impl FamilyParam {
    pub fn new(t: f64) -> Result<Self> {
        if t.abs() < 0.25 {
            Ok(FamilyParam(t))
        } else {
            Err(Error::ParameterRange { t })
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for FamilyParam {
    type Error = Error;

    fn try_from(t: f64) -> Result<Self> {
        FamilyParam::new(t)
    }
}

fn check_x(x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain { x })
    }
}

/// `c_t(x)` by its piecewise closed form.
pub fn eval_c(t: FamilyParam, x: f64) -> Result<f64> {
    check_x(x)?;
    let t = t.get();
    if t == 0.0 {
        return Ok(x);
    }
    let a = t.abs();
    if x < 2.0 * a {
        Ok(x + t * mollifier_integral(a, a - x, a, EDGE_TOL)?)
    } else if x <= 1.0 - 2.0 * a {
        Ok(x + t)
    } else {
        Ok(x + t * mollifier_integral(a, -a, 1.0 - a - x, EDGE_TOL)?)
    }
}

/// `∂_x c_t(x) = 1 + t·[φ_{|t|}(x − |t|) − φ_{|t|}(x − 1 + |t|)]`.
pub fn c_deriv_x(t: FamilyParam, x: f64) -> Result<f64> {
    check_x(x)?;
    let t = t.get();
    if t == 0.0 {
        return Ok(1.0);
    }
    let a = t.abs();
    Ok(1.0 + t * (phi_scaled(a, x - a)? - phi_scaled(a, x - 1.0 + a)?))
}

/// `∂_t c_t(x)` at `t = 0`, which is 1 on the whole interval.
pub fn c_deriv_t_at_zero(x: f64) -> Result<f64> {
    check_x(x)?;
    Ok(1.0)
}

/// `min(x, 1 − x)/4`: below this `|t|`, `c_t(x) = x + t` exactly.
pub fn plateau_radius(x: f64) -> Result<f64> {
    check_x(x)?;
    Ok(x.min(1.0 - x) / 4.0)
}

/// `c_t` packaged as a [`Diffeo`] with its analytic derivative.
pub fn family_member(t: FamilyParam) -> Diffeo {
    let f = SmoothFn::try_new(format!("c_{}", t.get()), move |x| eval_c(t, x)).with_try_deriv(move |x| c_deriv_x(t, x));
    Diffeo::from_fn(f)
}

/// `c_t` for a raw parameter.
pub fn member(t: f64) -> Result<Diffeo> {
    Ok(family_member(FamilyParam::new(t)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffeo::{is_in_d, numerical_deriv, ProbeGrid};
    use crate::mollifier::constants;

    fn p(t: f64) -> FamilyParam {
        FamilyParam::new(t).unwrap()
    }

    #[test]
    fn parameter_range() {
        assert!(FamilyParam::new(0.25).is_err());
        assert!(FamilyParam::new(-0.25).is_err());
        assert!(FamilyParam::new(f64::NAN).is_err());
        assert!(FamilyParam::new(0.2499).is_ok());
        assert!(matches!(eval_c(p(0.1), 1.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn zero_parameter_is_identity() {
        for i in 1..100 {
            let x = i as f64 / 100.0;
            assert_eq!(eval_c(p(0.0), x).unwrap(), x);
            assert_eq!(c_deriv_x(p(0.0), x).unwrap(), 1.0);
        }
    }

    #[test]
    fn plateau_values() {
        assert_eq!(eval_c(p(0.1), 0.5).unwrap(), 0.6);
        assert_eq!(eval_c(p(0.02), 0.1).unwrap(), 0.1 + 0.02);
        assert_eq!(plateau_radius(0.5).unwrap(), 0.125);
        assert_eq!(plateau_radius(0.1).unwrap(), 0.025);
        for t in [0.05, 0.1, 0.2, -0.2] {
            assert_eq!(c_deriv_x(p(t), 0.5).unwrap(), 1.0);
        }
    }

    #[test]
    fn left_edge_value_lies_between_bounds() {
        let v = eval_c(p(0.1), 0.05).unwrap();
        assert!(v > 0.05 && v < 0.15);
        let direct = 0.05 + 0.1 * mollifier_integral(0.1, 0.05, 0.1, 1e-13).unwrap();
        assert!((v - direct).abs() < 1e-12);
    }

    #[test]
    fn seams_are_continuous() {
        for t in [0.01_f64, 0.1, -0.1, 0.2, -0.24] {
            let a = t.abs();
            for seam in [2.0 * a, 1.0 - 2.0 * a] {
                let below = eval_c(p(t), seam - 1e-12).unwrap();
                let above = eval_c(p(t), seam + 1e-12).unwrap();
                assert!((below - above).abs() < 10.0 * EDGE_TOL + 1e-11, "t={t} seam={seam}");
            }
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        for &(t, x) in &[(0.1, 0.05), (0.1, 0.93), (-0.15, 0.1), (-0.15, 0.8), (0.24, 0.3), (0.24, 0.6)] {
            let f = family_member(p(t));
            let fd = numerical_deriv(f.as_fn(), x, 1, 1e-5).unwrap();
            let an = c_deriv_x(p(t), x).unwrap();
            assert!((fd.value - an).abs() < 1e-6, "t={t} x={x} fd={} an={an}", fd.value);
        }
    }

    #[test]
    fn derivative_bounded_around_one() {
        let sup = constants().sup_phi;
        for t in [0.01, -0.05, 0.1, -0.2, 0.24] {
            for i in 0..10_000 {
                let x = (i as f64 + 0.5) / 10_000.0;
                let d = c_deriv_x(p(t), x).unwrap();
                assert!((d - 1.0).abs() <= sup + 1e-15);
                assert!(d > 0.0);
            }
        }
    }

    #[test]
    fn derivative_in_t_at_zero() {
        assert_eq!(c_deriv_t_at_zero(0.5).unwrap(), 1.0);
        assert_eq!(c_deriv_t_at_zero(0.001).unwrap(), 1.0);
        // Power-of-two step: x ± h are exact, so the difference is exact too.
        let x = 0.3;
        let h = (plateau_radius(x).unwrap() / 2.0).log2().floor().exp2();
        let fd = (eval_c(p(h), x).unwrap() - eval_c(p(-h), x).unwrap()) / (2.0 * h);
        assert_eq!(fd, 1.0);
    }

    #[test]
    fn members_are_diffeomorphisms() {
        for t in [0.0, 0.1, 0.2, -0.15] {
            let r = is_in_d(&family_member(p(t)), &ProbeGrid::default(), 1e-6).unwrap();
            assert!(r.in_d, "t = {t}: {r:?}");
        }
    }

    #[test]
    fn range_and_monotonicity() {
        for t in [0.24, -0.24, 0.003] {
            let mut prev = 0.0;
            for i in 0..10_000 {
                let x = (i as f64 + 0.5) / 10_000.0;
                let v = eval_c(p(t), x).unwrap();
                assert!(v > prev && v < 1.0);
                prev = v;
            }
        }
    }
}
