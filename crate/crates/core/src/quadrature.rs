//! Adaptive one-dimensional quadrature.
//!
//! Two independent rules are provided: a globally adaptive Gauss–Kronrod
//! (7/15 point) scheme, used everywhere in the crate, and a locally adaptive
//! Simpson scheme with Richardson correction, used to cross-check constants.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Maximum number of panels held by the Gauss–Kronrod scheme.
pub const MAX_PANELS: usize = 4000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Sum of the per-panel error estimates.
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Panel { a, b, value: kronrod * half, error: ((kronrod - gauss) * half).abs() }
}

/// Integrates `f` over `[a, b]` to absolute accuracy `tol` by bisecting the
/// panel with the largest Gauss–Kronrod error estimate.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Quadrature> {
    if !(a <= b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidRange { a, b });
    }
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("quadrature tolerance must be > 0, got {tol}")));
    }
    if a == b {
        return Ok(Quadrature { value: 0.0, error: 0.0, evaluations: 0 });
    }

    let first = gk15(&f, a, b);
    let mut evaluations = 15;
    let mut value = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);

    while !(error <= tol) {
        if heap.len() >= MAX_PANELS {
            return Err(Error::Convergence { estimate: value, residual: error });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel can no longer be split in floating point.
            return Err(Error::Convergence { estimate: value, residual: error });
        }
        let left = gk15(&f, worst.a, mid);
        let right = gk15(&f, mid, worst.b);
        evaluations += 30;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    // Re-sum to shed the drift of the running updates.
    let value = heap.iter().map(|p| p.value).sum();
    let error = heap.iter().map(|p| p.error).sum();
    Ok(Quadrature { value, error, evaluations })
}

/// Locally adaptive Simpson rule with the Richardson (Lyness) correction.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Quadrature> {
    if !(a <= b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidRange { a, b });
    }
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("quadrature tolerance must be > 0, got {tol}")));
    }
    if a == b {
        return Ok(Quadrature { value: 0.0, error: 0.0, evaluations: 0 });
    }

    struct State<'f, F> {
        f: &'f F,
        evaluations: usize,
        error: f64,
        failed: bool,
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        st: &mut State<'_, F>,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = (st.f)(lm);
        let frm = (st.f)(rm);
        st.evaluations += 2;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            if depth == 0 && delta.abs() > 15.0 * tol {
                st.failed = true;
            }
            st.error += delta.abs() / 15.0;
            return left + right + delta / 15.0;
        }
        recurse(st, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(st, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }

    let fa = f(a);
    let fb = f(b);
    let mut st = State { f: &f, evaluations: 2, error: 0.0, failed: false };
    // Seed with a uniform split so that a flat-looking first sample cannot
    // terminate the recursion early.
    let pieces = 16;
    let width = (b - a) / pieces as f64;
    let mut value = 0.0;
    for i in 0..pieces {
        let lo = a + width * i as f64;
        let hi = if i + 1 == pieces { b } else { lo + width };
        let flo = if i == 0 { fa } else { f(lo) };
        let fhi = if i + 1 == pieces { fb } else { f(hi) };
        let fmid = f(0.5 * (lo + hi));
        st.evaluations += 2;
        let s = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
        value += recurse(&mut st, lo, hi, flo, fmid, fhi, s, tol / pieces as f64, 48);
    }
    if st.failed {
        return Err(Error::Convergence { estimate: value, residual: st.error });
    }
    Ok(Quadrature { value, error: st.error, evaluations: st.evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let q = gauss_kronrod(|x| x.powi(5) - 3.0 * x * x + 1.0, -1.0, 2.0, 1e-12).unwrap();
        // 64/6 - 1/6 - (8 + 1) + 3
        let exact = (64.0 - 1.0) / 6.0 - 9.0 + 3.0;
        assert!((q.value - exact).abs() < 1e-13);
    }

    #[test]
    fn both_rules_agree_on_exponential() {
        let exact = 1.0_f64.exp() - 1.0;
        let gk = gauss_kronrod(f64::exp, 0.0, 1.0, 1e-12).unwrap();
        let si = adaptive_simpson(f64::exp, 0.0, 1.0, 1e-12).unwrap();
        assert!((gk.value - exact).abs() < 1e-13);
        assert!((si.value - exact).abs() < 1e-11);
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(gauss_kronrod(f64::exp, 0.5, 0.5, 1e-10).unwrap().value, 0.0);
    }

    #[test]
    fn reversed_interval_is_rejected() {
        assert!(matches!(gauss_kronrod(f64::exp, 1.0, 0.0, 1e-10), Err(Error::InvalidRange { .. })));
    }

    #[test]
    fn kink_needs_subdivision() {
        let q = gauss_kronrod(|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-10).unwrap();
        assert!((q.value - (0.045 + 0.245)).abs() < 1e-10);
        assert!(q.evaluations > 15);
    }

    #[test]
    fn nonconvergence_reports_best_estimate() {
        let err = gauss_kronrod(|x: f64| 1.0 / x, 0.0, 1.0, 1e-8).unwrap_err();
        assert!(matches!(err, Error::Convergence { .. }));
    }
}
