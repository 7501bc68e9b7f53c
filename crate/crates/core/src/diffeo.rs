//! Smooth functions on the open unit interval and candidate diffeomorphisms.
//!
//! A function is an evaluation handle with an optional analytic first
//! derivative; sampling happens per query on explicit grids. Membership in
//! `A` (boundary limits 0 and 1) and `D` (additionally `inf f' > 0`) is
//! decided on a fixed probe protocol, since limits at open endpoints cannot
//! be computed.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type MapFn = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// A smooth real function on `]0, 1[`.
#[derive(Clone)]
pub struct SmoothFn {
    map: MapFn,
    deriv: Option<MapFn>,
    label: String,
}

impl fmt::Debug for SmoothFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothFn").field("label", &self.label).field("analytic_deriv", &self.deriv.is_some()).finish()
    }
}

fn check_domain(x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain { x })
    }
}

fn check_finite(x: f64, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NotFinite { x, value })
    }
}

impl SmoothFn {
    pub fn new(label: impl Into<String>, map: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::try_new(label, move |x| Ok(map(x)))
    }

    pub fn try_new(label: impl Into<String>, map: impl Fn(f64) -> Result<f64> + Send + Sync + 'static) -> Self {
        SmoothFn { map: Arc::new(map), deriv: None, label: label.into() }
    }

    pub fn with_deriv(self, deriv: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.with_try_deriv(move |x| Ok(deriv(x)))
    }

    pub fn with_try_deriv(self, deriv: impl Fn(f64) -> Result<f64> + Send + Sync + 'static) -> Self {
        SmoothFn { deriv: Some(Arc::new(deriv)), ..self }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_analytic_deriv(&self) -> bool {
        self.deriv.is_some()
    }

    /// Evaluates at `x ∈ ]0, 1[`; the value must be finite.
    pub fn eval(&self, x: f64) -> Result<f64> {
        check_domain(x)?;
        check_finite(x, (self.map)(x)?)
    }

    /// The analytic derivative, if one was supplied.
    pub fn analytic_deriv(&self, x: f64) -> Option<Result<f64>> {
        self.deriv.as_ref().map(|d| {
            check_domain(x)?;
            check_finite(x, d(x)?)
        })
    }

    /// First derivative, analytic when available and numerical otherwise.
    pub fn deriv(&self, x: f64) -> Result<f64> {
        match self.analytic_deriv(x) {
            Some(d) => d,
            None => Ok(numerical_deriv(self, x, 1, default_step(x, 1))?.value),
        }
    }

    /// Pointwise difference `self − other`.
    pub fn sub(&self, other: &SmoothFn) -> SmoothFn {
        let (f, g) = (self.clone(), other.clone());
        let mut out =
            SmoothFn::try_new(format!("({}) - ({})", self.label, other.label), move |x| Ok(f.eval(x)? - g.eval(x)?));
        if self.has_analytic_deriv() && other.has_analytic_deriv() {
            let (f, g) = (self.clone(), other.clone());
            out = out.with_try_deriv(move |x| Ok(f.deriv(x)? - g.deriv(x)?));
        }
        out
    }

    /// Pointwise multiple `λ·self`.
    pub fn scale(&self, lambda: f64) -> SmoothFn {
        let f = self.clone();
        let mut out = SmoothFn::try_new(format!("{lambda}*({})", self.label), move |x| Ok(lambda * f.eval(x)?));
        if self.has_analytic_deriv() {
            let f = self.clone();
            out = out.with_try_deriv(move |x| Ok(lambda * f.deriv(x)?));
        }
        out
    }
}

/// A candidate element of the diffeomorphism group: a smooth, strictly
/// increasing self-map of `]0, 1[`.
///
/// Construction does not certify membership; use [`is_in_d`].
#[derive(Clone, Debug)]
pub struct Diffeo(SmoothFn);

impl Diffeo {
    pub fn new(label: impl Into<String>, map: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Diffeo(SmoothFn::new(label, map))
    }

    pub fn from_fn(f: SmoothFn) -> Self {
        Diffeo(f)
    }

    pub fn identity() -> Self {
        Diffeo(SmoothFn::new("id", |x| x).with_deriv(|_| 1.0))
    }

    pub fn with_deriv(self, deriv: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Diffeo(self.0.with_deriv(deriv))
    }

    pub fn as_fn(&self) -> &SmoothFn {
        &self.0
    }

    pub fn into_fn(self) -> SmoothFn {
        self.0
    }

    pub fn label(&self) -> &str {
        self.0.label()
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.0.eval(x)
    }

    pub fn deriv(&self, x: f64) -> Result<f64> {
        self.0.deriv(x)
    }
}

/// Probe protocol standing in for limits and infima over the open interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeGrid {
    /// Endpoint sequences use distances `10^{-j}` for `j` in this range.
    pub first_decade: i32,
    pub last_decade: i32,
    /// Geometrically spaced points per endpoint for derivative sampling.
    pub side_points: usize,
    /// Uniform points on `[0.1, 0.9]`.
    pub interior_points: usize,
}

impl Default for ProbeGrid {
    fn default() -> Self {
        ProbeGrid { first_decade: 2, last_decade: 12, side_points: 200, interior_points: 600 }
    }
}

impl ProbeGrid {
    /// Distances `10^{-j}` from an endpoint, shrinking.
    pub fn endpoint_distances(&self) -> Vec<f64> {
        (self.first_decade..=self.last_decade).map(|j| 10f64.powi(-j)).collect()
    }

    /// Sorted sample points concentrated at both endpoints.
    pub fn sample_points(&self) -> Vec<f64> {
        let lo_exp = -1.0;
        let hi_exp = -(self.last_decade as f64);
        let side: Vec<f64> = (0..self.side_points)
            .map(|i| {
                let s = if self.side_points > 1 { i as f64 / (self.side_points - 1) as f64 } else { 0.0 };
                10f64.powf(lo_exp + s * (hi_exp - lo_exp))
            })
            .collect();
        let mut pts: Vec<f64> = side.to_vec();
        pts.extend((0..self.interior_points).map(|i| 0.1 + 0.8 * (i as f64 + 0.5) / self.interior_points as f64));
        pts.extend(side.iter().map(|d| 1.0 - d));
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    pub fn describe(&self) -> String {
        format!(
            "limits: 10^-{}..10^-{} from each endpoint; inf f': {} geometric points per side, {} interior",
            self.first_decade, self.last_decade, self.side_points, self.interior_points
        )
    }
}

/// Outcome of a membership test.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipReport {
    pub label: String,
    pub in_a: bool,
    pub in_d: bool,
    /// Value at the probe closest to 0.
    pub left_limit_estimate: f64,
    /// Value at the probe closest to 1.
    pub right_limit_estimate: f64,
    /// Sampled infimum of `f'`, when derivatives were examined.
    pub deriv_inf_estimate: Option<f64>,
    pub range_ok: bool,
    pub monotone: bool,
    pub probe_grid: String,
}

impl MembershipReport {
    pub fn to_text(&self) -> String {
        let inf = self.deriv_inf_estimate.map(|v| format!("{v:.12e}")).unwrap_or_else(|| "-".to_string());
        let rows = [
            ("map", self.label.clone()),
            ("in_A", self.in_a.to_string()),
            ("in_D", self.in_d.to_string()),
            ("left_limit_estimate", format!("{:.15e}", self.left_limit_estimate)),
            ("right_limit_estimate", format!("{:.15}", self.right_limit_estimate)),
            ("deriv_inf_estimate", inf),
            ("range_in_unit_interval", self.range_ok.to_string()),
            ("strictly_increasing", self.monotone.to_string()),
            ("probe_grid", self.probe_grid.clone()),
        ];
        rows.iter().map(|(k, v)| format!("{k:<24}{v}\n")).collect()
    }

    pub fn to_csv(&self) -> String {
        format!(
            "map,in_A,in_D,left_limit_estimate,right_limit_estimate,deriv_inf_estimate\n{},{},{},{:e},{},{}\n",
            self.label,
            self.in_a,
            self.in_d,
            self.left_limit_estimate,
            self.right_limit_estimate,
            self.deriv_inf_estimate.map(|v| format!("{v:e}")).unwrap_or_default()
        )
    }
}

/// Tests the boundary-limit conditions defining `A`.
pub fn is_in_a(f: &Diffeo, probe: &ProbeGrid, tol: f64) -> Result<MembershipReport> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be > 0, got {tol}")));
    }
    let dists = probe.endpoint_distances();
    if dists.is_empty() {
        return Err(Error::Parameter("probe grid has no endpoint sequence".into()));
    }
    let left: Vec<f64> = dists.iter().map(|&d| f.eval(d)).collect::<Result<_>>()?;
    let right: Vec<f64> = dists.iter().map(|&d| f.eval(1.0 - d)).collect::<Result<_>>()?;
    let pts = probe.sample_points();
    let values: Vec<f64> = pts.iter().map(|&x| f.eval(x)).collect::<Result<_>>()?;

    let inside = |v: &f64| *v > 0.0 && *v < 1.0;
    let range_ok = values.iter().chain(&left).chain(&right).all(inside);
    let monotone = values.windows(2).all(|w| w[0] < w[1]);

    // Distances to the target limit must shrink along each sequence.
    let left_gap: Vec<f64> = left.iter().map(|v| v.abs()).collect();
    let right_gap: Vec<f64> = right.iter().map(|v| (1.0 - v).abs()).collect();
    let approach = |g: &[f64]| g.windows(2).all(|w| w[1] <= w[0]);
    let left_limit = *left.last().unwrap();
    let right_limit = *right.last().unwrap();

    let in_a = range_ok
        && left_limit.abs() < tol
        && (1.0 - right_limit).abs() < tol
        && approach(&left_gap)
        && approach(&right_gap);

    Ok(MembershipReport {
        label: f.label().to_string(),
        in_a,
        in_d: false,
        left_limit_estimate: left_limit,
        right_limit_estimate: right_limit,
        deriv_inf_estimate: None,
        range_ok,
        monotone,
        probe_grid: probe.describe(),
    })
}

/// Tests membership in `D`: `A` plus a strictly positive sampled `inf f'`.
pub fn is_in_d(f: &Diffeo, probe: &ProbeGrid, tol: f64) -> Result<MembershipReport> {
    let mut report = is_in_a(f, probe, tol)?;
    let mut inf = f64::INFINITY;
    for x in probe.sample_points() {
        let d = f.deriv(x)?;
        inf = inf.min(d);
    }
    report.deriv_inf_estimate = Some(inf);
    report.in_d = report.in_a && report.monotone && inf > tol;
    Ok(report)
}

/// The composition `f ∘ g`.
pub fn compose(f: &Diffeo, g: &Diffeo) -> Diffeo {
    let (ff, gg) = (f.clone(), g.clone());
    let mut out = SmoothFn::try_new(format!("{} o {}", f.label(), g.label()), move |x| {
        let y = gg.eval(x)?;
        check_domain(y)?;
        ff.eval(y)
    });
    if f.as_fn().has_analytic_deriv() && g.as_fn().has_analytic_deriv() {
        let (ff, gg) = (f.clone(), g.clone());
        out = out.with_try_deriv(move |x| {
            let y = gg.eval(x)?;
            check_domain(y)?;
            Ok(ff.deriv(y)? * gg.deriv(x)?)
        });
    }
    Diffeo(out)
}

/// Solves `f(x) = y` for an increasing `f` by bracketing bisection, with a
/// safeguarded Newton polish when an analytic derivative exists.
pub fn invert_at(f: &Diffeo, y: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be > 0, got {tol}")));
    }
    if !(y > 0.0 && y < 1.0) {
        return Err(Error::Domain { x: y });
    }

    // Walk a bracket out towards both endpoints.
    let mut lo = 0.5;
    let mut f_lo = f.eval(lo)?;
    while f_lo > y {
        let next = 0.5 * lo;
        if next <= 0.0 || next == lo {
            return Err(Error::NotAttained { y, lo: f_lo, hi: f.eval(0.5)? });
        }
        lo = next;
        f_lo = f.eval(lo)?;
    }
    let mut hi = 0.5;
    let mut f_hi = f.eval(hi)?;
    while f_hi < y {
        let next = 1.0 - 0.5 * (1.0 - hi);
        if next >= 1.0 || next == hi {
            return Err(Error::NotAttained { y, lo: f.eval(0.5)?, hi: f_hi });
        }
        hi = next;
        f_hi = f.eval(hi)?;
    }
    if f_lo == y {
        return Ok(lo);
    }
    if f_hi == y {
        return Ok(hi);
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        x = 0.5 * (lo + hi);
        if x <= lo || x >= hi {
            break;
        }
        let fx = f.eval(x)?;
        if fx == y {
            return Ok(x);
        }
        if fx < y {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= tol && (fx - y).abs() <= tol {
            break;
        }
    }

    if f.as_fn().has_analytic_deriv() {
        for _ in 0..3 {
            let fx = f.eval(x)?;
            let d = f.deriv(x)?;
            if !(d > 0.0) {
                break;
            }
            let next = x - (fx - y) / d;
            if !(next > lo && next < hi) {
                break;
            }
            if (f.eval(next)? - y).abs() >= (fx - y).abs() {
                break;
            }
            x = next;
        }
    }
    Ok(x)
}

/// A derivative estimate with its Richardson error indicator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivEstimate {
    pub value: f64,
    /// Difference between the extrapolated value and the finer raw level.
    pub error: f64,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Central `k`-th difference with spacing `h`, second-order accurate.
fn central_difference(f: &SmoothFn, x: f64, k: usize, h: f64) -> Result<f64> {
    let half = k as f64 / 2.0;
    let mut acc = 0.0;
    for j in 0..=k {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binomial(k, j) * f.eval(x + (half - j as f64) * h)?;
    }
    Ok(acc / h.powi(k as i32))
}

/// `k`-th derivative by central differences with one Richardson step.
pub fn numerical_deriv(f: &SmoothFn, x: f64, k: usize, h: f64) -> Result<DerivEstimate> {
    if k == 0 {
        return Err(Error::Parameter("derivative order must be >= 1".into()));
    }
    if !(h > 0.0) {
        return Err(Error::Parameter(format!("step must be > 0, got {h}")));
    }
    check_domain(x)?;
    let reach = k as f64 / 2.0 * h;
    if !(x - reach > 0.0 && x + reach < 1.0) {
        return Err(Error::Stencil { x, h });
    }
    let coarse = central_difference(f, x, k, h)?;
    let fine = central_difference(f, x, k, 0.5 * h)?;
    let value = (4.0 * fine - coarse) / 3.0;
    Ok(DerivEstimate { value, error: (value - fine).abs() })
}

/// Step balancing truncation against round-off for order `k`, shrunk so the
/// stencil stays inside the interval.
pub fn default_step(x: f64, k: usize) -> f64 {
    let h = f64::EPSILON.powf(1.0 / (k as f64 + 4.0));
    let room = x.min(1.0 - x);
    h.min(0.9 * 2.0 * room / k.max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Diffeo {
        Diffeo::new("x^2", |x| x * x).with_deriv(|x| 2.0 * x)
    }

    #[test]
    fn identity_is_in_d() {
        let r = is_in_d(&Diffeo::identity(), &ProbeGrid::default(), 1e-6).unwrap();
        assert!(r.in_a && r.in_d);
        assert_eq!(r.deriv_inf_estimate, Some(1.0));
    }

    #[test]
    fn square_is_in_a_not_d() {
        let r = is_in_d(&square(), &ProbeGrid::default(), 1e-6).unwrap();
        assert!(r.in_a);
        assert!(!r.in_d);
        assert!(r.deriv_inf_estimate.unwrap() < 1e-6);
    }

    #[test]
    fn square_without_analytic_derivative() {
        let f = Diffeo::new("x^2", |x| x * x);
        let r = is_in_d(&f, &ProbeGrid::default(), 1e-6).unwrap();
        assert!(r.in_a && !r.in_d);
    }

    #[test]
    fn shift_is_not_in_a() {
        let f = Diffeo::new("x+0.1", |x| x + 0.1);
        let r = is_in_a(&f, &ProbeGrid::default(), 1e-6).unwrap();
        assert!(!r.in_a);
        assert!(!r.range_ok);
        assert!((r.right_limit_estimate - 1.1).abs() < 1e-9);
    }

    #[test]
    fn failing_map_reports_domain_error() {
        let f = Diffeo::from_fn(SmoothFn::try_new("bad", |x| if x < 0.5 { Err(Error::Domain { x }) } else { Ok(x) }));
        assert!(matches!(is_in_a(&f, &ProbeGrid::default(), 1e-6), Err(Error::Domain { .. })));
    }

    #[test]
    fn evaluation_outside_interval_is_rejected() {
        assert!(matches!(Diffeo::identity().eval(1.0), Err(Error::Domain { .. })));
        assert!(matches!(Diffeo::identity().eval(0.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn compose_identity_laws() {
        let f = square();
        let id = Diffeo::identity();
        for i in 1..100 {
            let x = i as f64 / 100.0;
            assert_eq!(compose(&f, &id).eval(x).unwrap(), f.eval(x).unwrap());
            assert_eq!(compose(&id, &f).eval(x).unwrap(), f.eval(x).unwrap());
        }
    }

    #[test]
    fn compose_chain_rule() {
        let f = square();
        let g = Diffeo::new("sin", |x| (x * std::f64::consts::FRAC_PI_2).sin())
            .with_deriv(|x| std::f64::consts::FRAC_PI_2 * (x * std::f64::consts::FRAC_PI_2).cos());
        let fg = compose(&f, &g);
        for i in 1..50 {
            let x = i as f64 / 50.0;
            let expected = f.deriv(g.eval(x).unwrap()).unwrap() * g.deriv(x).unwrap();
            assert!((fg.deriv(x).unwrap() - expected).abs() < 1e-8);
        }
    }

    #[test]
    fn compose_reports_range_exit() {
        let shift = Diffeo::new("x+0.5", |x| x + 0.5);
        let c = compose(&Diffeo::identity(), &shift);
        assert!(matches!(c.eval(0.7), Err(Error::Domain { .. })));
    }

    #[test]
    fn invert_examples() {
        let x = invert_at(&Diffeo::identity(), 0.37, 1e-12).unwrap();
        assert!((x - 0.37).abs() <= 1e-12);
        let x = invert_at(&square(), 0.25, 1e-14).unwrap();
        assert!((x - 0.5).abs() < 1e-13);
        let cube = Diffeo::new("x^3", |x| x * x * x);
        let x = invert_at(&cube, 1e-6, 1e-15).unwrap();
        assert!((x - 1e-2).abs() < 1e-9);
    }

    #[test]
    fn invert_not_attained() {
        let squeeze = Diffeo::new("0.25+x/2", |x| 0.25 + 0.5 * x);
        assert!(matches!(invert_at(&squeeze, 0.1, 1e-12), Err(Error::NotAttained { .. })));
        assert!(matches!(invert_at(&squeeze, 0.9, 1e-12), Err(Error::NotAttained { .. })));
    }

    #[test]
    fn numerical_derivative_examples() {
        let d = numerical_deriv(Diffeo::identity().as_fn(), 0.5, 1, 1e-4).unwrap();
        assert!((d.value - 1.0).abs() < 1e-10);
        let cube = SmoothFn::new("x^3", |x| x * x * x);
        let d = numerical_deriv(&cube, 0.5, 2, 1e-3).unwrap();
        assert!((d.value - 3.0).abs() < 1e-8, "{d:?}");
        let d = numerical_deriv(&SmoothFn::new("exp", f64::exp), 0.3, 3, default_step(0.3, 3)).unwrap();
        assert!((d.value - 0.3f64.exp()).abs() < 1e-5, "{d:?}");
        let d = numerical_deriv(&SmoothFn::new("exp", f64::exp), 0.6, 4, default_step(0.6, 4)).unwrap();
        assert!((d.value - 0.6f64.exp()).abs() < 1e-3, "{d:?}");
    }

    #[test]
    fn stencil_leaving_interval_is_reported() {
        let err = numerical_deriv(Diffeo::identity().as_fn(), 0.01, 2, 0.1).unwrap_err();
        assert!(matches!(err, Error::Stencil { .. }));
    }

    #[test]
    fn probe_points_are_sorted_and_interior() {
        let pts = ProbeGrid::default().sample_points();
        assert!(pts.len() >= 900);
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
        assert!(pts.iter().all(|&x| x > 0.0 && x < 1.0));
    }
}
