//! The logarithmic-derivative equation `(∂_t g_t) ∘ g_t^{-1} = v_t` on
//! `]0, 1[`, solved along characteristics: for each seed `y`,
//! `ẋ = v(t, x)`, `x(0) = y`, so that `x(t) = g_t(y)`.
//!
//! A seed escapes when its trajectory leaves `[margin, 1 − margin]`; that is
//! the operational meaning of leaving the open interval.

use std::fmt;
use std::sync::Arc;

use crate::diffeo::{invert_at, is_in_a, Diffeo, ProbeGrid, SmoothFn};
use crate::error::{Error, Result};

/// Default escape margin.
pub const DEFAULT_MARGIN: f64 = 1e-9;
/// Width to which escape times are bisected.
pub const ESCAPE_TIME_TOL: f64 = 1e-10;

type FieldFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A velocity field `(t, x) ↦ v_t(x)` on the open interval.
#[derive(Clone)]
pub struct TimeDependentField {
    v: FieldFn,
    label: String,
}

impl fmt::Debug for TimeDependentField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeDependentField").field("label", &self.label).finish()
    }
}

impl TimeDependentField {
    pub fn new(label: impl Into<String>, v: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        TimeDependentField { v: Arc::new(v), label: label.into() }
    }

    pub fn zero() -> Self {
        Self::new("v = 0", |_, _| 0.0)
    }

    /// The constant path `v ≡ 1`, the velocity of `t ↦ c_t` at the identity.
    pub fn one() -> Self {
        Self::new("v = 1", |_, _| 1.0)
    }

    pub fn logistic() -> Self {
        Self::new("v = x(1-x)", |_, x| x * (1.0 - x))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, t: f64, x: f64) -> Result<f64> {
        let v = (self.v)(t, x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Field { t, x })
        }
    }
}

/// Closed-form flow of `v = x(1 − x)`.
pub fn logistic_solution(y: f64, t: f64) -> f64 {
    1.0 / (1.0 + (1.0 - y) / y * (-t).exp())
}

/// How a candidate flow relates to the group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowClass {
    /// No seed left the band and seed order was preserved.
    RemainsInD,
    /// A seed started outside the band, or the seed order was broken.
    BoundaryViolation,
    /// A seed left the band at a positive time.
    Escape,
}

impl fmt::Display for FlowClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FlowClass::RemainsInD => "remains-in-D",
            FlowClass::BoundaryViolation => "boundary-violation",
            FlowClass::Escape => "escape",
        })
    }
}

/// Trajectory of a single seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedTrajectory {
    pub seed: f64,
    /// `(t, g_t(seed))`, strictly increasing in `t`; in-band points only.
    pub samples: Vec<(f64, f64)>,
    pub escaped: bool,
    pub escape_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    pub field: String,
    pub margin: f64,
    pub t_max: f64,
    pub trajectories: Vec<SeedTrajectory>,
    /// Largest step-doubling discrepancy over accepted steps.
    pub residual_max: f64,
    pub order_preserved: bool,
    pub classification: FlowClass,
}

impl FlowResult {
    pub fn min_escape_time(&self) -> Option<f64> {
        self.trajectories.iter().filter_map(|tr| tr.escape_time).min_by(f64::total_cmp)
    }

    /// Per-seed samples as CSV with header `seed,t,x`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("seed,t,x\n");
        for tr in &self.trajectories {
            for (t, x) in &tr.samples {
                out.push_str(&format!("{},{},{}\n", tr.seed, t, x));
            }
        }
        out
    }

    /// Plain-text verdict block.
    pub fn verdict_block(&self) -> String {
        let mut out = String::from("{\n");
        out.push_str(&format!("  \"field\": \"{}\",\n", self.field));
        out.push_str(&format!("  \"classification\": \"{}\",\n", self.classification));
        out.push_str(&format!("  \"t_max\": {},\n", self.t_max));
        out.push_str(&format!("  \"margin\": {:e},\n", self.margin));
        out.push_str(&format!("  \"order_preserved\": {},\n", self.order_preserved));
        out.push_str(&format!("  \"residual_max\": {:e},\n", self.residual_max));
        match self.min_escape_time() {
            Some(t) => out.push_str(&format!("  \"min_escape_time\": {t},\n")),
            None => out.push_str("  \"min_escape_time\": null,\n"),
        }
        out.push_str("  \"seeds\": [\n");
        let rows: Vec<String> = self
            .trajectories
            .iter()
            .map(|tr| {
                format!(
                    "    {{ \"seed\": {}, \"escaped\": {}, \"escape_time\": {} }}",
                    tr.seed,
                    tr.escaped,
                    tr.escape_time.map_or("null".to_string(), |t| t.to_string())
                )
            })
            .collect();
        out.push_str(&rows.join(",\n"));
        out.push_str("\n  ]\n}\n");
        out
    }
}

fn rk4_step(field: &TimeDependentField, t: f64, x: f64, h: f64) -> Result<f64> {
    let k1 = field.eval(t, x)?;
    let k2 = field.eval(t + 0.5 * h, x + 0.5 * h * k1)?;
    let k3 = field.eval(t + 0.5 * h, x + 0.5 * h * k2)?;
    let k4 = field.eval(t + h, x + h * k3)?;
    Ok(x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
}

fn validate(seeds: &[f64], t_max: f64, dt: f64, margin: f64) -> Result<()> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::Parameter(format!("t_max must be > 0, got {t_max}")));
    }
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("dt must be > 0, got {dt}")));
    }
    if dt >= t_max {
        return Err(Error::Parameter(format!("dt = {dt} must be smaller than t_max = {t_max}")));
    }
    if !(margin > 0.0 && margin < 1e-3) {
        return Err(Error::Parameter(format!("margin must lie in ]0, 1e-3[, got {margin}")));
    }
    if let Some(&y) = seeds.iter().find(|&&y| !(y > 0.0 && y < 1.0)) {
        return Err(Error::Domain { x: y });
    }
    Ok(())
}

fn integrate_seed(
    field: &TimeDependentField,
    seed: f64,
    t_max: f64,
    dt: f64,
    margin: f64,
) -> Result<(SeedTrajectory, f64)> {
    let in_band = |x: f64| x >= margin && x <= 1.0 - margin;
    let mut tr = SeedTrajectory { seed, samples: vec![(0.0, seed)], escaped: false, escape_time: None };
    if !in_band(seed) {
        tr.escaped = true;
        tr.escape_time = Some(0.0);
        return Ok((tr, 0.0));
    }

    let steps = (t_max / dt).ceil() as usize;
    let mut residual = 0.0_f64;
    let mut x = seed;
    let mut t = 0.0;
    for i in 1..=steps {
        let t_next = (i as f64 * dt).min(t_max);
        let h = t_next - t;
        if h <= 0.0 {
            break;
        }
        let full = rk4_step(field, t, x, h)?;
        let half = rk4_step(field, t, x, 0.5 * h)?;
        let doubled = rk4_step(field, t + 0.5 * h, half, 0.5 * h)?;
        if !in_band(full) {
            // Bisect the partial step length at which the band is left.
            let (mut lo, mut hi) = (0.0, h);
            while hi - lo > ESCAPE_TIME_TOL {
                let mid = 0.5 * (lo + hi);
                if in_band(rk4_step(field, t, x, mid)?) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            tr.escaped = true;
            tr.escape_time = Some(t + hi);
            return Ok((tr, residual));
        }
        residual = residual.max((full - doubled).abs());
        x = full;
        t = t_next;
        tr.samples.push((t, x));
    }
    Ok((tr, residual))
}

fn order_preserved(trajectories: &[SeedTrajectory]) -> bool {
    let mut sorted: Vec<&SeedTrajectory> = trajectories.iter().collect();
    sorted.sort_by(|a, b| a.seed.total_cmp(&b.seed));
    sorted.windows(2).all(|pair| {
        let (lo, hi) = (pair[0], pair[1]);
        if lo.seed == hi.seed {
            return true;
        }
        // All seeds share one time grid, so samples align by index.
        lo.samples.iter().zip(&hi.samples).all(|(a, b)| a.1 < b.1)
    })
}

/// Integrates the characteristics of `v` from every seed with classic
/// fixed-step RK4.
pub fn integrate_flow(
    field: &TimeDependentField,
    seeds: &[f64],
    t_max: f64,
    dt: f64,
    margin: f64,
) -> Result<FlowResult> {
    validate(seeds, t_max, dt, margin)?;
    let mut trajectories = Vec::with_capacity(seeds.len());
    let mut residual_max = 0.0_f64;
    for &y in seeds {
        let (tr, res) = integrate_seed(field, y, t_max, dt, margin)?;
        residual_max = residual_max.max(res);
        trajectories.push(tr);
    }
    let order = order_preserved(&trajectories);
    let classification = if !order || trajectories.iter().any(|tr| tr.escape_time == Some(0.0)) {
        FlowClass::BoundaryViolation
    } else if trajectories.iter().any(|tr| tr.escaped) {
        FlowClass::Escape
    } else {
        FlowClass::RemainsInD
    };
    Ok(FlowResult {
        field: field.label().to_string(),
        margin,
        t_max,
        trajectories,
        residual_max,
        order_preserved: order,
        classification,
    })
}

/// Outcome of trying to exponentiate a Lie-algebra path.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpVerdict {
    pub classification: FlowClass,
    pub min_escape_time: Option<f64>,
    pub flow: FlowResult,
}

/// Attempts `Exp(v)` on `[0, t_max]` through [`integrate_flow`].
pub fn exp_attempt(field: &TimeDependentField, t_max: f64, dt: f64, margin: f64, seeds: &[f64]) -> Result<ExpVerdict> {
    let flow = integrate_flow(field, seeds, t_max, dt, margin)?;
    Ok(ExpVerdict { classification: flow.classification, min_escape_time: flow.min_escape_time(), flow })
}

/// The time-`t` map of the flow of `v`, as a [`Diffeo`] evaluated by RK4 with
/// steps no longer than `dt`. `t` may be negative.
pub fn flow_map(field: &TimeDependentField, t: f64, dt: f64) -> Diffeo {
    let field = field.clone();
    Diffeo::from_fn(SmoothFn::try_new(format!("flow[{}]_{t}", field.label()), move |y| {
        let steps = (t.abs() / dt).ceil().max(1.0) as usize;
        let h = t / steps as f64;
        let mut x = y;
        for i in 0..steps {
            x = rk4_step(&field, i as f64 * h, x, h)?;
            if !(x > 0.0 && x < 1.0) {
                return Err(Error::Domain { x });
            }
        }
        Ok(x)
    }))
}

/// Right logarithmic derivative `(∂_t g_t)(g_t^{-1}(x))` of a path of maps,
/// by a centered difference in `t`.
///
/// An inversion that is not attained propagates as [`Error::NotAttained`]:
/// `g_t` does not cover `x`, so the path has left the group.
pub fn log_derivative<P>(path: P, t: f64, x: f64, h: f64, tol: f64) -> Result<f64>
where
    P: Fn(f64) -> Result<Diffeo>,
{
    if !(h > 0.0) {
        return Err(Error::Parameter(format!("step must be > 0, got {h}")));
    }
    let y = invert_at(&path(t)?, x, tol)?;
    Ok((path(t + h)?.eval(y)? - path(t - h)?.eval(y)?) / (2.0 * h))
}

/// One candidate solution checked by [`nonregularity_witness`].
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessRow {
    pub t: f64,
    pub in_a: bool,
    pub left_limit_estimate: f64,
    pub right_limit_estimate: f64,
    /// The candidate maps some probe outside `]0, 1[`.
    pub range_exits: bool,
    /// `|g_t(x) − 1| ≥ t − (1 − x)` at every right-endpoint probe.
    pub gap_bound_holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessReport {
    pub rows: Vec<WitnessRow>,
    /// Every tested `t > 0` was rejected from `A`.
    pub all_rejected: bool,
    pub verdict: String,
}

impl WitnessReport {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:>8} {:>6} {:>22} {:>22} {:>12} {:>10}\n",
            "t", "in_A", "left_limit", "right_limit", "range_exits", "gap_bound"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:>8} {:>6} {:>22.15e} {:>22.15} {:>12} {:>10}\n",
                r.t, r.in_a, r.left_limit_estimate, r.right_limit_estimate, r.range_exits, r.gap_bound_holds
            ));
        }
        out.push_str(&format!("verdict: {}\n", self.verdict));
        out
    }
}

/// The translation `x ↦ x + t`, the only solution of `ẋ = 1` through the
/// identity.
pub fn translation(t: f64) -> Diffeo {
    Diffeo::new(format!("x+{t}"), move |x| x + t).with_deriv(|_| 1.0)
}

/// Checks that the forced solution `g_t(x) = x + t` of the constant path
/// `v ≡ 1` lies outside `A` for every `t > 0`.
pub fn nonregularity_witness(t_list: &[f64], probe: &ProbeGrid) -> WitnessReport {
    let mut rows = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let g = translation(t);
        let report = is_in_a(&g, probe, 1e-6).expect("translations are total on ]0, 1[");
        let gap_bound_holds = probe.endpoint_distances().iter().all(|&d| {
            let x = 1.0 - d;
            (x + t - 1.0).abs() >= t - (1.0 - x) - 1e-15
        });
        rows.push(WitnessRow {
            t,
            in_a: report.in_a,
            left_limit_estimate: report.left_limit_estimate,
            right_limit_estimate: report.right_limit_estimate,
            range_exits: !report.range_ok,
            gap_bound_holds,
        });
    }
    let all_rejected = rows.iter().filter(|r| r.t > 0.0).all(|r| !r.in_a && r.range_exits);
    let verdict = if all_rejected {
        "constant path not integrable; g_t ∉ 𝒜 for all tested t > 0 (constant path 𝟏 is not Exp-integrable in 𝒟)"
    } else {
        "inconclusive: some candidate g_t with t > 0 passed the membership test for 𝒜"
    };
    WitnessReport { rows, all_rejected, verdict: verdict.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::member;

    #[test]
    fn zero_field_is_stationary() {
        let r = integrate_flow(&TimeDependentField::zero(), &[0.1, 0.5], 1.0, 0.01, 1e-9).unwrap();
        for tr in &r.trajectories {
            assert!(tr.samples.iter().all(|&(_, x)| x == tr.seed));
        }
        assert_eq!(r.classification, FlowClass::RemainsInD);
        assert_eq!(r.residual_max, 0.0);
    }

    #[test]
    fn unit_field_translates_and_escapes() {
        let r = integrate_flow(&TimeDependentField::one(), &[0.2, 0.9], 1.0, 0.01, 1e-9).unwrap();
        for tr in &r.trajectories {
            for &(t, x) in &tr.samples {
                assert!((x - (tr.seed + t)).abs() <= 1e-10);
            }
            let expected = 1.0 - tr.seed - 1e-9;
            assert!((tr.escape_time.unwrap() - expected).abs() < 2e-10, "{tr:?}");
        }
        assert_eq!(r.classification, FlowClass::Escape);
        assert!((r.min_escape_time().unwrap() - 0.1).abs() < 1e-8);
    }

    #[test]
    fn logistic_matches_closed_form() {
        let seeds = [0.2, 0.5, 0.8];
        let r = integrate_flow(&TimeDependentField::logistic(), &seeds, 10.0, 0.01, 1e-9).unwrap();
        assert_eq!(r.classification, FlowClass::RemainsInD);
        for tr in &r.trajectories {
            assert!(!tr.escaped);
            for &(t, x) in &tr.samples {
                assert!((x - logistic_solution(tr.seed, t)).abs() < 1e-8);
            }
        }
        assert!(r.order_preserved);
    }

    #[test]
    fn halving_step_is_consistent_with_residual() {
        let seeds = [0.1, 0.6];
        let field = TimeDependentField::logistic();
        let coarse = integrate_flow(&field, &seeds, 1.0, 0.1, 1e-9).unwrap();
        let fine = integrate_flow(&field, &seeds, 1.0, 0.05, 1e-9).unwrap();
        for (c, f) in coarse.trajectories.iter().zip(&fine.trajectories) {
            for (i, &(t, x)) in c.samples.iter().enumerate() {
                let (tf, xf) = f.samples[2 * i];
                assert!((t - tf).abs() < 1e-12);
                assert!((x - xf).abs() < 16.0 * coarse.residual_max, "t={t}");
            }
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let field = TimeDependentField::logistic();
        let end = |dt: f64| {
            let r = integrate_flow(&field, &[0.1], 2.0, dt, 1e-9).unwrap();
            r.trajectories[0].samples.last().unwrap().1
        };
        let (a, b, c) = (end(0.2), end(0.1), end(0.05));
        let ratio = (a - b) / (b - c);
        assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn parameter_errors() {
        let f = TimeDependentField::one();
        assert!(matches!(integrate_flow(&f, &[0.5], 1.0, 1.0, 1e-9), Err(Error::Parameter(_))));
        assert!(matches!(integrate_flow(&f, &[0.5], 1.0, 0.1, 1e-2), Err(Error::Parameter(_))));
        assert!(matches!(integrate_flow(&f, &[1.5], 1.0, 0.1, 1e-9), Err(Error::Domain { .. })));
        let bad = TimeDependentField::new("1/(x-0.5)", |_, x| 1.0 / (x - 0.5));
        assert!(matches!(integrate_flow(&bad, &[0.5], 1.0, 0.1, 1e-9), Err(Error::Field { .. })));
    }

    #[test]
    fn seed_outside_band_is_a_boundary_violation() {
        let r = integrate_flow(&TimeDependentField::zero(), &[1e-12, 0.5], 1.0, 0.1, 1e-9).unwrap();
        assert_eq!(r.classification, FlowClass::BoundaryViolation);
    }

    #[test]
    fn exp_attempt_examples() {
        let v = exp_attempt(&TimeDependentField::logistic(), 1.0, 0.01, 1e-9, &[0.1, 0.5, 0.9]).unwrap();
        assert_eq!(v.classification, FlowClass::RemainsInD);
        let v = exp_attempt(&TimeDependentField::one(), 1.0, 0.01, 1e-9, &[0.3, 0.9]).unwrap();
        assert_eq!(v.classification, FlowClass::Escape);
        assert!((v.min_escape_time.unwrap() - 0.1).abs() < 1e-8);
        let v = exp_attempt(&TimeDependentField::zero(), 1.0, 0.01, 1e-9, &[0.3]).unwrap();
        assert_eq!(v.classification, FlowClass::RemainsInD);
    }

    #[test]
    fn log_derivative_of_family_at_identity() {
        for x in [0.1, 0.5, 0.9, 0.01] {
            let v = log_derivative(member, 0.0, x, 1e-4, 1e-13).unwrap();
            assert!((v - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn log_derivative_of_constant_path() {
        let v = log_derivative(|_| Ok(Diffeo::identity()), 0.3, 0.4, 1e-3, 1e-13).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn log_derivative_of_logistic_flow() {
        let path =
            |t: f64| Ok(Diffeo::from_fn(SmoothFn::new(format!("logistic_{t}"), move |y| logistic_solution(y, t))));
        for (t, x) in [(0.0, 0.3), (0.7, 0.5), (1.5, 0.8)] {
            let v = log_derivative(path, t, x, 1e-4, 1e-14).unwrap();
            assert!((v - x * (1.0 - x)).abs() < 1e-6);
        }
    }

    #[test]
    fn log_derivative_recovers_integrated_field() {
        let field = TimeDependentField::logistic();
        let path = |t: f64| Ok(flow_map(&field, t, 1e-3));
        for (t, x) in [(0.5, 0.3), (1.0, 0.6)] {
            let v = log_derivative(path, t, x, 1e-3, 1e-14).unwrap();
            assert!((v - x * (1.0 - x)).abs() < 1e-5, "{v}");
        }
    }

    #[test]
    fn log_derivative_signals_boundary_violation() {
        let err = log_derivative(|t| Ok(translation(t)), 0.2, 0.1, 1e-3, 1e-12).unwrap_err();
        assert!(matches!(err, Error::NotAttained { .. }));
    }

    #[test]
    fn witness_rejects_positive_times() {
        let r = nonregularity_witness(&[0.0, 0.01, 0.1], &ProbeGrid::default());
        assert!(r.rows[0].in_a);
        assert!(!r.rows[1].in_a && !r.rows[2].in_a);
        assert!((r.rows[2].right_limit_estimate - 1.1).abs() < 1e-9);
        assert!(r.rows.iter().all(|row| row.gap_bound_holds));
        assert!(r.all_rejected);
    }
}
