//! The interval counterexample transplanted into the plane.
//!
//! The interval is embedded as the horizontal axis through the log-odds
//! coordinate `s = σ(x) = ln(x/(1−x))`, whose image is closed. A tube of
//! half-width 1 around the axis carries the unit field of the interval,
//! pushed forward by `σ` and damped by a radial cutoff `ψ(r)`. The pushed
//! forward speed is `σ'(σ^{-1}(s)) = 4 cosh²(s/2)`, so axis trajectories
//! reach `s = +∞` at the time an interval point moving at unit speed
//! reaches 1.

use crate::error::{Error, Result};
use crate::mollifier::mollifier_integral;

/// Plateau radius of the cutoff: `ψ = 1` for `|r| ≤ 3/4`.
pub const CUTOFF_PLATEAU: f64 = 0.75;
/// Above this stretch coordinate the integrator switches to `s` as the
/// independent variable.
pub const SWITCH_RADIUS: f64 = 10.0;
/// Maximum change in `s` per physical-time step.
const MAX_DS: f64 = 0.02;
/// Geometric growth of the `s` step beyond [`SWITCH_RADIUS`].
const DS_GROWTH: f64 = 1.25;
const CUTOFF_TOL: f64 = 1e-13;

/// The log-odds embedding `x ↦ (σ(x), 0)` of `]0, 1[` onto the axis.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LineEmbedding;

impl LineEmbedding {
    pub fn sigma(&self, x: f64) -> f64 {
        (x / (1.0 - x)).ln()
    }

    pub fn sigma_inv(&self, s: f64) -> f64 {
        if s >= 0.0 {
            1.0 / (1.0 + (-s).exp())
        } else {
            let e = s.exp();
            e / (1.0 + e)
        }
    }

    pub fn dsigma(&self, x: f64) -> f64 {
        1.0 / (x * (1.0 - x))
    }

    /// `σ'(σ^{-1}(s)) = 2 + 2 cosh s`, in closed form (finite up to |s| ≈ 709).
    pub fn speed(&self, s: f64) -> f64 {
        2.0 + 2.0 * s.cosh()
    }

    /// `1/speed(s)`, evaluated without overflow for any `s`.
    pub fn inverse_speed(&self, s: f64) -> f64 {
        let e = (-s.abs()).exp();
        e / ((1.0 + e) * (1.0 + e))
    }

    pub fn embed(&self, x: f64) -> [f64; 2] {
        [self.sigma(x), 0.0]
    }
}

/// Tube chart `E(x', r) = (σ(x'), r)` with the radial cutoff `ψ`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TubularChart {
    pub embedding: LineEmbedding,
}

impl TubularChart {
    pub fn chart(&self, x: f64, r: f64) -> [f64; 2] {
        [self.embedding.sigma(x), r]
    }

    /// Smooth step: 1 on `|r| ≤ 3/4`, 0 on `|r| ≥ 1`, built as the integral
    /// of the mollifier of width 1/8 centred at `7/8`.
    pub fn cutoff(&self, r: f64) -> f64 {
        let a = r.abs();
        if a >= 1.0 {
            return 0.0;
        }
        if a <= CUTOFF_PLATEAU {
            return 1.0;
        }
        mollifier_integral(0.125, a - 0.875, 1.0, CUTOFF_TOL).expect("valid cutoff integral")
    }
}

/// The vector field `∂_t C_t|_{t=0}` at a point `(s, r)` of the plane.
pub fn induced_field(p: [f64; 2]) -> [f64; 2] {
    let chart = TubularChart::default();
    let [s, r] = p;
    if r.abs() >= 1.0 {
        return [0.0, 0.0];
    }
    [chart.cutoff(r) * chart.embedding.speed(s), 0.0]
}

/// A planar trajectory of [`induced_field`].
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldFlowResult {
    pub seed: [f64; 2],
    /// `(t, s, r)` samples, strictly increasing in `t`.
    pub samples: Vec<(f64, f64, f64)>,
    /// Time at which `s` reached the blowup radius, if within the horizon.
    pub blowup_time: Option<f64>,
    pub stationary: bool,
}

fn rk4_planar(p: [f64; 2], h: f64) -> [f64; 2] {
    let add = |a: [f64; 2], b: [f64; 2], c: f64| [a[0] + c * b[0], a[1] + c * b[1]];
    let k1 = induced_field(p);
    let k2 = induced_field(add(p, k1, 0.5 * h));
    let k3 = induced_field(add(p, k2, 0.5 * h));
    let k4 = induced_field(add(p, k3, h));
    [
        p[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        p[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Integrates the induced field from `seed` until `s` exceeds
/// `blowup_radius` or `t` reaches `t_max`.
///
/// Below [`SWITCH_RADIUS`] this is RK4 in physical time with the step capped
/// so that `s` moves at most 0.02 per step. Beyond it the field is
/// `s`-monotone and autonomous, so time is integrated as a function of `s`
/// (`dt/ds = 1/(ψ·speed(s))`) with geometrically growing `s` steps; the
/// matching physical steps shrink geometrically.
pub fn integrate_manifold_flow(seed: [f64; 2], t_max: f64, dt: f64, blowup_radius: f64) -> Result<ManifoldFlowResult> {
    if !(t_max > 0.0 && dt > 0.0) {
        return Err(Error::Parameter(format!("t_max and dt must be > 0, got {t_max}, {dt}")));
    }
    if !(blowup_radius > SWITCH_RADIUS) {
        return Err(Error::Parameter(format!("blowup radius must exceed {SWITCH_RADIUS}, got {blowup_radius}")));
    }
    if !(seed[0].is_finite() && seed[1].is_finite()) {
        return Err(Error::Parameter(format!("seed must be finite, got {seed:?}")));
    }

    let chart = TubularChart::default();
    let weight = if seed[1].abs() >= 1.0 { 0.0 } else { chart.cutoff(seed[1]) };
    let mut out =
        ManifoldFlowResult { seed, samples: vec![(0.0, seed[0], seed[1])], blowup_time: None, stationary: false };
    if weight == 0.0 {
        out.stationary = true;
        out.samples.push((t_max, seed[0], seed[1]));
        return Ok(out);
    }
    if seed[0] >= blowup_radius {
        out.blowup_time = Some(0.0);
        return Ok(out);
    }

    let inv = |s: f64| chart.embedding.inverse_speed(s) / weight;
    let simpson = |s: f64, step: f64| step / 6.0 * (inv(s) + 4.0 * inv(s + 0.5 * step) + inv(s + step));

    let mut p = seed;
    let mut t = 0.0;
    // Far on the negative side the speed overflows; approach -SWITCH_RADIUS
    // with s-steps shrinking geometrically towards it.
    while p[0] < -SWITCH_RADIUS {
        let gap = -SWITCH_RADIUS - p[0];
        let step = if gap <= MAX_DS { gap } else { (0.2 * gap).max(MAX_DS) };
        let dt_step = simpson(p[0], step);
        if t + dt_step > t_max {
            return Ok(out);
        }
        p[0] = if step == gap { -SWITCH_RADIUS } else { p[0] + step };
        t += dt_step;
        out.samples.push((t, p[0], p[1]));
    }
    while p[0] <= SWITCH_RADIUS {
        if t >= t_max {
            return Ok(out);
        }
        let speed = induced_field(p)[0].abs();
        if !speed.is_finite() {
            return Err(Error::Integration { t, s: p[0] });
        }
        let h = dt.min(t_max - t).min(MAX_DS / speed);
        let next = rk4_planar(p, h);
        if !(next[0].is_finite() && next[1].is_finite()) {
            return Err(Error::Integration { t, s: next[0] });
        }
        p = next;
        t += h;
        out.samples.push((t, p[0], p[1]));
    }

    // s-parametrized tail: t(s) = t0 + ∫ ds / (ψ speed(s)).
    let mut s = p[0];
    let mut ds = MAX_DS;
    while s < blowup_radius {
        let step = ds.min(blowup_radius - s);
        let dt_step = simpson(s, step);
        if !dt_step.is_finite() {
            return Err(Error::Integration { t, s });
        }
        if t + dt_step > t_max {
            return Ok(out);
        }
        s += step;
        t += dt_step;
        out.samples.push((t, s, p[1]));
        ds *= DS_GROWTH;
    }
    out.blowup_time = Some(t);
    Ok(out)
}

/// One line of the no-global-flow verdict table.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowupRow {
    pub x0: f64,
    pub predicted: f64,
    pub measured: Option<f64>,
    pub abs_error: Option<f64>,
    /// Blowup happened exactly when the horizon exceeded the predicted time.
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoGlobalFlowReport {
    pub t_max: f64,
    pub rows: Vec<BlowupRow>,
    pub trajectories: Vec<ManifoldFlowResult>,
    /// `None` for an empty seed list.
    pub verdict: Option<String>,
}

impl NoGlobalFlowReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x0,predicted,measured,abs_error\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.x0,
                r.predicted,
                r.measured.map(|v| v.to_string()).unwrap_or_default(),
                r.abs_error.map(|v| format!("{v:e}")).unwrap_or_default()
            ));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{:>8} {:>12} {:>20} {:>12}\n", "x0", "predicted", "measured", "abs_error");
        for r in &self.rows {
            out.push_str(&format!(
                "{:>8} {:>12.6} {:>20} {:>12}\n",
                r.x0,
                r.predicted,
                r.measured.map_or("none".to_string(), |v| format!("{v:.12}")),
                r.abs_error.map_or("-".to_string(), |v| format!("{v:.3e}"))
            ));
        }
        if let Some(v) = &self.verdict {
            out.push_str(&format!("verdict: {v}\n"));
        }
        out
    }

    /// Trajectories as CSV with header `seed_x0,t,s,r`.
    pub fn trajectories_csv(&self) -> String {
        let mut out = String::from("seed_x0,t,s,r\n");
        for (row, tr) in self.rows.iter().zip(&self.trajectories) {
            for (t, s, r) in &tr.samples {
                out.push_str(&format!("{},{},{},{}\n", row.x0, t, s, r));
            }
        }
        out
    }
}

/// Runs axis seeds `e(x₀)` and compares blowup times with `1 − x₀`.
pub fn no_global_flow_report(
    seeds_on_axis: &[f64],
    t_max: f64,
    dt: f64,
    blowup_radius: f64,
) -> Result<NoGlobalFlowReport> {
    let embedding = LineEmbedding;
    let mut rows = Vec::with_capacity(seeds_on_axis.len());
    let mut trajectories = Vec::with_capacity(seeds_on_axis.len());
    for &x0 in seeds_on_axis {
        if !(x0 > 0.0 && x0 < 1.0) {
            return Err(Error::Domain { x: x0 });
        }
        let tr = integrate_manifold_flow(embedding.embed(x0), t_max, dt, blowup_radius)?;
        let predicted = 1.0 - x0;
        let measured = tr.blowup_time;
        rows.push(BlowupRow {
            x0,
            predicted,
            measured,
            abs_error: measured.map(|m| (m - predicted).abs()),
            consistent: measured.is_some() == (t_max > predicted),
        });
        trajectories.push(tr);
    }
    let verdict = if rows.is_empty() {
        None
    } else if rows.iter().all(|r| r.consistent) && rows.iter().any(|r| r.measured.is_some()) {
        Some("the induced field has no global flow on M: Diff(M) is non regular".to_string())
    } else if rows.iter().all(|r| r.consistent) {
        Some("no blowup within the horizon; extend t_max beyond 1 - x0".to_string())
    } else {
        Some("inconsistent: measured blowups disagree with the horizon".to_string())
    };
    Ok(NoGlobalFlowReport { t_max, rows, trajectories, verdict })
}
