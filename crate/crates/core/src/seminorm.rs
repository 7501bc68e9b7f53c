//! Seminorms `‖f‖_{n,k} = sup_{1/(n+1) ≤ x ≤ n/(n+1)} |D^k f(x)|` of the
//! smooth compact-open topology on `]0, 1[`, approximated by a grid maximum
//! polished by a golden-section search around the best grid node.

use crate::diffeo::{default_step, numerical_deriv, Diffeo, SmoothFn};
use crate::error::{Error, Result};
use crate::family::{family_member, FamilyParam};

/// Default number of grid points per window.
pub const DEFAULT_GRID: usize = 4001;
/// Minimum number of grid points per window.
pub const MIN_GRID: usize = 101;
/// Highest derivative order allowed without opting in.
pub const MAX_ORDER: usize = 4;

/// Selects the window `[1/(n+1), n/(n+1)]` and derivative order `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SeminormIndex {
    n: u32,
    k: u32,
}

impl SeminormIndex {
    pub fn new(n: u32, k: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("seminorm window index n must be >= 1".into()));
        }
        Ok(SeminormIndex { n, k })
    }

    pub fn n(self) -> u32 {
        self.n
    }

    pub fn k(self) -> u32 {
        self.k
    }

    pub fn window(self) -> (f64, f64) {
        let m = self.n as f64 + 1.0;
        (1.0 / m, self.n as f64 / m)
    }

    /// Column name used in reports, `n:k`.
    pub fn tag(self) -> String {
        format!("{}:{}", self.n, self.k)
    }
}

impl std::str::FromStr for SeminormIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (n, k) = s.split_once(':').ok_or_else(|| Error::Parameter(format!("expected n:k, got {s:?}")))?;
        let parse = |v: &str| v.trim().parse::<u32>().map_err(|_| Error::Parameter(format!("expected n:k, got {s:?}")));
        SeminormIndex::new(parse(n)?, parse(k)?)
    }
}

/// A grid maximum together with where it was attained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeminormValue {
    pub value: f64,
    pub argmax: f64,
}

fn derivative(f: &SmoothFn, x: f64, k: u32) -> Result<f64> {
    match k {
        0 => f.eval(x),
        1 if f.has_analytic_deriv() => f.deriv(x),
        _ => Ok(numerical_deriv(f, x, k as usize, default_step(x, k as usize))?.value),
    }
}

/// `‖f‖_{n,k}` as the maximum of `|D^k f|` on a uniform grid; `k ≤ 4`.
pub fn seminorm(f: &SmoothFn, idx: SeminormIndex, grid_points: usize) -> Result<SeminormValue> {
    if idx.k as usize > MAX_ORDER {
        return Err(Error::Parameter(format!(
            "derivative order {} exceeds {MAX_ORDER}; use seminorm_high_order",
            idx.k
        )));
    }
    seminorm_high_order(f, idx, grid_points)
}

/// As [`seminorm`] without the order cap. Finite differences above order 4
/// lose most of their digits in double precision.
pub fn seminorm_high_order(f: &SmoothFn, idx: SeminormIndex, grid_points: usize) -> Result<SeminormValue> {
    if grid_points < MIN_GRID {
        return Err(Error::Parameter(format!("grid_points must be >= {MIN_GRID}, got {grid_points}")));
    }
    let (lo, hi) = idx.window();
    let node = |i: usize| {
        if i + 1 == grid_points {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (grid_points - 1) as f64
        }
    };
    let mut best = SeminormValue { value: -1.0, argmax: lo };
    let mut best_i = 0;
    for i in 0..grid_points {
        let x = node(i);
        let v = derivative(f, x, idx.k)?.abs();
        if v > best.value {
            best = SeminormValue { value: v, argmax: x };
            best_i = i;
        }
    }
    if hi > lo {
        let a = node(best_i.saturating_sub(1));
        let b = node((best_i + 1).min(grid_points - 1));
        let refined = golden_max(|x| Ok(derivative(f, x, idx.k)?.abs()), a, b)?;
        if refined.value > best.value {
            best = refined;
        }
    }
    Ok(best)
}

/// Golden-section search for a local maximum of `g` on `[a, b]`.
fn golden_max(g: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<SeminormValue> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut gc = g(c)?;
    let mut gd = g(d)?;
    for _ in 0..80 {
        if b - a <= 1e-13 {
            break;
        }
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - INV_PHI * (b - a);
            gc = g(c)?;
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + INV_PHI * (b - a);
            gd = g(d)?;
        }
    }
    Ok(if gc >= gd { SeminormValue { value: gc, argmax: c } } else { SeminormValue { value: gd, argmax: d } })
}

/// `‖f − g‖_{n,k}`.
pub fn seminorm_distance(f: &SmoothFn, g: &SmoothFn, idx: SeminormIndex, grid_points: usize) -> Result<f64> {
    Ok(seminorm(&f.sub(g), idx, grid_points)?.value)
}

/// Distances `‖c_t − id‖_{n,k}` over a list of parameters and indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub indices: Vec<SeminormIndex>,
    pub t: Vec<f64>,
    /// `values[row][col]` for `t[row]` and `indices[col]`.
    pub values: Vec<Vec<f64>>,
    /// Requested parameters outside `]−1/4, 1/4[`, which have no family member.
    pub skipped: Vec<f64>,
}

impl ConvergenceReport {
    pub fn column(&self, col: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[col]).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for idx in &self.indices {
            out.push(',');
            out.push_str(&idx.tag());
        }
        out.push('\n');
        for (t, row) in self.t.iter().zip(&self.values) {
            out.push_str(&format!("{t:e}"));
            for v in row {
                out.push_str(&format!(",{v:e}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Tabulates `‖c_t − id‖_{n,k}` for each `t` and index.
pub fn convergence_report(
    family_params: &[f64],
    indices: &[SeminormIndex],
    grid_points: usize,
) -> Result<ConvergenceReport> {
    let id = Diffeo::identity();
    let mut report =
        ConvergenceReport { indices: indices.to_vec(), t: Vec::new(), values: Vec::new(), skipped: Vec::new() };
    for &t in family_params {
        let Ok(param) = FamilyParam::new(t) else {
            report.skipped.push(t);
            continue;
        };
        let diff = family_member(param).as_fn().sub(id.as_fn());
        let row =
            indices.iter().map(|&idx| Ok(seminorm(&diff, idx, grid_points)?.value)).collect::<Result<Vec<_>>>()?;
        report.t.push(t);
        report.values.push(row);
    }
    Ok(report)
}
