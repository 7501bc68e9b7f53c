//! Command-line front end.
//!
//! Every subcommand produces one or more named artifacts (CSV, text and
//! optionally SVG renderings). They go to stdout, or to files
//! `<out><name>.<ext>` when `--out` is given.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::certify::{self, CriterionOutcome, DEFAULT_SEED};
use crate::diffeo::{is_in_d, ProbeGrid};
use crate::error::Result;
use crate::expr::Expr;
use crate::family::{c_deriv_x, eval_c, member, FamilyParam};
use crate::flow::{exp_attempt, nonregularity_witness, TimeDependentField, DEFAULT_MARGIN};
use crate::manifold::no_global_flow_report;
use crate::mollifier::{compute_k, MollifierConstants};
use crate::seminorm::{convergence_report, SeminormIndex, DEFAULT_GRID};
use crate::svg::{line_plot, Series};

/// Exit status for a usage error.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for a numerical failure.
pub const EXIT_RUNTIME: i32 = 3;
/// Exit status when `all` has a failing criterion.
pub const EXIT_CRITERIA: i32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Text,
    Svg,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Text => "txt",
            Format::Svg => "svg",
        }
    }
}

#[derive(Debug, Clone, Parser)]
#[command(name = "diffeo-lab", version, about = "Mollified translations, flows and blowups on the unit interval")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,
    /// Write artifacts to files starting with this prefix instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Normalization constant K, sup of the mollifier and its bound.
    Constants {
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Tabulate c_t(x) and its x-derivative on x_i = (i+1)/(grid+1).
    Family {
        #[arg(long, allow_negative_numbers = true, conflicts_with = "t_list")]
        t: Option<f64>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        t_list: Option<Vec<f64>>,
        #[arg(long, default_value_t = 101)]
        grid: usize,
    },
    /// Membership report for c_t in the diffeomorphism group.
    Member {
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.1)]
        t: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Seminorm distances from c_t to the identity.
    Seminorm {
        /// Defaults to 2^-j for j = 2..12.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        t_list: Option<Vec<f64>>,
        /// Seminorm indices n:k.
        #[arg(long, value_delimiter = ',', default_value = "1:0,1:1,1:2,2:0,2:1,2:2,3:0,3:1,3:2")]
        indices: Vec<SeminormIndex>,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
    },
    /// Integrate a velocity field v(t, x) from seeds and classify the flow.
    Flow {
        /// `one`, `zero`, `logistic`, or an expression in t and x.
        #[arg(long, default_value = "one")]
        field: String,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.3,0.5,0.7,0.9")]
        seeds: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        t_max: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value_t = DEFAULT_MARGIN)]
        margin: f64,
    },
    /// Show that x + t leaves the admissible maps for every t > 0.
    Nonregular {
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.05,0.1,0.2")]
        t_list: Vec<f64>,
    },
    /// Blowup of the transplanted field along the plane embedding.
    Manifold {
        #[arg(long, value_delimiter = ',', default_value = "0.3,0.5,0.7,0.9")]
        seeds: Vec<f64>,
        #[arg(long, default_value_t = 1.5)]
        t_max: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 1e6)]
        radius: f64,
    },
    /// Run the full certification suite.
    All {
        /// Seed for the randomized checks.
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

struct Artifact {
    name: &'static str,
    csv: Option<String>,
    text: String,
    svg: Option<String>,
}

impl Artifact {
    fn render(&self, format: Format) -> &str {
        match format {
            Format::Csv => self.csv.as_deref().unwrap_or(&self.text),
            Format::Text => &self.text,
            Format::Svg => self.svg.as_deref().unwrap_or(&self.text),
        }
    }

    fn extension(&self, format: Format) -> &'static str {
        let native = match format {
            Format::Csv => self.csv.is_some(),
            Format::Text => true,
            Format::Svg => self.svg.is_some(),
        };
        if native {
            format.extension()
        } else {
            "txt"
        }
    }
}

#[derive(Debug)]
struct Usage {
    flag: &'static str,
    message: String,
}

fn usage(flag: &'static str, message: impl Into<String>) -> Usage {
    Usage { flag, message: message.into() }
}

fn positive(flag: &'static str, v: f64) -> std::result::Result<(), Usage> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(usage(flag, format!("must be a positive number, got {v}")))
    }
}

fn family_params(flag: &'static str, ts: &[f64]) -> std::result::Result<(), Usage> {
    match ts.iter().find(|t| FamilyParam::new(**t).is_err()) {
        Some(t) => Err(usage(flag, format!("family parameters must satisfy |t| < 1/4, got {t}"))),
        None => Ok(()),
    }
}

fn unit_seeds(flag: &'static str, seeds: &[f64]) -> std::result::Result<(), Usage> {
    if seeds.is_empty() {
        return Err(usage(flag, "needs at least one value"));
    }
    match seeds.iter().find(|y| !(**y > 0.0 && **y < 1.0)) {
        Some(y) => Err(usage(flag, format!("values must lie in ]0, 1[, got {y}"))),
        None => Ok(()),
    }
}

impl RunConfig {
    fn validate(&self) -> std::result::Result<(), Usage> {
        match &self.command {
            Command::Constants { tol } => positive("--tol", *tol),
            Command::Family { t, t_list, grid } => {
                if *grid == 0 {
                    return Err(usage("--grid", "must be at least 1"));
                }
                if let Some(t) = t {
                    family_params("--t", &[*t])?;
                }
                family_params("--t-list", t_list.as_deref().unwrap_or_default())
            }
            Command::Member { t, tol } => {
                family_params("--t", &[*t])?;
                positive("--tol", *tol)
            }
            Command::Seminorm { t_list, indices, grid } => {
                if let Some(ts) = t_list {
                    if let Some(t) = ts.iter().find(|t| !t.is_finite()) {
                        return Err(usage("--t-list", format!("values must be finite, got {t}")));
                    }
                }
                if let Some(i) = indices.iter().find(|i| i.k() as usize > crate::seminorm::MAX_ORDER) {
                    return Err(usage("--indices", format!("derivative order in {} exceeds 4", i.tag())));
                }
                if *grid < crate::seminorm::MIN_GRID {
                    return Err(usage("--grid", format!("must be at least {}", crate::seminorm::MIN_GRID)));
                }
                Ok(())
            }
            Command::Flow { seeds, t_max, dt, margin, .. } => {
                unit_seeds("--seeds", seeds)?;
                positive("--t-max", *t_max)?;
                positive("--dt", *dt)?;
                if dt >= t_max {
                    return Err(usage("--dt", format!("must be smaller than --t-max = {t_max}")));
                }
                if !(*margin > 0.0 && *margin < 1e-3) {
                    return Err(usage("--margin", format!("must lie in ]0, 1e-3[, got {margin}")));
                }
                Ok(())
            }
            Command::Nonregular { t_list } => {
                if t_list.is_empty() || t_list.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                    return Err(usage("--t-list", "values must be finite and non-negative"));
                }
                Ok(())
            }
            Command::Manifold { seeds, t_max, dt, radius } => {
                unit_seeds("--seeds", seeds)?;
                positive("--t-max", *t_max)?;
                positive("--dt", *dt)?;
                if !(*radius > crate::manifold::SWITCH_RADIUS) || !radius.is_finite() {
                    return Err(usage("--radius", format!("must exceed {}", crate::manifold::SWITCH_RADIUS)));
                }
                Ok(())
            }
            Command::All { .. } => Ok(()),
        }
    }
}

/// Runs the configured subcommand, writing results to `out` and diagnostics
/// to `err`. Returns the process exit status.
pub fn run(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if let Err(u) = config.validate() {
        let _ = writeln!(err, "error: invalid value for '{}': {}", u.flag, u.message);
        return EXIT_USAGE;
    }
    let (artifacts, status) = match dispatch(&config.command) {
        Ok(v) => v,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_RUNTIME;
        }
    };
    if let Err(e) = emit(config, &artifacts, out) {
        let _ = writeln!(err, "error: {e}");
        return EXIT_RUNTIME;
    }
    status
}

fn emit(config: &RunConfig, artifacts: &[Artifact], out: &mut dyn Write) -> std::io::Result<()> {
    for (i, a) in artifacts.iter().enumerate() {
        let body = a.render(config.format);
        match &config.out {
            Some(prefix) => {
                let mut path = prefix.clone().into_os_string();
                path.push(format!("{}.{}", a.name, a.extension(config.format)));
                let path = PathBuf::from(path);
                if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir)?;
                }
                std::fs::write(&path, body)?;
                writeln!(out, "wrote {}", path.display())?;
            }
            None => {
                if i > 0 {
                    writeln!(out)?;
                }
                out.write_all(body.as_bytes())?;
            }
        }
    }
    Ok(())
}

fn dispatch(command: &Command) -> Result<(Vec<Artifact>, i32)> {
    let artifacts = match command {
        Command::Constants { tol } => vec![constants(*tol)?],
        Command::Family { t, t_list, grid } => {
            let ts = match (t, t_list) {
                (Some(t), _) => vec![*t],
                (None, Some(list)) => list.clone(),
                (None, None) => vec![0.1],
            };
            vec![family(&ts, *grid)?]
        }
        Command::Member { t, tol } => {
            let report = is_in_d(&member(*t)?, &ProbeGrid::default(), *tol)?;
            vec![Artifact { name: "member", csv: Some(report.to_csv()), text: report.to_text(), svg: None }]
        }
        Command::Seminorm { t_list, indices, grid } => {
            let ts = t_list.clone().unwrap_or_else(|| (2..=12).map(|j| 2f64.powi(-j)).collect());
            vec![seminorms(&ts, indices, *grid)?]
        }
        Command::Flow { field, seeds, t_max, dt, margin } => flow(field, seeds, *t_max, *dt, *margin)?,
        Command::Nonregular { t_list } => vec![nonregular(t_list)],
        Command::Manifold { seeds, t_max, dt, radius } => manifold(seeds, *t_max, *dt, *radius)?,
        Command::All { seed } => {
            let outcomes = certify::run_all(*seed);
            let status = if outcomes.iter().all(|o| o.passed) { 0 } else { EXIT_CRITERIA };
            return Ok((vec![certification(&outcomes)], status));
        }
    };
    Ok((artifacts, 0))
}

fn constants(tol: f64) -> Result<Artifact> {
    let k = compute_k(tol)?;
    let sup_phi = (-1.0f64).exp() / k;
    let bound = MollifierConstants::sup_bound();
    Ok(Artifact {
        name: "constants",
        csv: Some(format!("name,value\nK,{k}\nsup_phi,{sup_phi}\nbound,{bound}\n")),
        text: format!("K       = {k:.15}\nsup_phi = {sup_phi:.15}\nbound   = {bound:.15}\n"),
        svg: None,
    })
}

fn family(ts: &[f64], grid: usize) -> Result<Artifact> {
    let mut csv = String::from("t,x,c,dc_dx\n");
    let mut text = format!("{:>8} {:>12} {:>20} {:>20}\n", "t", "x", "c", "dc_dx");
    let mut series = Vec::new();
    for &t in ts {
        let p = FamilyParam::new(t)?;
        let mut pts = Vec::with_capacity(grid);
        for i in 0..grid {
            let x = (i + 1) as f64 / (grid + 1) as f64;
            let (c, d) = (eval_c(p, x)?, c_deriv_x(p, x)?);
            csv.push_str(&format!("{t},{x},{c},{d}\n"));
            text.push_str(&format!("{t:>8} {x:>12.8} {c:>20.15} {d:>20.15}\n"));
            pts.push((x, c));
        }
        series.push(Series::new(format!("t = {t}"), pts));
    }
    Ok(Artifact { name: "family", csv: Some(csv), text, svg: Some(line_plot("c_t(x)", "x", "c", &series)) })
}

fn seminorms(ts: &[f64], indices: &[SeminormIndex], grid: usize) -> Result<Artifact> {
    let report = convergence_report(ts, indices, grid)?;
    let csv = report.to_csv();
    let mut text = String::new();
    if !report.skipped.is_empty() {
        text.push_str(&format!("skipped (|t| >= 1/4): {:?}\n", report.skipped));
    }
    text.push_str(&format!("{:>12}", "t"));
    for idx in indices {
        text.push_str(&format!(" {:>11}", idx.tag()));
    }
    text.push('\n');
    for (t, row) in report.t.iter().zip(&report.values) {
        text.push_str(&format!("{t:>12.4e}"));
        for v in row {
            text.push_str(&format!(" {v:>11.3e}"));
        }
        text.push('\n');
    }
    let series: Vec<Series> = indices
        .iter()
        .enumerate()
        .map(|(col, idx)| {
            let pts = report
                .t
                .iter()
                .zip(report.column(col))
                .filter(|(t, _)| **t > 0.0)
                .map(|(t, v)| (-t.log2(), if v > 0.0 { v.log10() } else { f64::NAN }))
                .collect();
            Series::new(idx.tag(), pts)
        })
        .collect();
    Ok(Artifact {
        name: "seminorm",
        csv: Some(csv),
        text,
        svg: Some(line_plot("distance to the identity", "-log2 t", "log10 seminorm", &series)),
    })
}

fn parse_field(name: &str) -> Result<TimeDependentField> {
    Ok(match name {
        "one" => TimeDependentField::one(),
        "zero" => TimeDependentField::zero(),
        "logistic" => TimeDependentField::logistic(),
        src => {
            let e = Expr::parse(src)?;
            TimeDependentField::new(src, move |t, x| e.eval(t, x))
        }
    })
}

fn flow(field: &str, seeds: &[f64], t_max: f64, dt: f64, margin: f64) -> Result<Vec<Artifact>> {
    let field = parse_field(field)?;
    let verdict = exp_attempt(&field, t_max, dt, margin, seeds)?;
    let series: Vec<Series> = verdict
        .flow
        .trajectories
        .iter()
        .map(|tr| Series::new(format!("y = {}", tr.seed), tr.samples.clone()))
        .collect();
    let csv = verdict.flow.to_csv();
    let svg = line_plot(&format!("characteristics of v = {}", field.label()), "t", "x", &series);
    Ok(vec![
        Artifact { name: "flow", text: csv.clone(), csv: Some(csv), svg: Some(svg) },
        Artifact { name: "flow-verdict", csv: None, text: verdict.flow.verdict_block(), svg: None },
    ])
}

fn nonregular(ts: &[f64]) -> Artifact {
    let report = nonregularity_witness(ts, &ProbeGrid::default());
    let mut csv = String::from("t,in_a,left_limit,right_limit,range_exits,gap_bound\n");
    for r in &report.rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.t, r.in_a, r.left_limit_estimate, r.right_limit_estimate, r.range_exits, r.gap_bound_holds
        ));
    }
    csv.push_str(&format!("# verdict: {}\n", report.verdict));
    Artifact { name: "nonregular", csv: Some(csv), text: report.to_text(), svg: None }
}

fn manifold(seeds: &[f64], t_max: f64, dt: f64, radius: f64) -> Result<Vec<Artifact>> {
    let report = no_global_flow_report(seeds, t_max, dt, radius)?;
    let series: Vec<Series> = report
        .rows
        .iter()
        .zip(&report.trajectories)
        .map(|(row, tr)| Series::new(format!("x0 = {}", row.x0), tr.samples.iter().map(|&(t, s, _)| (t, s)).collect()))
        .collect();
    let trajectories = report.trajectories_csv();
    let mut verdict_csv = report.to_csv();
    if let Some(v) = &report.verdict {
        verdict_csv.push_str(&format!("# verdict: {v}\n"));
    }
    Ok(vec![
        Artifact {
            name: "manifold",
            text: trajectories.clone(),
            csv: Some(trajectories),
            svg: Some(line_plot("stretch coordinate along the embedding", "t", "s", &series)),
        },
        Artifact { name: "manifold-verdict", csv: Some(verdict_csv), text: report.to_text(), svg: None },
    ])
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn certification(outcomes: &[CriterionOutcome]) -> Artifact {
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id.to_string()).collect();
    let summary = format!("failed_criteria: [{}]\n", failed.join(","));
    let mut text = String::new();
    let mut csv = String::from("id,name,passed,detail\n");
    for o in outcomes {
        text.push_str(&o.line());
        text.push('\n');
        csv.push_str(&format!("{},{},{},{}\n", o.id, csv_field(o.name), o.passed, csv_field(&o.detail)));
    }
    text.push_str(&summary);
    csv.push_str(&format!("# {summary}"));
    Artifact { name: "all", csv: Some(csv), text, svg: None }
}
