//! Argument parsing and the subcommands.

use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ubp::family::{classify, direction_record, Classification, SearchConfig, UpdateFamily};
use ubp::geometry::{Direction, Site};
use ubp::lattice::{closure, synchronous_times, Window};
use ubp::montecarlo::{
    estimate_pc, percolation_probability, random_set, sample_tau, scaling_fit, worker_count, CsvRow,
    PcConfig, ScalingReport, Transform, TrialConfig, THREADS_VAR,
};

use crate::rulefile::{self, Expected};
use crate::verify::{run_suite, Suite, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ubp", version, about = "Two-dimensional U-bootstrap percolation")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Rule file, or the name of a bundled family.
    #[arg(long, global = true, default_value = "2-neighbour")]
    pub rules: String,
    /// Torus side.
    #[arg(long, global = true, value_delimiter = ',')]
    pub n: Vec<i64>,
    /// Density of the initial set.
    #[arg(long, global = true, value_delimiter = ',')]
    pub p: Vec<f64>,
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[arg(long = "t-max", global = true)]
    pub t_max: Option<u32>,
    /// Half-width of the box searched for difficulty witnesses.
    #[arg(long, global = true, default_value_t = 8)]
    pub window: i64,
    /// Largest witness size tried.
    #[arg(long = "max-size", global = true, default_value_t = 4)]
    pub max_size: usize,
    /// Largest number of candidate witness classes tested per direction.
    #[arg(long = "candidate-cap", global = true, default_value_t = 1_000_000)]
    pub candidate_cap: u64,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

impl Common {
    fn search(&self) -> SearchConfig {
        SearchConfig { window: self.window, max_size: self.max_size, candidate_cap: self.candidate_cap }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the family: kind, α, balance, drift.
    Classify,
    /// Stable set, isolated directions and quasi-stable directions.
    StableSet,
    /// Difficulty of one direction on both sides.
    Difficulty {
        /// Direction as `a,b`.
        #[arg(long, value_parser = parse_direction, allow_hyphen_values = true)]
        dir: Direction,
    },
    /// Closure of p-random sets on the n-torus; reports the percolation fraction.
    Closure,
    /// Critical density on the n-torus by bisection.
    Pc {
        /// Target width of the density bracket.
        #[arg(long, default_value_t = 0.004)]
        tol: f64,
        /// Largest allowed spread of the transformed values in the JSON report.
        #[arg(long, default_value_t = 4.0)]
        bound: f64,
    },
    /// Infection time of the origin in the plane.
    Tau {
        #[arg(long, default_value_t = 4.0)]
        bound: f64,
    },
    /// Runs a property suite.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        /// Restrict to the family given by --rules.
        #[arg(long)]
        only: bool,
    },
    /// Infection times of a p-random set in an n-box as CSV frames for plotting.
    DemoGrowth,
}

fn parse_direction(s: &str) -> Result<Direction, String> {
    let (a, b) = s.split_once(',').ok_or("expected a,b")?;
    let a: i64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: i64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    Direction::new(a, b).map_err(|e| e.to_string())
}

/// A failure with its exit status.
#[derive(Debug)]
struct Failure {
    code: i32,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure { code: EXIT_FAIL, error: e.into() }
    }
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: EXIT_USAGE, error: e.into() }
}

/// Parses `args` (including the program name), runs the command and returns the exit status.
pub fn run(args: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.code
        }
    }
}

#[derive(Serialize)]
struct Resolved<'a> {
    command: &'a str,
    family: &'a str,
    #[serde(flatten)]
    common: &'a Common,
    workers: usize,
    #[serde(skip_serializing_if = "serde_json::Map::is_empty")]
    extra: serde_json::Map<String, serde_json::Value>,
}

fn announce(cli: &Cli, family: &UpdateFamily, extra: serde_json::Map<String, serde_json::Value>) {
    let name = format!("{:?}", cli.command);
    let command = name.split([' ', '{']).next().unwrap_or_default().to_lowercase();
    let command = command.as_str();
    let r = Resolved { command, family: family.name(), common: &cli.common, workers: worker_count(), extra };
    eprintln!("config: {}", serde_json::to_string(&r).expect("plain data"));
}

fn extra(pairs: &[(&str, serde_json::Value)]) -> serde_json::Map<String, serde_json::Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn output(common: &Common) -> anyhow::Result<Box<dyn Write>> {
    Ok(match &common.out {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_csv(common: &Common, rows: &[CsvRow]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(output(common)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(common: &Common, value: &impl Serialize) -> anyhow::Result<()> {
    let mut w = output(common)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<i32, Failure> {
    let c = &cli.common;
    if let Ok(v) = std::env::var(THREADS_VAR) {
        if v.trim().parse::<usize>().map_or(true, |n| n == 0) {
            return Err(usage(anyhow::anyhow!("{THREADS_VAR} must be a positive integer, got {v:?}")));
        }
    }
    let (family, expected) = rulefile::load(&c.rules).map_err(usage)?;
    match &cli.command {
        Command::Classify => {
            announce(cli, &family, extra(&[]));
            classify_cmd(c, &family, expected)
        }
        Command::StableSet => {
            announce(cli, &family, extra(&[]));
            stable_set_cmd(c, &family)
        }
        Command::Difficulty { dir } => {
            announce(cli, &family, extra(&[("dir", dir.to_string().into())]));
            let r = direction_record(&family, *dir, &c.search())?;
            if c.format == Format::Json {
                write_json(c, &r)?;
            } else {
                let mut w = output(c)?;
                writeln!(w, "u = {}: α = {}, α+ = {}, α- = {}", r.u, r.alpha(), r.plus, r.minus)?;
                for (side, z) in [("+", &r.plus_witness), ("-", &r.minus_witness)] {
                    if let Some(z) = z {
                        writeln!(w, "witness {side}: {}", sites(z))?;
                    }
                }
                w.flush()?;
            }
            Ok(EXIT_OK)
        }
        Command::Closure => {
            let ns = or_default(&c.n, 64);
            let ps = or_default(&c.p, 0.05);
            let trials = c.trials.unwrap_or(100);
            announce(cli, &family, extra(&[("n", ns.clone().into()), ("p", ps.clone().into()), ("trials", trials.into())]));
            let mut rows = vec![];
            for &n in &ns {
                for &p in &ps {
                    let cfg = TrialConfig { family: family.name().into(), n, p, seed: c.seed, t_max: 0, trials };
                    let r = percolation_probability(&family, &cfg)?;
                    rows.push(CsvRow::percolation(&family, &cfg, &r));
                }
            }
            emit_rows(c, &rows, None)
        }
        Command::Pc { tol, bound } => {
            let ns = or_default(&c.n, 64);
            let trials = c.trials.unwrap_or(2000);
            announce(
                cli,
                &family,
                extra(&[("n", ns.clone().into()), ("trials", trials.into()), ("tol", (*tol).into()), ("bound", (*bound).into())]),
            );
            let mut rows = vec![];
            for &n in &ns {
                let cfg = PcConfig::new(n, trials, *tol, c.seed);
                let e = estimate_pc(&family, &cfg)?;
                rows.push(CsvRow::pc(&family, &cfg, &e));
            }
            let report = if rows.len() >= 3 {
                let class = classify(&family, &c.search())?;
                let (t, alpha) = transform_for(&class, false)?;
                let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.statistic)).collect();
                Some(scaling_fit(&pts, t, alpha, *bound)?)
            } else {
                None
            };
            emit_rows(c, &rows, report)
        }
        Command::Tau { bound } => {
            let ps = or_default(&c.p, 0.05);
            let trials = c.trials.unwrap_or(50);
            let t_max = c.t_max.unwrap_or(u32::MAX);
            announce(
                cli,
                &family,
                extra(&[("p", ps.clone().into()), ("trials", trials.into()), ("bound", (*bound).into())]),
            );
            let mut rows = vec![];
            for &p in &ps {
                let s = sample_tau(&family, p, trials, t_max, c.seed)?;
                eprintln!(
                    "p = {p}: median τ {:?}, quartiles {:?}..{:?}, {} timeouts at horizon {}",
                    s.median, s.q1, s.q3, s.timeouts, s.t_max
                );
                rows.push(CsvRow::tau(&family, p, c.seed, &s));
            }
            let report = if rows.len() >= 3 {
                let class = classify(&family, &c.search())?;
                let (t, alpha) = transform_for(&class, true)?;
                let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.p, r.statistic)).collect();
                Some(scaling_fit(&pts, t, alpha, *bound)?)
            } else {
                None
            };
            emit_rows(c, &rows, report)
        }
        Command::Verify { suite, only } => {
            let trials = c.trials.unwrap_or(100);
            let families = if *only { vec![family.clone()] } else { vec![] };
            announce(cli, &family, extra(&[("suite", serde_json::to_value(suite)?), ("trials", trials.into())]));
            let opts = VerifyOptions { trials, seed: c.seed, search: c.search(), lambda: crate::verify::DEFAULT_LAMBDA };
            let report = run_suite(*suite, &families, &opts)?;
            for (f, consts) in &report.constants {
                let list: Vec<String> = consts.iter().map(|(k, v)| format!("{k} = {v:.4}")).collect();
                eprintln!("constants {f}: {}", list.join(", "));
            }
            if c.format == Format::Json {
                write_json(c, &report)?;
            } else {
                let mut w = output(c)?;
                for l in report.lines() {
                    writeln!(w, "{l}")?;
                }
                writeln!(w, "{} {:?}: {} checks, {} failures", if report.ok() { "PASS" } else { "FAIL" }, suite, report.checks.len(), report.failures())?;
                w.flush()?;
            }
            Ok(if report.ok() { EXIT_OK } else { EXIT_FAIL })
        }
        Command::DemoGrowth => {
            let n = *or_default(&c.n, 48).first().expect("one value");
            let p = *or_default(&c.p, 0.06).first().expect("one value");
            let t_max = c.t_max.unwrap_or(1000);
            announce(cli, &family, extra(&[("n", n.into()), ("p", p.into()), ("t_max", t_max.into())]));
            let w = Window::boxed(0, 0, n - 1, n - 1);
            let a = random_set(&w, c.seed, 0, p)?;
            let times = synchronous_times(&a, &family, w.clone(), t_max, None)?;
            let mut out: Vec<(u32, Site)> = vec![];
            for y in 0..n {
                for x in 0..n {
                    let s = Site::new(x, y);
                    if let Some(t) = times.time_of(s) {
                        out.push((t, s));
                    }
                }
            }
            out.sort();
            let final_count = closure(&a, &family, w)?.count();
            eprintln!("{} initial sites, {} infected after {} frames, closure {}", a.len(), out.len(), out.last().map_or(0, |o| o.0), final_count);
            let mut wtr = csv::Writer::from_writer(output(c)?);
            wtr.write_record(["frame", "x", "y"])?;
            for (t, s) in out {
                wtr.write_record([t.to_string(), s.x.to_string(), s.y.to_string()])?;
            }
            wtr.flush()?;
            Ok(EXIT_OK)
        }
    }
}

fn or_default<T: Clone>(v: &[T], d: T) -> Vec<T> {
    if v.is_empty() {
        vec![d]
    } else {
        v.to_vec()
    }
}

fn sites(z: &[Site]) -> String {
    let v: Vec<String> = z.iter().map(|s| s.to_string()).collect();
    format!("{{{}}}", v.join(", "))
}

/// The transform matching the family's class, for `τ` or for `p_c`.
fn transform_for(class: &Classification, tau: bool) -> anyhow::Result<(Transform, u32)> {
    let alpha = class.alpha.ok_or_else(|| anyhow::anyhow!("{} has no finite α", class.family))?;
    let t = match (class.balanced == Some(true), tau) {
        (true, true) => Transform::BalancedTau,
        (false, true) => Transform::UnbalancedTau,
        (true, false) => Transform::BalancedPc,
        (false, false) => Transform::UnbalancedPc,
    };
    Ok((t, alpha))
}

#[derive(Serialize)]
struct MonteCarloReport<'a> {
    rows: &'a [CsvRow],
    #[serde(skip_serializing_if = "Option::is_none")]
    scaling: Option<ScalingReport>,
}

fn emit_rows(c: &Common, rows: &[CsvRow], scaling: Option<ScalingReport>) -> Result<i32, Failure> {
    if let Some(s) = &scaling {
        eprintln!("{:?}: transformed {:?}, spread {:.3} (bound {})", s.transform, s.transformed, s.spread, s.bound);
    }
    match c.format {
        Format::Csv => write_csv(c, rows)?,
        Format::Json => write_json(c, &MonteCarloReport { rows, scaling })?,
    }
    Ok(EXIT_OK)
}

fn classify_cmd(c: &Common, family: &UpdateFamily, expected: Option<Expected>) -> Result<i32, Failure> {
    let class = classify(family, &c.search())?;
    if c.format == Format::Json {
        write_json(c, &class)?;
    } else {
        let mut w = output(c)?;
        writeln!(w, "family: {}", class.family)?;
        writeln!(w, "kind: {}", class.kind)?;
        writeln!(w, "stable set: {}", class.stable_set)?;
        if let Some(a) = class.alpha {
            writeln!(w, "alpha: {a}{}", if class.alpha_resolved { "" } else { " (upper bound)" })?;
        }
        if let Some(b) = class.balanced {
            writeln!(w, "{}", if b { "balanced" } else { "unbalanced" })?;
        }
        if let Some(d) = class.drift {
            writeln!(w, "drift: {}", if d { "yes" } else { "no" })?;
        }
        if let Some(u) = class.u_star {
            writeln!(w, "u*: {u}")?;
        }
        for r in &class.directions {
            writeln!(w, "  u = {}: α+ = {}, α- = {}{}", r.u, r.plus, r.minus, if r.isolated { " (isolated)" } else { "" })?;
        }
        w.flush()?;
    }
    if let Some(e) = expected {
        let bad = e.mismatches(&class);
        if !bad.is_empty() {
            for b in &bad {
                eprintln!("mismatch: {b}");
            }
            return Ok(EXIT_FAIL);
        }
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct StableSetReport {
    family: String,
    stable_set: String,
    arcs: Vec<String>,
    isolated: Vec<Direction>,
    quasi_stable: Vec<Direction>,
}

fn stable_set_cmd(c: &Common, family: &UpdateFamily) -> Result<i32, Failure> {
    let s = family.stable_set();
    let r = StableSetReport {
        family: family.name().into(),
        stable_set: s.to_string(),
        arcs: s.arcs().iter().map(|a| a.to_string()).collect(),
        isolated: s.isolated_points(),
        quasi_stable: family.quasi_stable_set(),
    };
    if c.format == Format::Json {
        write_json(c, &r)?;
    } else {
        let mut w = output(c)?;
        writeln!(w, "stable set: {}", r.stable_set)?;
        let iso: Vec<String> = r.isolated.iter().map(|d| d.to_string()).collect();
        writeln!(w, "isolated: {}", iso.join(" "))?;
        let q: Vec<String> = r.quasi_stable.iter().map(|d| d.to_string()).collect();
        writeln!(w, "quasi-stable: {}", q.join(" "))?;
        w.flush()?;
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directions_parse() {
        assert_eq!(parse_direction("1,-2").unwrap(), Direction::new(1, -2).unwrap());
        assert!(parse_direction("0,0").is_err());
        assert!(parse_direction("1").is_err());
    }

    #[test]
    fn bad_usage_exits_two() {
        assert_eq!(run(vec!["ubp".into(), "frobnicate".into()]), EXIT_USAGE);
        assert_eq!(run(vec!["ubp".into(), "classify".into(), "--rules".into(), "no-such-family".into()]), EXIT_USAGE);
    }
}
