//! Command-line driver for `nholo-core`: loads a problem configuration, evaluates the
//! requested geometric objects over a point set and writes a JSON report.

pub mod checks;
pub mod config;
pub mod outputs;
pub mod report;
pub mod sample;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::checks::{geodesic_checks, point_checks, CheckResult};
use crate::config::{parse_config, GeodesicRequest, ProblemConfig};
use crate::report::{GeodesicResult, Metadata, PointReport, Report, Summary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "NHOLO_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "nholo",
    version,
    about = "N-connection geometry: compute, verify and integrate geodesics"
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Evaluate the requested outputs at every point.
    Compute(RunArgs),
    /// Evaluate the outputs and run the full property suite.
    Verify(RunArgs),
    /// Integrate the configured geodesic requests.
    Geodesic(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Problem configuration (TOML).
    config: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sampling seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Tolerance override, `name=value`; repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE", value_parser = parse_tol)]
    tol: Vec<(String, f64)>,
    /// Number of sampled points, overriding `points.count`.
    #[arg(long)]
    points: Option<usize>,
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let v: f64 = value.trim().parse().map_err(|_| format!("`{value}` is not a number"))?;
    Ok((name.trim().to_string(), v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Compute,
    Verify,
    Geodesic,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Compute => "compute",
            Command::Verify => "verify",
            Command::Geodesic => "geodesic",
        }
    }
}

/// Command-line overrides applied on top of a loaded configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub points: Option<usize>,
    pub tolerances: Vec<(String, f64)>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ProblemConfig) -> Result<(), Vec<String>> {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(k) = self.points {
            cfg.points.count = k;
        }
        let errs: Vec<String> = self
            .tolerances
            .iter()
            .filter_map(|(name, v)| cfg.tolerances.set(name, *v).err().map(|e| format!("--tol: {e}")))
            .collect();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    fn fingerprint(&self) -> String {
        let mut s = String::new();
        if let Some(seed) = self.seed {
            s.push_str(&format!("\n--seed={seed}"));
        }
        if let Some(k) = self.points {
            s.push_str(&format!("\n--points={k}"));
        }
        for (name, v) in &self.tolerances {
            s.push_str(&format!("\n--tol={name}={v:e}"));
        }
        s
    }
}

pub fn config_hash(text: &str, overrides: &Overrides) -> String {
    let digest = Sha256::digest(format!("{text}{}", overrides.fingerprint()).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Reads the thread cap from the environment; `None` means the runtime default.
pub fn thread_cap() -> Result<Option<usize>, String> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(format!("{THREADS_ENV}: {e}")),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k >= 1 => Ok(Some(k)),
            _ => Err(format!("{THREADS_ENV}: expected a positive integer, got `{v}`")),
        },
    }
}

fn evaluate_point(cfg: &ProblemConfig, index: usize, coords: &[f64], verify: bool) -> (PointReport, Vec<CheckResult>) {
    let mut report = PointReport {
        index,
        coords: coords.to_vec(),
        objects: BTreeMap::new(),
        errors: BTreeMap::new(),
    };
    let mut checks = Vec::new();
    let order = cfg
        .outputs
        .iter()
        .map(|o| o.order())
        .max()
        .unwrap_or(1)
        .max(if verify { 2 } else { 1 });
    let geo = match cfg.source.geometry().local(coords, order) {
        Ok(g) => g,
        Err(e) => {
            report.errors.insert("geometry".into(), e.to_string());
            return (report, checks);
        }
    };
    for &o in &cfg.outputs {
        match outputs::evaluate(o, cfg, &geo) {
            Ok(v) => {
                report.objects.insert(o.name(), v);
            }
            Err(e) => {
                report.errors.insert(o.name().to_string(), e);
            }
        }
    }
    if verify {
        match point_checks(cfg, &geo) {
            Ok(cs) => checks = cs,
            Err(e) => {
                report.errors.insert("verify".into(), e);
            }
        }
        for c in &mut checks {
            c.point = Some(index);
        }
    }
    (report, checks)
}

fn default_geodesics(cfg: &ProblemConfig, points: &[Vec<f64>]) -> Vec<GeodesicRequest> {
    let n = cfg.dims.n();
    points
        .iter()
        .map(|p| GeodesicRequest {
            x0: p[..n].to_vec(),
            y0: p[n..].to_vec(),
            tau_span: (0.0, 1.0),
            steps: 64,
        })
        .collect()
}

/// Runs one command on a validated configuration.
///
/// `Err` is a usage problem (exit code 1); numeric failures are recorded in the report.
pub fn execute(
    command: Command,
    cfg: &ProblemConfig,
    config_hash: String,
    threads: Option<usize>,
) -> Result<Report, String> {
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| format!("thread pool: {e}"))?;
    let lagrangian = cfg.source.lagrange().is_some();

    let (points, requests) = match command {
        Command::Geodesic => {
            if !lagrangian {
                return Err("geodesic: needs lagrangian mode".into());
            }
            if cfg.geodesics.is_empty() {
                return Err("geodesic: no [[geodesic]] requests in the configuration".into());
            }
            (Vec::new(), cfg.geodesics.clone())
        }
        Command::Compute => (sample::evaluation_points(cfg)?, Vec::new()),
        Command::Verify => {
            let pts = sample::evaluation_points(cfg)?;
            let reqs = match (lagrangian, cfg.geodesics.is_empty()) {
                (false, _) => Vec::new(),
                (true, false) => cfg.geodesics.clone(),
                (true, true) => default_geodesics(cfg, &pts),
            };
            (pts, reqs)
        }
    };
    if command != Command::Geodesic && points.is_empty() {
        return Err("no evaluation points: give points.explicit or points.count (or --points)".into());
    }

    let verify = command == Command::Verify;
    let (evaluated, geodesics): (
        Vec<(PointReport, Vec<CheckResult>)>,
        Vec<(GeodesicResult, Vec<CheckResult>)>,
    ) = pool.install(|| {
        let pts = points
            .par_iter()
            .enumerate()
            .map(|(k, p)| evaluate_point(cfg, k, p, verify))
            .collect();
        let geos = requests.par_iter().map(|r| geodesic_checks(cfg, r)).collect();
        (pts, geos)
    });

    let mut checks = Vec::new();
    let mut point_reports = Vec::with_capacity(evaluated.len());
    for (p, cs) in evaluated {
        point_reports.push(p);
        checks.extend(cs);
    }
    let mut geodesic_results = Vec::with_capacity(geodesics.len());
    for (k, (g, cs)) in geodesics.into_iter().enumerate() {
        geodesic_results.push(g);
        checks.extend(cs.into_iter().map(|c| CheckResult { geodesic: Some(k), ..c }));
    }

    let mut report = Report {
        metadata: Metadata {
            tool: "nholo",
            version: env!("CARGO_PKG_VERSION"),
            command: command.name().to_string(),
            config_hash,
            mode: cfg.mode.name(),
            dims: [cfg.dims.n(), cfg.dims.m()],
            seed: cfg.seed,
            tolerances: cfg.tolerances.iter().collect(),
            wall_time_s: 0.0,
        },
        points: point_reports,
        geodesics: geodesic_results,
        checks,
        summary: Summary {
            points: 0,
            checks: 0,
            failed_checks: 0,
            errors: 0,
            exit_code: EXIT_OK,
        },
    };
    let (errors, failed) = (report.error_count(), report.failed_checks());
    report.summary = Summary {
        points: report.points.len(),
        checks: report.checks.len(),
        failed_checks: failed,
        errors,
        exit_code: if errors > 0 {
            EXIT_NUMERIC
        } else if failed > 0 {
            EXIT_VERIFY
        } else {
            EXIT_OK
        },
    };
    report.metadata.wall_time_s = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Entry point shared by the binary and the tests; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (command, args) = match cli.command {
        CliCommand::Compute(a) => (Command::Compute, a),
        CliCommand::Verify(a) => (Command::Verify, a),
        CliCommand::Geodesic(a) => (Command::Geodesic, a),
    };
    let usage = |msg: &str| {
        eprintln!("nholo: {msg}");
        EXIT_USAGE
    };

    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => return usage(&format!("cannot read {}: {e}", args.config.display())),
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(errs) => {
            for e in &errs.0 {
                eprintln!("{}: {e}", args.config.display());
            }
            return EXIT_USAGE;
        }
    };
    let overrides = Overrides {
        seed: args.seed,
        points: args.points,
        tolerances: args.tol,
    };
    if let Err(errs) = overrides.apply(&mut cfg) {
        return usage(&errs.join("\n"));
    }
    let threads = match thread_cap() {
        Ok(t) => t,
        Err(e) => return usage(&e),
    };

    let report = match execute(command, &cfg, config_hash(&text, &overrides), threads) {
        Ok(r) => r,
        Err(e) => return usage(&e),
    };
    let json = match serde_json::to_string_pretty(&report) {
        Ok(j) => j,
        Err(e) => return usage(&format!("cannot serialize the report: {e}")),
    };
    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, json + "\n") {
                return usage(&format!("cannot write {}: {e}", path.display()));
            }
        }
        None => println!("{json}"),
    }
    for c in report.checks.iter().filter(|c| !c.pass) {
        let at = match (c.point, c.geodesic) {
            (Some(p), _) => format!(" at point {p}"),
            (_, Some(g)) => format!(" on geodesic {g}"),
            _ => String::new(),
        };
        eprintln!(
            "FAIL {}{at}: residual {:e} > tolerance {:e}",
            c.name, c.residual, c.tolerance
        );
    }
    for p in &report.points {
        for (what, e) in &p.errors {
            eprintln!("error at point {} ({what}): {e}", p.index);
        }
    }
    for (k, g) in report.geodesics.iter().enumerate() {
        if let Some(e) = &g.error {
            eprintln!("error on geodesic {k}: {e}");
        }
    }
    report.summary.exit_code
}
