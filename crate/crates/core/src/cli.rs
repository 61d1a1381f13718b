//! `dualmass` command line: argument parsing, output files and exit codes.
//!
//! Exit codes: 0 success, 1 computation failure or failed verify check,
//! 2 verify suite inconclusive, 3 no root of the prescribed-mass problem,
//! 64 usage or configuration error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::asymptotics::{mass_limit_ratios, supnorm_band, Regime};
use crate::branch::{classify_regime, mass_map, roots_json, solve_prescribed_mass, trace_branch};
use crate::error::{Error, Result};
use crate::verify::{run_suite, RunConfig, Suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_NO_ROOT: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "dualmass", version, about = "Ground-state branches and normalized solutions of the dual quasilinear Schrödinger equation")]
pub struct Cli {
    /// JSON run configuration (defaults to the built-in reference model).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output` in the config; default ".").
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_parser = positive_count)]
    pub threads: Option<usize>,
    /// Multiplies the ODE and bisection tolerances.
    #[arg(long = "tol-scale", global = true, value_parser = positive_real)]
    pub tol_scale: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Shoot the ground state at one λ; writes profile.csv and profile.json.
    GroundState {
        #[arg(long, value_parser = positive_real)]
        lambda: f64,
    },
    /// Trace the branch over the sweep; writes branch.csv and mass_map.json.
    Branch,
    /// Solve ρ(λ) = c; writes roots.json and root_<k>.csv/json, or no_root.json.
    Normalize {
        #[arg(long, value_parser = positive_real)]
        c: f64,
    },
    /// Mass-law and sup-norm reports at either end of the branch.
    Asymptotics {
        #[arg(long, value_enum, default_value = "both")]
        regime: RegimeArg,
    },
    /// Case table entry, thresholds and expected root counts.
    Classify,
    /// Run the invariant battery; writes verdict.json.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Small,
    Large,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    All,
    Models,
    Solver,
    Asymptotics,
    Branch,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::All => Suite::All,
            SuiteArg::Models => Suite::Models,
            SuiteArg::Solver => Suite::Solver,
            SuiteArg::Asymptotics => Suite::Asymptotics,
            SuiteArg::Branch => Suite::Branch,
        }
    }
}

fn positive_real(s: &str) -> std::result::Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("expected a finite number > 0, got {s}"))
    }
}

fn positive_count(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("expected a positive integer, got {s}")),
    }
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let config = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let out = cli.out.clone().or_else(|| config.output.clone()).unwrap_or_else(|| PathBuf::from("."));
    if let Err(e) = std::fs::create_dir_all(&out) {
        eprintln!("error: cannot create {}: {e}", out.display());
        return EXIT_FAILURE;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    match pool.install(|| dispatch(&cli.command, &config, &out)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidConfig(_) | Error::InvalidModel(_) | Error::Domain { .. } => EXIT_USAGE,
                _ => EXIT_FAILURE,
            }
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(|e| match e {
            Error::Io(io) => Error::InvalidConfig(format!("{}: {io}", p.display())),
            other => other,
        })?,
        None => RunConfig::reference(),
    };
    if let Some(s) = cli.tol_scale {
        cfg.shooting = cfg.shooting.with_tol_scale(s);
        cfg.shooting.validate()?;
    }
    Ok(cfg)
}

fn dispatch(cmd: &Command, cfg: &RunConfig, out: &Path) -> Result<i32> {
    match *cmd {
        Command::GroundState { lambda } => cmd_ground_state(cfg, lambda, out),
        Command::Branch => cmd_branch(cfg, out),
        Command::Normalize { c } => cmd_normalize(cfg, c, out),
        Command::Asymptotics { regime } => cmd_asymptotics(cfg, regime, out),
        Command::Classify => cmd_classify(cfg, out),
        Command::Verify { suite } => cmd_verify(cfg, suite.into(), out),
    }
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>> {
    log::info!("writing {}", out.join(name).display());
    Ok(BufWriter::new(File::create(out.join(name))?))
}

fn write_text(out: &Path, name: &str, text: &str) -> Result<()> {
    let mut w = create(out, name)?;
    w.write_all(text.as_bytes())?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Result<()> {
    write_text(out, name, &serde_json::to_string_pretty(value)?)
}

pub fn cmd_ground_state(cfg: &RunConfig, lambda: f64, out: &Path) -> Result<i32> {
    let p = crate::radial::shoot_ground_state(&cfg.model, lambda, &cfg.shooting)?;
    let mut w = create(out, "profile.csv")?;
    p.write_csv(&mut w)?;
    w.flush()?;
    write_text(out, "profile.json", &p.sidecar_json()?)?;
    Ok(EXIT_OK)
}

pub fn cmd_branch(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let b = trace_branch(&cfg.model, &cfg.sweep, &cfg.shooting)?;
    let mut w = create(out, "branch.csv")?;
    b.write_csv(&mut w)?;
    w.flush()?;
    for f in &b.failures {
        log::warn!("point λ = {:e} failed: {}", f.lambda, f.message);
    }
    b.require_complete()?;
    write_json(out, "mass_map.json", &mass_map(&b, &cfg.shooting)?)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct NoRoot<'a> {
    c: f64,
    verdict: &'a str,
    case: &'a str,
    rho_min: f64,
    rho_max: f64,
}

pub fn cmd_normalize(cfg: &RunConfig, c: f64, out: &Path) -> Result<i32> {
    let b = trace_branch(&cfg.model, &cfg.sweep, &cfg.shooting)?;
    b.require_complete()?;
    match solve_prescribed_mass(&cfg.model, c, &b, &cfg.shooting) {
        Ok(roots) => {
            let mut paths = Vec::with_capacity(roots.len());
            for (k, r) in roots.iter().enumerate() {
                let name = format!("root_{}", k + 1);
                let mut w = create(out, &format!("{name}.csv"))?;
                r.profile.write_csv(&mut w)?;
                w.flush()?;
                write_text(out, &format!("{name}.json"), &r.profile.sidecar_json()?)?;
                paths.push(format!("{name}.csv"));
            }
            write_text(out, "roots.json", &roots_json(&roots, &paths)?)?;
            println!("{} root(s) of rho(lambda) = {c:e}", roots.len());
            Ok(EXIT_OK)
        }
        Err(Error::NoRootInBranch { c, verdict }) => {
            let class = classify_regime(&cfg.model, &cfg.shooting)?;
            let (rho_min, rho_max) = b.rho_range();
            let payload = NoRoot { c, verdict: &verdict, case: class.case_id.as_str(), rho_min, rho_max };
            write_json(out, "no_root.json", &payload)?;
            eprintln!("no root of rho(lambda) = {c:e}: {verdict}");
            Ok(EXIT_NO_ROOT)
        }
        Err(e) => Err(e),
    }
}

pub fn cmd_asymptotics(cfg: &RunConfig, regime: RegimeArg, out: &Path) -> Result<i32> {
    let regimes: &[Regime] = match regime {
        RegimeArg::Small => &[Regime::SmallLambda],
        RegimeArg::Large => &[Regime::LargeLambda],
        RegimeArg::Both => &[Regime::SmallLambda, Regime::LargeLambda],
    };
    let b = trace_branch(&cfg.model, &cfg.sweep, &cfg.shooting)?;
    b.require_complete()?;
    for &r in regimes {
        let report = mass_limit_ratios(&b, &cfg.model, r, &cfg.shooting)?;
        let mut w = create(out, &format!("asymptotics_{}.csv", r.as_str()))?;
        report.write_csv(&mut w)?;
        w.flush()?;
        let pts: Vec<(f64, f64)> = report
            .rows
            .iter()
            .filter_map(|row| b.points.iter().find(|p| p.lambda == row.lambda).map(|p| (p.lambda, p.sup_norm)))
            .collect();
        let band = supnorm_band(&pts, r.exponent(&cfg.model), r)?;
        write_json(out, &format!("supnorm_band_{}.json", r.as_str()), &band)?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_classify(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let class = classify_regime(&cfg.model, &cfg.shooting)?;
    let json = class.to_json()?;
    write_text(out, "classification.json", &json)?;
    println!("{json}");
    Ok(EXIT_OK)
}

pub fn cmd_verify(cfg: &RunConfig, suite: Suite, out: &Path) -> Result<i32> {
    let verdict = run_suite(cfg, suite);
    write_json(out, "verdict.json", &verdict)?;
    for c in &verdict.checks {
        println!("{:<13} {}", format!("{:?}", c.status).to_uppercase(), c.id);
    }
    Ok(verdict.exit_code)
}
