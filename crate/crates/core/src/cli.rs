//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 invalid config,
//! snapshot or I/O, 3 constraint violation, 4 trajectory or reconstruction
//! failure (node, pole, step, Jacobian, winding).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::checks::{run_suite, Check};
use crate::error::{Error, Result};
use crate::eulerian::SpectralField;
use crate::io::{write_trajectory_table, FieldSnapshot, RunConfig};
use crate::lagrangian::trace_ensemble;
use crate::reconstruct::{compare, reconstruct, reference_spinor, ErrorReport, ReconstructedState};

/// Marker left in an output directory until a command finishes cleanly.
pub const SENTINEL: &str = "_INCOMPLETE";

#[derive(Debug, Parser)]
#[command(
    name = "emhydro",
    version,
    about = "Trajectory simulation of electromagnetic fields on R^3 x SO(3)"
)]
pub struct Cli {
    /// Worker threads for ensemble work. Results do not depend on this.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated times. A trailing `T` means a multiple of the period,
    /// e.g. `0,0.25T,0.5T`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub times: Option<Vec<String>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write field snapshots at the requested times.
    Evolve(RunArgs),
    /// Integrate the label lattice and write `trajectories.csv`. With
    /// `--times`, the last time replaces the ensemble's final time.
    Trace(RunArgs),
    /// Rebuild the field from trajectories and report errors against the
    /// exact evolution.
    Reconstruct(RunArgs),
    /// Run the invariant suite. Defaults to the plane-wave demo config.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Snapshot files to read and check for transversality before the
        /// suite runs.
        #[arg(long)]
        snapshot: Vec<PathBuf>,
    },
    /// Compare two snapshots of the same grid.
    Compare {
        reference: PathBuf,
        candidate: PathBuf,
        /// Ignore points where the reference energy density is below this
        /// fraction of its maximum.
        #[arg(long)]
        mask: Option<f64>,
        /// Exit 1 when the relative L2 error exceeds this.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Run the plane-wave example end to end.
    DemoPlanewave {
        #[arg(long, default_value = "planewave-demo")]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        times: Option<Vec<String>>,
    },
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_) | Error::Snapshot(_) | Error::Io(_) | Error::ShapeMismatch { .. } => 2,
        Error::ConstraintViolation(_) => 3,
        Error::PoleSingularity { .. }
        | Error::NodeTooClose { .. }
        | Error::StepTooLarge { .. }
        | Error::DegenerateJacobian { .. }
        | Error::NonIntegerWinding { .. } => 4,
    }
}

/// Parse `0.5`, `0.25T` style times against `period`.
pub fn parse_times(items: &[String], period: f64) -> Result<Vec<f64>> {
    items
        .iter()
        .map(|s| {
            let s = s.trim();
            let (num, scale) = match s.strip_suffix(['T', 't']) {
                Some(rest) if rest.is_empty() => ("1", period),
                Some(rest) => (rest, period),
                None => (s, 1.0),
            };
            let v: f64 = num
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad time '{s}'")))?;
            if !v.is_finite() {
                return Err(Error::InvalidConfig(format!("bad time '{s}'")));
            }
            Ok(v * scale)
        })
        .collect()
}

/// Parse arguments from the process and run.
pub fn main() -> ExitCode {
    run(Cli::parse())
}

pub fn run(cli: Cli) -> ExitCode {
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        // Fails only if the pool already exists, e.g. when called twice in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn dispatch(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Evolve(args) => {
            let (cfg, out) = load(&args)?;
            in_output_dir(&out, || cmd_evolve(&cfg, &out))
        }
        Command::Trace(args) => {
            let (cfg, out) = load(&args)?;
            let t_final = args.times.as_ref().and(cfg.times.last().copied());
            in_output_dir(&out, || cmd_trace(&cfg, &out, t_final))
        }
        Command::Reconstruct(args) => {
            let (cfg, out) = load(&args)?;
            in_output_dir(&out, || cmd_reconstruct(&cfg, &out))
        }
        Command::Verify { config, out, snapshot } => {
            let cfg = match &config {
                Some(p) => RunConfig::load(p)?,
                None => RunConfig::plane_wave_demo(),
            };
            for p in &snapshot {
                let s = FieldSnapshot::read(p).map_err(|e| Error::Snapshot(format!("{}: {e}", p.display())))?;
                SpectralField::from_spinor(&s.spinor, s.consts)?;
                println!(
                    "PASS snapshot.read({}) t = {} dims = {:?} transverse",
                    p.display(),
                    s.t,
                    s.grid().dims
                );
            }
            match out {
                Some(out) => in_output_dir(&out, || cmd_verify(&cfg, Some(&out))),
                None => cmd_verify(&cfg, None),
            }
        }
        Command::Compare {
            reference,
            candidate,
            mask,
            tolerance,
        } => cmd_compare(&reference, &candidate, mask, tolerance),
        Command::DemoPlanewave { out, times } => {
            let mut cfg = RunConfig::plane_wave_demo();
            if let Some(times) = times {
                cfg.times = parse_times(&times, cfg.period())?;
            }
            in_output_dir(&out, || cmd_demo(&cfg, &out))
        }
    }
}

fn load(args: &RunArgs) -> Result<(RunConfig, PathBuf)> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(times) = &args.times {
        cfg.times = parse_times(times, cfg.period())?;
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| Error::InvalidConfig("no output directory: pass --out or set `output`".into()))?;
    Ok((cfg, out))
}

/// Run `body` with the sentinel present in `out`; it is removed only on exit code 0.
fn in_output_dir(out: &Path, body: impl FnOnce() -> Result<u8>) -> Result<u8> {
    fs::create_dir_all(out)?;
    let marker = out.join(SENTINEL);
    fs::write(&marker, "incomplete\n")?;
    let code = body()?;
    if code == 0 {
        fs::remove_file(&marker)?;
    }
    Ok(code)
}

fn snapshot_name(prefix: &str, i: usize) -> String {
    format!("{prefix}_{i:03}.emh")
}

fn cmd_evolve(cfg: &RunConfig, out: &Path) -> Result<u8> {
    let field = cfg.build_field()?;
    let mut index = String::from("file,t\n");
    for (i, &t) in cfg.times.iter().enumerate() {
        let snap = FieldSnapshot {
            t,
            consts: cfg.constants,
            spinor: field.to_grid(t),
        };
        let name = snapshot_name("field", i);
        snap.write(&out.join(&name))?;
        let _ = writeln!(index, "{name},{t}");
        println!("wrote {} (t = {t})", out.join(&name).display());
    }
    fs::write(out.join("snapshots.csv"), index)?;
    Ok(0)
}

fn cmd_trace(cfg: &RunConfig, out: &Path, t_final: Option<f64>) -> Result<u8> {
    let field = cfg.build_field()?;
    let mut spec = cfg
        .ensemble
        .clone()
        .ok_or_else(|| Error::InvalidConfig("trace needs an [ensemble] section".into()))?;
    if let Some(t) = t_final {
        spec.t_final = t;
    }
    let trajs = trace_ensemble(&field, &spec, cfg.trace.record_every)?;
    let path = out.join("trajectories.csv");
    write_trajectory_table(&path, &trajs, &cfg.constants)?;
    println!("wrote {} ({} labels)", path.display(), trajs.len());
    let mut first_error = None;
    for (i, tr) in trajs.iter().enumerate() {
        if let Some(e) = &tr.error {
            let a = tr.label.theta0.to_array();
            eprintln!(
                "label {i} q0 = ({}, {}, {}) theta0 = ({}, {}, {}): {e}",
                tr.label.q0.x, tr.label.q0.y, tr.label.q0.z, a[0], a[1], a[2]
            );
            first_error.get_or_insert_with(|| e.clone());
        }
    }
    match first_error {
        Some(e) => {
            eprintln!(
                "{} of {} labels failed",
                trajs.iter().filter(|t| !t.ok()).count(),
                trajs.len()
            );
            Ok(exit_code(&e))
        }
        None => Ok(0),
    }
}

fn report_block(out: &mut String, state: &ReconstructedState, r: &ErrorReport, mask: Option<f64>) {
    let _ = writeln!(out, "t = {}", state.t);
    let _ = writeln!(out, "spinor_l2 = {:e}", r.spinor_l2);
    let _ = writeln!(out, "e_l2 = {:e}", r.e_l2);
    let _ = writeln!(out, "b_l2 = {:e}", r.b_l2);
    let _ = writeln!(out, "e_max = {:e}", r.e_max);
    let _ = writeln!(out, "b_max = {:e}", r.b_max);
    let _ = writeln!(out, "energy = {:e}", r.energy);
    let _ = writeln!(out, "divergence = {:e}", r.divergence);
    let _ = writeln!(out, "global_phase = {:e}", r.phase);
    let _ = writeln!(out, "points = {}", r.points);
    let _ = writeln!(out, "mask = {}", mask.map_or("none".to_string(), |m| m.to_string()));
    let _ = writeln!(out, "queries = {}", state.psi.len());
    let _ = writeln!(out, "failures = {}", state.failures);
    let _ = writeln!(out, "max_inversion_residual = {:e}", state.max_inversion_residual);
    let _ = writeln!(out, "min_deformation = {:e}", state.min_d);
    let _ = writeln!(out, "max_deformation = {:e}", state.max_d);
    let _ = writeln!(out, "max_log_density_mismatch = {:e}", state.max_log_d_mismatch);
    let _ = writeln!(out, "max_cofactor_error = {:e}", state.max_cofactor_error);
    let _ = writeln!(out, "gauge_f_t = {:e}", state.f_t);
}

/// Reconstruct at every configured time; returns the report text and the worst spinor error.
pub fn reconstruct_all(field: &SpectralField, cfg: &RunConfig, out: &Path) -> Result<(String, f64)> {
    let settings = &cfg.reconstruction;
    let rcfg = settings.to_config();
    let k = cfg.constants;
    let mut text = String::new();
    let _ = writeln!(text, "quadrature = {:?}", settings.quadrature);
    let _ = writeln!(text, "dt = {}", settings.dt);
    let _ = writeln!(text, "density = {:?}", settings.density);
    let _ = writeln!(text, "offset = {:?}", settings.offset);
    let mut worst = 0.0f64;
    for (i, &t) in cfg.times.iter().enumerate() {
        let state = reconstruct(field, t, &rcfg)?;
        let reference = reference_spinor(field, t, &state.points);
        let report = compare(&reference, &state.spinor, &k, settings.mask)?;
        worst = worst.max(report.spinor_l2);
        FieldSnapshot {
            t,
            consts: k,
            spinor: state.spinor.clone(),
        }
        .write(&out.join(snapshot_name("reconstructed", i)))?;
        FieldSnapshot {
            t,
            consts: k,
            spinor: reference,
        }
        .write(&out.join(snapshot_name("reference", i)))?;
        let _ = writeln!(text, "\n[{i}]");
        report_block(&mut text, &state, &report, settings.mask);
        println!(
            "t = {t}: spinor_l2 = {:.3e} e_l2 = {:.3e} b_l2 = {:.3e} failures = {}",
            report.spinor_l2, report.e_l2, report.b_l2, state.failures
        );
    }
    Ok((text, worst))
}

fn cmd_reconstruct(cfg: &RunConfig, out: &Path) -> Result<u8> {
    let field = cfg.build_field()?;
    let (text, _) = reconstruct_all(&field, cfg, out)?;
    fs::write(out.join("report.txt"), text)?;
    println!("wrote {}", out.join("report.txt").display());
    Ok(0)
}

fn print_checks(checks: &[Check]) -> String {
    let mut text = String::new();
    for c in checks {
        println!("{c}");
        let _ = writeln!(text, "{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    let summary = format!("{} checks, {failed} failed", checks.len());
    println!("{summary}");
    let _ = writeln!(text, "{summary}");
    text
}

fn cmd_verify(cfg: &RunConfig, out: Option<&Path>) -> Result<u8> {
    let checks = run_suite(cfg)?;
    let text = print_checks(&checks);
    if let Some(out) = out {
        fs::write(out.join("verify.txt"), text)?;
    }
    Ok(if checks.iter().all(Check::passed) { 0 } else { 1 })
}

fn cmd_compare(reference: &Path, candidate: &Path, mask: Option<f64>, tolerance: Option<f64>) -> Result<u8> {
    let a = FieldSnapshot::read(reference)?;
    let b = FieldSnapshot::read(candidate)?;
    if a.consts != b.consts {
        return Err(Error::InvalidConfig("snapshots use different constants".into()));
    }
    let r = compare(&a.spinor, &b.spinor, &a.consts, mask)?;
    println!("t_reference = {}", a.t);
    println!("t_candidate = {}", b.t);
    println!("spinor_l2 = {:e}", r.spinor_l2);
    println!("e_l2 = {:e}", r.e_l2);
    println!("b_l2 = {:e}", r.b_l2);
    println!("e_max = {:e}", r.e_max);
    println!("b_max = {:e}", r.b_max);
    println!("energy = {:e}", r.energy);
    println!("divergence = {:e}", r.divergence);
    println!("global_phase = {:e}", r.phase);
    println!("points = {}", r.points);
    Ok(match tolerance {
        Some(tol) if !(r.spinor_l2 <= tol) => 1,
        _ => 0,
    })
}

fn cmd_demo(cfg: &RunConfig, out: &Path) -> Result<u8> {
    fs::write(out.join("config.toml"), cfg.to_toml())?;
    let mut code = cmd_evolve(cfg, out)?;
    code = code.max(cmd_trace(cfg, out, None)?);
    code = code.max(cmd_reconstruct(cfg, out)?);
    let checks = run_suite(cfg)?;
    fs::write(out.join("verify.txt"), print_checks(&checks))?;
    if !checks.iter().all(Check::passed) {
        code = code.max(1);
    }
    Ok(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn times_accept_period_multiples() {
        let items: Vec<String> = ["0", "0.25T", "T", "1.5"].iter().map(|s| s.to_string()).collect();
        assert_eq!(parse_times(&items, 2.0).unwrap(), vec![0.0, 0.5, 2.0, 1.5]);
        assert!(parse_times(&["x".to_string()], 1.0).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Snapshot("x".into())), 2);
        assert_eq!(exit_code(&Error::ConstraintViolation("x".into())), 3);
        assert_eq!(
            exit_code(&Error::NodeTooClose {
                density: 0.0,
                threshold: 1.0
            }),
            4
        );
    }
}
