//! Command-line driver: `verify`, `chern` and `evolve`.
//!
//! Exit codes: 0 when every check passes, 1 when an identity fails or the
//! solver does not converge, 2 on a usage error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::dynamics::{ehrenfest, evolve, EvolutionConfig, Preset};
use crate::error::{Error, Result};
use crate::geometry::{chern_on_sphere, Orientation};
use crate::hilbert::Lattice;
use crate::report::{Check, Report};
use crate::suites::{self, Controls, Suite, SuiteConfig};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qmonopole", version, about = "Quaternionic quantum mechanics of a Dirac monopole")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a randomized identity suite.
    Verify(VerifyArgs),
    /// Integrate the curvature over a sphere and tabulate convergence.
    Chern(ChernArgs),
    /// Evolve a wave packet and check the Ehrenfest relations.
    Evolve(EvolveArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// algebra, geometry, operators, splitting or gis
    pub suite: Suite,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Lattice points per axis.
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    /// Half-width of the lattice box.
    #[arg(long = "box", default_value_t = 6.0)]
    pub half_width: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Write the JSON report here (`-` for stdout).
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Negative control: reverse the multiplication order.
    #[arg(long)]
    pub flipped_table: bool,
    /// Negative control: transport with the uncorrected cosine radicand.
    #[arg(long)]
    pub uncorrected_transport: bool,
}

#[derive(Debug, Args)]
pub struct ChernArgs {
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// Finest grid (intervals in θ and φ); the table halves down to 8.
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Convergence table as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    /// free-limit, static or flyby
    #[arg(long, default_value = "free-limit")]
    pub preset: Preset,
    #[arg(long)]
    pub mass: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "box")]
    pub half_width: Option<f64>,
    /// Relative tolerance of the linear solve in each step.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Trajectory CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command,
/// writing human-readable output to `out` and diagnostics to `err`.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
            } else {
                let _ = write!(out, "{}", e.render());
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Chern(a) => cmd_chern(&a, out),
        Command::Evolve(a) => cmd_evolve(&a, out),
    };
    match result {
        Ok(report) => match report.worst_failure() {
            None => EXIT_PASS,
            Some(c) => {
                let _ = writeln!(err, "FAIL {}: max deviation {:e} exceeds tolerance {:e}", c.name, c.max_dev, c.tol);
                EXIT_FAIL
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::Usage(_) => EXIT_USAGE,
                _ => EXIT_FAIL,
            }
        }
    }
}

pub fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<Report> {
    let cfg = SuiteConfig {
        seed: a.seed,
        samples: a.samples,
        tol: a.tol,
        lattice: Lattice::new(a.n, a.half_width)?,
        controls: Controls { flipped_table: a.flipped_table, uncorrected_transport: a.uncorrected_transport },
    };
    let report = suites::run(a.suite, &cfg)?;
    writeln!(out, "{}", report.summary())?;
    emit_json(&report, a.json.as_deref(), out)?;
    Ok(report)
}

/// One row of the Chern convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChernRow {
    pub n: usize,
    pub value: f64,
    pub error: f64,
    /// Error ratio to the next coarser grid.
    pub ratio: Option<f64>,
}

pub fn chern_table(radius: f64, finest: usize) -> Result<Vec<ChernRow>> {
    if finest < 8 || finest % 2 != 0 {
        return Err(Error::Usage(format!("grid must be even and at least 8 (got {finest})")));
    }
    let mut grids = vec![finest];
    while grids.last().is_some_and(|&g| g / 2 >= 8 && (g / 2) % 2 == 0) {
        grids.push(grids.last().unwrap() / 2);
    }
    grids.reverse();
    let mut rows: Vec<ChernRow> = Vec::with_capacity(grids.len());
    for n in grids {
        let value = chern_on_sphere(radius, Orientation::Outward, n, n)?;
        let error = (value - 2.0 * std::f64::consts::PI).abs();
        let ratio = rows.last().map(|p| p.error / error);
        rows.push(ChernRow { n, value, error, ratio });
    }
    Ok(rows)
}

pub fn cmd_chern(a: &ChernArgs, out: &mut dyn Write) -> Result<Report> {
    if !(a.radius > 0.0) {
        return Err(Error::Usage(format!("radius must be positive (got {})", a.radius)));
    }
    let rows = chern_table(a.radius, a.n)?;
    let best = *rows.last().expect("at least one grid");
    writeln!(out, "chern integral (r = {}): {:.15}", a.radius, best.value)?;
    writeln!(out, "error vs 2π: {:e}", best.error)?;
    writeln!(out, "{:>6}  {:>20}  {:>12}  {:>8}", "n", "value", "error", "ratio")?;
    for r in &rows {
        let ratio = r.ratio.map_or("-".to_string(), |x| format!("{x:.2}"));
        writeln!(out, "{:>6}  {:>20.15}  {:>12.3e}  {:>8}", r.n, r.value, r.error, ratio)?;
    }
    if let Some(path) = &a.out {
        let mut w = create(path)?;
        writeln!(w, "n,value,error,ratio")?;
        for r in &rows {
            writeln!(w, "{},{:e},{:e},{}", r.n, r.value, r.error, r.ratio.map_or(String::new(), |x| format!("{x:e}")))?;
        }
        w.flush()?;
    }

    let mut report = Report::new("chern", 0, rows.len());
    report.push(Check::from_deviations("chern_value", "∫ iF over S² = 2π", &[best.error], a.tol));
    // order from the coarse end, before rounding dominates
    if let Some(r) = rows.iter().find(|r| r.ratio.is_some() && r.error > 1e-11) {
        let order = r.ratio.unwrap().log2();
        report.push(Check::from_deviations("chern_order", "observed order 4", &[(order - 4.0).abs()], 0.5));
    }
    emit_json(&report, a.json.as_deref(), out)?;
    Ok(report)
}

pub fn evolution_config(a: &EvolveArgs) -> Result<EvolutionConfig> {
    let mut cfg = EvolutionConfig::preset(a.preset);
    if let Some(m) = a.mass {
        cfg.mass = m;
    }
    if let Some(dt) = a.dt {
        cfg.dt = dt;
    }
    if let Some(s) = a.steps {
        cfg.steps = s;
    }
    if let Some(t) = a.tol {
        cfg.solver_tol = t;
    }
    if a.n.is_some() || a.half_width.is_some() {
        let n = a.n.unwrap_or(cfg.lattice.n());
        let l = a.half_width.unwrap_or(cfg.lattice.half_width());
        cfg.lattice = Lattice::new(n, l)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn cmd_evolve(a: &EvolveArgs, out: &mut dyn Write) -> Result<Report> {
    let cfg = evolution_config(a)?;
    let (traj, _) = evolve(&cfg)?;
    if let Some(path) = &a.out {
        let mut w = create(path)?;
        traj.write_csv(&mut w)?;
        w.flush()?;
    }
    let report = ehrenfest(&traj, &a.preset.tolerances());
    writeln!(out, "{}", report.summary())?;
    emit_json(&report, a.json.as_deref(), out)?;
    Ok(report)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn emit_json(report: &Report, path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let Some(path) = path else { return Ok(()) };
    let json = report.to_json()?;
    if path == Path::new("-") {
        writeln!(out, "{json}")?;
    } else {
        let mut w = create(path)?;
        writeln!(w, "{json}")?;
        w.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let argv = std::iter::once("qmonopole").chain(args.iter().copied());
        let code = run_with(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(&["verify", "nonsense"]).0, EXIT_USAGE);
        assert_eq!(run(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run(&["verify", "algebra", "--samples", "0"]).0, EXIT_USAGE);
        assert_eq!(run(&["chern", "--n", "7"]).0, EXIT_USAGE);
        assert_eq!(run(&["evolve", "--mass", "-1", "--steps", "0"]).0, EXIT_USAGE);
    }

    #[test]
    fn flipped_table_exits_1_naming_the_offender() {
        let (code, _, err) = run(&["verify", "algebra", "--samples", "50", "--flipped-table"]);
        assert_eq!(code, EXIT_FAIL);
        assert!(err.contains("FAIL multiplication_table") || err.contains("FAIL su2_homomorphism"), "{err}");
    }

    #[test]
    fn chern_table_converges() {
        let rows = chern_table(1.0, 128).unwrap();
        assert_eq!(rows.first().unwrap().n, 8);
        assert_eq!(rows.last().unwrap().n, 128);
        let r = rows[2].ratio.unwrap();
        assert!((r.log2() - 4.0).abs() < 0.3, "ratio {r}");
        let (code, out, _) = run(&["chern", "--radius", "7"]);
        assert_eq!(code, EXIT_PASS);
        assert!(out.contains("6.2831853"), "{out}");
    }

    #[test]
    fn help_exits_0() {
        assert_eq!(run(&["--help"]).0, EXIT_PASS);
    }
}
