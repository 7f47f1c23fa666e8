//! Command-line front end of the `amalgam` binary.
//!
//! Exit codes: 0 when every verdict passes, 1 on a failed verdict or a
//! numerical failure, 2 when a hypothesis is rejected, 3 on malformed input.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::covering::{covering_trials, RandomFamilySpec, SelectionRule};
use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::function::FunctionSpec;
use crate::harness::{run_scenario, RunOptions, Scenario, Verdict, VerificationReport};
use crate::measure::{MeasureSpec, RadonMeasure};
use crate::norms::{amalgam_norm, ScaleSearch};
use crate::operators::maximal::{maximal, MaximalQuery};
use crate::operators::{potential, Kernel, KernelSpec};
use crate::weights::{a_r_constant, IntervalFamily, WeightSpec};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_HYPOTHESIS: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "amalgam", version, about = "Norms, operators and inequality checks over non-doubling measures on the line")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Amalgam norm ‖f‖_{q,p,α}.
    Norm(NormArgs),
    /// Fractional maximal function at a point.
    Maximal(MaximalArgs),
    /// Potential Kf at a point.
    Potential(PotentialArgs),
    /// A_r constant of a weight over the standard interval family.
    Weight(WeightArgs),
    /// Random covering trials; exits 0 iff the overlap bound holds.
    Cover(CoverArgs),
    /// Runs one scenario and writes report.json and report.csv.
    Verify(VerifyArgs),
    /// Runs several scenarios (files or directories of *.json).
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// `lebesgue` or `power:<a>`.
    #[arg(long, default_value = "lebesgue", value_parser = parse_measure)]
    pub measure: MeasureSpec,
    /// e.g. `indicator:0:1`, `tent:0:1`, `power:-0.5:0:1`, `riesz:0.5:-1:1`.
    #[arg(long, value_parser = parse_function)]
    pub function: FunctionSpec,
}

#[derive(Debug, Args)]
pub struct NormArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_parser = parse_exponent)]
    pub q: Exponent,
    #[arg(long, value_parser = parse_exponent)]
    pub p: Exponent,
    #[arg(long, value_parser = parse_exponent)]
    pub alpha: Exponent,
    /// Scale added to the search over r.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub anchor: f64,
}

#[derive(Debug, Args)]
pub struct MaximalArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "1", value_parser = parse_exponent)]
    pub q: Exponent,
    #[arg(long, default_value = "inf", value_parser = parse_exponent)]
    pub beta: Exponent,
    #[arg(long, allow_negative_numbers = true)]
    pub x: f64,
}

#[derive(Debug, Args)]
pub struct PotentialArgs {
    #[command(flatten)]
    pub common: Common,
    /// `riesz:<gamma>` or `indicator:<radius>`.
    #[arg(long, value_parser = parse_kernel)]
    pub kernel: KernelSpec,
    #[arg(long, allow_negative_numbers = true)]
    pub x: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct WeightArgs {
    #[arg(long, default_value = "lebesgue", value_parser = parse_measure)]
    pub measure: MeasureSpec,
    /// `one` or `power:<b>`.
    #[arg(long, value_parser = parse_weight)]
    pub weight: WeightSpec,
    #[arg(long, default_value_t = 2.0)]
    pub r: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub anchor: f64,
    /// Mass of the coarsest test intervals.
    #[arg(long, default_value_t = 1.0)]
    pub base: f64,
    #[arg(long, default_value_t = 2)]
    pub refinements: usize,
}

#[derive(Debug, Args)]
pub struct CoverArgs {
    /// Number of random families.
    #[arg(long, default_value_t = 1000)]
    pub random: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "lebesgue", value_parser = parse_measure)]
    pub measure: MeasureSpec,
    #[arg(long, value_enum, default_value = "largest-mass")]
    pub rule: RuleArg,
    /// Largest family size.
    #[arg(long, default_value_t = 40)]
    pub count: usize,
    #[arg(long, default_value_t = 5)]
    pub bound: usize,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum RuleArg {
    LargestMass,
    LeftmostSweep,
}

impl From<RuleArg> for SelectionRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::LargestMass => SelectionRule::LargestMass,
            RuleArg::LeftmostSweep => SelectionRule::LeftmostSweep,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for the reports.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Multiplier on every default grid.
    #[arg(long, default_value_t = 1.0)]
    pub grid_scale: f64,
    /// Quadrature tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, required = true, num_args = 1..)]
    pub scenario: Vec<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

fn parse_measure(s: &str) -> std::result::Result<MeasureSpec, String> {
    MeasureSpec::parse_short(s).map_err(|e| e.to_string())
}

fn parse_function(s: &str) -> std::result::Result<FunctionSpec, String> {
    FunctionSpec::parse_short(s).map_err(|e| e.to_string())
}

fn parse_kernel(s: &str) -> std::result::Result<KernelSpec, String> {
    KernelSpec::parse_short(s).map_err(|e| e.to_string())
}

fn parse_exponent(s: &str) -> std::result::Result<Exponent, String> {
    s.parse::<Exponent>().map_err(|e| e.to_string())
}

fn parse_weight(s: &str) -> std::result::Result<WeightSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["one"] => Ok(WeightSpec::One),
        ["power", b] => b.parse().map(|b| WeightSpec::Power { b }).map_err(|_| format!("bad weight exponent in '{s}'")),
        _ => Err(format!("unknown weight shorthand '{s}' (use one or power:<b>)")),
    }
}

/// Exit code for an error that stopped a run.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Hypothesis(_) | Error::TrivialSpace { .. } => EXIT_HYPOTHESIS,
        Error::Config(_) | Error::InvalidArgument(_) | Error::InvalidMeasure(_) => EXIT_CONFIG,
        _ => EXIT_FAIL,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli, out, err),
        Err(e) if e.use_stderr() => {
            let _ = write!(err, "{}", e.render());
            EXIT_CONFIG
        }
        Err(e) => {
            let _ = write!(out, "{}", e.render());
            EXIT_PASS
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let result = match cli.command {
        Command::Norm(a) => norm(&a, out),
        Command::Maximal(a) => point_maximal(&a, out),
        Command::Potential(a) => point_potential(&a, out),
        Command::Weight(a) => weight(&a, out),
        Command::Cover(a) => cover(&a, out),
        Command::Verify(a) => return verify(&a, out, err),
        Command::Sweep(a) => return sweep(&a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn io(e: std::io::Error) -> Error {
    Error::Internal(e.to_string())
}

fn norm(a: &NormArgs, out: &mut dyn Write) -> Result<u8> {
    let m = RadonMeasure::from_spec(&a.common.measure)?;
    let f = a.common.function.build()?;
    let mut search = ScaleSearch::for_function(&m, &f).with_anchor(a.anchor);
    if let Some(r) = a.r {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale r = {r} must be positive")));
        }
        search = search.with_extra(vec![r]);
    }
    let v = amalgam_norm(&m, &f, a.q, a.p, a.alpha, &search)?;
    writeln!(out, "{:?}", v.value).map_err(io)?;
    Ok(EXIT_PASS)
}

fn point_maximal(a: &MaximalArgs, out: &mut dyn Write) -> Result<u8> {
    let m = RadonMeasure::from_spec(&a.common.measure)?;
    let f = a.common.function.build()?;
    let v = maximal(&m, &f, a.q, a.beta, &MaximalQuery::for_point(&m, &f, a.x))?;
    writeln!(out, "{v:?}").map_err(io)?;
    Ok(EXIT_PASS)
}

fn point_potential(a: &PotentialArgs, out: &mut dyn Write) -> Result<u8> {
    let m = RadonMeasure::from_spec(&a.common.measure)?;
    let f = a.common.function.build()?;
    let k = Kernel::from_spec(&a.kernel)?;
    let v = potential(&m, &f, &k, a.x, a.tol)?;
    writeln!(out, "{v:?}").map_err(io)?;
    Ok(EXIT_PASS)
}

fn weight(a: &WeightArgs, out: &mut dyn Write) -> Result<u8> {
    let m = RadonMeasure::from_spec(&a.measure)?;
    let w = a.weight.build()?;
    let family = IntervalFamily::standard(&m, a.anchor, a.base, a.refinements)?;
    let res = a_r_constant(&m, &w, a.r, &family)?;
    if res.diverging {
        writeln!(out, "{:?} diverging (growth ratio {:?})", res.constant, res.growth_ratio).map_err(io)?;
    } else {
        writeln!(out, "{:?}", res.constant).map_err(io)?;
    }
    Ok(EXIT_PASS)
}

fn cover(a: &CoverArgs, out: &mut dyn Write) -> Result<u8> {
    let m = RadonMeasure::from_spec(&a.measure)?;
    let base = RandomFamilySpec { count: a.count, ..RandomFamilySpec::default() };
    let res = covering_trials(&m, &base, a.random, a.seed, a.rule.into(), a.bound)?;
    writeln!(out, "max overlap {} over {} trials (bound {}, worst seed {})", res.max_overlap, res.trials, a.bound, res.worst_seed)
        .map_err(io)?;
    Ok(if res.violations.is_empty() { EXIT_PASS } else { EXIT_FAIL })
}

fn options(r: &RunArgs) -> Result<RunOptions> {
    if !(r.grid_scale > 0.0 && r.grid_scale.is_finite()) {
        return Err(Error::Config(format!("--grid-scale {} must be positive", r.grid_scale)));
    }
    if let Some(t) = r.tol {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Config(format!("--tol {t} must lie in (0, 1)")));
        }
    }
    Ok(RunOptions { seed: r.seed, grid_scale: r.grid_scale, tol: r.tol })
}

fn summary(rep: &VerificationReport) -> String {
    let verdict = match rep.verdict {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
    };
    format!(
        "{} [{}] {verdict}: constant {:.6e}, refinement stability {:.3e}, homogeneity deviation {:.3e}",
        rep.scenario, rep.target, rep.empirical_constant, rep.refinement_stability, rep.homogeneity_deviation
    )
}

/// One scenario: report written to `out_dir` when given.
fn verify_one(path: &Path, opts: &RunOptions, out_dir: Option<&Path>) -> Result<VerificationReport> {
    let scn = Scenario::from_file(path)?;
    let rep = run_scenario(&scn, opts)?;
    if let Some(dir) = out_dir {
        rep.write_to(dir)?;
    }
    Ok(rep)
}

fn verify(a: &VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let outcome = options(&a.run).and_then(|opts| verify_one(&a.scenario, &opts, a.run.out.as_deref()));
    match outcome {
        Ok(rep) => {
            let _ = writeln!(out, "{}", summary(&rep));
            for c in rep.checks.iter().filter(|c| !c.passed) {
                let _ = writeln!(out, "  check failed: {} = {:?} (expected {:?})", c.name, c.value, c.expected);
            }
            if rep.verdict == Verdict::Pass {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            let _ = writeln!(err, "{}: {e}", a.scenario.display());
            exit_code(&e)
        }
    }
}

/// `*.json` files directly inside directories, plus plain file arguments.
fn collect_scenarios(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let entries = std::fs::read_dir(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            let mut found: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.is_file() && f.extension().is_some_and(|x| x == "json"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

fn sweep(a: &SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let (opts, files) = match options(&a.run).and_then(|o| collect_scenarios(&a.scenario).map(|f| (o, f))) {
        Ok(v) => v,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit_code(&e);
        }
    };
    // Precedence: malformed input, then rejection, then failure.
    let rank = |c: u8| match c {
        EXIT_CONFIG => 3,
        EXIT_HYPOTHESIS => 2,
        EXIT_FAIL => 1,
        _ => 0,
    };
    let mut code = EXIT_PASS;
    for path in &files {
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let dir = a.run.out.as_ref().map(|d| d.join(&stem));
        let c = match verify_one(path, &opts, dir.as_deref()) {
            Ok(rep) => {
                let _ = writeln!(out, "{}", summary(&rep));
                if rep.verdict == Verdict::Pass {
                    EXIT_PASS
                } else {
                    EXIT_FAIL
                }
            }
            Err(e) => {
                let c = exit_code(&e);
                let _ = writeln!(out, "{stem}: rejected (exit {c}): {e}");
                c
            }
        };
        if rank(c) > rank(code) {
            code = c;
        }
    }
    code
}
