use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bures_core::cpmaps::{random_channel, CpMap};
use bures_core::metrics::{theorem1_certificate, Tolerances};
use clap::{Args, Parser, Subcommand, ValueEnum};

mod verify;

const TOL_PREFIX: &str = "--tol.";
const TOL_MIN: f64 = 1e-12;
const TOL_MAX: f64 = 1e-2;

const EXIT_VIOLATION: u8 = 1;
const EXIT_INPUT: u8 = 2;

/// Bures distance and cb-norm of completely positive maps.
///
/// Tolerances are overridden with `--tol.KEY=VALUE` anywhere on the command
/// line; values are clamped to [1e-12, 1e-2].
#[derive(Parser, Debug)]
#[command(name = "bures", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write random unital channels M_d -> M_n with Kraus rank m.
    Gen(GenArgs),
    /// Compare two channel files and certify the distance bounds.
    Dist(DistArgs),
    /// Run the seeded certificate batch.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone, Copy)]
struct Dims {
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    d: u64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    m: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(flatten)]
    dims: Dims,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    count: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct DistArgs {
    /// The two channel files (alternatively given with --in).
    files: Vec<PathBuf>,
    #[arg(long = "in")]
    inputs: Vec<PathBuf>,
    /// Recorded in the report.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    dims: Dims,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    count: u64,
    /// Summary path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

/// Splits `--tol.KEY=VALUE` arguments off the command line.
fn extract_tolerances(args: Vec<String>) -> Result<(Vec<String>, Tolerances), String> {
    let mut tol = Tolerances::default();
    let mut rest = Vec::with_capacity(args.len());
    for arg in args {
        let Some(assignment) = arg.strip_prefix(TOL_PREFIX) else {
            rest.push(arg);
            continue;
        };
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| format!("expected {TOL_PREFIX}KEY=VALUE, got {arg}"))?;
        let value: f64 = value
            .parse()
            .map_err(|_| format!("tolerance {key}: cannot parse {value:?}"))?;
        if !value.is_finite() || value < 0.0 {
            return Err(format!("tolerance {key} must be a nonnegative number"));
        }
        let slot = tol.get_mut(key).ok_or_else(|| {
            format!(
                "unknown tolerance {key:?}; known keys: {}",
                Tolerances::KEYS.join(", ")
            )
        })?;
        let clamped = value.clamp(TOL_MIN, TOL_MAX);
        if clamped != value {
            eprintln!("warning: tolerance {key}={value:e} clamped to {clamped:e}");
        }
        *slot = clamped;
    }
    Ok((rest, tol))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), String> {
    match path {
        Some(p) => fs::write(p, format!("{text}\n"))
            .map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn cmd_gen(args: &GenArgs) -> Result<(), String> {
    let d = args.dims.d as usize;
    let n = args.dims.n as usize;
    let m = args.dims.m as usize;
    fs::create_dir_all(&args.out)
        .map_err(|e| format!("cannot create {}: {e}", args.out.display()))?;
    for k in 0..args.count {
        let seed = args.seed.wrapping_add(k);
        let t = random_channel(d, n, m, seed).map_err(|e| e.to_string())?;
        let path = args.out.join(format!("channel_{k:04}.json"));
        fs::write(&path, format!("{}\n", t.to_json()))
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn read_map(path: &Path) -> Result<CpMap, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    CpMap::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_dist(args: &DistArgs, tol: &Tolerances) -> Result<u8, String> {
    let files: Vec<&PathBuf> = args.files.iter().chain(&args.inputs).collect();
    let [a, b] = files.as_slice() else {
        return Err(format!("dist needs exactly two channel files, got {}", files.len()));
    };
    let t1 = read_map(a)?;
    let t2 = read_map(b)?;
    t1.ensure_same_dims(&t2).map_err(|e| e.to_string())?;
    let report = theorem1_certificate(&t1, &t2, tol, args.seed).map_err(|e| e.to_string())?;
    let text = serde_json::to_string_pretty(&report).expect("report serialization");
    write_output(args.out.as_deref(), &text)?;
    if report.passed() {
        Ok(0)
    } else {
        for key in &report.violations {
            eprintln!("certificate violated: {key} slack {:e}", report.slacks[key]);
        }
        Ok(EXIT_VIOLATION)
    }
}

fn cmd_verify(args: &VerifyArgs, tol: &Tolerances) -> Result<u8, String> {
    let config = verify::Config {
        d: args.dims.d as usize,
        n: args.dims.n as usize,
        m: args.dims.m as usize,
        seed: args.seed,
        count: args.count as usize,
        tolerances: *tol,
    };
    let summary = verify::run(&config);
    let text = serde_json::to_string_pretty(&summary).expect("summary serialization");
    write_output(args.out.as_deref(), &text)?;
    Ok(if summary.failed == 0 { 0 } else { EXIT_VIOLATION })
}

fn main() -> ExitCode {
    let (args, tol) = match extract_tolerances(std::env::args().collect()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a).map(|_| 0),
        Command::Dist(a) => cmd_dist(a, &tol),
        Command::Verify(a) => cmd_verify(a, &tol),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
