//! Command-line interface: solve for optimal codebooks, sweep error
//! curves, run inverse design, and check the built-in golden fixtures.
//!
//! Exit codes: 0 success, 1 fixture failures (`verify`), 2 invalid
//! distribution spec, 3 solver error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_rational::BigRational;

use nmeans::golden::{run_all, FixtureStatus};
use nmeans::inverse::{decimal_fixed, feasible_x, verify_conjecture, InverseFamily};
use nmeans::scalar::Scalar;
use nmeans::spec_io::{parse_dist_spec, result_to_json, ValueJson};
use nmeans::{solve, solve_infinite_capped, DiscreteDistribution, Mode, QuantizationResult};

#[derive(Parser)]
#[command(
    name = "nmeans",
    version,
    about = "Exact optimal quantization (n-means) for discrete distributions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolveFormat {
    Json,
    Table,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CurveFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Truncated,
    Infinite,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal codebook(s) for one level
    Solve {
        /// Distribution spec file (JSON)
        spec: PathBuf,
        /// Number of code points
        #[arg(long)]
        n: usize,
        /// Enumerate every optimal codebook, not just one
        #[arg(long)]
        all: bool,
        /// Working precision in bits for inexact families
        #[arg(long, default_value_t = 256)]
        precision: u32,
        #[arg(long, value_enum, default_value_t = SolveFormat::Json)]
        format: SolveFormat,
        /// Hard cap on the adaptive tail horizon
        #[arg(long, default_value_t = 1 << 16)]
        horizon_cap: usize,
    },
    /// Distortion as a function of the level over a range
    ErrorCurve {
        /// Distribution spec file (JSON)
        spec: PathBuf,
        #[arg(long)]
        n_min: usize,
        #[arg(long)]
        n_max: usize,
        #[arg(long, value_enum, default_value_t = CurveFormat::Csv)]
        format: CurveFormat,
        #[arg(long, default_value_t = 256)]
        precision: u32,
        #[arg(long, default_value_t = 1 << 16)]
        horizon_cap: usize,
    },
    /// Feasible parameter range for the prescribed codebook family
    Inverse {
        #[arg(long, value_enum)]
        family: FamilyArg,
        /// Support size (truncated family only)
        #[arg(long)]
        m: Option<usize>,
        /// Decimal digits of the reported threshold
        #[arg(long, default_value_t = 10)]
        digits: u32,
        #[arg(long, value_enum, default_value_t = SolveFormat::Json)]
        format: SolveFormat,
        /// Check the prescribed structure by exact solves at sampled x
        #[arg(long)]
        verify: bool,
        /// Highest level checked by --verify
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        /// Extra sample points for --verify (repeatable; "p/q" or decimal)
        #[arg(long = "sample-x")]
        sample_x: Vec<String>,
    },
    /// Run the built-in golden fixture suite
    Verify {
        #[arg(long, default_value_t = 256)]
        precision: u32,
    },
}

fn main() -> ExitCode {
    // Die quietly when stdout closes early (e.g. piped into `head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match cli.command {
        Command::Solve {
            spec,
            n,
            all,
            precision,
            format,
            horizon_cap,
        } => cmd_solve(&spec, n, all, precision, format, horizon_cap),
        Command::ErrorCurve {
            spec,
            n_min,
            n_max,
            format,
            precision,
            horizon_cap,
        } => cmd_error_curve(&spec, n_min, n_max, format, precision, horizon_cap),
        Command::Inverse {
            family,
            m,
            digits,
            format,
            verify,
            n_max,
            sample_x,
        } => cmd_inverse(family, m, digits, format, verify, n_max, &sample_x),
        Command::Verify { precision } => cmd_verify(precision),
    }
}

fn load_dist(path: &PathBuf) -> Result<DiscreteDistribution, ExitCode> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {}", path.display(), e);
            return Err(ExitCode::from(2));
        }
    };
    match parse_dist_spec(&text) {
        Ok(d) => Ok(d),
        Err(e) => {
            eprintln!("error: {}: {}", path.display(), e);
            Err(ExitCode::from(2))
        }
    }
}

fn run_solver(
    dist: &DiscreteDistribution,
    n: usize,
    mode: Mode,
    precision: u32,
    horizon_cap: usize,
) -> Result<QuantizationResult, ExitCode> {
    let result = if dist.is_infinite() {
        solve_infinite_capped(dist, n, mode, precision, horizon_cap)
    } else {
        solve(dist, n, mode)
    };
    result.map_err(|e| {
        eprintln!("error: solver: {}", e);
        ExitCode::from(3)
    })
}

fn scalar_cell(s: &Scalar) -> String {
    match s.rational_string() {
        Some(r) => r,
        None => s.decimal_string(s.justified_digits()),
    }
}

fn print_solve_table(r: &QuantizationResult) {
    let v = ValueJson::from_scalar(&r.distortion);
    let decimal = &v.decimal;
    match &v.rational {
        Some(rational) => println!("n = {}   V = {} ({})   exact", r.n, rational, decimal),
        None => println!(
            "n = {}   V = {}   precision {} bits",
            r.n,
            decimal,
            r.precision_bits.unwrap_or(0)
        ),
    }
    for (i, cb) in r.optima.iter().enumerate() {
        let points: Vec<String> = cb.points.iter().map(scalar_cell).collect();
        let cuts: Vec<String> = cb.cuts.iter().map(|c| c.to_string()).collect();
        let tail = if cb.tail { " +tail" } else { "" };
        let ties = if cb.ties.is_empty() {
            String::new()
        } else {
            format!("  ties at {:?}", cb.ties)
        };
        println!(
            "optimum {}: codebook [{}]  cuts [{}]{}{}",
            i + 1,
            points.join(", "),
            cuts.join(", "),
            tail,
            ties
        );
    }
}

fn cmd_solve(
    spec: &PathBuf,
    n: usize,
    all: bool,
    precision: u32,
    format: SolveFormat,
    horizon_cap: usize,
) -> ExitCode {
    let dist = match load_dist(spec) {
        Ok(d) => d,
        Err(code) => return code,
    };
    let mode = if all { Mode::All } else { Mode::Single };
    let result = match run_solver(&dist, n, mode, precision, horizon_cap) {
        Ok(r) => r,
        Err(code) => return code,
    };
    match format {
        SolveFormat::Json => {
            let json = serde_json::to_string_pretty(&result_to_json(&result))
                .expect("serializable result");
            println!("{}", json);
        }
        SolveFormat::Table => print_solve_table(&result),
    }
    ExitCode::SUCCESS
}

fn cmd_error_curve(
    spec: &PathBuf,
    n_min: usize,
    n_max: usize,
    format: CurveFormat,
    precision: u32,
    horizon_cap: usize,
) -> ExitCode {
    if n_min < 1 || n_min > n_max {
        eprintln!("error: need 1 <= n-min <= n-max");
        return ExitCode::from(2);
    }
    let dist = match load_dist(spec) {
        Ok(d) => d,
        Err(code) => return code,
    };
    let mut rows = Vec::new();
    for n in n_min..=n_max {
        let r = match run_solver(&dist, n, Mode::All, precision, horizon_cap) {
            Ok(r) => r,
            Err(code) => return code,
        };
        rows.push(r);
    }
    match format {
        CurveFormat::Csv => {
            println!("n,distortion,codebook_size,num_optima");
            for r in &rows {
                println!(
                    "{},{},{},{}",
                    r.n,
                    scalar_cell(&r.distortion),
                    r.codebook().points.len(),
                    r.optima.len()
                );
            }
        }
        CurveFormat::Json => {
            let items: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "n": r.n,
                        "distortion": ValueJson::from_scalar(&r.distortion),
                        "codebook_size": r.codebook().points.len(),
                        "num_optima": r.optima.len(),
                    })
                })
                .collect();
            println!(
                "{}",
                serde_json::to_string_pretty(&items).expect("serializable rows")
            );
        }
    }
    ExitCode::SUCCESS
}

fn rational_string(r: &BigRational) -> String {
    Scalar::from_rational(r.clone()).to_string()
}

fn cmd_inverse(
    family: FamilyArg,
    m: Option<usize>,
    digits: u32,
    format: SolveFormat,
    verify: bool,
    n_max: usize,
    sample_x: &[String],
) -> ExitCode {
    let family = match family {
        FamilyArg::Truncated => {
            let m = match m {
                Some(m) if m >= 3 => m,
                _ => {
                    eprintln!("error: --family truncated needs --m of at least 3");
                    return ExitCode::from(2);
                }
            };
            InverseFamily::Truncated { m }
        }
        FamilyArg::Infinite => {
            if m.is_some() {
                eprintln!("error: --m applies only to the truncated family");
                return ExitCode::from(2);
            }
            InverseFamily::Infinite
        }
    };
    let interval = match feasible_x(family, digits) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: solver: {}", e);
            return ExitCode::from(3);
        }
    };

    match format {
        SolveFormat::Json => {
            let certs: Vec<serde_json::Value> = interval
                .certificates
                .iter()
                .map(|c| {
                    serde_json::json!({
                        "name": c.name,
                        "threshold": c.threshold.as_ref().map(|(lo, hi)| {
                            vec![rational_string(lo), rational_string(hi)]
                        }),
                        "binding": c.binding,
                    })
                })
                .collect();
            let json = serde_json::json!({
                "lower": interval.lower_string(),
                "lower_feasible": interval.lower_feasible_string(),
                "upper": "1",
                "upper_open": true,
                "digits": interval.digits,
                "bracket": [
                    rational_string(&interval.bracket.0),
                    rational_string(&interval.bracket.1),
                ],
                "certificates": certs,
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&json).expect("serializable interval")
            );
        }
        SolveFormat::Table => {
            println!(
                "feasible x in [{}, 1)   (rounded up: {})",
                interval.lower_string(),
                interval.lower_feasible_string()
            );
            println!(
                "bisection bracket: ({}, {})",
                rational_string(&interval.bracket.0),
                rational_string(&interval.bracket.1)
            );
            for c in &interval.certificates {
                match &c.threshold {
                    Some((_, hi)) => println!(
                        "constraint {}: boundary near {}{}",
                        c.name,
                        decimal_fixed(hi, digits),
                        if c.binding { "  [binding]" } else { "" }
                    ),
                    None => println!("constraint {}: inactive", c.name),
                }
            }
        }
    }

    if verify {
        let mut samples: Vec<BigRational> = Vec::new();
        samples.push(interval.lower_feasible.clone());
        samples.push(
            &interval.lower_feasible + &"1/1000".parse::<Scalar>().unwrap().as_rational(),
        );
        for d in ["7/10", "9/10", "99/100"] {
            samples.push(d.parse::<Scalar>().unwrap().as_rational());
        }
        for extra in sample_x {
            match extra.parse::<Scalar>() {
                Ok(s) => samples.push(s.as_rational()),
                Err(e) => {
                    eprintln!("error: --sample-x: {}", e);
                    return ExitCode::from(2);
                }
            }
        }
        for x in &samples {
            let report = match verify_conjecture(family, x, n_max) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: solver: {}", e);
                    return ExitCode::from(3);
                }
            };
            let verdict = if report.all_pass() {
                "pass".to_string()
            } else {
                format!("FAIL at n={:?}", report.failures())
            };
            println!("verify x = {}: {}", rational_string(x), verdict);
        }
    }
    ExitCode::SUCCESS
}

fn cmd_verify(precision: u32) -> ExitCode {
    let results = run_all(precision);
    let mut failures = 0usize;
    for r in &results {
        let tag = match &r.status {
            FixtureStatus::Pass => "PASS",
            FixtureStatus::Fail => {
                failures += 1;
                "FAIL"
            }
            FixtureStatus::Skipped { .. } => "SKIP",
        };
        match &r.status {
            FixtureStatus::Skipped { reason } => {
                println!("{} {} ({})", tag, r.name, reason);
            }
            _ => {
                println!(
                    "{} {}: expected {}  computed {}",
                    tag, r.name, r.expected, r.computed
                );
            }
        }
    }
    let total = results.len();
    println!(
        "{} fixtures: {} passed, {} failed",
        total,
        total - failures,
        failures
    );
    if failures > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
