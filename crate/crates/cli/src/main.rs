use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;
use serde_json::{json, Value};

use nforge::arith::ArithBudget;
use nforge::bounds::{bernstein_bound, chain_constant, fukuyama_constant, Precision};
use nforge::construction::{
    construct, digits_for, format_digit_file, op_census, parse_digit_file, ConstructOptions,
};
use nforge::schedule::Schedule;
use nforge::verification::{
    control_curve, discrepancy_curve, hstar_inflation_check, lemma5_budget_check, lil_experiment,
    parse_points, sweep_corollary, sweep_lemma2, SweepGrid, VerificationReport,
};
use nforge::Error;

/// Construct digits of an absolutely normal number and check the bounds
/// behind it.
#[derive(Parser)]
#[command(name = "nforge", version)]
struct Cli {
    /// Worker threads for candidate scans.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Wall-clock limit in seconds for construction steps.
    #[arg(long, global = true)]
    deadline_secs: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the construction and write the digit file.
    Construct {
        #[command(flatten)]
        sched: SchedArg,
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON run report with counters.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Emit the first N binary digits.
    Digits {
        #[command(flatten)]
        sched: SchedArg,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact discrepancy of a digit file's orbit, or of a point file.
    Discrepancy {
        #[arg(long, required_unless_present = "points", conflicts_with = "points")]
        digits: Option<PathBuf>,
        /// Plain-text file of rationals `p/q`, one per line.
        #[arg(long)]
        points: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        base: u64,
        #[arg(long, value_delimiter = ',', required = true)]
        checkpoints: Vec<u64>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run verification sweeps.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 64)]
        hmax: u64,
        #[command(flatten)]
        sched: SchedArg,
        /// Step for the lemma5 and hstar suites; defaults to the first step.
        #[arg(long)]
        k: Option<u64>,
        #[arg(long, default_value_t = 2)]
        base: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print closed-form constants and bounds.
    Bounds(BoundsArgs),
    /// Iterated-logarithm comparison on random orbits.
    Lil {
        #[arg(long, default_value_t = 2)]
        base: u64,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        samples: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SchedArg {
    /// Preset name (paper, toy-k3..toy-k6) or TOML file.
    #[arg(long, default_value = "toy-k3")]
    schedule: String,
    /// Override the threshold constant, as `num/den`.
    #[arg(long)]
    c: Option<String>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, value_enum)]
    what: What,
    #[arg(long, default_value_t = 2)]
    theta: u64,
    #[arg(long, default_value_t = 2)]
    base: u64,
    #[arg(long, default_value_t = 16)]
    n: u64,
    /// `p/q`.
    #[arg(long, default_value = "1/4")]
    variance: String,
    /// `p/q`.
    #[arg(long, default_value = "1")]
    eps: String,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Suite {
    Lemma2,
    Lemma3,
    Corollary,
    Lemma5,
    Hstar,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    Fukuyama,
    Chain,
    Bernstein,
}

enum Failure {
    Assertion(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Outcome = Result<(), Failure>;

fn parse_ratio(s: &str) -> Result<BigRational, Error> {
    let (p, q) = s.split_once('/').unwrap_or((s, "1"));
    let p: BigInt = p.trim().parse().map_err(|_| Error::Parse(format!("bad rational {s:?}")))?;
    let q: BigInt = q.trim().parse().map_err(|_| Error::Parse(format!("bad rational {s:?}")))?;
    if q == BigInt::from(0) {
        return Err(Error::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(BigRational::new(p, q))
}

fn load_schedule(arg: &SchedArg, budget: &ArithBudget) -> Result<Schedule, Error> {
    let mut s = Schedule::resolve(&arg.schedule)?;
    if let Some(c) = &arg.c {
        let (n, d) = c.split_once('/').unwrap_or((c, "1"));
        let n = n.parse().map_err(|_| Error::Parse(format!("bad threshold {c:?}")))?;
        let d = d.parse().map_err(|_| Error::Parse(format!("bad threshold {c:?}")))?;
        s = s.with_threshold(n, d);
    }
    s.validate(budget)?;
    Ok(s)
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => Ok(fs::write(p, format!("{text}\n"))?),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(path: Option<&Path>, v: &T) -> Result<(), Error> {
    emit(path, &serde_json::to_string_pretty(v).expect("serializable"))
}

fn verdict(pass: bool, what: &str) -> Outcome {
    if pass {
        Ok(())
    } else {
        Err(Failure::Assertion(format!("{what} failed")))
    }
}

fn run(cli: Cli) -> Outcome {
    let budget = ArithBudget::from_env()?;
    let opts = ConstructOptions {
        threads: cli.threads.max(1),
        deadline: cli.deadline_secs.map(Duration::from_secs),
        budget,
        ..Default::default()
    };
    match cli.command {
        Command::Construct { sched, out, report } => {
            let s = load_schedule(&sched, &budget)?;
            let state = construct(&s, &opts)?;
            emit(out.as_deref(), format_digit_file(&s, &state.digits).trim_end())?;
            if let Some(path) = report {
                let run = json!({
                    "schedule": s,
                    "k": state.k,
                    "omega": state.omega.to_string(),
                    "digits": state.digits.len(),
                    "steps": state.steps,
                    "census": op_census(&state),
                });
                emit_json(Some(&path), &run)?;
            }
            Ok(())
        }
        Command::Digits { sched, n, out } => {
            let s = load_schedule(&sched, &budget)?;
            let (digits, _) = digits_for(&s, n, &opts)?;
            emit(out.as_deref(), format_digit_file(&s, &digits).trim_end())?;
            Ok(())
        }
        Command::Discrepancy {
            digits,
            points,
            base,
            checkpoints,
            report,
        } => {
            if let Some(path) = points {
                let pts = parse_points(&fs::read_to_string(path).map_err(Error::from)?)?;
                let curve = control_curve(&pts, &checkpoints)?;
                let rows: Vec<Value> = curve
                    .iter()
                    .map(|&(n, d, r)| json!({"n": n, "discrepancy_f64": d, "n_d_over_log_n": r}))
                    .collect();
                emit_json(report.as_deref(), &json!({"points": rows}))?;
                return Ok(());
            }
            let path = digits.expect("clap requires digits or points");
            let file = parse_digit_file(&fs::read_to_string(path).map_err(Error::from)?)?;
            let curve = discrepancy_curve(&file.digits, base, &checkpoints, &budget)?;
            emit_json(report.as_deref(), &curve)?;
            verdict(curve.pass, "discrepancy curve")
        }
        Command::Verify {
            suite,
            hmax,
            sched,
            k,
            base,
            report,
        } => {
            let prec = Precision::default();
            let mut reports: Vec<VerificationReport> = Vec::new();
            let wants = |s: Suite| suite == s || suite == Suite::All;
            if wants(Suite::Lemma2) {
                reports.push(sweep_lemma2(&SweepGrid::lemma2_default(), prec)?);
            }
            if wants(Suite::Lemma3) {
                reports.push(sweep_lemma2(&SweepGrid::lemma3_default(), prec)?);
            }
            if wants(Suite::Corollary) {
                let grid = SweepGrid {
                    hmax,
                    ..SweepGrid::lemma3_default()
                };
                reports.push(sweep_corollary(&grid, prec)?);
            }
            if wants(Suite::Lemma5) || wants(Suite::Hstar) {
                let s = load_schedule(&sched, &budget)?;
                let k = k.unwrap_or(s.k0);
                if wants(Suite::Lemma5) {
                    reports.push(lemma5_budget_check(&s, k, &opts)?);
                }
                if wants(Suite::Hstar) {
                    reports.push(hstar_inflation_check(&s, base, k, &opts)?);
                }
            }
            let pass = reports.iter().all(|r| r.aggregate_pass);
            if reports.len() == 1 {
                emit_json(report.as_deref(), &reports[0])?;
            } else {
                emit_json(report.as_deref(), &reports)?;
            }
            verdict(pass, "verification")
        }
        Command::Bounds(args) => {
            let v = match args.what {
                What::Fukuyama => json!({"theta": args.theta, "value": fukuyama_constant(args.theta)?}),
                What::Chain => {
                    let c = chain_constant(args.base)?;
                    json!({"base": args.base, "per_base": c.per_base(), "value": c.value()})
                }
                What::Bernstein => {
                    let var = parse_ratio(&args.variance)?;
                    let eps = parse_ratio(&args.eps)?;
                    let e = bernstein_bound(args.n, &var, &eps, Precision::default())?;
                    json!({"n": args.n, "variance": var.to_string(), "eps": eps.to_string(),
                           "lower": e.to_f64(), "upper": e.to_f64_up()})
                }
            };
            emit_json(None, &v)?;
            Ok(())
        }
        Command::Lil {
            base,
            n,
            samples,
            seed,
            report,
        } => {
            let r = lil_experiment(base, n, samples, seed, &budget)?;
            emit_json(report.as_deref(), &r)?;
            verdict(r.pass, "iterated-logarithm median")
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::try_parse().unwrap_or_else(|e| {
        let code = if e.use_stderr() { 2 } else { 0 };
        let _ = e.print();
        std::process::exit(code)
    });
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Assertion(msg)) => {
            eprintln!("{}", json!({"error": "assertion_failed", "message": msg}));
            ExitCode::from(1)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("{}", json!({"error": e.kind(), "message": e.to_string()}));
            let code = match e {
                _ if e.is_budget() => 3,
                Error::NoGoodInterval { .. } | Error::CriterionViolated(_) => 1,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}
