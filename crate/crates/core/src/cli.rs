//! Command-line front end.
//!
//! Every subcommand prints either human-readable text or a single JSON
//! object on stdout. Exit codes: 0 on success, 1 when an argument does not
//! parse, 2 when the computation fails (not regular, budget exhausted, no
//! exact data, or a violated check).

use std::ffi::OsString;
use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::algebra::{format_rational, int, parse_rational, rat, to_f64, Polynomial, Rational};
use crate::operator::OperatorSpec;
use crate::power_series::PowerSeries;
use crate::regularize::{
    alt_binom_sum, euler_alt_sum, euler_numbers, fraction, product_rule_check, reg_operator, reg_sum,
    reg_sum_exact, RegSum, RegularizeError,
};
use crate::summation::{
    abel_limit, cesaro_auto, cesaro_extrapolated, cesaro_limit, round_sig, shift_check, AbelConfig, ConvergenceReport, SeriesSpec,
    SummationError, SummationMethod, DEFAULT_K_MAX, DEFAULT_TERMS, DEFAULT_TOL,
};

/// Overrides the default term budget when `--n` is not given.
pub const BUDGET_ENV: &str = "REGSUM_TERMS";

#[derive(Debug, Parser)]
#[command(name = "regsum", version, about = "Regularized sums of operator series applied to polynomials")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sum a_n (T^n P)(x) for a series f, an operator T and a polynomial P.
    Sum(SumArgs),
    /// Print the Euler numbers E_0..E_N.
    Euler {
        n_max: usize,
        #[arg(long, value_enum, default_value_t = Output::Text)]
        output: Output,
    },
    /// Print the symbol of an operator literal.
    Symbol {
        op: String,
        #[arg(long, default_value_t = 6)]
        order: usize,
        #[arg(long, value_enum, default_value_t = Output::Text)]
        output: Output,
    },
    /// Cesaro-sum a series at a fixed order or with automatic escalation.
    Cesaro {
        #[arg(long)]
        series: String,
        /// Cesaro order, or `auto`.
        #[arg(long, default_value = "auto")]
        k: String,
        #[command(flatten)]
        budget: Budget,
        #[arg(long, value_enum, default_value_t = Output::Text)]
        output: Output,
    },
    /// Abel-sum a series.
    Abel {
        #[arg(long)]
        series: String,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_enum, default_value_t = Output::Text)]
        output: Output,
    },
    /// Run a named invariant suite on random or fixed instances.
    Check {
        #[arg(value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Output::Text)]
        output: Output,
    },
}

#[derive(Debug, Args, Serialize)]
struct SumArgs {
    /// Series literal: alt, altlog, geom:r, table:[...], table:@file.json
    #[arg(long, default_value = "alt")]
    series: String,
    /// Operator literal: identity, diff, shift:h, delta:h, symbol:[...]
    #[arg(long, default_value = "shift:1")]
    op: String,
    /// Polynomial, e.g. "3*x^2 - x + 1/2"
    #[arg(long)]
    poly: String,
    #[arg(long, default_value = "0")]
    x: String,
    /// exact, classical, abel, cesaro, cesaro:k or cesaro:auto
    #[arg(long)]
    method: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    budget: Budget,
    #[arg(long, value_enum, default_value_t = Output::Text)]
    #[serde(skip)]
    output: Output,
}

#[derive(Debug, Args, Serialize)]
struct Budget {
    /// Term budget (default 4000, or $REGSUM_TERMS)
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Highest Cesaro order tried by automatic escalation
    #[arg(long)]
    k_max: Option<usize>,
}

impl Budget {
    fn apply(&self, method: SummationMethod) -> Result<SummationMethod, CliError> {
        let n = match self.n {
            Some(n) => n,
            None => match std::env::var(BUDGET_ENV) {
                Ok(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| CliError::usage(BUDGET_ENV, format!("expected a term count, got '{v}'")))?,
                Err(_) => DEFAULT_TERMS,
            },
        };
        Ok(method
            .with_terms(n)
            .with_tol(self.tol.unwrap_or(DEFAULT_TOL))
            .with_k_max(self.k_max.unwrap_or(DEFAULT_K_MAX)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    FunctionalEquation,
    ThreeWay,
    ProductRule,
    EulerTable,
    BinomialSums,
    ShiftInvariance,
}

#[derive(Debug)]
enum CliError {
    Usage { arg: String, msg: String },
    Failure(String),
}

impl CliError {
    fn usage(arg: &str, msg: impl ToString) -> Self {
        CliError::Usage {
            arg: arg.to_string(),
            msg: msg.to_string(),
        }
    }

    fn code(&self) -> i32 {
        match self {
            CliError::Usage { .. } => 1,
            CliError::Failure(_) => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage { arg, msg } => format!("invalid {arg}: {msg}"),
            CliError::Failure(msg) => msg.clone(),
        }
    }
}

impl From<RegularizeError> for CliError {
    fn from(e: RegularizeError) -> Self {
        CliError::Failure(e.to_string())
    }
}

impl From<SummationError> for CliError {
    fn from(e: SummationError) -> Self {
        match e {
            SummationError::InvalidParameter(msg) => CliError::usage("parameter", msg),
            other => CliError::Failure(other.to_string()),
        }
    }
}

/// What a successful command prints.
struct Report {
    text: String,
    json: Value,
    /// Nonzero when the command ran but its outcome is a failure (a
    /// non-converged summation or a violated check).
    code: i32,
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    1
                }
            };
        }
    };
    let output = cli.command.output();
    match execute(cli.command) {
        Ok(report) => {
            let _ = match output {
                Output::Text => writeln!(out, "{}", report.text),
                Output::Json => writeln!(out, "{}", report.json),
            };
            report.code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            if output == Output::Json {
                let _ = writeln!(out, "{}", json!({ "error": e.message(), "exit_code": e.code() }));
            }
            e.code()
        }
    }
}

impl Command {
    fn output(&self) -> Output {
        match self {
            Command::Sum(a) => a.output,
            Command::Euler { output, .. }
            | Command::Symbol { output, .. }
            | Command::Cesaro { output, .. }
            | Command::Abel { output, .. }
            | Command::Check { output, .. } => *output,
        }
    }
}

fn execute(command: Command) -> Result<Report, CliError> {
    match command {
        Command::Sum(args) => cmd_sum(&args),
        Command::Euler { n_max, .. } => Ok(cmd_euler(n_max)),
        Command::Symbol { op, order, .. } => cmd_symbol(&op, order),
        Command::Cesaro { series, k, budget, .. } => cmd_cesaro(&series, &k, &budget),
        Command::Abel { series, tol, .. } => cmd_abel(&series, tol),
        Command::Check { suite, cases, seed, .. } => cmd_check(suite, cases, seed),
    }
}

fn parse_series(text: &str) -> Result<SeriesSpec, CliError> {
    text.parse().map_err(|e: SummationError| match e {
        SummationError::Parse(p) => CliError::usage("--series", p),
        other => CliError::usage("--series", other),
    })
}

fn cmd_sum(args: &SumArgs) -> Result<Report, CliError> {
    let series = parse_series(&args.series)?;
    let op: OperatorSpec = args.op.parse().map_err(|e| CliError::usage("--op", e))?;
    let poly: Polynomial = args.poly.parse().map_err(|e| CliError::usage("--poly", e))?;
    let x = parse_rational(&args.x).map_err(|e| CliError::usage("--x", e))?;
    let (exact_only, method) = match args.method.as_deref().map(str::trim) {
        None => (false, SummationMethod::cesaro_auto()),
        Some("exact") => (true, SummationMethod::cesaro_auto()),
        Some(m) => (false, m.parse().map_err(|e| CliError::usage("--method", e))?),
    };
    let method = args.budget.apply(method)?;
    if exact_only {
        reg_sum_exact(&series, &op, &poly, &x, &method)?;
    }
    let result = reg_sum(&series, &op, &poly, &x, &method)?;
    let mut json = result.to_json();
    json["request"] = serde_json::to_value(args).expect("request echo serializes");
    Ok(Report {
        text: sum_text(&result),
        json,
        code: 0,
    })
}

fn sum_text(result: &RegSum) -> String {
    let headline = match &result.value_exact {
        Some(q) => format!("{} (exact {})", format_rational(q), fraction(q)),
        None => format!("{} (numeric)", round_sig(result.value_float)),
    };
    let provenance = result.provenance();
    format!(
        "{headline}\nfloat: {}\nmethod: {} (order {}, terms {})\nprovenance: {}",
        round_sig(result.value_float),
        result.method,
        result.order_used(),
        result.terms_used(),
        if provenance.is_empty() { "none".to_string() } else { provenance.join(", ") },
    )
}

fn cmd_euler(n_max: usize) -> Report {
    let table = euler_numbers(n_max);
    let text = table
        .values()
        .iter()
        .enumerate()
        .map(|(k, e)| format!("E_{k} = {e}"))
        .collect::<Vec<_>>()
        .join("\n");
    Report {
        text,
        json: table.to_json(),
        code: 0,
    }
}

fn cmd_symbol(op: &str, order: usize) -> Result<Report, CliError> {
    let spec: OperatorSpec = op.parse().map_err(|e| CliError::usage("operator", e))?;
    let symbol = spec.symbol(order).map_err(|e| CliError::Failure(e.to_string()))?;
    Ok(Report {
        text: symbol.to_string(),
        json: json!({ "operator": op, "order": order, "coefficients": symbol.to_strings() }),
        code: 0,
    })
}

fn report_text(r: &ConvergenceReport) -> String {
    format!(
        "value: {}\nconverged: {}\nmethod: {} (order {}, terms {})\nresidual: {:e}",
        round_sig(r.value),
        r.converged,
        r.method_used,
        r.order_used,
        r.terms_used,
        round_sig(r.residual),
    )
}

fn convergence_report(r: ConvergenceReport) -> Report {
    Report {
        text: report_text(&r),
        json: r.to_json(),
        code: if r.converged { 0 } else { 2 },
    }
}

fn cmd_cesaro(series: &str, k: &str, budget: &Budget) -> Result<Report, CliError> {
    let a = parse_series(series)?;
    let method = budget.apply(SummationMethod::cesaro_auto())?;
    let report = match k.trim() {
        "auto" => cesaro_auto(&a, method.k_max, method.n_max, method.tol)?,
        other => {
            let k = other
                .parse()
                .map_err(|_| CliError::usage("--k", format!("expected an order or 'auto', got '{other}'")))?;
            cesaro_limit(&a, k, method.n_max, method.tol)?
        }
    };
    Ok(convergence_report(report))
}

fn cmd_abel(series: &str, tol: Option<f64>) -> Result<Report, CliError> {
    let a = parse_series(series)?;
    let config = AbelConfig::default().with_tol(tol.unwrap_or(1e-6));
    Ok(convergence_report(abel_limit(&a, &config)?))
}

/// Uniform over fractions `p/q` in `[-bound, bound]` with `q <= 6`.
fn random_rational(rng: &mut ChaCha8Rng, bound: i64) -> Rational {
    let q = rng.gen_range(1..=6);
    rat(rng.gen_range(-bound * q..=bound * q), q)
}

fn random_poly(rng: &mut ChaCha8Rng, max_deg: usize) -> Polynomial {
    let deg = rng.gen_range(0..=max_deg);
    Polynomial::from_coeffs((0..=deg).map(|_| rat(rng.gen_range(-20..=20), rng.gen_range(1..=6))).collect())
}

struct SuiteOutcome {
    cases: usize,
    failures: Vec<String>,
}

fn cmd_check(suite: Suite, cases: usize, seed: u64) -> Result<Report, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cesaro = SummationMethod::cesaro_auto();
    let mut failures = Vec::new();
    let mut ran = 0;
    match suite {
        Suite::FunctionalEquation => {
            for _ in 0..cases {
                let (p, h) = (random_poly(&mut rng, 8), random_rational(&mut rng, 2));
                let op = reg_operator(&SeriesSpec::alt_geometric(), &OperatorSpec::shift(h.clone()), &cesaro, 8)?;
                let s = op.apply(&p).map_err(|e| CliError::Failure(e.to_string()))?;
                let gap = &(&s.translate(&h) + &s) - &p;
                ran += 1;
                if !gap.is_zero() {
                    failures.push(format!("P = {p}, h = {}: S(x+h) + S(x) - P(x) = {gap}", format_rational(&h)));
                }
            }
        }
        Suite::ThreeWay => {
            for _ in 0..cases {
                let (p, h, x) = (random_poly(&mut rng, 6), random_rational(&mut rng, 2), random_rational(&mut rng, 2));
                let exact = reg_sum(&SeriesSpec::alt_geometric(), &OperatorSpec::shift(h.clone()), &p, &x, &cesaro)?
                    .value_exact
                    .ok_or_else(|| CliError::Failure("exact path unavailable".into()))?;
                let euler = euler_alt_sum(&p, &h, &x);
                let (pp, hh, xx) = (p.clone(), h.clone(), x.clone());
                let terms = SeriesSpec::custom("(-1)^n P(x+nh)", move |n| {
                    let sign = if n % 2 == 0 { 1 } else { -1 };
                    int(sign) * pp.eval(&(&xx + int(n as i64) * &hh))
                });
                let numeric = cesaro_extrapolated(&terms, 12, DEFAULT_TERMS, DEFAULT_TOL)?;
                ran += 1;
                let gap = (numeric.value - to_f64(&exact)).abs();
                if exact != euler || !numeric.converged || gap > DEFAULT_TOL {
                    failures.push(format!(
                        "P = {p}, h = {}, x = {}: exact {}, euler {}, numeric {} (converged {})",
                        format_rational(&h),
                        format_rational(&x),
                        format_rational(&exact),
                        format_rational(&euler),
                        numeric.value,
                        numeric.converged
                    ));
                }
            }
        }
        Suite::ProductRule => {
            let alt = SeriesSpec::alt_geometric();
            for n in 0..=2 {
                let (lhs, rhs) = product_rule_check(&alt, &alt, n, &cesaro)?;
                ran += 1;
                if (lhs - rhs).abs() > 2e-3 {
                    failures.push(format!("n = {n}: lhs {lhs}, rhs {rhs}"));
                }
            }
        }
        Suite::EulerTable => {
            let n_max = 16.max(cases.min(60));
            let table = euler_numbers(n_max);
            for k in (1..=n_max).step_by(2) {
                ran += 1;
                if !table.get(k).is_zero() {
                    failures.push(format!("E_{k} = {} is not zero", table.get(k)));
                }
            }
            let as_series =
                PowerSeries::from_fn(n_max, |k| Rational::from_integer(table.get(k).clone()) / Rational::from_integer(crate::algebra::factorial(k)));
            ran += 1;
            if &PowerSeries::cosh(n_max) * &as_series != PowerSeries::one(n_max) {
                failures.push("cosh(t) * sum E_k t^k/k! != 1".into());
            }
        }
        Suite::BinomialSums => {
            let u = OperatorSpec::shift(int(1));
            for m in 0..=10 {
                let got = reg_sum(&SeriesSpec::alt_geometric(), &u, &Polynomial::binomial(m), &Rational::zero(), &cesaro)?
                    .value_exact;
                ran += 1;
                if got.as_ref() != Some(&alt_binom_sum(m)) {
                    failures.push(format!("m = {m}: got {got:?}"));
                }
            }
        }
        Suite::ShiftInvariance => {
            let alt = SeriesSpec::alt_geometric();
            let linear = SeriesSpec::custom("(-1)^n (n+1)", |n| int(if n % 2 == 0 { 1 } else { -1 } * (n as i64 + 1)));
            for (a, k) in [(alt, 1), (linear, 2)] {
                let (lhs, rhs) = shift_check(&a, &SummationMethod::cesaro(k))?;
                ran += 1;
                if (lhs - rhs).abs() > DEFAULT_TOL {
                    failures.push(format!("{}: sum {lhs} vs a_0 + shifted sum {rhs}", a.name()));
                }
            }
        }
    }
    Ok(suite_report(suite, SuiteOutcome { cases: ran, failures }))
}

fn suite_report(suite: Suite, outcome: SuiteOutcome) -> Report {
    let name = suite.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let passed = outcome.cases - outcome.failures.len();
    let mut text = format!("{name}: {passed}/{} passed", outcome.cases);
    for f in &outcome.failures {
        text.push_str("\n  FAIL ");
        text.push_str(f);
    }
    Report {
        json: json!({
            "suite": name,
            "cases": outcome.cases,
            "passed": passed,
            "failed": outcome.failures.len(),
            "failures": outcome.failures,
        }),
        text,
        code: if outcome.failures.is_empty() { 0 } else { 2 },
    }
}
