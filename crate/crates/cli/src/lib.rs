//! Command implementations behind the `heunx` binary.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use heunx_core::evaluator::{self, asymptotic_constant, evaluate_row, write_eval_csv, EvalControl};
use heunx_core::oracle::{cross_check, SAFE_FRACTION};
use heunx_core::params::{validate_params, ParamsFile};
use heunx_core::recurrence::{
    closed_form_coefficients, recurrence_residual, three_term_coefficients, two_term_coefficients, CoefficientStream,
};
use heunx_core::reduction::{reduce, verify_reduction, Ansatz, CandidateSet, SeedGrid};
use heunx_core::{fmt_real, Error, SeriesControl};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NO_SOLUTION: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "heunx", version, about = "Hypergeometric expansions of Heun functions with two-term coefficient recurrences")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the reduction constraints for q and e_1..e_N.
    Reduce(ReduceArgs),
    /// Tabulate expansion coefficients.
    Coeffs(CoeffsArgs),
    /// Evaluate u, u', u'' and the equation residual at points z.
    Eval(PointArgs),
    /// Run recurrence, constraint, residual and oracle checks.
    Verify(VerifyArgs),
    /// Equation residual at points z.
    Residual(PointArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Source {
    ThreeTerm,
    TwoTerm,
    ClosedForm,
}

#[derive(Debug, Clone, Args)]
pub struct SeriesArgs {
    /// Relative tolerance for series summation.
    #[arg(long, default_value_t = 1e-14)]
    pub rel_tol: f64,
    /// Term cap for series summation.
    #[arg(long, default_value_t = 10_000)]
    pub max_terms: usize,
    /// Largest |z| accepted for evaluation.
    #[arg(long, default_value_t = 0.95)]
    pub z_guard: f64,
}

impl SeriesArgs {
    fn control(&self) -> Result<EvalControl, Error> {
        let series = SeriesControl::new(self.rel_tol, self.max_terms, SeriesControl::default().consecutive_small)?;
        if !(self.z_guard > 0.0 && self.z_guard < 1.0) {
            return Err(Error::Domain(format!("--z-guard must lie in (0, 1), got {}", self.z_guard)));
        }
        Ok(EvalControl { series, z_guard: self.z_guard })
    }
}

#[derive(Debug, Clone, Args)]
pub struct ReduceArgs {
    #[arg(long)]
    pub params: PathBuf,
    /// Number N of ansatz parameters.
    #[arg(long = "n")]
    pub order: usize,
    /// Use the multi-start solver even where closed forms exist.
    #[arg(long)]
    pub force_general: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct CoeffsArgs {
    #[arg(long)]
    pub params: PathBuf,
    /// Ansatz parameters, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub e: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    pub n_max: usize,
    #[arg(long, value_enum, default_value_t = Source::ClosedForm)]
    pub source: Source,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct PointArgs {
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub e: Vec<f64>,
    /// Evaluation points, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub z: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub series: SeriesArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub e: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "0.1,0.25,0.4")]
    pub z: Vec<f64>,
    /// Coefficients checked against the three-term recurrence.
    #[arg(long, default_value_t = 50)]
    pub n_max: usize,
    /// Largest accepted relative three-term residual.
    #[arg(long, default_value_t = 1e-10)]
    pub recurrence_tol: f64,
    /// Largest accepted scale-free equation residual.
    #[arg(long, default_value_t = 1e-7)]
    pub residual_tol: f64,
    /// Largest accepted deviation from the power-series solution.
    #[arg(long, default_value_t = 1e-7)]
    pub oracle_tol: f64,
    #[command(flatten)]
    pub series: SeriesArgs,
}

/// Failure that ends a command with a given exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub kind: &'static str,
    pub detail: String,
}

impl Failure {
    fn invalid(detail: impl Into<String>) -> Self {
        Self { code: EXIT_INVALID, kind: "InvalidInput", detail: detail.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::Invalid(_) => (EXIT_INVALID, "ValidationError"),
            Error::Domain(_) => (EXIT_INVALID, "DomainError"),
            Error::Pole(_) => (EXIT_INVALID, "PoleError"),
            Error::SingularPoint(_) => (EXIT_INVALID, "SingularPoint"),
            Error::PreconditionViolation(_) => (EXIT_INVALID, "PreconditionViolation"),
            Error::NotAReduction(_) => (EXIT_INVALID, "NotAReduction"),
            Error::NoRealRoot(_) => (EXIT_NO_SOLUTION, "NoRealRoot"),
            Error::NoSolutionFound { .. } => (EXIT_NO_SOLUTION, "NoSolutionFound"),
            Error::DegenerateConstraint(_) => (EXIT_NO_SOLUTION, "DegenerateConstraint"),
            Error::DivisionByZero(_) => (EXIT_NUMERICAL, "DivisionByZero"),
            Error::NonConvergence { .. } => (EXIT_NUMERICAL, "NonConvergence"),
            Error::NonFinite { .. } => (EXIT_NUMERICAL, "NonFinite"),
            Error::JacobianSingular => (EXIT_NUMERICAL, "JacobianSingular"),
        };
        Self { code, kind, detail: e.to_string() }
    }
}

type CmdResult = Result<i32, Failure>;

/// Runs a parsed command, writing results to `out` and errors to `err`.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Reduce(a) => cmd_reduce(a, out),
        Command::Coeffs(a) => cmd_coeffs(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Residual(a) => cmd_residual(a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let body = json!({ "error": f.kind, "detail": f.detail, "exit_code": f.code });
            let _ = writeln!(err, "{}", serde_json::to_string_pretty(&body).unwrap_or_default());
            f.code
        }
    }
}

fn read_params(path: &PathBuf) -> Result<ParamsFile, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::invalid(format!("cannot read {}: {e}", path.display())))?;
    Ok(ParamsFile::from_json(&text)?)
}

fn ansatz_from(path: &PathBuf, e: &[f64]) -> Result<Ansatz, Failure> {
    let params = read_params(path)?.to_params()?;
    let validated = validate_params(&params).map_err(Error::Invalid)?;
    Ok(Ansatz::new(validated, e.to_vec()))
}

fn check_points(z: &[f64], ctl: &EvalControl) -> Result<(), Failure> {
    for &x in z {
        ctl.check_z(x)?;
    }
    Ok(())
}

fn emit(out: &mut dyn Write, value: &Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::invalid(e.to_string()))?;
    writeln!(out, "{text}").map_err(|e| Failure { code: EXIT_NUMERICAL, kind: "OutputError", detail: e.to_string() })
}

fn write_text(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes())
        .map_err(|e| Failure { code: EXIT_NUMERICAL, kind: "OutputError", detail: e.to_string() })
}

fn series_json(ctl: &EvalControl) -> Value {
    json!({
        "rel_tol": ctl.series.rel_tol,
        "max_terms": ctl.series.max_terms,
        "consecutive_small": ctl.series.consecutive_small,
        "z_guard": ctl.z_guard,
    })
}

fn reduction_tolerances() -> Value {
    json!({
        "collocation": heunx_core::reduction::COLLOCATION_TOL,
        "a_top": heunx_core::reduction::A_TOP_TOL,
        "delta": heunx_core::reduction::DELTA_TOL,
    })
}

pub fn cmd_reduce(args: &ReduceArgs, out: &mut dyn Write) -> CmdResult {
    let file = read_params(&args.params)?;
    let free = file.for_reduction(args.order)?;
    let set = reduce(&free, args.order, args.force_general, &SeedGrid::default())?;
    match args.format {
        Format::Json => {
            let mut body = set.to_json();
            body["tolerances"] = reduction_tolerances();
            emit(out, &body)?;
        }
        Format::Csv => write_text(out, &reduce_csv(&set))?,
    }
    if set.cases.is_empty() {
        return Err(Failure {
            code: EXIT_NO_SOLUTION,
            kind: "NoSolutionFound",
            detail: format!("no admissible case for N = {}; {} candidate(s) rejected", set.order, set.rejected.len()),
        });
    }
    Ok(EXIT_OK)
}

fn reduce_csv(set: &CandidateSet) -> String {
    let mut text = String::from("N,q_root_index,q,e,passed\n");
    for case in &set.cases {
        let e: Vec<String> = case.e_list().iter().map(|x| fmt_real(*x)).collect();
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            set.order,
            case.q_root_index(),
            fmt_real(case.q()),
            e.join(";"),
            case.report().passed
        ));
    }
    text
}

fn stream_for(case: &Ansatz, n_max: usize, source: Source) -> Result<CoefficientStream, Failure> {
    let p = case.params();
    Ok(match source {
        Source::ThreeTerm => three_term_coefficients(p, n_max)?,
        Source::TwoTerm => two_term_coefficients(p, case.e_list(), n_max)?,
        Source::ClosedForm => closed_form_coefficients(p, case.e_list(), n_max)?,
    })
}

pub fn cmd_coeffs(args: &CoeffsArgs, out: &mut dyn Write) -> CmdResult {
    let case = ansatz_from(&args.params, &args.e)?;
    let stream = stream_for(&case, args.n_max, args.source)?;
    match args.format {
        Format::Csv => {
            let mut buf = Vec::new();
            stream.write_csv(case.params(), &mut buf)?;
            out.write_all(&buf)
                .map_err(|e| Failure { code: EXIT_NUMERICAL, kind: "OutputError", detail: e.to_string() })?;
        }
        Format::Json => {
            let residuals = heunx_core::recurrence::recurrence_residuals(&stream, case.params());
            let rows: Vec<Value> = stream
                .values()
                .iter()
                .enumerate()
                .map(|(n, c)| json!({ "n": n, "c_n": c, "ratio": stream.ratio(n), "residual_n": residuals[n] }))
                .collect();
            emit(
                out,
                &json!({
                    "params": case.params(),
                    "e": case.e_list(),
                    "source": stream.source(),
                    "max_residual": recurrence_residual(&stream, case.params()),
                    "rows": rows,
                }),
            )?;
        }
    }
    Ok(EXIT_OK)
}

pub fn cmd_eval(args: &PointArgs, out: &mut dyn Write) -> CmdResult {
    let ctl = args.series.control()?;
    check_points(&args.z, &ctl)?;
    let case = ansatz_from(&args.params, &args.e)?;
    let rows = args.z.iter().map(|&z| evaluate_row(&case, z, &ctl)).collect::<Result<Vec<_>, _>>()?;
    match args.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_eval_csv(&rows, &mut buf)?;
            out.write_all(&buf)
                .map_err(|e| Failure { code: EXIT_NUMERICAL, kind: "OutputError", detail: e.to_string() })?;
        }
        Format::Json => emit(
            out,
            &json!({
                "params": case.params(),
                "e": case.e_list(),
                "tolerances": series_json(&ctl),
                "truncation": evaluator::detect_truncation(&case),
                "asymptotic_constant": asymptotic_constant(&case)?,
                "rows": rows,
            }),
        )?,
    }
    Ok(EXIT_OK)
}

pub fn cmd_residual(args: &PointArgs, out: &mut dyn Write) -> CmdResult {
    let ctl = args.series.control()?;
    check_points(&args.z, &ctl)?;
    let case = ansatz_from(&args.params, &args.e)?;
    let mut rows = Vec::with_capacity(args.z.len());
    for &z in &args.z {
        let row = evaluate_row(&case, z, &ctl)?;
        let residual = row.residual.ok_or(Error::SingularPoint(z))?;
        rows.push((z, residual));
    }
    match args.format {
        Format::Csv => {
            let mut text = String::from("z,residual\n");
            for (z, r) in &rows {
                text.push_str(&format!("{},{}\n", fmt_real(*z), fmt_real(*r)));
            }
            write_text(out, &text)?;
        }
        Format::Json => {
            let rows: Vec<Value> = rows.iter().map(|(z, r)| json!({ "z": z, "residual": r })).collect();
            emit(out, &json!({ "tolerances": series_json(&ctl), "rows": rows }))?;
        }
    }
    Ok(EXIT_OK)
}

struct Check {
    name: &'static str,
    value: Option<f64>,
    tolerance: f64,
    passed: bool,
    detail: Option<String>,
}

impl Check {
    fn measured(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self { name, value: Some(value), tolerance, passed: value <= tolerance, detail: None }
    }

    fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "value": self.value,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "detail": self.detail,
        })
    }
}

pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> CmdResult {
    let ctl = args.series.control()?;
    check_points(&args.z, &ctl)?;
    let case = ansatz_from(&args.params, &args.e)?;
    let radius = SAFE_FRACTION * case.params().a.abs().min(1.0);
    if let Some(z) = args.z.iter().find(|z| z.abs() >= radius) {
        return Err(Failure::invalid(format!("z = {z} lies outside the power-series safe radius {radius}")));
    }

    let mut checks = Vec::new();
    let stream = closed_form_coefficients(case.params(), case.e_list(), args.n_max)?;
    checks.push(Check::measured("recurrence_residual", recurrence_residual(&stream, case.params()), args.recurrence_tol));

    let report = verify_reduction(&case);
    checks.push(Check {
        name: "verify_reduction",
        value: Some(report.max_relative_value()),
        tolerance: report.tolerance_used,
        passed: report.passed,
        detail: report.failure_detail(),
    });

    let mut worst = 0.0f64;
    for &z in &args.z {
        worst = worst.max(evaluator::ode_residual_with(&case, z, &ctl)?);
    }
    checks.push(Check::measured("ode_residual", worst, args.residual_tol));
    checks.push(Check::measured("cross_check", cross_check(&case, &args.z, &ctl)?, args.oracle_tol));

    let passed = checks.iter().all(|c| c.passed);
    let first_failure = checks.iter().find(|c| !c.passed).map(|c| c.name);
    emit(
        out,
        &json!({
            "params": case.params(),
            "e": case.e_list(),
            "z": args.z,
            "n_max": args.n_max,
            "tolerances": {
                "series": series_json(&ctl),
                "reduction": reduction_tolerances(),
                "recurrence": args.recurrence_tol,
                "residual": args.residual_tol,
                "oracle": args.oracle_tol,
            },
            "truncation": evaluator::detect_truncation(&case),
            "asymptotic_constant": asymptotic_constant(&case)?,
            "checks": checks.iter().map(Check::to_json).collect::<Vec<_>>(),
            "first_failure": first_failure,
            "passed": passed,
        }),
    )?;
    Ok(if passed { EXIT_OK } else { EXIT_CHECK_FAILED })
}
