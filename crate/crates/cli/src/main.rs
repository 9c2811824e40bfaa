use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use binquant::oracle::default_a_grid;
use binquant::oracle::DEFAULT_FD_STEP;
use binquant::{
    check_log_concavity_shift, classify_monotonicity, grid_search, lemma_checks,
    predict_single_threshold_with_grid, solve, sweep_a_with_grid, verify_stationarity, Error,
    OracleResult, QuantizerDesign, RunConfig, StationarityForm,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

const EXIT_CONFIG: u8 = 1;
const EXIT_DEGENERATE: u8 = 2;
const EXIT_VERIFY: u8 = 3;

/// Largest relative spread of r(h_i) that `verify` accepts.
const VERIFY_RESIDUAL_TOL: f64 = 1e-5;
/// Slack allowed when the solver trails the brute-force oracle.
const VERIFY_GAP_TOL: f64 = 1e-4;

#[derive(Parser)]
#[command(
    name = "binquant",
    version,
    about = "Mutual-information-optimal binary quantizers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the optimal level a* and its thresholds.
    Solve(Common),
    /// Tabulate f, g, the stationarity function and MI over a grid of levels.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.01)]
        a_min: f64,
        #[arg(long, default_value_t = 0.99)]
        a_max: f64,
        #[arg(long, default_value_t = 99)]
        steps: usize,
    },
    /// Compare the solver against a brute-force search and run the property checks.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Thresholds in the oracle search (defaults to the solver's count, at most 3).
        #[arg(long)]
        n_thresholds: Option<usize>,
        #[arg(long, default_value_t = 0.01)]
        grid_step: f64,
    },
    /// Classify r(y) and predict whether one threshold suffices.
    Classify(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Override the stationarity function from the config.
    #[arg(long, value_enum)]
    stationarity: Option<Form>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Form {
    Corrected,
    Reciprocal,
}

impl From<Form> for StationarityForm {
    fn from(f: Form) -> Self {
        match f {
            Form::Corrected => StationarityForm::Corrected,
            Form::Reciprocal => StationarityForm::Reciprocal,
        }
    }
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn config(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            msg: msg.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoSignChange { .. }
            | Error::DegenerateChannel { .. }
            | Error::NotConverged { .. } => EXIT_DEGENERATE,
            _ => EXIT_CONFIG,
        };
        Self {
            code,
            msg: e.to_string(),
        }
    }
}

/// Output plus the exit code to report after writing it.
struct Report {
    body: String,
    code: u8,
}

impl Report {
    fn ok(body: String) -> Self {
        Self { body, code: 0 }
    }
}

/// At most 6 significant digits, trailing zeros trimmed.
fn fmt6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let e = x.abs().log10().floor() as i32;
    if (-4..6).contains(&e) {
        let d = (5 - e).max(0) as usize;
        let s = format!("{x:.d$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.5e}");
        let (m, exp) = s.split_once('e').unwrap();
        let m = if m.contains('.') {
            m.trim_end_matches('0').trim_end_matches('.')
        } else {
            m
        };
        format!("{m}e{exp}")
    }
}

fn fmt_tuple(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|&x| fmt6(x)).collect();
    format!("({})", parts.join(", "))
}

/// 17 significant digits; `-0` prints as `0`.
fn fmt17(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

fn to_json<T: Serialize>(v: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| Failure::config(format!("cannot serialise output: {e}")))
}

fn load(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(f) = common.stationarity {
        cfg.solver.stationarity = f.into();
    }
    Ok(cfg)
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    design: &'a QuantizerDesign,
    single_threshold_predicted: bool,
}

fn cmd_solve(common: &Common) -> Result<Report, Failure> {
    let cfg = load(common)?;
    let design = solve(&cfg.channel, &cfg.solver)?;
    let predicted = predict_single_threshold_with_grid(&cfg.channel, cfg.solver.grid_points)?;
    let body = match common.format {
        Format::Json => to_json(&SolveOutput {
            design: &design,
            single_threshold_predicted: predicted,
        })?,
        Format::Text => {
            let mut s = String::new();
            let h = design.thresholds.as_slice();
            writeln!(s, "a* = {}", fmt6(design.a_star)).unwrap();
            writeln!(s, "r* = {}", fmt6(design.r_star)).unwrap();
            writeln!(s, "thresholds ({}) = {}", h.len(), fmt_tuple(h)).unwrap();
            writeln!(s, "mapping = {:?}", design.mapping).unwrap();
            writeln!(
                s,
                "channel: P(Z=0|X=0) = {}, P(Z=1|X=1) = {}",
                fmt6(design.channel.a11),
                fmt6(design.channel.a22)
            )
            .unwrap();
            writeln!(s, "MI = {} bits", fmt6(design.mi_bits)).unwrap();
            writeln!(
                s,
                "stationarity residual = {}",
                fmt6(design.stationarity_residual)
            )
            .unwrap();
            writeln!(
                s,
                "stationarity function = {}, bisection steps = {}",
                design.stationarity.name(),
                design.iterations
            )
            .unwrap();
            writeln!(
                s,
                "single-threshold optimal (predicted): {}",
                yes_no(predicted)
            )
            .unwrap();
            for w in &design.warnings {
                writeln!(s, "warning: {w}").unwrap();
            }
            s
        }
    };
    Ok(Report::ok(body))
}

fn cmd_sweep(common: &Common, a_min: f64, a_max: f64, steps: usize) -> Result<Report, Failure> {
    if !(a_min > 0.0 && a_min < a_max && a_max < 1.0) {
        return Err(Failure::config(format!(
            "need 0 < a-min < a-max < 1, got {a_min} and {a_max}"
        )));
    }
    if steps < 2 {
        return Err(Failure::config(format!("need steps >= 2, got {steps}")));
    }
    let cfg = load(common)?;
    let h = (a_max - a_min) / (steps - 1) as f64;
    let grid: Vec<f64> = (0..steps)
        .map(|i| {
            if i == steps - 1 {
                a_max
            } else {
                a_min + i as f64 * h
            }
        })
        .collect();
    let rows = sweep_a_with_grid(
        &cfg.channel,
        &grid,
        cfg.solver.stationarity,
        cfg.solver.grid_points,
    )?;
    let body = match common.format {
        Format::Json => to_json(&rows)?,
        Format::Text => {
            let mut s = String::from("a,f,g,F,mi_bits,n_roots,degenerate\n");
            for r in &rows {
                writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    fmt17(r.a),
                    fmt17(r.f),
                    fmt17(r.g),
                    fmt17(r.stationarity),
                    fmt17(r.mi_bits),
                    r.n_roots,
                    r.degenerate
                )
                .unwrap();
            }
            s
        }
    };
    Ok(Report::ok(body))
}

#[derive(Serialize)]
struct CheckLine {
    name: String,
    gating: bool,
    pass: bool,
    worst_violation: f64,
    worst_at: Option<f64>,
    points_checked: usize,
    points_skipped: usize,
}

#[derive(Serialize)]
struct VerifyOutput {
    design: QuantizerDesign,
    oracle: Vec<(usize, OracleResult)>,
    mi_gap_bits: f64,
    gap_pass: bool,
    residual_pass: bool,
    checks: Vec<CheckLine>,
    pass: bool,
}

fn cmd_verify(
    common: &Common,
    n_thresholds: Option<usize>,
    grid_step: f64,
) -> Result<Report, Failure> {
    let cfg = load(common)?;
    let design = solve(&cfg.channel, &cfg.solver)?;
    let n = n_thresholds.unwrap_or_else(|| design.thresholds.len().clamp(1, 3));
    let mut oracle = Vec::with_capacity(n);
    for k in 1..=n {
        oracle.push((k, grid_search(&cfg.channel, k, grid_step)?));
    }
    let best = oracle
        .iter()
        .map(|(_, o)| o.best_mi_bits)
        .fold(f64::NEG_INFINITY, f64::max);
    let gap = design.mi_bits - best;
    let gap_pass = gap >= -VERIFY_GAP_TOL;
    let residual = verify_stationarity(&cfg.channel, &design).residual;
    let residual_pass = residual <= VERIFY_RESIDUAL_TOL;
    let lemmas = lemma_checks(&cfg.channel, &default_a_grid(), DEFAULT_FD_STEP)?;
    let checks: Vec<CheckLine> = lemmas
        .outcomes
        .iter()
        .map(|o| CheckLine {
            name: o.check.name().to_string(),
            gating: o.check.gating(),
            pass: o.pass,
            worst_violation: o.worst_violation,
            worst_at: o.worst_at,
            points_checked: o.points_checked,
            points_skipped: o.points_skipped,
        })
        .collect();
    let pass = gap_pass && residual_pass && lemmas.all_pass();

    let body = match common.format {
        Format::Json => to_json(&VerifyOutput {
            design: design.clone(),
            oracle,
            mi_gap_bits: gap,
            gap_pass,
            residual_pass,
            checks,
            pass,
        })?,
        Format::Text => {
            let mut s = String::new();
            let h = design.thresholds.as_slice();
            writeln!(
                s,
                "solver: a* = {}, {} threshold(s) {}, MI = {} bits",
                fmt6(design.a_star),
                h.len(),
                fmt_tuple(h),
                fmt6(design.mi_bits)
            )
            .unwrap();
            for (k, o) in &oracle {
                writeln!(
                    s,
                    "oracle n={k} step {}: MI = {} bits at {}",
                    fmt6(grid_step),
                    fmt6(o.best_mi_bits),
                    fmt_tuple(o.best_thresholds.as_slice())
                )
                .unwrap();
            }
            writeln!(
                s,
                "MI gap (solver - oracle) = {} bits  {}",
                fmt6(gap),
                pass_fail(gap_pass)
            )
            .unwrap();
            writeln!(
                s,
                "stationarity residual = {}  {}",
                fmt6(residual),
                pass_fail(residual_pass)
            )
            .unwrap();
            writeln!(s, "property checks over a = 0.05..0.95:").unwrap();
            for c in &checks {
                let tag = if c.gating {
                    pass_fail(c.pass)
                } else if c.pass {
                    "info"
                } else {
                    "INFO"
                };
                let at = c
                    .worst_at
                    .map(|a| format!(" at a = {}", fmt6(a)))
                    .unwrap_or_default();
                writeln!(
                    s,
                    "  {tag:<4}  {:<42} worst {}{at} ({} checked, {} skipped)",
                    c.name,
                    fmt6(c.worst_violation),
                    c.points_checked,
                    c.points_skipped
                )
                .unwrap();
            }
            writeln!(s, "verdict: {}", pass_fail(pass)).unwrap();
            s
        }
    };
    Ok(Report {
        body,
        code: if pass { 0 } else { EXIT_VERIFY },
    })
}

#[derive(Serialize)]
struct ClassifyOutput {
    monotonicity: binquant::MonotonicityClass,
    shift: binquant::ShiftVerdict,
    single_threshold_predicted: bool,
}

fn cmd_classify(common: &Common) -> Result<Report, Failure> {
    let cfg = load(common)?;
    let n = cfg.solver.grid_points;
    let monotonicity = classify_monotonicity(&cfg.channel, n)?;
    let shift = check_log_concavity_shift(&cfg.channel, n)?;
    let predicted = predict_single_threshold_with_grid(&cfg.channel, n)?;
    let body = match common.format {
        Format::Json => to_json(&ClassifyOutput {
            monotonicity,
            shift,
            single_threshold_predicted: predicted,
        })?,
        Format::Text => {
            let mut s = String::new();
            writeln!(
                s,
                "{:?}; single-threshold optimal: {}",
                monotonicity.kind,
                yes_no(predicted)
            )
            .unwrap();
            if monotonicity.flat {
                writeln!(s, "r(y) is constant: the channel carries no information").unwrap();
            }
            if shift.shift_detected {
                writeln!(
                    s,
                    "translate pair: phi1(y) = phi0(y - {}); log-concave: {}, log-convex: {}",
                    fmt6(shift.mu),
                    yes_no(shift.log_concave),
                    yes_no(shift.log_convex)
                )
                .unwrap();
            } else {
                writeln!(s, "translate pair: no").unwrap();
            }
            writeln!(s, "grid points: {n}").unwrap();
            s
        }
    };
    Ok(Report::ok(body))
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn pass_fail(b: bool) -> &'static str {
    if b {
        "PASS"
    } else {
        "FAIL"
    }
}

fn run(cli: Cli) -> Result<(Report, Option<PathBuf>), Failure> {
    let (report, common) = match &cli.command {
        Command::Solve(c) => (cmd_solve(c)?, c),
        Command::Sweep {
            common,
            a_min,
            a_max,
            steps,
        } => (cmd_sweep(common, *a_min, *a_max, *steps)?, common),
        Command::Verify {
            common,
            n_thresholds,
            grid_step,
        } => (cmd_verify(common, *n_thresholds, *grid_step)?, common),
        Command::Classify(c) => (cmd_classify(c)?, c),
    };
    Ok((report, common.out.clone()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok((report, out)) => {
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, &report.body) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return ExitCode::from(EXIT_CONFIG);
                    }
                }
                None => print!("{}", report.body),
            }
            ExitCode::from(report.code)
        }
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
