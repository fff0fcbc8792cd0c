//! File-driven front end: parse a distribution document, dispatch a solver,
//! and emit result documents, verdicts, audits, or sweep data.

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use pidkit_core::assembly::{validate, validate_gaussian, PidAtoms};
use pidkit_core::blackwell::{lecam_deficiency, sufficiency_discrete, sufficiency_gaussian, Dominant};
use pidkit_core::config::{Direction, SolverConfig};
use pidkit_core::io::{parse_input, OutputDocument, ParsedInput};
use pidkit_core::prob::{Channel, VarSet};
use pidkit_core::{broja, delta, ipid, lambda, risk, Error};

#[derive(Parser)]
#[command(name = "pidkit", version, about = "Partial information decompositions and channel-order diagnostics")]
struct Cli {
    /// Worker threads; PIDKIT_THREADS is the fallback, then all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Delta,
    Broja,
    Lambda,
    Ipid,
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    X,
    Y,
}

#[derive(Args)]
struct SolverArgs {
    /// Relative objective-change tolerance (or duality-gap target in bits).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Extraction alphabet cap for the I-PID; default k_M + 1.
    #[arg(long)]
    t_cap: Option<usize>,
    /// Extraction matrix rows for the Gaussian I-PID; default d_M.
    #[arg(long)]
    t_rank: Option<usize>,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        let mut cfg = SolverConfig::default();
        if let Some(t) = self.tol {
            cfg.tol = t;
        }
        if let Some(r) = self.restarts {
            cfg.restarts = r;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.t_cap = self.t_cap.or(cfg.t_cap);
        cfg.t_rank = self.t_rank.or(cfg.t_rank);
        cfg
    }
}

#[derive(Subcommand)]
enum Command {
    /// Decompose one distribution and write the result document.
    Compute {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        /// Trade-off weight; required when --method lambda.
        #[arg(long)]
        lambda: Option<f64>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the JSON document here and a readable summary to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sufficiency verdicts in both directions plus Le Cam deficiencies.
    Blackwell {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample bounded losses and audit the deficiency risk bound. The seed
    /// drives both the loss draw and the solvers.
    RiskAudit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 50)]
        losses: usize,
        /// Keep the per-loss rows in the report.
        #[arg(long)]
        verbose: bool,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve delta^lambda over a grid and write CSV rows.
    Sweep {
        #[arg(long)]
        input: PathBuf,
        /// Either `A:B:logsteps=N` or a comma-separated list of values.
        #[arg(long)]
        grid: String,
        #[arg(long)]
        csv: PathBuf,
        /// Which side's deficiency is relaxed.
        #[arg(long, value_enum, default_value_t = Side::X)]
        direction: Side,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

/// Failure carrying the process exit code: 1 invalid input, 2
/// non-convergence, 3 internal.
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    let kind = match code {
        1 => "invalid-input",
        2 => "non-convergence",
        _ => "internal",
    };
    Failure { code, kind, message: message.into() }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::InvalidArgument(m) | Error::SingularModel(m) => fail(1, m),
            Error::Internal(m) => fail(3, m),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            return report(fail(1, e.to_string()));
        }
    };
    if let Err(f) = setup_threads(cli.threads) {
        return report(f);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(f),
    }
}

fn report(f: Failure) -> ExitCode {
    let obj = json!({"error": {"kind": f.kind, "message": f.message}});
    eprintln!("{obj}");
    ExitCode::from(f.code)
}

fn setup_threads(flag: Option<usize>) -> Result<(), Failure> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("PIDKIT_THREADS") {
            Ok(v) => Some(
                v.parse::<usize>()
                    .map_err(|_| fail(1, format!("PIDKIT_THREADS is not a thread count: {v:?}")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(fail(1, "thread count must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| fail(3, format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Compute { input, method, lambda, solver, out } => {
            cmd_compute(&input, method, lambda, &solver.config(), out.as_deref())
        }
        Command::Blackwell { input, out } => cmd_blackwell(&input, out.as_deref()),
        Command::RiskAudit { input, losses, verbose, solver, out } => {
            cmd_risk_audit(&input, losses, verbose, &solver.config(), out.as_deref())
        }
        Command::Sweep { input, grid, csv, direction, solver } => {
            cmd_sweep(&input, &grid, &csv, direction, &solver.config())
        }
    }
}

/// Writes to stdout, swallowing broken pipes so downstream `head` does not
/// turn into a panic.
fn emit(text: std::fmt::Arguments) {
    let _ = std::io::stdout().write_fmt(format_args!("{text}\n"));
}

macro_rules! outln {
    ($($arg:tt)*) => { emit(format_args!($($arg)*)) };
}

fn write_json(value: &serde_json::Value, out: Option<&std::path::Path>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| fail(3, e.to_string()))?;
    match out {
        Some(path) => std::fs::write(path, text + "\n")
            .map_err(|e| fail(1, format!("cannot write {}: {e}", path.display()))),
        None => {
            outln!("{text}");
            Ok(())
        }
    }
}

/// Bits for display: arithmetic noise down to -1e-6 shows as zero, anything
/// more negative is shown raw.
fn display_bits(bits: f64) -> f64 {
    if bits < 0.0 && bits >= -1e-6 {
        0.0
    } else {
        bits
    }
}

fn print_summary(atoms: &PidAtoms, extra: &[(&str, String)]) {
    outln!("method   {}", atoms.method.label());
    outln!("units    bits");
    for (label, v) in [
        ("UI_X", atoms.ui_x.bits),
        ("UI_Y", atoms.ui_y.bits),
        ("RI", atoms.ri.bits),
        ("SI", atoms.si.bits),
        ("I(M;X)", atoms.i_mx.bits),
        ("I(M;Y)", atoms.i_my.bits),
        ("I(M;XY)", atoms.i_mxy.bits),
    ] {
        outln!("{label:<8} {:.6}", display_bits(v));
    }
    for (label, v) in extra {
        outln!("{label:<8} {v}");
    }
}

fn channel_json(ch: &Channel) -> serde_json::Value {
    json!({
        "out_size": ch.out_size(),
        "in_size": ch.in_size(),
        "kernel": ch.kernel(),
    })
}

fn cmd_compute(
    input: &std::path::Path,
    method: Method,
    lambda_arg: Option<f64>,
    cfg: &SolverConfig,
    out: Option<&std::path::Path>,
) -> Result<(), Failure> {
    let parsed = parse_input(input)?;
    let (atoms, mut diagnostics, converged) = match (&parsed, method) {
        (ParsedInput::Discrete(d), Method::Delta) => {
            let pid = delta::delta_pid(d, cfg)?;
            let diag = json!({
                "deficiency_x": pid.deficiency_x.value,
                "deficiency_y": pid.deficiency_y.value,
                "cyan_x": pid.cyan.cyan_x,
                "cyan_y": pid.cyan.cyan_y,
                "iterations": [pid.deficiency_x.iterations, pid.deficiency_y.iterations],
                "converged": pid.deficiency_x.converged && pid.deficiency_y.converged,
            });
            let ok = pid.deficiency_x.converged && pid.deficiency_y.converged;
            (pid.atoms, diag, ok)
        }
        (ParsedInput::Discrete(d), Method::Broja) => {
            let pid = broja::tilde_pid(d, cfg)?;
            let diag = json!({
                "ui_x": pid.ui_x.value,
                "gap_bits": pid.ui_x.gap.bits,
                "iterations": pid.ui_x.iterations,
                "converged": pid.ui_x.converged,
            });
            let ok = pid.ui_x.converged;
            (pid.atoms, diag, ok)
        }
        (ParsedInput::Discrete(d), Method::Lambda) => {
            let lam = lambda_arg
                .ok_or_else(|| fail(1, "--method lambda requires --lambda"))?;
            let pid = lambda::lambda_pid(d, lam, cfg)?;
            let diag = json!({
                "lambda": lam,
                "total_x": pid.x.total,
                "total_y": pid.y.total,
                "kl_part_x": pid.x.kl_part,
                "kl_part_y": pid.y.kl_part,
                "cmi_part_x": pid.x.cmi_part,
                "cmi_part_y": pid.y.cmi_part,
                "converged": pid.x.converged && pid.y.converged,
            });
            let ok = pid.x.converged && pid.y.converged;
            (pid.atoms, diag, ok)
        }
        (ParsedInput::Discrete(d), Method::Ipid) => {
            let pid = ipid::ipid(d, cfg)?;
            let diag = json!({
                "deficiency_x": pid.x.value,
                "deficiency_y": pid.y.value,
                "certified": [pid.x.certified_lower_bound, pid.y.certified_lower_bound],
                "cyan_x": pid.cyan.cyan_x,
                "cyan_y": pid.cyan.cyan_y,
                "converged": pid.x.converged && pid.y.converged,
            });
            let ok = pid.x.converged && pid.y.converged;
            (pid.atoms, diag, ok)
        }
        (ParsedInput::Gaussian(g), Method::Ipid) => {
            let pid = ipid::ipid_gaussian(g, cfg)?;
            let diag = json!({
                "deficiency_x": pid.x.value,
                "deficiency_y": pid.y.value,
                "supremum_at_boundary": [pid.x.supremum_at_boundary, pid.y.supremum_at_boundary],
                "bound_violations": pid.bound_violations,
                "converged": pid.x.converged && pid.y.converged,
            });
            let ok = pid.x.converged && pid.y.converged;
            (pid.atoms, diag, ok)
        }
        (ParsedInput::Gaussian(_), m) => {
            let name = match m {
                Method::Delta => "delta",
                Method::Broja => "broja",
                Method::Lambda => "lambda",
                Method::Ipid => unreachable!(),
            };
            return Err(fail(1, format!("method {name} supports only discrete inputs")));
        }
    };

    let residual = match &parsed {
        ParsedInput::Discrete(d) => validate(&atoms, d)?.max_residual(),
        ParsedInput::Gaussian(g) => validate_gaussian(&atoms, g)?.max_residual(),
    };
    diagnostics["max_residual_bits"] = json!(residual);

    let label = atoms.method.label();
    let doc = OutputDocument::new(label, atoms, diagnostics, cfg);
    let value = serde_json::to_value(&doc).map_err(|e| fail(3, e.to_string()))?;
    write_json(&value, out)?;
    if out.is_some() {
        print_summary(&doc.atoms, &[("converged", converged.to_string())]);
    }
    if !converged {
        return Err(fail(2, "solver stopped before reaching its tolerance"));
    }
    Ok(())
}

fn cmd_blackwell(input: &std::path::Path, out: Option<&std::path::Path>) -> Result<(), Failure> {
    let value = match parse_input(input)? {
        ParsedInput::Discrete(d) => {
            let px = d.conditional_channel(VarSet::X, VarSet::M)?.channel;
            let py = d.conditional_channel(VarSet::Y, VarSet::M)?.channel;
            let x_over_y = sufficiency_discrete(&px, &py)?;
            let y_over_x = sufficiency_discrete(&py, &px)?;
            let lec_y_from_x = lecam_deficiency(&px, &py)?;
            let lec_x_from_y = lecam_deficiency(&py, &px)?;
            json!({
                "kind": "discrete",
                "x_sufficient_for_y": {
                    "sufficient": x_over_y.sufficient,
                    "residual": x_over_y.residual,
                    "witness": channel_json(&x_over_y.witness),
                },
                "y_sufficient_for_x": {
                    "sufficient": y_over_x.sufficient,
                    "residual": y_over_x.residual,
                    "witness": channel_json(&y_over_x.witness),
                },
                "lecam_emulate_y_from_x": lec_y_from_x.value,
                "lecam_emulate_x_from_y": lec_x_from_y.value,
            })
        }
        ParsedInput::Gaussian(g) => {
            let x_dominant = sufficiency_gaussian(&g, Dominant::X)?;
            let y_dominant = sufficiency_gaussian(&g, Dominant::Y)?;
            let rep = ipid::blackwellian_check_gaussian(&g, &SolverConfig::default())?;
            json!({
                "kind": "gaussian",
                "x_sufficient_for_y": {"sufficient": x_dominant},
                "y_sufficient_for_x": {"sufficient": y_dominant},
                "info_deficiency_x": rep.delta_x,
                "info_deficiency_y": rep.delta_y,
                "agreement": [rep.agree_x, rep.agree_y],
            })
        }
    };
    write_json(&value, out)
}

fn cmd_risk_audit(
    input: &std::path::Path,
    losses: usize,
    verbose: bool,
    cfg: &SolverConfig,
    out: Option<&std::path::Path>,
) -> Result<(), Failure> {
    let d = match parse_input(input)? {
        ParsedInput::Discrete(d) => d,
        ParsedInput::Gaussian(_) => {
            return Err(fail(1, "risk-audit supports only discrete inputs"));
        }
    };
    let mut rep = risk::risk_gap_audit(&d, cfg, losses, cfg.seed)?;
    if !verbose {
        rep.rows.clear();
    }
    let value = serde_json::to_value(&rep).map_err(|e| fail(3, e.to_string()))?;
    write_json(&value, out)
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let bad = |msg: &str| fail(1, format!("grid {spec:?}: {msg}"));
    let grid = if let Some((range, steps)) = spec.split_once(":logsteps=") {
        let (a, b) = range
            .split_once(':')
            .ok_or_else(|| bad("expected A:B:logsteps=N"))?;
        let a: f64 = a.trim().parse().map_err(|_| bad("A is not a number"))?;
        let b: f64 = b.trim().parse().map_err(|_| bad("B is not a number"))?;
        let n: usize = steps.trim().parse().map_err(|_| bad("N is not a count"))?;
        if n < 2 {
            return Err(bad("need at least 2 points"));
        }
        if a <= 0.0 || b <= 0.0 {
            return Err(bad("log grid endpoints must be positive"));
        }
        let (la, lb) = (a.ln(), b.ln());
        (0..n)
            .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
            .collect()
    } else {
        spec.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad("not a number list")))
            .collect::<Result<Vec<f64>, Failure>>()?
    };
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(fail(1, "grid must be strictly increasing"));
    }
    if grid.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(fail(1, "grid values must be finite and non-negative"));
    }
    Ok(grid)
}

fn cmd_sweep(
    input: &std::path::Path,
    grid_spec: &str,
    csv: &std::path::Path,
    direction: Side,
    cfg: &SolverConfig,
) -> Result<(), Failure> {
    let d = match parse_input(input)? {
        ParsedInput::Discrete(d) => d,
        ParsedInput::Gaussian(_) => {
            return Err(fail(1, "sweep supports only discrete inputs"));
        }
    };
    let grid = parse_grid(grid_spec)?;
    let dir = match direction {
        Side::X => Direction::XMinusY,
        Side::Y => Direction::YMinusX,
    };
    let mut file = std::fs::File::create(csv)
        .map_err(|e| fail(1, format!("cannot write {}: {e}", csv.display())))?;
    writeln!(file, "lambda,total_bits,kl_bits,cmi_bits,converged")
        .map_err(|e| fail(3, e.to_string()))?;
    let mut write_row = |r: &lambda::LambdaResult| -> Result<(), Failure> {
        writeln!(
            file,
            "{},{},{},{},{}",
            r.lambda, r.total.bits, r.kl_part.bits, r.cmi_part.bits, r.converged
        )
        .map_err(|e| fail(3, e.to_string()))?;
        file.flush().map_err(|e| fail(3, e.to_string()))
    };
    match lambda::lambda_sweep(&d, dir, &grid, cfg) {
        Ok(results) => {
            for r in &results {
                write_row(r)?;
            }
            Ok(())
        }
        Err(_) => {
            // Degrade to point-by-point so finished points still land on
            // disk before the failing one aborts the run.
            for lam in &grid {
                let r = lambda::delta_lambda(&d, dir, *lam, cfg)?;
                write_row(&r)?;
            }
            Ok(())
        }
    }
}
