use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use wpmec::admm::{self, AdmmConfig};
use wpmec::experiments::{self, Format as SweepFormat};
use wpmec::{
    enumerate_optimal, load_instance, local_only, offloading_only, Error, ExactConfig, Instance64,
    SolveReport64,
};

#[derive(Parser)]
#[command(name = "wpmec", version, about = "Weighted sum computation rate solvers for wireless-powered edge computing")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug, -vvv trace).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    /// Worker threads; 0 uses every core.
    #[arg(long, env = "WPMEC_WORKERS", global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance with the chosen method.
    Solve(SolveArgs),
    /// Exact optimum by enumerating every mode set.
    Exact(CommonArgs),
    /// All-offload or all-local benchmark.
    Baseline {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = Baseline::OffloadOnly)]
        method: Baseline,
    },
    /// Run a scenario sweep and write its table.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Instance JSON file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = OutFormat::Text)]
    format: OutFormat,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Largest N accepted by enumeration.
    #[arg(long)]
    enumeration_cap: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum, default_value_t = SolveMethod::Admm)]
    method: SolveMethod,
    /// Per-iteration ADMM trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Penalty parameter (default: the instance's epsilon).
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    #[arg(long)]
    sigma1_coeff: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    init_a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    init_multiplier: Option<f64>,
    #[arg(long)]
    subproblem_tol: Option<f64>,
    /// Report the raw ADMM allocation without the final re-solve.
    #[arg(long)]
    no_polish: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Scenario spec JSON file.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    format: TableFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveMethod {
    Admm,
    Optimal,
    OffloadOnly,
    LocalOnly,
}

#[derive(Clone, Copy, ValueEnum)]
enum Baseline {
    OffloadOnly,
    LocalOnly,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if is_usage(&e) { 2 } else { 1 };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn is_usage(e: &Error) -> bool {
    match e {
        Error::InvalidInput { .. } | Error::Capacity { .. } | Error::Json { .. } => true,
        Error::Scenario { source, .. } | Error::Subproblem { source, .. } => is_usage(source),
        _ => false,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let workers = cli.workers;
    match cli.command {
        Command::Solve(args) => solve(args, workers),
        Command::Exact(common) => {
            let inst = load_instance::<f64>(&common.input)?;
            let report = enumerate_optimal(&inst, &exact_config(&common, workers))?;
            emit(&report, &common)
        }
        Command::Baseline { common, method } => {
            let inst = load_instance::<f64>(&common.input)?;
            let cfg = exact_config(&common, workers);
            let report = match method {
                Baseline::OffloadOnly => offloading_only(&inst, &cfg)?,
                Baseline::LocalOnly => local_only(&inst, &cfg)?,
            };
            emit(&report, &common)
        }
        Command::Sweep(args) => sweep(args, workers),
    }
}

fn exact_config(common: &CommonArgs, workers: Option<usize>) -> ExactConfig {
    let mut cfg = ExactConfig::default();
    if let Some(cap) = common.enumeration_cap {
        cfg.enumeration_cap = cap;
    }
    if let Some(w) = workers {
        cfg.workers = w;
    }
    cfg
}

fn admm_config(args: &SolveArgs, workers: Option<usize>) -> AdmmConfig {
    let mut cfg = AdmmConfig {
        exact: exact_config(&args.common, workers),
        ..AdmmConfig::default()
    };
    cfg.c = args.c.or(cfg.c);
    cfg.sigma1_coeff = args.sigma1_coeff.unwrap_or(cfg.sigma1_coeff);
    cfg.max_iter = args.max_iter.unwrap_or(cfg.max_iter);
    cfg.init_a = args.init_a.unwrap_or(cfg.init_a);
    cfg.init_multiplier = args.init_multiplier.unwrap_or(cfg.init_multiplier);
    cfg.subproblem_tol = args.subproblem_tol.unwrap_or(cfg.subproblem_tol);
    cfg.polish = !args.no_polish;
    if let Some(w) = workers {
        cfg.workers = w;
    }
    cfg
}

fn solve(args: SolveArgs, workers: Option<usize>) -> Result<(), Failure> {
    let inst: Instance64 = load_instance(&args.common.input)?;
    let exact = exact_config(&args.common, workers);
    if args.trace.is_some() && !matches!(args.method, SolveMethod::Admm) {
        return Err(Failure {
            code: 2,
            message: "--trace is only available with --method admm".into(),
        });
    }
    let mut report = match args.method {
        SolveMethod::Admm => {
            let cfg = admm_config(&args, workers);
            cfg.validate()?;
            admm::run(&inst, &cfg)?
        }
        SolveMethod::Optimal => enumerate_optimal(&inst, &exact)?,
        SolveMethod::OffloadOnly => offloading_only(&inst, &exact)?,
        SolveMethod::LocalOnly => local_only(&inst, &exact)?,
    };
    let trace = std::mem::take(&mut report.trace);
    if let Some(path) = &args.trace {
        let mut buf = Vec::new();
        admm::write_trace(&trace, &mut buf).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        write_atomic(path, &buf)?;
    }
    emit(&report, &args.common)
}

fn sweep(args: SweepArgs, workers: Option<usize>) -> Result<(), Failure> {
    let mut spec = experiments::load_spec(&args.spec)?;
    if let Some(w) = workers {
        spec.workers = w;
    }
    let result = experiments::run_sweep(&spec)?;
    let format = match args.format {
        TableFormat::Csv => SweepFormat::Csv,
        TableFormat::Json => SweepFormat::Json,
    };
    experiments::write_results(&result, &args.out, format)?;
    Ok(())
}

/// Machine-readable view of a report; the trace goes to its own file.
#[derive(Serialize)]
struct ReportView<'a> {
    method: &'a str,
    objective: f64,
    modes: String,
    a: f64,
    tau: &'a [f64],
    iterations: usize,
    converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    objective_raw: Option<f64>,
}

fn view(report: &SolveReport64) -> ReportView<'_> {
    ReportView {
        method: report.method.name(),
        objective: report.objective,
        modes: report.modes.bitstring(),
        a: report.allocation.a,
        tau: &report.allocation.tau,
        iterations: report.iterations,
        converged: report.converged,
        objective_raw: report.admm_raw.as_ref().map(|r| r.objective),
    }
}

fn render(report: &SolveReport64, format: OutFormat) -> String {
    let v = view(report);
    match format {
        OutFormat::Json => {
            let mut s = serde_json::to_string_pretty(&v).expect("report view serializes");
            s.push('\n');
            s
        }
        OutFormat::Text => {
            let tau: Vec<String> = v.tau.iter().map(|t| format!("{t:e}")).collect();
            let mut s = format!(
                "method: {}\nobjective: {:e} bits/s\nmodes: {}\na: {:e}\ntau: [{}]\niterations: {}\nconverged: {}\n",
                v.method,
                v.objective,
                v.modes,
                v.a,
                tau.join(", "),
                v.iterations,
                v.converged
            );
            if let Some(raw) = v.objective_raw {
                s.push_str(&format!("objective before polish: {raw:e} bits/s\n"));
            }
            s
        }
    }
}

fn emit(report: &SolveReport64, common: &CommonArgs) -> Result<(), Failure> {
    let text = render(report, common.format);
    match &common.out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .map_err(|source| Error::Io {
                    path: "<stdout>".into(),
                    source,
                })
                .map_err(Failure::from)
        }
    }
}

/// Writes through a temporary sibling so that no partial file is left behind.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(name);
    let io = |p: &Path| {
        let p = p.to_path_buf();
        move |source| Failure::from(Error::Io { path: p, source })
    };
    if let Err(e) = fs::write(&tmp, bytes) {
        let _ = fs::remove_file(&tmp);
        return Err(io(&tmp)(e));
    }
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io(path)(e)
    })
}
