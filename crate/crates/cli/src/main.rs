use clap::{Parser, Subcommand, ValueEnum};
use dilation_lab::Operator;
use dilation_lab_cli::report::{emit, load_last, render, save_last, state_dir, Format};
use dilation_lab_cli::tools::{dilate, spectrum, SigmaSpec};
use dilation_lab_cli::{gallery, suites, CliError, Ctx, Report};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lab", version, about = "Dilations, orthogonality and shifts on finite-dimensional Banach spaces")]
struct Cli {
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Multiplies residual tolerances (violation thresholds are never scaled).
    #[arg(long, global = true, default_value_t = 1.0)]
    tol_scale: f64,
    #[arg(long, global = true)]
    horizon: Option<usize>,
    #[arg(long, global = true)]
    window: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one gallery entry.
    Example {
        id: Option<String>,
        #[arg(long)]
        list: bool,
    },
    /// Run a verification suite.
    Suite {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(suites::SUITES))]
        name: String,
        /// Corrupt one entry of the dilation matrix before verifying.
        #[arg(long)]
        inject_fault: bool,
    },
    /// Certify A_T and build the minimal isometric dilation of an operator.
    Dilate {
        operator: PathBuf,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        /// Also write the dilation bundle as JSON.
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
    /// Residual table of the sigma shift on unit-circle points (CSV).
    Spectrum {
        sigma: PathBuf,
        #[arg(long, default_value_t = 64)]
        grid: usize,
    },
    /// Re-emit the last report.
    Report {
        #[arg(long, value_enum, default_value_t = Fmt::Json)]
        format: Fmt,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Fmt {
    Json,
    Csv,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn finish(r: &Report, out: Option<&Path>, print: bool) -> Result<bool, CliError> {
    save_last(&state_dir(), r)?;
    if print {
        emit(&r.to_json()?, out)?;
    }
    match r.failure_line() {
        Some(line) => eprintln!("FAIL {line}"),
        None => eprintln!("PASS {} ({} assertions)", r.id, r.assertions.len()),
    }
    Ok(r.pass)
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let mut ctx = Ctx { seed: cli.seed, tol_scale: cli.tol_scale, horizon: cli.horizon, window: cli.window, corrupt: false };
    ctx.validate()?;
    let out = cli.out.as_deref();
    match cli.cmd {
        Cmd::Example { list: true, .. } => {
            for e in gallery::registry() {
                println!("{:<34} {}", e.id, e.summary);
            }
            Ok(true)
        }
        Cmd::Example { id: None, .. } => Err(CliError::Input("missing example id".into())),
        Cmd::Example { id: Some(id), .. } => finish(&gallery::run_example(&id, &ctx)?, out, true),
        Cmd::Suite { name, inject_fault } => {
            ctx.corrupt = inject_fault;
            finish(&suites::run_suite(&name, &ctx)?, out, true)
        }
        Cmd::Dilate { operator, depth, bundle } => {
            let t: Operator = serde_json::from_str(&read(&operator)?)?;
            let (r, b) = dilate(&t, depth, &ctx)?;
            if let (Some(p), Some(b)) = (bundle, b) {
                emit(&serde_json::to_string_pretty(&b)?, Some(&p))?;
            }
            finish(&r, out, true)
        }
        Cmd::Spectrum { sigma, grid } => {
            let spec: SigmaSpec = serde_json::from_str(&read(&sigma)?)?;
            let (r, table) = spectrum(&spec, grid, &ctx)?;
            emit(table.trim_end(), out)?;
            finish(&r, None, false)
        }
        Cmd::Report { format } => {
            let r = load_last(&state_dir())?;
            let f = match format {
                Fmt::Json => Format::Json,
                Fmt::Csv => Format::Csv,
            };
            emit(render(&r, f)?.trim_end(), out)?;
            Ok(r.pass)
        }
    }
}

fn init_threads() {
    if let Some(n) = std::env::var("LAB_THREADS").ok().and_then(|s| s.parse::<usize>().ok()).filter(|&n| n > 0) {
        // Fails only if a pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
