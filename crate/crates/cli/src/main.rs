use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use geqm_cli::config::OutputFormat;
use geqm_cli::{cmd_check, cmd_run, cmd_spectrum, output, CliError, Column, Report, RunConfig};

#[derive(Parser)]
#[command(
    name = "geqm",
    version,
    about = "Metric-aware quantum dynamics: run simulations, check invariants, classify spectra"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the configured system and write its time series
    Run(Common),
    /// Run the invariant suite for the configured system
    Check(Common),
    /// Print the instantaneous spectrum with a reality classification
    Spectrum(SpectrumArgs),
}

#[derive(Args)]
struct Common {
    /// Path to a TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Write rendered output here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    /// Output format; overrides the config
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Override the grid step count
    #[arg(long)]
    steps: Option<usize>,
    /// Override every check tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Suppress summary lines on stdout
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    common: Common,
    /// Evaluation time (default: the grid start)
    #[arg(long)]
    time: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        // A closed stdout (piping into `head`, say) is the consumer's choice,
        // not a failure of ours; stop quietly like any well-behaved filter.
        Err(CliError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let cfg = RunConfig::from_path(&common.config)?;
    let cfg = cfg.with_overrides(
        common.steps,
        common.tol,
        common.format,
        common.output.as_ref().map(|p| p.display().to_string()),
    );
    cfg.validate()?;
    Ok(cfg)
}

/// Write the rendered report to the configured path, or to stdout when none
/// is given (data is never suppressed by --quiet; only summaries are).
fn deliver(report: &Report, common: &Common) -> Result<(), CliError> {
    let bytes = output::render(report)?;
    match &report.config.output.path {
        Some(path) => {
            std::fs::write(path, &bytes)?;
            if !common.quiet {
                let rows = report
                    .series
                    .first()
                    .map(|(_, c)| c.len())
                    .unwrap_or(report.checks.len());
                writeln!(std::io::stdout(), "wrote {rows} rows to {path}")?;
            }
        }
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<u8, CliError> {
    match cli.cmd {
        Cmd::Run(common) => {
            let cfg = load(&common)?;
            let report = cmd_run(&cfg)?;
            deliver(&report, &common)?;
            Ok(0)
        }
        Cmd::Check(common) => {
            let cfg = load(&common)?;
            let report = cmd_check(&cfg)?;
            if !common.quiet {
                let mut out = std::io::stdout().lock();
                for c in &report.checks {
                    writeln!(
                        out,
                        "check {}: residual={:.3e} tol={:.1e} {}",
                        c.name,
                        c.residual,
                        c.tolerance,
                        if c.pass { "PASS" } else { "FAIL" }
                    )?;
                }
                let failed = report.checks.iter().filter(|c| !c.pass).count();
                writeln!(out, "{} checks, {} failed", report.checks.len(), failed)?;
            }
            if report.config.output.path.is_some() {
                deliver(&report, &common)?;
            }
            Ok(if report.checks.iter().all(|c| c.pass) { 0 } else { 1 })
        }
        Cmd::Spectrum(args) => {
            let cfg = load(&args.common)?;
            let report = cmd_spectrum(&cfg, args.time)?;
            if !args.common.quiet {
                print_spectrum(&report)?;
            }
            if report.config.output.path.is_some() {
                deliver(&report, &args.common)?;
            }
            Ok(0)
        }
    }
}

fn print_spectrum(report: &Report) -> Result<(), CliError> {
    let (re, im, class) = match (&report.series[0].1, &report.series[1].1, &report.series[2].1) {
        (Column::Num(re), Column::Num(im), Column::Text(class)) => (re, im, class),
        _ => return Ok(()),
    };
    let mut out = std::io::stdout().lock();
    for k in 0..re.len() {
        let sign = if im[k] < 0.0 { '-' } else { '+' };
        writeln!(
            out,
            "eigenvalue {k}: {} {sign} {}i  [{}]",
            re[k],
            im[k].abs(),
            class[k]
        )?;
    }
    Ok(())
}
