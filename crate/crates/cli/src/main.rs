use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use critical_jacobi::levinson::SPEC_SCHEMA;
use critical_jacobi::recurrence::write_trace_csv;
use critical_jacobi_cli::output::{csv_string, emit, to_json};
use critical_jacobi_cli::scan::{Range, ScanConfig};
use critical_jacobi_cli::verify::VerifyConfig;
use critical_jacobi_cli::{classify, levinson, scan, verify, CliError, CliResult, EXIT_CHECK_FAILED, EXIT_PASS};

#[derive(Parser)]
#[command(name = "critjac", version, about = "Generalized eigenvectors of critical periodically modulated Jacobi matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Params {
    #[arg(long, default_value = "0.8", allow_hyphen_values = true)]
    alpha: String,
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    b: String,
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    lambda: String,
}

#[derive(Subcommand)]
enum Command {
    /// Regime of (alpha, b, lambda) from the paired transfer matrices.
    Classify {
        #[command(flatten)]
        params: Params,
        #[arg(long, default_value_t = 2000)]
        n_max: i64,
        #[arg(long, default_value_t = 40)]
        digits: u32,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Output file (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pipeline certification, reference solutions and envelope checks.
    Verify {
        #[command(flatten)]
        params: Params,
        #[arg(long, default_value_t = 2000)]
        n_max: i64,
        /// Working precision; raised to the exponent budget if too low.
        #[arg(long)]
        digits: Option<u32>,
        /// Relative tolerance of the drift and constant checks.
        #[arg(long, default_value_t = 0.05)]
        tolerance: f64,
        /// Report format on stdout, or of the report file under --out.
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Directory for the report and CSV traces.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classification over a Cartesian grid of lo:hi:count ranges.
    Scan {
        #[arg(long, default_value = "0.8", allow_hyphen_values = true)]
        alpha: Range,
        #[arg(long, default_value = "1", allow_hyphen_values = true)]
        b: Range,
        #[arg(long, default_value = "-1:1:5", allow_hyphen_values = true)]
        lambda: Range,
        #[arg(long, default_value_t = 1000)]
        n_max: i64,
        #[arg(long, default_value_t = 40)]
        digits: u32,
        /// Also run the dominant envelope check at hyperbolic points.
        #[arg(long)]
        envelope: bool,
        #[arg(long, default_value_t = 0.05)]
        tolerance: f64,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Asymptotic basis of x_{n+1} = (I + p_n V_n + R_n) x_n from a JSON spec.
    #[command(after_help = format!("Spec schema:\n{SPEC_SCHEMA}"))]
    Levinson {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 2000)]
        n_max: i64,
        #[arg(long, default_value_t = 40)]
        digits: u32,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn json_only(format: Format, what: &str) -> CliResult<()> {
    match format {
        Format::Json => Ok(()),
        Format::Csv => Err(CliError::usage(format!("{what} reports are JSON only"))),
    }
}

fn run(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Classify {
            params,
            n_max,
            digits,
            format,
            out,
        } => {
            let report = classify::run(&classify::ClassifyConfig {
                alpha: params.alpha,
                b: params.b,
                lambda: params.lambda,
                n_max,
                digits,
            })?;
            let text = match format {
                Format::Json => to_json(&report),
                Format::Csv => csv_string(&classify::CSV_COLUMNS, |w| w.write_record(classify::csv_row(&report))),
            };
            emit(&text, out.as_deref())?;
            Ok(EXIT_PASS)
        }
        Command::Verify {
            params,
            n_max,
            digits,
            tolerance,
            format,
            out,
        } => {
            let outcome = verify::run(&VerifyConfig {
                alpha: params.alpha,
                b: params.b,
                lambda: params.lambda,
                n_max,
                digits,
                tolerance,
            })?;
            let report = &outcome.report;
            for w in &report.warnings {
                eprintln!("{w}");
            }
            let text = match format {
                Format::Json => to_json(report),
                Format::Csv => csv_string(&verify::CHECK_COLUMNS, |w| {
                    for c in &report.checks {
                        w.write_record([c.name.clone(), c.passed.to_string(), c.detail.to_string()])?;
                    }
                    Ok(())
                }),
            };
            match &out {
                Some(dir) => {
                    let ext = match format {
                        Format::Json => "json",
                        Format::Csv => "csv",
                    };
                    emit(&text, Some(&dir.join(format!("verify.{ext}"))))?;
                    for (stem, rows) in &outcome.traces {
                        let mut buf = Vec::new();
                        write_trace_csv(&mut buf, rows)?;
                        emit(&String::from_utf8(buf).expect("csv is utf-8"), Some(&dir.join(format!("{stem}.csv"))))?;
                    }
                }
                None => emit(&text, None)?,
            }
            let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
            eprintln!(
                "verify: {}/{} checks passed{}",
                report.checks.len() - failed.len(),
                report.checks.len(),
                if failed.is_empty() { String::new() } else { format!("; failed: {}", failed.join(", ")) }
            );
            Ok(if report.passed { EXIT_PASS } else { EXIT_CHECK_FAILED })
        }
        Command::Scan {
            alpha,
            b,
            lambda,
            n_max,
            digits,
            envelope,
            tolerance,
            workers,
            format,
            out,
        } => {
            let rows = scan::run(&ScanConfig {
                alpha,
                b,
                lambda,
                n_max,
                digits,
                envelope,
                tolerance,
                workers,
            })?;
            let text = match format {
                Format::Json => to_json(&rows),
                Format::Csv => csv_string(&scan::CSV_COLUMNS, |w| {
                    for r in &rows {
                        w.write_record(r.record())?;
                    }
                    Ok(())
                }),
            };
            emit(&text, out.as_deref())?;
            let failed = rows.iter().any(|r| r.envelope_passed == Some(false));
            Ok(if failed { EXIT_CHECK_FAILED } else { EXIT_PASS })
        }
        Command::Levinson {
            spec,
            n_max,
            digits,
            format,
            out,
        } => {
            json_only(format, "levinson")?;
            let report = levinson::run(&spec, &levinson::LevinsonConfig { n_max, digits })?;
            for w in &report.diagnostics.warnings {
                eprintln!("warning: {w}");
            }
            emit(&to_json(&report), out.as_deref())?;
            Ok(EXIT_PASS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
