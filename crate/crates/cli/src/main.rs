mod config;
mod plot;
mod run;

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hawkes_core::limits::write_report_csv;
use hawkes_core::HawkesError;
use serde::Serialize;

use config::{DiagnosticKind, ExperimentConfig};

const EXIT_OK: u8 = 0;
const EXIT_IO: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_REGIME: u8 = 4;

const DEFAULT_OUT: &str = "hawkes-out";

#[derive(Parser)]
#[command(
    name = "hawkes",
    version,
    about = "Hawkes process experiments: resolvents, functionals and scaling limits"
)]
struct Cli {
    /// Worker threads for replica-level parallelism; defaults to available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory; overrides the config's `output` field.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Skip SVG plots.
    #[arg(long, global = true)]
    no_plot: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write report.csv, meta.json and plots.
    Run { config: PathBuf },
    /// List every problem with a config without running it.
    Validate { config: PathBuf },
    /// Kernel families accepted in configs.
    Kernels {
        #[command(subcommand)]
        action: KernelsAction,
    },
}

#[derive(Subcommand)]
enum KernelsAction {
    List,
}

#[derive(Serialize)]
struct Versions {
    #[serde(rename = "hawkes-cli")]
    cli: &'static str,
    #[serde(rename = "hawkes-core")]
    core: &'static str,
}

#[derive(Serialize)]
struct Meta<'a> {
    schema: u32,
    seed: u64,
    versions: Versions,
    config: &'a ExperimentConfig,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<HawkesError> for Failure {
    fn from(e: HawkesError) -> Self {
        let code = match e {
            HawkesError::Regime(_) => EXIT_REGIME,
            HawkesError::InvalidParameter(_) | HawkesError::Parse(_) => EXIT_VALIDATION,
            HawkesError::Io(_) => EXIT_IO,
            _ => EXIT_NUMERIC,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    }
}

fn load(path: &Path) -> Result<(ExperimentConfig, PathBuf), Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let cfg = ExperimentConfig::parse(&text).map_err(|message| Failure {
        code: EXIT_VALIDATION,
        message,
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

/// Prints diagnostics; fails with the validation code unless all of them are regime mismatches.
fn check(cfg: &ExperimentConfig, base: &Path) -> Result<(), Failure> {
    let diags = cfg.validate(base);
    if diags.is_empty() {
        return Ok(());
    }
    for d in &diags {
        eprintln!("{d}");
    }
    let code = if diags.iter().all(|d| d.kind == DiagnosticKind::Regime) {
        EXIT_REGIME
    } else {
        EXIT_VALIDATION
    };
    Err(Failure {
        code,
        message: format!("{} problem(s) in config", diags.len()),
    })
}

fn plot_name(statistic: &str) -> String {
    let safe: String = statistic
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("plot_{safe}.svg")
}

fn run(cli: &Cli, path: &Path) -> Result<(), Failure> {
    let (cfg, base) = load(path)?;
    check(&cfg, &base)?;
    let resolved = cfg.resolve(&base)?;
    let rows = run::execute(&resolved)?;

    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    fs::create_dir_all(&out).map_err(|e| io_failure(&out, e))?;
    let report = out.join("report.csv");
    let file = fs::File::create(&report).map_err(|e| io_failure(&report, e))?;
    write_report_csv(&rows, BufWriter::new(file))?;

    let echo = cfg.echo(&base);
    let meta = Meta {
        schema: 1,
        seed: resolved.seed,
        versions: Versions {
            cli: env!("CARGO_PKG_VERSION"),
            core: hawkes_core::VERSION,
        },
        config: &echo,
    };
    let meta_path = out.join("meta.json");
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Failure {
        code: EXIT_IO,
        message: e.to_string(),
    })?;
    fs::write(&meta_path, text + "\n").map_err(|e| io_failure(&meta_path, e))?;

    if !cli.no_plot {
        for stat in plot::statistics(&rows) {
            let p = out.join(plot_name(&stat));
            fs::write(&p, plot::line_chart(&rows, &stat)).map_err(|e| io_failure(&p, e))?;
        }
    }

    let failed = rows.iter().filter(|r| r.pass == Some(false)).count();
    let checked = rows.iter().filter(|r| r.pass.is_some()).count();
    println!(
        "{}: {} rows, {}/{} checks passed, written to {}",
        resolved.experiment.name(),
        rows.len(),
        checked - failed,
        checked,
        out.display()
    );
    Ok(())
}

fn validate(path: &Path) -> Result<(), Failure> {
    let (cfg, base) = load(path)?;
    check(&cfg, &base)?;
    println!("ok");
    Ok(())
}

fn list_kernels() {
    for line in [
        "exponential            m, beta",
        "exponential-mixture    weights[], rates[]",
        "mittag-leffler         alpha, beta",
        "mixed-mittag-leffler   alpha1, beta1, alpha2, beta2",
        "scaled-stable          alpha, xi {constant: value | two-point: low, high, p_low | pareto: x_m, shape}",
        "tabulated              path (CSV t,phi), m (optional)",
    ] {
        println!("{line}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    }
    let result = match &cli.command {
        Command::Run { config } => run(&cli, config),
        Command::Validate { config } => validate(config),
        Command::Kernels {
            action: KernelsAction::List,
        } => {
            list_kernels();
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(
            Failure::from(HawkesError::Regime("x".into())).code,
            EXIT_REGIME
        );
        assert_eq!(
            Failure::from(HawkesError::InvalidParameter("x".into())).code,
            EXIT_VALIDATION
        );
        assert_eq!(
            Failure::from(HawkesError::Numeric("x".into())).code,
            EXIT_NUMERIC
        );
        assert_eq!(
            Failure::from(HawkesError::StepSize("x".into())).code,
            EXIT_NUMERIC
        );
        assert_eq!(Failure::from(HawkesError::Io("x".into())).code, EXIT_IO);
    }

    #[test]
    fn plot_names_are_file_safe() {
        assert_eq!(plot_name("I_R"), "plot_I_R.svg");
        assert_eq!(plot_name("a/b c"), "plot_a_b_c.svg");
    }
}
