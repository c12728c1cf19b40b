use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use aktorus_harness::{run_convergence, run_descent, run_suite, HarnessError, Result, ScenarioConfig, Suite, VerificationReport};
use clap::{Parser, Subcommand};

/// Numerical verification of the potential functionals on flat tori.
#[derive(Parser, Debug)]
#[command(name = "aktorus", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// TOML scenario file; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Do not print the check summary to stderr.
    #[arg(long, short)]
    quiet: bool,
    /// Overrides: `--key value` or `--key=value`, e.g. `--m 3 --structure.epsilon 0.05`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "OVERRIDES")]
    rest: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the configured suites.
    Verify(Common),
    /// Functionals, inequalities and identities on sampled potentials.
    Functionals(Common),
    /// The first variation against finite differences and its density.
    GradientCheck(Common),
    /// Gradient descent on the twisted functional.
    Descend(Common),
    /// Residuals across the configured grid sizes.
    Converge(Common),
}

fn parse_overrides(rest: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = rest.iter();
    while let Some(tok) = it.next() {
        let key = tok.strip_prefix("--").ok_or_else(|| HarnessError::Config(format!("expected --key, got `{tok}`")))?;
        if let Some((k, v)) = key.split_once('=') {
            out.push((k.to_string(), v.to_string()));
        } else {
            let v = it.next().ok_or_else(|| HarnessError::Config(format!("--{key} needs a value")))?;
            out.push((key.to_string(), v.clone()));
        }
    }
    Ok(out)
}

fn load(common: &Common) -> Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    cfg.apply_overrides(&parse_overrides(&common.rest)?)?;
    Ok(cfg)
}

fn threads() {
    if let Some(n) = std::env::var("AKTORUS_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn run(cli: Cli) -> Result<(VerificationReport, ScenarioConfig, bool)> {
    let (common, pick): (&Common, Option<&[Suite]>) = match &cli.command {
        Command::Verify(c) => (c, None),
        Command::Functionals(c) => (c, Some(&[Suite::Inequalities, Suite::Integrable])),
        Command::GradientCheck(c) => (c, Some(&[Suite::Derivative])),
        Command::Descend(c) | Command::Converge(c) => (c, None),
    };
    let mut cfg = load(common)?;
    if let Some(s) = pick {
        cfg.suites = s.to_vec();
    }
    let report = match &cli.command {
        Command::Descend(_) => run_descent(&cfg)?,
        Command::Converge(_) => run_convergence(&cfg)?,
        _ => run_suite(&cfg)?,
    };
    Ok((report, cfg, common.quiet))
}

fn main() -> ExitCode {
    threads();
    let cli = Cli::parse();
    let (report, cfg, quiet) = match run(cli) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if !quiet {
        eprint!("{}", report.summary());
    }
    let written = match &cfg.output {
        Some(p) if !p.as_os_str().is_empty() => report.emit(p, cfg.format),
        _ => std::io::stdout().write_all(report.encode(cfg.format).as_bytes()).map_err(|e| HarnessError::Io(e.to_string())),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
