use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use kcontact::cli::{self, RunConfig, EXIT_CHECK_FAILED, EXIT_PASS};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Subcommand {
    CheckIdentities,
    Curvature,
    HarmonicDims,
    MomentTest,
    Futaki,
    Flow,
    Continuation,
    DdcLemma,
}

impl Subcommand {
    fn name(self) -> &'static str {
        match self {
            Self::CheckIdentities => "check-identities",
            Self::Curvature => "curvature",
            Self::HarmonicDims => "harmonic-dims",
            Self::MomentTest => "moment-test",
            Self::Futaki => "futaki",
            Self::Flow => "flow",
            Self::Continuation => "continuation",
            Self::DdcLemma => "ddc-lemma",
        }
    }
}

/// Transverse almost-Kähler calculus on regular K-contact model manifolds.
///
/// Any configuration key can be overridden with `--key value`, e.g.
/// `--preset perturbed5 --resolution 16 --eps 0.05`.
#[derive(Debug, Parser)]
#[command(name = "kcontact", version)]
struct Cli {
    #[arg(value_enum)]
    subcommand: Subcommand,
    /// JSON configuration file (flat keys).
    #[arg(long)]
    config: Option<PathBuf>,
    /// `--key value` overrides of configuration keys.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let cfg = match cli::parse_overrides(&args.overrides).and_then(|o| RunConfig::load(args.config.as_deref(), &o)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(cli::EXIT_CONFIG as u8);
        }
    };
    match cli::run(args.subcommand.name(), &cfg) {
        Ok(report) => {
            for c in &report.checks {
                println!("{} {}: {:.3e} (tolerance {:.1e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance);
            }
            println!("report: {}", cfg.out.join("report.json").display());
            if report.passed {
                ExitCode::from(EXIT_PASS as u8)
            } else {
                eprintln!("failed checks: {}", report.failed_checks().join("; "));
                ExitCode::from(EXIT_CHECK_FAILED as u8)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
