mod commands;
mod config;
mod report;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use commands::{classify, Artifacts, Outcome};
use config::{RunConfig, Validated};
use mmop_core::fixtures::Fixture;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "mmop", version, about = "Christoffel perturbations of mixed multiple orthogonal polynomials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Emit the truncated moment matrix.
    Moments,
    /// Factor the moment matrix and check the families.
    Ortho,
    /// Run the Christoffel pipeline and report.
    Perturb,
    /// Run the pipeline and compare with a direct factorization.
    Verify,
    /// Verify a built-in fixture.
    Demo,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for reports and CSV files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Built-in fixture instead of a configuration file.
    #[arg(long, global = true, value_enum)]
    fixture: Option<FixtureArg>,
    /// Fixture parameter.
    #[arg(long, global = true, default_value_t = 2.0)]
    b: f64,
    /// Override the truncation.
    #[arg(long, global = true)]
    nmax: Option<usize>,
    /// Factor in double-double arithmetic.
    #[arg(long, global = true)]
    extended_precision: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FixtureArg {
    F1,
    F2,
    F3,
}

impl From<FixtureArg> for Fixture {
    fn from(f: FixtureArg) -> Fixture {
        match f {
            FixtureArg::F1 => Fixture::F1,
            FixtureArg::F2 => Fixture::F2,
            FixtureArg::F3 => Fixture::F3,
        }
    }
}

fn resolve(cli: &Cli) -> Result<(Validated, Option<String>), String> {
    let c = &cli.common;
    let fixture = match (&cli.command, c.fixture) {
        (Command::Demo, None) if c.config.is_none() => Some(FixtureArg::F2),
        (_, f) => f,
    };
    let (mut config, label) = match (&c.config, fixture) {
        (Some(_), Some(_)) => return Err("--config and --fixture are mutually exclusive".into()),
        (Some(path), None) => (RunConfig::load(path).map_err(|e| e.to_string())?.config, None),
        (None, Some(f)) => {
            let label = format!("{f:?} b={}", c.b).to_lowercase();
            (RunConfig::from_fixture(f.into(), c.b), Some(label))
        }
        (None, None) => return Err("either --config or --fixture is required".into()),
    };
    if let Some(n) = c.nmax {
        config.n_max = n;
    }
    config.extended_precision |= c.extended_precision;
    let v = config.validate().map_err(|e| e.to_string())?;
    Ok((v, label))
}

fn write_files(dir: &Path, files: &[(String, String)]) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Outcome {
    let (v, label) = match resolve(cli) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("invalid input: {e}");
            return Outcome::Invalid;
        }
    };
    let result: Result<Artifacts, mmop_core::Error> = match cli.command {
        Command::Moments => commands::moments(&v),
        Command::Ortho => commands::ortho(&v),
        Command::Perturb => commands::perturb(&v, false, label),
        Command::Verify | Command::Demo => commands::perturb(&v, true, label),
    };
    let art = match result {
        Ok(a) => a,
        Err(e) => {
            let outcome = classify(&e);
            match outcome {
                Outcome::Invalid => eprintln!("invalid input: {e}"),
                _ => eprintln!("error: {e}"),
            }
            return outcome;
        }
    };
    print!("{}", art.text);
    let dir = cli.common.out.clone().or_else(|| v.config.output.dir.clone());
    if let Some(dir) = dir {
        if let Err(e) = write_files(&dir, &art.files) {
            eprintln!("error: {e:#}");
            return Outcome::Invalid;
        }
        log::info!("wrote {} files to {}", art.files.len(), dir.display());
    }
    art.outcome
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MMOP_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    ExitCode::from(run(&cli).exit_code())
}
