use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lossy_boson::app::{
    exit_code, run_plan, run_sample, run_sample_to_file, run_stats, run_validate, Command, Format, Mode, RunConfig,
};
use lossy_boson::Result;

/// Lossy boson sampling: thresholds, samplers and validation.
///
/// Every flag can also be set through a `LOSSY_BOSON_*` environment variable.
/// Flags and environment override the config file.
#[derive(Debug, Parser)]
#[command(name = "lossy-boson", version)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, env = "LOSSY_BOSON_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, value_enum, env = "LOSSY_BOSON_COMMAND")]
    command: Option<Command>,
    /// Circuit JSON file.
    #[arg(long, env = "LOSSY_BOSON_CIRCUIT")]
    circuit: Option<PathBuf>,
    #[arg(long, env = "LOSSY_BOSON_SEED")]
    seed: Option<u64>,
    #[arg(long, env = "LOSSY_BOSON_SAMPLES")]
    samples: Option<usize>,
    #[arg(long, value_enum, env = "LOSSY_BOSON_MODE")]
    mode: Option<Mode>,
    /// Sample file; samples go to stdout when absent.
    #[arg(long, env = "LOSSY_BOSON_OUT")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, env = "LOSSY_BOSON_FORMAT")]
    format: Option<Format>,
    /// Parallel sampling workers; output is reproducible per worker count.
    #[arg(long, env = "LOSSY_BOSON_WORKERS")]
    workers: Option<usize>,
    /// Thermal source parameter.
    #[arg(long, env = "LOSSY_BOSON_LAMBDA")]
    lambda: Option<f64>,
    /// Sample file analysed by `stats`.
    #[arg(long, env = "LOSSY_BOSON_INPUT")]
    input: Option<PathBuf>,
    /// Reference distribution or sample file for `stats`.
    #[arg(long, env = "LOSSY_BOSON_REFERENCE")]
    reference: Option<PathBuf>,
    /// Override of 2κ² in the χ² budget check of `validate`.
    #[arg(long, env = "LOSSY_BOSON_TWO_KAPPA_SQ")]
    two_kappa_sq: Option<f64>,
}

impl Cli {
    fn into_config(self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$( if self.$field.is_some() { cfg.$field = self.$field; } )*};
        }
        set!(command, circuit, seed, samples, mode, out, format, workers, lambda, input, reference);
        if let Some(k) = self.two_kappa_sq {
            cfg.validate.two_kappa_sq = k;
        }
        if let Some(seed) = self.seed {
            cfg.validate.seed = seed;
        }
        if let Some(n) = self.samples {
            cfg.validate.samples = n;
        }
        Ok(cfg)
    }
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("report serializes"));
}

fn run(cfg: RunConfig) -> Result<()> {
    let command = cfg
        .command
        .ok_or_else(|| lossy_boson::Error::Input("no command given (--command plan|sample|validate|stats)".into()))?;
    match command {
        Command::Plan => print_json(&run_plan(&cfg)?),
        Command::Sample if cfg.out.is_some() => {
            let meta = run_sample_to_file(&cfg)?;
            eprintln!("wrote {} samples ({} regime)", meta.samples, meta.regime);
        }
        Command::Sample => {
            let stdout = std::io::stdout();
            let mut lock = std::io::BufWriter::new(stdout.lock());
            let meta = run_sample(&cfg, &mut lock)?;
            eprintln!("{}", serde_json::to_string(&meta).expect("meta serializes"));
        }
        Command::Validate => {
            let report = run_validate(&cfg);
            for check in &report.checks {
                eprintln!("{}", check.line());
            }
            print_json(&report);
        }
        Command::Stats => print_json(&run_stats(&cfg)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.into_config().and_then(run) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
