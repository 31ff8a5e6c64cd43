use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mdiqkd::finite::Method;
use mdiqkd::scenario::{
    compare_sources, optimize_intensities, parse_config, run_sweep, write_rates_csv,
    write_yields_csv, Execution, Scenario,
};
use mdiqkd::{Error, Result};

/// Key rates of measurement-device-independent QKD with coherent-state
/// superposition, weak coherent and single-photon sources.
#[derive(Parser)]
#[command(name = "mdiqkd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Key rate against distance for the configured source.
    Sweep(Common),
    /// Key rate against distance for every comparison source.
    Compare(Common),
    /// Best signal/decoy intensities per distance by grid search.
    Optimize(Common),
    /// Two-photon-number yield table at one distance.
    Yields {
        #[command(flatten)]
        common: Common,
        /// Distance in km (overrides `yields.distance_km`).
        #[arg(long)]
        distance: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    /// Pulse pairs per intensity-pair channel, e.g. 1e14.
    #[arg(long)]
    pulses: Option<f64>,
    /// Evaluate distances one at a time.
    #[arg(long)]
    serial: bool,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse()
}

impl Common {
    fn scenario(&self) -> Result<Scenario> {
        let mut scenario = match &self.config {
            Some(path) => parse_config(
                &std::fs::read_to_string(path)
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?,
            )?,
            None => Scenario::default(),
        };
        if let Some(m) = self.method {
            scenario.finite.method = m;
        }
        if let Some(n) = self.pulses {
            scenario.finite.pulse_pairs = n;
        }
        if self.serial {
            scenario.execution = Execution::Serial;
        }
        if self.out.is_some() {
            scenario.output = self.out.clone();
        }
        Ok(scenario)
    }
}

fn with_output(scenario: &Scenario, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match &scenario.output {
        Some(path) => {
            let file =
                File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let mut out = BufWriter::new(file);
            body(&mut out)?;
            out.flush()?;
        }
        None => {
            let mut out = BufWriter::new(io::stdout().lock());
            body(&mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sweep(common) => {
            let scenario = common.scenario()?;
            scenario.validate()?;
            let cache = scenario.optics()?;
            let label = scenario.source.label().to_string();
            let rows: Vec<_> = run_sweep(&scenario, &cache)?
                .into_iter()
                .map(|p| (label.clone(), p))
                .collect();
            with_output(&scenario, |out| write_rates_csv(out, &rows))
        }
        Command::Compare(common) => {
            let scenario = common.scenario()?;
            scenario.validate()?;
            let cache = scenario.optics()?;
            let rows = compare_sources(&scenario, &cache)?;
            with_output(&scenario, |out| write_rates_csv(out, &rows))
        }
        Command::Optimize(common) => {
            let scenario = common.scenario()?;
            scenario.validate()?;
            let cache = scenario.optics()?;
            let label = scenario.source.label().to_string();
            let rows: Vec<_> = optimize_intensities(&scenario, &scenario.intensity_grid, &cache)?
                .into_iter()
                .map(|p| (label.clone(), p))
                .collect();
            with_output(&scenario, |out| write_rates_csv(out, &rows))
        }
        Command::Yields { common, distance } => {
            let mut scenario = common.scenario()?;
            if let Some(d) = distance {
                scenario.yields_distance = d;
            }
            scenario
                .system
                .validate()
                .map_err(|e| Error::Infeasible(e.to_string()))?;
            let cache = scenario.optics()?;
            let table =
                cache.yield_table(&scenario.system.detector_params(scenario.yields_distance)?)?;
            with_output(&scenario, |out| write_yields_csv(out, &table))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("mdiqkd: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
