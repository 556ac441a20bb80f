//! `ncrsim` command line: load a config, apply flag overrides, run sweeps or
//! single drops, write CSV tables.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 runtime error.
//! Log verbosity follows `RUST_LOG` (default `info`).

use clap::{Args, Parser, Subcommand};
use ncr_sim::config::SimConfig;
use ncr_sim::engine::{write_outputs, EngineError, SweepOutput};
use ncr_sim::{NcrGainMode, Simulator};
use std::ffi::OsString;
use std::path::PathBuf;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Config(c) => CliError::Config(c.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ncrsim",
    version,
    about = "Repeater-assisted two-cell downlink simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the offset x gain-mode sweep and write CSV tables.
    Sweep(RunArgs),
    /// Run a single drop of every sweep cell and write CSV tables.
    Drop {
        #[command(flatten)]
        run: RunArgs,
        /// Drop index (selects the random streams).
        #[arg(long, default_value_t = 0)]
        index: u64,
    },
    /// Load, override and validate a configuration without running it.
    ValidateConfig(Overrides),
    /// Print the default configuration document.
    PrintDefaults,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    /// Directory receiving the CSV tables.
    #[arg(long, default_value = "ncrsim-out")]
    pub output_dir: PathBuf,
    /// Also write every raw sample.
    #[arg(long)]
    pub emit_raw_samples: bool,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Flags that override values of the configuration file.
#[derive(Debug, Args, Default)]
pub struct Overrides {
    /// TOML configuration file; defaults apply when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated gain modes: dynamic, fixed, off.
    #[arg(long, value_delimiter = ',')]
    pub gain_mode: Vec<String>,
    /// Comma-separated fixed gains in dB, one fixed mode per value.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub fixed_gain_db: Vec<f64>,
    /// Offsets from B2 in metres: comma list or `start:stop:step`.
    #[arg(long, allow_negative_numbers = true)]
    pub offsets: Option<String>,
    #[arg(long)]
    pub drops: Option<usize>,
    #[arg(long)]
    pub slots: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated quantiles in (0, 1).
    #[arg(long, value_delimiter = ',')]
    pub quantiles: Vec<f64>,
}

/// Parses `start:stop:step` (inclusive stop) or `a,b,c`.
pub fn parse_offsets(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = |why: String| CliError::Config(format!("--offsets: {why}"));
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| bad(format!("`{s}` is not a number ({e})")))
    };
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(format!("range `{text}` must be start:stop:step")));
        }
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || stop < start {
            return Err(bad(format!(
                "range `{text}` needs step > 0 and stop >= start"
            )));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| start + step * i as f64).collect());
    }
    text.split(',').map(num).collect()
}

impl Overrides {
    /// Reads the file (or defaults) and applies every flag.
    pub fn resolve(&self) -> Result<SimConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => SimConfig::load(p).map_err(|e| CliError::Config(e.to_string()))?,
            None => SimConfig::default(),
        };
        let w = &mut c.sweep;
        if !self.gain_mode.is_empty() {
            let mut modes = Vec::new();
            for m in &self.gain_mode {
                match m.trim() {
                    "dynamic" => modes.push(NcrGainMode::Dynamic),
                    "off" => modes.push(NcrGainMode::Off),
                    "fixed" => {
                        if self.fixed_gain_db.is_empty() {
                            return Err(CliError::Config(
                                "--gain-mode fixed requires --fixed-gain-db".into(),
                            ));
                        }
                        modes.extend(
                            self.fixed_gain_db
                                .iter()
                                .map(|&g| NcrGainMode::Fixed { gain_db: g }),
                        );
                    }
                    other => {
                        return Err(CliError::Config(format!(
                            "--gain-mode: unknown mode `{other}` (expected dynamic, fixed or off)"
                        )))
                    }
                }
            }
            w.gain_modes = modes;
        } else if !self.fixed_gain_db.is_empty() {
            // Replace the file's fixed gains, keep its other modes in place.
            let mut modes = Vec::new();
            let mut inserted = false;
            for m in &w.gain_modes {
                if m.fixed_gain_db().is_some() {
                    if !inserted {
                        modes.extend(
                            self.fixed_gain_db
                                .iter()
                                .map(|&g| NcrGainMode::Fixed { gain_db: g }),
                        );
                        inserted = true;
                    }
                } else {
                    modes.push(*m);
                }
            }
            if !inserted {
                modes.extend(
                    self.fixed_gain_db
                        .iter()
                        .map(|&g| NcrGainMode::Fixed { gain_db: g }),
                );
            }
            w.gain_modes = modes;
        }
        if let Some(o) = &self.offsets {
            w.offsets_m = parse_offsets(o)?;
        }
        if let Some(d) = self.drops {
            w.drops = d;
        }
        if let Some(s) = self.slots {
            w.slots_per_drop = s;
        }
        if let Some(s) = self.seed {
            w.base_seed = s;
        }
        if !self.quantiles.is_empty() {
            w.quantiles = self.quantiles.clone();
        }
        c.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(c)
    }
}

fn execute(
    run: &RunArgs,
    job: impl FnOnce(&Simulator) -> Result<SweepOutput, EngineError> + Send,
) -> Result<(), CliError> {
    let config = run.overrides.resolve()?;
    let sim = Simulator::new(config)?;
    let out = match run.threads {
        Some(n) => {
            if n == 0 {
                return Err(CliError::Config("--threads must be at least 1".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Runtime(e.to_string()))?
                .install(|| job(&sim))?
        }
        None => job(&sim)?,
    };
    let files = write_outputs(&run.output_dir, &out, run.emit_raw_samples)?;
    for f in files {
        log::info!("wrote {}", f.display());
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sweep(run) => execute(&run, |sim| sim.run_sweep()),
        Command::Drop { run, index } => {
            execute(&run, move |sim| sim.run_sweep_drops(index..index + 1))
        }
        Command::ValidateConfig(o) => {
            o.resolve()?;
            println!("configuration is valid");
            Ok(())
        }
        Command::PrintDefaults => {
            let text = SimConfig::default()
                .to_toml_string()
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            print!("{text}");
            Ok(())
        }
    }
}

/// Full entry point: parses `argv` (including the program name), runs, and
/// returns the process exit code.
pub fn parse_and_run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("ncrsim: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_syntax() {
        assert_eq!(parse_offsets("75").unwrap(), vec![75.0]);
        assert_eq!(parse_offsets("10, 20,30").unwrap(), vec![10.0, 20.0, 30.0]);
        let r = parse_offsets("10:145:5").unwrap();
        assert_eq!((r.len(), r[0], r[27]), (28, 10.0, 145.0));
        assert!(parse_offsets("10:5:1").is_err());
        assert!(parse_offsets("a,b").is_err());
    }

    #[test]
    fn gain_mode_flags() {
        let o = Overrides {
            gain_mode: vec!["dynamic".into(), "fixed".into()],
            fixed_gain_db: vec![70.0, 90.0],
            ..Default::default()
        };
        assert_eq!(
            o.resolve().unwrap().sweep.gain_modes,
            vec![
                NcrGainMode::Dynamic,
                NcrGainMode::Fixed { gain_db: 70.0 },
                NcrGainMode::Fixed { gain_db: 90.0 }
            ]
        );
        let o = Overrides {
            fixed_gain_db: vec![80.0],
            ..Default::default()
        };
        assert_eq!(
            o.resolve().unwrap().sweep.gain_modes,
            vec![
                NcrGainMode::Dynamic,
                NcrGainMode::Fixed { gain_db: 80.0 },
                NcrGainMode::Off
            ]
        );
        let o = Overrides {
            gain_mode: vec!["fixed".into()],
            ..Default::default()
        };
        assert!(matches!(o.resolve(), Err(CliError::Config(_))));
        let o = Overrides {
            gain_mode: vec!["turbo".into()],
            ..Default::default()
        };
        assert!(o.resolve().unwrap_err().to_string().contains("turbo"));
    }
}
