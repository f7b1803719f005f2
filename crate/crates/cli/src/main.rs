use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spinboson::config::CONFIG_KEYS;
use spinboson_cli::commands::{execute, finish, Command, SweepAxis, SweepTarget};
use spinboson_cli::error::{CliError, EXIT_OTHER};
use spinboson_cli::load::{resolve, ConfigSource};
use spinboson_cli::record::RunRecord;

/// Two-qubit spin-boson dynamics with HEOM and reaction-coordinate backends.
#[derive(Debug, Parser)]
#[command(name = "spinboson", version)]
struct Cli {
    /// INI configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Start from a named parameter set (WWW, WSW, SWS, SSS, figure2, ness-*).
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Rerun with the configuration stored in a run record.
    #[arg(long, global = true)]
    record: Option<PathBuf>,
    /// Override one key, e.g. `--set bath1.alpha=0`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = "out", global = true)]
    out: PathBuf,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Propagate the configured method(s) and write observables per time.
    Dynamics,
    /// Run HEOM and RCM and compare ⟨σ_z⟩.
    Compare,
    /// Trace distance between two initial states and its BLP witness.
    Blp {
        /// Initial-state pair.
        #[arg(long, default_value = "excited,plusplus")]
        pair: String,
    },
    /// Entropy production at equal bath temperatures.
    Entropy,
    /// Non-equilibrium steady state and currents.
    Steadystate,
    /// Repeat dynamics or steady states over a parameter.
    Sweep {
        /// T2, delta, L or M.
        #[arg(long)]
        axis: String,
        /// Comma-separated values, or start:stop:step.
        #[arg(long)]
        values: String,
        /// dynamics or steadystate; defaults to steadystate for T2.
        #[arg(long)]
        target: Option<String>,
    },
    /// Print every configuration key with its resolved value.
    Keys,
}

fn parse_values(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = |_| CliError::config(format!("cannot parse sweep values `{s}`"));
    if let [a, b, step] = s.split(':').collect::<Vec<_>>()[..] {
        let (a, b, step): (f64, f64, f64) = (a.parse().map_err(bad)?, b.parse().map_err(bad)?, step.parse().map_err(bad)?);
        if !(step > 0.0) || b < a {
            return Err(CliError::config(format!("sweep range `{s}` is empty")));
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| a + i as f64 * step).collect());
    }
    s.split(',').map(|v| v.trim().parse().map_err(bad)).collect()
}

fn command(cmd: &Cmd) -> Result<Command, CliError> {
    Ok(match cmd {
        Cmd::Dynamics => Command::Dynamics,
        Cmd::Compare => Command::Compare,
        Cmd::Blp { pair } => {
            let (a, b) = pair
                .split_once(',')
                .ok_or_else(|| CliError::config(format!("--pair expects two states, got `{pair}`")))?;
            Command::Blp { pair: (a.trim().to_string(), b.trim().to_string()) }
        }
        Cmd::Entropy => Command::Entropy,
        Cmd::Steadystate => Command::Steadystate,
        Cmd::Sweep { axis, values, target } => {
            let axis: SweepAxis = axis.parse()?;
            let target = match target {
                Some(t) => t.parse()?,
                None if axis == SweepAxis::T2 => SweepTarget::Steadystate,
                None => SweepTarget::Dynamics,
            };
            Command::Sweep { axis, values: parse_values(values)?, target }
        }
        Cmd::Keys => unreachable!("handled before dispatch"),
    })
}

fn init_threads() {
    if let Ok(n) = std::env::var("SPINBOSON_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not size the thread pool: {e}");
                }
            }
            _ => log::warn!("ignoring SPINBOSON_THREADS={n}; expected a positive integer"),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    init_threads();
    let args: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let src = ConfigSource {
        preset: cli.preset.as_deref(),
        file: cli.config.as_deref(),
        record: cli.record.as_deref(),
        overrides: &cli.overrides,
    };
    let resolved = resolve(&src).and_then(|cfg| {
        if matches!(cli.command, Cmd::Keys) {
            return Ok((cfg, None));
        }
        command(&cli.command).map(|c| (cfg, Some(c)))
    });
    let code = match resolved {
        Ok((cfg, None)) => {
            for key in CONFIG_KEYS {
                println!("{key} = {}", cfg.get(key).unwrap_or_default());
            }
            0
        }
        Ok((cfg, Some(cmd))) => execute(&cmd, &cfg, &cli.out, args).1,
        Err(e) => {
            let name = format!("{:?}", cli.command).split([' ', '{']).next().unwrap_or("run").to_lowercase();
            let mut record = RunRecord::new(&name, args, None);
            let code = finish(&mut record, Err(e));
            let written = std::fs::create_dir_all(&cli.out)
                .map_err(CliError::from)
                .and_then(|_| record.write(&cli.out.join(format!("{name}_record.json"))));
            if let Err(e) = written {
                eprintln!("could not write the run record: {e}");
            }
            code
        }
    };
    ExitCode::from(u8::try_from(code).unwrap_or(EXIT_OTHER as u8))
}
