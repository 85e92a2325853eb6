//! Command-line front end for the crosstalk toolkit: config handling,
//! scenario runs, parameter sweeps and SPICE export.

pub mod commands;
pub mod config;
pub mod error;
pub mod model;
pub mod netlist;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{cmd_export_netlist, cmd_extract, cmd_run, cmd_sweep, sweep_csv, SweepAxis};
use crate::config::ToolkitConfig;
use crate::error::{CliError, Result};
use crate::netlist::TieStyle;
use crate::output::{ensure_dir, write_text};

#[derive(Debug, Parser)]
#[command(name = "xtalk", version, about = "Crosstalk analysis for coupled on-chip interconnects")]
pub struct Cli {
    /// Config document (TOML). Built-in defaults are used when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides output.directory).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Scenario preset: no-shield, shield or shield-<N>taps.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Dotted config override, e.g. sim.n_segments=24. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the extracted line and coupling parameters.
    Extract,
    /// Simulate one scenario and write waveforms and a summary.
    Run,
    /// Re-run a scenario over several values of one parameter.
    Sweep {
        #[arg(long, value_enum)]
        axis: SweepAxis,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<String>,
    },
    /// Write the scenario as a SPICE deck.
    ExportNetlist {
        /// How zero-ohm ties are written (defaults to output.netlist_ties).
        #[arg(long)]
        ties: Option<TieStyle>,
    },
}

fn load_config(cli: &Cli) -> Result<ToolkitConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ToolkitConfig::load(path, &cli.sets)?,
        None => ToolkitConfig::defaults_with(&cli.sets)?,
    };
    if let Some(p) = &cli.preset {
        cfg.set_preset(p);
        cfg.check()?;
    }
    if let Some(out) = &cli.out {
        cfg.output.directory = out.clone();
    }
    Ok(cfg)
}

/// Executes a parsed command line, writing human output to `stdout`.
pub fn execute(cli: &Cli, stdout: &mut dyn std::io::Write) -> Result<()> {
    let cfg = load_config(cli)?;
    let out_dir = cfg.output.directory.clone();
    let say = |stdout: &mut dyn std::io::Write, text: &str| {
        stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e))
    };
    match &cli.command {
        Command::Extract => {
            let report = cmd_extract(&cfg, cli.out.as_deref())?;
            say(stdout, &report.to_text())
        }
        Command::Run => {
            let (result, _) = cmd_run(&cfg, &out_dir)?;
            let m = &result.metrics;
            let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{:.4} ns", x * 1e9));
            say(
                stdout,
                &format!(
                    "{}: victim peak {:.6} V, aggressor delay {}, aggressor rise {}, victim delay {}\noutputs in {}\n",
                    result.scenario,
                    m.victim.peak_v,
                    opt(m.aggressor.delay),
                    opt(m.aggressor.rise_time),
                    opt(m.victim.delay),
                    out_dir.display()
                ),
            )
        }
        Command::Sweep { axis, values } => {
            let rows = cmd_sweep(&cfg, *axis, values)?;
            let text = sweep_csv(*axis, &rows);
            if cli.out.is_some() {
                ensure_dir(&out_dir)?;
                write_text(&out_dir.join(format!("sweep_{}.csv", axis.name())), &text)?;
            }
            say(stdout, &text)
        }
        Command::ExportNetlist { ties } => {
            let (name, deck) = cmd_export_netlist(&cfg, ties.unwrap_or(cfg.output.netlist_ties))?;
            match &cli.out {
                Some(_) => {
                    ensure_dir(&out_dir)?;
                    let path = out_dir.join(format!("{name}.cir"));
                    write_text(&path, &deck)?;
                    say(stdout, &format!("wrote {}\n", path.display()))
                }
                None => say(stdout, &deck),
            }
        }
    }
}

/// Full entry point: parses `args`, runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli, &mut std::io::stdout().lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
