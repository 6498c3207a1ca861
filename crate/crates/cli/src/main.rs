//! `vmobsim` command-line front end.
//!
//! Log verbosity comes from `VMOBSIM_LOG` (env_logger filter syntax,
//! default `warn`).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;
use vmobsim::scenario::{
    export_svg, load_config_file, load_map, read_trace, run_scenario, spacetime, write_spacetime, ConfigError,
    ScenarioError, SvgOptions,
};

const LOG_ENV: &str = "VMOBSIM_LOG";

#[derive(Debug, Parser)]
#[command(name = "vmobsim", version, about = "Microscopic vehicular mobility simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write trace.csv, events.csv, summary.json and config.echo.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `duration` from the config, seconds.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Render an OSM extract as SVG.
    MapSvg {
        map: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Canvas width in px.
        #[arg(long, default_value_t = 1000.0)]
        width: f64,
    },
    /// Project a single-corridor trace to (t, vehicle_id, position).
    Spacetime {
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();
    // Usage errors are bad input, so they share exit status 1 with config errors.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<(), ScenarioError> {
    match command {
        Command::Run {
            config,
            out,
            seed,
            duration,
        } => run(&config, &out, seed, duration),
        Command::MapSvg { map, out, width } => {
            let graph = load_map(&map)?;
            let opts = SvgOptions {
                width,
                ..SvgOptions::default()
            };
            let svg = export_svg(&graph, &[], &opts)?;
            write(&out, svg)
        }
        Command::Spacetime { trace, out } => {
            let rows = spacetime(&read_trace(&trace)?)?;
            write_spacetime(&out, &rows)
        }
    }
}

fn run(config: &Path, out: &Path, seed: Option<u64>, duration: Option<f64>) -> Result<(), ScenarioError> {
    let (mut cfg, map) = load_config_file(config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(d) = duration {
        if !d.is_finite() || d < 0.0 {
            return Err(ConfigError::Invalid {
                line: None,
                key: "duration".into(),
                reason: format!("--duration {d} must be a non-negative number of seconds"),
            }
            .into());
        }
        cfg.duration = d;
    }
    let summary = run_scenario(cfg, &map, out)?;
    info!(
        "{} trace rows, {} handovers, {} lane changes written to {}",
        summary.trace_rows,
        summary.handovers,
        summary.lane_changes,
        out.display()
    );
    Ok(())
}

fn write(path: &Path, contents: String) -> Result<(), ScenarioError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| ScenarioError::Io {
            path: dir.to_owned(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| ScenarioError::Io {
        path: path.to_owned(),
        source,
    })
}
