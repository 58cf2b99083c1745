use std::f64::consts::PI;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use semiprop_cli::{compare_tables, emit_map_data, run_scenario, Scenario, WaveTable};

#[derive(Parser)]
#[command(name = "semiprop", version, about = "Semiclassical wavepacket propagation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every formula of a scenario and compare with the exact result.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Scan the complex initial-condition plane at one time.
    Map {
        config: PathBuf,
        #[arg(long)]
        time: f64,
        #[arg(long, default_value = "map")]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Compare two wavefunction CSVs sampled on the same grid.
    Compare { a: PathBuf, b: PathBuf },
}

fn set_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("thread pool")?;
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { config, out, threads } => {
            set_threads(threads)?;
            let scenario = Scenario::load(&config)?;
            let result = run_scenario(&scenario, &out)?;
            for e in &result.report.entries {
                println!(
                    "{:<4} b = {:<5} T = {:<6} L2 = {:.3e}  phase rms = {:.3e} pi  flagged = {}",
                    e.formula,
                    e.b,
                    e.t,
                    e.comparison.l2,
                    e.comparison.phase_rms / PI,
                    e.flagged
                );
            }
            println!("wrote {} files to {}", result.files.len(), out.display());
        }
        Command::Map { config, time, out, threads } => {
            set_threads(threads)?;
            let scenario = Scenario::load(&config)?;
            for map in emit_map_data(&scenario, time, &out)? {
                println!(
                    "b = {}: {} caustics, {} families, {} cuts, {} escaped nodes",
                    map.b,
                    map.assembly.caustics.len(),
                    map.assembly.families.len(),
                    map.assembly.cuts.len(),
                    map.scan.escaped_count()
                );
            }
        }
        Command::Compare { a, b } => {
            let c = compare_tables(&WaveTable::load(&a)?, &WaveTable::load(&b)?)?;
            println!("l2,max_density_deviation,phase_rms_over_pi,phase_points");
            println!("{:.11e},{:.11e},{:.11e},{}", c.l2, c.max_density_deviation, c.phase_rms / PI, c.phase_points);
        }
    }
    Ok(())
}
