use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dhforge::config::{Overrides, RunConfig};
use dhforge::pipeline;
use dhforge::synth;
use dhforge::{Error, Result};

/// Generate district heating network models from open geodata.
#[derive(Debug, Parser)]
#[command(name = "dhforge", version)]
struct Cli {
    /// Run configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write one graph document per pipeline stage.
    #[arg(long, global = true)]
    snapshots: bool,
    /// Skip clustering even if the config enables it.
    #[arg(long, global = true)]
    no_cluster: bool,
    /// Cluster buildings before pipe sizing instead of after.
    #[arg(long, global = true)]
    cluster_before_sizing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract network polylines from a raster map.
    Extract,
    /// Assemble network, buildings, plants and demand into a graph document.
    Build,
    /// Size the pipes of a graph document.
    Size { graph: PathBuf },
    /// Aggregate the buildings of a graph document into consumer nodes.
    Cluster { graph: PathBuf },
    /// Render a graph document as an SVG map.
    Render { graph: PathBuf },
    /// Write a text summary of a graph document.
    Report { graph: PathBuf },
    /// Run every stage and write all artifacts.
    Pipeline,
    /// Write a synthetic city as input files plus a config.
    Synth {
        #[arg(long, value_enum, default_value_t = CityKind::Toy)]
        city: CityKind,
        /// Building count for the grid city.
        #[arg(long, default_value_t = 1000)]
        buildings: usize,
        /// Adds a [cluster] section with this many consumers.
        #[arg(long)]
        cluster_k: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CityKind {
    Toy,
    Grid,
}

fn config(cli: &Cli) -> Result<RunConfig> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("this command needs --config".into()))?;
    let ov = Overrides {
        seed: cli.seed,
        output_dir: cli.out.clone(),
        no_cluster: cli.no_cluster,
        cluster_before_sizing: cli.cluster_before_sizing,
    };
    RunConfig::load(path, &ov)
}

/// Output directory for commands that only read a graph document.
fn out_dir(cli: &Cli) -> Result<PathBuf> {
    match (&cli.out, &cli.config) {
        (Some(o), _) => Ok(o.clone()),
        (None, Some(_)) => Ok(config(cli)?.output_dir),
        (None, None) => Err(Error::Config(
            "give --out or --config to choose the output directory".into(),
        )),
    }
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    Ok(match &cli.command {
        Command::Extract => vec![pipeline::cmd_extract(&config(cli)?)?],
        Command::Build => vec![pipeline::cmd_build(&config(cli)?, cli.snapshots)?],
        Command::Size { graph } => vec![pipeline::cmd_size(&config(cli)?, graph)?],
        Command::Cluster { graph } => vec![pipeline::cmd_cluster(&config(cli)?, graph)?],
        Command::Render { graph } => vec![pipeline::cmd_render(graph, &out_dir(cli)?)?],
        Command::Report { graph } => vec![pipeline::cmd_report(graph, &out_dir(cli)?)?],
        Command::Pipeline => pipeline::cmd_pipeline(&config(cli)?, cli.snapshots)?,
        Command::Synth {
            city,
            buildings,
            cluster_k,
        } => {
            let seed = cli.seed.ok_or_else(|| Error::Config("synth needs --seed".into()))?;
            let dir = cli.out.as_deref().unwrap_or(Path::new("."));
            let inputs = match city {
                CityKind::Toy => synth::toy_city(),
                CityKind::Grid => synth::grid_city(*buildings, seed),
            };
            vec![synth::write_inputs(&inputs, dir, seed, *cluster_k)?]
        }
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DHFORGE_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(paths)) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(2)
        }
    }
}
