use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kinesim::experiment::{self, ExperimentConfig, Figure, SweepSettings, WORKERS_ENV};
use kinesim::optimizer::ShapeFamily;
use kinesim::{Error, Result};

#[derive(Parser)]
#[command(name = "kinesim", version, about = "Microtubule molecular-communication channel simulator")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Trials per input value (per TPCU for `trips`)
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run trials_per_x × (x_max + 1) channel uses and write trials.jsonl
    Simulate,
    /// Capacity curve from a trial log
    Capacity {
        #[arg(long)]
        records: PathBuf,
        /// Comma-separated x_max values; defaults to 1..=observed maximum
        #[arg(long, value_delimiter = ',')]
        x_max: Vec<usize>,
    },
    /// Closed-form optimal shape
    Optimize {
        #[arg(long)]
        family: ShapeFamily,
        #[arg(long = "tpcu")]
        tpcu_s: f64,
        #[arg(long = "v", default_value_t = 0.5)]
        v_avg_um_s: f64,
        /// Side count for polygons; omit for the circle limit
        #[arg(long)]
        sides: Option<usize>,
    },
    /// Single-MT trip counts against v·T/P
    Trips {
        #[arg(long = "tpcu", value_delimiter = ',', default_values_t = [160.0, 320.0, 640.0])]
        tpcu_s: Vec<f64>,
    },
    /// Run a figure sweep (fig4, fig5a, fig5b, fig6, fig7, fig8)
    Reproduce {
        figure: String,
        #[arg(long, default_value_t = 20)]
        x_max: usize,
    },
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::from_json_file(p).map_err(|e| match e {
            Error::Io(io) => Error::InvalidParameter(format!("{}: {io}", p.display())),
            other => other,
        })?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(t) = c.trials {
        cfg.trials_per_x = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    let workers = experiment::resolve_workers(c.workers);
    match cli.command {
        Command::Simulate => {
            let cfg = load_config(c)?;
            if let Some(w) = cfg.motility.resolution_warning(&cfg.shape) {
                eprintln!("warning: {w}");
            }
            let path = experiment::cmd_simulate(&cfg, &c.out, workers)?;
            println!("{}", path.display());
        }
        Command::Capacity { records, x_max } => {
            if !records.exists() {
                return Err(Error::DataIntegrity(format!("{}: no such records file", records.display())));
            }
            let list = if x_max.is_empty() {
                let top = experiment::read_records_file(&records)?.iter().map(|r| r.x).max().unwrap_or(0);
                (1..=top.max(1)).collect()
            } else {
                x_max
            };
            for p in experiment::cmd_capacity(&records, &list, &c.out)? {
                println!("{},{:.6}", p.x_max, p.capacity_bits);
            }
        }
        Command::Optimize { family, tpcu_s, v_avg_um_s, sides } => {
            let report = experiment::cmd_optimize(family, tpcu_s, v_avg_um_s, sides)?;
            let json = serde_json::to_string_pretty(&report)?;
            std::fs::create_dir_all(&c.out)?;
            std::fs::write(c.out.join("optimize.json"), &json)?;
            println!("{json}");
        }
        Command::Trips { tpcu_s } => {
            let cfg = load_config(c)?;
            let trials = c.trials.unwrap_or(2000);
            let rows =
                experiment::trip_table(&cfg.shape, &tpcu_s, trials, cfg.seed, &cfg.motility, cfg.zones, workers)?;
            write_csv(&c.out, "trips.csv", |out| {
                experiment::write_trips_csv(out, Some(&cfg.shape.to_string()), &rows, true)
            })?;
            experiment::write_trips_csv(std::io::stdout().lock(), None, &rows, true)?;
        }
        Command::Reproduce { figure, x_max } => {
            let figure: Figure = figure.parse()?;
            let base = load_config(c)?;
            let settings = SweepSettings {
                trials: c.trials.unwrap_or(experiment::DEFAULT_TRIALS_PER_X),
                seed: base.seed,
                x_max,
                motility: base.motility,
                zones: base.zones,
                height_um: base.height_um,
                concentration_per_fl: base.concentration_per_fl,
                max_load: base.max_load,
            };
            let report = experiment::reproduce(figure, &settings, workers)?;
            for p in experiment::write_figure(&report, &c.out)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn write_csv(dir: &Path, name: &str, f: impl FnOnce(&mut std::fs::File) -> std::io::Result<()>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut file = std::fs::File::create(dir.join(name))?;
    f(&mut file)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
