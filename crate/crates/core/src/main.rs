//! Command-line front end: `run` one experiment, `sweep` one parameter over
//! a list of values, `compare` two run sets from their metrics CSVs, and
//! `plot` CSV columns into an SVG.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use secrl::harness::{
    compare_csv_sets, emit_plot, final_window_mean, run_experiment, run_sweep, AgentKind,
    MetricsTable, ModeKind, RunConfig, SECRECY_SMOOTHED_COLUMN,
};

#[derive(Parser)]
#[command(
    name = "secrl",
    version,
    about = "Multi-cell secrecy-rate power control with federated RL agents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write metrics, round log, checkpoints and a plot.
    Run(RunArgs),
    /// Vary one parameter over a list of values with seeded repetitions.
    Sweep(SweepArgs),
    /// Compare two run sets on a metric column.
    Compare(CompareArgs),
    /// Render CSV columns into an SVG learning-curve plot.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Profile {
    /// Reference scale: 25 cells, 4 users, 10 power levels, 100-slot episodes.
    Paper,
    /// Desk scale: 4 cells, 2 users, 4 power levels, 50-slot episodes.
    Desk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AgentArg {
    Dqn,
    Reinforce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Federated,
    Distributed,
}

/// Config resolution shared by `run` and `sweep`: a TOML file or a named
/// profile, then individual flag overrides.
#[derive(Args)]
struct ConfigArgs {
    /// Config file; flags below override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in profile used when no config file is given.
    #[arg(long, value_enum, default_value_t = Profile::Paper)]
    profile: Profile,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long, value_enum)]
    agent: Option<AgentArg>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Aggregation period in slots.
    #[arg(long)]
    xi: Option<usize>,
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long)]
    users_per_cell: Option<usize>,
    #[arg(long)]
    power_levels: Option<usize>,
    #[arg(long)]
    slots_per_episode: Option<usize>,
    #[arg(long)]
    smoothing_window: Option<usize>,
    #[arg(long)]
    repetitions: Option<usize>,
    /// Learning rate of the selected agent kind.
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Also write one metrics row per slot.
    #[arg(long)]
    step_records: bool,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig, secrl::Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => match self.profile {
                Profile::Paper => RunConfig::default(),
                Profile::Desk => RunConfig::desk(),
            },
        };
        if let Some(seed) = self.seed {
            cfg.run.seed = seed;
        }
        if let Some(episodes) = self.episodes {
            cfg.run.episodes = episodes;
        }
        if let Some(agent) = self.agent {
            cfg.run.agent = match agent {
                AgentArg::Dqn => AgentKind::Dqn,
                AgentArg::Reinforce => AgentKind::Reinforce,
            };
        }
        if let Some(mode) = self.mode {
            cfg.run.mode = match mode {
                ModeArg::Federated => ModeKind::Federated,
                ModeArg::Distributed => ModeKind::Distributed,
            };
        }
        if let Some(xi) = self.xi {
            cfg.federation.xi = xi;
        }
        if let Some(cells) = self.cells {
            cfg.topology.cells = cells;
        }
        if let Some(users) = self.users_per_cell {
            cfg.topology.users_per_cell = users;
        }
        if let Some(levels) = self.power_levels {
            cfg.env.power_levels = levels;
        }
        if let Some(slots) = self.slots_per_episode {
            cfg.env.slots_per_episode = slots;
        }
        if let Some(window) = self.smoothing_window {
            cfg.run.smoothing_window = window;
        }
        if let Some(reps) = self.repetitions {
            cfg.run.repetitions = reps;
        }
        if let Some(lr) = self.learning_rate {
            match cfg.run.agent {
                AgentKind::Dqn => cfg.dqn.learning_rate = lr,
                AgentKind::Reinforce => cfg.reinforce.learning_rate = lr,
            }
        }
        if self.step_records {
            cfg.run.step_records = true;
        }
        if let Some(dir) = &self.output_dir {
            cfg.run.output_dir = dir.clone();
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Parameter to vary, e.g. `xi`, `users_per_cell`, `cells`.
    #[arg(long)]
    param: String,
    /// Comma-separated list of values, e.g. `10,100,1000`.
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
    /// Directory for the grid of runs and the sweep summary.
    #[arg(long)]
    sweep_dir: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Metrics CSVs of set A (one per seed).
    #[arg(long = "a", required = true)]
    set_a: Vec<PathBuf>,
    /// Metrics CSVs of set B (one per seed).
    #[arg(long = "b", required = true)]
    set_b: Vec<PathBuf>,
    #[arg(long, default_value = secrl::harness::SECRECY_COLUMN)]
    metric: String,
    /// Final-window width in episodes.
    #[arg(long, default_value_t = 50)]
    window: usize,
}

#[derive(Args)]
struct PlotArgs {
    /// Metrics CSVs, one series each.
    #[arg(required = true)]
    csv: Vec<PathBuf>,
    #[arg(long, default_value = SECRECY_SMOOTHED_COLUMN)]
    column: String,
    /// Legend labels; defaults to the file stem.
    #[arg(long)]
    label: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

fn cmd_run(args: RunArgs) -> Result<(), secrl::Error> {
    let cfg = args.config.resolve()?;
    let output = run_experiment(&cfg)?;
    let series = output.secrecy_series();
    let window = cfg.run.smoothing_window;
    println!(
        "run complete: {} episodes x {} slots, {} cells ({} agent, {} mode)",
        cfg.run.episodes,
        cfg.env.slots_per_episode,
        cfg.topology.cells,
        cfg.run.agent,
        cfg.run.mode,
    );
    println!("  federation rounds: {}", output.rounds.len());
    println!(
        "  final-window mean network secrecy sum: {:.4} bits/s/Hz",
        final_window_mean(&series, window)
    );
    // The plotted curve is read back from the CSV so it is exactly the
    // smoothed column.
    let table = MetricsTable::load(&output.metrics_path)?;
    let smoothed = table.episode_column(SECRECY_SMOOTHED_COLUMN)?;
    let svg_path = output.output_dir.join("secrecy.svg");
    emit_plot(
        &[smoothed],
        &[format!("{} {}", cfg.run.agent, cfg.run.mode)],
        &svg_path,
    )?;
    println!("  metrics: {}", output.metrics_path.display());
    println!("  rounds:  {}", output.rounds_path.display());
    println!("  plot:    {}", svg_path.display());
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), secrl::Error> {
    let cfg = args.config.resolve()?;
    let entries = run_sweep(&cfg, &args.param, &args.values, &args.sweep_dir)?;
    println!(
        "sweep over {} complete: {} values x {} repetitions",
        args.param,
        args.values.len(),
        cfg.run.repetitions
    );
    for value in &args.values {
        let means: Vec<f64> = entries
            .iter()
            .filter(|e| e.value == *value)
            .map(|e| e.final_window_mean)
            .collect();
        let mean = means.iter().sum::<f64>() / means.len() as f64;
        println!("  {} = {:<8} mean final secrecy {:.4}", args.param, value, mean);
    }
    // One smoothed curve per value (first repetition) for a quick look.
    let mut series = Vec::new();
    let mut labels = Vec::new();
    for value in &args.values {
        if let Some(entry) = entries.iter().find(|e| e.value == *value && e.repetition == 0) {
            let table = MetricsTable::load(&entry.metrics_path)?;
            series.push(table.episode_column(SECRECY_SMOOTHED_COLUMN)?);
            labels.push(format!("{}={}", args.param, value));
        }
    }
    let svg_path = args.sweep_dir.join("sweep.svg");
    emit_plot(&series, &labels, &svg_path)?;
    println!("  summary: {}", args.sweep_dir.join("sweep_summary.csv").display());
    println!("  plot:    {}", svg_path.display());
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<(), secrl::Error> {
    let report = compare_csv_sets(&args.set_a, &args.set_b, &args.metric, args.window)?;
    println!("metric: {} (final {} episodes)", report.metric, args.window);
    println!(
        "  set A: mean {:.4}, sd {:.4} over {} seeds",
        report.mean_a,
        report.sd_a,
        report.per_seed_a.len()
    );
    println!(
        "  set B: mean {:.4}, sd {:.4} over {} seeds",
        report.mean_b,
        report.sd_b,
        report.per_seed_b.len()
    );
    println!(
        "  gap {:.4}, pooled sd {:.4} -> {}",
        report.gap(),
        report.pooled_sd,
        report.direction
    );
    Ok(())
}

fn cmd_plot(args: PlotArgs) -> Result<(), secrl::Error> {
    let mut series = Vec::new();
    let mut labels = Vec::new();
    for (i, path) in args.csv.iter().enumerate() {
        let table = MetricsTable::load(path)?;
        series.push(table.episode_column(&args.column)?);
        labels.push(match args.label.get(i) {
            Some(label) => label.clone(),
            None => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
        });
    }
    emit_plot(&series, &labels, &args.out)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Plot(args) => cmd_plot(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}
