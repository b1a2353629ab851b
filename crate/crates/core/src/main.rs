use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vlc_steer::config::{parse_range, Sweep, SweepVar};
use vlc_steer::experiment::{run_experiment, ExperimentSpec};
use vlc_steer::optimizer::SolverKind;
use vlc_steer::simulation::Scheme;

#[derive(Parser, Debug)]
#[command(name = "vlc-steer", version, about = "Slow beam steering simulator for multi-user VLC")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario file or a bundled preset (fig3a, fig3b, fig3c, fig4).
    Run(RunArgs),
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Scenario TOML file or preset name.
    config: String,
    /// Variable to sweep; requires --range.
    #[arg(long, requires = "range")]
    sweep: Option<SweepVar>,
    /// Inclusive sweep range, e.g. 1..6.
    #[arg(long, value_parser = parse_range, requires = "sweep")]
    range: Option<(usize, usize)>,
    /// Comma-separated schemes: none, sbs, sbsf, ga_fbs, sbs_single, sbs_multi, sbsf_single, sbsf_multi.
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<Scheme>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = "VLC_STEER_OUT", default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    solver: Option<SolverKind>,
    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
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
    let Command::Run(args) = cli.command;

    let level = match args.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    let spec = ExperimentSpec {
        source: args.config,
        sweep: args.sweep.zip(args.range).map(|(var, (from, to))| Sweep { var, from, to }),
        schemes: args.schemes,
        out_dir: args.out,
        seed: args.seed,
        trials: args.trials,
        solver: args.solver,
        verbosity: args.verbose,
    };
    match run_experiment(&spec) {
        Ok(report) => {
            for p in &report.points {
                for a in &p.aggregates {
                    println!(
                        "{}={} {:<12} mean {:.4e} bit/s  std {:.4e}  ({} trials)",
                        if report.resolved.sweep.is_some_and(|s| s.var == SweepVar::Beams) { "N" } else { "K" },
                        p.sweep_value,
                        a.scheme,
                        a.mean_sum_rate,
                        a.std_sum_rate,
                        a.feasible()
                    );
                }
            }
            println!("wrote {} files to {}", report.files.len(), spec.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
