use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cli::{CliError, MdpSource, Preset, RunConfig};

#[derive(Parser)]
#[command(name = "scaled-ac", version, about = "Scaled actor-critic training and limit-ODE experiments")]
struct Cli {
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train networks and write snapshot series.
    Train(Flags),
    /// Integrate the limit ODE system.
    Limit(Flags),
    /// Fit the error rate from persisted runs.
    Rates(Flags),
    /// Std of the trained outputs across trials for each beta.
    Variance(Flags),
    /// Expansion residuals against persisted runs.
    Residual(Flags),
    /// Aggregate the summaries under --out.
    Report {
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Flags {
    /// JSON config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<Preset>,
    /// MDP JSON file; the default is the 3-state forest.
    #[arg(long)]
    mdp_file: Option<PathBuf>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    width_n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    widths: Option<Vec<usize>>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    h_ode: Option<f64>,
    #[arg(long)]
    mc_samples: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Flags {
    fn into_config(self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            mdp: self.mdp_file.map(|file| MdpSource::File { file }),
            beta: self.beta,
            width_n: self.width_n,
            widths: self.widths,
            t_end: self.t_end,
            h_ode: self.h_ode,
            mc_samples: self.mc_samples,
            trials: self.trials,
            betas: self.betas,
            seed: self.seed,
            order: self.order,
            out: self.out,
            preset: self.preset,
        };
        Ok(file.overlay(flags))
    }
}

fn run(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Train(f) => {
            for dir in cli::cmd_train(f.into_config()?)? {
                println!("{}", dir.display());
            }
        }
        Cmd::Limit(f) => println!("{}", cli::cmd_limit(f.into_config()?)?.display()),
        Cmd::Rates(f) => println!("{}", cli::cmd_rates(f.into_config()?)?.display()),
        Cmd::Variance(f) => println!("{}", cli::cmd_variance(f.into_config()?)?.display()),
        Cmd::Residual(f) => println!("{}", cli::cmd_residual(f.into_config()?)?.display()),
        Cmd::Report { out } => println!("{}", serde_json::to_string_pretty(&cli::cmd_report(&out)?)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let jobs = args.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
        eprintln!("error: thread pool: {e}");
        return ExitCode::from(1);
    }
    match run(args.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
