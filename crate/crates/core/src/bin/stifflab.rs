use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stifflab::io::commands::{self, CommandError, Exit, Overrides};
use stifflab::limit::SweepAxis;
use stifflab::model::ModelParams;

#[derive(Parser)]
#[command(
    name = "stifflab",
    version,
    about = "1D compressible flow with pressure-driven growth"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "stifflab-out")]
    out: PathBuf,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            gamma: self.gamma,
            eps: self.eps,
            t_end: self.t_end,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Single run: diagnostics, snapshots, verdict.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        plots: bool,
    },
    /// Runs over increasing gamma.
    SweepGamma {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "5,10,20,40,80")]
        values: Vec<f64>,
    },
    /// Runs over decreasing eps.
    SweepEps {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4")]
        values: Vec<f64>,
    },
    /// Invariant battery on presets with seeded random amplitudes.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Kernel compactness table over a gamma family.
    Compactness {
        #[command(flatten)]
        common: Common,
    },
    /// Closed-form Hele-Shaw pressure on an interval.
    Heleshaw {
        #[arg(long)]
        nu0: f64,
        /// Endpoints `a,b`.
        #[arg(long, value_delimiter = ',', required = true)]
        interval: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        g0: f64,
        #[arg(long, default_value_t = 1.0)]
        pm: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(cmd: Command) -> Result<Exit, CommandError> {
    match cmd {
        Command::Run { common, plots } => {
            let cfg = commands::load_config(&common.config, common.overrides())?;
            commands::cmd_run(&cfg, &common.out, plots)
        }
        Command::SweepGamma { common, values } => {
            let cfg = commands::load_config(&common.config, common.overrides())?;
            commands::cmd_sweep(&cfg, SweepAxis::Gamma, values, &common.out)
        }
        Command::SweepEps { common, values } => {
            let cfg = commands::load_config(&common.config, common.overrides())?;
            commands::cmd_sweep(&cfg, SweepAxis::Eps, values, &common.out)
        }
        Command::Verify { common, seed } => {
            let cfg = commands::load_config(&common.config, common.overrides())?;
            let seed = seed.unwrap_or(cfg.seed);
            commands::cmd_verify(&cfg, seed, &common.out)
        }
        Command::Compactness { common } => {
            let cfg = commands::load_config(&common.config, common.overrides())?;
            commands::cmd_compactness(&cfg, &common.out)
        }
        Command::Heleshaw {
            nu0,
            interval,
            g0,
            pm,
            samples,
            out,
        } => {
            let [a, b] = interval[..] else {
                return Err(CommandError::Usage(
                    "--interval takes exactly two values a,b".into(),
                ));
            };
            let params = ModelParams {
                nu0,
                g0,
                pm,
                ..Default::default()
            };
            commands::cmd_heleshaw(&params, (a, b), samples, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Exit::Usage as u8 } else { 0 });
        }
    };
    let code = match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit()
        }
    };
    ExitCode::from(code as u8)
}
