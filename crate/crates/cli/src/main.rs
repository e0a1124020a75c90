use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use scarid::config::{self, key_help, Entries, SeedSource};
use scarid::{commands, CliError, RunConfig};

macro_rules! config_args {
    ($($field:ident),* $(,)?) => {
        /// Settings shared by every subcommand; each mirrors a config-file key.
        #[derive(Args, Debug, Default)]
        struct ConfigArgs {
            /// Read settings from a config file or from any scarid output file
            #[arg(long, value_name = "PATH")]
            config: Option<PathBuf>,
            /// Periodic boundary conditions (boundary = pbc)
            #[arg(long)]
            pbc: bool,
            /// Open boundary conditions (boundary = obc)
            #[arg(long, conflicts_with = "pbc")]
            obc: bool,
            $(
                #[arg(long, value_name = "VALUE", help = key_help(stringify!($field)))]
                $field: Option<String>,
            )*
        }

        impl ConfigArgs {
            fn entries(&self) -> Entries {
                let mut m = Entries::new();
                if self.pbc {
                    m.insert("boundary".into(), "pbc".into());
                }
                if self.obc {
                    m.insert("boundary".into(), "obc".into());
                }
                $(
                    if let Some(v) = &self.$field {
                        m.insert(stringify!($field).into(), v.clone());
                    }
                )*
                m
            }
        }
    };
}

config_args!(
    length,
    boundary,
    rabi,
    t_start,
    t_end,
    timesteps,
    shots,
    error_rate,
    error_rate_01,
    error_rate_10,
    t2_min,
    t2_max,
    plateau_window,
    plateau_tolerance,
    bootstrap,
    weak_fraction,
    seed,
    jobs,
    output_dir,
    state,
    states,
    distance,
    dim,
    max_iter,
    tol,
    mds_mode,
    matrix_format,
    dump_states,
    input,
);

/// Scar detection in the PXP chain from quench dynamics and measurement shots.
#[derive(Parser, Debug)]
#[command(name = "scarid", version, subcommand_required = true, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate the blockade-constrained basis (needs --length)
    Basis(ConfigArgs),
    /// Quench one product state; write domain-wall density and fidelity per timestep
    Evolve(ConfigArgs),
    /// Sample measurement shots along quench trajectories
    Sample(ConfigArgs),
    /// Distance matrix between the snapshots of one trajectory
    PemMatrix(ConfigArgs),
    /// Embed trajectories (or a distance-matrix file) by metric MDS
    Mds(ConfigArgs),
    /// Intrinsic-dimension scale scan of shot data
    IdScan(ConfigArgs),
    /// Full sweep over initial states with boxplot outlier flagging
    Detect(ConfigArgs),
}

type Runner = fn(&RunConfig, &mut dyn Write) -> scarid::CliResult<()>;

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (args, runner): (&ConfigArgs, Runner) = match &cli.command {
        Command::Basis(a) => (a, commands::basis),
        Command::Evolve(a) => (a, commands::evolve),
        Command::Sample(a) => (a, commands::sample),
        Command::PemMatrix(a) => (a, commands::pem_matrix),
        Command::Mds(a) => (a, commands::mds),
        Command::IdScan(a) => (a, commands::id_scan),
        Command::Detect(a) => (a, commands::detect),
    };
    let resolved = args
        .config
        .as_deref()
        .map_or_else(|| Ok(Entries::new()), config::load_file)
        .and_then(|file| RunConfig::resolve(&file, &args.entries()));
    let cfg = match resolved {
        Ok(cfg) => cfg,
        Err(e) => return fail(&e),
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build_global() {
        eprintln!("warning: could not size the worker pool: {e}");
    }
    if cfg.seed_source == SeedSource::Random {
        eprintln!("seed = {} (drawn at random)", cfg.seed());
    }
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match runner(&cfg, &mut lock) {
        Ok(()) => 0,
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> i32 {
    eprintln!("error: {e}");
    if matches!(e, CliError::Usage(_)) {
        eprintln!("run `scarid help` for usage");
    }
    e.exit_code()
}

fn main() {
    std::process::exit(run());
}
