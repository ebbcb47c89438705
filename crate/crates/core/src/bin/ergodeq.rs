//! Command-line entry point: wires flags and config files to the library
//! experiments and emits CSV/JSON artifacts.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ergodeq::cli::{
    self, AlphaSpec, BirkhoffVariant, CommandConfig, DosVariant, ExperimentConfig,
    LyapunovVariant, SideSpec, SystemConfig, Tolerances,
};
use ergodeq::dynamics::thm2::MonteCarloConfig;

#[derive(Parser)]
#[command(
    name = "ergodeq",
    version,
    about = "Skyscraper dynamics, Birkhoff-average pathologies, density-of-states truncations, and Lyapunov-exponent asymmetries for ergodic Schrodinger operators",
    after_help = HELP.as_str()
)]
struct Cli {
    /// JSON config file; command-line flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed for every Monte Carlo draw.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for parallel scans.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<CliCommand>,
}

#[derive(Args, Clone, Default)]
struct SystemArgs {
    /// Rotation number: "golden" or an exact rational like "29/70".
    #[arg(long)]
    alpha: Option<String>,

    /// Tower base point in (0, 1], exact rational or decimal.
    #[arg(long)]
    u0: Option<String>,

    /// Block range [-K, K].
    #[arg(long, short = 'k')]
    k_range: Option<i64>,

    /// Exact-height bit cap.
    #[arg(long)]
    bit_cap: Option<u64>,

    /// Schedule exponent: windows 3^1 .. 3^s_max.
    #[arg(long)]
    s_max: Option<u32>,

    /// Monte Carlo sample count.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Subcommand, Clone)]
enum CliCommand {
    /// Export the block decomposition (base points, heights, boundaries).
    Blocks {
        #[command(flatten)]
        sys: SystemArgs,
    },
    /// Forward witnesses, backward averages, Cesaro and decay series.
    Birkhoff {
        #[arg(long, value_enum, default_value = "witness")]
        variant: CliBirkhoffVariant,
        /// Cesaro depth or interior probes per block.
        #[arg(long, default_value_t = 20)]
        depth: usize,
        #[command(flatten)]
        sys: SystemArgs,
    },
    /// Build the oscillating shell potential and its stage sequence.
    Construct {
        /// Number of shells.
        #[arg(long, default_value_t = 3)]
        k_max: usize,
        #[command(flatten)]
        sys: SystemArgs,
    },
    /// Density-of-states estimates, truncations, gaps, counterexamples.
    Dos {
        #[arg(long, value_enum, default_value = "truncation")]
        variant: CliDosVariant,
        #[arg(long, default_value_t = 2)]
        degree: usize,
        /// Truncation window size.
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, value_enum, default_value = "plus")]
        side: CliSide,
        /// Level cap of the sampled spatial region.
        #[arg(long, default_value_t = 256)]
        max_level: u64,
        #[command(flatten)]
        sys: SystemArgs,
    },
    /// Exponent scans, gap demonstrations, avalanche calibration, ac scan.
    Lyapunov {
        #[arg(long, value_enum, default_value = "scan")]
        variant: CliLyapunovVariant,
        /// Energy for the gap demonstrations.
        #[arg(long, default_value_t = 20.0)]
        e: f64,
        /// Energy grid as lo,hi,step.
        #[arg(long, num_args = 3, value_delimiter = ',', default_values_t = [-3.0, 3.0, 0.01])]
        e_grid: Vec<f64>,
        /// Candidate threshold for the ac scan.
        #[arg(long, default_value_t = 0.05)]
        threshold: f64,
        /// Avalanche constant.
        #[arg(long, default_value_t = 10.0)]
        c1: f64,
        #[command(flatten)]
        sys: SystemArgs,
    },
    /// Spectrum probe across sampled base points.
    Probe {
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[command(flatten)]
        sys: SystemArgs,
    },
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum CliBirkhoffVariant {
    Witness,
    Backward,
    Cesaro,
    Hopf,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum CliDosVariant {
    Spatial,
    Truncation,
    Gap,
    Counterexample,
    Scan,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum CliLyapunovVariant {
    Scan,
    GapUpperVsLower,
    GapForwardVsBackward,
    Avalanche,
    Ac,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum CliSide {
    Plus,
    Minus,
}

static HELP: std::sync::LazyLock<String> = std::sync::LazyLock::new(|| {
    format!(
        "{}\n\nEvery artifact starts with '#'-prefixed metadata lines carrying the full config and seed.\nThe environment variable ERGODEQ_PRECISION_CEILING overrides the certification precision ceiling (bits).",
        cli::schema_help()
    )
});

fn parse_alpha(s: &str) -> AlphaSpec {
    if s.eq_ignore_ascii_case("golden") {
        AlphaSpec::Golden
    } else {
        AlphaSpec::Rational(s.to_string())
    }
}

fn apply_system(cfg: &mut ExperimentConfig, sys: &SystemArgs) {
    if let Some(a) = &sys.alpha {
        cfg.system.alpha = parse_alpha(a);
    }
    if let Some(u) = &sys.u0 {
        cfg.system.u0 = u.clone();
    }
    if let Some(k) = sys.k_range {
        cfg.system.k_range = k;
    }
    if let Some(b) = sys.bit_cap {
        cfg.system.bit_cap = b;
    }
    if let Some(s) = sys.s_max {
        cfg.s_max = s;
    }
    if let Some(n) = sys.samples {
        cfg.mc.samples = n;
    }
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, ergodeq::Error> {
    // start from the config file or defaults
    let mut cfg: ExperimentConfig = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text)
                .map_err(|e| ergodeq::Error::Config(format!("bad config file: {e}")))?
        }
        None => ExperimentConfig {
            command: CommandConfig::Blocks,
            system: SystemConfig::default(),
            s_max: 10,
            mc: MonteCarloConfig::new(1000, 1),
            tolerances: Tolerances::default(),
            c1: 10.0,
            out_dir: "out".into(),
            threads: None,
        },
    };

    if let Some(cmd) = &cli.command {
        match cmd {
            CliCommand::Blocks { sys } => {
                cfg.command = CommandConfig::Blocks;
                apply_system(&mut cfg, sys);
            }
            CliCommand::Birkhoff {
                variant,
                depth,
                sys,
            } => {
                cfg.command = CommandConfig::Birkhoff {
                    variant: match variant {
                        CliBirkhoffVariant::Witness => BirkhoffVariant::Witness,
                        CliBirkhoffVariant::Backward => BirkhoffVariant::Backward,
                        CliBirkhoffVariant::Cesaro => BirkhoffVariant::Cesaro,
                        CliBirkhoffVariant::Hopf => BirkhoffVariant::Hopf,
                    },
                    depth: *depth,
                };
                apply_system(&mut cfg, sys);
            }
            CliCommand::Construct { k_max, sys } => {
                cfg.command = CommandConfig::Construct { k_max: *k_max };
                apply_system(&mut cfg, sys);
            }
            CliCommand::Dos {
                variant,
                degree,
                n,
                side,
                max_level,
                sys,
            } => {
                cfg.command = CommandConfig::Dos {
                    variant: match variant {
                        CliDosVariant::Spatial => DosVariant::Spatial,
                        CliDosVariant::Truncation => DosVariant::Truncation,
                        CliDosVariant::Gap => DosVariant::Gap,
                        CliDosVariant::Counterexample => DosVariant::Counterexample,
                        CliDosVariant::Scan => DosVariant::Scan,
                    },
                    degree: *degree,
                    n: *n,
                    side: match side {
                        CliSide::Plus => SideSpec::Plus,
                        CliSide::Minus => SideSpec::Minus,
                    },
                    max_level: *max_level,
                };
                apply_system(&mut cfg, sys);
            }
            CliCommand::Lyapunov {
                variant,
                e,
                e_grid,
                threshold,
                c1,
                sys,
            } => {
                cfg.command = CommandConfig::Lyapunov {
                    variant: match variant {
                        CliLyapunovVariant::Scan => LyapunovVariant::Scan,
                        CliLyapunovVariant::GapUpperVsLower => LyapunovVariant::GapUpperVsLower,
                        CliLyapunovVariant::GapForwardVsBackward => {
                            LyapunovVariant::GapForwardVsBackward
                        }
                        CliLyapunovVariant::Avalanche => LyapunovVariant::Avalanche,
                        CliLyapunovVariant::Ac => LyapunovVariant::Ac,
                    },
                    e: *e,
                    e_grid: (e_grid[0], e_grid[1], e_grid[2]),
                    threshold: *threshold,
                };
                cfg.c1 = *c1;
                apply_system(&mut cfg, sys);
            }
            CliCommand::Probe { n, sys } => {
                cfg.command = CommandConfig::Probe { n: *n };
                apply_system(&mut cfg, sys);
            }
        }
    }

    if let Some(seed) = cli.seed {
        cfg.mc.seed = seed;
    }
    if let Some(threads) = cli.threads {
        cfg.threads = Some(threads);
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.to_string_lossy().into_owned();
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}", cli::error_json(&e));
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match cli::run(&cfg) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", cli::error_json(&e));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
