//! Command-line driver for the verification suites.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use epschar::cache::CacheDir;
use epschar::config::Config;
use epschar::report::Report;
use epschar::suites;
use epschar::Error;

#[derive(Parser)]
#[command(name = "epschar", about = "Exact character-sum verification for GL_n over truncated polynomial rings", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the report JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Bound the worker count.
    #[arg(long)]
    jobs: Option<usize>,
    /// Override enumeration budgets.
    #[arg(long)]
    force: bool,
    /// Cache directory (falls back to EPSCHAR_CACHE, then .epschar-cache).
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Matrix size when no config file is given.
    #[arg(long)]
    n: Option<usize>,
    /// Field characteristic when no config file is given.
    #[arg(long)]
    p: Option<u64>,
    /// Truncation level when no config file is given.
    #[arg(long)]
    r: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the graded product/conjugation polynomial tables.
    Bch {
        #[command(flatten)]
        common: Common,
        /// Dump the tables as JSON to this path.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Group-law oracle checks and enumeration self-tests.
    Group {
        #[command(flatten)]
        common: Common,
    },
    /// Induced-character table, norms, invariance.
    Induce {
        #[command(flatten)]
        common: Common,
    },
    /// Interpolation-ladder equality / triangle additivity.
    Ladder {
        #[command(flatten)]
        common: Common,
    },
    /// Stratum vanishing sums.
    Lemmas {
        #[command(flatten)]
        common: Common,
    },
    /// Fiberwise transform: support and values.
    Fourier {
        #[command(flatten)]
        common: Common,
        /// Truncation level to verify (must match the config).
        #[arg(long)]
        r: Option<usize>,
    },
    /// Induced character versus the exponential-sum character.
    CompareLk {
        #[command(flatten)]
        common: Common,
    },
    /// Every suite applicable to the configuration.
    All {
        #[command(flatten)]
        common: Common,
    },
}

fn build_config(common: &Common) -> Result<Config, Error> {
    let mut cfg = match &common.config {
        Some(path) => Config::load(path)?,
        None => {
            let n = common.n.ok_or_else(|| Error::Config("need --config or --n/--p/--r".into()))?;
            let p = common.p.ok_or_else(|| Error::Config("need --config or --n/--p/--r".into()))?;
            let r = common.r.ok_or_else(|| Error::Config("need --config or --n/--p/--r".into()))?;
            // default datum: A_j = diag(1, 2, ..., n) mod p at every level
            let a = vec![(1..=n as i64).collect::<Vec<_>>(); r.saturating_sub(1)];
            let mut lambda0 = vec![0i64; n];
            lambda0[0] = 1;
            let cfg = Config {
                n,
                p,
                r,
                a,
                lambda0,
                seed: 0,
                budgets: Default::default(),
                force: false,
            };
            cfg.validate()?;
            cfg
        }
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if common.force {
        cfg.force = true;
    }
    if let Some(jobs) = common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .ok();
    }
    Ok(cfg)
}

fn emit(common: &Common, reports: &[Report]) -> Result<bool, Error> {
    for rep in reports {
        rep.print_summary();
    }
    if let Some(out) = &common.out {
        if reports.len() == 1 {
            reports[0].write(out)?;
        } else {
            let all: Vec<&Report> = reports.iter().collect();
            std::fs::write(out, serde_json::to_string_pretty(&all)?)?;
        }
        println!("report written to {}", out.display());
    }
    Ok(reports.iter().all(|r| r.passed()))
}

fn run() -> Result<bool, Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Bch { common, emit: emit_path } => {
            let cfg = build_config(&common)?;
            let rep = suites::run_bch(&cfg)?;
            if let Some(path) = emit_path {
                std::fs::write(&path, serde_json::to_string_pretty(&rep.details)?)?;
                println!("tables written to {}", path.display());
            }
            emit(&common, &[rep])
        }
        Command::Group { common } => {
            let cfg = build_config(&common)?;
            let rep = suites::run_group(&cfg)?;
            emit(&common, &[rep])
        }
        Command::Induce { common } => {
            let cfg = build_config(&common)?;
            let cache = CacheDir::resolve(common.cache_dir.as_deref());
            let rep = suites::run_characters(&cfg, Some(&cache))?;
            emit(&common, &[rep])
        }
        Command::Ladder { common } => {
            let cfg = build_config(&common)?;
            let rep = suites::run_ladder(&cfg)?;
            emit(&common, &[rep])
        }
        Command::Lemmas { common } => {
            let cfg = build_config(&common)?;
            let rep = suites::run_lemmas(&cfg)?;
            emit(&common, &[rep])
        }
        Command::Fourier { common, r } => {
            let cfg = build_config(&common)?;
            if let Some(want) = r {
                if want != cfg.r {
                    return Err(Error::Config(format!(
                        "--r {want} does not match the configured r = {}",
                        cfg.r
                    )));
                }
            }
            let rep = suites::run_fourier(&cfg)?;
            emit(&common, &[rep])
        }
        Command::CompareLk { common } => {
            let cfg = build_config(&common)?;
            let cache = CacheDir::resolve(common.cache_dir.as_deref());
            let rep = suites::run_compare_lk(&cfg, Some(&cache))?;
            emit(&common, &[rep])
        }
        Command::All { common } => {
            let cfg = build_config(&common)?;
            let cache = CacheDir::resolve(common.cache_dir.as_deref());
            let reps = suites::run_all(&cfg, Some(&cache))?;
            emit(&common, &reps)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
