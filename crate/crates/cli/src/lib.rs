//! Experiment runner behind the `afdm` binary.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub mod error;
pub mod experiments;
pub mod params;
pub mod selftest;

use error::CliError;
use params::Params;

/// AFDM simulation experiments. Every run writes CSV outputs and a
/// `config.ini` echo of all effective parameters into the output directory.
#[derive(Parser)]
#[command(name = "afdm", version)]
struct Cli {
    #[command(subcommand)]
    experiment: Experiment,

    /// Config file with `[section]` headers and `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override one key (`key=value` or `section.key=value`); repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Master seed (overrides `run.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Experiment {
    /// Bit error rate curves and diversity order.
    Ber,
    /// Ambiguity function of a point pilot and its replica lattice.
    Af,
    /// Expected squared ambiguity function over random data.
    #[command(name = "af-expected")]
    AfExpected,
    /// Averaged Cramér–Rao bounds over a chirp-parameter grid.
    Crb,
    /// Matched filtering in the time and DAFT domains.
    Mf,
    /// Dechirping receiver Monte Carlo.
    Dechirp,
    /// Two-user full-duplex link with echo subtraction.
    Fullduplex,
    /// Fast oracle checks.
    Selftest,
}

impl Experiment {
    fn name(self) -> &'static str {
        match self {
            Experiment::Ber => "ber",
            Experiment::Af => "af",
            Experiment::AfExpected => "af-expected",
            Experiment::Crb => "crb",
            Experiment::Mf => "mf",
            Experiment::Dechirp => "dechirp",
            Experiment::Fullduplex => "fullduplex",
            Experiment::Selftest => "selftest",
        }
    }
}

fn params(cli: &Cli) -> Result<Params, CliError> {
    let mut p = Params::defaults(cli.experiment.name())?;
    if let Some(path) = &cli.config {
        p.load_file(path)?;
    }
    for s in &cli.set {
        p.apply_override(s)?;
    }
    if let Some(seed) = cli.seed {
        p.set_seed(seed);
    }
    p.seed()?;
    Ok(p)
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let p = params(cli)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| CliError::Runtime(e.to_string()))?;
    pool.install(|| execute(cli, &p))
}

fn execute(cli: &Cli, p: &Params) -> Result<bool, CliError> {
    let out: &Path = &cli.out;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("config.ini"), p.echo())?;
    print!("{}", p.echo());
    println!();
    let lines = match cli.experiment {
        Experiment::Ber => experiments::ber(p, out)?,
        Experiment::Af => experiments::af(p, out)?,
        Experiment::AfExpected => experiments::af_expected(p, out)?,
        Experiment::Crb => experiments::crb(p, out)?,
        Experiment::Mf => experiments::mf(p, out)?,
        Experiment::Dechirp => experiments::dechirp(p, out)?,
        Experiment::Fullduplex => experiments::fullduplex(p, out)?,
        Experiment::Selftest => {
            let checks = selftest::run();
            let mut csv = String::from("check,pass,detail\n");
            for c in &checks {
                println!("{:<42} {:<4}  {}", c.name, if c.pass { "PASS" } else { "FAIL" }, c.detail);
                csv.push_str(&format!("{},{},\"{}\"\n", c.name, c.pass, c.detail));
            }
            std::fs::write(out.join("selftest.csv"), csv)?;
            return Ok(checks.iter().all(|c| c.pass));
        }
    };
    for l in lines {
        println!("{l}");
    }
    Ok(true)
}

/// Parses `args` (program name first) and runs the experiment. Returns the
/// process exit status: 0 on success, 1 when a selftest check fails, 2 for
/// configuration errors and 3 for runtime errors. Usage errors are reported
/// by clap with its own status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("afdm {}: {e}", cli.experiment.name());
            e.exit_code()
        }
    }
}
