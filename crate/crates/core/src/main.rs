use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use elcs::run::{cmd_benchmark, cmd_learn, cmd_sample, Algo, BenchmarkSpec, CmdError, RunConfig};

/// Local causal structure learning from discrete data.
#[derive(Debug, Parser)]
#[command(name = "elcs", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Draw a dataset from a BIF network.
    Sample {
        #[arg(long)]
        bif: PathBuf,
        /// Number of rows.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output CSV; a `.card` file is written next to it.
        #[arg(long)]
        out: PathBuf,
        /// Sample from this many linked copies of the network.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        tile: Option<u64>,
    },
    /// Learn the parents and children of one target.
    Learn {
        /// CSV of category codes with a header row.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        target: String,
        #[command(flatten)]
        algo: AlgoArgs,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score an algorithm on data sampled from a BIF network.
    Benchmark {
        #[arg(long)]
        bif: PathBuf,
        /// Comma-separated sample sizes.
        #[arg(long, value_delimiter = ',', default_value = "5000")]
        sizes: Vec<usize>,
        /// Datasets per size.
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        runs: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Targets to learn (comma-separated); all variables by default.
        #[arg(long, value_delimiter = ',')]
        target: Vec<String>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        tile: Option<u64>,
        #[command(flatten)]
        algo: AlgoArgs,
        /// JSON report path.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct AlgoArgs {
    #[arg(long, default_value = "elcs", value_parser = parse_algo)]
    algo: Algo,
    #[arg(long, default_value_t = elcs::citest::DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = elcs::citest::DEFAULT_RELIABILITY_K)]
    reliability_k: f64,
    /// Largest conditioning set to test.
    #[arg(long)]
    max_cond: Option<usize>,
    /// Disable the N-structure rule.
    #[arg(long)]
    no_n_structures: bool,
}

fn parse_algo(s: &str) -> Result<Algo, String> {
    s.parse()
}

impl AlgoArgs {
    fn config(&self, seed: u64) -> RunConfig {
        RunConfig {
            algo: self.algo,
            alpha: self.alpha,
            reliability_k: self.reliability_k,
            max_cond: self.max_cond,
            no_n_structures: self.no_n_structures,
            seed,
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.cmd {
        Cmd::Sample {
            bif,
            n,
            seed,
            out,
            tile,
        } => {
            let msg = cmd_sample(&bif, n as usize, seed, &out, tile.map(|k| k as usize))
                .context("sample failed")?;
            println!("{msg}");
        }
        Cmd::Learn {
            data,
            target,
            algo,
            out,
        } => {
            let json = cmd_learn(&data, &target, &algo.config(0), out.as_deref())
                .context("learn failed")?;
            println!("{json}");
        }
        Cmd::Benchmark {
            bif,
            sizes,
            runs,
            seed,
            target,
            tile,
            algo,
            out,
        } => {
            let spec = BenchmarkSpec {
                sizes,
                runs: runs as usize,
                targets: target,
                tile: tile.map(|k| k as usize),
            };
            let table =
                cmd_benchmark(&bif, &spec, &algo.config(seed), &out).context("benchmark failed")?;
            print!("{table}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<CmdError>().map_or(3, CmdError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
