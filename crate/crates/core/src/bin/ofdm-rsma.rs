use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ofdm_rsma::experiment_harness::{exit_code, run_scenario, sweep, verify, ResultRow, ScenarioConfig, SweepParam};

/// Monte-Carlo sum-rate sweeps for OFDM-RSMA, OFDM-NOMA and OFDMA.
///
/// Exit status: 0 success, 1 invalid configuration, 2 runtime or
/// verification failure.
#[derive(Parser)]
#[command(version, about, long_about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

const CONFIG_HELP: &str = "Scenario file (TOML, dotted keys). Keys and defaults:
  ofdm.n_subcarriers = 35          ofdm.cp_len = 9          ofdm.scs_hz = 60000.0
  channel.kind = \"doubly_selective\" (flat | frequency_selective | doubly_selective)
  channel.num_taps = 8             channel.pdp_decay = 0.5  channel.delta_d = 0.0
  channel.user_gain_db = [-6.0, 0.0]                        channel.fixed_gain = false
  experiment.schemes = [\"ofdma_equal\", \"ofdma_waterfill\", \"noma\", \"rsma\", \"single_user_ofdm\"]
  experiment.snr_db = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]
  experiment.realizations = 50     experiment.seed = 1
  optimizer.max_iters = 200        optimizer.rel_tol = 1e-4 optimizer.num_starts = 4
  optimizer.min_rates = []         optimizer.noma_rate_model = \"sic_decodable\" (or own_receiver)
Without a file the defaults above are used.";

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write CSV plus a `.manifest` next to it.
    Run {
        #[arg(long, long_help = CONFIG_HELP)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "results.csv")]
        output: PathBuf,
        /// Override `experiment.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Override `experiment.realizations`.
        #[arg(long)]
        realizations: Option<usize>,
    },
    /// Run the built-in oracle and invariant checks.
    Verify,
    /// Repeat a scenario over several values of one parameter.
    Sweep {
        #[arg(long, long_help = CONFIG_HELP)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "sweep.csv")]
        output: PathBuf,
        /// Parameter to vary (only `delta_d` is supported).
        #[arg(long)]
        param: String,
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        realizations: Option<usize>,
    },
}

fn load(config: Option<PathBuf>, seed: Option<u64>, realizations: Option<usize>) -> ofdm_rsma::Result<ScenarioConfig> {
    let mut cfg = match config {
        Some(path) => ScenarioConfig::load(&path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(r) = realizations {
        cfg.realizations = r;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_rows(rows: &[ResultRow]) {
    println!("{:<18} {:>7} {:>7} {:>12} {:>10}", "scheme", "snr_db", "delta_d", "mean", "std");
    for r in rows {
        println!(
            "{:<18} {:>7} {:>7} {:>12.4} {:>10.4}",
            r.scheme.name(),
            r.snr_db,
            r.delta_d,
            r.mean_sum_rate,
            r.std_sum_rate
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, output, seed, realizations } => load(config, seed, realizations)
            .and_then(|cfg| run_scenario(&cfg, &output))
            .map(|rows| print_rows(&rows)),
        Command::Sweep { config, output, param, values, seed, realizations } => load(config, seed, realizations)
            .and_then(|cfg| {
                let param: SweepParam = param.parse()?;
                sweep(&cfg, param, &values, Some(&output))
            })
            .map(|rows| print_rows(&rows)),
        Command::Verify => {
            let report = verify::verify();
            print!("{}", report.table());
            if !report.all_passed() {
                return ExitCode::from(2);
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
