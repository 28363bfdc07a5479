//! A reduced Monte-Carlo SNR sweep driven from code, written to CSV with its
//! manifest.
//!
//! cargo run --release --example snr_sweep -- [output.csv]

use std::path::PathBuf;

use ofdm_rsma::experiment_harness::{manifest_path, run_scenario, ScenarioConfig};
use ofdm_rsma::ltv_channel::ChannelKind;

fn main() -> ofdm_rsma::Result<()> {
    let output = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("snr_sweep.csv"), PathBuf::from);
    let mut cfg = ScenarioConfig::for_channel(ChannelKind::DoublySelective);
    cfg.channel.delta_d = 0.1;
    cfg.realizations = 10;

    let rows = run_scenario(&cfg, &output)?;
    println!("{:<18} {:>6} {:>10} {:>8}", "scheme", "snr", "mean", "std");
    for r in &rows {
        println!("{:<18} {:>6} {:>10.3} {:>8.3}", r.scheme.name(), r.snr_db, r.mean_sum_rate, r.std_sum_rate);
    }
    println!("\nwrote {} and {}", output.display(), manifest_path(&output).display());
    Ok(())
}
