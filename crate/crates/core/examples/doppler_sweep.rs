//! Sum-rate against normalized Doppler at a fixed SNR: OFDMA collapses as
//! ICI grows while RSMA degrades gracefully.
//!
//! cargo run --release --example doppler_sweep

use ofdm_rsma::experiment_harness::{sweep, ScenarioConfig, SchemeKind, SweepParam};
use ofdm_rsma::ltv_channel::ChannelKind;

fn main() -> ofdm_rsma::Result<()> {
    let mut cfg = ScenarioConfig::for_channel(ChannelKind::DoublySelective);
    cfg.snr_grid_db = vec![30.0];
    cfg.realizations = 10;
    cfg.schemes = vec![SchemeKind::OfdmaWaterfill, SchemeKind::Noma, SchemeKind::Rsma];
    let values = [0.0, 0.05, 0.1, 0.2, 0.5];
    let rows = sweep(&cfg, SweepParam::DeltaD, &values, None)?;

    print!("{:>8}", "delta_d");
    for s in &cfg.schemes {
        print!(" {:>16}", s.name());
    }
    println!();
    for d in values {
        print!("{d:>8}");
        for s in &cfg.schemes {
            let r = rows.iter().find(|r| r.delta_d == d && r.scheme == *s).unwrap();
            print!(" {:>16.3}", r.mean_sum_rate);
        }
        println!();
    }
    Ok(())
}
