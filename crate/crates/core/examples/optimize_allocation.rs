//! Optimizes one channel draw with every scheme and prints where the power
//! went and how the WMMSE objective climbed.
//!
//! cargo run --release --example optimize_allocation -- [delta_d] [snr_db]

use ofdm_rsma::allocation_optimizers::{
    assign_subcarriers_ofdma, optimize_noma, optimize_rsma, waterfill_ofdma, AssignmentMode,
    OptimizerOptions,
};
use ofdm_rsma::experiment_harness::{power_budget, sample_couplings, weakest_first, ScenarioConfig};
use ofdm_rsma::ltv_channel::ChannelKind;

fn main() -> ofdm_rsma::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<f64>().expect("numeric argument"));
    let delta_d = args.next().unwrap_or(0.1);
    let snr_db = args.next().unwrap_or(20.0);

    let mut cfg = ScenarioConfig::for_channel(ChannelKind::DoublySelective);
    cfg.channel.delta_d = delta_d;
    let g = sample_couplings(&cfg, 0)?;
    let n = cfg.ofdm.n_subcarriers();
    let opts = OptimizerOptions::with_budget(power_budget(n, snr_db));
    println!("delta_d = {delta_d}, SNR = {snr_db} dB, P_t = {:.1}", opts.power_budget);

    let order = weakest_first(&g);
    let rsma = optimize_rsma(&g, &opts)?;
    let noma = optimize_noma(&g, &opts, &order)?;
    let wf = waterfill_ofdma(&g, &assign_subcarriers_ofdma(&g, AssignmentMode::BestGain), &opts)?;
    let eq = waterfill_ofdma(&g, &assign_subcarriers_ofdma(&g, AssignmentMode::EqualSplit), &opts)?;

    let sum = |v: &[f64]| v.iter().sum::<f64>();
    println!("\n{:<16} {:>9} {:>9} {:>9} {:>9}", "scheme", "sum-rate", "P common", "P user0", "P user1");
    for (name, r) in [("rsma", &rsma), ("noma", &noma), ("ofdma_waterfill", &wf), ("ofdma_equal", &eq)] {
        println!(
            "{name:<16} {:>9.3} {:>9.1} {:>9.1} {:>9.1}",
            r.sum_rate(),
            sum(&r.alloc.common),
            sum(&r.alloc.private[0]),
            sum(&r.alloc.private[1])
        );
    }

    println!("\nRSMA: start {} won after {} iterations (converged: {})", rsma.start, rsma.iterations, rsma.converged);
    let trace = &rsma.objective_trace;
    let step = (trace.len() / 8).max(1);
    for (i, v) in trace.iter().enumerate().step_by(step) {
        println!("  iter {i:>3}: {v:.4}");
    }
    println!("  final   : {:.4}", trace.last().unwrap());
    println!("rate/WMMSE identity gap over all iterates: {:.1e}", rsma.identity_gap);
    println!("NOMA SIC order (weakest first): {order:?}");
    Ok(())
}
