//! Splits the received power on a few subcarriers into signal, ICI, MUI and
//! noise for the RSMA common and private streams, NOMA and OFDMA.
//!
//! cargo run --release --example sinr_breakdown

use ofdm_rsma::experiment_harness::{sample_couplings, ScenarioConfig};
use ofdm_rsma::link_analysis::{
    evaluate_noma, evaluate_ofdma, evaluate_rsma, noma_private_sinr, ofdma_sinr, rsma_common_sinr,
    rsma_private_sinr, NomaRateModel, PowerAllocation, SinrDecomposition,
};
use ofdm_rsma::ltv_channel::ChannelKind;

fn show(label: &str, d: &SinrDecomposition) {
    println!(
        "  {label:<16} S {:>9.3}  ICI {:>8.3}  MUI {:>8.3}  N {:>4.1}  SINR {:>8.3} dB",
        d.signal,
        d.ici,
        d.mui,
        d.noise,
        10.0 * d.sinr().log10()
    );
}

fn main() -> ofdm_rsma::Result<()> {
    let mut cfg = ScenarioConfig::for_channel(ChannelKind::DoublySelective);
    cfg.channel.delta_d = 0.2;
    let g = sample_couplings(&cfg, 0)?;
    let n = cfg.ofdm.n_subcarriers();
    let noise = 1.0;

    // 20 dB per subcarrier, a quarter on the common stream
    let p = 100.0;
    let alloc = PowerAllocation {
        common: vec![0.25 * p; n],
        private: vec![vec![0.375 * p; n]; 2],
        common_shares: vec![0.0; 2],
    };
    let order = [0, 1];
    let assignment: Vec<usize> = (0..n).map(|i| i % 2).collect();
    let q_ofdma = vec![p; n];

    for carrier in [0, n / 2] {
        println!("subcarrier {carrier}");
        for k in 0..2 {
            show(&format!("rsma common @u{k}"), &rsma_common_sinr(&g, &alloc, noise, k, carrier));
            show(&format!("rsma private u{k}"), &rsma_private_sinr(&g, &alloc, noise, k, carrier));
            show(&format!("noma u{k}"), &noma_private_sinr(&g, &alloc.private, noise, &order, k, carrier)?);
        }
        show(&format!("ofdma (u{})", assignment[carrier]), &ofdma_sinr(&g, &assignment, &q_ofdma, noise, carrier));
    }

    let rsma = evaluate_rsma(&g, &alloc, noise)?;
    let noma = evaluate_noma(&g, &alloc.private, noise, &order, NomaRateModel::SicDecodable)?;
    let ofdma = evaluate_ofdma(&g, &assignment, &q_ofdma, noise)?;
    println!("\nsum-rates (bit/s/Hz per symbol) for these fixed allocations:");
    println!("  rsma  {:.3} (common {:.3})", rsma.sum_rate, rsma.common_total);
    println!("  noma  {:.3}", noma.sum_rate);
    println!("  ofdma {:.3}", ofdma.sum_rate);
    Ok(())
}
