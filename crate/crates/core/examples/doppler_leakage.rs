//! How much of each subcarrier's energy leaks into its neighbours as the
//! normalized Doppler spread grows.
//!
//! cargo run --release --example doppler_leakage

use ofdm_rsma::ltv_channel::{build_time_channel, effective_coupling, sample_paths, ChannelScenario};
use ofdm_rsma::ofdm_frame::{build_cp_matrices, build_dft_matrix, OfdmConfig};

fn main() -> ofdm_rsma::Result<()> {
    let cfg = OfdmConfig::new(35, 9, 60e3)?;
    let dft = build_dft_matrix(35);
    let cp = build_cp_matrices(35, 9)?;
    let draws = 200;

    println!("{:>8} {:>14} {:>16}", "delta_d", "leaked share", "max |g_nj|, n!=j");
    for delta_d in [0.0, 0.05, 0.1, 0.2, 0.5, 1.0] {
        let scn = ChannelScenario::doubly_selective(8, 0.5, delta_d);
        let (mut leaked, mut total, mut worst) = (0.0, 0.0, 0.0f64);
        for seed in 0..draws {
            let paths = sample_paths(&scn, &cfg, seed)?;
            let ch = build_time_channel(&paths, &cfg)?;
            let g = effective_coupling(&ch, &cfg, &dft, &cp, 0)?;
            leaked += g.off_diagonal_energy();
            total += g.off_diagonal_energy() + g.diagonal_gain();
            worst = worst.max(g.max_off_diagonal());
        }
        println!("{delta_d:>8} {:>13.4}% {worst:>16.4}", 100.0 * leaked / total);
    }
    Ok(())
}
