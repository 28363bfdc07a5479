//! Compares WMMSE against exhaustive grid search on tiny instances.
//!
//! cargo run --release --example grid_oracle

use ofdm_rsma::allocation_optimizers::{optimize_noma, optimize_rsma, OptimizerOptions};
use ofdm_rsma::link_analysis::NomaRateModel;
use ofdm_rsma::reference_oracle::{grid_search_best, random_couplings, GridSpec, Scheme};

fn main() -> ofdm_rsma::Result<()> {
    let order = vec![0, 1];
    let noma = Scheme::Noma { sic_order: order.clone(), model: NomaRateModel::SicDecodable };
    println!("{:>4} {:>8} {:>10} {:>10} {:>10} {:>10}", "seed", "P_t", "rsma", "grid", "noma", "grid");
    for seed in 0..8u64 {
        let g = random_couplings(2, 2, 0.4, seed);
        let opts = OptimizerOptions { seed, ..OptimizerOptions::with_budget(5.0 * (1 + seed) as f64) };
        let grid = GridSpec::new(21, opts.power_budget)?;
        let r = optimize_rsma(&g, &opts)?;
        let rg = grid_search_best(&g, &Scheme::Rsma, &grid, 1.0)?;
        let n = optimize_noma(&g, &opts, &order)?;
        let ng = grid_search_best(&g, &noma, &grid, 1.0)?;
        println!(
            "{seed:>4} {:>8.1} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            opts.power_budget,
            r.sum_rate(),
            rg.sum_rate,
            n.sum_rate(),
            ng.sum_rate
        );
    }
    Ok(())
}
