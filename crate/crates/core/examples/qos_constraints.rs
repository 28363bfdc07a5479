//! Minimum-rate constraints: the common stream is shared out so every user
//! reaches its target, and unattainable targets are reported instead of
//! being silently missed.
//!
//! cargo run --release --example qos_constraints

use ofdm_rsma::allocation_optimizers::{optimize_rsma, OptimizerOptions};
use ofdm_rsma::experiment_harness::{power_budget, sample_couplings, ScenarioConfig};
use ofdm_rsma::ltv_channel::ChannelKind;
use ofdm_rsma::Error;

fn main() -> ofdm_rsma::Result<()> {
    let mut cfg = ScenarioConfig::for_channel(ChannelKind::DoublySelective);
    cfg.channel.delta_d = 0.1;
    let g = sample_couplings(&cfg, 3)?;
    let budget = power_budget(cfg.ofdm.n_subcarriers(), 15.0);

    for targets in [[0.0, 0.0], [60.0, 60.0], [90.0, 20.0], [400.0, 400.0]] {
        let opts = OptimizerOptions {
            min_rates: targets.to_vec(),
            ..OptimizerOptions::with_budget(budget)
        };
        match optimize_rsma(&g, &opts) {
            Ok(res) => {
                let r: Vec<f64> = (0..2)
                    .map(|k| res.report.private_total(k) + res.alloc.common_shares[k])
                    .collect();
                println!(
                    "targets {targets:?}: sum-rate {:.2}, user rates [{:.2}, {:.2}], common {:.2}",
                    res.sum_rate(),
                    r[0],
                    r[1],
                    res.report.common_total
                );
            }
            Err(Error::Infeasible { slack }) => {
                println!("targets {targets:?}: infeasible (best min slack {slack:.2})");
            }
            Err(e) => return Err(e),
        }
    }
    Ok(())
}
