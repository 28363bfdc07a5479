//! Runs the built-in self-checks, then again with a deliberately broken
//! decomposition to show the oracle catching it.
//!
//! cargo run --release --example verify_suite

use ofdm_rsma::experiment_harness::verify::{verify, verify_with, DecompositionSource, LinkAnalysis};
use ofdm_rsma::link_analysis::{PowerAllocation, SinrDecomposition};
use ofdm_rsma::ltv_channel::CouplingMatrix;

/// Drops the multi-user interference from the private-stream SINR.
struct ForgetsMui;

impl DecompositionSource for ForgetsMui {
    fn common(&self, g: &[CouplingMatrix], a: &PowerAllocation, s: f64, k: usize, n: usize) -> SinrDecomposition {
        LinkAnalysis.common(g, a, s, k, n)
    }

    fn private(&self, g: &[CouplingMatrix], a: &PowerAllocation, s: f64, k: usize, n: usize) -> SinrDecomposition {
        SinrDecomposition { mui: 0.0, ..LinkAnalysis.private(g, a, s, k, n) }
    }

    fn noma(&self, g: &[CouplingMatrix], q: &[Vec<f64>], s: f64, o: &[usize], k: usize, n: usize) -> SinrDecomposition {
        LinkAnalysis.noma(g, q, s, o, k, n)
    }
}

fn main() {
    println!("library implementation:");
    print!("{}", verify().table());
    println!("\nprivate-stream MUI dropped:");
    let broken = verify_with(&ForgetsMui);
    print!("{}", broken.table());
    println!("all passed: {}", broken.all_passed());
}
