//! Builds the DFT and cyclic-prefix matrices, modulates one QPSK symbol and
//! shows that removing the prefix undoes adding it.
//!
//! cargo run --example ofdm_frame

use num_complex::Complex64;
use ofdm_rsma::ofdm_frame::{build_cp_matrices, build_dft_matrix, modulate_stream, CMatrix, OfdmConfig};

fn main() -> ofdm_rsma::Result<()> {
    let cfg = OfdmConfig::new(8, 2, 60e3)?;
    println!(
        "N = {}, C = {}, SCS = {} kHz, Fs = {} MHz, {} samples per symbol",
        cfg.n_subcarriers(),
        cfg.cp_len(),
        cfg.scs_hz() / 1e3,
        cfg.fs_hz() / 1e6,
        cfg.symbol_len()
    );

    let dft = build_dft_matrix(cfg.n_subcarriers());
    let cp = build_cp_matrices(cfg.n_subcarriers(), cfg.cp_len())?;
    let n = cfg.n_subcarriers();
    let unitary_err = (dft.matrix() * dft.adjoint() - CMatrix::identity(n, n))
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    println!("max |F F^H - I| = {unitary_err:.2e}");
    println!("B A == I: {}", cp.remove() * cp.add() == CMatrix::identity(n, n));

    let qpsk = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];
    let symbols: Vec<Complex64> = (0..n)
        .map(|i| {
            let (re, im) = qpsk[i % 4];
            Complex64::new(re, im) / 2f64.sqrt()
        })
        .collect();
    let amplitudes = vec![1.0; n];
    let tx = modulate_stream(&cfg, &dft, &cp, &amplitudes, &symbols)?;
    println!("\ntime-domain samples (prefix first):");
    for (i, s) in tx.iter().enumerate() {
        let tag = if i < cfg.cp_len() { "cp " } else { "   " };
        println!("  {tag}{i:>2}: {:+.4} {:+.4}j", s.re, s.im);
    }

    // over an ideal channel the receiver recovers the symbols exactly
    let rx = dft.matrix() * (cp.remove() * &tx);
    let err = rx.iter().zip(&symbols).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    println!("\nrecovered symbols, max error {err:.2e}");
    Ok(())
}
