//! Deterministic OFDM linear-algebra objects: the unitary DFT matrix, the
//! cyclic-prefix insertion/removal matrices and the per-stream modulator.
//!
//! All matrices are dense. Subcarrier allocations are carried as nonnegative
//! real amplitudes; the power on subcarrier `n` is `amplitudes[n]²`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix used throughout the crate.
pub type CMatrix = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = DVector<Complex64>;

/// Numerology of one OFDM symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfdmConfig {
    n_subcarriers: usize,
    cp_len: usize,
    scs_hz: f64,
    fs_hz: f64,
}

impl OfdmConfig {
    /// Builds a config whose sampling rate is `n_subcarriers · scs_hz`.
    pub fn new(n_subcarriers: usize, cp_len: usize, scs_hz: f64) -> Result<Self> {
        if n_subcarriers == 0 {
            return Err(Error::InvalidConfig("n_subcarriers must be at least 1".into()));
        }
        if cp_len >= n_subcarriers {
            return Err(Error::InvalidConfig(format!(
                "cp_len ({cp_len}) must be smaller than n_subcarriers ({n_subcarriers})"
            )));
        }
        if !(scs_hz.is_finite() && scs_hz > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "scs_hz must be positive and finite, got {scs_hz}"
            )));
        }
        Ok(Self {
            n_subcarriers,
            cp_len,
            scs_hz,
            fs_hz: n_subcarriers as f64 * scs_hz,
        })
    }

    /// Like [`OfdmConfig::new`] but also checks an externally supplied
    /// sampling rate against the subcarrier grid.
    pub fn with_sampling_rate(
        n_subcarriers: usize,
        cp_len: usize,
        scs_hz: f64,
        fs_hz: f64,
    ) -> Result<Self> {
        let cfg = Self::new(n_subcarriers, cp_len, scs_hz)?;
        if (cfg.fs_hz - fs_hz).abs() > 1e-9 * cfg.fs_hz {
            return Err(Error::InvalidConfig(format!(
                "fs_hz ({fs_hz}) must equal n_subcarriers * scs_hz ({})",
                cfg.fs_hz
            )));
        }
        Ok(cfg)
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn cp_len(&self) -> usize {
        self.cp_len
    }

    pub fn scs_hz(&self) -> f64 {
        self.scs_hz
    }

    pub fn fs_hz(&self) -> f64 {
        self.fs_hz
    }

    /// Samples per OFDM symbol including the cyclic prefix.
    pub fn symbol_len(&self) -> usize {
        self.n_subcarriers + self.cp_len
    }
}

/// The unitary `N`-point DFT matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryDft {
    matrix: CMatrix,
}

impl UnitaryDft {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// The inverse transform `F^H`.
    pub fn adjoint(&self) -> CMatrix {
        self.matrix.adjoint()
    }
}

/// Builds `F` with entry `(m, k) = exp(-j2π·m·k/n) / √n`.
///
/// Panics if `n == 0`.
pub fn build_dft_matrix(n: usize) -> UnitaryDft {
    assert!(n >= 1, "DFT size must be at least 1");
    let scale = 1.0 / (n as f64).sqrt();
    let matrix = CMatrix::from_fn(n, n, |m, k| {
        // reduce the exponent modulo n so large products keep full precision
        let phase = -2.0 * PI * ((m * k) % n) as f64 / n as f64;
        Complex64::from_polar(scale, phase)
    });
    UnitaryDft { matrix }
}

/// Cyclic-prefix insertion (`A`) and removal (`B`) matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct CpMatrices {
    add: CMatrix,
    remove: CMatrix,
}

impl CpMatrices {
    /// `(N+C)×N`; copies the last `C` samples to the front.
    pub fn add(&self) -> &CMatrix {
        &self.add
    }

    /// `N×(N+C)`; drops the first `C` samples.
    pub fn remove(&self) -> &CMatrix {
        &self.remove
    }
}

pub fn build_cp_matrices(n: usize, c: usize) -> Result<CpMatrices> {
    if n == 0 || c >= n {
        return Err(Error::InvalidConfig(format!(
            "cyclic prefix needs 0 <= c < n, got n = {n}, c = {c}"
        )));
    }
    let one = Complex64::new(1.0, 0.0);
    let mut add = CMatrix::zeros(n + c, n);
    for r in 0..c {
        add[(r, n - c + r)] = one;
    }
    for r in 0..n {
        add[(c + r, r)] = one;
    }
    let mut remove = CMatrix::zeros(n, n + c);
    for r in 0..n {
        remove[(r, c + r)] = one;
    }
    Ok(CpMatrices { add, remove })
}

/// Time-domain samples `A · F^H · diag(amplitudes) · symbols` of one stream.
pub fn modulate_stream(
    cfg: &OfdmConfig,
    dft: &UnitaryDft,
    cp: &CpMatrices,
    amplitudes: &[f64],
    symbols: &[Complex64],
) -> Result<CVector> {
    let n = cfg.n_subcarriers();
    check_len("amplitudes", n, amplitudes.len())?;
    check_len("symbols", n, symbols.len())?;
    check_len("DFT size", n, dft.size())?;
    check_len("CP matrix width", n, cp.add().ncols())?;
    check_len("CP matrix height", cfg.symbol_len(), cp.add().nrows())?;
    let precoded = CVector::from_iterator(
        n,
        amplitudes.iter().zip(symbols).map(|(&a, &d)| d * a),
    );
    Ok(cp.add() * (dft.matrix().adjoint() * precoded))
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { what, expected, got });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn unitarity_error(f: &UnitaryDft) -> f64 {
        let n = f.size();
        (f.matrix() * f.adjoint() - CMatrix::identity(n, n)).norm()
    }

    #[test]
    fn dft_of_size_one_is_identity() {
        let f = build_dft_matrix(1);
        assert_eq!(f.matrix()[(0, 0)], c(1.0));
    }

    #[test]
    fn dft_of_size_two() {
        let f = build_dft_matrix(2);
        let s = 1.0 / 2f64.sqrt();
        let expected = [[s, s], [s, -s]];
        for m in 0..2 {
            for k in 0..2 {
                assert!((f.matrix()[(m, k)] - c(expected[m][k])).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn dft_is_unitary_up_to_64() {
        for n in 1..=64 {
            assert!(unitarity_error(&build_dft_matrix(n)) < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn cp_insertion_copies_tail() {
        let cp = build_cp_matrices(4, 2).unwrap();
        let x = CVector::from_vec(vec![c(1.0), c(2.0), c(3.0), c(4.0)]);
        let y = cp.add() * x;
        let got: Vec<f64> = y.iter().map(|v| v.re).collect();
        assert_eq!(got, vec![3.0, 4.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn cp_round_trip_is_exact() {
        for n in 1..=16 {
            for cp_len in 0..n {
                let cp = build_cp_matrices(n, cp_len).unwrap();
                assert_eq!(cp.remove() * cp.add(), CMatrix::identity(n, n));
                for row in cp.add().row_iter() {
                    assert_eq!(row.iter().filter(|v| **v == c(1.0)).count(), 1);
                }
            }
        }
    }

    #[test]
    fn zero_cp_gives_identities() {
        let cp = build_cp_matrices(4, 0).unwrap();
        assert_eq!(cp.add(), &CMatrix::identity(4, 4));
        assert_eq!(cp.remove(), &CMatrix::identity(4, 4));
    }

    #[test]
    fn cp_longer_than_symbol_is_rejected() {
        assert!(build_cp_matrices(4, 4).is_err());
        assert!(OfdmConfig::new(4, 5, 15e3).is_err());
        assert!(OfdmConfig::new(0, 0, 15e3).is_err());
    }

    #[test]
    fn sampling_rate_must_match_grid() {
        let cfg = OfdmConfig::new(35, 9, 60e3).unwrap();
        assert!((cfg.fs_hz() - 2.1e6).abs() < 1e-6);
        assert!(OfdmConfig::with_sampling_rate(35, 9, 60e3, 2.1e6).is_ok());
        assert!(OfdmConfig::with_sampling_rate(35, 9, 60e3, 2.0e6).is_err());
    }

    #[test]
    fn modulate_zero_amplitudes() {
        let cfg = OfdmConfig::new(4, 2, 15e3).unwrap();
        let f = build_dft_matrix(4);
        let cp = build_cp_matrices(4, 2).unwrap();
        let x = modulate_stream(&cfg, &f, &cp, &[0.0; 4], &[c(1.0); 4]).unwrap();
        assert_eq!(x.len(), 6);
        assert!(x.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn modulate_selector_is_first_idft_column() {
        let cfg = OfdmConfig::new(4, 0, 15e3).unwrap();
        let f = build_dft_matrix(4);
        let cp = build_cp_matrices(4, 0).unwrap();
        let e1 = [1.0, 0.0, 0.0, 0.0];
        let d = [c(1.0), c(0.0), c(0.0), c(0.0)];
        let x = modulate_stream(&cfg, &f, &cp, &e1, &d).unwrap();
        let col = f.adjoint().column(0).into_owned();
        assert!((x - col).norm() < 1e-15);
    }

    #[test]
    fn modulate_energy_includes_prefix() {
        let cfg = OfdmConfig::new(4, 2, 15e3).unwrap();
        let f = build_dft_matrix(4);
        let cp = build_cp_matrices(4, 2).unwrap();
        let d = [
            Complex64::from_polar(1.0, 0.3),
            Complex64::from_polar(1.0, -1.1),
            Complex64::from_polar(1.0, 2.0),
            Complex64::from_polar(1.0, 0.7),
        ];
        let x = modulate_stream(&cfg, &f, &cp, &[1.0; 4], &d).unwrap();
        let body = f.adjoint() * CVector::from_row_slice(&d);
        let tail: f64 = body.iter().skip(2).map(|v| v.norm_sqr()).sum();
        assert!((x.norm_squared() - (body.norm_squared() + tail)).abs() < 1e-12);
    }

    #[test]
    fn modulate_rejects_wrong_lengths() {
        let cfg = OfdmConfig::new(4, 1, 15e3).unwrap();
        let f = build_dft_matrix(4);
        let cp = build_cp_matrices(4, 1).unwrap();
        assert!(modulate_stream(&cfg, &f, &cp, &[1.0; 3], &[c(1.0); 4]).is_err());
        assert!(modulate_stream(&cfg, &f, &cp, &[1.0; 4], &[c(1.0); 5]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn cvec(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
            prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), n)
                .prop_map(|v| v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
        }

        proptest! {
            #[test]
            fn modulation_is_linear(
                (n, cp_len) in (1usize..12).prop_flat_map(|n| (Just(n), 0..n)),
                seed in cvec(24),
                amps in prop::collection::vec(0.0..3.0f64, 12),
            ) {
                let cfg = OfdmConfig::new(n, cp_len, 15e3).unwrap();
                let f = build_dft_matrix(n);
                let cp = build_cp_matrices(n, cp_len).unwrap();
                let d1 = &seed[..n];
                let d2 = &seed[12..12 + n];
                let sum: Vec<Complex64> = d1.iter().zip(d2).map(|(a, b)| a + b).collect();
                let amps = &amps[..n];
                let lhs = modulate_stream(&cfg, &f, &cp, amps, &sum).unwrap();
                let rhs = modulate_stream(&cfg, &f, &cp, amps, d1).unwrap()
                    + modulate_stream(&cfg, &f, &cp, amps, d2).unwrap();
                prop_assert!((lhs - rhs).norm() < 1e-12);
            }
        }
    }
}
