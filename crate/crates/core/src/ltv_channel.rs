//! Linear time-varying multipath channels.
//!
//! A channel is a list of discrete paths, each with a complex gain, an
//! integer sample delay and a Doppler shift. The time-domain matrix over one
//! CP-extended symbol is `H = Σ α_l · Π^{d_l} · Δ(ν_l)`, where `Π` is the
//! forward cyclic shift and `Δ(ν)` the Doppler phase ramp
//! `diag(exp(j2πν·m/F_s))`, `m = 1..N+C`. The receiver sees the
//! frequency-domain coupling `G = F·B·H·A·F^H`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::ofdm_frame::{check_len, CMatrix, CpMatrices, OfdmConfig, UnitaryDft};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationPath {
    pub gain: Complex64,
    pub delay_samples: usize,
    pub doppler_hz: f64,
}

impl PropagationPath {
    pub fn new(gain: Complex64, delay_samples: usize, doppler_hz: f64) -> Self {
        Self {
            gain,
            delay_samples,
            doppler_hz,
        }
    }
}

/// Time-domain channel matrix of one user together with the paths it was
/// synthesized from.
#[derive(Debug, Clone)]
pub struct LtvChannel {
    paths: Vec<PropagationPath>,
    h_time: CMatrix,
}

impl LtvChannel {
    pub fn paths(&self) -> &[PropagationPath] {
        &self.paths
    }

    /// `(N+C)×(N+C)` time-domain matrix.
    pub fn h_time(&self) -> &CMatrix {
        &self.h_time
    }
}

pub fn build_time_channel(paths: &[PropagationPath], cfg: &OfdmConfig) -> Result<LtvChannel> {
    let len = cfg.symbol_len();
    let mut h = CMatrix::zeros(len, len);
    for path in paths {
        if path.delay_samples > cfg.cp_len() {
            return Err(Error::DelayExceedsCp {
                delay: path.delay_samples,
                cp_len: cfg.cp_len(),
            });
        }
        // (Π^d Δ)[m, (m-d) mod len] = exp(j2πν·((m-d) mod len + 1)/F_s)
        for m in 0..len {
            let col = (m + len - path.delay_samples % len) % len;
            let phase = 2.0 * PI * path.doppler_hz * (col + 1) as f64 / cfg.fs_hz();
            h[(m, col)] += path.gain * Complex64::from_polar(1.0, phase);
        }
    }
    Ok(LtvChannel {
        paths: paths.to_vec(),
        h_time: h,
    })
}

/// Effective frequency-domain channel of one user, `G = F·B·H·A·F^H`.
///
/// The squared magnitudes `|g_{nj}|²` are cached since every SINR
/// expression depends on the coupling only through them.
#[derive(Debug, Clone)]
pub struct CouplingMatrix {
    user_id: usize,
    g: CMatrix,
    power: DMatrix<f64>,
}

impl CouplingMatrix {
    /// Wraps an arbitrary square matrix, e.g. a hand-built test instance.
    pub fn new(user_id: usize, g: CMatrix) -> Result<Self> {
        check_len("coupling matrix columns", g.nrows(), g.ncols())?;
        let power = g.map(|v| v.norm_sqr());
        Ok(Self { user_id, g, power })
    }

    /// A diagonal (ICI-free) coupling with the given per-subcarrier gains.
    pub fn diagonal(user_id: usize, gains: &[Complex64]) -> Self {
        let n = gains.len();
        let g = CMatrix::from_fn(n, n, |r, c| if r == c { gains[r] } else { Complex64::new(0.0, 0.0) });
        Self::new(user_id, g).expect("square by construction")
    }

    pub fn user_id(&self) -> usize {
        self.user_id
    }

    pub fn g(&self) -> &CMatrix {
        &self.g
    }

    pub fn n_subcarriers(&self) -> usize {
        self.g.nrows()
    }

    /// `|g_{nj}|²`, the fraction of power sent on subcarrier `j` that lands on `n`.
    #[inline]
    pub fn power(&self, n: usize, j: usize) -> f64 {
        self.power[(n, j)]
    }

    pub fn power_matrix(&self) -> &DMatrix<f64> {
        &self.power
    }

    /// `Σ_n |g_{nn}|²`.
    pub fn diagonal_gain(&self) -> f64 {
        (0..self.n_subcarriers()).map(|n| self.power(n, n)).sum()
    }

    /// Total leaked energy `Σ_{n≠j} |g_{nj}|²`.
    pub fn off_diagonal_energy(&self) -> f64 {
        let n = self.n_subcarriers();
        let total: f64 = self.power.iter().sum();
        total - (0..n).map(|i| self.power(i, i)).sum::<f64>()
    }

    /// Largest off-diagonal magnitude `max_{n≠j} |g_{nj}|`.
    pub fn max_off_diagonal(&self) -> f64 {
        let n = self.n_subcarriers();
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in 0..n {
                if r != c {
                    worst = worst.max(self.g[(r, c)].norm());
                }
            }
        }
        worst
    }

    /// Multiplies every entry by a real amplitude factor.
    pub fn scaled(&self, amplitude: f64) -> Self {
        Self::new(self.user_id, self.g.map(|v| v * amplitude)).expect("square")
    }
}

pub fn effective_coupling(
    ch: &LtvChannel,
    cfg: &OfdmConfig,
    dft: &UnitaryDft,
    cp: &CpMatrices,
    user_id: usize,
) -> Result<CouplingMatrix> {
    let n = cfg.n_subcarriers();
    check_len("DFT size", n, dft.size())?;
    check_len("CP-add rows", cfg.symbol_len(), cp.add().nrows())?;
    check_len("CP-add columns", n, cp.add().ncols())?;
    check_len("channel size", cfg.symbol_len(), ch.h_time().nrows())?;
    let g = dft.matrix() * cp.remove() * ch.h_time() * cp.add() * dft.adjoint();
    CouplingMatrix::new(user_id, g)
}

/// Propagation environment family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    Flat,
    FrequencySelective,
    DoublySelective,
}

impl ChannelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ChannelKind::Flat => "flat",
            ChannelKind::FrequencySelective => "frequency_selective",
            ChannelKind::DoublySelective => "doubly_selective",
        }
    }
}

impl std::str::FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(ChannelKind::Flat),
            "frequency_selective" => Ok(ChannelKind::FrequencySelective),
            "doubly_selective" => Ok(ChannelKind::DoublySelective),
            other => Err(Error::InvalidScenario(format!("unknown channel kind `{other}`"))),
        }
    }
}

/// Statistical description of a channel family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelScenario {
    pub kind: ChannelKind,
    pub num_taps: usize,
    /// Exponential power-delay-profile decay per tap, `σ_l² ∝ exp(-l·decay)`.
    pub pdp_decay: f64,
    /// Maximum Doppler normalized to the subcarrier spacing.
    pub delta_d: f64,
    /// Replace the Rayleigh tap gains by their deterministic rms values.
    pub fixed_gain: bool,
}

impl ChannelScenario {
    pub fn flat() -> Self {
        Self {
            kind: ChannelKind::Flat,
            num_taps: 1,
            pdp_decay: 0.0,
            delta_d: 0.0,
            fixed_gain: false,
        }
    }

    pub fn frequency_selective(num_taps: usize, pdp_decay: f64) -> Self {
        Self {
            kind: ChannelKind::FrequencySelective,
            num_taps,
            pdp_decay,
            delta_d: 0.0,
            fixed_gain: false,
        }
    }

    pub fn doubly_selective(num_taps: usize, pdp_decay: f64, delta_d: f64) -> Self {
        Self {
            kind: ChannelKind::DoublySelective,
            num_taps,
            pdp_decay,
            delta_d,
            fixed_gain: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_taps == 0 {
            return Err(Error::InvalidScenario("num_taps must be at least 1".into()));
        }
        if !(self.pdp_decay.is_finite() && self.pdp_decay >= 0.0) {
            return Err(Error::InvalidScenario("pdp_decay must be finite and >= 0".into()));
        }
        if !(self.delta_d.is_finite() && self.delta_d >= 0.0) {
            return Err(Error::InvalidScenario("delta_d must be finite and >= 0".into()));
        }
        if self.kind != ChannelKind::DoublySelective && self.delta_d != 0.0 {
            return Err(Error::InvalidScenario(format!(
                "delta_d must be 0 for a {} channel",
                self.kind.name()
            )));
        }
        if self.kind == ChannelKind::Flat && self.num_taps != 1 {
            return Err(Error::InvalidScenario("a flat channel has exactly one tap".into()));
        }
        Ok(())
    }

    /// Normalized tap powers `σ_l²`, summing to one.
    pub fn tap_powers(&self) -> Vec<f64> {
        let raw: Vec<f64> = (0..self.num_taps)
            .map(|l| (-(l as f64) * self.pdp_decay).exp())
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|p| p / total).collect()
    }
}

/// Draws one set of paths for the scenario. Deterministic in `seed`.
///
/// Taps sit on consecutive sample delays `0..L`; gains are `CN(0, σ_l²)`
/// and, for doubly-selective channels, each path gets a Doppler shift
/// `f_d·cos θ_l` with `θ_l` uniform and `f_d = delta_d · Δf`.
pub fn sample_paths(
    scn: &ChannelScenario,
    cfg: &OfdmConfig,
    seed: u64,
) -> Result<Vec<PropagationPath>> {
    scn.validate()?;
    if scn.num_taps > cfg.cp_len() + 1 {
        return Err(Error::InvalidScenario(format!(
            "num_taps ({}) exceeds cp_len + 1 ({})",
            scn.num_taps,
            cfg.cp_len() + 1
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let powers = scn.tap_powers();
    let gains: Vec<Complex64> = powers
        .iter()
        .map(|&p| {
            if scn.fixed_gain {
                Complex64::new(p.sqrt(), 0.0)
            } else {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im) * (p / 2.0).sqrt()
            }
        })
        .collect();
    let f_d = scn.delta_d * cfg.scs_hz();
    let dopplers: Vec<f64> = match scn.kind {
        ChannelKind::DoublySelective => (0..scn.num_taps)
            .map(|_| f_d * (2.0 * PI * rng.random::<f64>()).cos())
            .collect(),
        _ => vec![0.0; scn.num_taps],
    };
    Ok(gains
        .into_iter()
        .zip(dopplers)
        .enumerate()
        .map(|(l, (g, nu))| PropagationPath::new(g, l, nu))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ofdm_frame::{build_cp_matrices, build_dft_matrix};

    fn setup(n: usize, c: usize) -> (OfdmConfig, UnitaryDft, CpMatrices) {
        let cfg = OfdmConfig::new(n, c, 60e3).unwrap();
        (cfg, build_dft_matrix(n), build_cp_matrices(n, c).unwrap())
    }

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    /// Loop-based `Σ α Π^d Δ(ν)` written straight from the definitions,
    /// building each factor as an explicit matrix.
    fn loop_channel(paths: &[PropagationPath], cfg: &OfdmConfig) -> CMatrix {
        let len = cfg.symbol_len();
        let mut h = CMatrix::zeros(len, len);
        for p in paths {
            let mut shift = CMatrix::identity(len, len);
            let mut pi = CMatrix::zeros(len, len);
            for m in 0..len {
                pi[((m + 1) % len, m)] = one();
            }
            for _ in 0..p.delay_samples {
                shift = &pi * shift;
            }
            let ramp = CMatrix::from_fn(len, len, |r, c| {
                if r == c {
                    Complex64::from_polar(1.0, 2.0 * PI * p.doppler_hz * (r as f64 + 1.0) / cfg.fs_hz())
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            h += shift * ramp * p.gain;
        }
        h
    }

    #[test]
    fn unit_path_is_identity() {
        let (cfg, _, _) = setup(6, 2);
        let ch = build_time_channel(&[PropagationPath::new(one(), 0, 0.0)], &cfg).unwrap();
        assert_eq!(ch.h_time(), &CMatrix::identity(8, 8));
    }

    #[test]
    fn unit_delay_is_one_step_shift() {
        let (cfg, _, _) = setup(6, 2);
        let ch = build_time_channel(&[PropagationPath::new(one(), 1, 0.0)], &cfg).unwrap();
        let h = ch.h_time();
        for r in 0..8 {
            for c in 0..8 {
                let expected = if r == (c + 1) % 8 { 1.0 } else { 0.0 };
                assert_eq!(h[(r, c)], Complex64::new(expected, 0.0));
            }
        }
    }

    #[test]
    fn two_paths_match_loop_builder() {
        let (cfg, _, _) = setup(6, 3);
        let paths = [
            PropagationPath::new(one(), 0, 0.0),
            PropagationPath::new(Complex64::new(0.0, 0.5), 2, 0.0),
        ];
        let h = build_time_channel(&paths, &cfg).unwrap();
        assert!((h.h_time() - loop_channel(&paths, &cfg)).norm() < 1e-12);
    }

    #[test]
    fn doppler_paths_match_loop_builder() {
        let (cfg, _, _) = setup(8, 3);
        let paths = [
            PropagationPath::new(Complex64::new(0.3, -0.2), 0, 12e3),
            PropagationPath::new(Complex64::new(-0.1, 0.7), 3, -25e3),
            PropagationPath::new(Complex64::new(0.2, 0.2), 1, 4e3),
        ];
        let h = build_time_channel(&paths, &cfg).unwrap();
        assert!((h.h_time() - loop_channel(&paths, &cfg)).norm() < 1e-12);
    }

    #[test]
    fn delay_beyond_cp_is_rejected() {
        let (cfg, _, _) = setup(6, 2);
        let err = build_time_channel(&[PropagationPath::new(one(), 3, 0.0)], &cfg).unwrap_err();
        assert!(matches!(err, Error::DelayExceedsCp { delay: 3, cp_len: 2 }));
    }

    #[test]
    fn identity_channel_gives_identity_coupling() {
        let (cfg, f, cp) = setup(8, 2);
        let ch = build_time_channel(&[PropagationPath::new(one(), 0, 0.0)], &cfg).unwrap();
        let g = effective_coupling(&ch, &cfg, &f, &cp, 0).unwrap();
        assert!((g.g() - CMatrix::identity(8, 8)).norm() < 1e-12);
    }

    #[test]
    fn static_tap_is_diagonal_with_linear_phase() {
        let (cfg, f, cp) = setup(8, 3);
        let alpha = Complex64::new(0.6, -0.8);
        let delay = 2;
        let ch = build_time_channel(&[PropagationPath::new(alpha, delay, 0.0)], &cfg).unwrap();
        let g = effective_coupling(&ch, &cfg, &f, &cp, 0).unwrap();
        for n in 0..8 {
            let expected = alpha * Complex64::from_polar(1.0, -2.0 * PI * (n * delay) as f64 / 8.0);
            assert!((g.g()[(n, n)] - expected).norm() < 1e-12);
        }
        assert!(g.max_off_diagonal() < 1e-10);
    }

    #[test]
    fn doppler_leaks_energy_to_every_subcarrier() {
        let (cfg, f, cp) = setup(8, 2);
        let nu = 0.3 * cfg.scs_hz();
        let ch = build_time_channel(&[PropagationPath::new(one(), 1, nu)], &cfg).unwrap();
        let g = effective_coupling(&ch, &cfg, &f, &cp, 0).unwrap();
        for n in 0..8 {
            let leak: f64 = (0..8).filter(|&j| j != n).map(|j| g.power(n, j)).sum();
            assert!(leak > 1e-6, "subcarrier {n} leak {leak}");
        }
    }

    #[test]
    fn flat_sample_has_one_static_path() {
        let (cfg, _, _) = setup(35, 9);
        for seed in 0..20 {
            let paths = sample_paths(&ChannelScenario::flat(), &cfg, seed).unwrap();
            assert_eq!(paths.len(), 1);
            assert_eq!(paths[0].delay_samples, 0);
            assert_eq!(paths[0].doppler_hz, 0.0);
        }
    }

    #[test]
    fn selective_profile_has_unit_mean_power() {
        let (cfg, _, _) = setup(35, 9);
        let scn = ChannelScenario::frequency_selective(8, 0.5);
        let draws = 10_000;
        let mut total = 0.0;
        for seed in 0..draws {
            let paths = sample_paths(&scn, &cfg, seed).unwrap();
            assert_eq!(paths.len(), 8);
            total += paths.iter().map(|p| p.gain.norm_sqr()).sum::<f64>();
        }
        let mean = total / draws as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean tap power {mean}");
    }

    #[test]
    fn doppler_bounded_by_max_spread() {
        let (cfg, _, _) = setup(35, 9);
        let scn = ChannelScenario::doubly_selective(8, 0.5, 0.5);
        for seed in 0..50 {
            for p in sample_paths(&scn, &cfg, seed).unwrap() {
                assert!(p.doppler_hz.abs() <= 30e3 + 1e-9);
            }
        }
    }

    #[test]
    fn too_many_taps_rejected() {
        let (cfg, _, _) = setup(16, 3);
        let scn = ChannelScenario::frequency_selective(5, 0.5);
        assert!(sample_paths(&scn, &cfg, 1).is_err());
        let ok = ChannelScenario::frequency_selective(4, 0.5);
        assert!(sample_paths(&ok, &cfg, 1).is_ok());
    }

    #[test]
    fn scenario_invariants_enforced() {
        let mut scn = ChannelScenario::frequency_selective(4, 0.5);
        scn.delta_d = 0.1;
        assert!(scn.validate().is_err());
        let mut flat = ChannelScenario::flat();
        flat.num_taps = 2;
        assert!(flat.validate().is_err());
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let (cfg, _, _) = setup(35, 9);
        let scn = ChannelScenario::doubly_selective(8, 0.5, 0.2);
        assert_eq!(sample_paths(&scn, &cfg, 42).unwrap(), sample_paths(&scn, &cfg, 42).unwrap());
        assert_ne!(sample_paths(&scn, &cfg, 42).unwrap(), sample_paths(&scn, &cfg, 43).unwrap());
    }

    #[test]
    fn leakage_vanishes_with_doppler() {
        let (cfg, f, cp) = setup(35, 9);
        for seed in 0..5 {
            let mut previous = f64::INFINITY;
            for dd in [0.5, 0.2, 0.1, 0.05, 0.0] {
                let scn = ChannelScenario::doubly_selective(8, 0.5, dd);
                let paths = sample_paths(&scn, &cfg, seed).unwrap();
                let ch = build_time_channel(&paths, &cfg).unwrap();
                let g = effective_coupling(&ch, &cfg, &f, &cp, 0).unwrap();
                let leak = g.off_diagonal_energy();
                assert!(leak <= previous, "seed {seed}, delta_d {dd}: {leak} > {previous}");
                previous = leak;
            }
            assert!(previous < 1e-20);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn static_paths_never_leak(
                taps in prop::collection::vec(((-1.0..1.0f64), (-1.0..1.0f64), 0usize..5), 1..6),
            ) {
                let (cfg, f, cp) = setup(12, 4);
                let paths: Vec<_> = taps
                    .iter()
                    .map(|&(re, im, d)| PropagationPath::new(Complex64::new(re, im), d, 0.0))
                    .collect();
                let ch = build_time_channel(&paths, &cfg).unwrap();
                let g = effective_coupling(&ch, &cfg, &f, &cp, 0).unwrap();
                prop_assert!(g.max_off_diagonal() < 1e-10);
            }
        }
    }
}
