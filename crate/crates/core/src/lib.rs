//! Link-level OFDM rate-splitting multiple access over linear time-varying
//! channels.
//!
//! The crate models one downlink OFDM symbol shared by `K` single-antenna
//! users. Doppler spreads break subcarrier orthogonality, so every stream
//! leaks power into its neighbours (inter-carrier interference, ICI). The
//! building blocks are:
//!
//! - [`ofdm_frame`]: DFT and cyclic-prefix matrices, stream modulation.
//! - [`ltv_channel`]: multipath/Doppler channels and the per-user
//!   frequency-domain coupling matrix `G_k = F·B·H_k·A·F^H`.
//! - [`link_analysis`]: exact signal/ICI/MUI/noise decompositions, SINRs and
//!   rates for RSMA, NOMA and OFDMA.
//! - [`allocation_optimizers`]: WMMSE sum-rate maximization for RSMA and
//!   NOMA and waterfilling for OFDMA.
//! - [`reference_oracle`]: brute-force checks used by the test suites.
//! - [`experiment_harness`]: seeded Monte-Carlo SNR sweeps written to CSV.

pub mod error;
pub mod ofdm_frame;
pub mod ltv_channel;
pub mod link_analysis;
pub mod allocation_optimizers;
pub mod reference_oracle;
pub mod experiment_harness;

pub use error::{Error, Result};
