//! Seeded Monte-Carlo SNR sweeps.
//!
//! Each realization draws one channel per user; every SNR point and every
//! scheme reuses the same draws. The transmit power at `snr_db` is
//! `P_t = N · 10^(snr_db/10)` with unit noise variance. Results are means and
//! sample standard deviations of the per-realization sum-rates, written as
//! CSV next to a manifest describing the run.

mod config;
pub mod verify;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::allocation_optimizers::{
    assign_subcarriers_ofdma, optimize_noma_with, optimize_rsma, waterfill_ofdma, AssignmentMode,
    OptimizerOptions,
};
use crate::link_analysis::NomaRateModel;
use crate::ltv_channel::{
    build_time_channel, effective_coupling, sample_paths, ChannelKind, ChannelScenario,
    CouplingMatrix,
};
use crate::ofdm_frame::{build_cp_matrices, build_dft_matrix, OfdmConfig};
use crate::{Error, Result};
use config::ConfigFile;

/// Exact CSV header.
pub const CSV_HEADER: &str = "scheme,snr_db,delta_d,mean_sum_rate,std_sum_rate,realizations";

/// How the SNR axis maps to transmit power; recorded in every manifest.
pub const SNR_DEFINITION: &str =
    "SNR = P_t / (N * sigma^2) with sigma^2 = 1, i.e. P_t = N * 10^(snr_db / 10)";

/// Schemes a scenario can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    /// Contiguous equal subcarrier blocks, waterfilled.
    OfdmaEqual,
    /// Each subcarrier to its strongest user, waterfilled.
    OfdmaWaterfill,
    /// WMMSE-optimized NOMA, weakest user decoded first.
    Noma,
    /// WMMSE-optimized RSMA.
    Rsma,
    /// All power to the strongest user, waterfilled.
    SingleUserOfdm,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 5] = [
        SchemeKind::OfdmaEqual,
        SchemeKind::OfdmaWaterfill,
        SchemeKind::Noma,
        SchemeKind::Rsma,
        SchemeKind::SingleUserOfdm,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::OfdmaEqual => "ofdma_equal",
            SchemeKind::OfdmaWaterfill => "ofdma_waterfill",
            SchemeKind::Noma => "noma",
            SchemeKind::Rsma => "rsma",
            SchemeKind::SingleUserOfdm => "single_user_ofdm",
        }
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scheme `{s}`")))
    }
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub ofdm: OfdmConfig,
    pub channel: ChannelScenario,
    /// Per-user large-scale gain in dB; its length sets the number of users.
    pub user_gain_db: Vec<f64>,
    pub schemes: Vec<SchemeKind>,
    pub snr_grid_db: Vec<f64>,
    pub realizations: usize,
    pub seed: u64,
    /// Solver settings; budget, noise and seed are set per run.
    pub optimizer: OptimizerOptions,
    pub noma_model: NomaRateModel,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ConfigFile::default()
            .into_scenario()
            .expect("defaults are valid")
    }
}

impl ScenarioConfig {
    /// Defaults for one channel family (doubly-selective starts at `Δd = 0`).
    pub fn for_channel(kind: ChannelKind) -> Self {
        let mut cfg = Self::default();
        cfg.channel = match kind {
            ChannelKind::Flat => ChannelScenario::flat(),
            ChannelKind::FrequencySelective => ChannelScenario::frequency_selective(8, 0.5),
            ChannelKind::DoublySelective => ChannelScenario::doubly_selective(8, 0.5, 0.0),
        };
        cfg
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        ConfigFile::parse(text)?.into_scenario()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// Canonical TOML form; parsing it back yields the same config.
    pub fn to_toml(&self) -> String {
        ConfigFile::from_scenario(self).to_toml()
    }

    pub fn users(&self) -> usize {
        self.user_gain_db.len()
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, reason: String| {
            Err(Error::ConfigField {
                field: name.into(),
                reason,
            })
        };
        if let Err(e) = self.channel.validate() {
            return field("channel", e.to_string());
        }
        if self.channel.num_taps > self.ofdm.cp_len() + 1 {
            return field(
                "channel.num_taps",
                format!("{} taps do not fit a cyclic prefix of {}", self.channel.num_taps, self.ofdm.cp_len()),
            );
        }
        if self.user_gain_db.is_empty() {
            return field("channel.user_gain_db", "at least one user is required".into());
        }
        if self.user_gain_db.iter().any(|g| !g.is_finite()) {
            return field("channel.user_gain_db", "gains must be finite".into());
        }
        if self.schemes.is_empty() {
            return field("experiment.schemes", "at least one scheme is required".into());
        }
        if self.snr_grid_db.is_empty() {
            return field("experiment.snr_db", "the SNR grid is empty".into());
        }
        if self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return field("experiment.snr_db", "SNR values must be finite".into());
        }
        if self.snr_grid_db.windows(2).any(|w| w[1] <= w[0]) {
            return field("experiment.snr_db", "SNR values must be strictly increasing".into());
        }
        if self.realizations == 0 {
            return field("experiment.realizations", "must be at least 1".into());
        }
        if let Err(e) = self.optimizer.validate(self.users()) {
            return field("optimizer", e.to_string());
        }
        Ok(())
    }

    /// Git-style SHA-256 of the canonical config (`"blob <len>\0<toml>"`).
    pub fn content_hash(&self) -> String {
        let body = self.to_toml();
        let mut h = Sha256::new();
        h.update(format!("blob {}\0", body.len()).as_bytes());
        h.update(body.as_bytes());
        hex::encode(h.finalize())
    }
}

/// One line of the results table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scheme: SchemeKind,
    pub snr_db: f64,
    pub delta_d: f64,
    pub mean_sum_rate: f64,
    pub std_sum_rate: f64,
    pub realizations: usize,
}

impl ResultRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.scheme.name(),
            self.snr_db,
            self.delta_d,
            self.mean_sum_rate,
            self.std_sum_rate,
            self.realizations
        )
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of one `(realization, stream)` pair, independent of thread scheduling.
pub fn sub_seed(seed: u64, realization: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ realization) ^ stream)
}

/// Draws the coupling matrices of every user for one realization.
pub fn sample_couplings(cfg: &ScenarioConfig, realization: u64) -> Result<Vec<CouplingMatrix>> {
    let n = cfg.ofdm.n_subcarriers();
    let dft = build_dft_matrix(n);
    let cp = build_cp_matrices(n, cfg.ofdm.cp_len())?;
    cfg.user_gain_db
        .iter()
        .enumerate()
        .map(|(k, gain_db)| {
            let paths = sample_paths(&cfg.channel, &cfg.ofdm, sub_seed(cfg.seed, realization, k as u64))?;
            let ch = build_time_channel(&paths, &cfg.ofdm)?;
            let g = effective_coupling(&ch, &cfg.ofdm, &dft, &cp, k)?;
            Ok(g.scaled(10f64.powf(gain_db / 20.0)))
        })
        .collect()
}

/// Users sorted from the smallest to the largest overall gain `Σ_n |g_nn|²`.
pub fn weakest_first(couplings: &[CouplingMatrix]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..couplings.len()).collect();
    order.sort_by(|&a, &b| couplings[a].diagonal_gain().total_cmp(&couplings[b].diagonal_gain()));
    order
}

/// Power budget `P_t` for an SNR point.
pub fn power_budget(n_subcarriers: usize, snr_db: f64) -> f64 {
    n_subcarriers as f64 * 10f64.powf(snr_db / 10.0)
}

/// Sum-rate of one scheme on one channel draw.
pub fn scheme_sum_rate(
    scheme: SchemeKind,
    couplings: &[CouplingMatrix],
    opts: &OptimizerOptions,
    noma_model: NomaRateModel,
) -> Result<f64> {
    let n = couplings[0].n_subcarriers();
    let order = weakest_first(couplings);
    let res = match scheme {
        SchemeKind::OfdmaEqual => {
            let a = assign_subcarriers_ofdma(couplings, AssignmentMode::EqualSplit);
            waterfill_ofdma(couplings, &a, opts)?
        }
        SchemeKind::OfdmaWaterfill => {
            let a = assign_subcarriers_ofdma(couplings, AssignmentMode::BestGain);
            waterfill_ofdma(couplings, &a, opts)?
        }
        SchemeKind::SingleUserOfdm => {
            let strongest = *order.last().expect("at least one user");
            waterfill_ofdma(couplings, &vec![strongest; n], opts)?
        }
        SchemeKind::Noma => optimize_noma_with(couplings, opts, &order, noma_model)?,
        SchemeKind::Rsma => optimize_rsma(couplings, opts)?,
    };
    Ok(res.sum_rate())
}

/// Runs the Monte-Carlo sweep without touching the file system.
///
/// Rows are ordered by scheme (config order), then SNR.
pub fn simulate(cfg: &ScenarioConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let n = cfg.ofdm.n_subcarriers();
    // rates[r][snr][scheme]
    let rates: Vec<Vec<Vec<f64>>> = (0..cfg.realizations as u64)
        .into_par_iter()
        .map(|r| {
            let couplings = sample_couplings(cfg, r)?;
            cfg.snr_grid_db
                .iter()
                .map(|&snr| {
                    let opts = OptimizerOptions {
                        power_budget: power_budget(n, snr),
                        noise_var: 1.0,
                        seed: sub_seed(cfg.seed, r, u64::MAX),
                        ..cfg.optimizer.clone()
                    };
                    cfg.schemes
                        .iter()
                        .map(|&s| scheme_sum_rate(s, &couplings, &opts, cfg.noma_model))
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let count = cfg.realizations as f64;
    let mut rows = Vec::with_capacity(cfg.schemes.len() * cfg.snr_grid_db.len());
    for (si, &scheme) in cfg.schemes.iter().enumerate() {
        for (pi, &snr_db) in cfg.snr_grid_db.iter().enumerate() {
            let mean = rates.iter().map(|r| r[pi][si]).sum::<f64>() / count;
            let var = if cfg.realizations > 1 {
                rates.iter().map(|r| (r[pi][si] - mean).powi(2)).sum::<f64>() / (count - 1.0)
            } else {
                0.0
            };
            rows.push(ResultRow {
                scheme,
                snr_db,
                delta_d: cfg.channel.delta_d,
                mean_sum_rate: mean,
                std_sum_rate: var.sqrt(),
                realizations: cfg.realizations,
            });
        }
    }
    Ok(rows)
}

pub fn render_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv());
        out.push('\n');
    }
    out
}

/// Manifest path: the output path with its extension replaced by `.manifest`.
pub fn manifest_path(output: &Path) -> PathBuf {
    output.with_extension("manifest")
}

/// TOML manifest: run metadata followed by every (possibly per-sweep)
/// config in canonical form.
pub fn render_manifest(configs: &[&ScenarioConfig], rows: usize) -> String {
    let mut hasher = Sha256::new();
    for cfg in configs {
        hasher.update(cfg.content_hash().as_bytes());
    }
    let input_hash = if configs.len() == 1 {
        configs[0].content_hash()
    } else {
        hex::encode(hasher.finalize())
    };
    let mut out = String::new();
    let _ = writeln!(out, "generator = \"{} {}\"", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "input_hash = \"sha256:{input_hash}\"");
    let _ = writeln!(out, "snr_definition = \"{SNR_DEFINITION}\"");
    let _ = writeln!(out, "noise_var = 1.0");
    let _ = writeln!(out, "csv_header = \"{CSV_HEADER}\"");
    let _ = writeln!(out, "rows = {rows}");
    for cfg in configs {
        let _ = writeln!(out, "\n[[run]]");
        let _ = writeln!(out, "input_hash = \"sha256:{}\"", cfg.content_hash());
        for line in cfg.to_toml().lines() {
            // nest every section under the run entry
            match line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                Some(section) => {
                    let _ = writeln!(out, "[run.{section}]");
                }
                None => {
                    let _ = writeln!(out, "{line}");
                }
            }
        }
    }
    out
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_outputs(configs: &[&ScenarioConfig], rows: &[ResultRow], output: &Path) -> Result<()> {
    write_file(output, &render_csv(rows))?;
    write_file(&manifest_path(output), &render_manifest(configs, rows.len()))
}

/// Runs the sweep and writes `output` (CSV) plus its manifest.
pub fn run_scenario(cfg: &ScenarioConfig, output: &Path) -> Result<Vec<ResultRow>> {
    let rows = simulate(cfg)?;
    write_outputs(&[cfg], &rows, output)?;
    Ok(rows)
}

/// Parameters that [`sweep`] can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    DeltaD,
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delta_d" => Ok(SweepParam::DeltaD),
            other => Err(Error::ConfigField {
                field: "param".into(),
                reason: format!("cannot sweep `{other}` (supported: delta_d)"),
            }),
        }
    }
}

/// Runs the scenario once per value of `param` and concatenates the rows.
/// Sweeping `delta_d` switches the channel to the doubly-selective family.
pub fn sweep(
    cfg: &ScenarioConfig,
    param: SweepParam,
    values: &[f64],
    output: Option<&Path>,
) -> Result<Vec<ResultRow>> {
    if values.is_empty() {
        return Err(Error::ConfigField {
            field: "values".into(),
            reason: "no sweep values given".into(),
        });
    }
    let configs: Vec<ScenarioConfig> = values
        .iter()
        .map(|&v| {
            let mut c = cfg.clone();
            match param {
                SweepParam::DeltaD => {
                    c.channel.kind = ChannelKind::DoublySelective;
                    c.channel.delta_d = v;
                }
            }
            c.validate().map(|_| c)
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for c in &configs {
        rows.extend(simulate(c)?);
    }
    if let Some(path) = output {
        let refs: Vec<&ScenarioConfig> = configs.iter().collect();
        write_outputs(&refs, &rows, path)?;
    }
    Ok(rows)
}

/// Process exit status for an error: 1 for configuration problems, 2 for
/// everything else.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::ConfigField { .. }
        | Error::ConfigParse(_)
        | Error::InvalidConfig(_)
        | Error::InvalidScenario(_)
        | Error::InvalidOptions(_) => 1,
        _ => 2,
    }
}
