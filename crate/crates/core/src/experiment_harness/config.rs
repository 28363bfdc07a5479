//! Scenario configuration files.
//!
//! The format is TOML restricted to dotted keys, one setting per line:
//!
//! ```toml
//! ofdm.n_subcarriers = 35
//! ofdm.cp_len = 9
//! ofdm.scs_hz = 60000.0
//!
//! channel.kind = "doubly_selective"   # flat | frequency_selective | doubly_selective
//! channel.num_taps = 8
//! channel.pdp_decay = 0.5
//! channel.delta_d = 0.1
//! channel.user_gain_db = [-6.0, 0.0]  # one entry per user
//! channel.fixed_gain = false
//!
//! experiment.schemes = ["ofdma_equal", "ofdma_waterfill", "noma", "rsma", "single_user_ofdm"]
//! experiment.snr_db = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]
//! experiment.realizations = 50
//! experiment.seed = 1
//!
//! optimizer.max_iters = 200
//! optimizer.rel_tol = 1e-4
//! optimizer.num_starts = 4
//! optimizer.min_rates = [0.0, 0.0]
//! optimizer.noma_rate_model = "sic_decodable"  # or "own_receiver"
//! ```
//!
//! Every key is optional; missing keys take the defaults shown above (flat
//! channels default to one tap and no Doppler).

use serde::{Deserialize, Serialize};

use super::{ScenarioConfig, SchemeKind};
use crate::allocation_optimizers::OptimizerOptions;
use crate::link_analysis::NomaRateModel;
use crate::ltv_channel::{ChannelKind, ChannelScenario};
use crate::ofdm_frame::OfdmConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub(super) struct ConfigFile {
    ofdm: OfdmSection,
    channel: ChannelSection,
    experiment: ExperimentSection,
    optimizer: OptimizerSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct OfdmSection {
    n_subcarriers: usize,
    cp_len: usize,
    scs_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ChannelSection {
    kind: String,
    num_taps: Option<usize>,
    pdp_decay: f64,
    delta_d: f64,
    user_gain_db: Vec<f64>,
    fixed_gain: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ExperimentSection {
    schemes: Vec<String>,
    snr_db: Vec<f64>,
    realizations: usize,
    seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct OptimizerSection {
    max_iters: usize,
    rel_tol: f64,
    num_starts: usize,
    min_rates: Vec<f64>,
    noma_rate_model: String,
}

impl Default for OfdmSection {
    fn default() -> Self {
        Self {
            n_subcarriers: 35,
            cp_len: 9,
            scs_hz: 60e3,
        }
    }
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            kind: ChannelKind::DoublySelective.name().into(),
            num_taps: None,
            pdp_decay: 0.5,
            delta_d: 0.0,
            user_gain_db: vec![-6.0, 0.0],
            fixed_gain: false,
        }
    }
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            schemes: SchemeKind::ALL.iter().map(|s| s.name().to_string()).collect(),
            snr_db: (0..=6).map(|i| 5.0 * i as f64).collect(),
            realizations: 50,
            seed: 1,
        }
    }
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let d = OptimizerOptions::default();
        Self {
            max_iters: d.max_iters,
            rel_tol: d.rel_tol,
            num_starts: d.num_starts,
            min_rates: Vec::new(),
            noma_rate_model: noma_model_name(NomaRateModel::default()).into(),
        }
    }
}

impl Default for ConfigFile {
    fn default() -> Self {
        Self {
            ofdm: OfdmSection::default(),
            channel: ChannelSection::default(),
            experiment: ExperimentSection::default(),
            optimizer: OptimizerSection::default(),
        }
    }
}

pub(super) fn noma_model_name(model: NomaRateModel) -> &'static str {
    match model {
        NomaRateModel::SicDecodable => "sic_decodable",
        NomaRateModel::OwnReceiver => "own_receiver",
    }
}

fn field(name: &str, reason: impl ToString) -> Error {
    Error::ConfigField {
        field: name.into(),
        reason: reason.to_string(),
    }
}

impl ConfigFile {
    pub(super) fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    pub(super) fn into_scenario(self) -> Result<ScenarioConfig> {
        let o = &self.ofdm;
        let ofdm = OfdmConfig::new(o.n_subcarriers, o.cp_len, o.scs_hz).map_err(|e| match e {
            Error::InvalidConfig(msg) => field("ofdm", msg),
            other => other,
        })?;

        let c = &self.channel;
        let kind: ChannelKind = c.kind.parse().map_err(|e: Error| field("channel.kind", e))?;
        let num_taps = match (kind, c.num_taps) {
            (_, Some(l)) => l,
            (ChannelKind::Flat, None) => 1,
            (_, None) => 8,
        };
        let channel = ChannelScenario {
            kind,
            num_taps,
            pdp_decay: if kind == ChannelKind::Flat { 0.0 } else { c.pdp_decay },
            delta_d: c.delta_d,
            fixed_gain: c.fixed_gain,
        };

        let e = &self.experiment;
        let schemes = e
            .schemes
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<SchemeKind>>>()
            .map_err(|err| field("experiment.schemes", err))?;

        let p = &self.optimizer;
        let noma_model = match p.noma_rate_model.as_str() {
            "sic_decodable" => NomaRateModel::SicDecodable,
            "own_receiver" => NomaRateModel::OwnReceiver,
            other => {
                return Err(field(
                    "optimizer.noma_rate_model",
                    format!("unknown model `{other}` (expected sic_decodable or own_receiver)"),
                ))
            }
        };
        let optimizer = OptimizerOptions {
            max_iters: p.max_iters,
            rel_tol: p.rel_tol,
            num_starts: p.num_starts,
            min_rates: p.min_rates.clone(),
            ..OptimizerOptions::default()
        };

        let cfg = ScenarioConfig {
            ofdm,
            channel,
            user_gain_db: c.user_gain_db.clone(),
            schemes,
            snr_grid_db: e.snr_db.clone(),
            realizations: e.realizations,
            seed: e.seed,
            optimizer,
            noma_model,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub(super) fn from_scenario(cfg: &ScenarioConfig) -> Self {
        Self {
            ofdm: OfdmSection {
                n_subcarriers: cfg.ofdm.n_subcarriers(),
                cp_len: cfg.ofdm.cp_len(),
                scs_hz: cfg.ofdm.scs_hz(),
            },
            channel: ChannelSection {
                kind: cfg.channel.kind.name().into(),
                num_taps: Some(cfg.channel.num_taps),
                pdp_decay: cfg.channel.pdp_decay,
                delta_d: cfg.channel.delta_d,
                user_gain_db: cfg.user_gain_db.clone(),
                fixed_gain: cfg.channel.fixed_gain,
            },
            experiment: ExperimentSection {
                schemes: cfg.schemes.iter().map(|s| s.name().into()).collect(),
                snr_db: cfg.snr_grid_db.clone(),
                realizations: cfg.realizations,
                seed: cfg.seed,
            },
            optimizer: OptimizerSection {
                max_iters: cfg.optimizer.max_iters,
                rel_tol: cfg.optimizer.rel_tol,
                num_starts: cfg.optimizer.num_starts,
                min_rates: cfg.optimizer.min_rates.clone(),
                noma_rate_model: noma_model_name(cfg.noma_model).into(),
            },
        }
    }

    pub(super) fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
