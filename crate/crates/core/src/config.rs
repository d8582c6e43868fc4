//! Experiment configuration read from TOML, with defaults and validation.

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::modulation::{ModulationFormat, ModulationSet};
use crate::network::NetworkConfig;
use crate::schemes::SchemeParams;
use crate::simulator::{DEFAULT_MEAN_HOLDING_S, DEFAULT_REQUESTS};

/// Configuration as written by the user. Every field is optional; signed
/// types let negative values be reported instead of failing to parse.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub slots_per_link: Option<i64>,
    pub guard_slots: Option<i64>,
    pub rsa_k: Option<i64>,
    pub max_k: Option<i64>,
    pub max_bvt_slots: Option<i64>,
    pub modulations: Option<Vec<String>>,
    pub requests: Option<i64>,
    pub mean_holding_s: Option<f64>,
    pub amms_mhc: Option<i64>,
    pub reps: Option<i64>,
    pub warmup_requests: Option<i64>,
    pub seed: Option<u64>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, SimError> {
        toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub network: NetworkConfig,
    pub requests: usize,
    pub mean_holding_s: f64,
    pub params: SchemeParams,
    pub reps: usize,
    pub warmup_requests: usize,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        validate_config(&RawConfig::default()).expect("defaults are valid")
    }
}

fn count(name: &str, v: Option<i64>, default: usize, min: i64) -> Result<usize, SimError> {
    match v {
        None => Ok(default),
        Some(x) if x >= min => usize::try_from(x).map_err(|_| SimError::Config(format!("{name} = {x} is too large"))),
        Some(x) => Err(SimError::Config(format!("{name} must be at least {min}, got {x}"))),
    }
}

/// Fills defaults and checks ranges.
pub fn validate_config(raw: &RawConfig) -> Result<Config, SimError> {
    let d = NetworkConfig::default();
    let modulations = match &raw.modulations {
        None => d.modulations.clone(),
        Some(names) => {
            let formats = names
                .iter()
                .map(|n| n.parse::<ModulationFormat>())
                .collect::<Result<Vec<_>, _>>()?;
            ModulationSet::new(formats)?
        }
    };
    let network = NetworkConfig {
        slots_per_link: count("slots_per_link", raw.slots_per_link, d.slots_per_link, 1)?,
        guard_slots: count("guard_slots", raw.guard_slots, d.guard_slots, 0)?,
        rsa_k: count("rsa_k", raw.rsa_k, d.rsa_k, 1)?,
        max_k: count("max_k", raw.max_k, d.max_k, 1)?,
        max_bvt_slots: count("max_bvt_slots", raw.max_bvt_slots, d.max_bvt_slots, 1)?,
        modulations,
    };
    if network.guard_slots >= network.slots_per_link {
        return Err(SimError::Config(format!(
            "guard_slots ({}) must be smaller than slots_per_link ({})",
            network.guard_slots, network.slots_per_link
        )));
    }
    let mean_holding_s = raw.mean_holding_s.unwrap_or(DEFAULT_MEAN_HOLDING_S);
    if !(mean_holding_s > 0.0 && mean_holding_s.is_finite()) {
        return Err(SimError::Config(format!("mean_holding_s must be positive, got {mean_holding_s}")));
    }
    Ok(Config {
        network,
        requests: count("requests", raw.requests, DEFAULT_REQUESTS, 1)?,
        mean_holding_s,
        params: SchemeParams {
            amms_mhc: count("amms_mhc", raw.amms_mhc, SchemeParams::default().amms_mhc, 1)?,
        },
        reps: count("reps", raw.reps, 5, 2)?,
        warmup_requests: count("warmup_requests", raw.warmup_requests, 0, 0)?,
        seed: raw.seed.unwrap_or(1),
    })
}
