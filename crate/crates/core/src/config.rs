//! Runtime configuration: precision, tolerances, brute-force caps, gadget
//! constants and the RNG seed. Values load from a TOML file (pointed to by
//! `DIVISIKIT_CONFIG`) and individual fields can be overridden by CLI flags.

use crate::divisibility::EpsOptions;
use crate::nptools::{GadgetParams, OracleOptions};
use crate::rational::{parse_rational, ratio, Rational};
use crate::roots::RootOptions;
use crate::satembed::EmbeddingParams;
use num::traits::Signed;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Toml(String),
    #[error("bad rational in config field {field}")]
    BadRational { field: &'static str },
    #[error("field {field} must be positive")]
    NotPositive { field: &'static str },
}

#[derive(Debug, Clone)]
pub struct Config {
    /// Dyadic working precision for numeric refinement and root finding.
    pub precision_bits: u32,
    /// Default acceptance tolerance for numeric verifications.
    pub tol: Rational,
    /// Brute-force subset/assignment caps.
    pub brute_cap: usize,
    pub sat_branch_cap: usize,
    /// Interval-search budgets for the margin divisibility decider.
    pub eps_max_depth: u32,
    pub eps_max_nodes: u32,
    /// Gadget constants.
    pub gadget_delta_coeff: Rational,
    pub gadget_verify_cap: usize,
    pub sat_n_scale: u32,
    pub sat_m_scale: u32,
    pub sat_delta_factor: u32,
    pub sat_nd_factor: u32,
    pub sing_c: Rational,
    /// Target of a * max(M) in the stochastic lift; must stay below 43/81.
    pub lift_a_times_max: Rational,
    /// RNG seed for every randomized sweep.
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            precision_bits: 128,
            tol: ratio(1, 1_000_000_000),
            brute_cap: 24,
            sat_branch_cap: 1024,
            eps_max_depth: 20,
            eps_max_nodes: 4_000,
            gadget_delta_coeff: ratio(1, 4),
            gadget_verify_cap: 12,
            sat_n_scale: 100,
            sat_m_scale: 100,
            sat_delta_factor: 100,
            sat_nd_factor: 10,
            sing_c: ratio(1000, 1),
            lift_a_times_max: ratio(1, 2),
            seed: 0,
        }
    }
}

/// Raw TOML shape; every field optional, merged over the defaults.
#[derive(Debug, Default, Deserialize)]
struct RawConfig {
    precision_bits: Option<u32>,
    tol: Option<String>,
    brute_cap: Option<usize>,
    sat_branch_cap: Option<usize>,
    eps_max_depth: Option<u32>,
    eps_max_nodes: Option<u32>,
    gadget_delta_coeff: Option<String>,
    gadget_verify_cap: Option<usize>,
    sat_n_scale: Option<u32>,
    sat_m_scale: Option<u32>,
    sat_delta_factor: Option<u32>,
    sat_nd_factor: Option<u32>,
    sing_c: Option<String>,
    lift_a_times_max: Option<String>,
    seed: Option<u64>,
}

fn merge_rational(
    slot: &mut Rational,
    raw: Option<String>,
    field: &'static str,
) -> Result<(), ConfigError> {
    if let Some(s) = raw {
        let v = parse_rational(&s).map_err(|_| ConfigError::BadRational { field })?;
        if !v.is_positive() {
            return Err(ConfigError::NotPositive { field });
        }
        *slot = v;
    }
    Ok(())
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Config, ConfigError> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| ConfigError::Toml(e.to_string()))?;
        let mut cfg = Config::default();
        macro_rules! merge {
            ($($field:ident),*) => {
                $(if let Some(v) = raw.$field { cfg.$field = v; })*
            };
        }
        merge!(
            precision_bits,
            brute_cap,
            sat_branch_cap,
            eps_max_depth,
            eps_max_nodes,
            gadget_verify_cap,
            sat_n_scale,
            sat_m_scale,
            sat_delta_factor,
            sat_nd_factor,
            seed
        );
        merge_rational(&mut cfg.tol, raw.tol, "tol")?;
        merge_rational(
            &mut cfg.gadget_delta_coeff,
            raw.gadget_delta_coeff,
            "gadget_delta_coeff",
        )?;
        merge_rational(&mut cfg.sing_c, raw.sing_c, "sing_c")?;
        merge_rational(
            &mut cfg.lift_a_times_max,
            raw.lift_a_times_max,
            "lift_a_times_max",
        )?;
        Ok(cfg)
    }

    /// Loads the file named by `DIVISIKIT_CONFIG`, or the defaults.
    pub fn load_env() -> Result<Config, ConfigError> {
        match std::env::var("DIVISIKIT_CONFIG") {
            Ok(path) => {
                let text = std::fs::read_to_string(&path)
                    .map_err(|source| ConfigError::Io { path, source })?;
                Config::from_toml_str(&text)
            }
            Err(_) => Ok(Config::default()),
        }
    }

    pub fn root_options(&self) -> RootOptions {
        RootOptions {
            tol: self.tol.clone(),
            precision_bits: self.precision_bits,
            ..RootOptions::default()
        }
    }

    pub fn eps_options(&self) -> EpsOptions {
        EpsOptions {
            max_depth: self.eps_max_depth,
            max_nodes: self.eps_max_nodes,
            ..EpsOptions::default()
        }
    }

    pub fn oracle_options(&self) -> OracleOptions {
        OracleOptions {
            cap: self.brute_cap,
            ..OracleOptions::default()
        }
    }

    pub fn gadget_params(&self) -> GadgetParams {
        GadgetParams {
            delta_coeff: self.gadget_delta_coeff.clone(),
            verify_cap: self.gadget_verify_cap,
            ..GadgetParams::default()
        }
    }

    pub fn embedding_params(&self) -> EmbeddingParams {
        EmbeddingParams {
            n_scale: self.sat_n_scale,
            m_scale: self.sat_m_scale,
            delta_factor: self.sat_delta_factor,
            nd_factor: self.sat_nd_factor,
            sing_c: self.sing_c.clone(),
            branch_cap: self.sat_branch_cap,
            ..EmbeddingParams::default()
        }
    }
}
