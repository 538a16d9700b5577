//! Run configuration files. Every key of `SimConfig` must be present; the
//! `defaults` subcommand prints a complete file to start from.

use std::path::Path;

use dxsim_core::SimConfig;
use thiserror::Error;
use toml::{Table, Value};

pub const SEED_ENV: &str = "DX_SIM_SEED";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Syntax(#[from] toml::de::Error),
    #[error("missing config key `{0}`")]
    Missing(String),
    #[error("unknown config key `{0}`")]
    Unknown(String),
    #[error("{SEED_ENV}={0} is not an unsigned integer")]
    BadSeed(String),
}

fn compare(have: &Table, want: &Table, prefix: &str) -> Result<(), ConfigError> {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    for (k, w) in want {
        match (have.get(k), w) {
            (None, _) => return Err(ConfigError::Missing(key(k))),
            (Some(Value::Table(h)), Value::Table(w)) => compare(h, w, &key(k))?,
            _ => {}
        }
    }
    if let Some(k) = have.keys().find(|k| !want.contains_key(*k)) {
        return Err(ConfigError::Unknown(key(k)));
    }
    Ok(())
}

/// Parses configuration text. Keys are checked against the full schema before
/// values are converted, so a missing key is reported by its dotted name.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let have: Table = toml::from_str(text)?;
    let want = Table::try_from(SimConfig::default()).expect("config serialises to a table");
    compare(&have, &want, "")?;
    Ok(toml::from_str(text)?)
}

/// Loads a configuration file and applies the seed override from the
/// environment.
pub fn load_config(path: &Path) -> Result<SimConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut cfg = parse_config(&text)?;
    apply_seed_override(&mut cfg, std::env::var(SEED_ENV).ok().as_deref())?;
    Ok(cfg)
}

pub fn apply_seed_override(cfg: &mut SimConfig, value: Option<&str>) -> Result<(), ConfigError> {
    if let Some(v) = value {
        cfg.seed = v
            .trim()
            .parse()
            .map_err(|_| ConfigError::BadSeed(v.to_string()))?;
    }
    Ok(())
}

/// The default configuration as a complete, commented file.
pub fn default_config_text() -> String {
    let body = toml::to_string(&SimConfig::default()).expect("config serialises");
    format!(
        "# dxsim run configuration. Every key is required.\n\
         # DRAM times are in picoseconds; accelerator and core delays are in\n\
         # accelerator cycles. The mapping lists address fields from the least\n\
         # significant (just above the line offset) to the most significant.\n\
         # {SEED_ENV} in the environment overrides `seed`.\n\n{body}"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = parse_config(&default_config_text()).unwrap();
        assert_eq!(cfg, SimConfig::default());
        assert!(default_config_text().contains("mapping = \"ch,bg,ba,ra,co,ro\""));
    }

    #[test]
    fn missing_key_is_named() {
        let text = default_config_text().replace("trcd = 12500\n", "");
        match parse_config(&text) {
            Err(ConfigError::Missing(k)) => assert_eq!(k, "dram.trcd"),
            other => panic!("{other:?}"),
        }
        let text = default_config_text().replace("seed = 1\n", "");
        assert_eq!(
            parse_config(&text).unwrap_err().to_string(),
            "missing config key `seed`"
        );
    }

    #[test]
    fn unknown_key_is_named() {
        let text = default_config_text().replace("[llc]\n", "[llc]\nsize_mb = 8\n");
        assert_eq!(
            parse_config(&text).unwrap_err().to_string(),
            "unknown config key `llc.size_mb`"
        );
    }

    #[test]
    fn bad_values_are_rejected() {
        let text = default_config_text().replace("\"ch,bg,ba,ra,co,ro\"", "\"ch,bg,ba\"");
        assert!(parse_config(&text).is_err());
        let text =
            default_config_text().replace("drain_policy = \"slice\"", "drain_policy = \"bank\"");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn seed_override() {
        let mut cfg = SimConfig::default();
        apply_seed_override(&mut cfg, Some("77")).unwrap();
        assert_eq!(cfg.seed, 77);
        apply_seed_override(&mut cfg, None).unwrap();
        assert_eq!(cfg.seed, 77);
        assert!(apply_seed_override(&mut cfg, Some("x")).is_err());
    }
}
