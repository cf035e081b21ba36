//! TOML run configuration.
//!
//! Physical constants sit at the top level as flat keys; each subcommand may
//! have its own table (`[compton]`, `[boost-scan]`, ...). Unknown keys are
//! rejected. Command-line flags always win over the file.

use std::path::Path;

use clap::Args;
use qlambda_core::units::{charge_from_alpha, Constants};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

pub const SECTIONS: [&str; 5] = ["lambda-sim", "compton", "moller", "vacpol", "boost-scan"];

/// Overrides for the natural-unit defaults. `e` wins over `alpha` when both
/// are given.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsArgs {
    #[arg(long, global = true)]
    pub hbar: Option<f64>,
    #[arg(long, global = true)]
    pub c: Option<f64>,
    #[arg(long, global = true)]
    pub eps0: Option<f64>,
    #[arg(long, global = true)]
    pub e: Option<f64>,
    #[arg(long = "m-e", global = true)]
    pub m_e: Option<f64>,
    /// Mode volume.
    #[arg(long = "volume", global = true)]
    #[serde(rename = "V")]
    pub volume: Option<f64>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
}

impl ConstantsArgs {
    pub fn resolve(&self) -> Result<Constants, CliError> {
        let d = Constants::default();
        let e = match (self.e, self.alpha) {
            (Some(e), _) => e,
            (None, Some(alpha)) => {
                if !(alpha.is_finite() && alpha > 0.0) {
                    return Err(CliError::config(format!("alpha = {alpha} must be finite and positive")));
                }
                charge_from_alpha(alpha)
            }
            (None, None) => d.e,
        };
        let k = Constants {
            hbar: self.hbar.unwrap_or(d.hbar),
            c: self.c.unwrap_or(d.c),
            eps0: self.eps0.unwrap_or(d.eps0),
            e,
            m_e: self.m_e.unwrap_or(d.m_e),
            volume: self.volume.unwrap_or(d.volume),
        };
        k.validate().map_err(|err| CliError::config(err.to_string()))?;
        Ok(k)
    }
}

/// A parsed config file split into the constants and one command table.
#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    pub constants: ConstantsArgs,
    pub section: Option<Value>,
}

impl FileConfig {
    pub fn load(path: &Path, section: &str) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|err| CliError::config(format!("{}: {err}", path.display())))?;
        Self::parse(&text, section).map_err(|err| err.located(path.display()))
    }

    pub fn parse(text: &str, section: &str) -> Result<Self, CliError> {
        let mut table: toml::Table =
            text.parse().map_err(|err: toml::de::Error| CliError::config(err.message().to_string()))?;
        let mut picked = None;
        for name in SECTIONS {
            if let Some(value) = table.remove(name) {
                if !value.is_table() {
                    return Err(CliError::config(format!("`{name}` must be a table")));
                }
                if name == section {
                    picked = Some(serde_json::to_value(value).map_err(|err| CliError::config(err.to_string()))?);
                }
            }
        }
        let constants = from_toml(toml::Value::Table(table))?;
        Ok(FileConfig { constants, section: picked })
    }
}

fn from_toml<T: DeserializeOwned>(value: toml::Value) -> Result<T, CliError> {
    serde_path_to_error::deserialize(value).map_err(path_error)
}

/// A deserialization error that names the offending key.
pub(crate) fn path_error<E: std::fmt::Display>(err: serde_path_to_error::Error<E>) -> CliError {
    let path = err.path().to_string();
    CliError::config(format!("key `{path}`: {}", err.into_inner().to_string().trim_end()))
}

/// Overlays the flags that were given onto the file table and deserializes
/// the result, so a missing flag falls back to the file and then to the
/// type's own default.
pub fn merge<T: Serialize + DeserializeOwned>(flags: &T, file: Option<&Value>) -> Result<T, CliError> {
    let mut merged = file.cloned().unwrap_or_else(|| Value::Object(Default::default()));
    let Value::Object(over) = serde_json::to_value(flags).map_err(|err| CliError::config(err.to_string()))? else {
        return Err(CliError::config("command options must form a table"));
    };
    let Value::Object(base) = &mut merged else {
        return Err(CliError::config("command section must be a table"));
    };
    for (key, value) in over {
        if !value.is_null() {
            base.insert(key, value);
        }
    }
    serde_path_to_error::deserialize(merged).map_err(path_error)
}

/// Constants: flags first, then the file, then the defaults.
pub fn merge_constants(flags: &ConstantsArgs, file: &ConstantsArgs) -> Result<Constants, CliError> {
    let merged = ConstantsArgs {
        hbar: flags.hbar.or(file.hbar),
        c: flags.c.or(file.c),
        eps0: flags.eps0.or(file.eps0),
        e: flags.e.or(file.e),
        m_e: flags.m_e.or(file.m_e),
        volume: flags.volume.or(file.volume),
        alpha: flags.alpha.or(file.alpha),
    };
    // a charge given on the command line beats an alpha from the file and vice versa
    let merged = match (flags.e, flags.alpha) {
        (None, Some(_)) => ConstantsArgs { e: None, ..merged },
        _ => merged,
    };
    merged.resolve()
}
