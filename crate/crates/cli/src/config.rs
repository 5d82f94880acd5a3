//! Layering of command-line flags over a flat TOML config file, and the two
//! failure classes that map to exit codes.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const OUT_DIR_ENV: &str = "PYPTAIL_OUT_DIR";

/// Bad arguments or configuration (exit 2) versus a failure while running (exit 1).
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(e) | Failure::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<pyptail::Error> for Failure {
    fn from(e: pyptail::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

pub trait UsageExt<T> {
    /// Classify an error as a usage error.
    fn usage(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> UsageExt<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }
}

pub fn usage(msg: impl fmt::Display) -> Failure {
    Failure::Usage(anyhow::anyhow!("{msg}"))
}

/// Flags every command accepts.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize, PartialEq)]
pub struct Common {
    /// Seed for every random draw of the command.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Flat TOML file of option values; flags given on the command line win.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Output directory (default: $PYPTAIL_OUT_DIR, then the working directory).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

impl Common {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

/// Merge `flags` over the config file at `path`. The config may only use
/// keys the command knows; values given as flags replace config values.
pub fn layer<T: Serialize + DeserializeOwned>(flags: T, path: Option<&Path>) -> Result<T, Failure> {
    let Some(path) = path else {
        return Ok(flags);
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("reading config {}: {e}", path.display())))?;
    let table: toml::Table =
        toml::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))?;
    let Value::Object(given) = serde_json::to_value(&flags).usage()? else {
        unreachable!("option structs serialize to objects")
    };
    let mut merged = serde_json::Map::new();
    for (key, value) in table {
        if !given.contains_key(&key) {
            return Err(usage(format!("config {}: unknown key {key:?}", path.display())));
        }
        merged.insert(key, serde_json::to_value(value).usage()?);
    }
    for (key, value) in given {
        if !value.is_null() {
            merged.insert(key, value);
        }
    }
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| usage(format!("config {}: {e}", path.display())))
}

/// Split "name:a,b" into the name and its numeric arguments.
pub fn parse_call(s: &str) -> Result<(String, Vec<f64>), Failure> {
    let (name, args) = s.split_once(':').unwrap_or((s, ""));
    let args = args
        .split(',')
        .filter(|a| !a.trim().is_empty())
        .map(|a| a.trim().parse::<f64>().map_err(|_| usage(format!("bad number {a:?} in {s:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((name.trim().to_ascii_lowercase(), args))
}
