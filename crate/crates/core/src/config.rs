//! Flat `key = value` configuration files and run manifests.
//!
//! Blank lines and `#` comments are ignored. Keys are the parameter names
//! of [`FseParams`] and [`MotionParams`] plus the run-level keys of
//! [`RunConfig`]; unknown keys are rejected.

use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fse::FseParams;
use crate::motion::MotionParams;

pub const DEFAULT_MARGIN: usize = 4;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_N_SUPPORT: usize = 2;

/// Parameters shared by every command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub fse: FseParams,
    pub motion: MotionParams,
    pub margin: usize,
    pub seed: u64,
    pub n_support: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            fse: FseParams::default(),
            motion: MotionParams::default(),
            margin: DEFAULT_MARGIN,
            seed: DEFAULT_SEED,
            n_support: DEFAULT_N_SUPPORT,
        }
    }
}

pub const KEYS: &[&str] = &[
    "block_size",
    "border_width",
    "dft_size",
    "iterations",
    "decay_rho",
    "odc_gamma",
    "recon_weight_delta",
    "window_size",
    "search_range",
    "margin",
    "seed",
    "n_support",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("invalid value {value:?} for {key}")))
}

/// Splits config text into ordered `(key, value)` pairs.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Format {
            what: "config",
            reason: format!("line {}: expected `key = value`, got {raw:?}", i + 1),
        })?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "block_size" => self.fse.block_size = parse_value(key, value)?,
            "border_width" => self.fse.border_width = parse_value(key, value)?,
            "dft_size" => self.fse.dft_size = parse_value(key, value)?,
            "iterations" => self.fse.iterations = parse_value(key, value)?,
            "decay_rho" => self.fse.decay_rho = parse_value(key, value)?,
            "odc_gamma" => self.fse.odc_gamma = parse_value(key, value)?,
            "recon_weight_delta" => self.fse.recon_weight_delta = parse_value(key, value)?,
            "window_size" => self.motion.window_size = parse_value(key, value)?,
            "search_range" => self.motion.search_range = parse_value(key, value)?,
            "margin" => self.margin = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "n_support" => self.n_support = parse_value(key, value)?,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown config key {other:?}"
                )));
            }
        }
        Ok(())
    }

    /// Defaults overridden by the pairs in `text`, then validated.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, v) in parse_pairs(text)? {
            cfg.set(&k, &v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingInput(path.to_path_buf()));
        }
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.fse.validate()?;
        self.motion.validate()
    }

    /// Every key with its current value, in [`KEYS`] order.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let f = &self.fse;
        let values: [String; 12] = [
            f.block_size.to_string(),
            f.border_width.to_string(),
            f.dft_size.to_string(),
            f.iterations.to_string(),
            f.decay_rho.to_string(),
            f.odc_gamma.to_string(),
            f.recon_weight_delta.to_string(),
            self.motion.window_size.to_string(),
            self.motion.search_range.to_string(),
            self.margin.to_string(),
            self.seed.to_string(),
            self.n_support.to_string(),
        ];
        KEYS.iter().copied().zip(values).collect()
    }
}

/// Ordered key-value record written next to every command's outputs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut m = Self::default();
        m.push("command", command);
        m.push("version", env!("CARGO_PKG_VERSION"));
        m
    }

    pub fn push(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn with_config(&mut self, cfg: &RunConfig) -> &mut Self {
        for (k, v) in cfg.pairs() {
            self.push(k, v);
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(Self {
            entries: parse_pairs(text)?,
        })
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (k, v) in &self.entries {
            writeln!(w, "{k} = {v}")?;
        }
        Ok(())
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        fs::write(path, buf).map_err(|e| Error::io(path, e))
    }
}
