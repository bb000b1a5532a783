//! Experiment configuration: a TOML document with unknown keys rejected.
//!
//! ```toml
//! scheme = ["gsvd", "bd_mmse"]   # or a single string
//! c = 4                          # transmit antennas
//! g = 3                          # receive antennas per user
//! snr_db = "0:5:30"              # or a list of numbers
//! frames = 40                    # frames per SNR point
//! seed = 1
//! csi_rho = 1.0                  # optional, scalar or list
//! max_retries = 8                # optional
//!
//! [frame]
//! m = 16
//! n = 8
//! delta_f = 15000.0
//! fc = 4.0e9
//!
//! [channel]
//! delays = [0, 1, 2]
//! powers_db = [0.0, -1.5, -1.4]
//! delay_unit = "bins"            # optional, or "seconds"
//! v_max_kmh = 500.0
//! doppler_model = "jakes"        # optional, or "uniform"
//! ```

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize};

use crate::channel::PathProfile;
use crate::error::{Error, Result};
use crate::frame::FrameParams;
use crate::precode::Scheme;

fn default_csi_rho() -> Vec<f64> {
    vec![1.0]
}

fn default_max_retries() -> usize {
    8
}

/// Validated description of one Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "scheme", deserialize_with = "one_or_many")]
    pub schemes: Vec<Scheme>,
    pub c: usize,
    pub g: usize,
    #[serde(deserialize_with = "snr_list")]
    pub snr_db: Vec<f64>,
    pub frames: usize,
    pub seed: u64,
    #[serde(default = "default_csi_rho", deserialize_with = "one_or_many")]
    pub csi_rho: Vec<f64>,
    /// Channel redraws allowed per frame when a realization is degenerate.
    #[serde(default = "default_max_retries")]
    pub max_retries: usize,
    pub frame: FrameParams,
    pub channel: PathProfile,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

fn one_or_many<'de, D, T>(d: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(v) => v,
    })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SnrSpec {
    Range(String),
    List(Vec<f64>),
}

fn snr_list<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    match SnrSpec::deserialize(d)? {
        SnrSpec::List(v) => Ok(v),
        SnrSpec::Range(s) => parse_snr_range(&s).map_err(de::Error::custom),
    }
}

/// Expands `"a:step:b"` into `a, a+step, ...` up to and including `b`.
pub fn parse_snr_range(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let bad = || Error::Config(format!("snr_db: expected \"start:step:stop\", got {text:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (a, step, b) = (nums[0], nums[1], nums[2]);
    if !(a.is_finite() && b.is_finite() && step.is_finite()) || step <= 0.0 || b < a {
        return Err(Error::Config(format!(
            "snr_db: range {text:?} needs a positive step and start <= stop"
        )));
    }
    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
    if count > 10_000 {
        return Err(Error::Config(format!("snr_db: range {text:?} has too many points")));
    }
    Ok((0..count).map(|i| a + i as f64 * step).collect())
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Reads and parses a configuration file.
pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(Error::Config("scheme: at least one scheme is required".into()));
        }
        for (i, s) in self.schemes.iter().enumerate() {
            if self.schemes[..i].contains(s) {
                return Err(Error::Config(format!("scheme: {s} listed twice")));
            }
        }
        if self.c == 0 || self.g == 0 {
            return Err(Error::Config(format!(
                "c, g: antenna counts must be positive, got c={}, g={}",
                self.c, self.g
            )));
        }
        for s in &self.schemes {
            s.check_antennas(self.c, self.g)?;
        }
        if self.frames == 0 {
            return Err(Error::Config("frames: must be at least 1".into()));
        }
        if self.snr_db.is_empty() {
            return Err(Error::Config("snr_db: must not be empty".into()));
        }
        if let Some(x) = self.snr_db.iter().find(|x| !x.is_finite()) {
            return Err(Error::Config(format!("snr_db: {x} is not finite")));
        }
        if self.csi_rho.is_empty() {
            return Err(Error::Config("csi_rho: must not be empty".into()));
        }
        if let Some(r) = self.csi_rho.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::Config(format!("csi_rho: must lie in [0, 1], got {r}")));
        }
        self.frame.validate().map_err(|e| Error::Config(format!("frame: {e}")))?;
        self.channel.validate()?;
        self.channel.delay_bins(&self.frame)?;
        self.channel
            .max_normalized_doppler(&self.frame)
            .map_err(|e| Error::Config(format!("channel: {e}")))?;
        Ok(())
    }

    /// TOML text that parses back to an equal configuration.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize configuration: {e}")))
    }
}
