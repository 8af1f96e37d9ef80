//! Versioned JSON configuration shared by every CLI subcommand.
//!
//! Unknown fields anywhere in the file are errors. Each subcommand reads
//! only the sections it needs and reports a missing one by name.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelDistribution, ChannelParams, ChannelSampler};
use crate::error::{Error, Result};
use crate::harness::{ExperimentConfig, QubitSource};
use crate::oracle::Fault;
use crate::protocols::Protocol;
use crate::report::serialize_f64;
use crate::state::Qubit;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    /// Worker threads; absent means all available cores. Never affects
    /// results, so it is left out of report echoes.
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubit: Option<QubitConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelConfig>,
    #[serde(default)]
    pub shot_sampling: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyConfig>,
}

/// `[re, im]` pair.
pub type ComplexPair = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum QubitConfig {
    Fixed {
        #[serde(serialize_with = "serialize_pair")]
        alpha: ComplexPair,
        #[serde(serialize_with = "serialize_pair")]
        beta: ComplexPair,
    },
    Haar,
}

fn serialize_pair<S: serde::Serializer>(pair: &ComplexPair, serializer: S) -> std::result::Result<S::Ok, S::Error> {
    use crate::report::Sig17;
    [Sig17(pair[0]), Sig17(pair[1])].serialize(serializer)
}

impl QubitConfig {
    pub fn to_source(&self) -> Result<QubitSource> {
        match *self {
            QubitConfig::Fixed { alpha, beta } => {
                let q = Qubit::new(Complex64::new(alpha[0], alpha[1]), Complex64::new(beta[0], beta[1]))
                    .map_err(|e| Error::config("qubit", e.to_string()))?;
                Ok(QubitSource::Fixed(q))
            }
            QubitConfig::Haar => Ok(QubitSource::Haar),
        }
    }
}

/// Channel sampler section. `seed` defaults to the top-level seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelConfig {
    Fixed {
        #[serde(serialize_with = "serialize_f64")]
        theta: f64,
        #[serde(serialize_with = "serialize_f64")]
        phi: f64,
        #[serde(serialize_with = "serialize_f64")]
        chi: f64,
    },
    UniformTheta {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    SmallTheta {
        #[serde(serialize_with = "serialize_f64")]
        theta_max: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

impl ChannelConfig {
    pub fn to_sampler(&self, default_seed: u64) -> Result<ChannelSampler> {
        let (distribution, seed) = match *self {
            ChannelConfig::Fixed { theta, phi, chi } => (ChannelDistribution::Fixed { theta, phi, chi }, None),
            ChannelConfig::UniformTheta { seed } => (ChannelDistribution::UniformTheta, seed),
            ChannelConfig::SmallTheta { theta_max, seed } => (ChannelDistribution::SmallTheta { theta_max }, seed),
        };
        ChannelSampler::new(distribution, seed.unwrap_or(default_seed)).map_err(|e| match e {
            Error::Config { field, reason } => Error::Config {
                field: if field.starts_with("channel") { field } else { format!("channel.{field}") },
                reason,
            },
            other => other,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_protocol")]
    pub protocol: Protocol,
    /// Explicit grid; mutually exclusive with start/stop/steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thetas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, serialize_with = "serialize_f64")]
    pub phi: f64,
    #[serde(default, serialize_with = "serialize_f64")]
    pub chi: f64,
}

fn default_protocol() -> Protocol {
    Protocol::Reject
}

impl SweepConfig {
    /// θ grid: the explicit list, or `steps` evenly spaced points from
    /// `theta_start` to `theta_stop` inclusive.
    pub fn grid(&self) -> Result<Vec<f64>> {
        let grid = match (&self.thetas, self.theta_start, self.theta_stop, self.steps) {
            (Some(list), None, None, None) => list.clone(),
            (None, Some(start), Some(stop), Some(steps)) => match steps {
                0 => Vec::new(),
                1 => vec![start],
                n => (0..n)
                    .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
                    .collect(),
            },
            (Some(_), _, _, _) => {
                return Err(Error::config(
                    "sweep.thetas",
                    "give either an explicit list or theta_start/theta_stop/steps, not both",
                ))
            }
            _ => {
                return Err(Error::config(
                    "sweep",
                    "needs either thetas or all of theta_start, theta_stop, steps",
                ))
            }
        };
        if grid.is_empty() {
            let field = if self.thetas.is_some() { "sweep.thetas" } else { "sweep.steps" };
            return Err(Error::config(field, "theta grid is empty"));
        }
        if let Some(bad) = grid.iter().find(|t| !t.is_finite()) {
            return Err(Error::config("sweep", format!("non-finite theta {bad}")));
        }
        ChannelParams::new(0.0, self.phi, self.chi).map_err(|e| Error::config("sweep", e.to_string()))?;
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub samples: u64,
    /// Corrupts the dense circuit; used to check that the gate fails.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<Fault>,
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ConfigFile = serde_json::from_str(text).map_err(|e| Error::config("config", e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", cfg.schema_version),
            ));
        }
        if cfg.threads == Some(0) {
            return Err(Error::config("threads", "must be >= 1"));
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config always serializes")
    }

    pub fn experiment(&self, protocol: Protocol) -> Result<ExperimentConfig> {
        let trials = self.trials.ok_or_else(|| Error::config("trials", "missing"))?;
        let qubit = self.qubit.ok_or_else(|| Error::config("qubit", "missing"))?.to_source()?;
        let channel = self
            .channel
            .ok_or_else(|| Error::config("channel", "missing"))?
            .to_sampler(self.seed)?;
        let cfg = ExperimentConfig {
            protocol,
            trials,
            qubit,
            channel,
            seed: self.seed,
            shot_sampling: self.shot_sampling,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn sweep_qubit(&self) -> Result<Qubit> {
        match self.qubit {
            Some(q @ QubitConfig::Fixed { .. }) => match q.to_source()? {
                QubitSource::Fixed(q) => Ok(q),
                QubitSource::Haar => unreachable!(),
            },
            Some(QubitConfig::Haar) => Err(Error::config("qubit", "sweep requires a fixed qubit")),
            None => Err(Error::config("qubit", "missing")),
        }
    }

    pub fn verify_section(&self) -> Result<&VerifyConfig> {
        let v = self.verify.as_ref().ok_or_else(|| Error::config("verify", "missing"))?;
        if v.samples == 0 {
            return Err(Error::config("verify.samples", "must be >= 1"));
        }
        Ok(v)
    }

    pub fn sweep_section(&self) -> Result<&SweepConfig> {
        self.sweep.as_ref().ok_or_else(|| Error::config("sweep", "missing"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"{
        "schema_version": 1,
        "seed": 11,
        "trials": 20,
        "threads": 2,
        "qubit": {"kind": "fixed", "alpha": [0.6, 0.0], "beta": [0.0, 0.8]},
        "channel": {"kind": "small_theta", "theta_max": 0.3},
        "sweep": {"protocol": "correct", "theta_start": 0.0, "theta_stop": 1.0, "steps": 3, "phi": 0.5},
        "verify": {"samples": 10}
    }"#;

    #[test]
    fn parses_full_config() {
        let cfg = ConfigFile::from_json(FULL).unwrap();
        assert_eq!(cfg.seed, 11);
        assert_eq!(cfg.threads, Some(2));
        let exp = cfg.experiment(Protocol::Reject).unwrap();
        assert_eq!(exp.trials, 20);
        assert_eq!(exp.channel.seed(), 11);
        assert_eq!(cfg.sweep_section().unwrap().grid().unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(cfg.sweep_section().unwrap().protocol, Protocol::Correct);
        assert_eq!(cfg.verify_section().unwrap().samples, 10);
    }

    #[test]
    fn echo_omits_threads_and_round_trips() {
        let cfg = ConfigFile::from_json(FULL).unwrap();
        let text = cfg.to_json();
        assert!(!text.contains("threads"));
        let back = ConfigFile::from_json(&text).unwrap();
        assert_eq!(back, ConfigFile { threads: None, ..cfg });
    }

    #[test]
    fn unknown_field_is_named() {
        let err = ConfigFile::from_json(r#"{"schema_version": 1, "trails": 5}"#).unwrap_err();
        assert!(err.to_string().contains("trails"), "{err}");
    }

    #[test]
    fn bad_schema_version() {
        let err = ConfigFile::from_json(r#"{"schema_version": 2}"#).unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "schema_version"));
    }

    #[test]
    fn missing_sections_are_named() {
        let cfg = ConfigFile::from_json(r#"{"schema_version": 1, "trials": 3}"#).unwrap();
        let err = cfg.experiment(Protocol::Reject).unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "qubit"));
        assert!(matches!(cfg.verify_section(), Err(Error::Config { ref field, .. }) if field == "verify"));
    }

    #[test]
    fn invalid_values_are_named() {
        let cfg = ConfigFile::from_json(
            r#"{"schema_version": 1, "trials": 0, "qubit": {"kind": "haar"}, "channel": {"kind": "uniform_theta"}}"#,
        )
        .unwrap();
        assert!(matches!(cfg.experiment(Protocol::Reject), Err(Error::Config { ref field, .. }) if field == "trials"));

        let cfg = ConfigFile::from_json(
            r#"{"schema_version": 1, "trials": 1, "qubit": {"kind": "fixed", "alpha": [1, 0], "beta": [1, 0]}, "channel": {"kind": "uniform_theta"}}"#,
        )
        .unwrap();
        assert!(matches!(cfg.experiment(Protocol::Reject), Err(Error::Config { ref field, .. }) if field == "qubit"));

        let cfg = ConfigFile::from_json(
            r#"{"schema_version": 1, "trials": 1, "qubit": {"kind": "haar"}, "channel": {"kind": "small_theta", "theta_max": 3.0}}"#,
        )
        .unwrap();
        assert!(
            matches!(cfg.experiment(Protocol::Reject), Err(Error::Config { ref field, .. }) if field == "channel.theta_max")
        );

        let cfg = ConfigFile::from_json(r#"{"schema_version": 1, "verify": {"samples": 0}}"#).unwrap();
        assert!(matches!(cfg.verify_section(), Err(Error::Config { ref field, .. }) if field == "verify.samples"));
    }

    #[test]
    fn sweep_grids() {
        let sweep = |json: &str| -> SweepConfig { serde_json::from_str(json).unwrap() };
        assert!(matches!(
            sweep(r#"{"theta_start": 0.0, "theta_stop": 1.0, "steps": 0}"#).grid(),
            Err(Error::Config { ref field, .. }) if field == "sweep.steps"
        ));
        assert!(matches!(
            sweep(r#"{"thetas": []}"#).grid(),
            Err(Error::Config { ref field, .. }) if field == "sweep.thetas"
        ));
        assert_eq!(sweep(r#"{"theta_start": 0.0, "theta_stop": 1.0, "steps": 1}"#).grid().unwrap(), vec![0.0]);
        assert_eq!(sweep(r#"{"thetas": [0.1, 0.2]}"#).grid().unwrap(), vec![0.1, 0.2]);
        assert!(sweep(r#"{"thetas": [0.1], "steps": 2}"#).grid().is_err());
    }
}
