//! One JSON document describing a run: benchmark, network, optimizer, losses,
//! replay and output location. Missing keys take their defaults; unknown keys
//! are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::continual::{Mode, NetConfig, ReplayRefresh, TrainConfig};
use crate::data::{DEFAULT_POINTS, DEFAULT_TEST_PER_CLASS, DEFAULT_TRAIN_PER_CLASS, MANIFEST_FILE};
use crate::error::{Error, Result};
use crate::losses::LossConfig;
use crate::optim::AdamConfig;
use crate::shapemodel::{DEFAULT_ALPHA, DEFAULT_K, DEFAULT_NS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub classes: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub points: usize,
    /// Classes introduced per session.
    pub per_session: usize,
    /// Dataset manifest; relative to the output directory unless absolute.
    pub manifest: String,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            classes: 8,
            train_per_class: DEFAULT_TRAIN_PER_CLASS,
            test_per_class: DEFAULT_TEST_PER_CLASS,
            points: DEFAULT_POINTS,
            per_session: 2,
            manifest: format!("bench/{MANIFEST_FILE}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub mode: Mode,
    pub out: String,
    pub bench: BenchConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub net: NetConfig,
    pub k: usize,
    pub alpha: f64,
    pub n_s: usize,
    pub replay_refresh: ReplayRefresh,
    pub loss: LossConfig,
    /// Also train a joint model to report the forgetting rate.
    pub joint_reference: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            seed: 0,
            mode: Mode::Replay,
            out: "out".into(),
            bench: BenchConfig::default(),
            epochs: t.epochs,
            batch_size: t.batch_size,
            adam: t.adam,
            net: t.net,
            k: DEFAULT_K,
            alpha: DEFAULT_ALPHA,
            n_s: DEFAULT_NS,
            replay_refresh: t.replay_refresh,
            loss: t.loss,
            joint_reference: true,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Pretty JSON in field declaration order, newline terminated.
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            adam: self.adam,
            n_s: self.n_s,
            alpha: self.alpha,
            k: self.k,
            loss: self.loss,
            net: self.net,
            replay_refresh: self.replay_refresh,
            seed: self.seed,
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(&self.out)
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.out_dir().join(&self.bench.manifest)
    }

    pub fn validate(&self) -> Result<()> {
        self.train_config().validate()?;
        let b = &self.bench;
        if b.classes == 0 || b.per_session == 0 || b.train_per_class < 2 || b.test_per_class == 0 {
            return Err(Error::Config(
                "bench needs classes, per_session, test_per_class >= 1 and train_per_class >= 2"
                    .into(),
            ));
        }
        if b.points < 8 {
            return Err(Error::Config("bench.points must be >= 8".into()));
        }
        if self.out.is_empty() {
            return Err(Error::Config("out must not be empty".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_echo_is_a_fixed_point() {
        let cfg = RunConfig {
            seed: 17,
            mode: Mode::RawExemplar,
            alpha: 0.35,
            ..RunConfig::default()
        };
        let text = cfg.to_canonical_json();
        let back = RunConfig::from_json(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_canonical_json(), text);
    }

    #[test]
    fn partial_documents_take_defaults() {
        let cfg = RunConfig::from_json(r#"{"seed": 3, "bench": {"classes": 4}}"#).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.bench.classes, 4);
        assert_eq!(cfg.bench.points, DEFAULT_POINTS);
        assert_eq!(cfg.k, DEFAULT_K);
    }

    #[test]
    fn unknown_and_invalid_fields_are_config_errors() {
        assert!(matches!(
            RunConfig::from_json(r#"{"sed": 3}"#),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            RunConfig::from_json(r#"{"k": 9}"#),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            RunConfig::from_json(r#"{"mode": "herding"}"#),
            Err(Error::Config(_))
        ));
        assert!(RunConfig::from_json(r#"{"loss": {"gamma": -1}}"#).is_err());
    }
}
