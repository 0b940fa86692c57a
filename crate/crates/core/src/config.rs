//! Hyper-parameters, retrieval modes and the versioned config file.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::similarity::Similarity;
use crate::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-9;

pub const CONFIG_VERSION: u32 = 1;

/// Weights of the ranking models.
///
/// `alpha` mixes the document model with the background model, `alpha_x` and
/// `alpha_v` weigh textual against visual features, `beta_cs` weighs the
/// commonsense translation model in the final mixture, and the three lambdas
/// weigh triple tokens by their subject, predicate or object position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub alpha: f64,
    pub alpha_x: f64,
    pub alpha_v: f64,
    pub beta_cs: f64,
    pub lambda_s: f64,
    pub lambda_p: f64,
    pub lambda_o: f64,
    pub similarity: Similarity,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            alpha: 0.8,
            alpha_x: 0.6,
            alpha_v: 0.4,
            beta_cs: 0.3,
            lambda_s: 0.4,
            lambda_p: 0.2,
            lambda_o: 0.4,
            similarity: Similarity::default(),
        }
    }
}

fn in_unit(name: &str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::Config(format!("{name} must lie in [0, 1], got {value}")));
    }
    Ok(())
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        in_unit("alpha", self.alpha)?;
        in_unit("beta_cs", self.beta_cs)?;
        in_unit("sim_threshold", self.similarity.threshold)?;
        for (name, v) in [("alpha_x", self.alpha_x), ("alpha_v", self.alpha_v)] {
            if v.is_nan() || v < 0.0 {
                return Err(Error::Config(format!("{name} must be nonnegative, got {v}")));
            }
        }
        if (self.alpha_x + self.alpha_v - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::Config(format!(
                "alpha_x + alpha_v must equal 1, got {}",
                self.alpha_x + self.alpha_v
            )));
        }
        for (name, v) in [
            ("lambda_s", self.lambda_s),
            ("lambda_p", self.lambda_p),
            ("lambda_o", self.lambda_o),
        ] {
            in_unit(name, v)?;
        }
        let sum = self.lambda_s + self.lambda_p + self.lambda_o;
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::Config(format!("lambdas must sum to 1, got {sum}")));
        }
        if (self.lambda_s - self.lambda_o).abs() > SUM_TOLERANCE {
            return Err(Error::Config(format!(
                "lambda_s must equal lambda_o, got {} and {}",
                self.lambda_s, self.lambda_o
            )));
        }
        if self.lambda_s <= self.lambda_p {
            return Err(Error::Config(format!(
                "lambda_s must exceed lambda_p, got {} <= {}",
                self.lambda_s, self.lambda_p
            )));
        }
        if self.similarity.min_substring < 1 {
            return Err(Error::Config("sim_min_substring must be at least 1".into()));
        }
        Ok(())
    }

    /// Parameters with the restrictions of `mode` applied.
    pub fn with_mode(&self, mode: Mode) -> Hyperparameters {
        let mut h = *self;
        match mode {
            Mode::Vanilla => {
                h.alpha_x = 1.0;
                h.alpha_v = 0.0;
                h.beta_cs = 0.0;
            }
            Mode::Extended => h.beta_cs = 0.0,
            Mode::Full => {}
        }
        h
    }
}

/// Which feature families take part in scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Caption text only.
    Vanilla,
    /// Caption text and detected object labels.
    Extended,
    /// Text, labels and commonsense expansion.
    Full,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Vanilla, Mode::Extended, Mode::Full];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Vanilla => "vanilla",
            Mode::Extended => "extended",
            Mode::Full => "full",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vanilla" => Ok(Mode::Vanilla),
            "extended" => Ok(Mode::Extended),
            "full" => Ok(Mode::Full),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        }
    }
}

/// Unigram or adjacent-pair term models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    #[default]
    Unigram,
    Bigram,
}

impl Model {
    pub fn order(self) -> usize {
        match self {
            Model::Unigram => 1,
            Model::Bigram => 2,
        }
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unigram" => Ok(Model::Unigram),
            "bigram" => Ok(Model::Bigram),
            other => Err(Error::Config(format!("unknown model {other:?}"))),
        }
    }
}

/// On-disk config: `key = value` pairs plus a `version` key.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub version: u32,
    pub alpha: Option<f64>,
    pub alpha_x: Option<f64>,
    pub alpha_v: Option<f64>,
    pub beta_cs: Option<f64>,
    pub lambda_s: Option<f64>,
    pub lambda_p: Option<f64>,
    pub lambda_o: Option<f64>,
    pub sim_min_substring: Option<usize>,
    pub sim_threshold: Option<f64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<ConfigFile> {
        let file: ConfigFile =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim().to_string()))?;
        if file.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                file.version
            )));
        }
        Ok(file)
    }

    /// Overlays the keys present in this file onto `base` and validates.
    pub fn apply(&self, base: Hyperparameters) -> Result<Hyperparameters> {
        let mut h = base;
        macro_rules! set {
            ($($key:ident => $field:expr),* $(,)?) => {
                $(if let Some(v) = self.$key { $field = v; })*
            };
        }
        set!(
            alpha => h.alpha,
            alpha_x => h.alpha_x,
            alpha_v => h.alpha_v,
            beta_cs => h.beta_cs,
            lambda_s => h.lambda_s,
            lambda_p => h.lambda_p,
            lambda_o => h.lambda_o,
            sim_min_substring => h.similarity.min_substring,
            sim_threshold => h.similarity.threshold,
        );
        h.validate()?;
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        Hyperparameters::default().validate().unwrap();
    }

    #[test]
    fn lambda_constraints() {
        let mut h = Hyperparameters::default();
        h.lambda_p = 0.4;
        h.lambda_s = 0.3;
        h.lambda_o = 0.3;
        assert!(h.validate().is_err());

        let mut h = Hyperparameters::default();
        h.lambda_s = 0.5;
        h.lambda_o = 0.3;
        assert!(h.validate().is_err());
    }

    #[test]
    fn textual_and_visual_weights_must_sum_to_one() {
        let mut h = Hyperparameters::default();
        h.alpha_v = 0.5;
        assert!(h.validate().is_err());
    }

    #[test]
    fn mode_restrictions() {
        let h = Hyperparameters::default();
        let v = h.with_mode(Mode::Vanilla);
        assert_eq!((v.alpha_x, v.alpha_v, v.beta_cs), (1.0, 0.0, 0.0));
        let e = h.with_mode(Mode::Extended);
        assert_eq!((e.alpha_x, e.alpha_v, e.beta_cs), (h.alpha_x, h.alpha_v, 0.0));
        assert_eq!(h.with_mode(Mode::Full), h);
    }

    #[test]
    fn config_file_overlays_defaults() {
        let file = ConfigFile::parse("version = 1\nalpha = 0.5\nbeta_cs = 0.9\n").unwrap();
        let h = file.apply(Hyperparameters::default()).unwrap();
        assert_eq!(h.alpha, 0.5);
        assert_eq!(h.beta_cs, 0.9);
        assert_eq!(h.alpha_x, 0.6);
    }

    #[test]
    fn config_file_rejects_bad_version_and_keys() {
        assert!(ConfigFile::parse("version = 2\n").is_err());
        assert!(ConfigFile::parse("version = 1\ngamma = 1\n").is_err());
        let bad = ConfigFile::parse("version = 1\nalpha = 1.5\n").unwrap();
        assert!(bad.apply(Hyperparameters::default()).is_err());
    }
}
