use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classify::ClassifierKind;
use crate::error::{Error, Result};

/// Binary or multiclass STRCA, with or without the filter bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Bstrca,
    Bfbtrca,
    Mstrca,
    Mfbtrca,
}

impl Variant {
    pub fn is_binary(self) -> bool {
        matches!(self, Variant::Bstrca | Variant::Bfbtrca)
    }

    pub fn uses_filter_bank(self) -> bool {
        matches!(self, Variant::Bfbtrca | Variant::Mfbtrca)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Bstrca => "bstrca",
            Variant::Bfbtrca => "bfbtrca",
            Variant::Mstrca => "mstrca",
            Variant::Mfbtrca => "mfbtrca",
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "bstrca" => Variant::Bstrca,
            "bfbtrca" => Variant::Bfbtrca,
            "mstrca" => Variant::Mstrca,
            "mfbtrca" => Variant::Mfbtrca,
            _ => return Err(Error::Config(format!("unknown variant {s:?}"))),
        })
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One entry of the k-selection grid: a column count or every column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KValue {
    Count(usize),
    All,
}

impl KValue {
    pub fn resolve(self, n_features: usize) -> usize {
        match self {
            KValue::Count(k) => k.min(n_features),
            KValue::All => n_features,
        }
    }
}

impl FromStr for KValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("all") || s == "F" {
            return Ok(KValue::All);
        }
        match s.parse::<usize>() {
            Ok(k) if k > 0 => Ok(KValue::Count(k)),
            _ => Err(Error::Config(format!("invalid k-grid entry {s:?}"))),
        }
    }
}

impl fmt::Display for KValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KValue::Count(k) => write!(f, "{k}"),
            KValue::All => f.write_str("all"),
        }
    }
}

impl Serialize for KValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            KValue::Count(k) => s.serialize_u64(*k as u64),
            KValue::All => s.serialize_str("all"),
        }
    }
}

impl<'de> Deserialize<'de> for KValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Count(usize),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Count(0) => Err(serde::de::Error::custom("k must be positive")),
            Repr::Count(k) => Ok(KValue::Count(k)),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

pub fn default_k_grid() -> Vec<KValue> {
    let mut grid: Vec<KValue> = [5, 10, 15, 20, 30, 40].map(KValue::Count).to_vec();
    grid.push(KValue::All);
    grid
}

/// Parses a comma-separated grid such as `5,10,all`.
pub fn parse_k_grid(s: &str) -> Result<Vec<KValue>> {
    let grid: Vec<KValue> = s.split(',').map(str::parse).collect::<Result<_>>()?;
    if grid.is_empty() {
        return Err(Error::Config("empty k-grid".into()));
    }
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowAnchor {
    Onset,
    Cue,
}

/// Epoch crop applied before evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub anchor: WindowAnchor,
    pub pre_s: f64,
    pub post_s: f64,
}

impl WindowSpec {
    /// −2 s to +1 s around movement onset.
    pub fn onset() -> Self {
        WindowSpec {
            anchor: WindowAnchor::Onset,
            pre_s: 2.0,
            post_s: 1.0,
        }
    }

    /// The two seconds after the cue.
    pub fn cue() -> Self {
        WindowSpec {
            anchor: WindowAnchor::Cue,
            pre_s: 0.0,
            post_s: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub variant: Variant,
    /// Eigenvectors kept per eigenproblem.
    pub p: usize,
    pub classifier: ClassifierKind,
    pub c_reg: f64,
    /// Filter bank plus mRMR selection; off means the single 0.5–10 Hz band
    /// with every feature kept.
    pub banks: bool,
    pub k_grid: Vec<KValue>,
    pub folds: usize,
    pub inner_folds: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowSpec>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            variant: Variant::Mfbtrca,
            p: 3,
            classifier: ClassifierKind::Svm,
            c_reg: 1.0,
            banks: true,
            k_grid: default_k_grid(),
            folds: 10,
            inner_folds: 5,
            seed: 0,
            window: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::Config("p must be at least 1".into()));
        }
        if !(self.c_reg > 0.0) || !self.c_reg.is_finite() {
            return Err(Error::Config(format!(
                "c_reg must be positive, got {}",
                self.c_reg
            )));
        }
        if self.folds < 2 {
            return Err(Error::Config(format!(
                "folds must be ≥ 2, got {}",
                self.folds
            )));
        }
        if self.selects_features() {
            if self.k_grid.is_empty() {
                return Err(Error::Config("empty k-grid".into()));
            }
            if self.k_grid.len() > 1 && self.inner_folds < 2 {
                return Err(Error::Config("inner_folds must be ≥ 2".into()));
            }
        }
        if let Some(w) = &self.window {
            if !(w.pre_s >= 0.0 && w.post_s >= 0.0 && w.pre_s + w.post_s > 0.0) {
                return Err(Error::Config("window must have positive length".into()));
            }
        }
        Ok(())
    }

    /// Whether the run spans the ten-band bank.
    pub fn uses_filter_bank(&self) -> bool {
        self.variant.uses_filter_bank() && self.banks
    }

    pub fn selects_features(&self) -> bool {
        self.uses_filter_bank()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: PipelineConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
