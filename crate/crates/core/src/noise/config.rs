use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SignMode;

/// Mean and standard deviation of a (rectified) normal, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Gaussian {
    pub mu: f64,
    pub sigma: f64,
}

impl Gaussian {
    pub const fn new(mu: f64, sigma: f64) -> Self {
        Gaussian { mu, sigma }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Approximation,
    Localization,
    Scale,
    ClassConfusion,
    Deletion,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 5] = [
        NoiseKind::Approximation,
        NoiseKind::Localization,
        NoiseKind::Scale,
        NoiseKind::ClassConfusion,
        NoiseKind::Deletion,
    ];
}

/// Either the full composite pipeline or one ablation operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    #[default]
    Composite,
    Dilation,
    Erosion,
    Opening,
    RandomScale,
    Shifting,
    Localization,
    Approximation,
}

impl NoiseMode {
    pub const SINGLE_OPERATORS: [NoiseMode; 7] = [
        NoiseMode::Dilation,
        NoiseMode::Erosion,
        NoiseMode::Opening,
        NoiseMode::RandomScale,
        NoiseMode::Shifting,
        NoiseMode::Localization,
        NoiseMode::Approximation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NoiseMode::Composite => "composite",
            NoiseMode::Dilation => "dilation",
            NoiseMode::Erosion => "erosion",
            NoiseMode::Opening => "opening",
            NoiseMode::RandomScale => "random_scale",
            NoiseMode::Shifting => "shifting",
            NoiseMode::Localization => "localization",
            NoiseMode::Approximation => "approximation",
        }
    }
}

impl fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        std::iter::once(NoiseMode::Composite)
            .chain(NoiseMode::SINGLE_OPERATORS)
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown mode {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Low,
    Medium,
    High,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Low, Tier::Medium, Tier::High];

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Low => "low",
            Tier::Medium => "medium",
            Tier::High => "high",
        }
    }
}

impl FromStr for Tier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Tier::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseConfig {
    pub approx: Gaussian,
    pub loc: Gaussian,
    pub scale: Gaussian,
    pub p_class: f64,
    pub p_delete: f64,
    pub seed: u64,
    pub mode: NoiseMode,
    /// Noise types active in composite mode; ignored by single operators.
    pub enabled: BTreeSet<NoiseKind>,
    pub signs: SignMode,
}

impl Default for NoiseConfig {
    /// All parameters zero and every noise type enabled; applying it leaves
    /// a dataset unchanged.
    fn default() -> Self {
        NoiseConfig {
            approx: Gaussian::default(),
            loc: Gaussian::default(),
            scale: Gaussian::default(),
            p_class: 0.0,
            p_delete: 0.0,
            seed: 0,
            mode: NoiseMode::Composite,
            enabled: NoiseKind::ALL.into_iter().collect(),
            signs: SignMode::PerCoordinate,
        }
    }
}

/// The three severity tiers of the benchmark.
pub fn preset(tier: Tier) -> NoiseConfig {
    let (approx, loc, scale) = match tier {
        Tier::Low => ((5.0, 2.5), (2.0, 0.5), (3.0, 1.0)),
        Tier::Medium => ((10.0, 2.5), (3.0, 0.5), (5.0, 1.0)),
        Tier::High => ((15.0, 10.0), (4.0, 2.0), (7.0, 4.0)),
    };
    NoiseConfig {
        approx: Gaussian::new(approx.0, approx.1),
        loc: Gaussian::new(loc.0, loc.1),
        scale: Gaussian::new(scale.0, scale.1),
        p_class: 0.05,
        p_delete: 0.05,
        ..NoiseConfig::default()
    }
}

impl NoiseConfig {
    pub fn is_enabled(&self, kind: NoiseKind) -> bool {
        self.enabled.contains(&kind)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, g) in [("approx", self.approx), ("loc", self.loc), ("scale", self.scale)] {
            if !g.mu.is_finite() || !g.sigma.is_finite() || g.sigma < 0.0 {
                return Err(Error::Config(format!(
                    "{name}: need finite mu and sigma >= 0, got ({}, {})",
                    g.mu, g.sigma
                )));
            }
        }
        for (name, p) in [("p_class", self.p_class), ("p_delete", self.p_delete)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }

    /// Parses the JSON config file format.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ConfigFile = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("config: {e}")))?;
        file.resolve()
    }
}

/// On-disk config. A `preset` provides the base values; any other key
/// present overrides it.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Tier>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<NoiseMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approx: Option<Gaussian>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loc: Option<Gaussian>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<Gaussian>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_class: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_delete: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enabled: Option<Vec<NoiseKind>>,
    /// Localization sign sharing; defaults to independent signs per axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signs: Option<SignMode>,
}

impl ConfigFile {
    pub fn resolve(&self) -> Result<NoiseConfig> {
        let mut c = self.preset.map(preset).unwrap_or_default();
        if let Some(m) = self.mode {
            c.mode = m;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(g) = self.approx {
            c.approx = g;
        }
        if let Some(g) = self.loc {
            c.loc = g;
        }
        if let Some(g) = self.scale {
            c.scale = g;
        }
        if let Some(p) = self.p_class {
            c.p_class = p;
        }
        if let Some(p) = self.p_delete {
            c.p_delete = p;
        }
        if let Some(e) = &self.enabled {
            c.enabled = e.iter().copied().collect();
        }
        if let Some(s) = self.signs {
            c.signs = s;
        }
        c.validate()?;
        Ok(c)
    }
}
