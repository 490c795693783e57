use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::registry::{find_scenario, Params};
use super::HarnessError;
use crate::calculus::QvMode;
use crate::formulas::{IndicatorMode, Variant};

/// Local-time bandwidth `ε` (mollifier index `n = 1/ε`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BandwidthRule {
    /// `ε = 3√dt`.
    #[default]
    Coupled,
    Fixed(f64),
}

impl BandwidthRule {
    pub fn value(&self, dt: f64) -> f64 {
        match *self {
            BandwidthRule::Coupled => 3.0 * dt.sqrt(),
            BandwidthRule::Fixed(eps) => eps,
        }
    }
}

impl fmt::Display for BandwidthRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BandwidthRule::Coupled => f.write_str("coupled"),
            BandwidthRule::Fixed(eps) => write!(f, "{eps}"),
        }
    }
}

impl FromStr for BandwidthRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "coupled" {
            return Ok(BandwidthRule::Coupled);
        }
        match s.parse::<f64>() {
            Ok(eps) if eps > 0.0 && eps.is_finite() => Ok(BandwidthRule::Fixed(eps)),
            _ => Err(format!("bandwidth must be 'coupled' or a positive number, got '{s}'")),
        }
    }
}

impl Serialize for BandwidthRule {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            BandwidthRule::Coupled => s.serialize_str("coupled"),
            BandwidthRule::Fixed(eps) => s.serialize_f64(*eps),
        }
    }
}

impl<'de> Deserialize<'de> for BandwidthRule {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(eps) => format!("{eps}").parse(),
            Raw::Text(s) => s.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// Flat key-value configuration; every field mirrors a CLI flag.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: Option<String>,
    #[serde(default)]
    pub params: Params,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub paths: Option<usize>,
    pub seed: Option<u64>,
    pub variant: Option<Variant>,
    pub qv: Option<QvMode>,
    pub bandwidth: Option<BandwidthRule>,
    pub indicator: Option<IndicatorMode>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }

    /// `self` with every field set in `over` replaced; parameter maps merge key-wise.
    pub fn overlay(mut self, over: ConfigFile) -> Self {
        self.params.extend(over.params);
        macro_rules! take {
            ($($f:ident),*) => { $( if over.$f.is_some() { self.$f = over.$f; } )* };
        }
        take!(scenario, t_end, dt, paths, seed, variant, qv, bandwidth, indicator, out, threads);
        self
    }
}

/// A fully resolved run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: String,
    pub params: Params,
    pub t_end: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// `None` selects the scenario's own variant.
    pub variant: Option<Variant>,
    pub bandwidth: BandwidthRule,
    pub qv_mode: QvMode,
    pub indicator: IndicatorMode,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Worker count; never part of any emitted output.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl ScenarioConfig {
    pub fn new(scenario: impl Into<String>) -> Self {
        Self {
            scenario: scenario.into(),
            params: Params::new(),
            t_end: 1.0,
            dt: 1e-3,
            n_paths: 100,
            seed: 0,
            variant: None,
            bandwidth: BandwidthRule::Coupled,
            qv_mode: QvMode::Analytic,
            indicator: IndicatorMode::Strict,
            out: None,
            threads: None,
        }
    }

    pub fn from_file(file: ConfigFile) -> Result<Self, HarnessError> {
        let scenario = file
            .scenario
            .ok_or_else(|| HarnessError::Config("no scenario given".into()))?;
        let d = Self::new(scenario);
        let cfg = Self {
            params: file.params,
            t_end: file.t_end.unwrap_or(d.t_end),
            dt: file.dt.unwrap_or(d.dt),
            n_paths: file.paths.unwrap_or(d.n_paths),
            seed: file.seed.unwrap_or(d.seed),
            variant: file.variant,
            bandwidth: file.bandwidth.unwrap_or(d.bandwidth),
            qv_mode: file.qv.unwrap_or(d.qv_mode),
            indicator: file.indicator.unwrap_or(d.indicator),
            out: file.out,
            threads: file.threads,
            ..d
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_paths(mut self, n: usize) -> Self {
        self.n_paths = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = Some(variant);
        self
    }

    pub fn with_bandwidth(mut self, rule: BandwidthRule) -> Self {
        self.bandwidth = rule;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    pub fn with_out(mut self, dir: impl Into<PathBuf>) -> Self {
        self.out = Some(dir.into());
        self
    }

    /// Number of grid steps; `t_end` must be an integer multiple of `dt`.
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn bandwidth_value(&self) -> f64 {
        self.bandwidth.value(self.dt)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        let n = self.n_steps();
        if n == 0 || (n as f64 * self.dt - self.t_end).abs() > 1e-9 * self.t_end {
            return bad(format!("t_end = {} is not a multiple of dt = {}", self.t_end, self.dt));
        }
        if self.n_paths == 0 {
            return bad("at least one path is required".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        let scenario = find_scenario(&self.scenario)?;
        scenario.resolve_params(&self.params)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bandwidth_rule_parses_and_couples() {
        assert_eq!("coupled".parse::<BandwidthRule>(), Ok(BandwidthRule::Coupled));
        assert_eq!("0.05".parse::<BandwidthRule>(), Ok(BandwidthRule::Fixed(0.05)));
        assert!("-1".parse::<BandwidthRule>().is_err());
        assert!((BandwidthRule::Coupled.value(1e-4) - 0.03).abs() < 1e-15);
    }

    #[test]
    fn file_values_are_overridden_by_flags() {
        let file: ConfigFile = toml::from_str(
            r#"
            scenario = "tanaka_bm"
            dt = 0.01
            paths = 5
            bandwidth = 0.2
            [params]
            level = 0.25
            "#,
        )
        .unwrap();
        let flags = ConfigFile {
            paths: Some(9),
            params: [("sigma".to_string(), 2.0)].into_iter().collect(),
            ..ConfigFile::default()
        };
        let cfg = ScenarioConfig::from_file(file.overlay(flags)).unwrap();
        assert_eq!(cfg.n_paths, 9);
        assert_eq!(cfg.dt, 0.01);
        assert_eq!(cfg.bandwidth, BandwidthRule::Fixed(0.2));
        assert_eq!(cfg.params["level"], 0.25);
        assert_eq!(cfg.params["sigma"], 2.0);
        assert_eq!(cfg.n_steps(), 100);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(ScenarioConfig::new("nope").validate().is_err());
        assert!(ScenarioConfig::new("tanaka_bm").with_dt(0.3).validate().is_err());
        assert!(ScenarioConfig::new("tanaka_bm").with_paths(0).validate().is_err());
        assert!(ScenarioConfig::new("tanaka_bm").with_param("bogus", 1.0).validate().is_err());
        assert!(toml::from_str::<ConfigFile>("unknown_key = 1").is_err());
    }
}
