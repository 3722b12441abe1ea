//! Run configuration, read from TOML and overridden by command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::eigcert::CertParams;
use crate::error::{Error, Result};

/// Which spin^c structures to process: one character `k` or all of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpincSelector {
    #[default]
    All,
    K(u32),
}

impl SpincSelector {
    pub fn only(self) -> Option<Vec<u32>> {
        match self {
            SpincSelector::All => None,
            SpincSelector::K(k) => Some(vec![k]),
        }
    }
}

impl std::str::FromStr for SpincSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "all" => Ok(SpincSelector::All),
            t => t
                .parse()
                .map(SpincSelector::K)
                .map_err(|_| Error::Config(format!("spinc must be a character k or \"all\", got {s:?}"))),
        }
    }
}

impl fmt::Display for SpincSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpincSelector::All => f.write_str("all"),
            SpincSelector::K(k) => write!(f, "{k}"),
        }
    }
}

#[derive(Deserialize, Serialize)]
#[serde(untagged)]
enum SelectorRepr {
    K(u32),
    Text(String),
}

impl Serialize for SpincSelector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SpincSelector::All => SelectorRepr::Text("all".into()).serialize(s),
            SpincSelector::K(k) => SelectorRepr::K(*k).serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for SpincSelector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match SelectorRepr::deserialize(d)? {
            SelectorRepr::K(k) => Ok(SpincSelector::K(k)),
            SelectorRepr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlotParams {
    /// Rows of the `tau` sweeps (`J0`, `gamma_odd`).
    pub tau_points: usize,
    /// `tau` of the `Js` curve.
    pub tau: f64,
    pub s_max: f64,
    pub s_points: usize,
}

impl Default for PlotParams {
    fn default() -> Self {
        Self { tau_points: 2000, tau: 0.0, s_max: 4.0, s_points: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OneformParams {
    pub iterations: usize,
    pub seed: u64,
}

impl Default for OneformParams {
    fn default() -> Self {
        Self { iterations: 10_000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Length-spectrum file (with `.sha256` sidecar).
    pub spectrum: Option<PathBuf>,
    /// Synthetic oracle spectrum; used instead of `spectrum`.
    pub synthetic: Option<PathBuf>,
    /// Dirichlet-domain file for `oneform`.
    pub domain: Option<PathBuf>,
    pub spinc: SpincSelector,
    /// Certify spectral largeness on `[0, lambda_max]` when set.
    pub lambda_max: Option<f64>,
    pub output: PathBuf,
    /// Directory for formal-side checkpoints.
    pub cache: Option<PathBuf>,
    pub certify: CertParams,
    pub plot: PlotParams,
    pub oneform: OneformParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            spectrum: None,
            synthetic: None,
            domain: None,
            spinc: SpincSelector::All,
            lambda_max: None,
            output: PathBuf::from("out"),
            cache: None,
            certify: CertParams::default(),
            plot: PlotParams::default(),
            oneform: OneformParams::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Read a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut c = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut c.spectrum, &mut c.synthetic, &mut c.domain, &mut c.cache].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if c.output.is_relative() {
            c.output = base.join(&c.output);
        }
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Check the invariants that do not need the data.
    pub fn validate(&self) -> Result<()> {
        if self.spectrum.is_some() && self.synthetic.is_some() {
            return Err(Error::Config("give either `spectrum` or `synthetic`, not both".into()));
        }
        for p in [&self.spectrum, &self.synthetic, &self.domain].into_iter().flatten() {
            if !p.exists() {
                return Err(Error::Config(format!("{} does not exist", p.display())));
            }
        }
        if let Some(l) = self.lambda_max {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Config(format!("lambda_max {l} must be positive")));
            }
        }
        if self.plot.tau_points < 2 || self.plot.s_points < 2 || !(self.plot.s_max > 0.0) {
            return Err(Error::Config("plot needs tau_points >= 2, s_points >= 2 and s_max > 0".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selector_forms() {
        let c = RunConfig::from_toml("spinc = 3").unwrap();
        assert_eq!(c.spinc, SpincSelector::K(3));
        let c = RunConfig::from_toml("spinc = \"all\"").unwrap();
        assert_eq!(c.spinc, SpincSelector::All);
        assert!(RunConfig::from_toml("spinc = \"most\"").is_err());
    }

    #[test]
    fn nested_tables_and_unknown_fields() {
        let c = RunConfig::from_toml("[certify]\ntau_grid = 401\n[oneform]\nseed = 7\n").unwrap();
        assert_eq!(c.certify.tau_grid, 401);
        assert_eq!(c.oneform.seed, 7);
        assert!(RunConfig::from_toml("[certify]\ntau_grdi = 401\n").is_err());
    }

    #[test]
    fn toml_roundtrip() {
        let c = RunConfig { spinc: SpincSelector::K(2), lambda_max: Some(2.0), ..RunConfig::default() };
        assert_eq!(RunConfig::from_toml(&c.to_toml().unwrap()).unwrap(), c);
    }

    #[test]
    fn missing_files_are_rejected() {
        let c = RunConfig { spectrum: Some("/nonexistent/x.json".into()), ..RunConfig::default() };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }
}
