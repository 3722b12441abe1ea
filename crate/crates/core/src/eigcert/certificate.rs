//! Replayable certificates.
//!
//! A certificate stores every constant entering its inequality. `replay`
//! recomputes the derived quantities and the verdict from those constants
//! alone, so a stored certificate can be re-checked without the spectrum.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::neumaier_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertKind {
    Locus,
    CountUpper,
    CountLower,
    WindowBound,
    TailBound,
    Sign,
    Transversality,
    SpectralLargeness,
    Piercing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    Inconclusive,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Certified
        } else {
            Verdict::Inconclusive
        }
    }

    pub fn is_certified(self) -> bool {
        self == Verdict::Certified
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub spectrum_checksum: String,
    pub test_functions: Vec<String>,
    pub cutoff: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub grid: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertKind,
    pub rule: String,
    pub claim: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spinc: Option<u32>,
    pub intervals: Vec<[f64; 2]>,
    pub constants: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub lists: BTreeMap<String, Vec<f64>>,
    pub verdict: Verdict,
    pub provenance: Provenance,
}

impl Certificate {
    pub fn new(kind: CertKind, rule: &str, provenance: Provenance) -> Self {
        Self {
            kind,
            rule: rule.to_string(),
            claim: String::new(),
            spinc: None,
            intervals: Vec::new(),
            constants: BTreeMap::new(),
            lists: BTreeMap::new(),
            verdict: Verdict::Inconclusive,
            provenance,
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.constants.insert(name.to_string(), value);
        self
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.constants.insert(name.to_string(), value);
    }

    pub fn constant(&self, name: &str) -> Result<f64> {
        self.constants
            .get(name)
            .copied()
            .ok_or_else(|| Error::Replay(format!("{:?} certificate lacks constant {name:?}", self.kind)))
    }

    fn list(&self, name: &str) -> Result<&[f64]> {
        self.lists
            .get(name)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::Replay(format!("{:?} certificate lacks list {name:?}", self.kind)))
    }

    pub fn is_certified(&self) -> bool {
        self.verdict.is_certified()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Recompute every derived constant and the verdict from the stored
    /// inputs; error if anything disagrees with what is recorded.
    pub fn replay(&self) -> Result<Verdict> {
        let verdict = match self.kind {
            CertKind::CountUpper => {
                let count = count_from(self.constant("gamma")?, self.constant("budget")?, self.constant("min_transform")?)?;
                self.expect("count", count)?;
                Verdict::from_bool(count <= self.constant("claimed_max")?)
            }
            CertKind::CountLower => {
                let margin = self.constant("gamma")? - self.constant("budget")?;
                Verdict::from_bool(margin > 0.0)
            }
            CertKind::WindowBound => {
                let gamma = self.constant("gamma_sup")? + self.constant("lipschitz_pad")?;
                let count = count_from(gamma, self.constant("budget")?, self.constant("min_transform")?)?;
                self.expect("count", count)?;
                Verdict::Certified
            }
            CertKind::TailBound => {
                let maxima = self.list("window_max")?;
                let counts = self.list("window_count")?;
                if maxima.len() != counts.len() {
                    return Err(Error::Replay("window lists differ in length".into()));
                }
                let total = neumaier_sum(maxima.iter().zip(counts).map(|(m, c)| m * c)) + self.constant("remainder")?;
                self.expect_close("total", total)?;
                Verdict::Certified
            }
            CertKind::Sign => {
                let gamma = self.constant("gamma")?;
                let ok = 2.0 * gamma.abs() - 2.0 * self.constant("budget")? > self.constant("tail")?
                    && self.constant("small")? < self.constant("sign_region")?;
                if ok {
                    self.expect("sign", -gamma.signum())?;
                }
                Verdict::from_bool(ok)
            }
            CertKind::Transversality => {
                let lhs = self.constant("tail")? * TAU * self.constant("c_y")?;
                let rhs = 2.0 * (self.constant("min_abs_gamma_tilde")? - self.constant("budget")?);
                self.expect_close("lhs", lhs)?;
                Verdict::from_bool(lhs < rhs)
            }
            CertKind::Locus => {
                Verdict::from_bool(self.constant("max_variation")? < self.constant("variation_limit")?)
            }
            CertKind::SpectralLargeness => {
                Verdict::from_bool(self.constant("max_j")? < self.constant("threshold_j")?)
            }
            CertKind::Piercing => {
                let signs = self.list("signs")?;
                let sum: f64 = signs.iter().sum();
                let alternating = signs.windows(2).all(|w| w[0] != w[1]);
                Verdict::from_bool(sum == 0.0 && alternating && self.constant("components_certified")? == 1.0)
            }
        };
        if verdict != self.verdict {
            return Err(Error::Replay(format!(
                "{:?} certificate records {:?} but its constants give {:?}",
                self.kind, self.verdict, verdict
            )));
        }
        Ok(verdict)
    }

    fn expect(&self, name: &str, value: f64) -> Result<()> {
        let stored = self.constant(name)?;
        if stored != value {
            return Err(Error::Replay(format!("{name}: stored {stored}, recomputed {value}")));
        }
        Ok(())
    }

    fn expect_close(&self, name: &str, value: f64) -> Result<()> {
        let stored = self.constant(name)?;
        if (stored - value).abs() > 1e-12 * value.abs().max(1e-300) {
            return Err(Error::Replay(format!("{name}: stored {stored}, recomputed {value}")));
        }
        Ok(())
    }
}

/// `floor(2 (gamma + budget) / min)`.
pub fn count_from(gamma: f64, budget: f64, min_transform: f64) -> Result<f64> {
    if !(min_transform > 0.0) {
        return Err(Error::Precondition(format!("transform minimum {min_transform} must be positive")));
    }
    Ok((2.0 * (gamma + budget) / min_transform).floor().max(0.0))
}
