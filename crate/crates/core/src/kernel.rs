//! The interface a function must offer to be fed into a trace-formula side.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
}

/// A compactly supported even or odd function together with the real profile
/// of its Fourier transform: `H^(t)` when even, `-i K^(t)` when odd.
pub trait Kernel: Send + Sync {
    fn id(&self) -> String;
    fn parity(&self) -> Parity;
    fn support_radius(&self) -> f64;
    fn value(&self, x: f64) -> f64;
    /// `(H(0), H''(0))`, the data entering the volume terms.
    fn volume_data(&self) -> Result<(f64, f64)>;
    fn spectral(&self, t: f64) -> f64;
    fn spectral_deriv(&self, t: f64) -> f64;
    /// Bound on `sup_t |d/dt spectral(t)|`.
    fn spectral_deriv_bound(&self) -> f64;
    fn spectral_second_deriv(&self, t: f64) -> f64 {
        let h = 1e-4 * (1.0 + t.abs());
        (self.spectral_deriv(t + h) - self.spectral_deriv(t - h)) / (2.0 * h)
    }
}

/// Finite linear combination of kernels of one parity.
#[derive(Clone)]
pub struct Combination {
    terms: Vec<(f64, Arc<dyn Kernel>)>,
    parity: Parity,
}

impl Combination {
    pub fn new(terms: Vec<(f64, Arc<dyn Kernel>)>) -> Result<Self> {
        let parity = terms
            .first()
            .map(|(_, k)| k.parity())
            .ok_or_else(|| Error::Precondition("empty linear combination".into()))?;
        if terms.iter().any(|(_, k)| k.parity() != parity) {
            return Err(Error::Precondition("linear combination mixes parities".into()));
        }
        Ok(Self { terms, parity })
    }
}

impl Kernel for Combination {
    fn id(&self) -> String {
        let parts: Vec<String> = self.terms.iter().map(|(c, k)| format!("{c}*{}", k.id())).collect();
        parts.join("+")
    }

    fn parity(&self) -> Parity {
        self.parity
    }

    fn support_radius(&self) -> f64 {
        self.terms.iter().map(|(_, k)| k.support_radius()).fold(0.0, f64::max)
    }

    fn value(&self, x: f64) -> f64 {
        self.terms.iter().map(|(c, k)| c * k.value(x)).sum()
    }

    fn volume_data(&self) -> Result<(f64, f64)> {
        let mut h0 = 0.0;
        let mut h2 = 0.0;
        for (c, k) in &self.terms {
            let (a, b) = k.volume_data()?;
            h0 += c * a;
            h2 += c * b;
        }
        Ok((h0, h2))
    }

    fn spectral(&self, t: f64) -> f64 {
        self.terms.iter().map(|(c, k)| c * k.spectral(t)).sum()
    }

    fn spectral_deriv(&self, t: f64) -> f64 {
        self.terms.iter().map(|(c, k)| c * k.spectral_deriv(t)).sum()
    }

    fn spectral_deriv_bound(&self) -> f64 {
        self.terms.iter().map(|(c, k)| c.abs() * k.spectral_deriv_bound()).sum()
    }

    fn spectral_second_deriv(&self, t: f64) -> f64 {
        self.terms.iter().map(|(c, k)| c * k.spectral_second_deriv(t)).sum()
    }
}
