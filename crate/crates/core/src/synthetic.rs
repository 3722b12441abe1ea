//! Planted spectra. Every "geometric side" of a [`SyntheticSpectrum`] is its
//! spectral side, `1/2 sum mult * H^(s_j(tau))`, so certificates computed from
//! it can be checked against the planted eigenvalue branches.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::spectrum::sha256_hex;
use crate::sum::{rounding_budget, NeumaierSum};
use crate::trace::{Evaluation, Side, SideKind, TraceData};

/// An eigenvalue branch `s(tau)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Branch {
    /// `sum c_i tau^i`.
    Poly { coeffs: Vec<f64> },
    /// `constant + sum_j a_j cos(2 pi j tau) + b_j sin(2 pi j tau)`, `j >= 1`.
    Trig { constant: f64, cos: Vec<f64>, sin: Vec<f64> },
}

impl Branch {
    pub fn constant(c: f64) -> Self {
        Branch::Poly { coeffs: vec![c] }
    }

    /// `amplitude * sin(2 pi freq (tau - phase))`.
    pub fn sine(amplitude: f64, freq: usize, phase: f64, offset: f64) -> Self {
        let mut cos = vec![0.0; freq];
        let mut sin = vec![0.0; freq];
        let w = TAU * freq as f64 * phase;
        sin[freq - 1] = amplitude * w.cos();
        cos[freq - 1] = -amplitude * w.sin();
        Branch::Trig { constant: offset, cos, sin }
    }

    pub fn value(&self, tau: f64) -> f64 {
        match self {
            Branch::Poly { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * tau + c),
            Branch::Trig { constant, cos, sin } => {
                let mut v = *constant;
                for (j, (a, b)) in cos.iter().zip(sin).enumerate() {
                    let w = TAU * (j + 1) as f64 * tau;
                    v += a * w.cos() + b * w.sin();
                }
                v
            }
        }
    }

    pub fn deriv(&self, tau: f64) -> f64 {
        match self {
            Branch::Poly { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (i, c)| acc * tau + i as f64 * c),
            Branch::Trig { cos, sin, .. } => {
                let mut v = 0.0;
                for (j, (a, b)) in cos.iter().zip(sin).enumerate() {
                    let f = TAU * (j + 1) as f64;
                    v += f * (b * (f * tau).cos() - a * (f * tau).sin());
                }
                v
            }
        }
    }

    /// `(sup |s'|, sup |s''|)` over `tau` in `[0, 1]`.
    pub fn derivative_bounds(&self) -> (f64, f64) {
        match self {
            Branch::Poly { coeffs } => {
                let d1 = coeffs.iter().enumerate().map(|(i, c)| i as f64 * c.abs()).sum();
                let d2 = coeffs.iter().enumerate().map(|(i, c)| (i * i.saturating_sub(1)) as f64 * c.abs()).sum();
                (d1, d2)
            }
            Branch::Trig { cos, sin, .. } => {
                let mut d1 = 0.0;
                let mut d2 = 0.0;
                for (j, (a, b)) in cos.iter().zip(sin).enumerate() {
                    let f = TAU * (j + 1) as f64;
                    let amp = (a * a + b * b).sqrt();
                    d1 += f * amp;
                    d2 += f * f * amp;
                }
                (d1, d2)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub branch: Branch,
    pub multiplicity: u32,
    /// Restrict to one torsion character; `None` means every character.
    #[serde(default)]
    pub character: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoexactAtom {
    pub sqrt_lambda: f64,
    pub multiplicity: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpectrum {
    pub name: String,
    pub b1: u32,
    pub torsion_order: u32,
    /// Support radius allowed for kernels (sizes the bound basis).
    pub cutoff: f64,
    pub derivative_bound: f64,
    pub atoms: Vec<Atom>,
    #[serde(default)]
    pub coexact: Vec<CoexactAtom>,
}

impl SyntheticSpectrum {
    pub fn new(name: impl Into<String>, torsion_order: u32, cutoff: f64, atoms: Vec<Atom>) -> Result<Self> {
        let derivative_bound = atoms.iter().map(|a| a.branch.derivative_bounds().0).fold(0.0, f64::max);
        let s = Self {
            name: name.into(),
            b1: 1,
            torsion_order,
            cutoff,
            derivative_bound,
            atoms,
            coexact: Vec::new(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.torsion_order == 0 {
            return Err(Error::Schema("torsion_order must be >= 1".into()));
        }
        for (index, a) in self.atoms.iter().enumerate() {
            let (d1, _) = a.branch.derivative_bounds();
            if d1 > self.derivative_bound * (1.0 + 1e-12) {
                return Err(Error::InvalidRecord {
                    index,
                    reason: format!("branch derivative {d1} exceeds declared bound {}", self.derivative_bound),
                });
            }
            if a.multiplicity == 0 || a.character.is_some_and(|k| k >= self.torsion_order) {
                return Err(Error::InvalidRecord { index, reason: "bad multiplicity or character".into() });
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn active(&self, k: u32) -> impl Iterator<Item = &Atom> {
        self.atoms.iter().filter(move |a| a.character.is_none_or(|c| c == k))
    }

    /// Planted multiplicity of `s` as an absolute eigenvalue at `(tau, k)`.
    pub fn multiplicity_at(&self, s: f64, tau: f64, k: u32, tol: f64) -> u32 {
        self.active(k)
            .filter(|a| (a.branch.value(tau).abs() - s.abs()).abs() <= tol)
            .map(|a| a.multiplicity)
            .sum()
    }

    /// Planted number of eigenvalues with `|s| <= l`.
    pub fn count_below(&self, l: f64, tau: f64, k: u32) -> u32 {
        self.active(k).filter(|a| a.branch.value(tau).abs() <= l).map(|a| a.multiplicity).sum()
    }

    /// Planted eigenvalue values at `(tau, k)`, one entry per multiplicity.
    pub fn eigenvalues(&self, tau: f64, k: u32) -> Vec<f64> {
        let mut out = Vec::new();
        for a in self.active(k) {
            for _ in 0..a.multiplicity {
                out.push(a.branch.value(tau));
            }
        }
        out
    }

    /// A bulk of constant, sign-symmetric atoms from `start` upward; enough to
    /// make the bound matrices positive definite.
    pub fn bulk<R: Rng>(rng: &mut R, start: f64, spacing: f64, count: usize) -> Vec<Atom> {
        let mut atoms = Vec::with_capacity(2 * count);
        for i in 0..count {
            let s = start + spacing * i as f64 + rng.random_range(0.0..0.3 * spacing);
            let multiplicity = rng.random_range(1..=2);
            for sign in [1.0, -1.0] {
                atoms.push(Atom { branch: Branch::constant(sign * s), multiplicity, character: None });
            }
        }
        atoms
    }

    /// Bulk plus one small branch crossing zero `crossings` times (0, 2 or 4),
    /// with coexact eigenvalues above `lambda = 6.25`.
    /// Returns the spectrum and the planted crossings `(tau, sign)`, sorted.
    pub fn planted<R: Rng>(rng: &mut R, crossings: usize) -> Result<(Self, Vec<(f64, i8)>)> {
        let mut atoms = Self::bulk(rng, 2.6, 0.45, 70);
        let phase = rng.random_range(0.05..0.45);
        let sign: f64 = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let mut planted = Vec::new();
        match crossings {
            0 => {
                let offset = sign * rng.random_range(0.5..0.9);
                atoms.push(Atom { branch: Branch::sine(0.25, 1, phase, offset), multiplicity: 1, character: None });
            }
            2 | 4 => {
                let freq = crossings / 2;
                let amplitude = sign * rng.random_range(0.5..0.9) / freq as f64;
                atoms.push(Atom { branch: Branch::sine(amplitude, freq, phase, 0.0), multiplicity: 1, character: None });
                let period = 1.0 / freq as f64;
                for i in 0..crossings {
                    let tau = (phase + 0.5 * period * i as f64).rem_euclid(1.0);
                    let up = (i % 2 == 0) == (sign > 0.0);
                    planted.push((tau, if up { 1 } else { -1 }));
                }
            }
            _ => return Err(Error::Precondition(format!("planted spectra support 0, 2 or 4 crossings, not {crossings}"))),
        }
        planted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut s = Self::new(format!("planted-{crossings}"), 1, 7.0, atoms)?;
        s.coexact = (0..60).map(|i| CoexactAtom { sqrt_lambda: 2.5 + 0.4 * i as f64, multiplicity: 2 }).collect();
        Ok((s, planted))
    }
}

struct OracleSide {
    kernel: Arc<dyn Kernel>,
    kind: SideKind,
    kernel_id: String,
    atoms: Vec<Atom>,
    coexact: Vec<CoexactAtom>,
    b1: u32,
    lipschitz: f64,
}

impl Side for OracleSide {
    fn kind(&self) -> SideKind {
        self.kind
    }

    fn kernel_id(&self) -> &str {
        &self.kernel_id
    }

    fn evaluate(&self, tau: f64, k: u32) -> Evaluation {
        let mut acc = NeumaierSum::new();
        match self.kind {
            SideKind::Coexact => {
                acc.add(0.5 * (self.b1 as f64 - 1.0) * self.kernel.spectral(0.0));
                for a in &self.coexact {
                    acc.add(0.5 * a.multiplicity as f64 * self.kernel.spectral(a.sqrt_lambda));
                }
            }
            kind => {
                for a in self.atoms.iter().filter(|a| a.character.is_none_or(|c| c == k)) {
                    let s = a.branch.value(tau);
                    let f = match kind {
                        SideKind::DiracOddDerivative => self.kernel.spectral_deriv(s) * a.branch.deriv(tau),
                        _ => self.kernel.spectral(s),
                    };
                    acc.add(0.5 * a.multiplicity as f64 * f);
                }
            }
        }
        Evaluation { value: acc.value(), budget: rounding_budget(acc.abs_mass()) }
    }

    fn tau_lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

impl TraceData for SyntheticSpectrum {
    fn name(&self) -> &str {
        &self.name
    }

    fn b1(&self) -> u32 {
        self.b1
    }

    fn torsion_order(&self) -> u32 {
        self.torsion_order
    }

    fn cutoff(&self) -> f64 {
        self.cutoff
    }

    fn checksum(&self) -> String {
        self.to_json().map(|j| sha256_hex(j.as_bytes())).unwrap_or_default()
    }

    fn c_y_upper(&self) -> Option<f64> {
        Some(self.derivative_bound / TAU)
    }

    fn side(&self, kernel: Arc<dyn Kernel>, kind: SideKind) -> Result<Arc<dyn Side>> {
        if kernel.parity() != kind.parity() {
            return Err(Error::ParityMismatch {
                kind: kind.to_string(),
                expected: if kind.parity() == crate::kernel::Parity::Even { "even" } else { "odd" },
            });
        }
        let d1_kernel = kernel.spectral_deriv_bound();
        let d2_kernel = kernel.support_radius() * d1_kernel;
        let lipschitz: f64 = self
            .atoms
            .iter()
            .map(|a| {
                let (d1, d2) = a.branch.derivative_bounds();
                let per = match kind {
                    SideKind::Coexact => 0.0,
                    SideKind::DiracOddDerivative => d2_kernel * d1 * d1 + d1_kernel * d2,
                    _ => d1_kernel * d1,
                };
                0.5 * a.multiplicity as f64 * per
            })
            .sum();
        Ok(Arc::new(OracleSide {
            kernel_id: kernel.id(),
            kernel,
            kind,
            atoms: self.atoms.clone(),
            coexact: self.coexact.clone(),
            b1: self.b1,
            lipschitz,
        }))
    }

    fn window_count_growth(&self, _n: u32) -> Result<(f64, f64)> {
        let total: u32 = self.atoms.iter().map(|a| a.multiplicity).sum();
        Ok((total as f64, 0.0))
    }
}

impl SyntheticSpectrum {
    /// `C_Y` implied by the declared derivative bound, `|s'| <= 2 pi C_Y`.
    pub fn implied_c_y(&self) -> f64 {
        self.derivative_bound / (2.0 * PI)
    }
}
