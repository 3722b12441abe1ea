//! Geometric sides of the trace formulas as elements of the group ring
//! `R[H_1(Y; Z)]`, with `H_1 = Z + Z/m`.
//!
//! Building a side collapses every geodesic into the coefficient of its
//! homology class `(n, t)`; evaluating at a twisting character `(tau, k)` is
//! then a sum over the few hundred classes instead of over all geodesics:
//!
//! ```text
//! Gamma(tau, k) = volume_term + sum_{(n,t)} c_{n,t} cos(2 pi (tau n + k t / m))
//! ```
//!
//! For the derivative side the coefficient already carries the factor `n`
//! and the evaluation is `-2 pi sum c_{n,t} sin(...)`, the exact `tau`
//! derivative of the odd side.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{Kernel, Parity};
use crate::spectrum::{decimal, GeodesicRecord, ManifoldData};
use crate::sum::{rounding_budget, NeumaierSum};
use crate::testfn::bspline::CardinalBSpline;
use crate::testfn::min_sinc_pow;

const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SideKind {
    Coexact,
    DiracEven,
    DiracOdd,
    DiracOddDerivative,
}

impl SideKind {
    pub const ALL: [SideKind; 4] = [SideKind::Coexact, SideKind::DiracEven, SideKind::DiracOdd, SideKind::DiracOddDerivative];

    pub fn parity(self) -> Parity {
        match self {
            SideKind::Coexact | SideKind::DiracEven => Parity::Even,
            SideKind::DiracOdd | SideKind::DiracOddDerivative => Parity::Odd,
        }
    }

    fn check(self, kernel: &dyn Kernel) -> Result<()> {
        if kernel.parity() != self.parity() {
            let expected = match self.parity() {
                Parity::Even => "even",
                Parity::Odd => "odd",
            };
            return Err(Error::ParityMismatch { kind: self.to_string(), expected });
        }
        Ok(())
    }

    /// Angular factor of one geodesic, before the character is applied.
    fn angular(self, g: &GeodesicRecord) -> f64 {
        match self {
            SideKind::Coexact => g.holonomy.cos(),
            SideKind::DiracEven => g.spin_holonomy.cos(),
            SideKind::DiracOdd => g.spin_holonomy.sin(),
            SideKind::DiracOddDerivative => g.spin_holonomy.sin() * g.free_class as f64,
        }
    }

    /// Whether the side depends on the flat connection at all.
    pub fn is_twisted(self) -> bool {
        self != SideKind::Coexact
    }
}

impl fmt::Display for SideKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SideKind::Coexact => "coexact",
            SideKind::DiracEven => "dirac_even",
            SideKind::DiracOdd => "dirac_odd",
            SideKind::DiracOddDerivative => "dirac_odd_derivative",
        };
        f.write_str(s)
    }
}

/// A spin^c structure, i.e. a character `t -> exp(2 pi i k t / m)` of the
/// torsion subgroup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpincStructure {
    pub k: u32,
    pub m: u32,
}

impl SpincStructure {
    pub fn new(k: u32, m: u32) -> Result<Self> {
        if m == 0 || k >= m {
            return Err(Error::Precondition(format!("character {k} is not a residue mod {m}")));
        }
        Ok(Self { k, m })
    }

    pub fn is_self_conjugate(&self) -> bool {
        (2 * self.k as u64) % self.m as u64 == 0
    }

    pub fn conjugate(&self) -> Self {
        Self { k: (self.m - self.k) % self.m, m: self.m }
    }
}

/// A side value together with a bound on its floating-point error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub value: f64,
    pub budget: f64,
}

/// Anything that evaluates a trace-formula side at a character.
pub trait Side: Send + Sync {
    fn kind(&self) -> SideKind;
    fn kernel_id(&self) -> &str;
    fn evaluate(&self, tau: f64, k: u32) -> Evaluation;
    /// Bound on `|d/dtau evaluate(tau, k)|`.
    fn tau_lipschitz(&self) -> f64;

    fn evaluate_grid(&self, grid: &[f64], k: u32) -> Vec<Evaluation> {
        grid.par_iter().map(|&tau| self.evaluate(tau, k)).collect()
    }
}

/// A source of geometric sides: real length-spectrum data or a planted
/// synthetic spectrum.
pub trait TraceData: Send + Sync {
    fn name(&self) -> &str;
    fn b1(&self) -> u32;
    fn torsion_order(&self) -> u32;
    /// Largest admissible support radius of a kernel.
    fn cutoff(&self) -> f64;
    fn checksum(&self) -> String;
    /// Upper bound on `C_Y`, if the data carries one.
    fn c_y_upper(&self) -> Option<f64>;
    fn side(&self, kernel: Arc<dyn Kernel>, kind: SideKind) -> Result<Arc<dyn Side>>;
    /// `(A, B)` with `#{j : |s_j(tau)| in [nu - 1/2, nu + 1/2]} <= A + B nu^2`
    /// for every `tau`, `k` and `nu >= 1/2`, using the `n`-th power windows.
    fn window_count_growth(&self, n: u32) -> Result<(f64, f64)>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCoefficient {
    pub free_class: i64,
    pub torsion_class: u32,
    #[serde(with = "decimal")]
    pub coefficient: f64,
    #[serde(with = "decimal")]
    pub abs_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormalSide {
    pub kind: SideKind,
    pub kernel_id: String,
    #[serde(with = "decimal")]
    pub cutoff: f64,
    pub checksum: String,
    pub torsion_order: u32,
    #[serde(with = "decimal")]
    pub volume_term: f64,
    #[serde(with = "decimal")]
    pub volume_mass: f64,
    pub classes: Vec<ClassCoefficient>,
}

type ClassMap = BTreeMap<(i64, u32), NeumaierSum>;

pub fn build_formal_side(data: &ManifoldData, kernel: &dyn Kernel, kind: SideKind) -> Result<FormalSide> {
    kind.check(kernel)?;
    let support = kernel.support_radius();
    if support > data.cutoff * (1.0 + 1e-12) {
        return Err(Error::SupportExceedsCutoff { support, cutoff: data.cutoff });
    }
    let (volume_term, volume_mass) = volume_term(kernel, kind, data.volume)?;
    // records are sorted by length, so everything past the support is zero
    let end = data.geodesics.partition_point(|g| g.length < support);
    let partials: Vec<ClassMap> = data.geodesics[..end]
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut map = ClassMap::new();
            for g in chunk {
                let term = g.weight() * kind.angular(g) * kernel.value(g.length);
                if term != 0.0 {
                    map.entry(class_key(kind, g)).or_default().add(term);
                }
            }
            map
        })
        .collect();
    let mut merged = ClassMap::new();
    for part in &partials {
        for (key, acc) in part {
            merged.entry(*key).or_default().merge(acc);
        }
    }
    let classes = merged
        .into_iter()
        .map(|((free_class, torsion_class), acc)| ClassCoefficient {
            free_class,
            torsion_class,
            coefficient: acc.value(),
            abs_mass: acc.abs_mass(),
        })
        .collect();
    Ok(FormalSide {
        kind,
        kernel_id: kernel.id(),
        cutoff: data.cutoff,
        checksum: data.checksum.clone(),
        torsion_order: data.torsion_order,
        volume_term,
        volume_mass,
        classes,
    })
}

fn class_key(kind: SideKind, g: &GeodesicRecord) -> (i64, u32) {
    if kind.is_twisted() {
        (g.free_class, g.torsion_class)
    } else {
        (0, 0)
    }
}

/// Volume term and the absolute mass of its pieces.
fn volume_term(kernel: &dyn Kernel, kind: SideKind, volume: f64) -> Result<(f64, f64)> {
    let scale = volume / (2.0 * PI);
    match kind {
        SideKind::DiracEven => {
            let (h0, h2) = kernel.volume_data()?;
            Ok((scale * (0.25 * h0 - h2), scale * (0.25 * h0.abs() + h2.abs())))
        }
        SideKind::Coexact => {
            let (h0, h2) = kernel.volume_data()?;
            Ok((scale * (h0 - h2), scale * (h0.abs() + h2.abs())))
        }
        SideKind::DiracOdd | SideKind::DiracOddDerivative => Ok((0.0, 0.0)),
    }
}

/// `2 pi (tau n + k t / m)`, reduced to `[0, 2 pi)` before scaling.
#[inline]
fn character_angle(tau: f64, n: i64, k: u32, t: u32, m: u32) -> f64 {
    let tors = ((k as u64 * t as u64) % m as u64) as f64 / m as f64;
    let phase = tau * n as f64 + tors;
    TAU * (phase - phase.floor())
}

impl FormalSide {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn max_free_class(&self) -> i64 {
        self.classes.iter().map(|c| c.free_class.abs()).max().unwrap_or(0)
    }
}

impl Side for FormalSide {
    fn kind(&self) -> SideKind {
        self.kind
    }

    fn kernel_id(&self) -> &str {
        &self.kernel_id
    }

    fn evaluate(&self, tau: f64, k: u32) -> Evaluation {
        let m = self.torsion_order;
        let mut acc = NeumaierSum::new();
        let mut mass = self.volume_mass;
        acc.add(self.volume_term);
        for c in &self.classes {
            let angle = character_angle(tau, c.free_class, k, c.torsion_class, m);
            let factor = match self.kind {
                SideKind::DiracOddDerivative => -TAU * angle.sin(),
                _ => angle.cos(),
            };
            acc.add(c.coefficient * factor);
            // coefficient rounding plus the error of the angle itself
            let scale = if self.kind == SideKind::DiracOddDerivative { TAU } else { 1.0 };
            mass += scale * c.abs_mass * (2.0 + TAU * (c.free_class.unsigned_abs() as f64 + 1.0));
        }
        Evaluation { value: acc.value(), budget: rounding_budget(mass + acc.abs_mass()) }
    }

    fn tau_lipschitz(&self) -> f64 {
        let base: f64 = self.classes.iter().map(|c| c.coefficient.abs() * c.free_class.unsigned_abs() as f64).sum();
        match self.kind {
            SideKind::Coexact => 0.0,
            SideKind::DiracOddDerivative => TAU * TAU * base,
            _ => TAU * base,
        }
    }
}

/// Per-`tau` sum over all geodesics, with no class collapsing. Reference
/// implementation for [`FormalSide::evaluate`].
pub fn direct_evaluate(data: &ManifoldData, kernel: &dyn Kernel, kind: SideKind, tau: f64, k: u32) -> Result<(f64, f64)> {
    kind.check(kernel)?;
    let (vol, _) = volume_term(kernel, kind, data.volume)?;
    let mut acc = NeumaierSum::new();
    acc.add(vol);
    for g in &data.geodesics {
        let (n, t) = class_key(kind, g);
        let angle = character_angle(tau, n, k, t, data.torsion_order);
        let factor = match kind {
            SideKind::DiracOddDerivative => -TAU * angle.sin(),
            _ => angle.cos(),
        };
        acc.add(g.weight() * kind.angular(g) * kernel.value(g.length) * factor);
    }
    Ok((acc.value(), acc.abs_mass()))
}

/// `|d/dtau odd(tau) - derivative(tau)|` by a central difference with step
/// `1e-5`.
pub fn derivative_consistency(odd: &FormalSide, derivative: &FormalSide, tau: f64, k: u32) -> Result<f64> {
    if odd.kind != SideKind::DiracOdd || derivative.kind != SideKind::DiracOddDerivative {
        return Err(Error::Precondition("need a dirac_odd and a dirac_odd_derivative side".into()));
    }
    if odd.kernel_id != derivative.kernel_id || odd.checksum != derivative.checksum || odd.cutoff != derivative.cutoff {
        return Err(Error::ProvenanceMismatch(format!(
            "{} / {} built from different data or test functions",
            odd.kernel_id, derivative.kernel_id
        )));
    }
    let h = 1e-5;
    let fd = (odd.evaluate(tau + h, k).value - odd.evaluate(tau - h, k).value) / (2.0 * h);
    Ok((fd - derivative.evaluate(tau, k).value).abs())
}

impl TraceData for ManifoldData {
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
        self.checksum.clone()
    }

    fn c_y_upper(&self) -> Option<f64> {
        self.c_y_upper
    }

    fn side(&self, kernel: Arc<dyn Kernel>, kind: SideKind) -> Result<Arc<dyn Side>> {
        Ok(Arc::new(build_formal_side(self, kernel.as_ref(), kind)?))
    }

    fn window_count_growth(&self, n: u32) -> Result<(f64, f64)> {
        // Gamma_{H_{n,nu}} <= vol/2pi (B(0)/2 - 2 B''(0) + 2 B(0) nu^2) + S_Y with
        // S_Y = sum weight * 2 B_n(l): |cos| <= 1 on every angular factor.
        if n % 2 != 0 {
            return Err(Error::Precondition(format!("window counts need an even power, got {n}")));
        }
        let b = CardinalBSpline::new(n);
        if n as f64 > self.cutoff {
            return Err(Error::SupportExceedsCutoff { support: n as f64, cutoff: self.cutoff });
        }
        let mut s_y = NeumaierSum::new();
        for g in &self.geodesics {
            s_y.add(g.weight() * 2.0 * b.value(g.length));
        }
        let scale = self.volume / (2.0 * PI);
        let a = scale * (0.5 * b.value(0.0) - 2.0 * b.derivative(0.0, 2)) + s_y.value();
        let bb = scale * 2.0 * b.value(0.0);
        let factor = 2.0 / min_sinc_pow(n, 0.5)? * (1.0 + 1e-12);
        Ok((factor * a + 1e-9, factor * bb))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfn::TestFunction;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn data() -> ManifoldData {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        ManifoldData::random(&mut rng, 3000, 7, 7.0, 4).unwrap()
    }

    #[test]
    fn parity_and_support_are_enforced() {
        let d = data();
        let k7 = TestFunction::conv_x(7).unwrap();
        assert!(matches!(build_formal_side(&d, &k7, SideKind::DiracEven), Err(Error::ParityMismatch { .. })));
        let k8 = TestFunction::conv_x(8).unwrap();
        assert!(matches!(build_formal_side(&d, &k8, SideKind::DiracOdd), Err(Error::SupportExceedsCutoff { .. })));
    }

    #[test]
    fn single_class_hand_sum() {
        let g = GeodesicRecord::prime(1.3, 0.4, 1, 0);
        let d = ManifoldData::new("one", 2.0, 1, 1, 7.0, None, vec![g]).unwrap();
        let h = TestFunction::conv(6).unwrap();
        let side = build_formal_side(&d, &h, SideKind::DiracEven).unwrap();
        assert_eq!(side.classes.len(), 1);
        let expect = g.weight() * 0.4f64.cos() * h.value(1.3);
        assert!((side.classes[0].coefficient - expect).abs() < 1e-16);
        let vol = 2.0 / (2.0 * PI) * (0.25 * 11.0 / 40.0 + 1.0 / 8.0);
        assert!((side.volume_term - vol).abs() < 1e-15);
        // d/dtau of c cos(2 pi tau) + vol
        let k7 = TestFunction::conv_x(7).unwrap();
        let odd = build_formal_side(&d, &k7, SideKind::DiracOdd).unwrap();
        let der = build_formal_side(&d, &k7, SideKind::DiracOddDerivative).unwrap();
        let c = g.weight() * 0.4f64.sin() * k7.value(1.3);
        let analytic = -TAU * c * (TAU * 0.3).sin();
        assert!((der.evaluate(0.3, 0).value - analytic).abs() < 1e-14);
        assert!(derivative_consistency(&odd, &der, 0.3, 0).unwrap() < 1e-8);
    }

    #[test]
    fn grid_matches_pointwise_bitwise() {
        let d = data();
        let h = TestFunction::conv(6).unwrap();
        let side = build_formal_side(&d, &h, SideKind::DiracEven).unwrap();
        let grid: Vec<f64> = (0..500).map(|i| i as f64 / 499.0).collect();
        let vals = side.evaluate_grid(&grid, 3);
        for (tau, v) in grid.iter().zip(&vals) {
            assert_eq!(v.value.to_bits(), side.evaluate(*tau, 3).value.to_bits());
        }
    }

    #[test]
    fn conjugation_symmetry() {
        let d = data();
        let h = TestFunction::conv(6).unwrap();
        let side = build_formal_side(&d, &h, SideKind::DiracEven).unwrap();
        for &(tau, k) in &[(0.1, 0u32), (0.37, 2), (0.8, 5)] {
            let a = side.evaluate(tau, k);
            let b = side.evaluate(1.0 - tau, (7 - k) % 7);
            assert!((a.value - b.value).abs() <= 1e-12 + a.budget + b.budget);
        }
    }

    #[test]
    fn derivative_kind_ignores_null_classes() {
        let g = GeodesicRecord::prime(1.1, 0.9, 0, 0);
        let d = ManifoldData::new("null", 2.0, 1, 1, 7.0, None, vec![g]).unwrap();
        let k7 = TestFunction::conv_x(7).unwrap();
        let der = build_formal_side(&d, &k7, SideKind::DiracOddDerivative).unwrap();
        assert!(der.classes.is_empty());
        assert_eq!(der.evaluate(0.4, 0).value, 0.0);
    }

    #[test]
    fn json_roundtrip() {
        let d = data();
        let k7 = TestFunction::conv_x(7).unwrap();
        let side = build_formal_side(&d, &k7, SideKind::DiracOdd).unwrap();
        let back = FormalSide::from_json(&side.to_json().unwrap()).unwrap();
        assert_eq!(back, side);
    }

    #[test]
    fn provenance_mismatch_detected() {
        let d = data();
        let k7 = TestFunction::conv_x(7).unwrap();
        let k5 = TestFunction::conv_x(5).unwrap();
        let odd = build_formal_side(&d, &k7, SideKind::DiracOdd).unwrap();
        let der = build_formal_side(&d, &k5, SideKind::DiracOddDerivative).unwrap();
        assert!(matches!(derivative_consistency(&odd, &der, 0.1, 0), Err(Error::ProvenanceMismatch(_))));
    }

    #[test]
    fn spinc_conjugation() {
        let s = SpincStructure::new(3, 7).unwrap();
        assert_eq!(s.conjugate().k, 4);
        assert!(!s.is_self_conjugate());
        assert!(SpincStructure::new(2, 4).unwrap().is_self_conjugate());
        assert!(SpincStructure::new(7, 7).is_err());
    }
}
