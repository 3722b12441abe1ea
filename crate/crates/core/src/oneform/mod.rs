//! Explicit upper bounds on the `C^0` norm of a harmonic-class 1-form, by
//! optimizing equivariant piecewise-linear functions on a triangulated
//! Dirichlet domain, plus two elementary lower bounds.

pub mod domain;
pub mod geometry;

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::ManifoldData;

pub use domain::{triangulate, DomainComplex, DomainSpec};
pub use geometry::{
    center_tet, circumcenter, horizontal_stretch, lipschitz_bound, minkowski_dist, radial_project, GeodesicTet, GradientOperator, HPoint,
    Isometry, MinkowskiVec,
};

const GOLDEN: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub bound: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub domain: String,
    pub seed: u64,
    pub iterations: usize,
    pub tetrahedra: usize,
    pub per_tet: Vec<f64>,
    /// Maximum of `per_tet`.
    pub bound: f64,
    /// `bound` rounded up to four decimals; the reported `C_Y` upper bound.
    pub rounded: f64,
    pub initial_bound: f64,
    pub values: Vec<f64>,
    pub equivariance_residual: i64,
    pub log: Vec<IterationRecord>,
}

impl LipschitzReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Round up to four decimals.
pub fn round_up_4(x: f64) -> f64 {
    let r = (x * 1e4).ceil() / 1e4;
    if r < x {
        r + 1e-4
    } else {
        r
    }
}

/// Max-of-tetrahedra objective on the free value slots.
pub struct Objective {
    ops: Vec<GradientOperator>,
    corners: Vec<[(usize, f64); 4]>,
}

impl Objective {
    pub fn new(complex: &DomainComplex) -> Result<Self> {
        let ops = (0..complex.tets.len())
            .into_par_iter()
            .map(|i| GradientOperator::new(&complex.tetrahedron(i)?))
            .collect::<Result<Vec<_>>>()?;
        let corners = complex
            .tets
            .iter()
            .map(|t| t.map(|n| (complex.nodes[n].slot, complex.nodes[n].offset as f64)))
            .collect();
        Ok(Self { ops, corners })
    }

    pub fn per_tet(&self, values: &[f64]) -> Vec<f64> {
        self.ops
            .iter()
            .zip(&self.corners)
            .map(|(op, c)| op.bound(c.map(|(slot, off)| values[slot] + off)))
            .collect()
    }

    pub fn value(&self, values: &[f64]) -> f64 {
        self.per_tet(values).into_iter().fold(0.0, f64::max)
    }

    fn along(&self, x: &[f64], d: &[f64], t: f64, buf: &mut Vec<f64>) -> f64 {
        buf.clear();
        buf.extend(x.iter().zip(d).map(|(a, b)| a + t * b));
        self.value(buf)
    }
}

/// Golden-section minimization of a function on `[lo, hi]`.
fn golden_section(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Random-line descent from a random equivariant initial assignment. The
/// bound never increases: a line step is taken only when it improves.
pub fn optimize(complex: &DomainComplex, iterations: usize, seed: u64) -> Result<LipschitzReport> {
    let residual = complex.equivariance_residual();
    if residual != 0 {
        return Err(Error::Infeasible(format!("equivariance residual {residual}")));
    }
    let objective = Objective::new(complex)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Uniform::new(0.0, 1.0).map_err(|e| Error::Precondition(e.to_string()))?;
    let mut x: Vec<f64> = (0..complex.slots).map(|_| unit.sample(&mut rng)).collect();
    let mut best = objective.value(&x);
    let initial_bound = best;
    let mut scale = 0.5;
    let mut log = Vec::with_capacity(iterations + 1);
    log.push(IterationRecord { iteration: 0, bound: best, step: 0.0 });
    let mut buf = Vec::with_capacity(x.len());
    for it in 1..=iterations {
        let mut d: Vec<f64> = (0..x.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        d.iter_mut().for_each(|v| *v /= norm);
        // The objective is a maximum of norms of affine maps, hence convex on
        // every line; golden section finds the line minimum.
        let (t, f) = golden_section(|t| objective.along(&x, &d, t, &mut buf), -scale, scale, 60);
        let mut step = 0.0;
        if f < best {
            x.iter_mut().zip(&d).for_each(|(a, b)| *a += t * b);
            best = objective.value(&x);
            step = t;
        }
        if t.abs() > 0.9 * scale {
            scale *= 2.0;
        } else if t.abs() < 0.1 * scale {
            scale = (scale * 0.5).max(1e-9);
        }
        log.push(IterationRecord { iteration: it, bound: best, step });
    }
    let per_tet = objective.per_tet(&x);
    let bound = per_tet.iter().copied().fold(0.0, f64::max);
    Ok(LipschitzReport {
        domain: complex.name.clone(),
        seed,
        iterations,
        tetrahedra: complex.tets.len(),
        per_tet,
        bound,
        rounded: round_up_4(bound),
        initial_bound,
        values: complex.node_values(&x),
        equivariance_residual: residual,
        log,
    })
}

/// `sup |[gamma]| / l(gamma)` over the listed geodesics.
pub fn lower_bound_geodesic(data: &ManifoldData) -> f64 {
    data.geodesics.iter().map(|g| g.free_class.unsigned_abs() as f64 / g.length).fold(0.0, f64::max)
}

/// `pi Th / vol`.
pub fn lower_bound_thurston(thurston_norm: f64, volume: f64) -> Result<f64> {
    if !(thurston_norm >= 0.0 && volume > 0.0) {
        return Err(Error::Precondition("need Thurston norm >= 0 and volume > 0".into()));
    }
    Ok(PI * thurston_norm / volume)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_iterations_reports_initial_assignment() {
        let c = triangulate(&DomainSpec::cube(0.2, [1, 0, 0]).unwrap()).unwrap();
        let r = optimize(&c, 0, 4).unwrap();
        assert_eq!(r.bound, r.initial_bound);
        assert_eq!(r.log.len(), 1);
    }

    #[test]
    fn monotone_and_reproducible() {
        let c = triangulate(&DomainSpec::cube(0.2, [1, 0, 0]).unwrap()).unwrap();
        let r = optimize(&c, 300, 9).unwrap();
        assert!(r.log.windows(2).all(|w| w[1].bound <= w[0].bound));
        assert!(r.rounded >= r.bound && r.rounded - r.bound < 1e-4 + 1e-15);
        assert_eq!(optimize(&c, 300, 9).unwrap(), r);
    }

    #[test]
    fn thurston_bounds() {
        assert!((lower_bound_thurston(2.0, 3.1663).unwrap() - 1.9845).abs() < 1e-3);
        assert!((lower_bound_thurston(4.0, 6.2391).unwrap() - 2.0138).abs() < 1e-3);
        assert_eq!(lower_bound_thurston(0.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn rounding_is_upward() {
        assert_eq!(round_up_4(3.51501), 3.5151);
        assert_eq!(round_up_4(3.5151), 3.5151);
    }
}
