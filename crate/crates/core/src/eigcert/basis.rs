//! The space `F` of bound functions and the kernels derived from it.
//!
//! Each basis function is a symmetrized shift of `h = (1/a) B_2(x/a)`, the
//! convolution square of `(1/2a) 1_[-a,a]`:
//!
//! ```text
//! phi_c = h(x - c) + h(x + c)   (c > 0),     phi_0 = h,     h^(t) = sinc^2(a t).
//! ```
//!
//! `phi_i * phi_j` is a sum of shifts of `(1/a) B_4(x/a)` and has support
//! radius `c_i + c_j + 4a`.

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{Kernel, Parity};
use crate::testfn::bspline::CardinalBSpline;
use crate::testfn::sinc::{sinc, sinc_deriv};
use crate::testfn::TestFunction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundBasis {
    pub a: f64,
    pub shifts: Vec<f64>,
}

impl BoundBasis {
    pub fn new(a: f64, shifts: Vec<f64>) -> Result<Self> {
        if !(a > 0.0) || shifts.is_empty() || shifts.iter().any(|c| !(*c >= 0.0)) {
            return Err(Error::Precondition("basis needs a > 0 and at least one shift c >= 0".into()));
        }
        Ok(Self { a, shifts })
    }

    /// `n` equally spaced shifts `0, a, ..., (n-1) a` with the largest `a`
    /// that keeps every product inside `[-R, R]`: `2 (n-1) a + 4a = R`.
    pub fn equally_spaced(cutoff: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("basis size must be >= 1".into()));
        }
        let a = cutoff / (2.0 * (n as f64 + 1.0));
        Self::new(a, (0..n).map(|i| i as f64 * a).collect())
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    pub fn support_radius(&self) -> f64 {
        2.0 * self.shifts.iter().copied().fold(0.0, f64::max) + 4.0 * self.a
    }

    pub fn check_support(&self, cutoff: f64) -> Result<()> {
        let support = self.support_radius();
        if support > cutoff * (1.0 + 1e-12) {
            return Err(Error::SupportExceedsCutoff { support, cutoff });
        }
        Ok(())
    }

    /// `phi_i^(t)` for every basis element.
    pub fn transform(&self, t: f64) -> DVector<f64> {
        let base = sinc(self.a * t).powi(2);
        DVector::from_iterator(self.len(), self.shifts.iter().map(|&c| shift_weight(c, t) * base))
    }

    pub fn product(&self, i: usize, j: usize) -> BasisProduct {
        BasisProduct::new(self.a, self.shifts[i], self.shifts[j])
    }
}

fn shift_weight(c: f64, t: f64) -> f64 {
    if c > 0.0 {
        2.0 * (c * t).cos()
    } else {
        1.0
    }
}

fn shift_weight_deriv(c: f64, t: f64) -> f64 {
    if c > 0.0 {
        -2.0 * c * (c * t).sin()
    } else {
        0.0
    }
}

fn shift_set(c: f64) -> Vec<f64> {
    if c > 0.0 {
        vec![c, -c]
    } else {
        vec![0.0]
    }
}

/// `phi_i * phi_j` for two basis elements.
#[derive(Debug, Clone)]
pub struct BasisProduct {
    a: f64,
    ci: f64,
    cj: f64,
    offsets: Vec<f64>,
    spline: Arc<CardinalBSpline>,
}

impl BasisProduct {
    pub fn new(a: f64, ci: f64, cj: f64) -> Self {
        let mut offsets = Vec::new();
        for s in shift_set(ci) {
            for t in shift_set(cj) {
                offsets.push(s + t);
            }
        }
        Self { a, ci, cj, offsets, spline: Arc::new(CardinalBSpline::new(4)) }
    }

    fn shifted(&self, x: f64, d: usize) -> f64 {
        let inv = 1.0 / self.a;
        self.offsets
            .iter()
            .map(|o| self.spline.derivative((x - o) * inv, d) * inv.powi(d as i32 + 1))
            .sum()
    }

    fn factor(&self, c: f64, t: f64) -> (f64, f64) {
        let u = sinc(self.a * t);
        let du = self.a * sinc_deriv(self.a * t, 1);
        let w = shift_weight(c, t);
        (w * u * u, shift_weight_deriv(c, t) * u * u + w * 2.0 * u * du)
    }
}

impl Kernel for BasisProduct {
    fn id(&self) -> String {
        format!("basis_product(a={},c={},{})", self.a, self.ci, self.cj)
    }

    fn parity(&self) -> Parity {
        Parity::Even
    }

    fn support_radius(&self) -> f64 {
        self.ci + self.cj + 4.0 * self.a
    }

    fn value(&self, x: f64) -> f64 {
        self.shifted(x, 0)
    }

    fn volume_data(&self) -> Result<(f64, f64)> {
        Ok((self.shifted(0.0, 0), self.shifted(0.0, 2)))
    }

    fn spectral(&self, t: f64) -> f64 {
        self.factor(self.ci, t).0 * self.factor(self.cj, t).0
    }

    fn spectral_deriv(&self, t: f64) -> f64 {
        let (fi, dfi) = self.factor(self.ci, t);
        let (fj, dfj) = self.factor(self.cj, t);
        dfi * fj + fi * dfj
    }

    fn spectral_deriv_bound(&self) -> f64 {
        self.support_radius() * self.offsets.len() as f64
    }
}

/// `G = H + H''/L^2`, so that `G^(t) = H^(t) (1 - t^2/L^2)` is `<= 0` off
/// `(-L, L)` whenever `H^ >= 0`.
#[derive(Debug, Clone)]
pub struct LaplaceShift {
    h: TestFunction,
    l: f64,
}

impl LaplaceShift {
    pub fn new(h: TestFunction, l: f64) -> Result<Self> {
        if h.parity() != Parity::Even || !(l > 0.0) {
            return Err(Error::Precondition("LaplaceShift needs an even H and L > 0".into()));
        }
        Ok(Self { h, l })
    }
}

impl Kernel for LaplaceShift {
    fn id(&self) -> String {
        format!("{}_laplace:{}", self.h, self.l)
    }

    fn parity(&self) -> Parity {
        Parity::Even
    }

    fn support_radius(&self) -> f64 {
        self.h.support_radius()
    }

    fn value(&self, x: f64) -> f64 {
        self.h.deriv(x, 0) + self.h.deriv(x, 2) / (self.l * self.l)
    }

    fn volume_data(&self) -> Result<(f64, f64)> {
        let l2 = self.l * self.l;
        Ok((self.h.deriv(0.0, 0) + self.h.deriv(0.0, 2) / l2, self.h.deriv(0.0, 2) + self.h.deriv(0.0, 4) / l2))
    }

    fn spectral(&self, t: f64) -> f64 {
        self.h.spectral(t) * (1.0 - t * t / (self.l * self.l))
    }

    fn spectral_deriv(&self, t: f64) -> f64 {
        let l2 = self.l * self.l;
        self.h.spectral_deriv(t) * (1.0 - t * t / l2) - 2.0 * t * self.h.spectral(t) / l2
    }

    fn spectral_deriv_bound(&self) -> f64 {
        // rho (|H|_1 + |H''|_1 / L^2), |H''|_1 from a sampled sup with slack;
        // only used for grid padding
        let rho = self.h.support_radius();
        let sup2 = (0..=2000)
            .map(|i| self.h.deriv(rho * i as f64 / 2000.0, 2).abs())
            .fold(0.0, f64::max);
        rho * (self.h.fourier_deriv_bound(0) + 2.0 * rho * 1.1 * sup2 / (self.l * self.l))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::GaussLegendre;

    fn fourier_quad(k: &dyn Kernel, t: f64) -> f64 {
        let r = k.support_radius();
        let gl = GaussLegendre::new(12);
        gl.integrate_composite(-r, r, 400, |x| k.value(x) * (t * x).cos())
    }

    #[test]
    fn product_transform_matches_quadrature() {
        let basis = BoundBasis::equally_spaced(7.0, 6).unwrap();
        for (i, j) in [(0, 0), (0, 3), (2, 5), (5, 5)] {
            let g = basis.product(i, j);
            for &t in &[0.0, 0.7, 2.3, 5.1] {
                let q = fourier_quad(&g, t);
                assert!((q - g.spectral(t)).abs() < 1e-9, "({i},{j}) t={t}: {q} vs {}", g.spectral(t));
                let v = basis.transform(t);
                assert!((v[i] * v[j] - g.spectral(t)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn support_constraint() {
        let basis = BoundBasis::equally_spaced(7.0, 8).unwrap();
        assert!((basis.support_radius() - 7.0).abs() < 1e-12);
        basis.check_support(7.0).unwrap();
        let wide = BoundBasis::new(4.0, vec![0.0]).unwrap();
        assert!(matches!(wide.check_support(7.0), Err(Error::SupportExceedsCutoff { .. })));
    }

    #[test]
    fn laplace_shift_transform() {
        let h = TestFunction::conv(6).unwrap();
        let g = LaplaceShift::new(h.clone(), 0.8).unwrap();
        for &t in &[0.0, 0.5, 0.8, 1.7] {
            let q = fourier_quad(&g, t);
            assert!((q - g.spectral(t)).abs() < 1e-9, "t={t}");
        }
        assert!(g.spectral(0.9) < 0.0);
        let (g0, g2) = g.volume_data().unwrap();
        let h = 1e-3;
        let fd = (g.value(h) - 2.0 * g.value(0.0) + g.value(-h)) / (h * h);
        assert!((g0 - g.value(0.0)).abs() < 1e-15);
        assert!((fd - g2).abs() < 1e-4);
    }

    #[test]
    fn derivative_of_product_spectrum() {
        let g = BasisProduct::new(0.4, 0.8, 1.2);
        let h = 1e-6;
        for &t in &[0.1, 1.4, 3.0] {
            let fd = (g.spectral(t + h) - g.spectral(t - h)) / (2.0 * h);
            assert!((fd - g.spectral_deriv(t)).abs() < 1e-7);
        }
    }
}
