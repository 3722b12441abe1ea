//! Test functions built from convolution powers of `1/2 * 1_[-1,1]`.
//!
//! A [`TestFunction`] is `H(x) = g(x / lambda)` with
//!
//! ```text
//! g(y) = [y] * [2 cos(nu y)] * B_n(y),      B_n = (1/2 * 1_[-1,1])^{*n},
//! ```
//!
//! where the bracketed factors are optional. The Fourier convention is
//! `H^(t) = int H(x) e^{-itx} dx`, so `B_n^ = sinc^n`, the modulation turns it
//! into `sinc^n(t - nu) + sinc^n(t + nu)`, the `y` prefactor into `i d/dt`, and
//! stretching gives `H^(t) = lambda * g^(lambda t)`.

pub mod bspline;
pub mod sinc;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{Kernel, Parity};
use crate::quad::GaussLegendre;
use bspline::CardinalBSpline;
use sinc::sinc_pow_deriv;

/// First positive zero of `sinc'` (root of `tan t = t`).
pub const SINC_DERIV_FIRST_ZERO: f64 = 4.493_409_457_909_064;

#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TestFunction {
    base_power: u32,
    modulation: Option<f64>,
    stretch: f64,
    odd_multiplier: bool,
    spline: Arc<CardinalBSpline>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TestFunction({})", self)
    }
}

impl PartialEq for TestFunction {
    fn eq(&self, other: &Self) -> bool {
        self.base_power == other.base_power
            && self.modulation == other.modulation
            && self.stretch == other.stretch
            && self.odd_multiplier == other.odd_multiplier
    }
}

impl TestFunction {
    pub fn new(base_power: u32, modulation: Option<f64>, stretch: f64, odd_multiplier: bool) -> Result<Self> {
        if !(1..=bspline::MAX_ORDER).contains(&base_power) {
            return Err(Error::InvalidTestFunction(format!(
                "base power {base_power} outside 1..={}",
                bspline::MAX_ORDER
            )));
        }
        if let Some(nu) = modulation {
            if !(nu >= 0.0 && nu.is_finite()) {
                return Err(Error::InvalidTestFunction(format!("modulation {nu} must be a finite real >= 0")));
            }
        }
        if !(stretch > 0.0 && stretch.is_finite()) {
            return Err(Error::InvalidTestFunction(format!("stretch {stretch} must be > 0")));
        }
        Ok(Self {
            base_power,
            modulation,
            stretch,
            odd_multiplier,
            spline: Arc::new(CardinalBSpline::new(base_power)),
        })
    }

    /// `(1/2 * 1_[-1,1])^{*n}`.
    pub fn conv(n: u32) -> Result<Self> {
        Self::new(n, None, 1.0, false)
    }

    /// `x * (1/2 * 1_[-1,1])^{*n}`.
    pub fn conv_x(n: u32) -> Result<Self> {
        Self::new(n, None, 1.0, true)
    }

    /// `2 cos(nu x) * (1/2 * 1_[-1,1])^{*n}`.
    pub fn conv_mod(n: u32, nu: f64) -> Result<Self> {
        Self::new(n, Some(nu), 1.0, false)
    }

    pub fn with_stretch(&self, stretch: f64) -> Result<Self> {
        Self::new(self.base_power, self.modulation, stretch, self.odd_multiplier)
    }

    pub fn with_modulation(&self, nu: Option<f64>) -> Result<Self> {
        Self::new(self.base_power, nu, self.stretch, self.odd_multiplier)
    }

    pub fn base_power(&self) -> u32 {
        self.base_power
    }

    pub fn modulation(&self) -> Option<f64> {
        self.modulation
    }

    pub fn stretch(&self) -> f64 {
        self.stretch
    }

    pub fn odd_multiplier(&self) -> bool {
        self.odd_multiplier
    }

    pub fn parity(&self) -> Parity {
        if self.odd_multiplier {
            Parity::Odd
        } else {
            Parity::Even
        }
    }

    pub fn support_radius(&self) -> f64 {
        self.stretch * self.base_power as f64
    }

    pub fn value(&self, x: f64) -> f64 {
        self.deriv(x, 0)
    }

    /// Time-domain derivative `H^{(d)}(x)`, `d <= 4`.
    pub fn deriv(&self, x: f64, d: usize) -> f64 {
        assert!(d <= 4, "time-domain derivatives are available up to order 4");
        let y = x / self.stretch;
        if !(y.abs() < self.base_power as f64) {
            return 0.0;
        }
        let mut acc = 0.0;
        let mut binom = 1.0;
        for k in 0..=d {
            if k > 0 {
                binom = binom * (d + 1 - k) as f64 / k as f64;
            }
            acc += binom * self.multiplier_deriv(y, k) * self.spline.derivative(y, d - k);
        }
        acc / self.stretch.powi(d as i32)
    }

    /// k-th derivative of `[y] * [2 cos(nu y)]`.
    fn multiplier_deriv(&self, y: f64, k: usize) -> f64 {
        let cos_part = |j: usize| -> f64 {
            match self.modulation {
                Some(nu) => 2.0 * nu.powi(j as i32) * (nu * y + j as f64 * std::f64::consts::FRAC_PI_2).cos(),
                None => {
                    if j == 0 {
                        1.0
                    } else {
                        0.0
                    }
                }
            }
        };
        if self.odd_multiplier {
            // (y c)^{(k)} = y c^{(k)} + k c^{(k-1)}
            let mut v = y * cos_part(k);
            if k > 0 {
                v += k as f64 * cos_part(k - 1);
            }
            v
        } else {
            cos_part(k)
        }
    }

    /// d-th derivative of the unstretched real profile: `g^` for even
    /// functions, `-i g^` for odd ones.
    fn profile_deriv(&self, s: f64, d: usize) -> f64 {
        let order = if self.odd_multiplier { d + 1 } else { d };
        match self.modulation {
            Some(nu) => sinc_pow_deriv(s - nu, self.base_power, order) + sinc_pow_deriv(s + nu, self.base_power, order),
            None => sinc_pow_deriv(s, self.base_power, order),
        }
    }

    /// Real spectral profile derivative of the stretched function:
    /// `d^d/dt^d H^(t)` (even) or `d^d/dt^d (-i K^(t))` (odd).
    pub fn spectral_deriv_order(&self, t: f64, d: usize) -> f64 {
        assert!(d <= 3, "spectral derivatives are available up to order 3");
        let l = self.stretch;
        l.powi(d as i32 + 1) * self.profile_deriv(l * t, d)
    }

    pub fn fourier(&self, t: f64) -> Complex64 {
        self.wrap(self.spectral_deriv_order(t, 0))
    }

    /// `d^order/dt^order H^(t)` for `order` in {1, 2} (order 0 is accepted too).
    pub fn fourier_deriv(&self, t: f64, order: usize) -> Result<Complex64> {
        if order > 2 {
            return Err(Error::Precondition(format!("fourier_deriv order {order} not in {{0, 1, 2}}")));
        }
        Ok(self.wrap(self.spectral_deriv_order(t, order)))
    }

    fn wrap(&self, v: f64) -> Complex64 {
        if self.odd_multiplier {
            Complex64::new(0.0, v)
        } else {
            Complex64::new(v, 0.0)
        }
    }

    /// `H(0)` of an even test function.
    pub fn value_at_zero(&self) -> f64 {
        self.deriv(0.0, 0)
    }

    /// Exact `H''(0)`; feeds the volume terms of the even trace formulas.
    pub fn second_deriv_at_zero(&self) -> Result<f64> {
        if self.odd_multiplier {
            return Err(Error::OddVolumeTerm);
        }
        Ok(self.deriv(0.0, 2))
    }

    /// Upper bound on `|d^order/dt^order H^(t)|` valid for every real `t`,
    /// from `|H^{(k)}(t)| <= int |x|^k |H(x)| dx`.
    pub fn fourier_deriv_bound(&self, order: usize) -> f64 {
        let rho = self.support_radius();
        let mut l1 = self.stretch;
        if self.modulation.is_some() {
            l1 *= 2.0;
        }
        if self.odd_multiplier {
            l1 *= self.base_power as f64;
        }
        rho.powi(order as i32) * l1
    }

    /// `(C, t0)` with `|d^order/dt^order H^(t)| <= C / t^n` for `t >= t0`.
    pub fn decay_envelope(&self, order: usize) -> (f64, f64) {
        (self.tail_envelope(order), self.tail_start())
    }

    fn tail_envelope(&self, order: usize) -> f64 {
        let n = self.base_power;
        let j = if self.odd_multiplier { order + 1 } else { order };
        // |(sinc^n)^{(j)}(s)| <= M / |s|^n for |s| >= 1
        let mut m = 0.0;
        let mut binom = 1.0;
        for i in 0..=j {
            if i > 0 {
                binom = binom * (j + 1 - i) as f64 / i as f64;
            }
            let rising: f64 = (0..i).map(|q| (n + q as u32) as f64).product();
            m += binom * (n as f64).powi((j - i) as i32) * rising;
        }
        let shifts = if self.modulation.is_some() { 2.0 } else { 1.0 };
        let l = self.stretch;
        // |s - nu| >= l t / 2 once t >= tail_start
        l.powi(order as i32 + 1) * shifts * m * 2f64.powi(n as i32) / l.powi(n as i32)
    }

    fn tail_start(&self) -> f64 {
        let nu = self.modulation.unwrap_or(0.0);
        ((2.0 * nu).max(2.0) / self.stretch).max(1.0)
    }

    /// `int (|H^|^2 + |H^'|^2 + |H^''|^2) (1 + t^2)^delta dt`, by composite
    /// Gauss-Legendre on `[-T, T]` plus an explicit bound on the tail.
    pub fn regularity_norm(&self, delta: f64) -> Result<RegularityNorm> {
        if !(delta > 2.5) {
            return Err(Error::Precondition(format!("delta = {delta} must exceed 5/2")));
        }
        let n = self.base_power as f64;
        if 2.0 * n - 2.0 * delta - 1.0 <= 0.0 {
            return Err(Error::Divergent { decay: n, delta });
        }
        let cutoff = self.tail_start().max(64.0 + 4.0 * self.modulation.unwrap_or(0.0));
        let panels = (cutoff * 4.0).ceil() as usize;
        let gl = GaussLegendre::new(16);
        let integrand = |t: f64| {
            let w = (1.0 + t * t).powf(delta);
            (0..3).map(|d| self.spectral_deriv_order(t, d).powi(2)).sum::<f64>() * w
        };
        let half = gl.integrate_composite(0.0, cutoff, panels, integrand);
        let integral = 2.0 * half;
        if !integral.is_finite() {
            return Err(Error::Divergent { decay: n, delta });
        }
        // int_T^inf C^2 t^{-2n} (2 t^2)^delta dt, both sides
        let expo = 2.0 * n - 2.0 * delta - 1.0;
        let env: f64 = (0..3).map(|d| self.tail_envelope(d).powi(2)).sum();
        let tail_bound = 2.0 * env * 2f64.powf(delta) * cutoff.powf(-expo) / expo;
        Ok(RegularityNorm { integral, tail_bound, delta, cutoff })
    }

    /// Right end `b` of the largest interval `(0, b)` on which the odd
    /// spectral profile `-i K^(t)` is `<= 0`. Only defined for unmodulated odd
    /// test functions.
    pub fn odd_sign_region(&self) -> Option<f64> {
        if !self.odd_multiplier || self.modulation.is_some() {
            return None;
        }
        // (sinc^n)' = n sinc^{n-1} sinc'; sinc' < 0 on (0, 4.4934), and
        // sinc^{n-1} changes sign at pi only when n - 1 is odd.
        let end = if self.base_power % 2 == 1 { SINC_DERIV_FIRST_ZERO } else { std::f64::consts::PI };
        Some(end / self.stretch)
    }

    /// Canonical identifier, e.g. `conv6`, `conv7_x`, `conv6_mod:3.1`,
    /// `conv8_x_stretch:1.0625`.
    pub fn id(&self) -> String {
        self.to_string()
    }
}

/// Minimum of `sinc^n` on `[0, l]`. `sinc^n` is decreasing and positive on
/// `[0, pi)`, so the minimum is attained at `l`.
pub fn min_sinc_pow(n: u32, l: f64) -> Result<f64> {
    if !(0.0..std::f64::consts::PI).contains(&l) {
        return Err(Error::Precondition(format!("window half-width {l} must lie in [0, pi)")));
    }
    Ok(sinc::sinc(l).powi(n as i32))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityNorm {
    pub integral: f64,
    pub tail_bound: f64,
    pub delta: f64,
    pub cutoff: f64,
}

impl RegularityNorm {
    pub fn upper_bound(&self) -> f64 {
        self.integral + self.tail_bound
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "conv{}", self.base_power)?;
        if self.odd_multiplier {
            write!(f, "_x")?;
        }
        if let Some(nu) = self.modulation {
            write!(f, "_mod:{nu}")?;
        }
        if self.stretch != 1.0 {
            write!(f, "_stretch:{}", self.stretch)?;
        }
        Ok(())
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidTestFunction(format!("cannot parse test function id {s:?}"));
        let rest = s.trim().strip_prefix("conv").ok_or_else(bad)?;
        let mut parts = rest.split('_');
        let n: u32 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let mut odd = false;
        let mut nu = None;
        let mut stretch = 1.0;
        for part in parts {
            if part == "x" {
                odd = true;
            } else if let Some(v) = part.strip_prefix("mod:") {
                nu = Some(v.parse().map_err(|_| bad())?);
            } else if let Some(v) = part.strip_prefix("stretch:") {
                stretch = v.parse().map_err(|_| bad())?;
            } else {
                return Err(bad());
            }
        }
        Self::new(n, nu, stretch, odd)
    }
}

impl TryFrom<String> for TestFunction {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<TestFunction> for String {
    fn from(tf: TestFunction) -> String {
        tf.to_string()
    }
}

impl Kernel for TestFunction {
    fn id(&self) -> String {
        self.to_string()
    }

    fn parity(&self) -> Parity {
        TestFunction::parity(self)
    }

    fn support_radius(&self) -> f64 {
        TestFunction::support_radius(self)
    }

    fn value(&self, x: f64) -> f64 {
        TestFunction::value(self, x)
    }

    fn volume_data(&self) -> Result<(f64, f64)> {
        Ok((self.value_at_zero(), self.second_deriv_at_zero()?))
    }

    fn spectral(&self, t: f64) -> f64 {
        self.spectral_deriv_order(t, 0)
    }

    fn spectral_deriv(&self, t: f64) -> f64 {
        self.spectral_deriv_order(t, 1)
    }

    fn spectral_deriv_bound(&self) -> f64 {
        self.fourier_deriv_bound(1)
    }

    fn spectral_second_deriv(&self, t: f64) -> f64 {
        self.spectral_deriv_order(t, 2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outside_support_is_zero() {
        let h6 = TestFunction::conv(6).unwrap();
        assert_eq!(h6.value(7.0), 0.0);
        assert_eq!(h6.value(-6.0), 0.0);
        let k7 = TestFunction::conv_x(7).unwrap();
        assert_eq!(k7.value(0.0), 0.0);
    }

    #[test]
    fn parity_of_values() {
        let tfs = ["conv6", "conv7_x", "conv6_mod:3.1", "conv8_x_stretch:1.0625", "conv5_x_mod:2"];
        for id in tfs {
            let tf: TestFunction = id.parse().unwrap();
            let sign = if tf.odd_multiplier() { -1.0 } else { 1.0 };
            for i in 0..50 {
                let x = -9.0 + 0.37 * i as f64;
                assert!((tf.value(-x) - sign * tf.value(x)).abs() < 1e-15, "{id} x={x}");
            }
        }
    }

    #[test]
    fn id_roundtrip() {
        for id in ["conv6", "conv7_x", "conv6_mod:3.1", "conv8_x_stretch:1.0625", "conv6_mod:0"] {
            let tf: TestFunction = id.parse().unwrap();
            assert_eq!(tf.id(), id);
        }
        assert!("conv".parse::<TestFunction>().is_err());
        assert!("conv6_y".parse::<TestFunction>().is_err());
        assert!("conv0".parse::<TestFunction>().is_err());
        assert!("conv6_stretch:-1".parse::<TestFunction>().is_err());
    }

    #[test]
    fn fourier_at_zero_and_parity() {
        let h6 = TestFunction::conv(6).unwrap();
        assert_eq!(h6.fourier(0.0), Complex64::new(1.0, 0.0));
        let k7 = TestFunction::conv_x(7).unwrap();
        assert_eq!(k7.fourier(1.3).re, 0.0);
        assert_eq!(h6.fourier(1.3).im, 0.0);
        // even transform has zero slope at the origin
        assert_eq!(h6.fourier_deriv(0.0, 1).unwrap().norm(), 0.0);
    }

    #[test]
    fn sinc7_second_derivative_at_zero() {
        let k7 = TestFunction::conv_x(7).unwrap();
        let v = -Complex64::i() * k7.fourier_deriv(0.0, 1).unwrap();
        assert!((v.re + 7.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn modulated_second_derivative() {
        let h = TestFunction::conv_mod(6, 3.0).unwrap();
        assert!((h.second_deriv_at_zero().unwrap() + 5.2).abs() < 1e-12);
        let h0 = TestFunction::conv_mod(6, 0.0).unwrap();
        assert!((h0.second_deriv_at_zero().unwrap() + 0.25).abs() < 1e-14);
        let h6 = TestFunction::conv(6).unwrap();
        let stretched = h6.with_stretch(2.0).unwrap();
        assert!((stretched.second_deriv_at_zero().unwrap() - h6.second_deriv_at_zero().unwrap() / 4.0).abs() < 1e-15);
        assert!(matches!(TestFunction::conv_x(7).unwrap().second_deriv_at_zero(), Err(Error::OddVolumeTerm)));
    }

    #[test]
    fn stretch_rule() {
        let k8 = TestFunction::conv_x(8).unwrap();
        let k = k8.with_stretch(1.0625).unwrap();
        for &t in &[0.0, 0.4, 2.2, 5.0] {
            let a = k.fourier(t);
            let b = k8.fourier(1.0625 * t) * 1.0625;
            assert!((a - b).norm() < 1e-15);
            let a1 = k.fourier_deriv(t, 1).unwrap();
            let b1 = k8.fourier_deriv(1.0625 * t, 1).unwrap() * 1.0625 * 1.0625;
            assert!((a1 - b1).norm() < 1e-14);
        }
        assert_eq!(k.support_radius(), 8.5);
    }

    #[test]
    fn time_derivatives_match_finite_differences() {
        let h = 1e-5;
        for id in ["conv6", "conv7_x", "conv6_mod:3.1", "conv8_x_stretch:1.0625"] {
            let tf: TestFunction = id.parse().unwrap();
            for d in 0..4 {
                for &x in &[0.3, 1.7, -2.9, 4.1] {
                    let fd = (tf.deriv(x + h, d) - tf.deriv(x - h, d)) / (2.0 * h);
                    let exact = tf.deriv(x, d + 1);
                    assert!((fd - exact).abs() < 1e-5 * (1.0 + exact.abs()), "{id} d={d} x={x} {fd} {exact}");
                }
            }
        }
    }

    #[test]
    fn regularity_norm_cases() {
        let k7 = TestFunction::conv_x(7).unwrap();
        let r = k7.regularity_norm(2.6).unwrap();
        assert!(r.upper_bound().is_finite() && r.integral > 0.0);
        assert!(r.tail_bound < 1e-3 * r.integral);
        let h8 = TestFunction::conv(8).unwrap();
        assert!(h8.regularity_norm(2.6).unwrap().upper_bound().is_finite());
        let h2 = TestFunction::conv(2).unwrap();
        assert!(matches!(h2.regularity_norm(4.0), Err(Error::Divergent { .. })));
        assert!(matches!(k7.regularity_norm(2.5), Err(Error::Precondition(_))));
    }

    #[test]
    fn sinc_power_lower_bounds() {
        assert!(min_sinc_pow(6, 0.5).unwrap() >= 0.777);
        assert!(min_sinc_pow(6, 0.04715).unwrap() >= 0.9977);
        assert!(min_sinc_pow(6, 4.0).is_err());
    }

    #[test]
    fn odd_sign_regions() {
        assert!((TestFunction::conv_x(7).unwrap().odd_sign_region().unwrap() - SINC_DERIV_FIRST_ZERO).abs() < 1e-15);
        let k8 = TestFunction::conv_x(8).unwrap().with_stretch(1.0625).unwrap();
        assert!((k8.odd_sign_region().unwrap() - std::f64::consts::PI / 1.0625).abs() < 1e-15);
        assert!(TestFunction::conv(6).unwrap().odd_sign_region().is_none());
        // the profile really is <= 0 on the region
        for tf in [TestFunction::conv_x(7).unwrap(), k8] {
            let end = tf.odd_sign_region().unwrap();
            for i in 1..1000 {
                let t = end * i as f64 / 1000.0;
                assert!(tf.spectral(t) <= 0.0, "{tf} t={t}");
            }
        }
    }
}
