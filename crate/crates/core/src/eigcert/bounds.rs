//! Counting, window, tail, sign, transversality and coexact bounds.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use super::certificate::count_from;
use super::{linspace, CertKind, Certificate, Certifier, LaplaceShift, Verdict};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::testfn::{min_sinc_pow, TestFunction};
use crate::trace::{Side, SideKind};

/// Target size of the second-derivative pad in envelope maxima.
const ENVELOPE_PAD: f64 = 1e-7;
const MAX_ENVELOPE_POINTS: usize = 4_000_000;

/// Sup (or inf of the absolute value) of a side over a `tau` range.
struct RangeStats {
    max: f64,
    min_abs: f64,
    signs: (bool, bool),
    budget: f64,
    pad: f64,
    nodes: usize,
}

fn range_stats(side: &dyn Side, range: [f64; 2], k: u32, spacing: f64) -> RangeStats {
    let width = range[1] - range[0];
    let nodes = if width <= 0.0 { 1 } else { ((width / spacing).ceil() as usize + 1).max(3) };
    let grid = linspace(range[0], range[1], nodes);
    let evals = side.evaluate_grid(&grid, k);
    let h = if nodes > 1 { width / (nodes - 1) as f64 } else { 0.0 };
    RangeStats {
        max: evals.iter().map(|e| e.value).fold(f64::NEG_INFINITY, f64::max),
        min_abs: evals.iter().map(|e| e.value.abs()).fold(f64::INFINITY, f64::min),
        signs: (evals.iter().any(|e| e.value < 0.0), evals.iter().any(|e| e.value > 0.0)),
        budget: evals.iter().map(|e| e.budget).fold(0.0, f64::max),
        pad: side.tau_lipschitz() * h / 2.0,
        nodes,
    }
}

/// `max |d^order/dt^order (-i K^)(t)|` over `[lo, hi]`: sampled maximum plus
/// `h^2 M_2 / 8`, where `M_2` bounds two further derivatives.
pub(crate) fn envelope_max(kernel: &TestFunction, order: usize, lo: f64, hi: f64) -> f64 {
    let m2 = kernel.fourier_deriv_bound(order + 2);
    let h_target = (8.0 * ENVELOPE_PAD / m2).sqrt();
    let n = (((hi - lo) / h_target).ceil() as usize).clamp(1, MAX_ENVELOPE_POINTS);
    let h = (hi - lo) / n as f64;
    let sampled = (0..n + 1)
        .into_par_iter()
        .with_min_len(1024)
        .map(|i| kernel.spectral_deriv_order(lo + h * i as f64, order).abs())
        .reduce(|| 0.0, f64::max);
    sampled + h * h * m2 / 8.0
}

impl Certifier {
    fn count_kernel(&self) -> Result<TestFunction> {
        let h = self.params.count_function()?;
        if h.odd_multiplier() {
            return Err(Error::ParityMismatch { kind: "count".into(), expected: "even" });
        }
        Ok(h)
    }

    /// `#{j : |s_j(tau)| <= l} <= floor(2 (Gamma_H + budget) / min_{[0,l]} H^)`.
    pub fn count_upper(&self, tau: f64, k: u32, l: f64, claimed_max: u32) -> Result<(u32, Certificate)> {
        let h = self.count_kernel()?;
        let side = self.side(Arc::new(h.clone()), SideKind::DiracEven)?;
        let e = side.evaluate(tau, k);
        let min = h.stretch() * min_sinc_pow(h.base_power(), h.stretch() * l)?;
        let count = count_from(e.value, e.budget, min)?;
        let mut c = Certificate::new(CertKind::CountUpper, "count_upper", self.provenance(&[h.id()]))
            .with("tau", tau)
            .with("l", l)
            .with("gamma", e.value)
            .with("budget", e.budget)
            .with("min_transform", min)
            .with("count", count)
            .with("claimed_max", claimed_max as f64);
        c.spinc = Some(k);
        c.claim = format!("at most {count} eigenvalues with |s| <= {l} at tau = {tau}");
        c.verdict = Verdict::from_bool(count <= claimed_max as f64);
        Ok((count as u32, c))
    }

    /// Existence of an eigenvalue with `|s| < l`, from `G = H + H''/l^2`
    /// whose transform `H^ (1 - t^2/l^2)` is `<= 0` for `|t| >= l`.
    pub fn count_lower(&self, tau: f64, k: u32, l: f64) -> Result<(bool, Certificate)> {
        let h = self.count_kernel()?;
        let g = LaplaceShift::new(h.clone(), l)?;
        let id = g.id();
        let side = self.side(Arc::new(g), SideKind::DiracEven)?;
        let e = side.evaluate(tau, k);
        let ok = e.value - e.budget > 0.0;
        let mut c = Certificate::new(CertKind::CountLower, "count_lower", self.provenance(&[id]))
            .with("tau", tau)
            .with("l", l)
            .with("gamma", e.value)
            .with("budget", e.budget);
        c.spinc = Some(k);
        c.claim = format!("an eigenvalue with |s| < {l} exists at tau = {tau}");
        c.verdict = Verdict::from_bool(ok);
        Ok((ok, c))
    }

    /// Uniform count of `|s_j(tau)|` in `[nu - w, nu + w]` for `tau` in
    /// `range`, from `H = B_n(x) 2cos(nu x)`.
    pub fn weyl_window_bound(&self, range: [f64; 2], k: u32, nu: f64, half_width: f64) -> Result<(u32, Certificate)> {
        let n = self.params.weyl_power;
        if n % 2 != 0 {
            return Err(Error::Precondition(format!("window bounds need an even power, got {n}")));
        }
        let h = TestFunction::conv_mod(n, nu)?;
        let side = self.side(Arc::new(h.clone()), SideKind::DiracEven)?;
        let stats = range_stats(side.as_ref(), range, k, 1e-3);
        let min = min_sinc_pow(n, half_width)?;
        let count = count_from(stats.max + stats.pad, stats.budget, min)?;
        let mut c = Certificate::new(CertKind::WindowBound, "weyl_window", self.provenance(&[h.id()]))
            .with("nu", nu)
            .with("half_width", half_width)
            .with("gamma_sup", stats.max)
            .with("lipschitz_pad", stats.pad)
            .with("budget", stats.budget)
            .with("min_transform", min)
            .with("count", count);
        c.spinc = Some(k);
        c.intervals = vec![range];
        c.provenance.grid.insert("range_nodes".into(), stats.nodes as f64);
        c.claim = format!("at most {count} eigenvalues with |s| in [{}, {}]", nu - half_width, nu + half_width);
        c.verdict = Verdict::Certified;
        Ok((count as u32, c))
    }

    /// Bound on `sum_{|s_j| >= gap} |e^(order)(s_j)|` uniformly over `range`,
    /// where `e = -i K^`. Medium windows below `gap` are added as single terms.
    pub fn tail_bound(&self, range: [f64; 2], k: u32, gap: f64, kernel: &TestFunction, order: usize) -> Result<(f64, Certificate)> {
        let k_max = self.params.k_max;
        let mut windows: Vec<[f64; 2]> = self.params.medium_windows.iter().copied().filter(|w| w[1] < gap).collect();
        windows.extend((0..k_max).map(|i| [gap + i as f64, gap + i as f64 + 1.0]));
        let terms: Vec<Result<(f64, f64)>> = windows
            .par_iter()
            .map(|w| {
                let half = 0.5 * (w[1] - w[0]);
                let (count, _) = self.weyl_window_bound(range, k, 0.5 * (w[0] + w[1]), half)?;
                Ok((envelope_max(kernel, order, w[0].max(0.0), w[1]), count as f64))
            })
            .collect();
        let mut maxima = Vec::with_capacity(terms.len());
        let mut counts = Vec::with_capacity(terms.len());
        for t in terms {
            let (m, c) = t?;
            maxima.push(m);
            counts.push(c);
        }

        let n = kernel.base_power() as f64;
        if n <= 3.0 {
            return Err(Error::Precondition(format!("tail remainder needs decay order > 3, got {n}")));
        }
        let (a, b) = self.data().window_count_growth(self.params.weyl_power)?;
        let (env, t0) = kernel.decay_envelope(order);
        let t = gap + k_max as f64 - 1.0;
        if t < t0.max(1.5) {
            return Err(Error::Precondition(format!("tail start {t} is below the envelope range {}", t0.max(1.5))));
        }
        let remainder = env * (a * t.powf(1.0 - n) / (n - 1.0) + 4.0 * b * t.powf(3.0 - n) / (n - 3.0));
        let total = crate::sum::neumaier_sum(maxima.iter().zip(&counts).map(|(m, c)| m * c)) + remainder;

        let mut c = Certificate::new(CertKind::TailBound, "tail_bound", self.provenance(&[kernel.id()]))
            .with("gap", gap)
            .with("order", order as f64)
            .with("growth_a", a)
            .with("growth_b", b)
            .with("envelope", env)
            .with("remainder", remainder)
            .with("total", total);
        c.spinc = Some(k);
        c.intervals = vec![range];
        c.lists.insert("window_lo".into(), windows.iter().map(|w| w[0]).collect());
        c.lists.insert("window_max".into(), maxima);
        c.lists.insert("window_count".into(), counts);
        c.claim = format!("tail of order {order} beyond |s| = {gap} is at most {total}");
        c.verdict = Verdict::Certified;
        Ok((total, c))
    }

    /// The configured odd test function, checked for admissibility.
    pub fn odd_kernel(&self) -> Result<TestFunction> {
        let kf = self.params.odd_function()?;
        if !kf.odd_multiplier() {
            return Err(Error::ParityMismatch { kind: "sign".into(), expected: "odd" });
        }
        kf.regularity_norm(self.params.regularity_delta)?;
        Ok(kf)
    }

    /// Sign of the small eigenvalue `s_0(tau)` when `|s_0| <= small` and every
    /// other eigenvalue has `|s| >= gap`. Returns `0` when inconclusive.
    pub fn sign_certificate(&self, tau: f64, k: u32, small: f64, gap: f64) -> Result<(i8, Certificate)> {
        let kf = self.odd_kernel()?;
        let region = kf
            .odd_sign_region()
            .ok_or_else(|| Error::Precondition(format!("{} has no sign region", kf.id())))?;
        let side = self.side(Arc::new(kf.clone()), SideKind::DiracOdd)?;
        let e = side.evaluate(tau, k);
        let (tail, _) = self.tail_bound([tau, tau], k, gap, &kf, 0)?;
        let ok = 2.0 * e.value.abs() - 2.0 * e.budget > tail && small < region;
        let sign = if ok { -e.value.signum() } else { 0.0 };
        let mut c = Certificate::new(CertKind::Sign, "sign", self.provenance(&[kf.id()]))
            .with("tau", tau)
            .with("gamma", e.value)
            .with("budget", e.budget)
            .with("tail", tail)
            .with("small", small)
            .with("gap", gap)
            .with("sign_region", region);
        if ok {
            c.set("sign", sign);
        }
        c.spinc = Some(k);
        c.claim = format!("sign of the small eigenvalue at tau = {tau}");
        c.verdict = Verdict::from_bool(ok);
        Ok((sign as i8, c))
    }

    /// Transversal crossing on `interval`: `Gamma~ = d/dtau Gamma_K` keeps a
    /// sign and dominates the derivative tail.
    pub fn transversality_certificate(&self, interval: [f64; 2], k: u32, gap: f64) -> Result<(bool, Certificate)> {
        let kf = self.odd_kernel()?;
        let c_y = self
            .params
            .c_y
            .or(self.data().c_y_upper())
            .ok_or_else(|| Error::Precondition("no C_Y upper bound available".into()))?;
        let side = self.side(Arc::new(kf.clone()), SideKind::DiracOddDerivative)?;
        let stats = range_stats(side.as_ref(), interval, k, 2e-4);
        let sign_constant = !(stats.signs.0 && stats.signs.1);
        let min_abs = (stats.min_abs - stats.pad).max(0.0);
        let (tail, _) = self.tail_bound(interval, k, gap, &kf, 1)?;
        let lhs = tail * 2.0 * PI * c_y;
        let ok = sign_constant && lhs < 2.0 * (min_abs - stats.budget);
        let mut c = Certificate::new(CertKind::Transversality, "transversality", self.provenance(&[kf.id()]))
            .with("tail", tail)
            .with("c_y", c_y)
            .with("min_abs_gamma_tilde", min_abs)
            .with("lipschitz_pad", stats.pad)
            .with("budget", stats.budget)
            .with("gap", gap)
            .with("lhs", lhs);
        c.spinc = Some(k);
        c.intervals = vec![interval];
        c.claim = "the small eigenvalue crosses zero transversally".into();
        c.verdict = Verdict::from_bool(ok);
        Ok((ok, c))
    }

    /// `J_s < threshold_j` for `s` in `[0, sqrt(lambda_max)]` on the coexact
    /// side: no coexact 1-form eigenvalue below `lambda_max`.
    pub fn spectral_largeness(&self, lambda_max: f64) -> Result<(bool, Certificate)> {
        let solver = self.coexact_matrix()?.solver(0.0, 0)?;
        let s_max = lambda_max.sqrt();
        let n = (s_max / self.params.s_step).ceil() as usize;
        let max_j = linspace(0.0, s_max, n + 1).into_par_iter().map(|s| solver.j(s)).reduce(|| 0.0, f64::max);
        let ok = max_j < self.params.threshold;
        let mut c = Certificate::new(CertKind::SpectralLargeness, "spectral_largeness", self.provenance(&[]))
            .with("lambda_max", lambda_max)
            .with("max_j", max_j)
            .with("threshold_j", self.params.threshold);
        c.claim = format!("no coexact eigenvalue below {lambda_max}");
        c.verdict = Verdict::from_bool(ok);
        Ok((ok, c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigcert::CertParams;
    use crate::synthetic::{Atom, Branch, CoexactAtom, SyntheticSpectrum};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn certifier(extra: Vec<Atom>) -> Certifier {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut atoms = SyntheticSpectrum::bulk(&mut rng, 2.6, 0.45, 70);
        atoms.extend(extra);
        let s = SyntheticSpectrum::new("t", 1, 7.0, atoms).unwrap();
        Certifier::new(Arc::new(s), CertParams::default()).unwrap()
    }

    #[test]
    fn envelope_max_dominates_dense_samples() {
        let k = TestFunction::conv_x(7).unwrap();
        let m = envelope_max(&k, 0, 2.0, 3.0);
        let dense = (0..=20_000).map(|i| k.spectral_deriv_order(2.0 + i as f64 / 20_000.0, 0).abs()).fold(0.0, f64::max);
        assert!(m >= dense);
        assert!(m - dense < 1e-6);
    }

    #[test]
    fn upper_count_matches_planted_truth() {
        let c = certifier(vec![Atom { branch: Branch::constant(0.1), multiplicity: 1, character: None }]);
        let (n, cert) = c.count_upper(0.3, 0, 0.2, 1).unwrap();
        assert_eq!(n, 1);
        assert_eq!(cert.replay().unwrap(), Verdict::Certified);
        let (found, cert) = c.count_lower(0.3, 0, 0.2).unwrap();
        assert!(found);
        cert.replay().unwrap();
    }

    #[test]
    fn window_count_is_an_upper_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let atoms = SyntheticSpectrum::bulk(&mut rng, 2.6, 0.45, 70);
        let s = SyntheticSpectrum::new("t", 1, 7.0, atoms).unwrap();
        let c = Certifier::new(Arc::new(s.clone()), CertParams::default()).unwrap();
        for nu in [3.0, 4.5, 6.0, 9.0] {
            let (n, cert) = c.weyl_window_bound([0.2, 0.3], 0, nu, 0.5).unwrap();
            cert.replay().unwrap();
            for tau in [0.2, 0.25, 0.3] {
                let truth = s.eigenvalues(tau, 0).iter().filter(|x| (x.abs() - nu).abs() <= 0.5).count() as u32;
                assert!(n >= truth, "nu = {nu}: {n} < {truth}");
            }
        }
    }

    #[test]
    fn sign_of_planted_small_eigenvalue() {
        for (s0, expected) in [(0.05, 1), (-0.05, -1)] {
            let c = certifier(vec![Atom { branch: Branch::constant(s0), multiplicity: 1, character: None }]);
            let (sign, cert) = c.sign_certificate(0.0, 0, 0.1, 2.4).unwrap();
            assert_eq!(sign, expected, "s0 = {s0}");
            assert_eq!(cert.replay().unwrap(), Verdict::Certified);
        }
    }

    #[test]
    fn coexact_largeness() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let atoms = SyntheticSpectrum::bulk(&mut rng, 2.6, 0.45, 70);
        let mut s = SyntheticSpectrum::new("t", 1, 7.0, atoms).unwrap();
        s.coexact = (0..60).map(|i| CoexactAtom { sqrt_lambda: 2.5 + 0.4 * i as f64, multiplicity: 2 }).collect();
        let c = Certifier::new(Arc::new(s.clone()), CertParams::default()).unwrap();
        let (ok, cert) = c.spectral_largeness(2.0).unwrap();
        assert!(ok);
        cert.replay().unwrap();
        s.coexact.push(CoexactAtom { sqrt_lambda: 1.0, multiplicity: 1 });
        let c = Certifier::new(Arc::new(s), CertParams::default()).unwrap();
        assert!(!c.spectral_largeness(2.0).unwrap().0);
    }
}
