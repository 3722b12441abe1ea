//! The small-eigenvalue locus: the `tau` where `J_0(tau) >= threshold`.

use rayon::prelude::*;

use super::{linspace, CertKind, Certificate, Certifier, Verdict};
use crate::error::{Error, Result};

impl Certifier {
    /// Intervals of the circle (as `[lo, hi]` with `lo < hi`, possibly
    /// extending past 1 when they wrap) where a zero eigenvalue may occur.
    ///
    /// `J_0` is clamped to `[0, 2 threshold]` before the continuity check, so
    /// only variation near the threshold matters. Steps whose variation exceeds
    /// the limit are bisected up to `refine_depth` times.
    pub fn small_eig_locus(&self, k: u32) -> Result<(Vec<[f64; 2]>, Certificate)> {
        let matrix = self.matrix()?;
        let thr = self.params.threshold;
        let clamp = |j: f64| j.clamp(0.0, 2.0 * thr);
        let j0 = |tau: f64| -> Result<f64> { Ok(matrix.solver(tau, k)?.j(0.0)) };

        let grid = linspace(0.0, 1.0, self.params.tau_grid);
        let coarse: Vec<f64> = grid.par_iter().map(|&t| j0(t)).collect::<Result<_>>()?;

        let limit = self.params.variation_limit;
        let mut taus = vec![grid[0]];
        let mut values = vec![coarse[0]];
        let mut max_variation: f64 = 0.0;
        for i in 1..grid.len() {
            let (a, b) = (grid[i - 1], grid[i]);
            let (va, vb) = (coarse[i - 1], coarse[i]);
            if (clamp(va) - clamp(vb)).abs() < limit {
                max_variation = max_variation.max((clamp(va) - clamp(vb)).abs());
                taus.push(b);
                values.push(vb);
                continue;
            }
            let mut pts = vec![(a, va), (b, vb)];
            let mut depth = 0;
            loop {
                let worst = pts.windows(2).map(|w| (clamp(w[0].1) - clamp(w[1].1)).abs()).fold(0.0, f64::max);
                if worst < limit {
                    max_variation = max_variation.max(worst);
                    break;
                }
                if depth >= self.params.refine_depth {
                    return Err(Error::RefineGrid(format!(
                        "J_0 varies by {worst} near tau = {a} after {depth} refinements"
                    )));
                }
                let mids: Vec<f64> = pts.windows(2).map(|w| 0.5 * (w[0].0 + w[1].0)).collect();
                let mid_vals: Vec<f64> = mids.par_iter().map(|&t| j0(t)).collect::<Result<_>>()?;
                let mut next = Vec::with_capacity(pts.len() * 2 - 1);
                for (i, p) in pts.iter().enumerate() {
                    next.push(*p);
                    if i < mids.len() {
                        next.push((mids[i], mid_vals[i]));
                    }
                }
                pts = next;
                depth += 1;
            }
            for p in &pts[1..] {
                taus.push(p.0);
                values.push(p.1);
            }
        }

        let intervals = runs_above(&taus, &values, thr);
        let mut c = Certificate::new(CertKind::Locus, "small_eig_locus", self.provenance(&[]))
            .with("max_variation", max_variation)
            .with("variation_limit", limit)
            .with("nodes", taus.len() as f64);
        c.spinc = Some(k);
        c.intervals = intervals.clone();
        c.claim = "zero eigenvalues occur only inside the listed intervals".into();
        c.verdict = Verdict::from_bool(max_variation < limit);
        Ok((intervals, c))
    }
}

/// Maximal runs of nodes with `value >= thr`, padded out to the neighbouring
/// nodes; runs touching both ends of `[0, 1]` are merged across `tau = 1`.
pub(crate) fn runs_above(taus: &[f64], values: &[f64], thr: f64) -> Vec<[f64; 2]> {
    let n = taus.len();
    let mut out: Vec<[f64; 2]> = Vec::new();
    let mut i = 0;
    while i < n {
        if values[i] < thr {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < n && values[i + 1] >= thr {
            i += 1;
        }
        let lo = taus[start.saturating_sub(1)];
        let hi = taus[(i + 1).min(n - 1)];
        out.push([lo, hi]);
        i += 1;
    }
    if out.len() >= 2 && values[0] >= thr && values[n - 1] >= thr {
        let first = out.remove(0);
        let last = out.pop().expect("at least two runs");
        out.push([last[0], 1.0 + first[1]]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigcert::CertParams;
    use crate::synthetic::SyntheticSpectrum;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    #[test]
    fn runs_merge_across_the_seam() {
        let taus = linspace(0.0, 1.0, 11);
        let v = [2.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0];
        let r = runs_above(&taus, &v, 1.0);
        assert_eq!(r.len(), 2);
        assert!((r[0][0] - 0.3).abs() < 1e-12 && (r[0][1] - 0.5).abs() < 1e-12);
        assert!((r[1][0] - 0.9).abs() < 1e-12 && (r[1][1] - 1.1).abs() < 1e-12);
    }

    #[test]
    fn locus_contains_planted_crossings() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (s, crossings) = SyntheticSpectrum::planted(&mut rng, 2).unwrap();
        let params = CertParams { tau_grid: 401, ..CertParams::default() };
        let c = Certifier::new(Arc::new(s), params).unwrap();
        let (intervals, cert) = c.small_eig_locus(0).unwrap();
        cert.replay().unwrap();
        for (tau, _) in crossings {
            assert!(
                intervals.iter().any(|iv| (iv[0] <= tau && tau <= iv[1]) || (iv[0] <= tau + 1.0 && tau + 1.0 <= iv[1])),
                "crossing at {tau} not in {intervals:?}"
            );
        }
    }
}
