//! End-to-end certification for one spin^c structure: locus, counts, crossing
//! signs, transversality, piercing sequence and Floer output.

use serde::{Deserialize, Serialize};

use super::{linspace, CertKind, Certificate, Certifier, SmallWindow, Verdict};
use crate::error::Result;
use crate::floer::{enumerate_spinc, piercing_to_floer, Crossing, FloerOutput, PiercingSequence, Sign, SpincClass};
use crate::trace::SpincStructure;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlankResult {
    pub tau: f64,
    /// Certified sign of the small eigenvalue, 0 when no attempt succeeded.
    pub sign: i8,
    pub attempts: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossingReport {
    pub interval: [f64; 2],
    pub small: f64,
    pub gap: f64,
    pub left: FlankResult,
    pub right: FlankResult,
    pub sign: Option<Sign>,
    pub certificates: Vec<Certificate>,
    pub failure: Option<String>,
}

impl CrossingReport {
    pub fn location(&self) -> f64 {
        (0.5 * (self.interval[0] + self.interval[1])).rem_euclid(1.0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpincReport {
    pub spinc: SpincStructure,
    pub self_conjugate: bool,
    pub locus: Vec<[f64; 2]>,
    pub crossings: Vec<CrossingReport>,
    pub piercing: Option<PiercingSequence>,
    pub floer: Option<FloerOutput>,
    pub certificates: Vec<Certificate>,
    pub verdict: Verdict,
    /// Rule name of the first certificate that failed, with a reason.
    pub failure: Option<String>,
}

impl SpincReport {
    pub fn all_certificates(&self) -> Vec<&Certificate> {
        self.certificates.iter().chain(self.crossings.iter().flat_map(|c| c.certificates.iter())).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub spectrum: String,
    pub checksum: String,
    pub spectral_largeness: Option<Certificate>,
    pub classes: Vec<(SpincClass, SpincReport)>,
}

impl RunReport {
    pub fn is_certified(&self) -> bool {
        self.spectral_largeness.as_ref().is_none_or(|c| c.is_certified())
            && self.classes.iter().all(|(_, r)| r.verdict.is_certified())
    }

    pub fn first_failure(&self) -> Option<String> {
        if let Some(c) = &self.spectral_largeness {
            if !c.is_certified() {
                return Some(format!("{}: {}", c.rule, c.claim));
            }
        }
        self.classes.iter().find_map(|(_, r)| r.failure.clone())
    }
}

fn first_failed(certs: &[Certificate]) -> Option<String> {
    certs.iter().find(|c| !c.is_certified()).map(|c| format!("{}: {}", c.rule, c.claim))
}

impl Certifier {
    /// Search outward from `start` in steps of `flank_step` (direction `dir`),
    /// never reaching `limit`, for a `tau` with a certified sign.
    fn flank(&self, k: u32, start: f64, dir: f64, limit: f64, certs: &mut Vec<Certificate>) -> Result<FlankResult> {
        let step = self.params.flank_step;
        let mut attempts = 0;
        let mut j = 1;
        loop {
            let tau = start + dir * step * j as f64;
            j += 1;
            if (tau - start).abs() > self.params.flank_max || dir * (limit - tau) <= 0.5 * step {
                return Ok(FlankResult { tau: start, sign: 0, attempts });
            }
            attempts += 1;
            let t = tau.rem_euclid(1.0);
            let Some(SmallWindow { small, gap, .. }) = self.scan(t, k)? else {
                continue;
            };
            let (_, upper) = self.count_upper(t, k, small, 1)?;
            if !upper.is_certified() {
                continue;
            }
            let Ok((sign, cert)) = self.sign_certificate(t, k, small, gap) else {
                continue;
            };
            if sign != 0 {
                certs.push(upper);
                certs.push(cert);
                return Ok(FlankResult { tau, sign, attempts });
            }
        }
    }

    /// `count_lower` at `l`, widened by doubling up to `gap / 2` when the
    /// negative part of `G^` on the rest of the spectrum is too heavy.
    fn existence(&self, tau: f64, k: u32, l: f64, gap: f64) -> Result<Certificate> {
        let mut l = l;
        let mut last = self.count_lower(tau, k, l)?.1;
        while !last.is_certified() && 2.0 * l <= 0.5 * gap {
            l *= 2.0;
            last = self.count_lower(tau, k, l)?.1;
        }
        Ok(last)
    }

    fn certify_interval(&self, k: u32, iv: [f64; 2], prev_end: f64, next_start: f64) -> Result<CrossingReport> {
        let mut certs = Vec::new();
        let samples = linspace(iv[0], iv[1], self.params.interval_samples.max(2));
        let windows: Vec<(f64, SmallWindow)> = samples
            .iter()
            .filter_map(|&t| self.scan(t.rem_euclid(1.0), k).transpose().map(|w| w.map(|w| (t, w))))
            .collect::<Result<_>>()?;
        let mut report = CrossingReport {
            interval: iv,
            small: f64::NAN,
            gap: f64::NAN,
            left: FlankResult { tau: iv[0], sign: 0, attempts: 0 },
            right: FlankResult { tau: iv[1], sign: 0, attempts: 0 },
            sign: None,
            certificates: Vec::new(),
            failure: None,
        };
        if windows.is_empty() {
            report.failure = Some("scan: no small eigenvalue located in the interval".into());
            return Ok(report);
        }
        let small = windows.iter().map(|(_, w)| w.small).fold(0.0, f64::max);
        let gap = windows.iter().map(|(_, w)| w.gap).fold(f64::INFINITY, f64::min);
        report.small = small;
        report.gap = gap;

        for &t in &samples {
            certs.push(self.count_upper(t.rem_euclid(1.0), k, small, 1)?.1);
        }
        let mid = (0.5 * (iv[0] + iv[1])).rem_euclid(1.0);
        certs.push(self.existence(mid, k, small, gap)?);
        match self.transversality_certificate(iv, k, gap) {
            Ok((_, c)) => certs.push(c),
            Err(e) => report.failure = Some(format!("transversality: {e}")),
        }

        report.left = self.flank(k, iv[0], -1.0, prev_end, &mut certs)?;
        report.right = self.flank(k, iv[1], 1.0, next_start, &mut certs)?;
        report.sign = match (report.left.sign, report.right.sign) {
            (-1, 1) => Some(Sign::Plus),
            (1, -1) => Some(Sign::Minus),
            _ => None,
        };
        report.failure = report.failure.or_else(|| first_failed(&certs));
        if report.failure.is_none() && report.sign.is_none() {
            report.failure = Some(format!(
                "sign: flank signs ({}, {}) do not certify a crossing",
                report.left.sign, report.right.sign
            ));
        }
        report.certificates = certs;
        Ok(report)
    }

    /// Run every step for the structure with character `k`.
    pub fn certify_spinc(&self, k: u32) -> Result<SpincReport> {
        let spinc = SpincStructure::new(k, self.data().torsion_order())?;
        let (locus, locus_cert) = self.small_eig_locus(k)?;
        let mut certificates = vec![locus_cert];
        let n = locus.len();
        let crossings: Vec<CrossingReport> = (0..n)
            .map(|i| {
                let prev_end = if i == 0 { locus[n - 1][1] - 1.0 } else { locus[i - 1][1] };
                let next_start = if i + 1 == n { locus[0][0] + 1.0 } else { locus[i + 1][0] };
                self.certify_interval(k, locus[i], prev_end, next_start)
            })
            .collect::<Result<_>>()?;

        let mut failure = first_failed(&certificates).or_else(|| crossings.iter().find_map(|c| c.failure.clone()));
        let mut piercing = None;
        let mut floer = None;
        if failure.is_none() {
            let seq: Vec<Crossing> = crossings
                .iter()
                .map(|c| Crossing { tau: c.location(), sign: c.sign.expect("certified crossing has a sign") })
                .collect();
            match PiercingSequence::new(seq) {
                Ok(seq) => {
                    let signs = seq.signs();
                    let mut pc = Certificate::new(CertKind::Piercing, "piercing", self.provenance(&[]))
                        .with("components_certified", 1.0);
                    pc.spinc = Some(k);
                    pc.intervals = seq.crossings.iter().map(|c| [c.tau, c.tau]).collect();
                    pc.lists.insert("signs".into(), signs.iter().map(|s| s.value() as f64).collect());
                    pc.claim = format!("piercing sequence ({})", signs.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","));
                    pc.verdict = Verdict::Certified;
                    certificates.push(pc);
                    match piercing_to_floer(&signs) {
                        Ok(f) => floer = Some(f),
                        Err(e) => failure = Some(format!("floer: {e}")),
                    }
                    piercing = Some(seq);
                }
                Err(e) => failure = Some(format!("piercing: {e}")),
            }
        }
        Ok(SpincReport {
            spinc,
            self_conjugate: spinc.is_self_conjugate(),
            locus,
            crossings,
            piercing,
            floer,
            certificates,
            verdict: Verdict::from_bool(failure.is_none()),
            failure,
        })
    }

    /// Spectral largeness (when `lambda_max` is given) and one report per
    /// conjugacy class of spin^c structures.
    pub fn certify_all(&self, lambda_max: Option<f64>, only: Option<&[u32]>) -> Result<RunReport> {
        let spectral_largeness = lambda_max.map(|l| self.spectral_largeness(l).map(|r| r.1)).transpose()?;
        let mut classes = Vec::new();
        for class in enumerate_spinc(self.data().torsion_order())? {
            let k = class.representative.k;
            if only.is_some_and(|ks| !ks.contains(&k) && !class.conjugate.is_some_and(|c| ks.contains(&c.k))) {
                continue;
            }
            classes.push((class, self.certify_spinc(k)?));
        }
        Ok(RunReport {
            spectrum: self.data().name().to_string(),
            checksum: self.data().checksum(),
            spectral_largeness,
            classes,
        })
    }
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
    fn planted_two_crossings_are_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (s, planted) = SyntheticSpectrum::planted(&mut rng, 2).unwrap();
        let params = CertParams { tau_grid: 801, ..CertParams::default() };
        let c = Certifier::new(Arc::new(s), params).unwrap();
        let r = c.certify_spinc(0).unwrap();
        assert!(r.verdict.is_certified(), "{:?}", r.failure);
        let mut expected = planted.clone();
        expected.sort_by(|a, b| a.0.total_cmp(&b.0));
        let got: Vec<i32> = r.piercing.as_ref().unwrap().signs().iter().map(|s| s.value()).collect();
        let want: Vec<i32> = expected.iter().map(|p| p.1 as i32).collect();
        assert_eq!(got, want);
        for cert in r.all_certificates() {
            cert.replay().unwrap();
        }
    }
}
