//! Piercing sequences and the monopole Floer complexes they determine in the
//! spectrally large case.
//!
//! Degrees are relative: the bottom of the left tower sits in degree 0.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::SpincStructure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn value(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn from_value(v: i8) -> Result<Self> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            _ => Err(Error::InvalidPiercing(format!("crossing sign {v} is not +1 or -1"))),
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub tau: f64,
    pub sign: Sign,
}

/// Signs met going once around the circle, starting at the crossing with the
/// smallest `tau`. Sequences are only meaningful up to cyclic rotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiercingSequence {
    pub crossings: Vec<Crossing>,
}

impl PiercingSequence {
    /// Reduce locations mod 1, sort, and validate.
    pub fn new(mut crossings: Vec<Crossing>) -> Result<Self> {
        for c in &mut crossings {
            c.tau = c.tau.rem_euclid(1.0);
        }
        crossings.sort_by(|a, b| a.tau.total_cmp(&b.tau));
        if crossings.windows(2).any(|w| w[0].tau >= w[1].tau) {
            return Err(Error::InvalidPiercing("crossing locations must be distinct".into()));
        }
        let seq = Self { crossings };
        validate_piercing(&seq.signs())?;
        Ok(seq)
    }

    pub fn signs(&self) -> Vec<Sign> {
        self.crossings.iter().map(|c| c.sign).collect()
    }
}

/// Zero sum and cyclic alternation.
pub fn validate_piercing(signs: &[Sign]) -> Result<()> {
    let sum: i32 = signs.iter().map(|s| s.value()).sum();
    if sum != 0 {
        return Err(Error::InvalidPiercing(format!("signs sum to {sum}, not 0")));
    }
    let n = signs.len();
    if let Some(i) = (0..n).find(|&i| signs[i] == signs[(i + 1) % n]) {
        return Err(Error::InvalidPiercing(format!(
            "consecutive crossings {i} and {} have the same sign",
            (i + 1) % n
        )));
    }
    Ok(())
}

/// `T_+<shift>` repeated `multiplicity` times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tower {
    pub shift: i32,
    pub multiplicity: u32,
}

impl fmt::Display for Tower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = if self.multiplicity == 1 { "T+".to_string() } else { format!("T+^{}", self.multiplicity) };
        if self.shift == 0 {
            f.write_str(&base)
        } else {
            write!(f, "{base}<{}>", self.shift)
        }
    }
}

/// A module `ring^rank` concentrated in one degree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summand {
    pub ring: String,
    pub rank: u32,
    pub degree: i32,
}

impl fmt::Display for Summand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rank == 1 {
            write!(f, "{}_{}", self.ring, self.degree)
        } else {
            write!(f, "{}^{}_{}", self.ring, self.rank, self.degree)
        }
    }
}

/// One arrow of the chain-level picture: a generator of the right tower in
/// `from_degree` mapping to the left tower in `to_degree`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainArrow {
    pub from_degree: i32,
    pub to_degree: i32,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloerOutput {
    pub piercing: Vec<Sign>,
    /// Towers of the chain complex `C`.
    pub chain_towers: Vec<Tower>,
    pub differential: String,
    /// Bottom of the chain-level picture with twisted coefficients.
    pub chain_picture: Vec<ChainArrow>,
    /// Generators of the right tower with no outgoing arrow.
    pub unmatched_degrees: Vec<i32>,
    /// Towers of the `to` flavour of homology.
    pub hm_to_towers: Vec<Tower>,
    pub hm_to_extra: Vec<Summand>,
    pub gamma_action: String,
    /// Homology with a nontrivial real local system.
    pub local_coefficients: Option<Summand>,
    /// Reduced homology with untwisted coefficients, when nonzero.
    pub reduced: Option<Summand>,
    pub local_rank: u32,
    pub euler_consistent: bool,
    pub even_grading: bool,
}

impl FloerOutput {
    pub fn hm_to_string(&self) -> String {
        let mut parts: Vec<String> = self.hm_to_towers.iter().map(|t| t.to_string()).collect();
        parts.extend(self.hm_to_extra.iter().map(|s| s.to_string()));
        parts.join(" + ")
    }

    pub fn local_string(&self) -> String {
        self.local_coefficients.as_ref().map_or_else(|| "0".to_string(), |s| s.to_string())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

const TWIST: &str = "1-e^[eta]";
const PICTURE_LEVELS: i32 = 3;

fn picture(right_shift: i32) -> (Vec<ChainArrow>, Vec<i32>) {
    // Right tower generators sit in degrees right_shift + 2j; each maps to the
    // left tower one degree lower when that degree is >= 0.
    let mut arrows = Vec::new();
    let mut unmatched = Vec::new();
    for j in 0..PICTURE_LEVELS + 1 {
        let from = right_shift + 2 * j;
        let to = from - 1;
        if to >= 0 {
            if arrows.len() < PICTURE_LEVELS as usize {
                arrows.push(ChainArrow { from_degree: from, to_degree: to, label: TWIST.into() });
            }
        } else {
            unmatched.push(from);
        }
    }
    (arrows, unmatched)
}

/// Floer output for the supported piercing sequences: empty, `(+,-)` and
/// `(+,-,+,-)` up to rotation.
pub fn piercing_to_floer(signs: &[Sign]) -> Result<FloerOutput> {
    validate_piercing(signs)?;
    let out = match signs.len() {
        0 => {
            let (chain_picture, unmatched_degrees) = picture(1);
            FloerOutput {
                piercing: Vec::new(),
                chain_towers: vec![Tower { shift: 0, multiplicity: 1 }, Tower { shift: 1, multiplicity: 1 }],
                differential: "trivial".into(),
                chain_picture,
                unmatched_degrees,
                hm_to_towers: vec![Tower { shift: 0, multiplicity: 1 }, Tower { shift: 1, multiplicity: 1 }],
                hm_to_extra: Vec::new(),
                gamma_action: "isomorphism from the right tower onto the left tower".into(),
                local_coefficients: None,
                reduced: None,
                local_rank: 0,
                euler_consistent: true,
                even_grading: true,
            }
        }
        2 => {
            let (chain_picture, unmatched_degrees) = picture(-1);
            FloerOutput {
                piercing: signs.to_vec(),
                chain_towers: vec![Tower { shift: 0, multiplicity: 1 }, Tower { shift: -1, multiplicity: 1 }],
                differential: "trivial".into(),
                chain_picture,
                unmatched_degrees,
                hm_to_towers: vec![Tower { shift: 0, multiplicity: 1 }, Tower { shift: -1, multiplicity: 1 }],
                hm_to_extra: Vec::new(),
                gamma_action: "surjective from the right tower onto the left tower, zero on the bottom of the right tower".into(),
                local_coefficients: Some(Summand { ring: "R".into(), rank: 1, degree: -1 }),
                reduced: None,
                local_rank: 1,
                euler_consistent: true,
                even_grading: true,
            }
        }
        4 => {
            let (chain_picture, unmatched_degrees) = picture(-1);
            FloerOutput {
                piercing: signs.to_vec(),
                chain_towers: vec![Tower { shift: 0, multiplicity: 2 }, Tower { shift: -1, multiplicity: 2 }],
                differential: "in degrees 2k and 2k+1: Morse complex of the circle with two maxima and two minima".into(),
                chain_picture,
                unmatched_degrees,
                hm_to_towers: vec![Tower { shift: 0, multiplicity: 1 }, Tower { shift: -1, multiplicity: 1 }],
                hm_to_extra: vec![Summand { ring: "Z".into(), rank: 1, degree: -1 }],
                gamma_action: "surjective from the right tower onto the left tower, zero on the bottom of the right tower and on Z_-1".into(),
                local_coefficients: Some(Summand { ring: "R".into(), rank: 2, degree: -1 }),
                reduced: Some(Summand { ring: "Z".into(), rank: 1, degree: -1 }),
                local_rank: 2,
                euler_consistent: true,
                even_grading: true,
            }
        }
        _ => {
            let seq = signs.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",");
            return Err(Error::UnsupportedPiercing(format!("({seq})")));
        }
    };
    debug_assert_eq!(out.local_rank as usize * 2, signs.len());
    Ok(out)
}

/// A spin^c structure together with its conjugate (absent when self-conjugate).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpincClass {
    pub representative: SpincStructure,
    pub conjugate: Option<SpincStructure>,
}

impl SpincClass {
    pub fn is_self_conjugate(&self) -> bool {
        self.conjugate.is_none()
    }
}

/// Characters `k mod m` grouped into conjugate pairs `k <-> m - k`.
pub fn enumerate_spinc(m: u32) -> Result<Vec<SpincClass>> {
    if m == 0 {
        return Err(Error::Precondition("torsion order must be >= 1".into()));
    }
    let mut out = Vec::new();
    for k in 0..m {
        let s = SpincStructure::new(k, m)?;
        let c = s.conjugate();
        if s.is_self_conjugate() {
            out.push(SpincClass { representative: s, conjugate: None });
        } else if k < c.k {
            out.push(SpincClass { representative: s, conjugate: Some(c) });
        }
    }
    Ok(out)
}

/// Plain-text table with one row per spin^c class and its local rank `#R`.
pub fn summary_table(rows: &[(SpincClass, Option<FloerOutput>)]) -> String {
    let mut s = format!("{:<10} {:<6} {:<12} {:<28} {:<10} {}\n", "spinc", "conj", "piercing", "HM-to", "HM(Gamma)", "#R");
    for (class, out) in rows {
        let name = match class.conjugate {
            Some(c) => format!("{},{}", class.representative.k, c.k),
            None => class.representative.k.to_string(),
        };
        let conj = if class.is_self_conjugate() { "self" } else { "pair" };
        match out {
            Some(o) => {
                let seq = if o.piercing.is_empty() {
                    "()".to_string()
                } else {
                    format!("({})", o.piercing.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
                };
                s.push_str(&format!(
                    "{:<10} {:<6} {:<12} {:<28} {:<10} {}\n",
                    name,
                    conj,
                    seq,
                    o.hm_to_string(),
                    o.local_string(),
                    o.local_rank
                ));
            }
            None => s.push_str(&format!("{name:<10} {conj:<6} inconclusive\n")),
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use Sign::{Minus as M, Plus as P};

    #[test]
    fn validation() {
        validate_piercing(&[P, M]).unwrap();
        validate_piercing(&[P, M, P, M]).unwrap();
        assert!(validate_piercing(&[P, P]).is_err());
        assert!(validate_piercing(&[P, P, M, M]).is_err());
    }

    #[test]
    fn chain_picture_of_the_two_tower_cases() {
        let empty = piercing_to_floer(&[]).unwrap();
        assert!(empty.unmatched_degrees.is_empty());
        assert_eq!(empty.chain_picture[0], ChainArrow { from_degree: 1, to_degree: 0, label: TWIST.into() });
        let one = piercing_to_floer(&[P, M]).unwrap();
        assert_eq!(one.unmatched_degrees, vec![-1]);
        assert_eq!(one.chain_picture[0].from_degree, 1);
    }

    #[test]
    fn rotation_gives_the_same_output() {
        let a = piercing_to_floer(&[P, M, P, M]).unwrap();
        let b = piercing_to_floer(&[M, P, M, P]).unwrap();
        assert_eq!(a.hm_to_string(), b.hm_to_string());
        assert_eq!(a.local_coefficients, b.local_coefficients);
    }

    #[test]
    fn long_sequences_are_unsupported() {
        assert!(matches!(piercing_to_floer(&[P, M, P, M, P, M]), Err(Error::UnsupportedPiercing(_))));
    }

    #[test]
    fn sequence_normalization() {
        let seq = PiercingSequence::new(vec![
            Crossing { tau: 0.8, sign: M },
            Crossing { tau: 1.2, sign: P },
        ])
        .unwrap();
        assert_eq!(seq.signs(), vec![P, M]);
        assert!((seq.crossings[0].tau - 0.2).abs() < 1e-12);
    }

    #[test]
    fn spinc_pairs() {
        let c = enumerate_spinc(7).unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(c.iter().filter(|x| x.is_self_conjugate()).count(), 1);
        let c = enumerate_spinc(4).unwrap();
        let selfc: Vec<u32> = c.iter().filter(|x| x.is_self_conjugate()).map(|x| x.representative.k).collect();
        assert_eq!(selfc, vec![0, 2]);
        assert_eq!(enumerate_spinc(1).unwrap().len(), 1);
    }
}
