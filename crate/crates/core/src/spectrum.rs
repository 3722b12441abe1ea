//! Spin-refined length spectra: records, validation, and file I/O.
//!
//! A spectrum file is a JSON document whose reals are decimal strings:
//!
//! ```json
//! {"name": "m357", "volume": "3.1663", "b1": 1, "torsion_order": 7, "cutoff_R": "7.0",
//!  "geodesics": [{"l": "0.58", "l0": "0.58", "theta": "2.1", "spin_theta": "1.05",
//!                 "free_class": 1, "torsion_class": 3}]}
//! ```
//!
//! A `primes` list may be given instead of (or next to) `geodesics`; it is
//! expanded to all multiples up to the cutoff. An explicit `geodesics` list
//! wins when both are present. Loading requires a sidecar `<file>.sha256` in
//! `sha256sum` format; the digest becomes the provenance of every side built
//! from the data.

use std::cmp::Ordering;
use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicRecord {
    pub length: f64,
    pub prime_length: f64,
    /// Rotation angle `hol(gamma)` in `[0, 2 pi)`.
    pub holonomy: f64,
    /// Angle of the spin lift, a square root of the holonomy.
    pub spin_holonomy: f64,
    pub free_class: i64,
    pub torsion_class: u32,
}

impl GeodesicRecord {
    pub fn prime(length: f64, spin_holonomy: f64, free_class: i64, torsion_class: u32) -> Self {
        let spin_holonomy = spin_holonomy.rem_euclid(TAU);
        Self {
            length,
            prime_length: length,
            holonomy: (2.0 * spin_holonomy).rem_euclid(TAU),
            spin_holonomy,
            free_class,
            torsion_class,
        }
    }

    /// `l0 / (|1 - e^{Cl}| |1 - e^{-Cl}|)` with `Cl = l + i theta`.
    ///
    /// The product of the two moduli is `2 cosh l - 2 cos theta`, evaluated as
    /// `4 (sinh^2(l/2) + sin^2(theta/2))` so that short geodesics with small
    /// rotation do not lose digits.
    pub fn weight(&self) -> f64 {
        let sh = (0.5 * self.length).sinh();
        let sn = (0.5 * self.holonomy).sin();
        self.prime_length / (4.0 * (sh * sh + sn * sn))
    }

    pub fn is_prime(&self) -> bool {
        (self.length - self.prime_length).abs() <= TOL * self.length.max(1.0)
    }

    fn validate(&self, torsion_order: u32) -> std::result::Result<(), String> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(format!("length {} must be positive", self.length));
        }
        if !(self.prime_length > 0.0 && self.prime_length <= self.length * (1.0 + TOL)) {
            return Err(format!("prime length {} must lie in (0, l = {}]", self.prime_length, self.length));
        }
        let ratio = self.length / self.prime_length;
        if (ratio - ratio.round()).abs() > TOL * ratio.max(1.0) {
            return Err(format!("l / l0 = {ratio} is not an integer"));
        }
        for (name, angle) in [("theta", self.holonomy), ("spin_theta", self.spin_holonomy)] {
            if !(0.0..TAU).contains(&angle) {
                return Err(format!("{name} = {angle} outside [0, 2 pi)"));
            }
        }
        let diff = (self.holonomy - 2.0 * self.spin_holonomy).rem_euclid(TAU);
        if diff.min(TAU - diff) > TOL {
            return Err(format!(
                "theta = {} is not twice spin_theta = {} mod 2 pi",
                self.holonomy, self.spin_holonomy
            ));
        }
        if self.torsion_class >= torsion_order {
            return Err(format!("torsion class {} not reduced mod {torsion_order}", self.torsion_class));
        }
        let denom = (0.5 * self.length).sinh().powi(2) + (0.5 * self.holonomy).sin().powi(2);
        if !(denom > 0.0) {
            return Err("weight denominator vanishes".into());
        }
        Ok(())
    }

    /// Canonical order: by length, then lexicographically by the other fields.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.length
            .total_cmp(&other.length)
            .then(self.prime_length.total_cmp(&other.prime_length))
            .then(self.holonomy.total_cmp(&other.holonomy))
            .then(self.spin_holonomy.total_cmp(&other.spin_holonomy))
            .then(self.free_class.cmp(&other.free_class))
            .then(self.torsion_class.cmp(&other.torsion_class))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldData {
    pub name: String,
    pub volume: f64,
    pub b1: u32,
    pub torsion_order: u32,
    pub cutoff: f64,
    pub c_y_upper: Option<f64>,
    pub geodesics: Vec<GeodesicRecord>,
    /// Hex sha256 of the file the data came from (or of its canonical
    /// serialization when built in memory).
    pub checksum: String,
}

impl ManifoldData {
    /// Validate, sort canonically, and stamp the canonical checksum.
    pub fn new(
        name: impl Into<String>,
        volume: f64,
        b1: u32,
        torsion_order: u32,
        cutoff: f64,
        c_y_upper: Option<f64>,
        geodesics: Vec<GeodesicRecord>,
    ) -> Result<Self> {
        let mut data = Self {
            name: name.into(),
            volume,
            b1,
            torsion_order,
            cutoff,
            c_y_upper,
            geodesics,
            checksum: String::new(),
        };
        data.validate()?;
        data.geodesics.sort_by(GeodesicRecord::canonical_cmp);
        data.checksum = sha256_hex(data.to_json()?.as_bytes());
        Ok(data)
    }

    fn validate(&self) -> Result<()> {
        if !(self.volume > 0.0 && self.volume.is_finite()) {
            return Err(Error::Schema(format!("volume {} must be positive", self.volume)));
        }
        if self.torsion_order == 0 {
            return Err(Error::Schema("torsion_order must be >= 1".into()));
        }
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return Err(Error::Schema(format!("cutoff_R {} must be positive", self.cutoff)));
        }
        if let Some(c) = self.c_y_upper {
            if !(c > 0.0) {
                return Err(Error::Schema(format!("c_y_upper {c} must be positive")));
            }
        }
        let mut seen = std::collections::HashMap::new();
        for (index, g) in self.geodesics.iter().enumerate() {
            g.validate(self.torsion_order)
                .map_err(|reason| Error::InvalidRecord { index, reason })?;
            if g.length > self.cutoff * (1.0 + TOL) {
                return Err(Error::InvalidRecord {
                    index,
                    reason: format!("length {} exceeds cutoff {}", g.length, self.cutoff),
                });
            }
            let key = (
                g.length.to_bits(),
                g.prime_length.to_bits(),
                g.holonomy.to_bits(),
                g.spin_holonomy.to_bits(),
                g.free_class,
                g.torsion_class,
            );
            if let Some(&first) = seen.get(&key) {
                return Err(Error::DuplicateRecord { index, first });
            }
            seen.insert(key, index);
        }
        Ok(())
    }

    pub fn systole(&self) -> Option<f64> {
        self.geodesics.first().map(|g| g.length)
    }

    pub fn max_free_class(&self) -> i64 {
        self.geodesics.iter().map(|g| g.free_class.abs()).max().unwrap_or(0)
    }

    /// Refuse anything outside the `b1 = 1` setting.
    pub fn require_b1_one(&self) -> Result<()> {
        if self.b1 != 1 {
            return Err(Error::Unsupported(format!("b1 = {}; certification needs b1 = 1", self.b1)));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let raw = RawSpectrum {
            name: self.name.clone(),
            volume: self.volume,
            b1: self.b1,
            torsion_order: self.torsion_order,
            cutoff_r: self.cutoff,
            c_y_upper: self.c_y_upper,
            torsion_invariants: None,
            geodesics: Some(self.geodesics.iter().map(RawGeodesic::from).collect()),
            primes: None,
        };
        Ok(serde_json::to_string_pretty(&raw)? + "\n")
    }

    /// Random primes with consistent spin data; used for sweeps and tests.
    pub fn random<R: Rng>(rng: &mut R, count: usize, torsion_order: u32, cutoff: f64, max_free: i64) -> Result<Self> {
        let geodesics = (0..count)
            .map(|_| {
                GeodesicRecord::prime(
                    rng.random_range(0.3..cutoff),
                    rng.random_range(0.0..TAU),
                    rng.random_range(-max_free..=max_free),
                    rng.random_range(0..torsion_order),
                )
            })
            .collect();
        Self::new("random", rng.random_range(1.0..10.0), 1, torsion_order, cutoff, None, geodesics)
    }
}

/// All multiples `k * gamma` with `k l0 <= R` of the given prime geodesics.
pub fn expand_primes(primes: &[GeodesicRecord], cutoff: f64, torsion_order: u32) -> Result<Vec<GeodesicRecord>> {
    let mut out = Vec::new();
    for (index, p) in primes.iter().enumerate() {
        if !p.is_prime() {
            return Err(Error::InvalidRecord { index, reason: "expand_primes needs prime records (l = l0)".into() });
        }
        let count = (cutoff * (1.0 + TOL) / p.prime_length).floor() as i64;
        for k in 1..=count {
            let kf = k as f64;
            out.push(GeodesicRecord {
                length: kf * p.prime_length,
                prime_length: p.prime_length,
                holonomy: (kf * p.holonomy).rem_euclid(TAU),
                spin_holonomy: (kf * p.spin_holonomy).rem_euclid(TAU),
                free_class: k * p.free_class,
                torsion_class: ((k * p.torsion_class as i64).rem_euclid(torsion_order as i64)) as u32,
            });
        }
    }
    Ok(out)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".sha256");
    PathBuf::from(s)
}

/// Parse a spectrum document. The checksum is that of `text`.
pub fn parse_spectrum(text: &str) -> Result<ManifoldData> {
    let raw: RawSpectrum = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    if let Some(inv) = &raw.torsion_invariants {
        let nontrivial: Vec<u32> = inv.iter().copied().filter(|&d| d > 1).collect();
        if nontrivial.len() > 1 {
            return Err(Error::Unsupported(format!("non-cyclic torsion {nontrivial:?}")));
        }
        let order = nontrivial.first().copied().unwrap_or(1);
        if order != raw.torsion_order {
            return Err(Error::Schema(format!(
                "torsion_invariants {inv:?} disagree with torsion_order {}",
                raw.torsion_order
            )));
        }
    }
    let geodesics = match (&raw.geodesics, &raw.primes) {
        (Some(list), _) => list.iter().map(GeodesicRecord::from).collect(),
        (None, Some(primes)) => {
            let primes: Vec<GeodesicRecord> = primes.iter().map(GeodesicRecord::from).collect();
            for (index, g) in primes.iter().enumerate() {
                g.validate(raw.torsion_order).map_err(|reason| Error::InvalidRecord { index, reason })?;
            }
            expand_primes(&primes, raw.cutoff_r, raw.torsion_order)?
        }
        (None, None) => return Err(Error::Schema("need a `geodesics` or `primes` list".into())),
    };
    let mut data = ManifoldData::new(
        raw.name,
        raw.volume,
        raw.b1,
        raw.torsion_order,
        raw.cutoff_r,
        raw.c_y_upper,
        geodesics,
    )?;
    data.checksum = sha256_hex(text.as_bytes());
    Ok(data)
}

/// Load a spectrum file and check it against its `.sha256` sidecar.
pub fn load_spectrum(path: &Path) -> Result<ManifoldData> {
    let bytes = fs::read(path)?;
    let digest = sha256_hex(&bytes);
    let side = sidecar_path(path);
    let recorded = fs::read_to_string(&side)
        .map_err(|e| Error::Checksum(format!("cannot read sidecar {}: {e}", side.display())))?;
    let recorded = recorded.split_whitespace().next().unwrap_or("").to_ascii_lowercase();
    if recorded != digest {
        return Err(Error::Checksum(format!(
            "{} has sha256 {digest}, sidecar records {recorded}",
            path.display()
        )));
    }
    let text = String::from_utf8(bytes).map_err(|e| Error::Schema(e.to_string()))?;
    parse_spectrum(&text)
}

/// Write the canonical explicit form of `data` plus its sidecar; returns the
/// checksum of the written file.
pub fn write_spectrum(data: &ManifoldData, path: &Path) -> Result<String> {
    let text = data.to_json()?;
    let digest = sha256_hex(text.as_bytes());
    fs::write(path, &text)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    fs::write(sidecar_path(path), format!("{digest}  {name}\n"))?;
    Ok(digest)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpectrum {
    name: String,
    #[serde(with = "decimal")]
    volume: f64,
    b1: u32,
    torsion_order: u32,
    #[serde(rename = "cutoff_R", with = "decimal")]
    cutoff_r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "decimal::option")]
    c_y_upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    torsion_invariants: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    geodesics: Option<Vec<RawGeodesic>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    primes: Option<Vec<RawGeodesic>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeodesic {
    #[serde(with = "decimal")]
    l: f64,
    #[serde(with = "decimal")]
    l0: f64,
    #[serde(with = "decimal")]
    theta: f64,
    #[serde(with = "decimal")]
    spin_theta: f64,
    free_class: i64,
    torsion_class: u32,
}

impl From<&RawGeodesic> for GeodesicRecord {
    fn from(r: &RawGeodesic) -> Self {
        Self {
            length: r.l,
            prime_length: r.l0,
            holonomy: r.theta,
            spin_holonomy: r.spin_theta,
            free_class: r.free_class,
            torsion_class: r.torsion_class,
        }
    }
}

impl From<&GeodesicRecord> for RawGeodesic {
    fn from(g: &GeodesicRecord) -> Self {
        Self {
            l: g.length,
            l0: g.prime_length,
            theta: g.holonomy,
            spin_theta: g.spin_holonomy,
            free_class: g.free_class,
            torsion_class: g.torsion_class,
        }
    }
}

/// Reals as decimal strings. `f64`'s `Display` is the shortest string that
/// round-trips, and `str::parse` is correctly rounded.
pub mod decimal {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum StrOrNum {
        Str(String),
        Num(f64),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match StrOrNum::deserialize(d)? {
            StrOrNum::Str(s) => s
                .trim()
                .parse::<f64>()
                .map_err(|_| D::Error::custom(format!("{s:?} is not a decimal number"))),
            StrOrNum::Num(v) => Ok(v),
        }
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(v) => super::serialize(v, s),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            #[derive(Deserialize)]
            struct Wrap(#[serde(with = "super")] f64);
            Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn record(l: f64, spin: f64) -> GeodesicRecord {
        GeodesicRecord::prime(l, spin, 1, 0)
    }

    #[test]
    fn weight_matches_complex_arithmetic() {
        for &(l, spin) in &[(2.0, 0.0), (1.0, std::f64::consts::FRAC_PI_2), (0.3, 2.9), (5.5, 1.1)] {
            let g = record(l, spin);
            let z = Complex64::new(g.length, g.holonomy);
            let direct = g.prime_length / ((Complex64::new(1.0, 0.0) - z.exp()).norm() * (Complex64::new(1.0, 0.0) - (-z).exp()).norm());
            assert!((g.weight() - direct).abs() < 1e-14 * direct, "l={l}");
        }
        let g = record(2.0, 0.0);
        let e2 = 2f64.exp();
        assert!((g.weight() - 2.0 / ((e2 - 1.0) * (1.0 - 1.0 / e2))).abs() < 1e-15);
        let far = record(20.0, 0.4);
        assert!((far.weight() / (20.0 * (-20f64).exp()) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn expansion_counts() {
        let p = record(3.0, 0.2);
        assert_eq!(expand_primes(&[p], 7.0, 1).unwrap().len(), 2);
        let q = record(0.39, 1.0);
        let all = expand_primes(&[q], 7.0, 1).unwrap();
        assert_eq!(all.len(), 17);
        assert!((all[1].spin_holonomy - 2.0).abs() < 1e-15);
        assert_eq!(all[16].free_class, 17);
        assert!(expand_primes(&all[1..2], 7.0, 1).is_err());
    }

    #[test]
    fn rejects_bad_square_root() {
        let mut g = record(1.0, 0.5);
        g.holonomy = 0.5;
        let err = ManifoldData::new("x", 1.0, 1, 1, 7.0, None, vec![record(2.0, 0.1), g]).unwrap_err();
        assert!(matches!(err, Error::InvalidRecord { index: 1, .. }), "{err}");
    }

    #[test]
    fn rejects_duplicates() {
        let g = record(1.0, 0.5);
        let err = ManifoldData::new("x", 1.0, 1, 1, 7.0, None, vec![g, g]).unwrap_err();
        assert!(matches!(err, Error::DuplicateRecord { index: 1, first: 0 }));
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        use rand::SeedableRng;
        let data = ManifoldData::random(&mut rng, 50, 5, 6.0, 3).unwrap();
        let back = parse_spectrum(&data.to_json().unwrap()).unwrap();
        assert_eq!(back.geodesics, data.geodesics);
        assert_eq!(back.volume, data.volume);
    }

    #[test]
    fn primes_only_file_is_expanded() {
        let text = r#"{"name":"t","volume":"2.5","b1":1,"torsion_order":3,"cutoff_R":"7",
            "primes":[{"l":"3","l0":"3","theta":"0.4","spin_theta":"0.2","free_class":1,"torsion_class":2}]}"#;
        let data = parse_spectrum(text).unwrap();
        assert_eq!(data.geodesics.len(), 2);
        assert_eq!(data.geodesics[1].torsion_class, 1);
        assert_eq!(data.geodesics[1].free_class, 2);
    }

    #[test]
    fn non_cyclic_torsion_is_unsupported() {
        let text = r#"{"name":"t","volume":"2.5","b1":1,"torsion_order":4,"cutoff_R":"7",
            "torsion_invariants":[2,2],"geodesics":[]}"#;
        assert!(matches!(parse_spectrum(text), Err(Error::Unsupported(_))));
    }

    #[test]
    fn sidecar_is_enforced() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let data = ManifoldData::new("t", 2.0, 1, 1, 7.0, None, vec![record(1.0, 0.3)]).unwrap();
        let digest = write_spectrum(&data, &path).unwrap();
        let loaded = load_spectrum(&path).unwrap();
        assert_eq!(loaded.checksum, digest);
        fs::write(sidecar_path(&path), "0000  s.json\n").unwrap();
        assert!(matches!(load_spectrum(&path), Err(Error::Checksum(_))));
        fs::remove_file(sidecar_path(&path)).unwrap();
        assert!(matches!(load_spectrum(&path), Err(Error::Checksum(_))));
    }
}
