//! On-disk checkpoints of formal sides, keyed by spectrum checksum, kernel id
//! and side kind.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::error::Result;
use crate::kernel::Kernel;
use crate::spectrum::ManifoldData;
use crate::trace::{build_formal_side, FormalSide, Side, SideKind, TraceData};

/// Length-spectrum data whose formal sides are read from and written to a
/// cache directory.
pub struct CachedSpectrum {
    data: ManifoldData,
    dir: PathBuf,
}

impl CachedSpectrum {
    pub fn new(data: ManifoldData, dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { data, dir: dir.to_path_buf() })
    }

    pub fn path(&self, kernel_id: &str, kind: SideKind) -> PathBuf {
        let id: String = kernel_id.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
        let sum = &self.data.checksum[..self.data.checksum.len().min(16)];
        self.dir.join(format!("{sum}_{id}_{kind}.json"))
    }

    fn load(&self, path: &Path, kernel_id: &str, kind: SideKind) -> Option<FormalSide> {
        let side = FormalSide::from_json(&fs::read_to_string(path).ok()?).ok()?;
        (side.checksum == self.data.checksum && side.kernel_id == kernel_id && side.kind == kind).then_some(side)
    }
}

impl TraceData for CachedSpectrum {
    fn name(&self) -> &str {
        &self.data.name
    }

    fn b1(&self) -> u32 {
        self.data.b1
    }

    fn torsion_order(&self) -> u32 {
        self.data.torsion_order
    }

    fn cutoff(&self) -> f64 {
        self.data.cutoff
    }

    fn checksum(&self) -> String {
        self.data.checksum.clone()
    }

    fn c_y_upper(&self) -> Option<f64> {
        self.data.c_y_upper
    }

    fn side(&self, kernel: Arc<dyn Kernel>, kind: SideKind) -> Result<Arc<dyn Side>> {
        let id = kernel.id();
        let path = self.path(&id, kind);
        if let Some(side) = self.load(&path, &id, kind) {
            return Ok(Arc::new(side));
        }
        let side = build_formal_side(&self.data, kernel.as_ref(), kind)?;
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, side.to_json()?)?;
        fs::rename(&tmp, &path)?;
        Ok(Arc::new(side))
    }

    fn window_count_growth(&self, n: u32) -> Result<(f64, f64)> {
        self.data.window_count_growth(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfn::TestFunction;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cached_side_matches_a_fresh_build() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data = ManifoldData::random(&mut rng, 500, 4, 7.0, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let cached = CachedSpectrum::new(data.clone(), dir.path()).unwrap();
        let k: Arc<dyn Kernel> = Arc::new(TestFunction::conv(6).unwrap());
        let first = cached.side(k.clone(), SideKind::DiracEven).unwrap();
        assert!(cached.path(&k.id(), SideKind::DiracEven).exists());
        let second = cached.side(k.clone(), SideKind::DiracEven).unwrap();
        let fresh = build_formal_side(&data, k.as_ref(), SideKind::DiracEven).unwrap();
        for tau in [0.0, 0.3, 0.77] {
            let want = fresh.evaluate(tau, 1).value;
            assert_eq!(first.evaluate(tau, 1).value, want);
            assert_eq!(second.evaluate(tau, 1).value, want);
        }
    }
}
