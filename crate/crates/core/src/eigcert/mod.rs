//! Certification of small Dirac eigenvalues along the circle of flat
//! spin^c connections.

pub mod basis;
mod bounds;
pub mod certificate;
mod locus;
pub mod matrix;
pub mod pipeline;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::testfn::TestFunction;
use crate::trace::{Side, SideKind, TraceData};

pub use basis::{BasisProduct, BoundBasis, LaplaceShift};
pub use certificate::{CertKind, Certificate, Provenance, Verdict};
pub use matrix::{j_from_matrix, FormalMatrix, JSolver};
pub use pipeline::{CrossingReport, FlankResult, RunReport, SpincReport};

/// Tunable parameters of the certification engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertParams {
    /// Number of equally spaced shifts in the bound basis.
    pub basis_size: usize,
    /// Explicit basis half-width; overrides the equally spaced default.
    pub basis_a: Option<f64>,
    /// Explicit shifts; used together with `basis_a`.
    pub basis_shifts: Option<Vec<f64>>,
    /// Number of nodes of the `tau` grid on `[0, 1]`.
    pub tau_grid: usize,
    pub s_step: f64,
    pub s_cap: f64,
    pub threshold: f64,
    pub variation_limit: f64,
    pub refine_depth: u32,
    pub count_function: String,
    pub odd_function: String,
    pub weyl_power: u32,
    pub k_max: usize,
    /// Windows `[lo, hi]` of certified medium eigenvalues, counted separately
    /// in tail sums.
    pub medium_windows: Vec<[f64; 2]>,
    pub flank_step: f64,
    pub flank_max: f64,
    pub interval_samples: usize,
    /// Overrides the data's `C_Y` upper bound.
    pub c_y: Option<f64>,
    /// Exponent used to check admissibility of the odd test function.
    pub regularity_delta: f64,
}

impl Default for CertParams {
    fn default() -> Self {
        Self {
            basis_size: 10,
            basis_a: None,
            basis_shifts: None,
            tau_grid: 2001,
            s_step: 0.002,
            s_cap: 4.0,
            threshold: 1.0,
            variation_limit: 0.05,
            refine_depth: 8,
            count_function: "conv6".into(),
            odd_function: "conv7_x".into(),
            weyl_power: 6,
            k_max: 40,
            medium_windows: Vec::new(),
            flank_step: 0.01,
            flank_max: 0.2,
            interval_samples: 5,
            c_y: None,
            regularity_delta: 2.6,
        }
    }
}

impl CertParams {
    pub fn basis(&self, cutoff: f64) -> Result<BoundBasis> {
        match (self.basis_a, &self.basis_shifts) {
            (Some(a), Some(shifts)) => BoundBasis::new(a, shifts.clone()),
            (Some(a), None) => BoundBasis::new(a, (0..self.basis_size).map(|i| i as f64 * a).collect()),
            (None, _) => BoundBasis::equally_spaced(cutoff, self.basis_size),
        }
    }

    pub fn count_function(&self) -> Result<TestFunction> {
        self.count_function.parse()
    }

    pub fn odd_function(&self) -> Result<TestFunction> {
        self.odd_function.parse()
    }
}

/// Where the smallest eigenvalue can sit at a fixed `tau`, read off `J_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallWindow {
    /// First `s` with `J_s >= threshold`.
    pub onset: f64,
    /// First `s` past the onset with `J_s < threshold`: the small eigenvalue
    /// satisfies `|s_0| <= small`.
    pub small: f64,
    /// Every other eigenvalue satisfies `|s| >= gap` (outside medium windows).
    pub gap: f64,
}

/// Certification engine over one data source. Sides are cached by kernel id.
pub struct Certifier {
    data: Arc<dyn TraceData>,
    pub params: CertParams,
    cache: Mutex<HashMap<(String, SideKind), Arc<dyn Side>>>,
    dirac: OnceLock<FormalMatrix>,
    coexact: OnceLock<FormalMatrix>,
}

impl Certifier {
    pub fn new(data: Arc<dyn TraceData>, params: CertParams) -> Result<Self> {
        if data.b1() != 1 {
            return Err(Error::Unsupported(format!("b1 = {}; certification needs b1 = 1", data.b1())));
        }
        if !(params.s_step > 0.0 && params.s_cap > params.s_step && params.tau_grid >= 3) {
            return Err(Error::Config("need s_step > 0, s_cap > s_step and tau_grid >= 3".into()));
        }
        Ok(Self {
            data,
            params,
            cache: Mutex::new(HashMap::new()),
            dirac: OnceLock::new(),
            coexact: OnceLock::new(),
        })
    }

    pub fn data(&self) -> &dyn TraceData {
        self.data.as_ref()
    }

    pub fn side(&self, kernel: Arc<dyn Kernel>, kind: SideKind) -> Result<Arc<dyn Side>> {
        let key = (kernel.id(), kind);
        if let Some(side) = self.cache.lock().expect("side cache poisoned").get(&key) {
            return Ok(side.clone());
        }
        let side = self.data.side(kernel, kind)?;
        self.cache.lock().expect("side cache poisoned").insert(key, side.clone());
        Ok(side)
    }

    fn matrix_for(&self, kind: SideKind) -> Result<&FormalMatrix> {
        let cell = match kind {
            SideKind::Coexact => &self.coexact,
            _ => &self.dirac,
        };
        if let Some(m) = cell.get() {
            return Ok(m);
        }
        let basis = self.params.basis(self.data.cutoff())?;
        let m = FormalMatrix::build(self.data.as_ref(), &basis, kind)?;
        Ok(cell.get_or_init(|| m))
    }

    /// The `dirac_even` bound matrix.
    pub fn matrix(&self) -> Result<&FormalMatrix> {
        self.matrix_for(SideKind::DiracEven)
    }

    pub fn coexact_matrix(&self) -> Result<&FormalMatrix> {
        self.matrix_for(SideKind::Coexact)
    }

    pub fn j(&self, s: f64, tau: f64, k: u32) -> Result<f64> {
        Ok(self.matrix()?.solver(tau, k)?.j(s))
    }

    pub fn provenance(&self, test_functions: &[String]) -> Provenance {
        let mut grid = std::collections::BTreeMap::new();
        grid.insert("tau_nodes".to_string(), self.params.tau_grid as f64);
        grid.insert("s_step".to_string(), self.params.s_step);
        Provenance {
            spectrum_checksum: self.data.checksum(),
            test_functions: test_functions.to_vec(),
            cutoff: self.data.cutoff(),
            grid,
            note: None,
        }
    }

    fn s_grid(&self) -> Vec<f64> {
        let n = (self.params.s_cap / self.params.s_step).floor() as usize;
        (0..=n).map(|i| i as f64 * self.params.s_step).collect()
    }

    fn in_medium(&self, s: f64) -> Option<f64> {
        self.params.medium_windows.iter().find(|w| s >= w[0] && s <= w[1]).map(|w| w[1])
    }

    /// Scan `J_s(tau)` upward from `s = 0` to locate the small eigenvalue and
    /// the gap above it. `None` when `J_s < threshold` on the whole range.
    pub fn scan(&self, tau: f64, k: u32) -> Result<Option<SmallWindow>> {
        let solver = self.matrix()?.solver(tau, k)?;
        let thr = self.params.threshold;
        let grid = self.s_grid();
        let Some(onset_idx) = grid.iter().position(|&s| solver.j(s) >= thr) else {
            return Ok(None);
        };
        let Some(small_idx) = (onset_idx..grid.len()).find(|&i| solver.j(grid[i]) < thr) else {
            return Ok(None);
        };
        let mut gap = grid[grid.len() - 1];
        let mut i = small_idx;
        while i < grid.len() {
            let s = grid[i];
            if solver.j(s) >= thr {
                match self.in_medium(s) {
                    Some(hi) => {
                        while i < grid.len() && grid[i] <= hi {
                            i += 1;
                        }
                        continue;
                    }
                    None => {
                        gap = grid[i - 1];
                        break;
                    }
                }
            }
            i += 1;
        }
        Ok(Some(SmallWindow { onset: grid[onset_idx], small: grid[small_idx], gap }))
    }
}

/// `n` equally spaced points on `[lo, hi]` (one point when `lo == hi`).
pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 || hi <= lo {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}
