//! The formal matrix `A` and the multiplicity bound
//! `J_s(tau) = 1 / <v_s, A(tau)^{-1} v_s>`.
//!
//! For `c` in `R^n` put `G_c = sum c_i c_j phi_i * phi_j`, so that
//! `G_c^ = (sum c_i phi_i^)^2 >= 0`. The even trace formula gives
//! `c^T A c = 1/2 sum_j G_c^(s_j)`, and an absolute eigenvalue `s` of
//! multiplicity `mu` contributes at least `mu/2 <c, phi^(s)>^2`. With
//! `v_s = phi^(s)/sqrt 2`, minimizing over `<c, v_s> = 1` gives `mu <= J_s`.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;

use crate::eigcert::basis::BoundBasis;
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::trace::{Side, SideKind, TraceData};

#[derive(Clone)]
pub struct FormalMatrix {
    basis: BoundBasis,
    kind: SideKind,
    /// Upper triangle, row-major.
    entries: Vec<Arc<dyn Side>>,
    /// Subtracted from each entry: the spectral constant `1/2 (b1 - 1) g^(0)`
    /// of the coexact formula.
    corrections: Vec<f64>,
}

fn upper_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

impl FormalMatrix {
    /// Entries `A_ij` = side of `phi_i * phi_j`; `kind` is `dirac_even` or
    /// `coexact`.
    pub fn build(data: &dyn TraceData, basis: &BoundBasis, kind: SideKind) -> Result<Self> {
        if !matches!(kind, SideKind::DiracEven | SideKind::Coexact) {
            return Err(Error::Precondition(format!("bound matrices use even sides, not {kind}")));
        }
        basis.check_support(data.cutoff())?;
        let n = basis.len();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        let built: Vec<Result<(Arc<dyn Side>, f64)>> = pairs
            .par_iter()
            .map(|&(i, j)| {
                let g = Arc::new(basis.product(i, j));
                let correction = match kind {
                    SideKind::Coexact => 0.5 * (data.b1() as f64 - 1.0) * g.spectral(0.0),
                    _ => 0.0,
                };
                Ok((data.side(g, kind)?, correction))
            })
            .collect();
        let mut entries = Vec::with_capacity(pairs.len());
        let mut corrections = Vec::with_capacity(pairs.len());
        for b in built {
            let (side, c) = b?;
            entries.push(side);
            corrections.push(c);
        }
        Ok(Self { basis: basis.clone(), kind, entries, corrections })
    }

    pub fn basis(&self) -> &BoundBasis {
        &self.basis
    }

    pub fn kind(&self) -> SideKind {
        self.kind
    }

    /// `A(tau, k)` and `rho`, a bound on the spectral norm of its error.
    pub fn evaluate(&self, tau: f64, k: u32) -> (DMatrix<f64>, f64) {
        let n = self.basis.len();
        let mut a = DMatrix::zeros(n, n);
        let mut row_budget = vec![0.0; n];
        for i in 0..n {
            for j in i..n {
                let idx = upper_index(n, i, j);
                let e = self.entries[idx].evaluate(tau, k);
                let v = e.value - self.corrections[idx];
                a[(i, j)] = v;
                a[(j, i)] = v;
                row_budget[i] += e.budget;
                if i != j {
                    row_budget[j] += e.budget;
                }
            }
        }
        (a, row_budget.into_iter().fold(0.0, f64::max))
    }

    /// Factor `A(tau, k) + rho I`. The shift makes every `J` computed from the
    /// solver an upper bound for the exact one.
    pub fn solver(&self, tau: f64, k: u32) -> Result<JSolver> {
        let (mut a, rho) = self.evaluate(tau, k);
        for i in 0..a.nrows() {
            a[(i, i)] += rho;
        }
        let chol = Cholesky::new(a).ok_or(Error::NotPositiveDefinite { tau, k })?;
        Ok(JSolver { chol, basis: self.basis.clone(), tau, k })
    }

    /// Check positive definiteness on a grid of `tau`.
    pub fn check_positive_definite(&self, grid: &[f64], k: u32) -> Result<()> {
        grid.par_iter().try_for_each(|&tau| self.solver(tau, k).map(|_| ()))
    }
}

pub struct JSolver {
    chol: Cholesky<f64, Dyn>,
    basis: BoundBasis,
    pub tau: f64,
    pub k: u32,
}

impl JSolver {
    pub fn v(&self, s: f64) -> DVector<f64> {
        self.basis.transform(s) / std::f64::consts::SQRT_2
    }

    /// `J_s`; `+inf` when every basis transform vanishes at `s`.
    pub fn j(&self, s: f64) -> f64 {
        let v = self.v(s);
        if v.iter().all(|x| *x == 0.0) {
            return f64::INFINITY;
        }
        let w = self.chol.solve(&v);
        1.0 / v.dot(&w)
    }
}

/// `1 / <v, A^{-1} v>` for an explicit positive definite `A`.
pub fn j_from_matrix(a: &DMatrix<f64>, v: &DVector<f64>) -> Result<f64> {
    if v.iter().all(|x| *x == 0.0) {
        return Ok(f64::INFINITY);
    }
    let chol = Cholesky::new(a.clone()).ok_or(Error::NotPositiveDefinite { tau: f64::NAN, k: 0 })?;
    Ok(1.0 / v.dot(&chol.solve(v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{Atom, Branch, SyntheticSpectrum};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spectrum() -> SyntheticSpectrum {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut atoms = SyntheticSpectrum::bulk(&mut rng, 2.6, 0.45, 70);
        atoms.push(Atom { branch: Branch::constant(0.5), multiplicity: 2, character: None });
        SyntheticSpectrum::new("t", 1, 7.0, atoms).unwrap()
    }

    #[test]
    fn single_entry_hand_computation() {
        let s = SyntheticSpectrum::new("one", 1, 7.0, vec![Atom { branch: Branch::constant(0.8), multiplicity: 3, character: None }]).unwrap();
        let basis = BoundBasis::new(1.0, vec![0.0]).unwrap();
        let m = FormalMatrix::build(&s, &basis, SideKind::DiracEven).unwrap();
        let (a, _) = m.evaluate(0.2, 0);
        let f = basis.transform(0.8)[0];
        assert!((a[(0, 0)] - 0.5 * 3.0 * f * f).abs() < 1e-15);
    }

    #[test]
    fn planted_multiplicity_is_bounded() {
        let s = spectrum();
        let basis = BoundBasis::equally_spaced(7.0, 8).unwrap();
        let m = FormalMatrix::build(&s, &basis, SideKind::DiracEven).unwrap();
        let solver = m.solver(0.3, 0).unwrap();
        assert!(solver.j(0.5) >= 2.0 - 1e-9);
        assert!(solver.j(0.0) < 1.0);
    }

    #[test]
    fn oversized_basis_rejected() {
        let s = spectrum();
        let basis = BoundBasis::new(2.0, vec![0.0]).unwrap();
        assert!(matches!(FormalMatrix::build(&s, &basis, SideKind::DiracEven), Err(Error::SupportExceedsCutoff { .. })));
    }

    #[test]
    fn enlarging_basis_never_increases_j() {
        let s = spectrum();
        let a = 7.0 / 18.0;
        let small = BoundBasis::new(a, vec![0.0, 2.0 * a, 4.0 * a]).unwrap();
        let big = BoundBasis::new(a, (0..8).map(|i| i as f64 * a).collect()).unwrap();
        let ms = FormalMatrix::build(&s, &small, SideKind::DiracEven).unwrap().solver(0.1, 0).unwrap();
        let mb = FormalMatrix::build(&s, &big, SideKind::DiracEven).unwrap().solver(0.1, 0).unwrap();
        for i in 0..200 {
            let x = i as f64 * 0.02;
            assert!(mb.j(x) <= ms.j(x) * (1.0 + 1e-9) + 1e-12, "s={x}");
        }
    }
}
