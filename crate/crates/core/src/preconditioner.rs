//! Exact inverse of the no-jump part of a Liouvillian.
//!
//! With `H_eff = V D V⁻¹`, the map `P(X) = −i H_eff X + i X H_eff†` is
//! diagonal in the basis `X = V Z V†`. Solving `(s − P) X = Y` therefore
//! costs four dense matrix products and an elementwise division. The
//! result is a right preconditioner for GMRES on the full Liouvillian,
//! whose remaining part consists of the quantum-jump terms only.

use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;

use crate::error::{Error, Result};
use crate::liouvillian::{devectorize, vectorize, Liouvillian};
use crate::sparse::{C64, I};

#[derive(Debug, Clone)]
pub struct NoJumpInverse {
    v: Mat<C64>,
    v_inv: Mat<C64>,
    d: Vec<C64>,
    floor: f64,
}

impl NoJumpInverse {
    pub fn new(l: &Liouvillian) -> Result<Self> {
        let h = l.effective_hamiltonian().to_mat();
        let eig = h
            .eigen()
            .map_err(|e| Error::Factorization(format!("eigendecomposition of H_eff failed: {e:?}")))?;
        let v = eig.U().to_owned();
        let d: Vec<C64> = eig.S().column_vector().iter().copied().collect();
        let v_inv = v.partial_piv_lu().inverse();
        let identity_error = (&(&v_inv * &v) - &Mat::<C64>::identity(v.nrows(), v.ncols())).norm_max();
        if !identity_error.is_finite() || identity_error > 1e-6 {
            return Err(Error::Factorization(format!(
                "eigenvectors of H_eff are ill-conditioned (‖V⁻¹V − 1‖ = {identity_error:.2e})"
            )));
        }
        let scale = d.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        Ok(Self {
            v,
            v_inv,
            d,
            floor: 1e-13 * scale,
        })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    /// Solves `(shift − P) X = Y` for column-stacked `Y`.
    pub fn solve(&self, y: &[C64], shift: C64) -> Result<Vec<C64>> {
        let n = self.dim();
        let y = devectorize(y, n)?;
        let w = &(&self.v_inv * &y) * self.v_inv.adjoint();
        let z = Mat::from_fn(n, n, |i, j| {
            let mut den = shift + I * (self.d[i] - self.d[j].conj());
            if den.norm() < self.floor {
                den = C64::new(self.floor, 0.0);
            }
            w[(i, j)] / den
        });
        let x = &(&self.v * &z) * self.v.adjoint();
        Ok(vectorize(&x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{FockBasis, ModeLayout};
    use crate::liouvillian::assemble;
    use crate::model::Channel;

    #[test]
    fn inverts_liouvillian_without_jumps() {
        let basis = FockBasis::enumerate(ModeLayout::new(["a", "b"], 3).unwrap());
        let a = basis.annihilation("a").unwrap();
        let b = basis.annihilation("b").unwrap();
        let h = basis
            .number("a")
            .unwrap()
            .scale(C64::new(1.3, 0.0))
            .add(&a.compose(&b.adjoint()).unwrap().add(&b.compose(&a.adjoint()).unwrap()).unwrap().scale(C64::new(0.4, 0.0)))
            .unwrap()
            .add(&a.add(&a.adjoint()).unwrap().scale(C64::new(0.2, 0.0)))
            .unwrap();
        let ch = [
            Channel {
                label: "a".into(),
                op: a.clone(),
                rate: 0.9,
            },
            Channel {
                label: "b".into(),
                op: b.adjoint(),
                rate: 0.1,
            },
        ];
        let l = assemble(&h, &ch, &[]).unwrap();
        let pre = NoJumpInverse::new(&l).unwrap();
        let n = basis.dim();
        let heff = l.effective_hamiltonian().to_mat();
        let x_true = Mat::from_fn(n, n, |r, c| C64::new((r * 3 + c) as f64 % 5.0, (r as f64 - c as f64) * 0.1));
        let shift = C64::new(0.2, 0.7);
        let px = &(&(&heff * &x_true) * faer::Scale(-I)) + &(&(&x_true * heff.adjoint()) * faer::Scale(I));
        let y = &(&x_true * faer::Scale(shift)) - &px;
        let x = devectorize(&pre.solve(&vectorize(&y), shift).unwrap(), n).unwrap();
        assert!((&x - &x_true).norm_max() < 1e-9);
    }
}
