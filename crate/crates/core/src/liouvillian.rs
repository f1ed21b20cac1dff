//! Liouvillian superoperator on column-stacked density matrices.
//!
//! Entry `(r, c)` of ρ lives at index `c·dim + r`, so that
//! `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`.

use faer::Mat;

use crate::error::{Error, Result};
use crate::model::{Channel, CrossChannel};
use crate::sparse::{SparseOperator, C64, I, ZERO};

/// Hermiticity tolerance for Hamiltonians passed to [`assemble`].
pub const HERMITICITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Liouvillian {
    dim: usize,
    matrix: SparseOperator,
    h_eff: SparseOperator,
    channels: Vec<String>,
}

pub fn vectorize(rho: &Mat<C64>) -> Vec<C64> {
    let n = rho.nrows();
    let mut v = Vec::with_capacity(n * n);
    for c in 0..n {
        for r in 0..n {
            v.push(rho[(r, c)]);
        }
    }
    v
}

pub fn devectorize(v: &[C64], dim: usize) -> Result<Mat<C64>> {
    if v.len() != dim * dim {
        return Err(Error::DimensionMismatch {
            expected: dim * dim,
            found: v.len(),
        });
    }
    Ok(Mat::from_fn(dim, dim, |r, c| v[c * dim + r]))
}

/// `A ⊗ B` pushed as triplets scaled by `s`; index `(i_a·n + i_b)`.
fn push_kron(out: &mut Vec<(usize, usize, C64)>, a: &SparseOperator, b: &SparseOperator, s: C64) {
    let n = b.dim();
    for (ra, ca, va) in a.iter() {
        let sa = s * va;
        for (rb, cb, vb) in b.iter() {
            out.push((ra * n + rb, ca * n + cb, sa * vb));
        }
    }
}

/// `A ⊗ I`.
fn push_kron_left(out: &mut Vec<(usize, usize, C64)>, a: &SparseOperator, n: usize, s: C64) {
    for (ra, ca, va) in a.iter() {
        let sa = s * va;
        for k in 0..n {
            out.push((ra * n + k, ca * n + k, sa));
        }
    }
}

/// `I ⊗ B`.
fn push_kron_right(out: &mut Vec<(usize, usize, C64)>, b: &SparseOperator, n: usize, s: C64) {
    for k in 0..n {
        for (rb, cb, vb) in b.iter() {
            out.push((k * n + rb, k * n + cb, s * vb));
        }
    }
}

fn conj(a: &SparseOperator) -> SparseOperator {
    a.adjoint().transpose()
}

/// Triplets of `rate · D_{A,B}`, where `D_{A,B}[ρ] = AρB† − ½(B†Aρ + ρB†A)`.
/// `B = A` gives the ordinary Lindblad dissipator.
pub fn dissipator_term(a: &SparseOperator, b: &SparseOperator, rate: f64) -> Result<Vec<(usize, usize, C64)>> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let n = a.dim();
    let mut out = Vec::new();
    if rate == 0.0 {
        return Ok(out);
    }
    let r = C64::new(rate, 0.0);
    let bda = b.adjoint().compose(a)?;
    push_kron(&mut out, &conj(b), a, r);
    push_kron_right(&mut out, &bda, n, -0.5 * r);
    push_kron_left(&mut out, &bda.transpose(), n, -0.5 * r);
    Ok(out)
}

/// `L` with `vec(dρ/dt) = L vec(ρ)` for
/// `dρ/dt = −i[H,ρ] + Σ rate·D_A[ρ] + Σ rate·(D_{A,B} + D_{B,A})[ρ]`.
pub fn assemble(h: &SparseOperator, channels: &[Channel], cross_channels: &[CrossChannel]) -> Result<Liouvillian> {
    let dev = h.hermiticity_error();
    if dev > HERMITICITY_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let n = h.dim();
    let mut triplets = Vec::new();
    push_kron_right(&mut triplets, h, n, -I);
    push_kron_left(&mut triplets, &h.transpose(), n, I);
    let mut labels = vec!["hamiltonian".to_string()];
    let mut h_eff = h.clone();
    let half = C64::new(0.0, -0.5);
    for ch in channels {
        check(n, &ch.op)?;
        triplets.extend(dissipator_term(&ch.op, &ch.op, ch.rate)?);
        h_eff = h_eff.add(&ch.op.adjoint().compose(&ch.op)?.scale(half * ch.rate))?;
        labels.push(format!("{} ({:e})", ch.label, ch.rate));
    }
    for ch in cross_channels {
        check(n, &ch.a)?;
        check(n, &ch.b)?;
        triplets.extend(dissipator_term(&ch.a, &ch.b, ch.rate)?);
        triplets.extend(dissipator_term(&ch.b, &ch.a, ch.rate)?);
        let sym = ch.b.adjoint().compose(&ch.a)?.add(&ch.a.adjoint().compose(&ch.b)?)?;
        h_eff = h_eff.add(&sym.scale(half * ch.rate))?;
        labels.push(format!("{} ({:e})", ch.label, ch.rate));
    }
    Ok(Liouvillian {
        dim: n,
        matrix: SparseOperator::from_triplets_keep_diagonal(n * n, triplets),
        h_eff,
        channels: labels,
    })
}

fn check(n: usize, op: &SparseOperator) -> Result<()> {
    if op.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: op.dim(),
        });
    }
    Ok(())
}

impl Liouvillian {
    /// Density-matrix side length.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &SparseOperator {
        &self.matrix
    }

    /// Non-Hermitian `H − (i/2)Σ rate·A†A`, the generator of the no-jump
    /// part `−i H_eff ρ + i ρ H_eff†`.
    pub fn effective_hamiltonian(&self) -> &SparseOperator {
        &self.h_eff
    }

    pub fn channel_inventory(&self) -> &[String] {
        &self.channels
    }

    /// Sparse mat-vec. Row sums are evaluated in a fixed order, so the
    /// result does not depend on the thread count.
    pub fn apply(&self, rho: &[C64]) -> Result<Vec<C64>> {
        self.matrix.matvec(rho)
    }

    pub fn apply_matrix(&self, rho: &Mat<C64>) -> Result<Mat<C64>> {
        if rho.nrows() != self.dim || rho.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rho.nrows(),
            });
        }
        devectorize(&self.apply(&vectorize(rho))?, self.dim)
    }

    /// The row of the trace functional: `Σ_k vec(ρ)[k·dim + k]`.
    pub fn trace_row(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.dim).map(move |k| k * self.dim + k)
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.max_abs()
    }
}

/// Trace of a column-stacked matrix.
pub fn vec_trace(v: &[C64], dim: usize) -> C64 {
    (0..dim).fold(ZERO, |acc, k| acc + v[k * dim + k])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{FockBasis, ModeLayout};
    use crate::model::{thermal_occupation, K_B};
    use crate::sparse::ONE;

    fn single_mode(cap: usize) -> FockBasis {
        FockBasis::enumerate(ModeLayout::new(["b"], cap).unwrap())
    }

    #[test]
    fn vectorization_round_trip() {
        let rho = Mat::from_fn(3, 3, |r, c| C64::new(r as f64, c as f64 * 2.0));
        let v = vectorize(&rho);
        assert_eq!(v[1], rho[(1, 0)]);
        assert_eq!(v[3], rho[(0, 1)]);
        assert_eq!(devectorize(&v, 3).unwrap(), rho);
        assert!(devectorize(&v, 2).is_err());
    }

    #[test]
    fn identity_dissipator_vanishes() {
        let id = SparseOperator::identity(3);
        let t = dissipator_term(&id, &id, 1.0).unwrap();
        let m = SparseOperator::from_triplets(9, t);
        assert_eq!(m.nnz(), 0);
    }

    #[test]
    fn vacuum_is_null_vector_of_zero_temperature_decay() {
        let basis = single_mode(3);
        let a = basis.annihilation("b").unwrap();
        let h = SparseOperator::zeros(basis.dim());
        let l = assemble(
            &h,
            &[Channel {
                label: "a".into(),
                op: a,
                rate: 0.7,
            }],
            &[],
        )
        .unwrap();
        let mut rho = Mat::zeros(4, 4);
        rho[(0, 0)] = ONE;
        let out = l.apply(&vectorize(&rho)).unwrap();
        assert!(out.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn thermal_birth_death_chain_has_boltzmann_null_vector() {
        let cap = 6;
        let (nu, t, gamma) = (40.0, 300.0, 0.1);
        let basis = single_mode(cap);
        let b = basis.annihilation("b").unwrap();
        let nbar = thermal_occupation(nu, t).unwrap();
        let h = basis.number("b").unwrap().scale(C64::new(nu, 0.0));
        let channels = [
            Channel {
                label: "down".into(),
                op: b.clone(),
                rate: gamma * (nbar + 1.0),
            },
            Channel {
                label: "up".into(),
                op: b.adjoint(),
                rate: gamma * nbar,
            },
        ];
        let l = assemble(&h, &channels, &[]).unwrap();
        let ratio = (-nu / (K_B * t)).exp();
        let z: f64 = (0..=cap).map(|k| ratio.powi(k as i32)).sum();
        let rho = Mat::from_fn(cap + 1, cap + 1, |r, c| {
            if r == c {
                C64::new(ratio.powi(r as i32) / z, 0.0)
            } else {
                ZERO
            }
        });
        let out = l.apply(&vectorize(&rho)).unwrap();
        assert!(out.iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn effective_hamiltonian_reproduces_no_jump_part() {
        let basis = FockBasis::enumerate(ModeLayout::new(["a", "b"], 2).unwrap());
        let a = basis.annihilation("a").unwrap();
        let b = basis.annihilation("b").unwrap();
        let h = basis.number("a").unwrap().add(&basis.number("b").unwrap().scale(C64::new(0.3, 0.0))).unwrap();
        let ch = [Channel {
            label: "a".into(),
            op: a.clone(),
            rate: 0.4,
        }];
        let cross = [CrossChannel {
            label: "ab".into(),
            a: a.clone(),
            b: b.clone(),
            rate: 0.2,
        }];
        let l = assemble(&h, &ch, &cross).unwrap();
        let rho = Mat::from_fn(basis.dim(), basis.dim(), |r, c| C64::new((r + 2 * c) as f64, r as f64 - c as f64));
        let heff = l.effective_hamiltonian().to_mat();
        let jump = |x: &SparseOperator, y: &SparseOperator| -> Mat<C64> { &(&x.to_mat() * &rho) * y.to_mat().adjoint() };
        let expected = &(&(&heff * &rho) * faer::Scale(-I)) + &(&(&rho * heff.adjoint()) * faer::Scale(I));
        let expected = &expected + &(&jump(&a, &a) * faer::Scale(C64::new(0.4, 0.0)));
        let expected = &expected + &(&(&jump(&a, &b) + &jump(&b, &a)) * faer::Scale(C64::new(0.2, 0.0)));
        let got = l.apply_matrix(&rho).unwrap();
        assert!((&got - &expected).norm_max() < 1e-12);
    }

    #[test]
    fn non_hermitian_hamiltonian_rejected() {
        let h = SparseOperator::from_triplets(2, vec![(0, 1, ONE)]);
        assert!(matches!(assemble(&h, &[], &[]), Err(Error::NotHermitian(_))));
    }
}
