//! Restarted, right-preconditioned GMRES.

use crate::error::{Error, Result};
use crate::sparse::{C64, ONE, ZERO};

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).fold(ZERO, |acc, (x, y)| acc + x.conj() * y)
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub solution: Vec<C64>,
    pub relative_residual: f64,
    pub iterations: usize,
}

/// Solves `A x = b` with right preconditioner `M⁻¹`, stopping when the true
/// residual satisfies `‖b − A x‖ ≤ tol·‖b‖`.
pub fn gmres<A, P>(
    apply_a: A,
    apply_precond: P,
    b: &[C64],
    x0: Vec<C64>,
    restart: usize,
    tol: f64,
    max_iterations: usize,
) -> Result<GmresOutcome>
where
    A: Fn(&[C64]) -> Result<Vec<C64>>,
    P: Fn(&[C64]) -> Result<Vec<C64>>,
{
    let n = b.len();
    let bnorm = norm(b).max(f64::MIN_POSITIVE);
    let mut x = x0;
    let mut iterations = 0;
    let mut stagnant_restarts = 0;
    let mut last = f64::INFINITY;
    loop {
        let ax = apply_a(&x)?;
        let r: Vec<C64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        let rel = beta / bnorm;
        if rel <= tol {
            return Ok(GmresOutcome {
                solution: x,
                relative_residual: rel,
                iterations,
            });
        }
        if iterations >= max_iterations || stagnant_restarts >= 3 {
            return Err(Error::NonConvergence {
                residual: rel,
                iterations,
            });
        }
        // restarts that gain less than a factor 2 count as stagnation
        if rel > 0.5 * last {
            stagnant_restarts += 1;
        } else {
            stagnant_restarts = 0;
        }
        last = rel;

        let m = restart.min(max_iterations - iterations).max(1);
        let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut hess = vec![vec![ZERO; m]; m + 1];
        let (mut cs, mut sn) = (vec![ZERO; m], vec![ZERO; m]);
        let mut g = vec![ZERO; m + 1];
        g[0] = C64::new(beta, 0.0);
        let mut used = 0;
        for j in 0..m {
            let z = apply_precond(&basis[j])?;
            let mut w = apply_a(&z)?;
            // modified Gram–Schmidt, two passes
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let h = dot(v, &w);
                    hess[i][j] += h;
                    w.iter_mut().zip(v).for_each(|(wk, vk)| *wk -= h * vk);
                }
            }
            let hn = norm(&w);
            hess[j + 1][j] = C64::new(hn, 0.0);
            for i in 0..j {
                let t = cs[i].conj() * hess[i][j] + sn[i].conj() * hess[i + 1][j];
                hess[i + 1][j] = -sn[i] * hess[i][j] + cs[i] * hess[i + 1][j];
                hess[i][j] = t;
            }
            let (hjj, hj1) = (hess[j][j], hess[j + 1][j]);
            let denom = (hjj.norm_sqr() + hj1.norm_sqr()).sqrt();
            if denom == 0.0 {
                cs[j] = ONE;
                sn[j] = ZERO;
            } else {
                cs[j] = hjj / denom;
                sn[j] = hj1 / denom;
            }
            hess[j][j] = cs[j].conj() * hjj + sn[j].conj() * hj1;
            hess[j + 1][j] = ZERO;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j].conj() * g[j];
            used = j + 1;
            iterations += 1;
            log::trace!("gmres iteration {iterations}: estimated residual {:.3e}", g[j + 1].norm() / bnorm);
            if g[j + 1].norm() / bnorm <= tol * 0.1 || hn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        let mut y = vec![ZERO; used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for k in i + 1..used {
                s -= hess[i][k] * y[k];
            }
            y[i] = s / hess[i][i];
        }
        let mut update = vec![ZERO; n];
        for (k, yk) in y.iter().enumerate() {
            update.iter_mut().zip(&basis[k]).for_each(|(u, v)| *u += yk * v);
        }
        let update = apply_precond(&update)?;
        x.iter_mut().zip(&update).for_each(|(xi, ui)| *xi += ui);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SparseOperator;

    fn test_matrix(n: usize) -> SparseOperator {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, C64::new(4.0, 1.0)));
            if i + 1 < n {
                t.push((i, i + 1, C64::new(-1.0, 0.5)));
                t.push((i + 1, i, C64::new(-1.5, 0.0)));
            }
            t.push((i, (i * 7) % n, C64::new(0.3, -0.2)));
        }
        SparseOperator::from_triplets(n, t)
    }

    #[test]
    fn solves_nonsymmetric_system() {
        let n = 40;
        let a = test_matrix(n);
        let x_true: Vec<C64> = (0..n).map(|i| C64::new(i as f64, 1.0 - i as f64 * 0.1)).collect();
        let b = a.matvec(&x_true).unwrap();
        let out = gmres(|v| a.matvec(v), |v| Ok(v.to_vec()), &b, vec![ZERO; n], 15, 1e-13, 2000).unwrap();
        assert!(out.relative_residual <= 1e-13);
        for (x, y) in out.solution.iter().zip(&x_true) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn exact_preconditioner_converges_in_one_step() {
        let n = 10;
        let diag: Vec<C64> = (0..n).map(|i| C64::new(1.0 + i as f64, 0.5)).collect();
        let a = SparseOperator::from_triplets(n, (0..n).map(|i| (i, i, diag[i])).collect());
        let b: Vec<C64> = (0..n).map(|i| C64::new(1.0, i as f64)).collect();
        let out = gmres(
            |v| a.matvec(v),
            |v| Ok(v.iter().zip(&diag).map(|(x, d)| x / d).collect()),
            &b,
            vec![ZERO; n],
            5,
            1e-14,
            50,
        )
        .unwrap();
        assert!(out.iterations <= 1);
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let a = test_matrix(40);
        let b = vec![ONE; 40];
        let err = gmres(|v| a.matvec(v), |v| Ok(v.to_vec()), &b, vec![ZERO; 40], 2, 1e-15, 3).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }
}
