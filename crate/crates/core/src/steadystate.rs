//! Steady states `L vec(ρ) = 0`, `Tr ρ = 1`.
//!
//! The equation for `ρ[0,0]` is replaced with the trace functional. The
//! direct backend factorizes the resulting nonsingular system by sparse LU.
//! The iterative backend solves the same system with GMRES, preconditioned
//! by the exact inverse of the no-jump Liouvillian. Sparse LU fill grows
//! steeply with the excitation cap, so `Auto` switches to GMRES above
//! [`AUTO_DIRECT_MAX_DIM`].

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::basis::FockBasis;
use crate::error::{Error, Result};
use crate::krylov::gmres;
use crate::preconditioner::NoJumpInverse;
use crate::liouvillian::{devectorize, vectorize, Liouvillian};
use crate::sparse::{C64, ONE, ZERO};

/// Systems at or below this side length get a dense null-space check.
pub const UNIQUENESS_CHECK_MAX_DIM: usize = 20;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = -1e-8;
pub const CAP_SHELL_WARNING: f64 = 1e-3;
/// Residual threshold relative to `max |L_ij|`.
pub const RELATIVE_RESIDUAL_TOL: f64 = 1e-9;
/// Largest Hilbert-space dimension that `Backend::Auto` solves directly.
pub const AUTO_DIRECT_MAX_DIM: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Auto,
    Direct,
    Iterative,
}

impl Backend {
    /// Concrete backend for a Hilbert space of dimension `dim`.
    pub fn resolve(self, dim: usize) -> Backend {
        match self {
            Backend::Auto if dim <= AUTO_DIRECT_MAX_DIM => Backend::Direct,
            Backend::Auto => Backend::Iterative,
            other => other,
        }
    }
}

impl std::str::FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Backend::Auto),
            "direct" => Ok(Backend::Direct),
            "iterative" => Ok(Backend::Iterative),
            other => Err(format!("unknown backend `{other}` (expected auto|direct|iterative)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub backend: Backend,
    /// Relative residual target of the iterative backend.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Krylov subspace size between restarts.
    pub restart: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            backend: Backend::Auto,
            tolerance: 1e-12,
            max_iterations: 2000,
            restart: 60,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: Mat<C64>,
    /// `‖L vec(ρ)‖₂` of the returned (Hermitized, normalized) state.
    pub residual: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
    pub cap_shell_population: f64,
    /// Largest `|ρ − ρ†|/2` removed by Hermitization.
    pub hermitization_correction: f64,
    /// Trace of the raw linear-solve output before renormalization.
    pub raw_trace: C64,
    pub iterations: Option<usize>,
    pub truncation_warning: bool,
}

/// Trace-constrained system: row 0 of `L` replaced with the trace functional.
fn augmented_triplets(l: &Liouvillian) -> Vec<(usize, usize, C64)> {
    let m = l.matrix();
    let mut t: Vec<(usize, usize, C64)> = m.iter().filter(|&(r, _, _)| r != 0).collect();
    t.extend(l.trace_row().map(|c| (0, c, ONE)));
    t
}

fn sparse_lu_solve(n: usize, triplets: &[(usize, usize, C64)], rhs: &[C64]) -> Result<Vec<C64>> {
    let entries: Vec<Triplet<usize, usize, C64>> = triplets.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
    let mat = SparseColMat::<usize, C64>::try_new_from_triplets(n, n, &entries)
        .map_err(|e| Error::Factorization(format!("{e:?}")))?;
    let lu = mat.sp_lu().map_err(|e| Error::Factorization(format!("{e:?}")))?;
    let mut b = Mat::from_fn(n, 1, |i, _| rhs[i]);
    lu.solve_in_place(b.as_mut());
    Ok((0..n).map(|i| b[(i, 0)]).collect())
}

pub fn solve(l: &Liouvillian, basis: &FockBasis, options: &SolverOptions) -> Result<SteadyState> {
    let dim = l.dim();
    if basis.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: basis.dim(),
        });
    }
    if dim <= UNIQUENESS_CHECK_MAX_DIM {
        let nullity = null_space_dimension(l)?;
        if nullity > 1 {
            return Err(Error::DegenerateNullSpace(nullity));
        }
    }
    let n = dim * dim;
    let mut rhs = vec![ZERO; n];
    rhs[0] = ONE;
    let (x, iterations) = match options.backend.resolve(dim) {
        Backend::Iterative => {
            let pre = NoJumpInverse::new(l)?;
            let apply = |v: &[C64]| -> Result<Vec<C64>> {
                let mut out = l.apply(v)?;
                out[0] = l.trace_row().fold(ZERO, |acc, k| acc + v[k]);
                Ok(out)
            };
            let precond = |v: &[C64]| pre.solve(v, ZERO);
            let mut x0 = vec![ZERO; n];
            for k in l.trace_row() {
                x0[k] = C64::new(1.0 / dim as f64, 0.0);
            }
            let out = gmres(apply, precond, &rhs, x0, options.restart, options.tolerance, options.max_iterations)?;
            log::debug!(
                "GMRES converged in {} iterations to relative residual {:.2e}",
                out.iterations,
                out.relative_residual
            );
            (out.solution, Some(out.iterations))
        }
        _ => (sparse_lu_solve(n, &augmented_triplets(l), &rhs)?, None),
    };
    finalize(l, basis, &x, iterations)
}

fn finalize(l: &Liouvillian, basis: &FockBasis, x: &[C64], iterations: Option<usize>) -> Result<SteadyState> {
    let dim = l.dim();
    let raw = devectorize(x, dim)?;
    let mut hermitization_correction: f64 = 0.0;
    let mut rho = Mat::from_fn(dim, dim, |r, c| {
        let avg = (raw[(r, c)] + raw[(c, r)].conj()) * 0.5;
        hermitization_correction = hermitization_correction.max((raw[(r, c)] - avg).norm());
        avg
    });
    let raw_trace = (0..dim).fold(ZERO, |acc, k| acc + raw[(k, k)]);
    let tr: f64 = (0..dim).map(|k| rho[(k, k)].re).sum();
    if !(tr.abs() > 0.0) || !tr.is_finite() {
        return Err(Error::Factorization("solution has zero or non-finite trace".into()));
    }
    for c in 0..dim {
        for r in 0..dim {
            rho[(r, c)] /= tr;
        }
    }
    let mut state = SteadyState {
        rho,
        residual: 0.0,
        trace_error: 0.0,
        min_eigenvalue: 0.0,
        cap_shell_population: 0.0,
        hermitization_correction,
        raw_trace,
        iterations,
        truncation_warning: false,
    };
    let report = verify(&state, l, basis)?;
    state.residual = report.residual;
    state.trace_error = report.trace_error;
    state.min_eigenvalue = report.min_eigenvalue;
    state.cap_shell_population = report.cap_shell_population;
    state.truncation_warning = report.truncation_warning;
    if report.truncation_warning {
        log::warn!(
            "population {:.3e} on the excitation cap shell exceeds {CAP_SHELL_WARNING:e}; increase the cap",
            report.cap_shell_population
        );
    }
    if report.min_eigenvalue < POSITIVITY_TOL {
        return Err(Error::Verification(format!(
            "steady state has eigenvalue {:.3e} below {POSITIVITY_TOL:e}",
            report.min_eigenvalue
        )));
    }
    Ok(state)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub residual: f64,
    pub residual_threshold: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
    pub cap_shell_population: f64,
    pub hermitian: bool,
    pub truncation_warning: bool,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.residual <= self.residual_threshold
            && self.trace_error <= TRACE_TOL
            && self.min_eigenvalue >= POSITIVITY_TOL
            && self.hermitian
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.residual > self.residual_threshold {
            out.push(format!("residual {:.3e} > {:.3e}", self.residual, self.residual_threshold));
        }
        if self.trace_error > TRACE_TOL {
            out.push(format!("trace error {:.3e}", self.trace_error));
        }
        if self.min_eigenvalue < POSITIVITY_TOL {
            out.push(format!("min eigenvalue {:.3e}", self.min_eigenvalue));
        }
        if !self.hermitian {
            out.push("state is not Hermitian".into());
        }
        out
    }
}

/// Recomputes residual, trace, positivity and cap-shell population of a
/// state from scratch.
pub fn verify(state: &SteadyState, l: &Liouvillian, basis: &FockBasis) -> Result<VerifyReport> {
    let dim = l.dim();
    let rho = &state.rho;
    if rho.nrows() != dim || basis.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: rho.nrows(),
        });
    }
    let lr = l.apply(&vectorize(rho))?;
    let residual = lr.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let trace = (0..dim).fold(ZERO, |acc, k| acc + rho[(k, k)]);
    let trace_error = (trace - ONE).norm();
    let mut herm_err: f64 = 0.0;
    for r in 0..dim {
        for c in 0..dim {
            herm_err = herm_err.max((rho[(r, c)] - rho[(c, r)].conj()).norm());
        }
    }
    let eig = rho
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Verification(format!("eigenvalue computation failed: {e:?}")))?;
    let min_eigenvalue = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let cap = basis.layout().cap();
    let cap_shell_population = (0..dim)
        .filter(|&k| basis.total_excitations(k) == cap)
        .map(|k| rho[(k, k)].re)
        .sum::<f64>();
    Ok(VerifyReport {
        residual,
        residual_threshold: RELATIVE_RESIDUAL_TOL * l.max_abs(),
        trace_error,
        min_eigenvalue,
        cap_shell_population,
        hermitian: herm_err <= 1e-12,
        truncation_warning: cap_shell_population > CAP_SHELL_WARNING,
    })
}

/// Dimension of the numerical null space of a small Liouvillian.
pub fn null_space_dimension(l: &Liouvillian) -> Result<usize> {
    let n = l.matrix().dim();
    let mut dense = Mat::<C64>::zeros(n, n);
    for (r, c, v) in l.matrix().iter() {
        dense[(r, c)] = v;
    }
    let sv = dense
        .singular_values()
        .map_err(|e| Error::Verification(format!("SVD failed: {e:?}")))?;
    let scale = sv.first().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    Ok(sv.iter().filter(|&&s| s <= 1e-10 * scale).count())
}
