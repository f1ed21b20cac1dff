//! Shifted solves `(s − L) x = y` for a fixed Liouvillian and many shifts.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};
use crate::krylov::gmres;
use crate::liouvillian::Liouvillian;
use crate::preconditioner::NoJumpInverse;
use crate::sparse::{C64, ZERO};
use crate::steadystate::{Backend, SolverOptions};

enum Kind {
    Direct(SymbolicLu<usize>),
    Iterative(NoJumpInverse),
}

pub struct Resolvent<'a> {
    l: &'a Liouvillian,
    kind: Kind,
    options: SolverOptions,
}

fn shifted(l: &Liouvillian, shift: C64) -> Result<SparseColMat<usize, C64>> {
    let n = l.matrix().dim();
    // the Liouvillian stores every diagonal position, so all shifts share one pattern
    let entries: Vec<Triplet<usize, usize, C64>> = l
        .matrix()
        .iter()
        .map(|(r, c, v)| Triplet::new(r, c, if r == c { shift - v } else { -v }))
        .collect();
    SparseColMat::try_new_from_triplets(n, n, &entries).map_err(|e| Error::Factorization(format!("{e:?}")))
}

impl<'a> Resolvent<'a> {
    pub fn new(l: &'a Liouvillian, options: &SolverOptions) -> Result<Self> {
        let kind = match options.backend.resolve(l.dim()) {
            Backend::Iterative => Kind::Iterative(NoJumpInverse::new(l)?),
            _ => {
                let pattern = shifted(l, C64::new(0.0, 1.0))?;
                Kind::Direct(
                    SymbolicLu::try_new(pattern.symbolic()).map_err(|e| Error::Factorization(format!("{e:?}")))?,
                )
            }
        };
        Ok(Self {
            l,
            kind,
            options: *options,
        })
    }

    /// Returns `x` and, for the iterative backend, the GMRES iteration count.
    pub fn solve(&self, shift: C64, rhs: &[C64]) -> Result<(Vec<C64>, Option<usize>)> {
        let n = self.l.matrix().dim();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: rhs.len(),
            });
        }
        match &self.kind {
            Kind::Direct(symbolic) => {
                let mat = shifted(self.l, shift)?;
                let lu = Lu::try_new_with_symbolic(symbolic.clone(), mat.as_ref())
                    .map_err(|e| Error::Factorization(format!("{e:?}")))?;
                let mut b = Mat::from_fn(n, 1, |i, _| rhs[i]);
                lu.solve_in_place(b.as_mut());
                let x: Vec<C64> = (0..n).map(|i| b[(i, 0)]).collect();
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Factorization(format!("singular resolvent at shift {shift}")));
                }
                Ok((x, None))
            }
            Kind::Iterative(pre) => {
                let apply = |v: &[C64]| -> Result<Vec<C64>> {
                    let lv = self.l.apply(v)?;
                    Ok(v.iter().zip(&lv).map(|(x, y)| shift * x - y).collect())
                };
                let out = gmres(
                    apply,
                    |v: &[C64]| pre.solve(v, shift),
                    rhs,
                    vec![ZERO; n],
                    self.options.restart,
                    self.options.tolerance,
                    self.options.max_iterations,
                )?;
                Ok((out.solution, Some(out.iterations)))
            }
        }
    }
}
