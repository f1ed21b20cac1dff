//! Expectation values, effective temperatures, reduced populations and
//! power spectral densities.

use faer::Mat;
use serde::Serialize;

use crate::basis::FockBasis;
use crate::error::{Error, Result};
use crate::liouvillian::{vectorize, Liouvillian};
use crate::model::K_B;
use crate::resolvent::Resolvent;
use crate::sparse::{SparseOperator, C64, I, ZERO};
use crate::steadystate::SolverOptions;

/// Populations below this are left out of the Boltzmann fit.
pub const THERMAL_FIT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveTemperature {
    pub mode_label: String,
    pub n: f64,
    /// Kelvin; `0.0` when `defined` is false.
    pub t_eff: f64,
    /// False when `n ≤ 0`, where the effective temperature has no meaning.
    pub defined: bool,
    pub thermal_fit_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub mode_label: String,
    pub frequencies: Vec<f64>,
    /// `NaN` where the resolvent solve failed.
    pub values: Vec<f64>,
    /// Grid index and message of each failed point.
    pub failures: Vec<(usize, String)>,
}

impl Spectrum {
    /// Frequency of the largest finite value.
    pub fn peak(&self) -> Option<(f64, f64)> {
        self.frequencies
            .iter()
            .zip(&self.values)
            .filter(|(_, v)| v.is_finite())
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(&w, &v)| (w, v))
    }

    /// Full width at half maximum of the main peak by linear interpolation,
    /// `None` when the peak touches the grid edge.
    pub fn fwhm(&self) -> Option<f64> {
        let (k, &max) = self
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .max_by(|a, b| a.1.total_cmp(b.1))?;
        let half = max / 2.0;
        let w = &self.frequencies;
        let s = &self.values;
        let mut lo = k;
        while lo > 0 && s[lo] > half {
            lo -= 1;
        }
        let mut hi = k;
        while hi + 1 < s.len() && s[hi] > half {
            hi += 1;
        }
        if s[lo] > half || s[hi] > half {
            return None;
        }
        let left = w[lo] + (half - s[lo]) / (s[lo + 1] - s[lo]) * (w[lo + 1] - w[lo]);
        let right = w[hi - 1] + (s[hi - 1] - half) / (s[hi - 1] - s[hi]) * (w[hi] - w[hi - 1]);
        Some(right - left)
    }

    /// Indices of strict local maxima above `fraction·max`.
    pub fn local_maxima(&self, fraction: f64) -> Vec<usize> {
        let max = self.values.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
        (1..self.values.len().saturating_sub(1))
            .filter(|&k| {
                let v = self.values[k];
                v > self.values[k - 1] && v > self.values[k + 1] && v >= fraction * max
            })
            .collect()
    }
}

fn check_dims(op: &SparseOperator, rho: &Mat<C64>) -> Result<()> {
    if rho.nrows() != op.dim() || rho.ncols() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            found: rho.nrows(),
        });
    }
    Ok(())
}

/// `Tr(op·ρ)`.
pub fn expect(op: &SparseOperator, rho: &Mat<C64>) -> Result<C64> {
    check_dims(op, rho)?;
    Ok(op.iter().fold(ZERO, |acc, (r, c, v)| acc + v * rho[(c, r)]))
}

/// `ν / (k_B ln(1 + 1/n))` in kelvin, `None` for `n ≤ 0`.
pub fn effective_temperature(nu: f64, n: f64) -> Option<f64> {
    if n > 0.0 && n.is_finite() {
        Some(nu / (K_B * (1.0 / n).ln_1p()))
    } else {
        None
    }
}

/// Occupation distribution of one mode, the other modes traced out.
pub fn reduced_state(rho: &Mat<C64>, basis: &FockBasis, label: &str) -> Result<Vec<f64>> {
    let k = basis.layout().mode_index(label)?;
    if rho.nrows() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: rho.nrows(),
        });
    }
    let max = basis.states().iter().map(|s| s[k]).max().unwrap_or(0) as usize;
    let mut p = vec![0.0; max + 1];
    for (i, s) in basis.states().iter().enumerate() {
        p[s[k] as usize] += rho[(i, i)].re;
    }
    Ok(p)
}

/// Largest relative deviation of `populations` from the geometric law
/// `exp(a + b·n)` fitted to `ln p_n` by least squares. Only populations
/// above [`THERMAL_FIT_FLOOR`] enter the fit; the deviation is taken over
/// every level where either the data or the fit exceeds the floor.
pub fn thermality_check(populations: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = populations
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > THERMAL_FIT_FLOOR)
        .map(|(n, &p)| (n as f64, p.ln()))
        .collect();
    if pts.is_empty() {
        return f64::INFINITY;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let sxx: f64 = pts.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    let sxy: f64 = pts.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    populations
        .iter()
        .enumerate()
        .filter_map(|(n, &p)| {
            let fit = (intercept + slope * n as f64).exp();
            (p > THERMAL_FIT_FLOOR || fit > THERMAL_FIT_FLOOR).then(|| (p - fit).abs() / fit)
        })
        .fold(0.0, f64::max)
}

/// Phonon number, effective temperature and thermality of a vibration.
pub fn vibration_temperature(rho: &Mat<C64>, basis: &FockBasis, label: &str, nu: f64) -> Result<EffectiveTemperature> {
    let n = expect(&basis.number(label)?, rho)?.re;
    let pops = reduced_state(rho, basis, label)?;
    let t = effective_temperature(nu, n);
    Ok(EffectiveTemperature {
        mode_label: label.to_string(),
        n,
        t_eff: t.unwrap_or(0.0),
        defined: t.is_some(),
        thermal_fit_residual: thermality_check(&pops),
    })
}

/// Power spectral density `S(ω) = 2 Re Tr[δA† X(ω)]` with
/// `(iω − L) X = δA ρ` and `δA = A − ⟨A⟩`. Failed points are reported in
/// [`Spectrum::failures`] instead of aborting the whole grid.
pub fn psd(
    l: &Liouvillian,
    rho: &Mat<C64>,
    op: &SparseOperator,
    label: &str,
    frequencies: &[f64],
    options: &SolverOptions,
) -> Result<Spectrum> {
    check_dims(op, rho)?;
    if l.dim() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            found: op.dim(),
        });
    }
    let dim = l.dim();
    let mean = expect(op, rho)?;
    let delta = op.sub(&SparseOperator::identity(dim).scale(mean))?;
    let delta_dag = delta.adjoint();
    let mut source = Mat::<C64>::zeros(dim, dim);
    for (r, k, v) in delta.iter() {
        for c in 0..dim {
            source[(r, c)] += v * rho[(k, c)];
        }
    }
    let rhs = vectorize(&source);
    let resolvent = Resolvent::new(l, options)?;
    let point = |w: f64| -> Result<f64> {
        let (x, _) = resolvent.solve(I * w, &rhs)?;
        // Tr[δA† X] = Σ δA†_{rc} X_{cr}
        let tr = delta_dag.iter().fold(ZERO, |acc, (r, c, v)| acc + v * x[r * dim + c]);
        Ok(2.0 * tr.re)
    };
    #[cfg(feature = "parallel")]
    let results: Vec<Result<f64>> = {
        use rayon::prelude::*;
        frequencies.par_iter().map(|&w| point(w)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<f64>> = frequencies.iter().map(|&w| point(w)).collect();
    let mut values = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => values.push(v),
            Err(e) => {
                log::warn!("PSD point ω = {} meV failed: {e}", frequencies[k]);
                failures.push((k, e.to_string()));
                values.push(f64::NAN);
            }
        }
    }
    Ok(Spectrum {
        mode_label: label.to_string(),
        frequencies: frequencies.to_vec(),
        values,
        failures,
    })
}
