//! Self-checks against closed-form results and internal consistency.

use faer::Mat;
use serde::Serialize;

use crate::basis::{FockBasis, ModeLayout};
use crate::config::Variant;
use crate::error::Result;
use crate::hybrid::{build_hybrid_liouvillian, hybrid_annihilation, hybridize};
use crate::liouvillian::{assemble, vec_trace, vectorize, Liouvillian};
use crate::model::{thermal_occupation, Channel, Couplings, Drive, PhotonMode, SetupParams, SystemModel, K_B};
use crate::observables::{expect, psd, reduced_state};
use crate::runner::{model_liouvillian, run_variant};
use crate::sparse::C64;
use crate::steadystate::{solve, SolverOptions};

pub const HYBRID_EQUIVALENCE_TOL: f64 = 1e-8;
pub const BOLTZMANN_RATIO_TOL: f64 = 1e-9;
pub const DRIVEN_CAVITY_TOL: f64 = 1e-3;
pub const LORENTZIAN_TOL: f64 = 0.05;
pub const CAP_CONVERGENCE_TOL_K: f64 = 2.0;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }

    fn from_result(name: &str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => Self::new(name, passed, detail),
            Err(e) => Self::new(name, false, format!("error: {e}")),
        }
    }
}

/// Single vibration `ν b†b` coupled to a bath at temperature `t`.
pub fn thermal_mode(cap: usize, nu: f64, t: f64, gamma: f64) -> Result<(Liouvillian, FockBasis)> {
    let basis = FockBasis::enumerate(ModeLayout::new(["b"], cap)?);
    let nbar = thermal_occupation(nu, t)?;
    let b = basis.annihilation("b")?;
    let h = basis.number("b")?.scale(C64::new(nu, 0.0));
    let ch = [
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
    Ok((assemble(&h, &ch, &[])?, basis))
}

fn binomial(n: usize, k: usize) -> usize {
    (1..=k).fold(1, |acc, i| acc * (n + 1 - i) / i)
}

pub fn check_basis() -> Result<(bool, String)> {
    let mut ok = true;
    for cap in 0..=6 {
        let basis = FockBasis::enumerate(ModeLayout::new(["c", "p1", "p2", "b1", "b2"], cap)?);
        ok &= basis.dim() == binomial(5 + cap, cap);
        ok &= (0..basis.dim()).all(|i| basis.total_excitations(i) <= cap);
    }
    let dim5 = FockBasis::enumerate(ModeLayout::new(["c", "p1", "p2", "b1", "b2"], 5)?).dim();
    Ok((ok && dim5 == 252, format!("dim(K=5) = {dim5}")))
}

fn test_state(n: usize) -> Mat<C64> {
    let a = Mat::from_fn(n, n, |r, c| C64::new(((r * 7 + c * 3) % 11) as f64 - 5.0, ((r + 2 * c) % 5) as f64 - 2.0));
    let mut rho = &a * a.adjoint();
    let tr: C64 = (0..n).map(|i| rho[(i, i)]).sum();
    rho /= faer::Scale(tr);
    rho
}

pub fn check_liouvillian() -> Result<(bool, String)> {
    let mut setup = SetupParams::reference(35.0);
    setup.cap = 2;
    let model = setup.to_model()?;
    let basis = model.basis()?;
    let l = model_liouvillian(&model, &basis)?;
    let n = basis.dim();
    let rho = test_state(n);
    let lrho = l.apply_matrix(&rho)?;
    let scale = l.max_abs();
    let trace = vec_trace(&vectorize(&lrho), n).norm() / scale;
    let herm = (&lrho - lrho.adjoint()).norm_max() / scale;
    let ok = trace < 1e-12 && herm < 1e-12;
    Ok((ok, format!("|Tr L(ρ)| = {trace:.1e}, |L(ρ) − L(ρ)†| = {herm:.1e} (relative)")))
}

pub fn check_thermal() -> Result<(bool, String)> {
    let (nu, t) = (40.0, 300.0);
    let (l, basis) = thermal_mode(10, nu, t, 0.1)?;
    let ss = solve(&l, &basis, &SolverOptions::default())?;
    let p = reduced_state(&ss.rho, &basis, "b")?;
    let x = (-nu / (K_B * t)).exp();
    let dev = p.windows(2).map(|w| (w[1] / w[0] - x).abs()).fold(0.0, f64::max);
    Ok((dev <= BOLTZMANN_RATIO_TOL, format!("max |p(n+1)/p(n) − e^(−ν/kT)| = {dev:.1e}")))
}

pub fn check_driven_cavity() -> Result<(bool, String)> {
    let (omega_l, delta, kappa) = (1000.0, 2.0, 1.0);
    let amp = kappa / 10.0;
    let model = SystemModel {
        photon_modes: vec![PhotonMode {
            label: "a".into(),
            omega: omega_l + delta,
            kappa,
        }],
        vibrations: Vec::new(),
        couplings: Couplings::default(),
        drive: Drive::laser(omega_l, amp, 0),
        cross_decay: Vec::new(),
        basis_cap: 6,
    };
    let basis = model.basis()?;
    let l = model_liouvillian(&model, &basis)?;
    let ss = solve(&l, &basis, &SolverOptions::default())?;
    let a = expect(&basis.annihilation("a")?, &ss.rho)?;
    let exact = -amp / C64::new(kappa / 2.0, delta);
    let dev = (a - exact).norm();
    Ok((dev <= DRIVEN_CAVITY_TOL, format!("|⟨a⟩ − ⟨a⟩_exact| = {dev:.1e}")))
}

/// Occupations below this are compared in absolute rather than relative
/// terms: a solve carries absolute errors near machine precision whatever
/// the size of the occupation.
pub const OCCUPATION_FLOOR: f64 = 1e-6;

/// Largest relative difference in `n₁, n₂` and the six photon numbers
/// between the original model and its hybrid-basis form. `tamper` edits
/// the hybrid model before it is solved.
pub fn hybrid_equivalence_deviation(
    setup: &SetupParams,
    tamper: &dyn Fn(&mut SystemModel),
    solver: &SolverOptions,
) -> Result<f64> {
    let model = setup.to_model()?;
    let basis = model.basis()?;
    let l = model_liouvillian(&model, &basis)?;
    let rho = solve(&l, &basis, solver)?.rho;
    let (params, mut hyb) = hybridize(&model)?;
    tamper(&mut hyb);
    let hbasis = hyb.basis()?;
    let hl = build_hybrid_liouvillian(&hyb, &hbasis)?;
    let hrho = solve(&hl, &hbasis, solver)?.rho;

    let hyb_ops = hybrid_annihilation(&params, &model, &basis)?;
    let orig_ops = crate::runner::original_annihilation(&params, &hbasis)?;
    let n = |op: &crate::sparse::SparseOperator, r: &Mat<C64>| -> Result<f64> { Ok(expect(&op.adjoint().compose(op)?, r)?.re) };
    let mut pairs = Vec::new();
    for v in &model.vibrations {
        pairs.push((expect(&basis.number(&v.label)?, &rho)?.re, expect(&hbasis.number(&v.label)?, &hrho)?.re));
    }
    for (k, m) in model.photon_modes.iter().enumerate().take(3) {
        pairs.push((expect(&basis.number(&m.label)?, &rho)?.re, n(&orig_ops[k], &hrho)?));
    }
    for (k, m) in hyb.photon_modes.iter().enumerate() {
        pairs.push((n(&hyb_ops[k], &rho)?, expect(&hbasis.number(&m.label)?, &hrho)?.re));
    }
    Ok(pairs
        .iter()
        .map(|&(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(OCCUPATION_FLOOR))
        .fold(0.0, f64::max))
}

/// Fault injection: reverses the sign of every cross-decay rate.
pub fn flip_cross_decay(m: &mut SystemModel) {
    for c in &mut m.cross_decay {
        c.rate = -c.rate;
    }
}

pub fn check_hybrid(cap: usize) -> Result<(bool, String)> {
    let mut setup = SetupParams::reference(35.0);
    setup.cap = cap;
    let dev = hybrid_equivalence_deviation(&setup, &|_| {}, &SolverOptions::default())?;
    Ok((dev <= HYBRID_EQUIVALENCE_TOL, format!("max relative deviation {dev:.1e} at K = {cap}")))
}

pub fn check_fault_injection() -> Result<(bool, String)> {
    let mut setup = SetupParams::reference(35.0);
    setup.cap = 2;
    let dev = hybrid_equivalence_deviation(&setup, &flip_cross_decay, &SolverOptions::default())?;
    Ok((
        dev > HYBRID_EQUIVALENCE_TOL,
        format!("flipped κ± sign gives deviation {dev:.1e} (must exceed {HYBRID_EQUIVALENCE_TOL:.0e})"),
    ))
}

pub fn check_lorentzian() -> Result<(bool, String)> {
    let (nu, t, gamma) = (40.0, 300.0, 0.1);
    let (l, basis) = thermal_mode(10, nu, t, gamma)?;
    let ss = solve(&l, &basis, &SolverOptions::default())?;
    let nbar = thermal_occupation(nu, t)?;
    let grid: Vec<f64> = (0..201).map(|k| nu - 0.2 + 0.002 * k as f64).collect();
    let s = psd(&l, &ss.rho, &basis.annihilation("b")?, "b", &grid, &SolverOptions::default())?;
    let (center, peak) = s.peak().unwrap_or((f64::NAN, f64::NAN));
    let fwhm = s.fwhm().unwrap_or(f64::NAN);
    let expected_peak = 4.0 * nbar / gamma;
    let errs = [
        (center - nu).abs() / nu,
        (fwhm - gamma).abs() / gamma,
        (peak - expected_peak).abs() / expected_peak,
    ];
    let ok = errs.iter().all(|e| *e <= LORENTZIAN_TOL) && s.failures.is_empty();
    Ok((
        ok,
        format!("center {center:.3} meV, FWHM {fwhm:.4} meV, peak {:.2}% off", 100.0 * errs[2]),
    ))
}

pub fn check_convergence() -> Result<(bool, String)> {
    let run = |cap: usize| -> Result<[f64; 2]> {
        let mut setup = SetupParams::reference(35.0);
        setup.cap = cap;
        let o = run_variant(&setup, Variant::Full, &SolverOptions::default())?;
        Ok([o.molecules[0].t_eff, o.molecules[1].t_eff])
    };
    let (a, b) = (run(5)?, run(6)?);
    let d = [(a[0] - b[0]).abs(), (a[1] - b[1]).abs()];
    Ok((
        d[0] < CAP_CONVERGENCE_TOL_K && d[1] < CAP_CONVERGENCE_TOL_K,
        format!("ΔT₁ = {:.2} K, ΔT₂ = {:.2} K between K = 5 and K = 6", d[0], d[1]),
    ))
}

/// Runs every check; `thorough` adds the K = 5 hybrid comparison and the
/// K = 5/6 convergence test.
pub fn run_suite(thorough: bool) -> Vec<Check> {
    let mut checks = vec![
        Check::from_result("basis dimension", check_basis()),
        Check::from_result("Liouvillian preserves trace and Hermiticity", check_liouvillian()),
        Check::from_result("thermal steady state", check_thermal()),
        Check::from_result("driven cavity amplitude", check_driven_cavity()),
        Check::from_result("hybrid equivalence K=3", check_hybrid(3)),
        Check::from_result("hybrid check detects flipped κ±", check_fault_injection()),
        Check::from_result("Lorentzian spectrum", check_lorentzian()),
    ];
    if thorough {
        checks.push(Check::from_result("hybrid equivalence K=5", check_hybrid(5)));
        checks.push(Check::from_result("cap convergence", check_convergence()));
    }
    checks
}
