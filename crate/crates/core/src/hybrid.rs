//! Hybrid photonic modes of the cavity + two-antenna sector, the
//! cavity-like single-mode reduction, and adiabatic elimination of that
//! mode into an effective two-vibration model.
//!
//! Mode conventions (`c = cos θ`, `s = sin θ`, `a_S = (a_p1 + a_p2)/√2`):
//!
//! ```text
//! a₋ = −c·a_c + s·a_S      a_c  = −c·a₋ + s·a₊
//! a₊ =  s·a_c + c·a_S      a_p1 = (s·a₋ + c·a₊ + a_D)/√2
//! a_D = (a_p1 − a_p2)/√2   a_p2 = (s·a₋ + c·a₊ − a_D)/√2
//! ```
//!
//! The sign on `a_c` makes `a₋` and `a₊` eigenmodes of the photonic block
//! for positive `g_cp`. Mixed terms involving `a_D` change sign between the
//! two molecules.

use num_complex::Complex64;
use serde::Serialize;

use crate::basis::FockBasis;
use crate::error::{Error, Result};
use crate::liouvillian::{assemble, Liouvillian};
use crate::model::{
    thermal_occupation, Channel, Couplings, CrossDecay, Drive, DriveTerm, Optomech, PhotonMode, SystemModel,
};
use crate::sparse::{SparseOperator, C64, ZERO};

pub const MINUS: &str = "minus";
pub const PLUS: &str = "plus";
pub const DARK: &str = "dark";

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HybridParams {
    pub theta: f64,
    pub delta_minus: f64,
    pub delta_plus: f64,
    pub delta_d: f64,
    pub g_minus: f64,
    pub g_plus: f64,
    pub g_d: f64,
    pub g_plusminus: f64,
    pub g_dminus: f64,
    pub g_dplus: f64,
    pub kappa_minus: f64,
    pub kappa_plus: f64,
    pub kappa_d: f64,
    pub kappa_pm: f64,
}

impl HybridParams {
    /// Closed forms for a cavity at detuning `delta_c` coupled with `g_cp`
    /// to two identical antennas at `delta_p`, each carrying one molecule
    /// with optomechanical rate `g_p`.
    pub fn from_closed_forms(delta_c: f64, delta_p: f64, g_cp: f64, kappa_c: f64, kappa_p: f64, g_p: f64) -> Self {
        let theta = if g_cp == 0.0 {
            0.0
        } else {
            0.5 * (8f64.sqrt() * g_cp / (delta_p - delta_c)).atan()
        };
        let (s, c) = theta.sin_cos();
        let x = 2f64.sqrt() * g_cp;
        Self {
            theta,
            delta_minus: c * c * delta_c + s * s * delta_p - 2.0 * s * c * x,
            delta_plus: s * s * delta_c + c * c * delta_p + 2.0 * s * c * x,
            delta_d: delta_p,
            g_minus: s * s * g_p / 2.0,
            g_plus: c * c * g_p / 2.0,
            g_d: g_p / 2.0,
            g_plusminus: s * c * g_p / 2.0,
            g_dminus: s * g_p / 2.0,
            g_dplus: c * g_p / 2.0,
            kappa_minus: c * c * kappa_c + s * s * kappa_p,
            kappa_plus: c * c * kappa_p + s * s * kappa_c,
            kappa_d: kappa_p,
            kappa_pm: (kappa_p - kappa_c) * s * c,
        }
    }

    /// Rows `(minus, plus, dark)`, columns `(c, p1, p2)`: `a_β = Σ U_βα a_α`.
    pub fn rotation(&self) -> [[f64; 3]; 3] {
        let (s, c) = self.theta.sin_cos();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        [[-c, s * r, s * r], [s, c * r, c * r], [0.0, r, -r]]
    }

    /// The `(name, value)` table printed by the CLI.
    pub fn table(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("theta_rad", self.theta),
            ("delta_minus_meV", self.delta_minus),
            ("delta_plus_meV", self.delta_plus),
            ("delta_D_meV", self.delta_d),
            ("g_minus_meV", self.g_minus),
            ("g_plus_meV", self.g_plus),
            ("g_D_meV", self.g_d),
            ("g_plusminus_meV", self.g_plusminus),
            ("g_Dminus_meV", self.g_dminus),
            ("g_Dplus_meV", self.g_dplus),
            ("kappa_minus_meV", self.kappa_minus),
            ("kappa_plus_meV", self.kappa_plus),
            ("kappa_D_meV", self.kappa_d),
            ("kappa_pm_meV", self.kappa_pm),
        ]
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= SYMMETRY_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Checks the cavity + two identical antennas + one molecule per antenna
/// geometry and returns `(g_cp, g_p)`.
fn check_geometry(model: &SystemModel) -> Result<(f64, f64)> {
    let fail = |msg: &str| Err(Error::Hybridization(msg.to_string()));
    if model.photon_modes.len() != 3 || model.vibrations.len() != 2 {
        return fail("expected one cavity, two antennas and two vibrations");
    }
    if !model.cross_decay.is_empty() {
        return fail("model already carries cross decay terms");
    }
    let (p1, p2) = (&model.photon_modes[1], &model.photon_modes[2]);
    if !close(p1.omega, p2.omega) || !close(p1.kappa, p2.kappa) {
        return fail("antenna resonances are not identical");
    }
    let c = &model.couplings;
    let g_cp = c.hopping_between(0, 1);
    if !close(g_cp, c.hopping_between(0, 2)) || c.hopping_between(1, 2) != 0.0 {
        return fail("cavity must couple equally to both antennas, which must not couple directly");
    }
    let g_p = c.optomech_rate(1, 1, 0);
    if !close(g_p, c.optomech_rate(2, 2, 1)) {
        return fail("antenna-molecule couplings differ");
    }
    let allowed = |o: &Optomech| (o.photon_a, o.photon_b, o.vibration) == (1, 1, 0) || (o.photon_a, o.photon_b, o.vibration) == (2, 2, 1);
    if c.optomech.iter().any(|o| o.g != 0.0 && !allowed(o)) {
        return fail("only antenna i may couple to molecule i");
    }
    Ok((g_cp, g_p))
}

/// Drive amplitudes after substituting the inverse rotation.
fn rotated_drive(drive: &Drive, u: &[[f64; 3]; 3]) -> Vec<C64> {
    let mut eps = [ZERO; 3];
    for t in &drive.terms {
        for (beta, e) in eps.iter_mut().enumerate() {
            *e += t.amplitude * u[beta][t.photon];
        }
    }
    eps.to_vec()
}

fn hybrid_mode(label: &str, delta: f64, omega_l: f64, kappa: f64) -> PhotonMode {
    PhotonMode {
        label: label.into(),
        omega: delta + omega_l,
        kappa,
    }
}

/// Rewrites the full model in the hybrid basis `(minus, plus, dark)`.
pub fn hybridize(model: &SystemModel) -> Result<(HybridParams, SystemModel)> {
    model.validate()?;
    let (g_cp, g_p) = check_geometry(model)?;
    let drive = &model.drive;
    let dc = model.photon_modes[0].omega - drive.omega_l;
    let dp = model.photon_modes[1].omega - drive.omega_l;
    let params =
        HybridParams::from_closed_forms(dc, dp, g_cp, model.photon_modes[0].kappa, model.photon_modes[1].kappa, g_p);
    let p = &params;
    let ol = drive.omega_l;
    let photon_modes = vec![
        hybrid_mode(MINUS, p.delta_minus, ol, p.kappa_minus),
        hybrid_mode(PLUS, p.delta_plus, ol, p.kappa_plus),
        hybrid_mode(DARK, p.delta_d, ol, p.kappa_d),
    ];
    let mut optomech = Vec::new();
    for (j, sigma) in [(0usize, 1.0), (1, -1.0)] {
        for (a, b, g) in [
            (0, 0, p.g_minus),
            (1, 1, p.g_plus),
            (2, 2, p.g_d),
            (0, 1, p.g_plusminus),
            (2, 0, sigma * p.g_dminus),
            (2, 1, sigma * p.g_dplus),
        ] {
            if g != 0.0 {
                optomech.push(Optomech {
                    photon_a: a,
                    photon_b: b,
                    vibration: j,
                    g,
                });
            }
        }
    }
    let eps = rotated_drive(drive, &params.rotation());
    let terms = eps
        .iter()
        .enumerate()
        .filter(|(_, e)| e.norm() != 0.0)
        .map(|(photon, &amplitude)| DriveTerm { photon, amplitude })
        .collect();
    let cross_decay = if p.kappa_pm != 0.0 {
        vec![CrossDecay {
            photon_a: 0,
            photon_b: 1,
            rate: p.kappa_pm,
        }]
    } else {
        Vec::new()
    };
    let hybrid = SystemModel {
        photon_modes,
        vibrations: model.vibrations.clone(),
        couplings: Couplings {
            hopping: Vec::new(),
            optomech,
        },
        drive: Drive { omega_l: ol, terms },
        cross_decay,
        basis_cap: model.basis_cap,
    };
    hybrid.validate()?;
    Ok((params, hybrid))
}

/// Liouvillian of a hybrid-basis model, including the `κ±` cross dissipator.
pub fn build_hybrid_liouvillian(model: &SystemModel, basis: &FockBasis) -> Result<Liouvillian> {
    assemble(
        &model.build_hamiltonian(basis)?,
        &model.build_collapse_channels(basis)?,
        &model.build_cross_channels(basis)?,
    )
}

/// Keeps only the cavity-like mode: `(minus, b1, b2)` with `g₋` on both
/// molecules, decay `κ₋` and the substituted drive.
pub fn single_mode_model(model: &SystemModel) -> Result<(HybridParams, SystemModel)> {
    let (params, hybrid) = hybridize(model)?;
    let mut reduced = SystemModel {
        photon_modes: vec![hybrid.photon_modes[0].clone()],
        vibrations: hybrid.vibrations.clone(),
        couplings: Couplings {
            hopping: Vec::new(),
            optomech: (0..hybrid.vibrations.len())
                .map(|j| Optomech {
                    photon_a: 0,
                    photon_b: 0,
                    vibration: j,
                    g: params.g_minus,
                })
                .collect(),
        },
        drive: Drive {
            omega_l: hybrid.drive.omega_l,
            terms: hybrid.drive.terms.iter().filter(|t| t.photon == 0).copied().collect(),
        },
        cross_decay: Vec::new(),
        basis_cap: model.basis_cap,
    };
    reduced.couplings.optomech.retain(|o| o.g != 0.0);
    reduced.validate()?;
    Ok((params, reduced))
}

/// Hybrid-mode operators expressed on the original `(c, p1, p2, …)` basis.
pub fn hybrid_annihilation(params: &HybridParams, model: &SystemModel, basis: &FockBasis) -> Result<[SparseOperator; 3]> {
    let u = params.rotation();
    let labels: Vec<&str> = model.photon_modes.iter().take(3).map(|m| m.label.as_str()).collect();
    if labels.len() != 3 {
        return Err(Error::Hybridization("expected three photon modes".into()));
    }
    let a = labels.iter().map(|l| basis.annihilation(l)).collect::<Result<Vec<_>>>()?;
    let build = |row: &[f64; 3]| -> Result<SparseOperator> {
        let mut op = SparseOperator::zeros(basis.dim());
        for (k, &w) in row.iter().enumerate() {
            if w != 0.0 {
                op = op.add(&a[k].scale(C64::new(w, 0.0)))?;
            }
        }
        Ok(op)
    };
    Ok([build(&u[0])?, build(&u[1])?, build(&u[2])?])
}

/// Classical steady state of the single-mode model and its linearization.
#[derive(Debug, Clone, Serialize)]
pub struct EliminatedModel {
    /// Exchange rate of `Λ(b₁†b₂ + b₁b₂†)` (meV).
    pub lambda: f64,
    /// Steady cavity amplitude.
    #[serde(skip)]
    pub alpha: Complex64,
    /// Detuning including the static optomechanical shift (meV).
    pub delta_eff: f64,
    /// Linearized couplings `G_j = g₋|α|` (meV).
    pub g_lin: Vec<f64>,
    /// Per-vibration frequency shifts (meV).
    pub spring_shift: Vec<f64>,
    /// `G_j² κ/D(δ̃ − ν_j)`, the anti-Stokes rates.
    pub cooling_rate: Vec<f64>,
    /// `G_j² κ/D(δ̃ + ν_j)`, the Stokes rates.
    pub heating_rate: Vec<f64>,
    /// Static force `g₋|α|²` on each vibration (meV).
    pub static_force: Vec<f64>,
    #[serde(skip)]
    pub vibrations: Vec<crate::model::VibrationalMode>,
    #[serde(skip)]
    pub cap: usize,
}

pub const MEAN_FIELD_TOL: f64 = 1e-13;
pub const MEAN_FIELD_MAX_ITER: usize = 10_000;

/// Linearized elimination of the cavity-like mode of a single-mode model.
///
/// The steady amplitude solves `α = −iε/(iδ̃ + κ/2)` with
/// `δ̃ = δ − Σ_j 2g_j Re β_j` and `β_j = g_j|α|²/(ν_j − iγ_j/2)`. With
/// `D_±(ν) = κ²/4 + (δ̃ ± ν)²`, the eliminated mode leaves
/// - the spring shift `−G_j G_k [(δ̃−ν)/D_−(ν) + (δ̃+ν)/D_+(ν)]`, whose
///   off-diagonal part is `Λ`;
/// - the collective dissipators `D[Σ_j √(κ/D_−(ν_j)) G_j b_j]` and
///   `D[Σ_j √(κ/D_+(ν_j)) G_j b_j†]`;
/// - the static force `−g_j|α|²(b_j + b_j†)`.
pub fn adiabatic_eliminate(single: &SystemModel) -> Result<EliminatedModel> {
    single.validate()?;
    if single.photon_modes.len() != 1 {
        return Err(Error::MeanField("expected a single photon mode".into()));
    }
    let mode = &single.photon_modes[0];
    let delta = mode.omega - single.drive.omega_l;
    let kappa = mode.kappa;
    let eps: C64 = single.drive.terms.iter().map(|t| t.amplitude).sum();
    let nv = single.vibrations.len();
    let g: Vec<f64> = (0..nv).map(|j| single.couplings.optomech_rate(0, 0, j)).collect();
    let nus: Vec<f64> = single.vibrations.iter().map(|v| v.nu).collect();
    let gammas: Vec<f64> = single.vibrations.iter().map(|v| v.gamma).collect();

    let shift_of = |n_ph: f64| -> f64 {
        (0..nv)
            .map(|j| {
                let beta = g[j] * n_ph / C64::new(nus[j], -gammas[j] / 2.0);
                2.0 * g[j] * beta.re
            })
            .sum()
    };
    let amplitude = |d: f64| -> C64 { -C64::i() * eps / C64::new(kappa / 2.0, d) };
    let mut n_ph = amplitude(delta).norm_sqr();
    let mut converged = eps.norm() == 0.0;
    for _ in 0..MEAN_FIELD_MAX_ITER {
        if converged {
            break;
        }
        let next = amplitude(delta - shift_of(n_ph)).norm_sqr();
        let change = (next - n_ph).abs();
        n_ph = 0.5 * n_ph + 0.5 * next;
        if !n_ph.is_finite() {
            return Err(Error::MeanField("cavity amplitude diverged".into()));
        }
        converged = change <= MEAN_FIELD_TOL * n_ph.max(1e-300);
    }
    if !converged {
        return Err(Error::MeanField(format!(
            "fixed-point iteration did not converge in {MEAN_FIELD_MAX_ITER} steps"
        )));
    }
    let delta_eff = delta - shift_of(n_ph);
    let alpha = amplitude(delta_eff);
    let g_lin: Vec<f64> = g.iter().map(|gj| gj * alpha.norm()).collect();
    let d_minus = |nu: f64| kappa * kappa / 4.0 + (delta_eff - nu).powi(2);
    let d_plus = |nu: f64| kappa * kappa / 4.0 + (delta_eff + nu).powi(2);
    let chi = |nu: f64| (delta_eff - nu) / d_minus(nu) + (delta_eff + nu) / d_plus(nu);
    let spring_shift: Vec<f64> = (0..nv).map(|j| -g_lin[j] * g_lin[j] * chi(nus[j])).collect();
    let lambda = if nv == 2 {
        -g_lin[0] * g_lin[1] * 0.5 * (chi(nus[0]) + chi(nus[1]))
    } else {
        0.0
    };
    Ok(EliminatedModel {
        lambda,
        alpha,
        delta_eff,
        cooling_rate: (0..nv).map(|j| g_lin[j] * g_lin[j] * kappa / d_minus(nus[j])).collect(),
        heating_rate: (0..nv).map(|j| g_lin[j] * g_lin[j] * kappa / d_plus(nus[j])).collect(),
        static_force: g.iter().map(|gj| gj * n_ph).collect(),
        g_lin,
        spring_shift,
        vibrations: single.vibrations.clone(),
        cap: single.basis_cap,
    })
}

impl EliminatedModel {
    pub fn basis(&self) -> Result<FockBasis> {
        let labels: Vec<String> = self.vibrations.iter().map(|v| v.label.clone()).collect();
        Ok(FockBasis::enumerate(crate::basis::ModeLayout::new(labels, self.cap)?))
    }

    pub fn liouvillian(&self, basis: &FockBasis) -> Result<Liouvillian> {
        let nv = self.vibrations.len();
        let b: Vec<SparseOperator> = (0..nv).map(|j| basis.annihilation_at(j)).collect();
        let re = |x: f64| C64::new(x, 0.0);
        let mut h = SparseOperator::zeros(basis.dim());
        for (j, v) in self.vibrations.iter().enumerate() {
            let bd = b[j].adjoint();
            h = h.add(&bd.compose(&b[j])?.scale(re(v.nu + self.spring_shift[j])))?;
            h = h.sub(&bd.add(&b[j])?.scale(re(self.static_force[j])))?;
        }
        if nv == 2 && self.lambda != 0.0 {
            let hop = b[0].adjoint().compose(&b[1])?;
            h = h.add(&hop.add(&hop.adjoint())?.scale(re(self.lambda)))?;
        }
        let mut channels = Vec::new();
        for (j, v) in self.vibrations.iter().enumerate() {
            let nbar = thermal_occupation(v.nu, v.bath_temperature)?;
            channels.push(Channel {
                label: format!("relax {}", v.label),
                op: b[j].clone(),
                rate: v.gamma * (nbar + 1.0),
            });
            channels.push(Channel {
                label: format!("excite {}", v.label),
                op: b[j].adjoint(),
                rate: v.gamma * nbar,
            });
        }
        // collective anti-Stokes and Stokes jumps with unit rate
        let mut cool = SparseOperator::zeros(basis.dim());
        let mut heat = SparseOperator::zeros(basis.dim());
        for (j, bj) in b.iter().enumerate().take(nv) {
            cool = cool.add(&bj.scale(re(self.cooling_rate[j].sqrt())))?;
            heat = heat.add(&bj.adjoint().scale(re(self.heating_rate[j].sqrt())))?;
        }
        channels.push(Channel {
            label: "optomechanical cooling".into(),
            op: cool,
            rate: 1.0,
        });
        channels.push(Channel {
            label: "optomechanical heating".into(),
            op: heat,
            rate: 1.0,
        });
        assemble(&h, &channels, &[])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SetupParams;
    use crate::observables::{expect, vibration_temperature};
    use crate::steadystate::{solve, SolverOptions};
    use faer::Mat;

    fn reference() -> HybridParams {
        HybridParams::from_closed_forms(200.0, 790.0, 200.0, 5.4e-2, 55.0, 75.0)
    }

    #[test]
    fn reference_values() {
        let p = reference();
        assert!((p.theta - 0.3822).abs() < 1e-4);
        assert!((p.delta_minus - 86.32).abs() < 0.01);
        assert!((p.delta_plus - 903.68).abs() < 0.01);
        assert!((p.kappa_minus - 7.70).abs() < 0.01);
        assert_eq!(p.delta_d, 790.0);
    }

    #[test]
    fn sum_rules() {
        let p = reference();
        assert!((p.delta_minus + p.delta_plus - 990.0).abs() < 1e-12 * 990.0);
        assert!((p.kappa_minus + p.kappa_plus - (5.4e-2 + 55.0)).abs() < 1e-12 * 55.0);
        assert_eq!(p.kappa_d, 55.0);
        assert!((p.g_minus + p.g_plus - 37.5).abs() < 1e-12 * 37.5);
        let closed = |sign: f64| 495.0 + sign * 0.5 * (590.0f64.powi(2) + 8.0 * 200.0f64.powi(2)).sqrt();
        assert!((p.delta_minus - closed(-1.0)).abs() < 1e-12 * 1000.0);
        assert!((p.delta_plus - closed(1.0)).abs() < 1e-12 * 1000.0);
    }

    #[test]
    fn rotation_diagonalizes_photonic_block() {
        let p = reference();
        let h = [[200.0, 200.0, 200.0], [200.0, 790.0, 0.0], [200.0, 0.0, 790.0]];
        let u = p.rotation();
        let expected = [p.delta_minus, p.delta_plus, p.delta_d];
        for a in 0..3 {
            for b in 0..3 {
                let mut v = 0.0;
                for i in 0..3 {
                    for k in 0..3 {
                        v += u[a][i] * h[i][k] * u[b][k];
                    }
                }
                let target = if a == b { expected[a] } else { 0.0 };
                assert!((v - target).abs() < 1e-12 * 1000.0, "({a},{b}) = {v}");
            }
        }
        // eigenvalues of the 3×3 block agree with a numerical diagonalization
        let m = Mat::from_fn(3, 3, |r, c| h[r][c]);
        let mut ev: Vec<f64> = m.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
        ev.sort_by(f64::total_cmp);
        let mut cf = expected.to_vec();
        cf.sort_by(f64::total_cmp);
        for (x, y) in ev.iter().zip(&cf) {
            assert!((x - y).abs() < 1e-12 * 1000.0);
        }
    }

    #[test]
    fn zero_hopping_keeps_cavity_separate() {
        let p = HybridParams::from_closed_forms(200.0, 790.0, 0.0, 0.05, 55.0, 75.0);
        assert_eq!(p.theta, 0.0);
        assert_eq!(p.delta_minus, 200.0);
        assert_eq!(p.kappa_pm, 0.0);
        assert_eq!(p.g_minus, 0.0);
        let equal = HybridParams::from_closed_forms(200.0, 790.0, 200.0, 3.0, 3.0, 75.0);
        assert_eq!(equal.kappa_pm, 0.0);
    }

    #[test]
    fn asymmetric_antennas_rejected() {
        let mut s = SetupParams::reference(35.0);
        s.plasmons[1].kappa = 50.0;
        assert!(matches!(hybridize(&s.to_model().unwrap()), Err(Error::Hybridization(_))));
        let mut s = SetupParams::reference(35.0);
        s.g_p = vec![75.0, 70.0];
        assert!(hybridize(&s.to_model().unwrap()).is_err());
    }

    #[test]
    fn drive_is_substituted() {
        let (p, h) = hybridize(&SetupParams::reference(35.0).to_model().unwrap()).unwrap();
        let (s, c) = p.theta.sin_cos();
        let eps: Vec<C64> = h.drive.terms.iter().map(|t| t.amplitude).collect();
        assert_eq!(h.drive.terms.len(), 2);
        assert!((eps[0] - C64::new(0.0, 35.0 * c)).norm() < 1e-12);
        assert!((eps[1] - C64::new(0.0, -35.0 * s)).norm() < 1e-12);
    }

    fn occupations(model: &SystemModel, labels: &[&str]) -> Vec<f64> {
        let basis = model.basis().unwrap();
        let l = build_hybrid_liouvillian(model, &basis).unwrap();
        let ss = solve(&l, &basis, &SolverOptions::default()).unwrap();
        labels.iter().map(|lab| expect(&basis.number(lab).unwrap(), &ss.rho).unwrap().re).collect()
    }

    #[test]
    fn hybrid_and_original_steady_states_agree_at_low_cap() {
        let mut s = SetupParams::reference(35.0);
        s.cap = 2;
        let model = s.to_model().unwrap();
        let (p, hybrid) = hybridize(&model).unwrap();
        let basis = model.basis().unwrap();
        let l = build_hybrid_liouvillian(&model, &basis).unwrap();
        let ss = solve(&l, &basis, &SolverOptions::default()).unwrap();
        let ops = hybrid_annihilation(&p, &model, &basis).unwrap();
        let mut orig: Vec<f64> = ["b1", "b2"]
            .iter()
            .map(|lab| expect(&basis.number(lab).unwrap(), &ss.rho).unwrap().re)
            .collect();
        for a in &ops {
            orig.push(expect(&a.adjoint().compose(a).unwrap(), &ss.rho).unwrap().re);
        }
        let hyb = occupations(&hybrid, &["b1", "b2", MINUS, PLUS, DARK]);
        for (x, y) in orig.iter().zip(&hyb) {
            assert!((x - y).abs() <= 1e-8 * x.abs().max(1e-300), "{x} vs {y}");
        }
    }

    #[test]
    fn undriven_single_mode_is_thermal() {
        let mut s = SetupParams::reference(0.0);
        s.cap = 8;
        let (_, single) = single_mode_model(&s.to_model().unwrap()).unwrap();
        assert_eq!(single.photon_modes.len(), 1);
        let basis = single.basis().unwrap();
        let l = build_hybrid_liouvillian(&single, &basis).unwrap();
        let ss = solve(&l, &basis, &SolverOptions::default()).unwrap();
        for (lab, t) in [("b1", 77.0), ("b2", 300.0)] {
            let te = vibration_temperature(&ss.rho, &basis, lab, 40.0).unwrap();
            assert!((te.t_eff - t).abs() < 0.05, "{lab}: {}", te.t_eff);
        }
    }

    #[test]
    fn elimination_without_drive_is_trivial() {
        let (_, single) = single_mode_model(&SetupParams::reference(0.0).to_model().unwrap()).unwrap();
        let e = adiabatic_eliminate(&single).unwrap();
        assert_eq!(e.lambda, 0.0);
        assert!(e.heating_rate.iter().chain(&e.cooling_rate).all(|&r| r == 0.0));
    }

    #[test]
    fn lambda_grows_with_drive() {
        let mut last = 0.0;
        for omega in [5.0, 10.0, 20.0, 35.0] {
            let (_, single) = single_mode_model(&SetupParams::reference(omega).to_model().unwrap()).unwrap();
            let lam = adiabatic_eliminate(&single).unwrap().lambda.abs();
            assert!(lam > last);
            last = lam;
        }
    }

    #[test]
    fn mean_field_matches_linear_cavity_without_coupling() {
        let (_, mut single) = single_mode_model(&SetupParams::reference(10.0).to_model().unwrap()).unwrap();
        single.couplings.optomech.clear();
        let e = adiabatic_eliminate(&single).unwrap();
        let eps = single.drive.terms[0].amplitude;
        let d = single.photon_modes[0].omega - single.drive.omega_l;
        let expected = -C64::i() * eps / C64::new(single.photon_modes[0].kappa / 2.0, d);
        assert!((e.alpha - expected).norm() < 1e-14);
    }
}
