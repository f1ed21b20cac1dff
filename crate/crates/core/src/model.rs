//! Physical description of the driven photonic/vibrational system and
//! assembly of its rotating-frame Hamiltonian and collapse channels.
//!
//! Units: energies and rates in meV with ħ = 1, temperatures in kelvin.
//!
//! The Hamiltonian is
//!
//! ```text
//! H = Σ_α δ_α a_α†a_α + Σ hop (a_α†a_β + h.c.) + Σ_j ν_j b_j†b_j
//!     − Σ g (a_α†a_β [+ h.c.]) (b_j† + b_j) + Σ_α (ε_α a_α† + ε_α* a_α)
//! ```
//!
//! with δ_α = ω_α − ω_l. The laser drive on the cavity, −iΩ(a_c† − a_c),
//! is the single drive term ε_c = −iΩ.

use crate::basis::{FockBasis, ModeLayout};
use crate::error::{Error, Result};
use crate::sparse::{SparseOperator, C64, I};

/// Boltzmann constant in meV/K.
pub const K_B: f64 = 0.086_173_33;

#[derive(Debug, Clone, PartialEq)]
pub struct PhotonMode {
    pub label: String,
    /// Lab-frame frequency ω_α.
    pub omega: f64,
    /// Energy decay rate κ_α.
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VibrationalMode {
    pub label: String,
    pub nu: f64,
    pub gamma: f64,
    pub bath_temperature: f64,
}

/// `g (a_from† a_to + a_to† a_from)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hopping {
    pub from: usize,
    pub to: usize,
    pub g: f64,
}

/// `−g (a_α† a_β + a_β† a_α)(b_j† + b_j)` for α ≠ β and
/// `−g a_α† a_α (b_j† + b_j)` for α = β.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optomech {
    pub photon_a: usize,
    pub photon_b: usize,
    pub vibration: usize,
    pub g: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Couplings {
    pub hopping: Vec<Hopping>,
    pub optomech: Vec<Optomech>,
}

impl Couplings {
    /// Cavity (photon mode 0) hops to every other photon mode with `g_cp`;
    /// `g_om[α][j]` couples photon α to vibration j.
    pub fn cavity_plasmon(g_cp: f64, g_om: &[Vec<f64>]) -> Self {
        let hopping = (1..g_om.len()).map(|p| Hopping { from: 0, to: p, g: g_cp }).collect();
        let optomech = g_om
            .iter()
            .enumerate()
            .flat_map(|(a, row)| {
                row.iter().enumerate().filter(|(_, &g)| g != 0.0).map(move |(j, &g)| Optomech {
                    photon_a: a,
                    photon_b: a,
                    vibration: j,
                    g,
                })
            })
            .collect();
        Self { hopping, optomech }
    }

    /// Summed hopping amplitude between two photon modes (either direction).
    pub fn hopping_between(&self, a: usize, b: usize) -> f64 {
        self.hopping
            .iter()
            .filter(|h| (h.from, h.to) == (a, b) || (h.from, h.to) == (b, a))
            .map(|h| h.g)
            .sum()
    }

    /// Summed optomechanical rate of the photon pair `(a, b)` on vibration `j`.
    pub fn optomech_rate(&self, a: usize, b: usize, j: usize) -> f64 {
        self.optomech
            .iter()
            .filter(|o| o.vibration == j)
            .filter(|o| (o.photon_a, o.photon_b) == (a, b) || (o.photon_a, o.photon_b) == (b, a))
            .map(|o| o.g)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveTerm {
    pub photon: usize,
    /// ε in `ε a† + ε* a`.
    pub amplitude: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Drive {
    pub omega_l: f64,
    pub terms: Vec<DriveTerm>,
}

impl Drive {
    /// `H_d = −iΩ(a† − a)` on one photon mode.
    pub fn laser(omega_l: f64, amplitude: f64, photon: usize) -> Self {
        Self {
            omega_l,
            terms: vec![DriveTerm {
                photon,
                amplitude: -I * amplitude,
            }],
        }
    }

    /// Root of the summed squared amplitudes; equals Ω for a single term.
    pub fn strength(&self) -> f64 {
        self.terms.iter().map(|t| t.amplitude.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// `rate · (D_{A,B} + D_{B,A})` between photon modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossDecay {
    pub photon_a: usize,
    pub photon_b: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    pub photon_modes: Vec<PhotonMode>,
    pub vibrations: Vec<VibrationalMode>,
    pub couplings: Couplings,
    pub drive: Drive,
    pub cross_decay: Vec<CrossDecay>,
    pub basis_cap: usize,
}

/// A collapse operator and the rate it enters the dissipator with.
#[derive(Debug, Clone)]
pub struct Channel {
    pub label: String,
    pub op: SparseOperator,
    pub rate: f64,
}

/// `rate · (D_{A,B} + D_{B,A})`.
#[derive(Debug, Clone)]
pub struct CrossChannel {
    pub label: String,
    pub a: SparseOperator,
    pub b: SparseOperator,
    pub rate: f64,
}

pub fn detuning(mode: &PhotonMode, drive: &Drive) -> f64 {
    mode.omega - drive.omega_l
}

/// Bose–Einstein occupation `1/(exp(ν/k_B T) − 1)`; zero at T = 0.
pub fn thermal_occupation(nu: f64, temperature: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::param("nu", format!("must be positive, got {nu}")));
    }
    if temperature < 0.0 {
        return Err(Error::param("temperature", format!("must be non-negative, got {temperature}")));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (nu / (K_B * temperature)).exp_m1())
}

/// Linewidth from a quality factor, `κ = ω/Q`.
pub fn kappa_from_q(omega: f64, q: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::param("Q", format!("must be positive, got {q}")));
    }
    Ok(omega / q)
}

impl SystemModel {
    pub fn mode_labels(&self) -> Vec<String> {
        self.photon_modes
            .iter()
            .map(|m| m.label.clone())
            .chain(self.vibrations.iter().map(|v| v.label.clone()))
            .collect()
    }

    pub fn layout(&self) -> Result<ModeLayout> {
        ModeLayout::new(self.mode_labels(), self.basis_cap)
    }

    pub fn basis(&self) -> Result<FockBasis> {
        Ok(FockBasis::enumerate(self.layout()?))
    }

    pub fn photon_index(&self, label: &str) -> Result<usize> {
        self.photon_modes
            .iter()
            .position(|m| m.label == label)
            .ok_or_else(|| Error::UnknownMode(label.to_string()))
    }

    pub fn vibration_index(&self, label: &str) -> Result<usize> {
        self.vibrations
            .iter()
            .position(|m| m.label == label)
            .ok_or_else(|| Error::UnknownMode(label.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let np = self.photon_modes.len();
        let nv = self.vibrations.len();
        for m in &self.photon_modes {
            if !(m.omega > 0.0) {
                return Err(Error::param(format!("{}.omega", m.label), "must be positive"));
            }
            if !(m.kappa >= 0.0) {
                return Err(Error::param(format!("{}.kappa", m.label), "must be non-negative"));
            }
        }
        for v in &self.vibrations {
            if !(v.nu > 0.0) {
                return Err(Error::param(format!("{}.nu", v.label), "must be positive"));
            }
            if !(v.gamma >= 0.0) {
                return Err(Error::param(format!("{}.gamma", v.label), "must be non-negative"));
            }
            if !(v.bath_temperature >= 0.0) {
                return Err(Error::param(format!("{}.temperature", v.label), "must be non-negative"));
            }
        }
        for h in &self.couplings.hopping {
            if h.from >= np || h.to >= np || h.from == h.to {
                return Err(Error::param("hopping", format!("invalid photon pair ({}, {})", h.from, h.to)));
            }
        }
        for o in &self.couplings.optomech {
            if o.photon_a >= np || o.photon_b >= np || o.vibration >= nv {
                return Err(Error::param("optomech", "term references a missing mode"));
            }
        }
        for d in &self.drive.terms {
            if d.photon >= np {
                return Err(Error::param("drive", "drive target is not a photon mode"));
            }
        }
        for c in &self.cross_decay {
            if c.photon_a >= np || c.photon_b >= np || c.photon_a == c.photon_b {
                return Err(Error::param("cross_decay", "invalid photon pair"));
            }
        }
        self.layout()?;
        Ok(())
    }

    /// Rotating-frame Hamiltonian on `basis`. Built from adjoint-truncated
    /// ladder operators, so it is exactly Hermitian.
    pub fn build_hamiltonian(&self, basis: &FockBasis) -> Result<SparseOperator> {
        self.validate()?;
        self.check_basis(basis)?;
        let np = self.photon_modes.len();
        let a: Vec<SparseOperator> = (0..np).map(|k| basis.annihilation_at(k)).collect();
        let ad: Vec<SparseOperator> = a.iter().map(SparseOperator::adjoint).collect();
        let b: Vec<SparseOperator> = (0..self.vibrations.len()).map(|j| basis.annihilation_at(np + j)).collect();
        let bd: Vec<SparseOperator> = b.iter().map(SparseOperator::adjoint).collect();
        let re = |x: f64| C64::new(x, 0.0);

        let mut h = SparseOperator::zeros(basis.dim());
        for (k, mode) in self.photon_modes.iter().enumerate() {
            let n = ad[k].compose(&a[k])?;
            h = h.add(&n.scale(re(detuning(mode, &self.drive))))?;
        }
        for hop in &self.couplings.hopping {
            let t = ad[hop.from].compose(&a[hop.to])?;
            h = h.add(&t.add(&t.adjoint())?.scale(re(hop.g)))?;
        }
        for (j, vib) in self.vibrations.iter().enumerate() {
            h = h.add(&bd[j].compose(&b[j])?.scale(re(vib.nu)))?;
        }
        for term in &self.couplings.optomech {
            let mut bilinear = ad[term.photon_a].compose(&a[term.photon_b])?;
            if term.photon_a != term.photon_b {
                bilinear = bilinear.add(&bilinear.adjoint())?;
            }
            let x = bd[term.vibration].add(&b[term.vibration])?;
            h = h.sub(&bilinear.compose(&x)?.scale(re(term.g)))?;
        }
        for d in &self.drive.terms {
            let t = ad[d.photon].scale(d.amplitude).add(&a[d.photon].scale(d.amplitude.conj()))?;
            h = h.add(&t)?;
        }
        Ok(h)
    }

    /// Photon decay `(a_α, κ_α)` and thermal vibration channels
    /// `(b_j, γ_j(n̄_j+1))`, `(b_j†, γ_j n̄_j)`.
    pub fn build_collapse_channels(&self, basis: &FockBasis) -> Result<Vec<Channel>> {
        self.check_basis(basis)?;
        let np = self.photon_modes.len();
        let mut out = Vec::with_capacity(np + 2 * self.vibrations.len());
        for (k, m) in self.photon_modes.iter().enumerate() {
            out.push(Channel {
                label: format!("decay {}", m.label),
                op: basis.annihilation_at(k),
                rate: m.kappa,
            });
        }
        for (j, v) in self.vibrations.iter().enumerate() {
            let nbar = thermal_occupation(v.nu, v.bath_temperature)?;
            let b = basis.annihilation_at(np + j);
            let bd = b.adjoint();
            out.push(Channel {
                label: format!("relax {}", v.label),
                op: b,
                rate: v.gamma * (nbar + 1.0),
            });
            out.push(Channel {
                label: format!("excite {}", v.label),
                op: bd,
                rate: v.gamma * nbar,
            });
        }
        Ok(out)
    }

    pub fn build_cross_channels(&self, basis: &FockBasis) -> Result<Vec<CrossChannel>> {
        self.check_basis(basis)?;
        Ok(self
            .cross_decay
            .iter()
            .map(|c| CrossChannel {
                label: format!(
                    "cross {}/{}",
                    self.photon_modes[c.photon_a].label, self.photon_modes[c.photon_b].label
                ),
                a: basis.annihilation_at(c.photon_a),
                b: basis.annihilation_at(c.photon_b),
                rate: c.rate,
            })
            .collect())
    }

    fn check_basis(&self, basis: &FockBasis) -> Result<()> {
        let labels = self.mode_labels();
        if basis.layout().labels() != labels.as_slice() {
            return Err(Error::InvalidLayout(format!(
                "basis modes {:?} do not match model modes {:?}",
                basis.layout().labels(),
                labels
            )));
        }
        Ok(())
    }
}

/// Parameters of the cavity + two-antenna + two-molecule setup in its
/// original (uncoupled-mode) description.
#[derive(Debug, Clone, PartialEq)]
pub struct SetupParams {
    pub cavity: PhotonMode,
    pub plasmons: Vec<PhotonMode>,
    pub vibrations: Vec<VibrationalMode>,
    pub g_cp: f64,
    /// Coupling of plasmon i to molecule i.
    pub g_p: Vec<f64>,
    /// Direct cavity coupling to every molecule; negligible in practice.
    pub g_c: f64,
    pub omega_l: f64,
    pub drive_amplitude: f64,
    pub cap: usize,
}

impl SetupParams {
    /// The reference parameter set: ω_c = 1.61 eV, κ_c = 5.4×10⁻² meV,
    /// ω_p = 2.2 eV, κ_p = 55 meV, ν = 40 meV, γ = 0.1 meV, T = 77/300 K,
    /// g_p = 75 meV, g_cp = 200 meV, ω_l = 1.41 eV, K = 5.
    pub fn reference(drive_amplitude: f64) -> Self {
        let plasmon = |label: &str| PhotonMode {
            label: label.into(),
            omega: 2200.0,
            kappa: 55.0,
        };
        let molecule = |label: &str, t: f64| VibrationalMode {
            label: label.into(),
            nu: 40.0,
            gamma: 0.1,
            bath_temperature: t,
        };
        Self {
            cavity: PhotonMode {
                label: "c".into(),
                omega: 1610.0,
                kappa: 5.4e-2,
            },
            plasmons: vec![plasmon("p1"), plasmon("p2")],
            vibrations: vec![molecule("b1", 77.0), molecule("b2", 300.0)],
            g_cp: 200.0,
            g_p: vec![75.0, 75.0],
            g_c: 0.0,
            omega_l: 1410.0,
            drive_amplitude,
            cap: 5,
        }
    }

    /// `g_om[α][j]` with α = (cavity, plasmons...).
    pub fn g_om(&self) -> Vec<Vec<f64>> {
        let nv = self.vibrations.len();
        let mut g = vec![vec![self.g_c; nv]];
        for i in 0..self.plasmons.len() {
            let mut row = vec![0.0; nv];
            if i < nv {
                row[i] = self.g_p[i];
            }
            g.push(row);
        }
        g
    }

    pub fn to_model(&self) -> Result<SystemModel> {
        if self.g_p.len() != self.plasmons.len() {
            return Err(Error::param("g_p", "one coupling per plasmon is required"));
        }
        let mut photon_modes = vec![self.cavity.clone()];
        photon_modes.extend(self.plasmons.iter().cloned());
        let model = SystemModel {
            photon_modes,
            vibrations: self.vibrations.clone(),
            couplings: Couplings::cavity_plasmon(self.g_cp, &self.g_om()),
            drive: Drive::laser(self.omega_l, self.drive_amplitude, 0),
            cross_decay: Vec::new(),
            basis_cap: self.cap,
        };
        model.validate()?;
        Ok(model)
    }
}
