//! Experiment orchestration: model variants, sweeps, spectra and CSV output.

use std::io::Write;

use faer::Mat;
use serde::Serialize;

use crate::config::{ExperimentConfig, ParamPath, Unit, Variant};
use crate::error::{Error, Result};
use crate::hybrid::{
    adiabatic_eliminate, build_hybrid_liouvillian, hybrid_annihilation, hybridize, single_mode_model, HybridParams,
    DARK, MINUS, PLUS,
};
use crate::liouvillian::{assemble, Liouvillian};
use crate::model::{SetupParams, SystemModel};
use crate::observables::{expect, psd, vibration_temperature, EffectiveTemperature, Spectrum};
use crate::sparse::{SparseOperator, C64};
use crate::steadystate::{solve, SolverOptions, SteadyState};
use crate::basis::FockBasis;

/// Mean photon numbers; `NaN` where a variant has no such mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhotonOccupations {
    pub c: f64,
    pub p1: f64,
    pub p2: f64,
    pub minus: f64,
    pub plus: f64,
    pub dark: f64,
}

impl Default for PhotonOccupations {
    fn default() -> Self {
        Self {
            c: f64::NAN,
            p1: f64::NAN,
            p2: f64::NAN,
            minus: f64::NAN,
            plus: f64::NAN,
            dark: f64::NAN,
        }
    }
}

/// Observables of one steady state (or, for the isolated variant, of one
/// run per molecule).
#[derive(Debug, Clone, Serialize)]
pub struct Observation {
    pub variant: Variant,
    pub molecules: [EffectiveTemperature; 2],
    pub photons: PhotonOccupations,
    /// Vibration-vibration exchange rate of the eliminated description (meV).
    pub lambda: f64,
    pub residual: f64,
    pub cap_shell_population: f64,
    pub iterations: Option<usize>,
}

impl Serialize for Variant {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// Liouvillian of any [`SystemModel`], including cross dissipators.
pub fn model_liouvillian(model: &SystemModel, basis: &FockBasis) -> Result<Liouvillian> {
    assemble(
        &model.build_hamiltonian(basis)?,
        &model.build_collapse_channels(basis)?,
        &model.build_cross_channels(basis)?,
    )
}

fn number_of(op: &SparseOperator, rho: &Mat<C64>) -> Result<f64> {
    Ok(expect(&op.adjoint().compose(op)?, rho)?.re)
}

fn occupation(basis: &FockBasis, label: &str, rho: &Mat<C64>) -> Result<f64> {
    Ok(expect(&basis.number(label)?, rho)?.re)
}

/// Original photon operators `(a_c, a_p1, a_p2)` written on a hybrid basis:
/// the rotation is orthogonal, so `a_α = Σ_β U_βα a_β`.
pub fn original_annihilation(params: &HybridParams, basis: &FockBasis) -> Result<[SparseOperator; 3]> {
    let u = params.rotation();
    let hybrid = [basis.annihilation(MINUS)?, basis.annihilation(PLUS)?, basis.annihilation(DARK)?];
    let build = |alpha: usize| -> Result<SparseOperator> {
        let mut op = SparseOperator::zeros(basis.dim());
        for (beta, a) in hybrid.iter().enumerate() {
            if u[beta][alpha] != 0.0 {
                op = op.add(&a.scale(C64::new(u[beta][alpha], 0.0)))?;
            }
        }
        Ok(op)
    };
    Ok([build(0)?, build(1)?, build(2)?])
}

fn temperatures(model: &SystemModel, basis: &FockBasis, rho: &Mat<C64>) -> Result<[EffectiveTemperature; 2]> {
    let t = |j: usize| {
        let v = &model.vibrations[j];
        vibration_temperature(rho, basis, &v.label, v.nu)
    };
    Ok([t(0)?, t(1)?])
}

fn elimination_lambda(model: &SystemModel) -> f64 {
    single_mode_model(model)
        .and_then(|(_, single)| adiabatic_eliminate(&single))
        .map(|e| e.lambda)
        .unwrap_or(f64::NAN)
}

fn solved(model: &SystemModel, l: &Liouvillian, basis: &FockBasis, solver: &SolverOptions) -> Result<SteadyState> {
    let ss = solve(l, basis, solver)?;
    log::debug!("K = {}: residual {:.2e}, {:?} iterations", model.basis_cap, ss.residual, ss.iterations);
    Ok(ss)
}

fn observe_full(model: &SystemModel, solver: &SolverOptions) -> Result<Observation> {
    let basis = model.basis()?;
    let l = model_liouvillian(model, &basis)?;
    let ss = solved(model, &l, &basis, solver)?;
    let mut photons = PhotonOccupations::default();
    let labels: Vec<&str> = model.photon_modes.iter().map(|m| m.label.as_str()).collect();
    for (slot, label) in [&mut photons.c, &mut photons.p1, &mut photons.p2].into_iter().zip(&labels) {
        *slot = occupation(&basis, label, &ss.rho)?;
    }
    if let Ok((params, _)) = hybridize(model) {
        let [m, p, d] = hybrid_annihilation(&params, model, &basis)?;
        photons.minus = number_of(&m, &ss.rho)?;
        photons.plus = number_of(&p, &ss.rho)?;
        photons.dark = number_of(&d, &ss.rho)?;
    }
    Ok(Observation {
        variant: Variant::Full,
        molecules: temperatures(model, &basis, &ss.rho)?,
        photons,
        lambda: elimination_lambda(model),
        residual: ss.residual,
        cap_shell_population: ss.cap_shell_population,
        iterations: ss.iterations,
    })
}

fn observe_hybrid(model: &SystemModel, solver: &SolverOptions) -> Result<Observation> {
    let (params, hybrid) = hybridize(model)?;
    let basis = hybrid.basis()?;
    let l = build_hybrid_liouvillian(&hybrid, &basis)?;
    let ss = solved(&hybrid, &l, &basis, solver)?;
    let [c, p1, p2] = original_annihilation(&params, &basis)?;
    let photons = PhotonOccupations {
        c: number_of(&c, &ss.rho)?,
        p1: number_of(&p1, &ss.rho)?,
        p2: number_of(&p2, &ss.rho)?,
        minus: occupation(&basis, MINUS, &ss.rho)?,
        plus: occupation(&basis, PLUS, &ss.rho)?,
        dark: occupation(&basis, DARK, &ss.rho)?,
    };
    Ok(Observation {
        variant: Variant::HybridFull,
        molecules: temperatures(&hybrid, &basis, &ss.rho)?,
        photons,
        lambda: elimination_lambda(model),
        residual: ss.residual,
        cap_shell_population: ss.cap_shell_population,
        iterations: ss.iterations,
    })
}

fn observe_single(model: &SystemModel, solver: &SolverOptions) -> Result<Observation> {
    let (_, single) = single_mode_model(model)?;
    let basis = single.basis()?;
    let l = model_liouvillian(&single, &basis)?;
    let ss = solved(&single, &l, &basis, solver)?;
    Ok(Observation {
        variant: Variant::SingleMode,
        molecules: temperatures(&single, &basis, &ss.rho)?,
        photons: PhotonOccupations {
            minus: occupation(&basis, MINUS, &ss.rho)?,
            ..Default::default()
        },
        lambda: elimination_lambda(model),
        residual: ss.residual,
        cap_shell_population: ss.cap_shell_population,
        iterations: ss.iterations,
    })
}

fn observe_eliminated(model: &SystemModel, solver: &SolverOptions) -> Result<Observation> {
    let (_, single) = single_mode_model(model)?;
    let e = adiabatic_eliminate(&single)?;
    let basis = e.basis()?;
    let l = e.liouvillian(&basis)?;
    let ss = solve(&l, &basis, solver)?;
    let t = |j: usize| {
        let v = &e.vibrations[j];
        vibration_temperature(&ss.rho, &basis, &v.label, v.nu)
    };
    Ok(Observation {
        variant: Variant::Eliminated,
        molecules: [t(0)?, t(1)?],
        photons: PhotonOccupations {
            minus: e.alpha.norm_sqr(),
            ..Default::default()
        },
        lambda: e.lambda,
        residual: ss.residual,
        cap_shell_population: ss.cap_shell_population,
        iterations: ss.iterations,
    })
}

/// The full model with every optomechanical term of vibration `other` removed.
pub fn isolate(model: &SystemModel, keep: usize) -> SystemModel {
    let mut m = model.clone();
    m.couplings.optomech.retain(|o| o.vibration == keep);
    m
}

fn observe_isolated(model: &SystemModel, solver: &SolverOptions) -> Result<Observation> {
    let runs = [observe_full(&isolate(model, 0), solver)?, observe_full(&isolate(model, 1), solver)?];
    let iterations = match (runs[0].iterations, runs[1].iterations) {
        (Some(a), Some(b)) => Some(a.max(b)),
        _ => None,
    };
    Ok(Observation {
        variant: Variant::Isolated,
        molecules: [runs[0].molecules[0].clone(), runs[1].molecules[1].clone()],
        photons: PhotonOccupations::default(),
        lambda: f64::NAN,
        residual: runs[0].residual.max(runs[1].residual),
        cap_shell_population: runs[0].cap_shell_population.max(runs[1].cap_shell_population),
        iterations,
    })
}

/// Builds `variant` from `setup`, solves for its steady state and extracts
/// the molecular temperatures and photon numbers.
pub fn run_variant(setup: &SetupParams, variant: Variant, solver: &SolverOptions) -> Result<Observation> {
    let model = setup.to_model()?;
    match variant {
        Variant::Full => observe_full(&model, solver),
        Variant::HybridFull => observe_hybrid(&model, solver),
        Variant::SingleMode => observe_single(&model, solver),
        Variant::Eliminated => observe_eliminated(&model, solver),
        Variant::Isolated => observe_isolated(&model, solver),
    }
}

/// One line of a sweep CSV.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub param: String,
    pub value: f64,
    pub unit: Unit,
    pub variant: Variant,
    pub observation: Option<Observation>,
    pub error: Option<String>,
}

pub const RESULT_COLUMNS: [&str; 21] = [
    "param",
    "value",
    "unit",
    "variant",
    "n1",
    "n2",
    "T1_eff_K",
    "T2_eff_K",
    "thermal_residual_1",
    "thermal_residual_2",
    "n_c",
    "n_p1",
    "n_p2",
    "n_minus",
    "n_plus",
    "n_dark",
    "lambda_meV",
    "residual",
    "cap_shell_population",
    "iterations",
    "error",
];

fn num(x: f64) -> String {
    format!("{x}")
}

impl ResultRow {
    pub fn t_eff(&self) -> Option<[f64; 2]> {
        let o = self.observation.as_ref()?;
        Some([o.molecules[0].t_eff, o.molecules[1].t_eff])
    }

    fn record(&self) -> Vec<String> {
        let mut rec = vec![
            self.param.clone(),
            num(self.value),
            self.unit.symbol().to_string(),
            self.variant.name().to_string(),
        ];
        match &self.observation {
            Some(o) => {
                let [m1, m2] = &o.molecules;
                let p = &o.photons;
                rec.extend(
                    [
                        m1.n,
                        m2.n,
                        m1.t_eff,
                        m2.t_eff,
                        m1.thermal_fit_residual,
                        m2.thermal_fit_residual,
                        p.c,
                        p.p1,
                        p.p2,
                        p.minus,
                        p.plus,
                        p.dark,
                        o.lambda,
                        o.residual,
                        o.cap_shell_population,
                    ]
                    .map(num),
                );
                rec.push(o.iterations.map(|i| i.to_string()).unwrap_or_default());
            }
            None => rec.extend(std::iter::repeat_n(String::new(), 16)),
        }
        rec.push(self.error.clone().unwrap_or_default());
        rec
    }
}

pub fn write_rows<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULT_COLUMNS)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

/// Whether independent points may run on the rayon pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

fn map_points<T, F>(n: usize, execution: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if execution == Execution::Parallel {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = execution;
    (0..n).map(f).collect()
}

/// Runs `variant` at each `(path, value)` point. Failed points become rows
/// with an error message; rows keep the input order.
pub fn sweep_points(
    base: &SetupParams,
    path: ParamPath,
    name: &str,
    values: &[f64],
    variant: Variant,
    solver: &SolverOptions,
    execution: Execution,
) -> Vec<ResultRow> {
    map_points(values.len(), execution, |k| {
        let value = values[k];
        let result = {
            let mut setup = base.clone();
            path.apply(&mut setup, value).and_then(|_| run_variant(&setup, variant, solver))
        };
        let (observation, error) = match result {
            Ok(o) => (Some(o), None),
            Err(e) => {
                log::error!("{name} = {value}: {e}");
                (None, Some(format!("{name} = {value} {}: {e}", path.unit().symbol())))
            }
        };
        ResultRow {
            param: name.to_string(),
            value,
            unit: path.unit(),
            variant,
            observation,
            error,
        }
    })
}

/// Command-line overrides of config settings.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub cap: Option<usize>,
    pub variant: Option<Variant>,
    pub backend: Option<crate::steadystate::Backend>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(cap) = self.cap {
            cfg.cap = cap;
        }
        if let Some(v) = self.variant {
            cfg.variant = v;
        }
        if let Some(b) = self.backend {
            cfg.solver.backend = b;
        }
    }
}

pub fn sweep(cfg: &ExperimentConfig, execution: Execution) -> Result<Vec<ResultRow>> {
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::config("sweep", "the config has no sweep block"))?;
    let path = spec.path()?;
    let values = spec.values()?;
    Ok(sweep_points(&cfg.setup()?, path, &spec.parameter, &values, cfg.variant, &cfg.solver, execution))
}

/// The config's base point, reported against the drive amplitude.
pub fn steady(cfg: &ExperimentConfig) -> Result<ResultRow> {
    if cfg.sweep.is_some() || cfg.psd.is_some() {
        return Err(Error::config("", "`steady` takes a config without sweep or psd block"));
    }
    let setup = cfg.setup()?;
    let observation = run_variant(&setup, cfg.variant, &cfg.solver)?;
    Ok(ResultRow {
        param: "drive.Omega".into(),
        value: setup.drive_amplitude,
        unit: Unit::MilliElectronVolt,
        variant: cfg.variant,
        observation: Some(observation),
        error: None,
    })
}

fn operator_for(
    label: &str,
    model: &SystemModel,
    basis: &FockBasis,
    hybrid: Option<&HybridParams>,
    on_hybrid_basis: bool,
) -> Result<SparseOperator> {
    if basis.layout().labels().iter().any(|l| l == label) {
        return basis.annihilation(label);
    }
    let params = hybrid.ok_or_else(|| Error::UnknownMode(label.to_string()))?;
    if on_hybrid_basis {
        let idx = model
            .photon_modes
            .iter()
            .position(|m| m.label == label)
            .or_else(|| ["c", "p1", "p2"].iter().position(|l| *l == label))
            .ok_or_else(|| Error::UnknownMode(label.to_string()))?;
        let ops = original_annihilation(params, basis)?;
        Ok(ops[idx].clone())
    } else {
        let idx = [MINUS, PLUS, DARK]
            .iter()
            .position(|l| *l == label)
            .ok_or_else(|| Error::UnknownMode(label.to_string()))?;
        let ops = hybrid_annihilation(params, model, basis)?;
        Ok(ops[idx].clone())
    }
}

/// Spectra of the configured modes on the configured grid.
pub fn psd_run(cfg: &ExperimentConfig) -> Result<Vec<Spectrum>> {
    let spec = cfg
        .psd
        .as_ref()
        .ok_or_else(|| Error::config("psd", "the config has no psd block"))?;
    let grid = spec.grid();
    let model = cfg.setup()?.to_model()?;
    let (model, basis, l, params, on_hybrid) = match cfg.variant {
        Variant::Full => {
            let basis = model.basis()?;
            let l = model_liouvillian(&model, &basis)?;
            let params = hybridize(&model).ok().map(|(p, _)| p);
            (model, basis, l, params, false)
        }
        Variant::HybridFull => {
            let (params, hybrid) = hybridize(&model)?;
            let basis = hybrid.basis()?;
            let l = build_hybrid_liouvillian(&hybrid, &basis)?;
            (hybrid, basis, l, Some(params), true)
        }
        Variant::SingleMode => {
            let (params, single) = single_mode_model(&model)?;
            let basis = single.basis()?;
            let l = model_liouvillian(&single, &basis)?;
            (single, basis, l, Some(params), true)
        }
        Variant::Eliminated => {
            let (_, single) = single_mode_model(&model)?;
            let e = adiabatic_eliminate(&single)?;
            let basis = e.basis()?;
            let l = e.liouvillian(&basis)?;
            (single, basis, l, None, true)
        }
        Variant::Isolated => {
            return Err(Error::config("variant", "spectra are not defined for the isolated variant"));
        }
    };
    let ss = solved(&model, &l, &basis, &cfg.solver)?;
    spec.modes
        .iter()
        .map(|label| {
            let op = operator_for(label, &model, &basis, params.as_ref(), on_hybrid)
                .map_err(|e| Error::config("psd.modes", e.to_string()))?;
            psd(&l, &ss.rho, &op, label, &grid, &cfg.solver)
        })
        .collect()
}

pub fn write_spectra<W: Write>(spectra: &[Spectrum], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["omega_meV".to_string()];
    header.extend(spectra.iter().map(|s| format!("S_{}_per_meV", s.mode_label)));
    header.push("failed".into());
    w.write_record(&header)?;
    let Some(first) = spectra.first() else {
        w.flush()?;
        return Ok(());
    };
    for (k, omega) in first.frequencies.iter().enumerate() {
        let mut rec = vec![num(*omega)];
        rec.extend(spectra.iter().map(|s| num(s.values[k])));
        let failed: Vec<&str> = spectra
            .iter()
            .filter(|s| s.failures.iter().any(|(i, _)| *i == k))
            .map(|s| s.mode_label.as_str())
            .collect();
        rec.push(failed.join(";"));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(omega: f64, cap: usize) -> SetupParams {
        let mut p = SetupParams::reference(omega);
        p.cap = cap;
        p
    }

    #[test]
    fn eliminated_at_zero_drive_returns_bath_temperatures() {
        let o = run_variant(&small(0.0, 8), Variant::Eliminated, &SolverOptions::default()).unwrap();
        assert!((o.molecules[0].t_eff - 77.0).abs() < 0.05);
        assert!(o.lambda.abs() < 1e-15);
        assert!(o.photons.minus.abs() < 1e-20);
    }

    #[test]
    fn hybrid_and_original_observations_agree() {
        let opts = SolverOptions::default();
        let a = run_variant(&small(35.0, 2), Variant::Full, &opts).unwrap();
        let b = run_variant(&small(35.0, 2), Variant::HybridFull, &opts).unwrap();
        let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs());
        for (x, y) in [
            (a.molecules[0].n, b.molecules[0].n),
            (a.molecules[1].n, b.molecules[1].n),
            (a.photons.c, b.photons.c),
            (a.photons.p1, b.photons.p1),
            (a.photons.p2, b.photons.p2),
            (a.photons.minus, b.photons.minus),
            (a.photons.plus, b.photons.plus),
            (a.photons.dark, b.photons.dark),
        ] {
            assert!(rel(x, y) < 1e-8, "{x} vs {y}");
        }
    }

    #[test]
    fn isolated_removes_the_other_coupling() {
        let model = small(10.0, 2).to_model().unwrap();
        let iso = isolate(&model, 1);
        assert!(iso.couplings.optomech.iter().all(|o| o.vibration == 1));
        assert!(!iso.couplings.optomech.is_empty());
    }

    #[test]
    fn failed_points_are_reported_in_order() {
        let base = small(5.0, 2);
        let path: ParamPath = "vibrations.gamma".parse().unwrap();
        let rows = sweep_points(
            &base,
            path,
            "vibrations.gamma",
            &[0.1, -1.0, 0.2],
            Variant::Full,
            &SolverOptions::default(),
            Execution::Parallel,
        );
        assert_eq!(rows.len(), 3);
        assert!(rows[0].error.is_none() && rows[2].error.is_none());
        assert!(rows[1].error.as_ref().unwrap().contains("gamma"));
        let mut buf = Vec::new();
        write_rows(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("param,value,unit,variant,n1,n2,T1_eff_K"));
        assert!(lines.iter().all(|l| l.split(',').count() >= RESULT_COLUMNS.len()));
    }
}
