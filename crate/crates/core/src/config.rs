//! Experiment configuration files.
//!
//! Energies are written either as bare numbers in meV or as strings with an
//! explicit `meV`/`eV` suffix; temperatures as bare kelvin or with a `K`
//! suffix. See `configs/SCHEMA.md` for the full layout.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer};

use crate::error::{Error, Result};
use crate::model::{PhotonMode, SetupParams, VibrationalMode};
use crate::steadystate::SolverOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    MilliElectronVolt,
    Kelvin,
    Count,
}

impl Unit {
    pub fn symbol(self) -> &'static str {
        match self {
            Unit::MilliElectronVolt => "meV",
            Unit::Kelvin => "K",
            Unit::Count => "1",
        }
    }
}

/// A number, optionally carrying a unit suffix, as written in a config.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum RawQuantity {
    Number(f64),
    Text(String),
}

impl RawQuantity {
    /// Value in the canonical unit (meV, K or plain count).
    pub fn to_unit(&self, unit: Unit) -> std::result::Result<f64, String> {
        let (number, suffix) = match self {
            RawQuantity::Number(x) => (*x, ""),
            RawQuantity::Text(s) => {
                let s = s.trim();
                let split = s
                    .find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E')
                    .or_else(|| s.rfind(' '))
                    .unwrap_or(s.len());
                let (num, suf) = s.split_at(split);
                // "1.61eV" would otherwise split at the exponent marker
                let (num, suf) = if suf.trim() == "V" && num.ends_with(['e', 'E']) {
                    (&num[..num.len() - 1], "eV")
                } else {
                    (num, suf)
                };
                let x: f64 = num.trim().parse().map_err(|_| format!("`{s}` is not a number with a unit"))?;
                (x, suf.trim())
            }
        };
        if !number.is_finite() {
            return Err(format!("non-finite value {number}"));
        }
        let scale = match (unit, suffix) {
            (Unit::MilliElectronVolt, "" | "meV") => 1.0,
            (Unit::MilliElectronVolt, "eV") => 1000.0,
            (Unit::Kelvin, "" | "K") => 1.0,
            (Unit::Count, "") => 1.0,
            (u, s) => return Err(format!("unit `{s}` is not valid here (expected {})", u.symbol())),
        };
        Ok(number * scale)
    }
}

fn quantity<'de, D: Deserializer<'de>>(d: D, unit: Unit) -> std::result::Result<f64, D::Error> {
    RawQuantity::deserialize(d)?.to_unit(unit).map_err(serde::de::Error::custom)
}

/// Energy in meV.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Energy(pub f64);

impl<'de> Deserialize<'de> for Energy {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        quantity(d, Unit::MilliElectronVolt).map(Energy)
    }
}

/// Temperature in K.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Temperature(pub f64);

impl<'de> Deserialize<'de> for Temperature {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        quantity(d, Unit::Kelvin).map(Temperature)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    #[default]
    Full,
    HybridFull,
    SingleMode,
    Eliminated,
    Isolated,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Full,
        Variant::HybridFull,
        Variant::SingleMode,
        Variant::Eliminated,
        Variant::Isolated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::HybridFull => "hybrid-full",
            Variant::SingleMode => "single-mode",
            Variant::Eliminated => "eliminated",
            Variant::Isolated => "isolated",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown variant `{s}` (expected full|hybrid-full|single-mode|eliminated|isolated)"))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhotonSpec {
    pub label: Option<String>,
    pub omega: Energy,
    pub kappa: Energy,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VibrationSpec {
    pub label: Option<String>,
    pub nu: Energy,
    pub gamma: Energy,
    pub temperature: Temperature,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSpec {
    pub omega_l: Energy,
    #[serde(rename = "Omega")]
    pub amplitude: Energy,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: RawQuantity,
    pub stop: RawQuantity,
    pub points: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: String,
    pub values: Option<Vec<RawQuantity>>,
    pub range: Option<RangeSpec>,
}

fn default_psd_modes() -> Vec<String> {
    vec!["b1".into(), "b2".into(), crate::hybrid::MINUS.into()]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsdSpec {
    #[serde(default = "default_psd_modes")]
    pub modes: Vec<String>,
    pub omega_min: Energy,
    pub omega_max: Energy,
    pub points: usize,
}

impl PsdSpec {
    pub fn grid(&self) -> Vec<f64> {
        linspace(self.omega_min.0, self.omega_max.0, self.points)
    }
}

fn default_cap() -> usize {
    5
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: Option<String>,
    pub cavity: PhotonSpec,
    pub plasmons: Vec<PhotonSpec>,
    pub vibrations: Vec<VibrationSpec>,
    pub g_cp: Energy,
    /// Coupling of plasmon i to molecule i.
    pub g_p: Vec<Energy>,
    #[serde(default)]
    pub g_c: Energy,
    pub drive: DriveSpec,
    #[serde(default = "default_cap")]
    pub cap: usize,
    #[serde(default)]
    pub variant: Variant,
    pub sweep: Option<SweepSpec>,
    pub psd: Option<PsdSpec>,
    #[serde(default)]
    pub solver: SolverOptions,
    pub output: Option<PathBuf>,
}

/// What a config asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunKind {
    Single,
    Sweep,
    Psd,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), format!("cannot read config: {e}")))?;
        Self::from_json(&text)
    }

    pub fn kind(&self) -> RunKind {
        match (&self.sweep, &self.psd) {
            (Some(_), _) => RunKind::Sweep,
            (None, Some(_)) => RunKind::Psd,
            (None, None) => RunKind::Single,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweep.is_some() && self.psd.is_some() {
            return Err(Error::config("", "a config holds either a sweep block or a psd block, not both"));
        }
        if self.vibrations.len() != 2 {
            return Err(Error::config("vibrations", "exactly two molecules are required"));
        }
        if self.plasmons.len() != self.vibrations.len() {
            return Err(Error::config("plasmons", "one plasmon per molecule is required"));
        }
        if self.g_p.len() != self.plasmons.len() {
            return Err(Error::config("g_p", "one coupling per plasmon is required"));
        }
        if let Some(sweep) = &self.sweep {
            sweep.values()?;
        }
        if let Some(psd) = &self.psd {
            if psd.points < 2 || psd.omega_max.0 <= psd.omega_min.0 {
                return Err(Error::config("psd", "the grid needs omega_max > omega_min and at least two points"));
            }
            if psd.modes.is_empty() {
                return Err(Error::config("psd.modes", "at least one mode is required"));
            }
        }
        self.setup()?.to_model()?;
        Ok(())
    }

    /// Model parameters with the config's base values.
    pub fn setup(&self) -> Result<SetupParams> {
        let photon = |spec: &PhotonSpec, default: String| PhotonMode {
            label: spec.label.clone().unwrap_or(default),
            omega: spec.omega.0,
            kappa: spec.kappa.0,
        };
        Ok(SetupParams {
            cavity: photon(&self.cavity, "c".into()),
            plasmons: self
                .plasmons
                .iter()
                .enumerate()
                .map(|(i, p)| photon(p, format!("p{}", i + 1)))
                .collect(),
            vibrations: self
                .vibrations
                .iter()
                .enumerate()
                .map(|(j, v)| VibrationalMode {
                    label: v.label.clone().unwrap_or_else(|| format!("b{}", j + 1)),
                    nu: v.nu.0,
                    gamma: v.gamma.0,
                    bath_temperature: v.temperature.0,
                })
                .collect(),
            g_cp: self.g_cp.0,
            g_p: self.g_p.iter().map(|g| g.0).collect(),
            g_c: self.g_c.0,
            omega_l: self.drive.omega_l.0,
            drive_amplitude: self.drive.amplitude.0,
            cap: self.cap,
        })
    }
}

/// `points` evenly spaced values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        n => (0..n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect(),
    }
}

impl SweepSpec {
    pub fn path(&self) -> Result<ParamPath> {
        self.parameter.parse()
    }

    /// Sweep values in the parameter's canonical unit, in input order.
    pub fn values(&self) -> Result<Vec<f64>> {
        let path = self.path()?;
        let unit = path.unit();
        let convert = |q: &RawQuantity, at: &str| q.to_unit(unit).map_err(|r| Error::config(at, r));
        let values = match (&self.values, &self.range) {
            (Some(v), None) => v
                .iter()
                .enumerate()
                .map(|(i, q)| convert(q, &format!("sweep.values[{i}]")))
                .collect::<Result<Vec<_>>>()?,
            (None, Some(r)) => {
                let start = convert(&r.start, "sweep.range.start")?;
                let stop = convert(&r.stop, "sweep.range.stop")?;
                linspace(start, stop, r.points)
            }
            _ => return Err(Error::config("sweep", "give exactly one of `values` or `range`")),
        };
        if values.is_empty() {
            return Err(Error::config("sweep", "the sweep has no points"));
        }
        if unit == Unit::Count && values.iter().any(|v| v.fract() != 0.0 || *v < 0.0) {
            return Err(Error::config("sweep.values", "`cap` takes non-negative integers"));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhotonField {
    Omega,
    Kappa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VibrationField {
    Nu,
    Gamma,
    Temperature,
}

/// A numeric model field addressed by a dotted path such as `drive.Omega`,
/// `vibrations[1].nu` or `plasmons.kappa` (no index: every entry).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamPath {
    DriveAmplitude,
    LaserFrequency,
    Cavity(PhotonField),
    Plasmons(Option<usize>, PhotonField),
    Vibrations(Option<usize>, VibrationField),
    GCp,
    GC,
    GP(Option<usize>),
    Cap,
}

fn split_index(s: &str) -> std::result::Result<(&str, Option<usize>), ()> {
    match s.find('[') {
        None => Ok((s, None)),
        Some(k) => {
            let rest = s[k + 1..].strip_suffix(']').ok_or(())?;
            Ok((&s[..k], Some(rest.parse().map_err(|_| ())?)))
        }
    }
}

impl FromStr for ParamPath {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config("sweep.parameter", format!("`{s}` does not name a numeric model field"));
        let mut parts = s.split('.');
        let (head, index) = split_index(parts.next().unwrap_or("")).map_err(|_| bad())?;
        let field = parts.next();
        if parts.next().is_some() {
            return Err(bad());
        }
        let photon = |f: Option<&str>| match f {
            Some("omega") => Ok(PhotonField::Omega),
            Some("kappa") => Ok(PhotonField::Kappa),
            _ => Err(bad()),
        };
        let path = match (head, index, field) {
            ("drive", None, Some("Omega")) => ParamPath::DriveAmplitude,
            ("drive", None, Some("omega_l")) => ParamPath::LaserFrequency,
            ("cavity", None, f) => ParamPath::Cavity(photon(f)?),
            ("plasmons", i, f) => ParamPath::Plasmons(i, photon(f)?),
            ("vibrations", i, f) => ParamPath::Vibrations(
                i,
                match f {
                    Some("nu") => VibrationField::Nu,
                    Some("gamma") => VibrationField::Gamma,
                    Some("temperature") => VibrationField::Temperature,
                    _ => return Err(bad()),
                },
            ),
            ("g_cp", None, None) => ParamPath::GCp,
            ("g_c", None, None) => ParamPath::GC,
            ("g_p", i, None) => ParamPath::GP(i),
            ("cap", None, None) => ParamPath::Cap,
            _ => return Err(bad()),
        };
        Ok(path)
    }
}

impl ParamPath {
    pub fn unit(self) -> Unit {
        match self {
            ParamPath::Vibrations(_, VibrationField::Temperature) => Unit::Kelvin,
            ParamPath::Cap => Unit::Count,
            _ => Unit::MilliElectronVolt,
        }
    }

    /// Writes `value` into `params`, failing on out-of-range indices.
    pub fn apply(self, params: &mut SetupParams, value: f64) -> Result<()> {
        fn select<T>(items: &mut [T], index: Option<usize>, what: &str) -> Result<Vec<usize>> {
            match index {
                None => Ok((0..items.len()).collect()),
                Some(i) if i < items.len() => Ok(vec![i]),
                Some(i) => Err(Error::config("sweep.parameter", format!("{what}[{i}] does not exist"))),
            }
        }
        let set_photon = |m: &mut PhotonMode, f: PhotonField| match f {
            PhotonField::Omega => m.omega = value,
            PhotonField::Kappa => m.kappa = value,
        };
        match self {
            ParamPath::DriveAmplitude => params.drive_amplitude = value,
            ParamPath::LaserFrequency => params.omega_l = value,
            ParamPath::Cavity(f) => set_photon(&mut params.cavity, f),
            ParamPath::Plasmons(i, f) => {
                for k in select(&mut params.plasmons, i, "plasmons")? {
                    set_photon(&mut params.plasmons[k], f);
                }
            }
            ParamPath::Vibrations(i, f) => {
                for k in select(&mut params.vibrations, i, "vibrations")? {
                    let v = &mut params.vibrations[k];
                    match f {
                        VibrationField::Nu => v.nu = value,
                        VibrationField::Gamma => v.gamma = value,
                        VibrationField::Temperature => v.bath_temperature = value,
                    }
                }
            }
            ParamPath::GCp => params.g_cp = value,
            ParamPath::GC => params.g_c = value,
            ParamPath::GP(i) => {
                for k in select(&mut params.g_p, i, "g_p")? {
                    params.g_p[k] = value;
                }
            }
            ParamPath::Cap => params.cap = value as usize,
        }
        Ok(())
    }
}
