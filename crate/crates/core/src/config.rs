//! Run configuration in human units.
//!
//! Times are in ns, wavelengths in nm, masses in amu and mode frequencies in
//! kHz. `protocol.frequency_unit` says whether `frequency_khz` is a linear
//! frequency (`"Hz_linear"`, ω = 2π·f) or an angular one (`"rad_per_s"`, in
//! units of 10³ rad/s). Unknown keys are rejected.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::atoms::{lookup_species, EmitterSpec, ModeGeometry, Occupation, Species, Vec3};
use crate::error::{Error, Result};
use crate::herald::{BeamsplitterSpec, HeraldChannel, MotionTreatment, ProtocolSpec};
use crate::temporal::DetectionWindows;

const NS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub emitters: EmittersConfig,
    pub protocol: ProtocolConfig,
    pub windows: WindowsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmittersConfig {
    pub a: EmitterConfig,
    /// Defaults to a copy of `a`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<EmitterConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpeciesConfig {
    Builtin(String),
    Custom(CustomSpecies),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomSpecies {
    pub name: String,
    pub mass_amu: f64,
    pub wavelength_nm: f64,
    pub lifetime_ns: f64,
}

fn default_k_emit() -> Vec3 {
    [1.0, 0.0, 0.0]
}

fn default_k_exc() -> Vec3 {
    [0.0, 1.0, 0.0]
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterConfig {
    pub species: SpeciesConfig,
    #[serde(default = "default_k_emit")]
    pub k_emit: Vec3,
    #[serde(default = "default_k_exc")]
    pub k_exc: Vec3,
    #[serde(default = "one")]
    pub excite_prob: f64,
    #[serde(default = "one")]
    pub collect_prob: f64,
    pub modes: Vec<ModeConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NbarConfig {
    Value(f64),
    Named(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub frequency_khz: f64,
    #[serde(default = "default_k_emit")]
    pub axis: Vec3,
    #[serde(default = "one")]
    pub participation: f64,
    /// A number or `"doppler"`.
    pub nbar: NbarConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrequencyUnit {
    #[serde(rename = "Hz_linear")]
    HzLinear,
    #[serde(rename = "rad_per_s")]
    RadPerS,
}

impl FrequencyUnit {
    fn to_angular(self, khz: f64) -> f64 {
        match self {
            FrequencyUnit::HzLinear => 2.0 * PI * khz * 1e3,
            FrequencyUnit::RadPerS => khz * 1e3,
        }
    }
}

fn default_channel() -> String {
    "1001".to_string()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub frequency_unit: FrequencyUnit,
    #[serde(default)]
    pub timebin_ns: f64,
    #[serde(default)]
    pub beamsplitter_imbalance: f64,
    #[serde(default = "one")]
    pub detector_efficiency: f64,
    /// Per-event rewind with this efficiency; absent means no rewind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rewind_efficiency: Option<f64>,
    #[serde(default = "default_channel")]
    pub channel: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowsConfig {
    /// Null or absent for an unbounded detector window.
    #[serde(default)]
    pub detector_window_ns: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difference_window_ns: Option<f64>,
    /// Difference window in lifetimes of emitter A.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    #[serde(default)]
    pub known_offset_ns: f64,
}

fn default_samples() -> usize {
    1_000_000
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    W,
    BsImbalance,
    TimebinNs,
    KnownOffsetNs,
    DetectorEfficiency,
    RewindEfficiency,
}

impl SweepParameter {
    pub fn column(self) -> &'static str {
        match self {
            SweepParameter::W => "w",
            SweepParameter::BsImbalance => "bs_imbalance",
            SweepParameter::TimebinNs => "timebin_ns",
            SweepParameter::KnownOffsetNs => "known_offset_ns",
            SweepParameter::DetectorEfficiency => "detector_efficiency",
            SweepParameter::RewindEfficiency => "rewind_efficiency",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Markdown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(config_err)?;
        cfg.protocol_spec()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn channel(&self) -> Result<HeraldChannel> {
        HeraldChannel::parse(&self.protocol.channel).map_err(config_err)
    }

    pub fn motion(&self) -> MotionTreatment {
        match self.protocol.rewind_efficiency {
            Some(efficiency) => MotionTreatment::Rewound { efficiency },
            None => MotionTreatment::Free,
        }
    }

    /// Resolves units and builds the validated protocol.
    pub fn protocol_spec(&self) -> Result<ProtocolSpec> {
        let unit = self.protocol.frequency_unit;
        let a = build_emitter(&self.emitters.a, unit)?;
        let b = match &self.emitters.b {
            Some(b) => build_emitter(b, unit)?,
            None => a.clone(),
        };
        let windows = self.build_windows(a.lifetime())?;
        let beamsplitter = BeamsplitterSpec::from_imbalance(self.protocol.beamsplitter_imbalance).map_err(config_err)?;
        let spec = ProtocolSpec {
            emitter_a: a,
            emitter_b: b,
            beamsplitter,
            windows,
            timebin: self.protocol.timebin_ns * NS,
            detector_efficiency: self.protocol.detector_efficiency,
        };
        spec.validate().map_err(config_err)?;
        if let Some(e) = self.protocol.rewind_efficiency {
            if !e.is_finite() {
                return Err(Error::Config("rewind_efficiency must be finite".into()));
            }
        }
        self.channel()?;
        Ok(spec)
    }

    fn build_windows(&self, lifetime: f64) -> Result<DetectionWindows> {
        let w = &self.windows;
        let td = w.detector_window_ns.map_or(f64::INFINITY, |v| v * NS);
        let tdelta = match (w.difference_window_ns, w.w) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either windows.difference_window_ns or windows.w, not both".into()))
            }
            (Some(ns), None) => ns * NS,
            (None, Some(w)) => w * lifetime,
            (None, None) => {
                return Err(Error::Config("windows needs difference_window_ns or w".into()));
            }
        };
        DetectionWindows::new(td, tdelta.min(td), w.known_offset_ns * NS).map_err(config_err)
    }

    /// Copy of the configuration with one swept parameter set.
    pub fn with_parameter(&self, parameter: SweepParameter, value: f64) -> RunConfig {
        let mut c = self.clone();
        match parameter {
            SweepParameter::W => {
                c.windows.w = Some(value);
                c.windows.difference_window_ns = None;
            }
            SweepParameter::BsImbalance => c.protocol.beamsplitter_imbalance = value,
            SweepParameter::TimebinNs => c.protocol.timebin_ns = value,
            SweepParameter::KnownOffsetNs => c.windows.known_offset_ns = value,
            SweepParameter::DetectorEfficiency => c.protocol.detector_efficiency = value,
            SweepParameter::RewindEfficiency => c.protocol.rewind_efficiency = Some(value),
        }
        c
    }
}

fn build_species(cfg: &SpeciesConfig) -> Result<Species> {
    match cfg {
        SpeciesConfig::Builtin(name) => lookup_species(name).map_err(config_err),
        SpeciesConfig::Custom(c) => {
            Species::from_human_units(c.name.clone(), c.mass_amu, c.wavelength_nm, c.lifetime_ns).map_err(config_err)
        }
    }
}

fn build_emitter(cfg: &EmitterConfig, unit: FrequencyUnit) -> Result<EmitterSpec> {
    let species = build_species(&cfg.species)?;
    let modes = cfg
        .modes
        .iter()
        .map(|m| {
            let occupation = match &m.nbar {
                NbarConfig::Value(n) => Occupation::Fixed(*n),
                NbarConfig::Named(s) if s == "doppler" => Occupation::Doppler,
                NbarConfig::Named(s) => return Err(Error::Config(format!("nbar must be a number or \"doppler\", got \"{s}\""))),
            };
            Ok(ModeGeometry {
                frequency: unit.to_angular(m.frequency_khz),
                axis: m.axis,
                participation: m.participation,
                occupation,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    EmitterSpec::from_geometry(species, cfg.k_emit, cfg.k_exc, &modes, cfg.excite_prob, cfg.collect_prob)
        .map_err(config_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "emitters": {"a": {"species": "171Yb+@369", "modes": [{"frequency_khz": 1000, "nbar": "doppler"}]}},
        "protocol": {"frequency_unit": "Hz_linear"},
        "windows": {"w": 2.0}
    }"#;

    #[test]
    fn parses_minimal() {
        let cfg = RunConfig::from_json(BASE).unwrap();
        let spec = cfg.protocol_spec().unwrap();
        let m = spec.emitter_a.modes[0];
        assert!((m.frequency - 2.0 * PI * 1e6).abs() < 1e-6);
        assert!((m.nbar - 9.82).abs() < 0.01);
        assert_eq!(spec.emitter_a, spec.emitter_b);
        assert!((spec.windows.difference_window - 16.2e-9).abs() < 1e-18);
        assert!(spec.windows.detector_window.is_infinite());
        assert_eq!(cfg.motion(), MotionTreatment::Free);
    }

    #[test]
    fn angular_units() {
        let text = BASE.replace("Hz_linear", "rad_per_s");
        let spec = RunConfig::from_json(&text).unwrap().protocol_spec().unwrap();
        assert!((spec.emitter_a.modes[0].frequency - 1e6).abs() < 1e-6);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let typo = BASE.replace("\"w\": 2.0", "\"w\": 2.0, \"detector_windw_ns\": 5");
        assert!(matches!(RunConfig::from_json(&typo), Err(Error::Config(_))));
        let unit = BASE.replace("Hz_linear", "kHz");
        assert!(RunConfig::from_json(&unit).is_err());
        let both = BASE.replace("\"w\": 2.0", "\"w\": 2.0, \"difference_window_ns\": 5");
        assert!(RunConfig::from_json(&both).is_err());
        let species = BASE.replace("171Yb+@369", "Unobtainium");
        assert!(RunConfig::from_json(&species).is_err());
        let nbar = BASE.replace("\"doppler\"", "\"cold\"");
        assert!(RunConfig::from_json(&nbar).is_err());
    }

    #[test]
    fn custom_species_and_sweep() {
        let text = BASE.replace(
            "\"171Yb+@369\"",
            r#"{"name": "X", "mass_amu": 40, "wavelength_nm": 397, "lifetime_ns": 6.8}"#,
        );
        let cfg = RunConfig::from_json(&text).unwrap();
        let swept = cfg.with_parameter(SweepParameter::BsImbalance, 0.1);
        let spec = swept.protocol_spec().unwrap();
        assert!((spec.beamsplitter.imbalance() - 0.1).abs() < 1e-12);
        let r = cfg.with_parameter(SweepParameter::RewindEfficiency, 1.0);
        assert_eq!(r.motion(), MotionTreatment::Rewound { efficiency: 1.0 });
    }
}
