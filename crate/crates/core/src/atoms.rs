//! Atomic species constants, wavevector geometry and motional-mode parameters.
//!
//! Internally everything is SI: kilograms, meters, seconds and radians per
//! second. Human units (amu, nm, ns, kHz) only appear in constructors named
//! after them and in the CLI layer.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054571817e-34;
/// Unified atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.66053906660e-27;

pub type Vec3 = [f64; 3];

pub(crate) fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn is_unit(v: &Vec3) -> bool {
    (dot(v, v).sqrt() - 1.0).abs() <= 1e-9
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Species {
    pub name: String,
    /// kg
    pub mass: f64,
    /// m
    pub transition_wavelength: f64,
    /// s
    pub excited_lifetime: f64,
}

impl Species {
    pub fn new(name: impl Into<String>, mass: f64, wavelength: f64, lifetime: f64) -> Result<Self> {
        let species = Species {
            name: name.into(),
            mass,
            transition_wavelength: wavelength,
            excited_lifetime: lifetime,
        };
        species.validate()?;
        Ok(species)
    }

    /// Builds a species from amu, nm and ns.
    pub fn from_human_units(
        name: impl Into<String>,
        mass_amu: f64,
        wavelength_nm: f64,
        lifetime_ns: f64,
    ) -> Result<Self> {
        Self::new(
            name,
            mass_amu * ATOMIC_MASS_UNIT,
            wavelength_nm * 1e-9,
            lifetime_ns * 1e-9,
        )
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mass", self.mass),
            ("transition_wavelength", self.transition_wavelength),
            ("excited_lifetime", self.excited_lifetime),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Optical wavenumber 2π/λ in 1/m.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.transition_wavelength
    }
}

/// One motional mode of one emitter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    /// rad/s
    pub frequency: f64,
    pub nbar: f64,
    /// Emission Lamb-Dicke parameter η.
    pub eta_emit: f64,
    /// Excitation Lamb-Dicke parameter η′.
    pub eta_exc: f64,
    /// Normal-mode participation b of this emitter in the mode.
    pub participation: f64,
}

impl ModeSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.frequency > 0.0 && self.frequency.is_finite()) {
            return Err(Error::invalid("frequency", format!("must be positive, got {}", self.frequency)));
        }
        if !(self.nbar >= 0.0 && self.nbar.is_finite()) {
            return Err(Error::invalid("nbar", format!("must be >= 0, got {}", self.nbar)));
        }
        if !(self.participation.abs() <= 1.0) {
            return Err(Error::invalid(
                "participation",
                format!("|b| must be <= 1, got {}", self.participation),
            ));
        }
        if !(self.eta_emit.is_finite() && self.eta_exc.is_finite()) {
            return Err(Error::invalid("eta", "Lamb-Dicke parameters must be finite"));
        }
        Ok(())
    }

    /// Emission recoil frequency seen by this mode, η²ω.
    pub fn recoil_frequency(&self) -> f64 {
        self.eta_emit * self.eta_emit * self.frequency
    }

    /// Differential recoil frequency (η−η′)²ω.
    pub fn diff_recoil_frequency(&self) -> f64 {
        let d = self.eta_emit - self.eta_exc;
        d * d * self.frequency
    }
}

/// Thermal occupation of a mode: either given directly or the Doppler limit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Occupation {
    Doppler,
    Fixed(f64),
}

/// A mode described by geometry, before Lamb-Dicke parameters are resolved.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeGeometry {
    /// rad/s
    pub frequency: f64,
    pub axis: Vec3,
    pub participation: f64,
    pub occupation: Occupation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmitterSpec {
    pub species: Species,
    pub modes: Vec<ModeSpec>,
    pub k_emit_direction: Vec3,
    pub k_exc_direction: Vec3,
    /// Excitation probability P_q.
    pub excite_prob: f64,
    /// Collection probability p_q.
    pub collect_prob: f64,
}

impl EmitterSpec {
    /// Resolves Lamb-Dicke parameters and occupations from the mode geometry.
    pub fn from_geometry(
        species: Species,
        k_emit_direction: Vec3,
        k_exc_direction: Vec3,
        modes: &[ModeGeometry],
        excite_prob: f64,
        collect_prob: f64,
    ) -> Result<Self> {
        species.validate()?;
        for (name, v) in [("k_emit_direction", &k_emit_direction), ("k_exc_direction", &k_exc_direction)] {
            if !is_unit(v) {
                return Err(Error::invalid(name, "must be a unit vector"));
            }
        }
        let resolved = modes
            .iter()
            .map(|g| {
                if !is_unit(&g.axis) {
                    return Err(Error::invalid("mode axis", "must be a unit vector"));
                }
                if !(g.frequency > 0.0) {
                    return Err(Error::invalid("frequency", "must be positive"));
                }
                let nbar = match g.occupation {
                    Occupation::Doppler => doppler_nbar(g.frequency, species.excited_lifetime)?,
                    Occupation::Fixed(n) => n,
                };
                let mode = ModeSpec {
                    frequency: g.frequency,
                    nbar,
                    eta_emit: lamb_dicke(&species, g.frequency, dot(&k_emit_direction, &g.axis), g.participation)?,
                    eta_exc: lamb_dicke(&species, g.frequency, dot(&k_exc_direction, &g.axis), g.participation)?,
                    participation: g.participation,
                };
                mode.validate()?;
                Ok(mode)
            })
            .collect::<Result<Vec<_>>>()?;
        let emitter = EmitterSpec {
            species,
            modes: resolved,
            k_emit_direction,
            k_exc_direction,
            excite_prob,
            collect_prob,
        };
        emitter.validate()?;
        Ok(emitter)
    }

    /// Single mode along the emission direction with excitation perpendicular
    /// to it, so that the projected |k − k′| equals |k| on the mode axis.
    pub fn single_mode(species: Species, frequency: f64, occupation: Occupation) -> Result<Self> {
        let x = [1.0, 0.0, 0.0];
        let y = [0.0, 1.0, 0.0];
        let mode = ModeGeometry { frequency, axis: x, participation: 1.0, occupation };
        Self::from_geometry(species, x, y, &[mode], 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.species.validate()?;
        if !is_unit(&self.k_emit_direction) || !is_unit(&self.k_exc_direction) {
            return Err(Error::invalid("wavevector direction", "must be a unit vector"));
        }
        for (name, p) in [("excite_prob", self.excite_prob), ("collect_prob", self.collect_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(name, format!("must lie in [0, 1], got {p}")));
            }
        }
        self.modes.iter().try_for_each(ModeSpec::validate)
    }

    pub fn lifetime(&self) -> f64 {
        self.species.excited_lifetime
    }
}

/// Single-photon recoil frequency ħ(k·projection)²/2m in rad/s.
pub fn recoil_frequency(species: &Species, projection: f64) -> f64 {
    let k = species.wavenumber() * projection;
    HBAR * k * k / (2.0 * species.mass)
}

/// Differential recoil frequency ħ[(k − k′)·axis]² b²/2m in rad/s, both
/// wavevectors having magnitude 2π/λ.
pub fn diff_recoil_frequency(
    species: &Species,
    k_emit: &Vec3,
    k_exc: &Vec3,
    mode_axis: &Vec3,
    participation: f64,
) -> f64 {
    let projection = dot(k_emit, mode_axis) - dot(k_exc, mode_axis);
    recoil_frequency(species, projection) * participation * participation
}

/// Lamb-Dicke parameter k·projection·b·sqrt(ħ/2mω).
pub fn lamb_dicke(species: &Species, frequency: f64, projection: f64, participation: f64) -> Result<f64> {
    if !(frequency > 0.0) {
        return Err(Error::invalid("frequency", "must be positive"));
    }
    Ok(species.wavenumber() * projection * participation * (HBAR / (2.0 * species.mass * frequency)).sqrt())
}

/// Doppler-limit thermal occupation 1/(2ωτ).
pub fn doppler_nbar(frequency: f64, lifetime: f64) -> Result<f64> {
    if !(frequency > 0.0 && lifetime > 0.0) {
        return Err(Error::invalid("doppler_nbar", "frequency and lifetime must be positive"));
    }
    Ok(1.0 / (2.0 * frequency * lifetime))
}

/// (label, mass number, wavelength nm, lifetime ns)
const BUILTIN: [(&str, u32, f64, f64); 12] = [
    ("9Be+@313", 9, 313.0, 8.2),
    ("40Ca+@397", 40, 397.0, 6.8),
    ("40Ca+@866", 40, 866.0, 6.8),
    ("87Rb@780", 87, 780.0, 26.0),
    ("88Sr+@422", 88, 422.0, 7.8),
    ("88Sr+@1092", 88, 1092.0, 7.8),
    ("88Sr@461", 88, 461.0, 5.3),
    ("138Ba+@493", 138, 493.0, 7.9),
    ("138Ba+@650", 138, 650.0, 7.9),
    ("171Yb+@369", 171, 369.0, 8.1),
    ("171Yb@399", 171, 399.0, 5.5),
    ("171Yb@1389", 171, 1389.0, 330.0),
];

/// The twelve species/transition rows of the recoil error table, in table
/// order. Masses are mass number times the atomic mass unit.
pub fn builtin_species() -> Vec<Species> {
    BUILTIN
        .iter()
        .map(|&(name, a, nm, ns)| Species {
            name: name.to_string(),
            mass: f64::from(a) * ATOMIC_MASS_UNIT,
            transition_wavelength: nm * 1e-9,
            excited_lifetime: ns * 1e-9,
        })
        .collect()
}

pub fn lookup_species(name: &str) -> Result<Species> {
    builtin_species()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::UnknownSpecies(name.to_string()))
}

/// Checks that each mode's participations over all emitters satisfy Σ_q b² = 1.
/// `matrix[q][i]` is the participation of emitter q in mode i.
pub fn check_participation_normalized(matrix: &[Vec<f64>], tolerance: f64) -> Result<()> {
    let Some(n_modes) = matrix.first().map(Vec::len) else {
        return Ok(());
    };
    if matrix.iter().any(|row| row.len() != n_modes) {
        return Err(Error::invalid("participation", "ragged mode matrix"));
    }
    for i in 0..n_modes {
        let norm: f64 = matrix.iter().map(|row| row[i] * row[i]).sum();
        if (norm - 1.0).abs() > tolerance {
            return Err(Error::invalid("participation", format!("mode {i} has sum b^2 = {norm}")));
        }
    }
    Ok(())
}
