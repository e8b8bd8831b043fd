//! Closed-form recoil error estimates, the time-bin length rule and the
//! per-species recoil table.
//!
//! The random-emission error carries a convention-dependent constant κ in
//! `2𝓔^R = κ W ω^R τ` (Doppler limit, two emitters). Three conventions are
//! available: the tabulated one (κ = ½), the printed Doppler formula (κ = 2)
//! and a value measured from the interference integral (close to 1).

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::atoms::{builtin_species, recoil_frequency, EmitterSpec, ModeSpec, Occupation, Species};
use crate::error::{Error, Result};
use crate::herald::{fidelity, HeraldChannel, ProtocolSpec};
use crate::temporal::{window_variance_factor, DetectionWindows};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum KappaConvention {
    #[default]
    Table,
    PrintedEq37,
    Oracle { kappa: f64 },
}

impl KappaConvention {
    pub fn kappa(self) -> f64 {
        match self {
            KappaConvention::Table => 0.5,
            KappaConvention::PrintedEq37 => 2.0,
            KappaConvention::Oracle { kappa } => kappa,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            KappaConvention::Table => "table",
            KappaConvention::PrintedEq37 => "printed-eq37",
            KappaConvention::Oracle { .. } => "oracle",
        }
    }

    /// Parses a convention tag; `oracle` measures κ at window size `w`.
    pub fn from_tag(tag: &str, w: f64) -> Result<Self> {
        match tag {
            "table" => Ok(KappaConvention::Table),
            "printed-eq37" | "printed_eq37" => Ok(KappaConvention::PrintedEq37),
            "oracle" => Ok(KappaConvention::Oracle { kappa: measure_kappa(w)?.kappa }),
            other => Err(Error::UnknownConvention(other.to_string())),
        }
    }
}

impl fmt::Display for KappaConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (kappa = {})", self.tag(), self.kappa())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudgetRow {
    pub species_label: String,
    pub wavelength_nm: f64,
    pub lifetime_ns: f64,
    pub recoil_frequency_khz: f64,
    /// Two-emitter time-bin error 2𝓔^T as a probability.
    pub timebin_error: f64,
    /// Two-emitter random-emission error 2𝓔^R as a probability.
    pub random_error: f64,
    pub timebin_length_ell: f64,
    pub convention: KappaConvention,
}

impl ErrorBudgetRow {
    pub fn recoil_display(&self) -> String {
        if self.recoil_frequency_khz >= 100.0 {
            format!("{:.0}", self.recoil_frequency_khz)
        } else {
            format!("{:.1}", self.recoil_frequency_khz)
        }
    }

    /// Percent, two decimals.
    pub fn timebin_display(&self) -> String {
        format!("{:.2}", 100.0 * self.timebin_error)
    }

    /// Percent, three decimals.
    pub fn random_display(&self) -> String {
        format!("{:.3}", 100.0 * self.random_error)
    }
}

/// ¼ Σ_i (2n̄+1)(η−η′)²ω² T̃² over the supplied modes.
pub fn timebin_error_general(modes: &[ModeSpec], t_tilde: f64) -> f64 {
    modes
        .iter()
        .map(|m| 0.25 * (2.0 * m.nbar + 1.0) * m.diff_recoil_frequency() * m.frequency * t_tilde * t_tilde)
        .sum()
}

/// Per-mode random-emission error (κ/2)(2n̄+1) ω^R ω τ² W(w), with
/// ω^R = η²ω the recoil frequency seen by the mode.
pub fn random_error_general(mode: &ModeSpec, lifetime: f64, w: f64, convention: KappaConvention) -> Result<f64> {
    if !(w >= 0.0) {
        return Err(Error::invalid("w", "must be >= 0"));
    }
    let kappa = convention.kappa();
    Ok(0.5 * kappa
        * (2.0 * mode.nbar + 1.0)
        * mode.recoil_frequency()
        * mode.frequency
        * lifetime
        * lifetime
        * window_variance_factor(w))
}

/// Doppler-limit (2𝓔^T, 2𝓔^R) for two identical emitters, taking
/// |k − k′| = |k| so that ω^{ΔR} = ω^R.
pub fn doppler_errors(species: &Species, ell: f64, w: f64, convention: KappaConvention) -> Result<(f64, f64)> {
    if !(ell >= 0.0) {
        return Err(Error::invalid("ell", "must be >= 0"));
    }
    if !(w >= 0.0) {
        return Err(Error::invalid("w", "must be >= 0"));
    }
    let x = recoil_frequency(species, 1.0) * species.excited_lifetime;
    let timebin = 2.0 * 0.25 * ell * ell * x;
    let random = convention.kappa() * window_variance_factor(w) * x;
    Ok((timebin, random))
}

/// e^{−ℓ}.
pub fn timebin_overlap_error(ell: f64) -> f64 {
    (-ell).exp()
}

/// ℓ* with e^{−ℓ} = ½ℓ² ω^{ΔR} τ.
pub fn solve_timebin_length(species: &Species) -> Result<f64> {
    species.validate()?;
    solve_timebin_length_for(recoil_frequency(species, 1.0) * species.excited_lifetime)
}

/// Bisection for e^{−ℓ} = ½ℓ²x on ℓ ∈ [0.1, 60].
pub fn solve_timebin_length_for(x: f64) -> Result<f64> {
    let (lo, hi) = (0.1, 60.0);
    let f = |l: f64| (-l).exp() - 0.5 * l * l * x;
    if !(x > 0.0) || f(lo) < 0.0 || f(hi) > 0.0 {
        return Err(Error::NoRoot { lo, hi });
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 || b - a <= f64::EPSILON * m {
            return Ok(m);
        }
        if fm > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// The twelve-row recoil table at window size `w`.
pub fn generate_table1(w: f64, convention: KappaConvention) -> Result<Vec<ErrorBudgetRow>> {
    builtin_species()
        .iter()
        .map(|s| {
            let ell = solve_timebin_length(s)?;
            let (_, random) = doppler_errors(s, ell, w, convention)?;
            Ok(ErrorBudgetRow {
                species_label: s.name.clone(),
                wavelength_nm: round_to(s.transition_wavelength * 1e9, 1e-6),
                lifetime_ns: round_to(s.excited_lifetime * 1e9, 1e-6),
                recoil_frequency_khz: recoil_frequency(s, 1.0) / (2.0 * PI * 1e3),
                // at the fixed point the two errors coincide
                timebin_error: timebin_overlap_error(ell),
                random_error: random,
                timebin_length_ell: ell,
                convention,
            })
        })
        .collect()
}

/// Strips SI round-trip noise from a unit-converted input value.
fn round_to(x: f64, step: f64) -> f64 {
    (x / step).round() * step
}

/// T̃ with ωT = 2πN + ωT̃ and |ωT̃| ≤ π.
pub fn commensurate_residual(frequency: f64, timebin: f64) -> f64 {
    let period = 2.0 * PI / frequency;
    timebin - (timebin / period).round() * period
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecBudget {
    /// Σ_q 𝓔^T_q
    pub timebin: f64,
    /// Σ_q 𝓔^R_q
    pub random: f64,
    /// e^{−T/τ} bin overlap, zero without time-bin encoding.
    pub bin_overlap: f64,
    pub convention: KappaConvention,
}

impl SpecBudget {
    /// Motional infidelity, comparable with the interference integral.
    pub fn motional(&self) -> f64 {
        self.timebin + self.random
    }

    pub fn total(&self) -> f64 {
        self.motional() + self.bin_overlap
    }
}

/// Closed-form budget for a protocol, summed over both emitters and all modes.
pub fn closed_form_budget(spec: &ProtocolSpec, convention: KappaConvention) -> Result<SpecBudget> {
    spec.validate()?;
    let mut timebin = 0.0;
    let mut random = 0.0;
    for e in [&spec.emitter_a, &spec.emitter_b] {
        let tau = e.lifetime();
        let w = spec.windows.difference_window / tau;
        for m in &e.modes {
            timebin += timebin_error_general(std::slice::from_ref(m), commensurate_residual(m.frequency, spec.timebin));
            random += random_error_general(m, tau, w, convention)?;
        }
    }
    let tau = spec.emitter_a.lifetime().max(spec.emitter_b.lifetime());
    let bin_overlap = if spec.timebin > 0.0 { timebin_overlap_error(spec.timebin / tau) } else { 0.0 };
    Ok(SpecBudget { timebin, random, bin_overlap, convention })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaMeasurement {
    pub kappa: f64,
    pub w: f64,
    /// Quadrature fidelity of the reference configuration.
    pub fidelity: f64,
    /// Σ_q ½(2n̄+1)η²ω²τ²W, the random error per unit κ.
    pub unit_error: f64,
}

/// Reference configuration for κ: two Doppler-cooled ¹⁷¹Yb⁺ emitters at
/// ωτ = 10⁻³ without time-bin encoding.
pub fn kappa_reference_spec(w: f64) -> Result<ProtocolSpec> {
    let yb = crate::atoms::lookup_species("171Yb+@369")?;
    let tau = yb.excited_lifetime;
    let emitter = EmitterSpec::single_mode(yb, 1e-3 / tau, Occupation::Doppler)?;
    ProtocolSpec::symmetric(emitter, DetectionWindows::relative(w, tau)?, 0.0)
}

/// (κ, random error at κ = 1) implied by a fidelity value.
pub fn kappa_from_fidelity(spec: &ProtocolSpec, fidelity: f64) -> Result<(f64, f64)> {
    let budget = closed_form_budget(spec, KappaConvention::Oracle { kappa: 1.0 })?;
    Ok(((1.0 - fidelity - budget.timebin) / budget.random, budget.random))
}

/// Measures κ from the interference integral at window size `w`.
pub fn measure_kappa(w: f64) -> Result<KappaMeasurement> {
    if !(w > 0.0) {
        return Err(Error::invalid("w", "kappa needs a non-empty window"));
    }
    let spec = kappa_reference_spec(w)?;
    let f = fidelity(&spec, HeraldChannel::Opposite1001)?.fidelity;
    let (kappa, unit_error) = kappa_from_fidelity(&spec, f)?;
    Ok(KappaMeasurement { kappa, w, fidelity: f, unit_error })
}
