//! Conditional displacements that undo the recoil entanglement once the
//! detection times are known.
//!
//! After a herald at `(t_μ, t_ν)` the ↓ branch of each emitter is displaced
//! by `−(iη e^{iωt_μ} − iη′)` and the ↑ branch by
//! `−(iη e^{iω(t_ν+T)} − iη′ e^{iωT})`. Applying the opposite displacements
//! returns both branches to the initial amplitude, leaving an overall phase
//! that depends on the times only.
//!
//! An `efficiency` below one scales the applied displacements and models
//! imperfect cancellation.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::atoms::ModeSpec;
use crate::error::{check_time, Error, Result};
use crate::herald::{fidelity_with, BellResult, HeraldChannel, MotionTreatment, ProtocolSpec};
use crate::phase_space::{apply_chain, inner, recoil_chain, sample_thermal, thermal_chain_overlap, DisplacedState, RecoilBranch};
use crate::quadrature::QuadratureOptions;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewindPlan {
    /// Displacement applied to the ↓ branch.
    pub down_argument: Complex64,
    /// Displacement applied to the ↑ branch.
    pub up_argument: Complex64,
    /// Δα = down − up.
    pub differential: Complex64,
}

pub fn rewind_plan(mode: &ModeSpec, t_mu: f64, t_nu: f64, timebin: f64) -> Result<RewindPlan> {
    check_time("t_mu", t_mu)?;
    check_time("t_nu", t_nu)?;
    check_time("T", timebin)?;
    let (eta, etap, w) = (mode.eta_emit, mode.eta_exc, mode.frequency);
    let down = I * eta * Complex64::from_polar(1.0, w * t_mu) - I * etap;
    let up = I * eta * Complex64::from_polar(1.0, w * (t_nu + timebin)) - I * etap * Complex64::from_polar(1.0, w * timebin);
    Ok(RewindPlan { down_argument: down, up_argument: up, differential: down - up })
}

/// Recoil chains of the ↓ and ↑ branches followed by the rewind displacement
/// scaled by `efficiency`.
pub fn rewound_chains(mode: &ModeSpec, t_mu: f64, t_nu: f64, timebin: f64, efficiency: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let plan = plan_unchecked(mode, t_mu, t_nu, timebin);
    let mut down = recoil_chain(mode, t_mu, timebin, RecoilBranch::Early).to_vec();
    down.push(plan.down_argument * efficiency);
    let mut up = recoil_chain(mode, t_nu, timebin, RecoilBranch::Late).to_vec();
    up.push(plan.up_argument * efficiency);
    (down, up)
}

fn plan_unchecked(mode: &ModeSpec, t_mu: f64, t_nu: f64, timebin: f64) -> RewindPlan {
    rewind_plan(mode, t_mu.max(0.0), t_nu.max(0.0), timebin.max(0.0)).expect("non-negative times")
}

/// |thermal ⟨↑|↓⟩| after rewind with the known phase removed:
/// e^{−(2n̄+1)(1−e)²Z}.
pub fn rewound_overlap_magnitude(mode: &ModeSpec, t_mu: f64, t_nu: f64, timebin: f64, efficiency: f64) -> f64 {
    let (down, up) = rewound_chains(mode, t_mu, t_nu, timebin, efficiency);
    thermal_chain_overlap(&up, &down, mode.nbar).norm()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisentangleReport {
    /// max over draws of 1 − |⟨↑|↓⟩| for the product over all modes.
    pub max_deficit: f64,
    pub mean_deficit: f64,
    /// Largest deviation of the residual phase from its value at the first draw.
    pub phase_spread: f64,
    /// Largest |β_rewound − α| over both branches, modes and draws.
    pub max_amplitude_error: f64,
}

/// Applies the rewind computed for the detection times to random thermal
/// draws of every mode and reports how far the branches stay apart.
pub fn verify_disentangle(spec: &ProtocolSpec, t_mu: f64, t_nu: f64, trials: usize, seed: u64) -> Result<DisentangleReport> {
    verify_with_plan_times(spec, (t_mu, t_nu), (t_mu, t_nu), trials, seed)
}

/// As [`verify_disentangle`] but with the rewind planned for `plan_times`
/// while the photons were emitted at `event_times`.
pub fn verify_with_plan_times(
    spec: &ProtocolSpec,
    event_times: (f64, f64),
    plan_times: (f64, f64),
    trials: usize,
    seed: u64,
) -> Result<DisentangleReport> {
    if trials == 0 {
        return Err(Error::invalid("trials", "need at least one trial"));
    }
    spec.validate()?;
    for (name, t) in [("t_mu", event_times.0), ("t_nu", event_times.1), ("t_mu", plan_times.0), ("t_nu", plan_times.1)] {
        check_time(name, t)?;
    }
    let off = spec.windows.known_offset;
    let t = spec.timebin;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_deficit: f64 = 0.0;
    let mut sum_deficit = 0.0;
    let mut first_phase = None;
    let mut phase_spread: f64 = 0.0;
    let mut max_amplitude_error: f64 = 0.0;
    for _ in 0..trials {
        let mut total = Complex64::new(1.0, 0.0);
        for (modes, shift, conj) in [(&spec.emitter_a.modes, 0.0, false), (&spec.emitter_b.modes, off, true)] {
            let local = |x: f64| (x - shift).max(0.0);
            for mode in modes.iter() {
                let alpha = sample_thermal(mode.nbar, &mut rng);
                let start = DisplacedState::coherent(alpha);
                let (ev_mu, ev_nu) = (local(event_times.0), local(event_times.1));
                let plan = plan_unchecked(mode, local(plan_times.0), local(plan_times.1), t);
                let down = apply_chain(start, &recoil_chain(mode, ev_mu, t, RecoilBranch::Early)).displaced_by(plan.down_argument);
                let up = apply_chain(start, &recoil_chain(mode, ev_nu, t, RecoilBranch::Late)).displaced_by(plan.up_argument);
                for b in [&down, &up] {
                    max_amplitude_error = max_amplitude_error.max((b.amplitude - alpha.value()).norm());
                }
                let ov = inner(&up, &down);
                total *= if conj { ov.conj() } else { ov };
            }
        }
        let deficit = (1.0 - total.norm()).max(0.0);
        max_deficit = max_deficit.max(deficit);
        sum_deficit += deficit;
        let phase = total.arg();
        let p0 = *first_phase.get_or_insert(phase);
        let d = (phase - p0 + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI) - std::f64::consts::PI;
        phase_spread = phase_spread.max(d.abs());
    }
    Ok(DisentangleReport {
        max_deficit,
        mean_deficit: sum_deficit / trials as f64,
        phase_spread,
        max_amplitude_error,
    })
}

/// Channel fidelity with a perfect per-event rewind.
pub fn fidelity_with_rewind(spec: &ProtocolSpec, channel: HeraldChannel) -> Result<BellResult> {
    fidelity_with_rewind_efficiency(spec, channel, 1.0)
}

pub fn fidelity_with_rewind_efficiency(spec: &ProtocolSpec, channel: HeraldChannel, efficiency: f64) -> Result<BellResult> {
    if !efficiency.is_finite() {
        return Err(Error::invalid("rewind_efficiency", "must be finite"));
    }
    fidelity_with(spec, channel, MotionTreatment::Rewound { efficiency }, &QuadratureOptions::default())
}
