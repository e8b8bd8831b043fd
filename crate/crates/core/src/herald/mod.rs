//! Two-photon interference on the beamsplitter and the four herald channels.
//!
//! The heralded two-qubit state after a coincidence in channel γ is
//! `c₁ f_A(t_μ) f_B(t_ν) |↓↑⟩|m₁⟩ + c₂ f_A(t_ν) f_B(t_μ) |↑↓⟩|m₂⟩` where the
//! c's are beamsplitter coefficients and `m₁`, `m₂` the recoiled motional
//! states. Tracing the motion and integrating over the detection region
//! gives the populations and the coherence `C`, from which `F = (1+|C|)/2`.
//!
//! [`coherence_quadrature`] and [`fidelity`] integrate the thermally averaged
//! motional overlap in closed form; [`monte_carlo::mc_protocol`] samples
//! emission times and initial motional states and is kept independent of the
//! closed forms as an oracle.

pub mod monte_carlo;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::atoms::{EmitterSpec, ModeSpec};
use crate::error::{check_time, Error, Result};
use crate::phase_space::{psi_phase, thermal_overlap};
use crate::quadrature::{integrate_refined, Estimate, QuadratureOptions, Region};
use crate::rewind::rewound_overlap_magnitude;
use crate::temporal::{detection_yield, wavepacket, DetectionWindows};

pub use monte_carlo::{mc_protocol, mc_protocol_with, McChannel, McResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamsplitterSpec {
    /// Field transmission coefficient 𝔱.
    pub transmission: f64,
    /// Field reflection coefficient 𝔯.
    pub reflection: f64,
}

impl BeamsplitterSpec {
    pub fn new(transmission: f64, reflection: f64) -> Result<Self> {
        let bs = BeamsplitterSpec { transmission, reflection };
        bs.validate()?;
        Ok(bs)
    }

    pub fn balanced() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        BeamsplitterSpec { transmission: h, reflection: h }
    }

    /// Beamsplitter with power imbalance δ = 𝔱² − 𝔯².
    pub fn from_imbalance(delta: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&delta) {
            return Err(Error::invalid("beamsplitter_imbalance", "must lie in [-1, 1]"));
        }
        Self::new((0.5 * (1.0 + delta)).sqrt(), (0.5 * (1.0 - delta)).sqrt())
    }

    pub fn imbalance(&self) -> f64 {
        self.transmission.powi(2) - self.reflection.powi(2)
    }

    pub fn validate(&self) -> Result<()> {
        let (t, r) = (self.transmission, self.reflection);
        if !((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&r)) {
            return Err(Error::invalid("beamsplitter", "coefficients must lie in [0, 1]"));
        }
        if (t * t + r * r - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("beamsplitter", format!("t^2 + r^2 = {} != 1", t * t + r * r)));
        }
        Ok(())
    }
}

/// Which detector pair fired: opposite BS outputs herald Ψ⁻-type states,
/// the same output heralds Ψ⁺-type states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HeraldChannel {
    #[serde(rename = "opposite_1001")]
    Opposite1001,
    #[serde(rename = "opposite_0110")]
    Opposite0110,
    #[serde(rename = "same_1100")]
    Same1100,
    #[serde(rename = "same_0011")]
    Same0011,
}

impl HeraldChannel {
    pub const ALL: [HeraldChannel; 4] = [
        HeraldChannel::Opposite1001,
        HeraldChannel::Opposite0110,
        HeraldChannel::Same1100,
        HeraldChannel::Same0011,
    ];

    pub fn label(self) -> &'static str {
        match self {
            HeraldChannel::Opposite1001 => "1001",
            HeraldChannel::Opposite0110 => "0110",
            HeraldChannel::Same1100 => "1100",
            HeraldChannel::Same0011 => "0011",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        HeraldChannel::ALL
            .into_iter()
            .find(|c| c.label() == s || c.name() == s)
            .ok_or_else(|| Error::invalid("channel", format!("unknown herald channel `{s}`")))
    }

    pub fn name(self) -> &'static str {
        match self {
            HeraldChannel::Opposite1001 => "opposite_1001",
            HeraldChannel::Opposite0110 => "opposite_0110",
            HeraldChannel::Same1100 => "same_1100",
            HeraldChannel::Same0011 => "same_0011",
        }
    }

    pub fn is_opposite(self) -> bool {
        matches!(self, HeraldChannel::Opposite1001 | HeraldChannel::Opposite0110)
    }

    /// Amplitudes (c₁, c₂) of the |↓↑⟩ and |↑↓⟩ branches.
    pub fn coefficients(self, bs: &BeamsplitterSpec) -> (f64, f64) {
        let (t, r) = (bs.transmission, bs.reflection);
        match self {
            HeraldChannel::Opposite1001 => (-t * t, r * r),
            HeraldChannel::Opposite0110 => (r * r, -t * t),
            HeraldChannel::Same1100 => (r * t, r * t),
            HeraldChannel::Same0011 => (-r * t, -r * t),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolSpec {
    pub emitter_a: EmitterSpec,
    pub emitter_b: EmitterSpec,
    pub beamsplitter: BeamsplitterSpec,
    pub windows: DetectionWindows,
    /// Time-bin separation T in seconds, zero for other encodings.
    pub timebin: f64,
    pub detector_efficiency: f64,
}

impl ProtocolSpec {
    /// Two identical emitters, balanced beamsplitter, unit efficiencies.
    pub fn symmetric(emitter: EmitterSpec, windows: DetectionWindows, timebin: f64) -> Result<Self> {
        let spec = ProtocolSpec {
            emitter_a: emitter.clone(),
            emitter_b: emitter,
            beamsplitter: BeamsplitterSpec::balanced(),
            windows,
            timebin,
            detector_efficiency: 1.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.emitter_a.validate()?;
        self.emitter_b.validate()?;
        self.beamsplitter.validate()?;
        self.windows.validate()?;
        check_time("timebin", self.timebin)?;
        if !self.timebin.is_finite() {
            return Err(Error::invalid("timebin", "must be finite"));
        }
        if !(0.0..=1.0).contains(&self.detector_efficiency) {
            return Err(Error::invalid("detector_efficiency", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// χ = P_A P_B p_A p_B ε_D² / 4.
    pub fn chi(&self) -> f64 {
        let (a, b) = (&self.emitter_a, &self.emitter_b);
        a.excite_prob * b.excite_prob * a.collect_prob * b.collect_prob * self.detector_efficiency.powi(2) / 4.0
    }

    pub(crate) fn region(&self) -> Region {
        let start = self.windows.known_offset;
        Region {
            start,
            end: start + self.windows.detector_window,
            max_difference: self.windows.difference_window,
        }
    }

    /// Slowest per-variable decay rate of the integrands, 1/s.
    pub(crate) fn decay_rate(&self) -> f64 {
        (1.0 / self.emitter_a.lifetime()).min(1.0 / self.emitter_b.lifetime())
    }

    pub(crate) fn max_frequency(&self) -> f64 {
        self.emitter_a
            .modes
            .iter()
            .chain(&self.emitter_b.modes)
            .map(|m| m.frequency)
            .fold(0.0, f64::max)
    }

    pub(crate) fn envelope_a(&self, t: f64) -> f64 {
        wavepacket(t, self.emitter_a.lifetime())
    }

    /// Emitter B is excited `known_offset` after A.
    pub(crate) fn envelope_b(&self, t: f64) -> f64 {
        wavepacket(t - self.windows.known_offset, self.emitter_b.lifetime())
    }

    /// Ratio w = T_Δ/τ for each emitter.
    pub fn relative_window(&self) -> (f64, f64) {
        let d = self.windows.difference_window;
        (d / self.emitter_a.lifetime(), d / self.emitter_b.lifetime())
    }
}

/// How the motional overlap enters the coherence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionTreatment {
    /// Plain recoil, traced over the thermal motion.
    Free,
    /// Per-event rewind displacements scaled by `efficiency`, with the known
    /// residual phase removed.
    Rewound { efficiency: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellResult {
    pub population_down_up: f64,
    pub population_up_down: f64,
    pub coherence: Complex64,
    pub fidelity: f64,
    pub herald_probability: f64,
}

impl BellResult {
    fn assemble(channel: HeraldChannel, spec: &ProtocolSpec, yield_: f64, integral: Complex64) -> Self {
        let (c1, c2) = channel.coefficients(&spec.beamsplitter);
        let weight = c1 * c1 + c2 * c2;
        let (pop_du, pop_ud, coherence) = if weight > 0.0 && yield_ > 0.0 {
            (c1 * c1 / weight, c2 * c2 / weight, integral * (2.0 * c1 * c2 / (weight * yield_)))
        } else {
            (0.5, 0.5, Complex64::new(0.0, 0.0))
        };
        BellResult {
            population_down_up: pop_du,
            population_up_down: pop_ud,
            coherence,
            fidelity: 0.5 * (1.0 + coherence.norm()),
            herald_probability: spec.chi() * weight * yield_,
        }
    }
}

/// All four channels from one evaluation of the interference integral.
#[derive(Clone, Debug, PartialEq)]
pub struct HeraldEvaluation {
    pub yield_: f64,
    pub integral: Estimate,
    pub channels: [(HeraldChannel, BellResult); 4],
}

impl HeraldEvaluation {
    pub fn get(&self, channel: HeraldChannel) -> &BellResult {
        &self.channels.iter().find(|(c, _)| *c == channel).expect("all channels present").1
    }

    pub fn converged(&self) -> bool {
        self.integral.converged
    }
}

/// Y = ∬_W f_A(t_μ)² f_B(t_ν)²; closed form for equal lifetimes.
pub fn protocol_yield(spec: &ProtocolSpec) -> Result<f64> {
    let (ta, tb) = (spec.emitter_a.lifetime(), spec.emitter_b.lifetime());
    if ta == tb {
        return Ok(detection_yield(&spec.windows, ta));
    }
    let est = integrate_refined(
        &spec.region(),
        spec.decay_rate(),
        0.0,
        1.0,
        &QuadratureOptions::default(),
        |x, y| Complex64::new((spec.envelope_a(x) * spec.envelope_b(y)).powi(2), 0.0),
    );
    Ok(est.into_result()?.re)
}

/// 𝒫_γ = χ (c₁² + c₂²) Y.
pub fn herald_probability(spec: &ProtocolSpec, channel: HeraldChannel) -> Result<f64> {
    spec.validate()?;
    let (c1, c2) = channel.coefficients(&spec.beamsplitter);
    Ok(spec.chi() * (c1 * c1 + c2 * c2) * protocol_yield(spec)?)
}

fn mode_factor(mode: &ModeSpec, t_mu: f64, t_nu: f64, timebin: f64, motion: MotionTreatment) -> Complex64 {
    match motion {
        MotionTreatment::Free => thermal_overlap(mode, t_mu, t_nu, timebin),
        MotionTreatment::Rewound { efficiency } => {
            Complex64::new(rewound_overlap_magnitude(mode, t_mu, t_nu, timebin, efficiency), 0.0)
        }
    }
}

/// 𝓜(t_μ, t_ν) = Π_i 𝓜_Ai · 𝓜_Bi*, with B's times shifted by its delay.
pub fn motional_factor(spec: &ProtocolSpec, t_mu: f64, t_nu: f64, motion: MotionTreatment) -> Complex64 {
    let off = spec.windows.known_offset;
    let t = spec.timebin;
    let a: Complex64 = spec.emitter_a.modes.iter().map(|m| mode_factor(m, t_mu, t_nu, t, motion)).product();
    let b: Complex64 = spec
        .emitter_b
        .modes
        .iter()
        .map(|m| mode_factor(m, (t_mu - off).max(0.0), (t_nu - off).max(0.0), t, motion))
        .product();
    a * b.conj()
}

/// ∬_W f_A f_B(t_μ) f_A f_B(t_ν) 𝓜(t_μ, t_ν).
pub fn interference_integral(spec: &ProtocolSpec, motion: MotionTreatment, options: &QuadratureOptions) -> Result<Estimate> {
    spec.validate()?;
    let reference = protocol_yield(spec)?;
    Ok(integrate_refined(
        &spec.region(),
        spec.decay_rate(),
        spec.max_frequency(),
        reference,
        options,
        |x, y| {
            let w = spec.envelope_a(x) * spec.envelope_b(x) * spec.envelope_a(y) * spec.envelope_b(y);
            motional_factor(spec, x, y, motion) * w
        },
    ))
}

/// Evaluates all four channels; non-convergence is reported on the result
/// rather than as an error.
pub fn evaluate(spec: &ProtocolSpec, motion: MotionTreatment, options: &QuadratureOptions) -> Result<HeraldEvaluation> {
    let yield_ = protocol_yield(spec)?;
    let integral = interference_integral(spec, motion, options)?;
    let channels = HeraldChannel::ALL.map(|c| (c, BellResult::assemble(c, spec, yield_, integral.value)));
    Ok(HeraldEvaluation { yield_, integral, channels })
}

/// Coherence C_γ by quadrature.
pub fn coherence_quadrature(spec: &ProtocolSpec, channel: HeraldChannel) -> Result<Complex64> {
    let eval = evaluate(spec, MotionTreatment::Free, &QuadratureOptions::default())?;
    eval.integral.into_result()?;
    Ok(eval.get(channel).coherence)
}

pub fn fidelity(spec: &ProtocolSpec, channel: HeraldChannel) -> Result<BellResult> {
    fidelity_with(spec, channel, MotionTreatment::Free, &QuadratureOptions::default())
}

pub fn fidelity_with(
    spec: &ProtocolSpec,
    channel: HeraldChannel,
    motion: MotionTreatment,
    options: &QuadratureOptions,
) -> Result<BellResult> {
    let eval = evaluate(spec, motion, options)?;
    eval.integral.into_result()?;
    Ok(*eval.get(channel))
}

/// 1 − |⟨e^{−iψ_total}⟩| over the detection-time distribution, the contrast
/// lost to the fluctuating motional phase alone.
pub fn phase_contrast_loss(spec: &ProtocolSpec) -> Result<f64> {
    spec.validate()?;
    let off = spec.windows.known_offset;
    let t = spec.timebin;
    let weight = |x: f64, y: f64| spec.envelope_a(x) * spec.envelope_b(x) * spec.envelope_a(y) * spec.envelope_b(y);
    let options = QuadratureOptions::default();
    let norm = integrate_refined(&spec.region(), spec.decay_rate(), 0.0, 1.0, &options, |x, y| {
        Complex64::new(weight(x, y), 0.0)
    })
    .into_result()?
    .re;
    let phased = integrate_refined(&spec.region(), spec.decay_rate(), spec.max_frequency(), norm, &options, |x, y| {
        let psi_a: f64 = spec.emitter_a.modes.iter().map(|m| psi_phase(m, x, y, t)).sum();
        let psi_b: f64 = spec
            .emitter_b
            .modes
            .iter()
            .map(|m| psi_phase(m, (x - off).max(0.0), (y - off).max(0.0), t))
            .sum();
        Complex64::from_polar(weight(x, y), -(psi_a - psi_b))
    })
    .into_result()?;
    Ok((1.0 - phased.norm() / norm).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::{lookup_species, Occupation};
    use std::f64::consts::PI;

    fn yb_spec(freq: f64, occupation: Occupation, w: f64, timebin: f64) -> ProtocolSpec {
        let yb = lookup_species("171Yb+@369").unwrap();
        let tau = yb.excited_lifetime;
        let e = EmitterSpec::single_mode(yb, freq, occupation).unwrap();
        ProtocolSpec::symmetric(e, DetectionWindows::relative(w, tau).unwrap(), timebin).unwrap()
    }

    fn no_recoil(w: f64) -> ProtocolSpec {
        let mut s = yb_spec(2.0 * PI * 1e6, Occupation::Fixed(0.0), w, 0.0);
        for e in [&mut s.emitter_a, &mut s.emitter_b] {
            for m in &mut e.modes {
                m.eta_emit = 0.0;
                m.eta_exc = 0.0;
            }
        }
        s
    }

    #[test]
    fn balanced_probabilities() {
        let mut s = no_recoil(2.0);
        s.windows = DetectionWindows::new(f64::INFINITY, f64::INFINITY, 0.0).unwrap();
        for c in HeraldChannel::ALL {
            assert!((herald_probability(&s, c).unwrap() - 0.125).abs() < 1e-15);
        }
        s.detector_efficiency = 0.0;
        assert_eq!(herald_probability(&s, HeraldChannel::Same1100).unwrap(), 0.0);
    }

    #[test]
    fn imbalance_scales_probabilities() {
        let base = no_recoil(2.0);
        let mut s = base.clone();
        let d: f64 = 0.1;
        s.beamsplitter = BeamsplitterSpec::from_imbalance(d).unwrap();
        let opp = herald_probability(&s, HeraldChannel::Opposite1001).unwrap()
            / herald_probability(&base, HeraldChannel::Opposite1001).unwrap();
        let same = herald_probability(&s, HeraldChannel::Same0011).unwrap()
            / herald_probability(&base, HeraldChannel::Same0011).unwrap();
        assert!((opp - (1.0 + d * d)).abs() < 1e-12);
        assert!((same - (1.0 - d * d)).abs() < 1e-12);
    }

    #[test]
    fn no_recoil_coherence_signs() {
        let s = no_recoil(2.0);
        let opp = coherence_quadrature(&s, HeraldChannel::Opposite1001).unwrap();
        let same = coherence_quadrature(&s, HeraldChannel::Same1100).unwrap();
        assert!((opp + 1.0).norm() < 1e-12, "{opp}");
        assert!((same - 1.0).norm() < 1e-12, "{same}");
        let r = fidelity(&s, HeraldChannel::Same0011).unwrap();
        assert!((r.fidelity - 1.0).abs() < 1e-12);
        assert!((r.herald_probability - s.chi() * 0.5 * protocol_yield(&s).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn imbalance_degrades_opposite_coherence() {
        let mut s = no_recoil(2.0);
        s.beamsplitter = BeamsplitterSpec::from_imbalance(0.1).unwrap();
        let c = coherence_quadrature(&s, HeraldChannel::Opposite0110).unwrap();
        assert!((c.norm() - 0.99 / 1.01).abs() < 1e-9);
        assert!((c.norm() - 0.9802).abs() < 1e-4);
        let r = fidelity(&s, HeraldChannel::Opposite1001).unwrap();
        assert!((r.population_down_up + r.population_up_down - 1.0).abs() < 1e-15);
        assert!(r.population_down_up > r.population_up_down);
    }

    #[test]
    fn zero_coherence_gives_half() {
        let spec = no_recoil(2.0);
        let r = BellResult::assemble(HeraldChannel::Same1100, &spec, 1.0, Complex64::new(0.0, 0.0));
        assert_eq!(r.fidelity, 0.5);
    }

    #[test]
    fn channels_agree_when_balanced() {
        let s = yb_spec(2.0 * PI * 1e6, Occupation::Doppler, 2.0, 0.0);
        let eval = evaluate(&s, MotionTreatment::Free, &QuadratureOptions::default()).unwrap();
        let f: Vec<f64> = eval.channels.iter().map(|(_, r)| r.fidelity).collect();
        for v in &f {
            assert!((v - f[0]).abs() < 1e-14);
            assert!(*v < 1.0 && *v > 0.5);
        }
    }

    #[test]
    fn node_doubling_is_stable() {
        let s = yb_spec(2.0 * PI * 1e6, Occupation::Doppler, 2.0, 3.0 * 8.1e-9);
        let coarse = QuadratureOptions { nodes_per_panel: 32, max_refinements: 0, tolerance: 0.0 };
        let fine = QuadratureOptions { nodes_per_panel: 64, max_refinements: 0, tolerance: 0.0 };
        let a = evaluate(&s, MotionTreatment::Free, &coarse).unwrap();
        let b = evaluate(&s, MotionTreatment::Free, &fine).unwrap();
        let fa = a.get(HeraldChannel::Opposite1001).fidelity;
        let fb = b.get(HeraldChannel::Opposite1001).fidelity;
        assert!((fa - fb).abs() < 1e-8, "{fa} {fb}");
    }

    #[test]
    fn phase_contrast_cases() {
        let s = no_recoil(2.0);
        assert!(phase_contrast_loss(&s).unwrap() < 1e-14);
        // identical emitters: the two ψ's cancel in 𝓜_A 𝓜_B*
        let sym = yb_spec(2.0 * PI * 1e6, Occupation::Doppler, 2.0, 0.0);
        assert!(phase_contrast_loss(&sym).unwrap() < 1e-14);
    }

    #[test]
    fn unequal_lifetimes_use_quadrature_yield() {
        let mut s = no_recoil(2.0);
        s.emitter_b.species.excited_lifetime = 8.1e-9;
        let y_eq = protocol_yield(&s).unwrap();
        s.emitter_b.species.excited_lifetime = 8.1e-9 * (1.0 + 1e-9);
        let y_q = protocol_yield(&s).unwrap();
        assert!((y_eq - y_q).abs() < 1e-8);
    }

    #[test]
    fn validation() {
        assert!(BeamsplitterSpec::new(0.8, 0.8).is_err());
        assert!(BeamsplitterSpec::from_imbalance(1.5).is_err());
        let mut s = no_recoil(2.0);
        s.detector_efficiency = 1.2;
        assert!(s.validate().is_err());
        assert_eq!(HeraldChannel::parse("0110").unwrap(), HeraldChannel::Opposite0110);
        assert!(HeraldChannel::parse("0101").is_err());
    }
}
