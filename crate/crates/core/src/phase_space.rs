//! Coherent-state algebra for the motional modes.
//!
//! A displaced coherent state is carried as its amplitude plus the phase
//! picked up along the chain of displacements, using
//! `D[ξ]|α⟩ = exp(i Im(ξ α*)) |α + ξ⟩`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::atoms::ModeSpec;
use crate::error::{check_time, Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CoherentAmplitude(Complex64);

impl CoherentAmplitude {
    pub const ZERO: Self = CoherentAmplitude(Complex64::new(0.0, 0.0));

    pub fn new(value: Complex64) -> Result<Self> {
        if value.re.is_finite() && value.im.is_finite() {
            Ok(CoherentAmplitude(value))
        } else {
            Err(Error::invalid("alpha", "coherent amplitude must be finite"))
        }
    }

    pub fn value(self) -> Complex64 {
        self.0
    }
}

impl From<CoherentAmplitude> for Complex64 {
    fn from(a: CoherentAmplitude) -> Self {
        a.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DisplacedState {
    pub amplitude: Complex64,
    /// Sum of the Im(ξ α*) phases accumulated over the displacement chain.
    pub accumulated_phase: f64,
}

impl DisplacedState {
    pub fn coherent(alpha: CoherentAmplitude) -> Self {
        DisplacedState { amplitude: alpha.0, accumulated_phase: 0.0 }
    }

    pub fn displaced_by(self, xi: Complex64) -> Self {
        displace(self, xi)
    }
}

/// Which photonic branch produced the recoil: the μ/↓ branch emitted in the
/// first bin or the ν/↑ branch delayed by the time-bin separation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RecoilBranch {
    Early,
    Late,
}

pub fn displace(state: DisplacedState, xi: Complex64) -> DisplacedState {
    DisplacedState {
        amplitude: state.amplitude + xi,
        accumulated_phase: state.accumulated_phase + (xi * state.amplitude.conj()).im,
    }
}

/// ⟨a|b⟩ for coherent states.
pub fn overlap(a: CoherentAmplitude, b: CoherentAmplitude) -> Complex64 {
    amplitude_overlap(a.0, b.0)
}

pub(crate) fn amplitude_overlap(a: Complex64, b: Complex64) -> Complex64 {
    (-0.5 * a.norm_sqr() - 0.5 * b.norm_sqr() + a.conj() * b).exp()
}

/// Inner product ⟨bra|ket⟩ including the phases tracked on both states.
pub fn inner(bra: &DisplacedState, ket: &DisplacedState) -> Complex64 {
    Complex64::from_polar(1.0, ket.accumulated_phase - bra.accumulated_phase)
        * amplitude_overlap(bra.amplitude, ket.amplitude)
}

/// Excitation kick followed by the emission kick, in application order.
pub fn recoil_chain(mode: &ModeSpec, t: f64, timebin: f64, branch: RecoilBranch) -> [Complex64; 2] {
    let w = mode.frequency;
    match branch {
        RecoilBranch::Early => [
            I * mode.eta_exc,
            -I * mode.eta_emit * Complex64::from_polar(1.0, w * t),
        ],
        RecoilBranch::Late => [
            I * mode.eta_exc * Complex64::from_polar(1.0, w * timebin),
            -I * mode.eta_emit * Complex64::from_polar(1.0, w * (t + timebin)),
        ],
    }
}

pub fn apply_chain(start: DisplacedState, chain: &[Complex64]) -> DisplacedState {
    chain.iter().fold(start, |s, &xi| displace(s, xi))
}

/// Motional state after excitation at the start of the branch's bin and
/// emission a time `t` later.
pub fn evolve_beta(
    mode: &ModeSpec,
    alpha: CoherentAmplitude,
    t: f64,
    timebin: f64,
    branch: RecoilBranch,
) -> Result<DisplacedState> {
    check_time("t", t)?;
    check_time("T", timebin)?;
    Ok(apply_chain(DisplacedState::coherent(alpha), &recoil_chain(mode, t, timebin, branch)))
}

/// Decoherence exponent Z = ½|β^T(t_ν) − β(t_μ)|² in closed trigonometric form.
pub fn z_exact(mode: &ModeSpec, t_mu: f64, t_nu: f64, timebin: f64) -> f64 {
    let (eta, etap, w) = (mode.eta_emit, mode.eta_exc, mode.frequency);
    let a = w * timebin;
    let x = w * t_nu;
    let y = w * t_mu;
    let half_a = 0.5 * a;
    let s_half = half_a.sin();
    // 1 − cos θ written as 2 sin²(θ/2) to keep small arguments accurate
    let exc = 2.0 * etap * etap * s_half * s_half;
    let s_diff = (0.5 * (a + x - y)).sin();
    let emit = 2.0 * eta * eta * s_diff * s_diff;
    let cross = -2.0 * etap * eta * s_half * ((x + half_a).sin() + (half_a - y).sin());
    (exc + emit + cross).max(0.0)
}

/// Phase ψ of the thermally averaged overlap; independent of the initial state.
pub fn psi_phase(mode: &ModeSpec, t_mu: f64, t_nu: f64, timebin: f64) -> f64 {
    let (eta, etap, w) = (mode.eta_emit, mode.eta_exc, mode.frequency);
    let a = w * timebin;
    let x = w * t_nu;
    let y = w * t_mu;
    etap * etap * a.sin() + eta * eta * (a + x - y).sin()
        - etap * eta * ((a + x).sin() + x.sin() + (a - y).sin() - y.sin())
}

/// Small-ωt expansion of Z in t_Σ = t_ν + t_μ and t_Δ = t_ν − t_μ, with odd
/// powers of t_Δ dropped.
pub fn z_approx(mode: &ModeSpec, t_sigma: f64, t_delta: f64, timebin: f64) -> f64 {
    let (eta, etap, w) = (mode.eta_emit, mode.eta_exc, mode.frequency);
    let c = (w * timebin).cos();
    let one_minus_c = 1.0 - c;
    let d = eta - etap;
    d * d * one_minus_c
        + 0.25 * etap * eta * one_minus_c * w * w * t_sigma * t_sigma
        + (0.25 * eta * etap * one_minus_c + 0.5 * eta * eta * c) * w * w * t_delta * t_delta
}

/// Z near a commensurate time-bin separation ωT = 2πN + ωT̃.
pub fn z_commensurate(mode: &ModeSpec, t_sigma: f64, t_delta: f64, t_tilde: f64) -> f64 {
    let (eta, etap, w) = (mode.eta_emit, mode.eta_exc, mode.frequency);
    let d = eta - etap;
    0.5 * (d * d + 0.25 * etap * eta * w * w * t_sigma * t_sigma) * w * w * t_tilde * t_tilde
        + 0.5 * eta * eta * w * w * t_delta * t_delta
}

/// Thermal average of ⟨β^T(t_ν)|β(t_μ)⟩: e^{−iψ} e^{−(2n̄+1)Z}.
pub fn thermal_overlap(mode: &ModeSpec, t_mu: f64, t_nu: f64, timebin: f64) -> Complex64 {
    let z = z_exact(mode, t_mu, t_nu, timebin);
    let psi = psi_phase(mode, t_mu, t_nu, timebin);
    Complex64::from_polar((-(2.0 * mode.nbar + 1.0) * z).exp(), -psi)
}

/// Thermal average of ⟨bra|ket⟩ where both states are reached from the same
/// thermal |α⟩ by the given displacement chains.
///
/// Any chain maps |α⟩ to e^{iφ₀ + i Im(c α*)}|α + c⟩, so the α dependence of
/// the overlap is e^{2i Im(α* d)} with d = c_ket − c_bra, and its Gaussian
/// average contributes e^{−n̄|d|²}.
pub fn thermal_chain_overlap(bra_chain: &[Complex64], ket_chain: &[Complex64], nbar: f64) -> Complex64 {
    let origin = DisplacedState::default();
    let bra = apply_chain(origin, bra_chain);
    let ket = apply_chain(origin, ket_chain);
    let d = ket.amplitude - bra.amplitude;
    inner(&bra, &ket) * (-nbar * d.norm_sqr()).exp()
}

/// Draws α from the thermal Glauber P distribution with mean occupation n̄:
/// independent Gaussian quadratures of variance n̄/2.
pub fn sample_thermal<R: Rng + ?Sized>(nbar: f64, rng: &mut R) -> CoherentAmplitude {
    let sigma = (0.5 * nbar).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    CoherentAmplitude(Complex64::new(sigma * re, sigma * im))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn mode(eta: f64, etap: f64, w: f64, nbar: f64) -> ModeSpec {
        ModeSpec { frequency: w, nbar, eta_emit: eta, eta_exc: etap, participation: 1.0 }
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn displace_identity_and_phase() {
        let s = displace(DisplacedState::default(), c(0.0, 0.0));
        assert_eq!(s, DisplacedState::default());
        let s = displace(DisplacedState { amplitude: c(1.0, 0.0), accumulated_phase: 0.0 }, c(0.0, 1.0));
        assert_eq!(s.amplitude, c(1.0, 1.0));
        assert_eq!(s.accumulated_phase, 1.0);
    }

    #[test]
    fn overlap_values() {
        let a = CoherentAmplitude::new(c(0.3, -1.2)).unwrap();
        assert!((overlap(a, a) - 1.0).norm() < 1e-15);
        let one = CoherentAmplitude::new(c(1.0, 0.0)).unwrap();
        let v = overlap(CoherentAmplitude::ZERO, one).norm();
        assert!((v - 0.60653).abs() < 1e-5);
        assert!(CoherentAmplitude::new(c(f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn evolve_beta_cases() {
        let w = 2.0 * PI * 1e6;
        let alpha = CoherentAmplitude::new(c(0.4, 0.1)).unwrap();
        let still = evolve_beta(&mode(0.0, 0.0, w, 0.0), alpha, 3e-9, 1e-6, RecoilBranch::Late).unwrap();
        assert_eq!(still.amplitude, alpha.value());
        assert_eq!(still.accumulated_phase, 0.0);

        let m = mode(0.1, 0.05, w, 0.0);
        let early = evolve_beta(&m, alpha, 5e-9, 0.0, RecoilBranch::Early).unwrap();
        let late = evolve_beta(&m, alpha, 5e-9, 0.0, RecoilBranch::Late).unwrap();
        assert_eq!(early.amplitude, late.amplitude);

        let b = evolve_beta(&m, CoherentAmplitude::ZERO, 0.0, 0.0, RecoilBranch::Early).unwrap();
        assert!((b.amplitude - c(0.0, -0.05)).norm() < 1e-16);

        assert!(evolve_beta(&m, alpha, -1.0, 0.0, RecoilBranch::Early).is_err());
        assert!(evolve_beta(&m, alpha, 1.0, -1.0, RecoilBranch::Late).is_err());
    }

    #[test]
    fn z_and_psi_special_values() {
        let w = 2.0 * PI * 1e6;
        let m = mode(0.1, 0.07, w, 0.0);
        assert_eq!(z_exact(&m, 4e-9, 4e-9, 0.0), 0.0);
        assert!(psi_phase(&m, 4e-9, 4e-9, 0.0).abs() < 1e-18);
        assert_eq!(psi_phase(&mode(0.0, 0.0, w, 0.0), 1e-9, 7e-9, 3e-7), 0.0);
        // η′ = 0, T = 0, ω t_Δ = π
        let m0 = mode(0.1, 0.0, w, 0.0);
        let z = z_exact(&m0, 0.0, PI / w, 0.0);
        assert!((z - 2.0 * 0.01).abs() < 1e-15);
    }

    #[test]
    fn z_approx_reduces_at_zero_timebin() {
        let w = 2.0 * PI * 1e6;
        let m = mode(0.1, 0.03, w, 0.0);
        let (ts, td) = (12e-9, 3e-9);
        let expected = 0.5 * 0.01 * w * w * td * td;
        assert!((z_approx(&m, ts, td, 0.0) - expected).abs() < 1e-18);
        // commensurate, equal Lamb-Dicke: the time-bin part vanishes
        let eq = mode(0.1, 0.1, w, 0.0);
        let t = 2.0 * PI * 3.0 / w;
        let first_line = z_approx(&eq, ts, 0.0, t) - 0.25 * 0.01 * (1.0 - (w * t).cos()) * w * w * ts * ts;
        assert!(first_line.abs() < 1e-18);
    }

    #[test]
    fn z_commensurate_cases() {
        let w = 2.0 * PI * 1e6;
        let m = mode(0.1, 0.03, w, 0.0);
        assert_eq!(z_commensurate(&m, 10e-9, 0.0, 0.0), 0.0);
        let td = 4e-9;
        assert!((z_commensurate(&m, 10e-9, td, 0.0) - 0.5 * 0.01 * w * w * td * td).abs() < 1e-18);
    }

    #[test]
    fn thermal_overlap_no_recoil_is_one() {
        let m = mode(0.0, 0.0, 1e6, 3.0);
        assert_eq!(thermal_overlap(&m, 1e-9, 5e-9, 1e-6), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn pure_state_overlap_matches_closed_form() {
        let w = 2.0 * PI * 0.7e6;
        let m = mode(0.12, 0.08, w, 0.0);
        let (tm, tn, t) = (3e-9, 11e-9, 0.4e-6);
        let early = evolve_beta(&m, CoherentAmplitude::ZERO, tm, t, RecoilBranch::Early).unwrap();
        let late = evolve_beta(&m, CoherentAmplitude::ZERO, tn, t, RecoilBranch::Late).unwrap();
        let pure = inner(&late, &early);
        let closed = thermal_overlap(&m, tm, tn, t);
        assert!((pure - closed).norm() < 1e-14, "{pure} vs {closed}");
        let chain = thermal_chain_overlap(
            &recoil_chain(&m, tn, t, RecoilBranch::Late),
            &recoil_chain(&m, tm, t, RecoilBranch::Early),
            0.0,
        );
        assert!((chain - closed).norm() < 1e-14);
    }

    #[test]
    fn chain_thermal_overlap_matches_closed_form() {
        let w = 2.0 * PI * 1.3e6;
        let m = mode(0.09, 0.04, w, 4.5);
        let (tm, tn, t) = (9e-9, 2e-9, 0.31e-6);
        let chain = thermal_chain_overlap(
            &recoil_chain(&m, tn, t, RecoilBranch::Late),
            &recoil_chain(&m, tm, t, RecoilBranch::Early),
            m.nbar,
        );
        let closed = thermal_overlap(&m, tm, tn, t);
        assert!((chain - closed).norm() < 1e-14);
    }

    #[test]
    fn thermal_sampling_moments() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 200_000;
        let mean_sq: f64 = (0..n).map(|_| sample_thermal(3.0, &mut rng).value().norm_sqr()).sum::<f64>() / n as f64;
        assert!((mean_sq - 3.0).abs() < 0.05, "{mean_sq}");
        assert_eq!(sample_thermal(0.0, &mut rng).value(), Complex64::new(0.0, 0.0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn cplx() -> impl Strategy<Value = Complex64> {
            (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(r, i)| Complex64::new(r, i))
        }

        proptest! {
            #[test]
            fn chained_displacements_add(a in cplx(), x1 in cplx(), x2 in cplx()) {
                let s = DisplacedState { amplitude: a, accumulated_phase: 0.0 };
                let two = displace(displace(s, x1), x2);
                let one = displace(s, x1 + x2);
                prop_assert!((two.amplitude - one.amplitude).norm() < 1e-12);
            }

            #[test]
            fn overlap_magnitude(a in cplx(), b in cplx()) {
                let v = overlap(CoherentAmplitude::new(a).unwrap(), CoherentAmplitude::new(b).unwrap()).norm();
                let expect = (-0.5 * (a - b).norm_sqr()).exp();
                prop_assert!((v - expect).abs() <= 1e-12 * expect.max(1e-300));
                prop_assert!(v <= 1.0 + 1e-15);
            }

            #[test]
            fn thermal_overlap_bounded_and_monotone(
                eta in 0.0f64..0.3, etap in 0.0f64..0.3,
                wt_mu in 0.0f64..3.0, wt_nu in 0.0f64..3.0, wt in 0.0f64..10.0,
                n1 in 0.0f64..20.0, dn in 0.0f64..20.0,
            ) {
                let w = 1.0e6;
                let lo = mode(eta, etap, w, n1);
                let hi = mode(eta, etap, w, n1 + dn);
                let (tm, tn, t) = (wt_mu / w, wt_nu / w, wt / w);
                let a = thermal_overlap(&lo, tm, tn, t).norm();
                let b = thermal_overlap(&hi, tm, tn, t).norm();
                prop_assert!(a <= 1.0 && a > 0.0);
                prop_assert!(b <= a);
            }

            #[test]
            fn psi_matches_tracked_phase(
                eta in 0.0f64..0.3, etap in 0.0f64..0.3,
                wt_mu in 0.0f64..3.0, wt_nu in 0.0f64..3.0, wt in 0.0f64..10.0,
            ) {
                let w = 2.0e6;
                let m = mode(eta, etap, w, 0.0);
                let (tm, tn, t) = (wt_mu / w, wt_nu / w, wt / w);
                let early = evolve_beta(&m, CoherentAmplitude::ZERO, tm, t, RecoilBranch::Early).unwrap();
                let late = evolve_beta(&m, CoherentAmplitude::ZERO, tn, t, RecoilBranch::Late).unwrap();
                let tracked = -inner(&late, &early).arg();
                prop_assert!((tracked - psi_phase(&m, tm, tn, t)).abs() < 1e-12);
            }
        }
    }
}
