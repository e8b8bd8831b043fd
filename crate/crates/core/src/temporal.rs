//! Photon wavepacket, detection windows and the derived yield and W factor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Detector gating. Both detectors count over `[δt₀, δt₀ + T_D]` and the
/// two detection times must satisfy `|t_ν − t_μ| ≤ T_Δ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionWindows {
    /// T_D in seconds; may be infinite.
    pub detector_window: f64,
    /// T_Δ in seconds; may be infinite when T_D is.
    pub difference_window: f64,
    /// δt₀ in seconds: known excitation/path delay of emitter B, vetoed by
    /// starting both windows at δt₀.
    pub known_offset: f64,
}

impl DetectionWindows {
    pub fn new(detector_window: f64, difference_window: f64, known_offset: f64) -> Result<Self> {
        let w = DetectionWindows { detector_window, difference_window, known_offset };
        w.validate()?;
        Ok(w)
    }

    /// Unbounded detector window with a difference window of `w` lifetimes.
    pub fn relative(w: f64, lifetime: f64) -> Result<Self> {
        Self::new(f64::INFINITY, w * lifetime, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.difference_window > 0.0 && self.difference_window <= self.detector_window) {
            return Err(Error::invalid(
                "difference_window",
                format!(
                    "need 0 < T_delta <= T_D, got T_delta = {} and T_D = {}",
                    self.difference_window, self.detector_window
                ),
            ));
        }
        if !(self.known_offset >= 0.0 && self.known_offset.is_finite()) {
            return Err(Error::invalid("known_offset", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Field envelope e^{−t/2τ}/√τ for t ≥ 0, zero before emission.
pub fn wavepacket(t: f64, lifetime: f64) -> f64 {
    if t < 0.0 {
        0.0
    } else {
        (-t / (2.0 * lifetime)).exp() / lifetime.sqrt()
    }
}

/// Probability that both photons land inside the windows, including the
/// e^{−δt₀/τ} loss from vetoing the known offset.
pub fn detection_yield(windows: &DetectionWindows, lifetime: f64) -> f64 {
    let td = windows.detector_window / lifetime;
    let tdelta = windows.difference_window / lifetime;
    let base = if tdelta >= td {
        (-(-td).exp_m1()).powi(2)
    } else {
        1.0 - (-tdelta).exp() - (-(2.0 * td - tdelta)).exp() + (-2.0 * td).exp()
    };
    base * (-windows.known_offset / lifetime).exp()
}

/// W(w) = [1 − (1 + w + w²/2)e^{−w}]/(1 − e^{−w}); the variance of t_Δ over
/// `|t_Δ| ≤ wτ` in units of 2τ². W(0) = 0.
pub fn window_variance_factor(w: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    if w.is_infinite() {
        return 1.0;
    }
    if w < 0.1 {
        // numerator = Σ_{k≥3} w^k/k!, denominator = e^w − 1
        let mut term = w * w * w / 6.0;
        let mut num = 0.0;
        for k in 3..14 {
            num += term;
            term *= w / f64::from(k + 1);
        }
        return num / w.exp_m1();
    }
    let e = (-w).exp();
    (1.0 - (1.0 + w + 0.5 * w * w) * e) / (1.0 - e)
}
