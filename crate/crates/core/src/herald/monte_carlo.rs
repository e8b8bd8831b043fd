//! Monte-Carlo oracle for the heralded state.
//!
//! Detection times are drawn from a product exponential density starting at
//! the window origin, initial motional states from the thermal P
//! distribution, and each sample carries the exact branch amplitudes and the
//! pure-state motional overlaps. Batches use their own ChaCha stream and are
//! folded in batch order, so results depend only on the seed.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BellResult, HeraldChannel, MotionTreatment, ProtocolSpec};
use crate::atoms::ModeSpec;
use crate::error::{Error, Result};
use crate::phase_space::{apply_chain, inner, recoil_chain, sample_thermal, DisplacedState, RecoilBranch};
use crate::rewind::rewound_chains;

const BATCH: usize = 4096;
const K: usize = 4;

/// Running sums of (Re q, Im q, p₁, p₂) and their second moments.
#[derive(Clone, Copy, Debug, Default)]
struct Accumulator {
    n: u64,
    inside: u64,
    sum: [f64; K],
    cross: [[f64; K]; K],
}

impl Accumulator {
    fn push(&mut self, x: [f64; K]) {
        self.n += 1;
        for i in 0..K {
            self.sum[i] += x[i];
            for j in 0..K {
                self.cross[i][j] += x[i] * x[j];
            }
        }
    }

    fn merge(mut self, other: &Accumulator) -> Self {
        self.n += other.n;
        self.inside += other.inside;
        for i in 0..K {
            self.sum[i] += other.sum[i];
            for j in 0..K {
                self.cross[i][j] += other.cross[i][j];
            }
        }
        self
    }

    fn mean(&self) -> [f64; K] {
        self.sum.map(|s| s / self.n as f64)
    }

    /// Covariance of the sample means.
    fn mean_covariance(&self) -> [[f64; K]; K] {
        let n = self.n as f64;
        let m = self.mean();
        let mut c = [[0.0; K]; K];
        for i in 0..K {
            for j in 0..K {
                let cov = (self.cross[i][j] / n - m[i] * m[j]) * n / (n - 1.0).max(1.0);
                c[i][j] = cov / n;
            }
        }
        c
    }
}

fn quad_form(g: &[f64; K], c: &[[f64; K]; K]) -> f64 {
    let mut s = 0.0;
    for i in 0..K {
        for j in 0..K {
            s += g[i] * c[i][j] * g[j];
        }
    }
    s.max(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McChannel {
    pub channel: HeraldChannel,
    pub population_down_up: f64,
    pub population_up_down: f64,
    pub coherence: Complex64,
    /// Standard error of |C|.
    pub coherence_error: f64,
    pub fidelity: f64,
    pub fidelity_error: f64,
    pub herald_probability: f64,
    pub herald_probability_error: f64,
}

impl McChannel {
    pub fn bell_result(&self) -> BellResult {
        BellResult {
            population_down_up: self.population_down_up,
            population_up_down: self.population_up_down,
            coherence: self.coherence,
            fidelity: self.fidelity,
            herald_probability: self.herald_probability,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub samples: usize,
    pub seed: u64,
    /// Fraction of sampled time pairs inside the window region.
    pub acceptance: f64,
    pub yield_: f64,
    pub yield_error: f64,
    pub channels: Vec<McChannel>,
    /// Probability of in-window double emissions with equal qubit states,
    /// which herald nothing and are discarded.
    pub discard_probability: f64,
    pub discard_error: f64,
}

impl McResult {
    pub fn get(&self, channel: HeraldChannel) -> &McChannel {
        self.channels.iter().find(|c| c.channel == channel).expect("all channels present")
    }
}

pub fn mc_protocol(spec: &ProtocolSpec, samples: usize, seed: u64) -> Result<McResult> {
    mc_protocol_with(spec, samples, seed, MotionTreatment::Free)
}

pub fn mc_protocol_with(spec: &ProtocolSpec, samples: usize, seed: u64, motion: MotionTreatment) -> Result<McResult> {
    if samples == 0 {
        return Err(Error::invalid("samples", "need at least one sample"));
    }
    spec.validate()?;
    if let MotionTreatment::Rewound { efficiency } = motion {
        if !efficiency.is_finite() {
            return Err(Error::invalid("rewind_efficiency", "must be finite"));
        }
    }
    let batches = samples.div_ceil(BATCH);
    let parts: Vec<Accumulator> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let n = BATCH.min(samples - b * BATCH);
            run_batch(spec, motion, seed, b as u64, n)
        })
        .collect();
    let acc = parts.iter().fold(Accumulator::default(), |a, p| a.merge(p));
    Ok(summarize(spec, &acc, samples, seed))
}

fn run_batch(spec: &ProtocolSpec, motion: MotionTreatment, seed: u64, batch: u64, n: usize) -> Accumulator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    let region = spec.region();
    let rate = spec.decay_rate();
    let mut acc = Accumulator::default();
    for _ in 0..n {
        let e1: f64 = rng.sample(Exp1);
        let e2: f64 = rng.sample(Exp1);
        let t_mu = region.start + e1 / rate;
        let t_nu = region.start + e2 / rate;
        let inside = t_mu <= region.end && t_nu <= region.end && (t_nu - t_mu).abs() <= region.max_difference;
        // motion is sampled unconditionally so the stream does not depend
        // on the window geometry
        let m = sample_motion(spec, t_mu, t_nu, motion, &mut rng);
        if !inside {
            acc.push([0.0; K]);
            continue;
        }
        acc.inside += 1;
        let density = rate * rate * (-(e1 + e2)).exp();
        let (fa_mu, fb_mu) = (spec.envelope_a(t_mu), spec.envelope_b(t_mu));
        let (fa_nu, fb_nu) = (spec.envelope_a(t_nu), spec.envelope_b(t_nu));
        let q = m * (fa_mu * fb_mu * fa_nu * fb_nu / density);
        let p1 = (fa_mu * fb_nu).powi(2) / density;
        let p2 = (fa_nu * fb_mu).powi(2) / density;
        acc.push([q.re, q.im, p1, p2]);
    }
    acc
}

/// ⟨↑-branch|↓-branch⟩ of one mode for a single thermal draw.
fn mode_overlap<R: Rng + ?Sized>(
    mode: &ModeSpec,
    t_mu: f64,
    t_nu: f64,
    timebin: f64,
    motion: MotionTreatment,
    rng: &mut R,
) -> Complex64 {
    let alpha = sample_thermal(mode.nbar, rng);
    let start = DisplacedState::coherent(alpha);
    match motion {
        MotionTreatment::Free => {
            let down = apply_chain(start, &recoil_chain(mode, t_mu, timebin, RecoilBranch::Early));
            let up = apply_chain(start, &recoil_chain(mode, t_nu, timebin, RecoilBranch::Late));
            inner(&up, &down)
        }
        MotionTreatment::Rewound { efficiency } => {
            let (down_chain, up_chain) = rewound_chains(mode, t_mu, t_nu, timebin, efficiency);
            let down = apply_chain(start, &down_chain);
            let up = apply_chain(start, &up_chain);
            // the residual phase at α = 0 is known from the detection times
            // and removed by feed-forward
            let origin = DisplacedState::default();
            let known = inner(&apply_chain(origin, &up_chain), &apply_chain(origin, &down_chain));
            let unit = if known.norm() > 0.0 { known.conj() / known.norm() } else { Complex64::new(1.0, 0.0) };
            inner(&up, &down) * unit
        }
    }
}

fn sample_motion<R: Rng + ?Sized>(
    spec: &ProtocolSpec,
    t_mu: f64,
    t_nu: f64,
    motion: MotionTreatment,
    rng: &mut R,
) -> Complex64 {
    let t = spec.timebin;
    let off = spec.windows.known_offset;
    let mut m = Complex64::new(1.0, 0.0);
    for mode in &spec.emitter_a.modes {
        m *= mode_overlap(mode, t_mu, t_nu, t, motion, rng);
    }
    let (s_mu, s_nu) = ((t_mu - off).max(0.0), (t_nu - off).max(0.0));
    for mode in &spec.emitter_b.modes {
        m *= mode_overlap(mode, s_mu, s_nu, t, motion, rng).conj();
    }
    m
}

fn summarize(spec: &ProtocolSpec, acc: &Accumulator, samples: usize, seed: u64) -> McResult {
    let mean = acc.mean();
    let cov = acc.mean_covariance();
    let q = Complex64::new(mean[0], mean[1]);
    let (p1, p2) = (mean[2], mean[3]);
    let chi = spec.chi();

    let channels = HeraldChannel::ALL
        .into_iter()
        .map(|channel| {
            let (c1, c2) = channel.coefficients(&spec.beamsplitter);
            let (w1, w2) = (c1 * c1, c2 * c2);
            let d = w1 * p1 + w2 * p2;
            let (pop1, pop2, coherence, grad_c) = if d > 0.0 {
                let k = 2.0 * c1 * c2 / d;
                let c = q * k;
                let abs_c = c.norm();
                let qn = q.norm();
                let g = if qn > 0.0 {
                    [
                        2.0 * (c1 * c2).abs() * q.re / (qn * d),
                        2.0 * (c1 * c2).abs() * q.im / (qn * d),
                        -abs_c * w1 / d,
                        -abs_c * w2 / d,
                    ]
                } else {
                    [0.0; K]
                };
                (w1 * p1 / d, w2 * p2 / d, c, g)
            } else {
                (0.5, 0.5, Complex64::new(0.0, 0.0), [0.0; K])
            };
            let coherence_error = quad_form(&grad_c, &cov).sqrt();
            let grad_p = [0.0, 0.0, chi * w1, chi * w2];
            McChannel {
                channel,
                population_down_up: pop1,
                population_up_down: pop2,
                coherence,
                coherence_error,
                fidelity: 0.5 * (1.0 + coherence.norm()),
                fidelity_error: 0.5 * coherence_error,
                herald_probability: chi * d,
                herald_probability_error: quad_form(&grad_p, &cov).sqrt(),
            }
        })
        .collect();

    let grad_y = [0.0, 0.0, 0.5, 0.5];
    let grad_discard = [0.0, 0.0, chi, chi];
    McResult {
        samples,
        seed,
        acceptance: acc.inside as f64 / acc.n as f64,
        yield_: 0.5 * (p1 + p2),
        yield_error: quad_form(&grad_y, &cov).sqrt(),
        channels,
        discard_probability: chi * (p1 + p2),
        discard_error: quad_form(&grad_discard, &cov).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::{lookup_species, EmitterSpec, Occupation};
    use crate::temporal::DetectionWindows;
    use std::f64::consts::PI;

    fn spec(w: f64) -> ProtocolSpec {
        let yb = lookup_species("171Yb+@369").unwrap();
        let tau = yb.excited_lifetime;
        let e = EmitterSpec::single_mode(yb, 2.0 * PI * 1e6, Occupation::Doppler).unwrap();
        let windows = if w.is_infinite() {
            DetectionWindows::new(f64::INFINITY, f64::INFINITY, 0.0).unwrap()
        } else {
            DetectionWindows::relative(w, tau).unwrap()
        };
        ProtocolSpec::symmetric(e, windows, 0.0).unwrap()
    }

    #[test]
    fn rejects_zero_samples() {
        assert!(mc_protocol(&spec(2.0), 0, 1).is_err());
    }

    #[test]
    fn deterministic_for_seed() {
        let s = spec(2.0);
        let a = mc_protocol(&s, 10_000, 7).unwrap();
        let b = mc_protocol(&s, 10_000, 7).unwrap();
        assert_eq!(a, b);
        let c = mc_protocol(&s, 10_000, 8).unwrap();
        assert_ne!(a.get(HeraldChannel::Same1100).coherence, c.get(HeraldChannel::Same1100).coherence);
    }

    #[test]
    fn accumulator_merge_is_additive() {
        let mut a = Accumulator::default();
        let mut b = Accumulator::default();
        let mut all = Accumulator::default();
        for i in 0..10 {
            let x = [i as f64, 1.0, 0.5 * i as f64, 2.0];
            if i < 4 { a.push(x) } else { b.push(x) }
            all.push(x);
        }
        let merged = a.merge(&b);
        assert_eq!(merged.n, all.n);
        assert_eq!(merged.sum, all.sum);
    }

    #[test]
    fn unbounded_window_closure() {
        let mut s = spec(f64::INFINITY);
        for e in [&mut s.emitter_a, &mut s.emitter_b] {
            e.modes[0].eta_emit = 0.0;
            e.modes[0].eta_exc = 0.0;
        }
        let r = mc_protocol(&s, 50_000, 3).unwrap();
        let total: f64 = r.channels.iter().map(|c| c.herald_probability).sum::<f64>() + r.discard_probability;
        assert!((total - 1.0).abs() < 1e-12);
        assert!((r.discard_probability / total - 0.5).abs() < 1e-12);
        for c in &r.channels {
            assert!((c.fidelity - 1.0).abs() < 1e-12);
        }
    }
}
