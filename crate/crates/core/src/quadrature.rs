//! Gauss–Legendre integration over the two-photon detection region.
//!
//! Each coordinate is split into panels and every panel is integrated after
//! the substitution `u = (1 − e^{−(t−t₀)/s}) / (1 − e^{−L/s})`, which absorbs
//! the exponential decay of the photon wavepackets. Panels are short enough
//! that the motional factors never oscillate more than about a radian
//! across one panel.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Integrand mass beyond `CUTOFF` decay lengths is below e^{−46}.
const CUTOFF: f64 = 46.0;

/// Gauss–Legendre nodes and weights on [0, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // map [-1, 1] -> [0, 1]
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    (p1, n * (x * p1 - p0) / (x * x - 1.0))
}

/// Detection region `start ≤ t_μ, t_ν ≤ end`, `|t_ν − t_μ| ≤ max_difference`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Region {
    pub start: f64,
    pub end: f64,
    pub max_difference: f64,
}

/// Panelled tensor-product rule for integrands decaying like e^{−λ(t_μ+t_ν)}.
#[derive(Clone, Debug)]
pub struct Integrator {
    rule: GaussLegendre,
    /// λ in 1/s.
    decay_rate: f64,
    /// Fastest angular frequency present in the integrand, rad/s.
    max_frequency: f64,
}

impl Integrator {
    pub fn new(nodes_per_panel: usize, decay_rate: f64, max_frequency: f64) -> Self {
        Integrator { rule: GaussLegendre::new(nodes_per_panel), decay_rate, max_frequency }
    }

    fn panel_length(&self, scale: f64) -> f64 {
        let by_decay = 4.0 * scale;
        if self.max_frequency > 0.0 {
            by_decay.min(1.0 / self.max_frequency)
        } else {
            by_decay
        }
    }

    /// ∫ f over [lo, hi] for an integrand decaying with length `scale`.
    fn integrate_1d<F: FnMut(f64) -> Complex64>(&self, lo: f64, hi: f64, scale: f64, mut f: F) -> Complex64 {
        let hi = if hi.is_finite() { hi } else { lo + CUTOFF * scale };
        let span = hi - lo;
        if !(span > 0.0) {
            return Complex64::new(0.0, 0.0);
        }
        let panels = (span / self.panel_length(scale)).ceil().max(1.0) as usize;
        let len = span / panels as f64;
        let c = -(-len / scale).exp_m1();
        let mut total = Complex64::new(0.0, 0.0);
        for p in 0..panels {
            let p0 = lo + p as f64 * len;
            let mut acc = Complex64::new(0.0, 0.0);
            for (&u, &w) in self.rule.nodes.iter().zip(&self.rule.weights) {
                let g = 1.0 - u * c;
                let t = p0 - scale * g.ln();
                acc += f(t) * (w * scale * c / g);
            }
            total += acc;
        }
        total
    }

    pub fn integrate<F: Fn(f64, f64) -> Complex64>(&self, region: &Region, f: F) -> Complex64 {
        let (a, b, d) = (region.start, region.end, region.max_difference);
        // the outer integrand mixes e^{−λx} and e^{−2λx}; mapping on the
        // slower scale leaves both smooth
        let scale = 1.0 / self.decay_rate;
        let unconstrained = d.is_infinite() || (b.is_finite() && d >= b - a);

        let mut breaks = vec![a];
        if !unconstrained {
            for x in [a + d, b - d] {
                if x > a && x < b {
                    breaks.push(x);
                }
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        breaks.push(b);

        let inner = |x: f64| {
            let (lo, hi) = if unconstrained { (a, b) } else { ((x - d).max(a), (x + d).min(b)) };
            self.integrate_1d(lo, hi, scale, |y| f(x, y))
        };
        breaks
            .windows(2)
            .map(|w| self.integrate_1d(w[0], w[1], scale, &inner))
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureOptions {
    pub nodes_per_panel: usize,
    /// Node doublings attempted before giving up.
    pub max_refinements: usize,
    /// Absolute tolerance on the change between successive refinements,
    /// relative to the magnitude of `reference`.
    pub tolerance: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions { nodes_per_panel: 32, max_refinements: 3, tolerance: 1e-11 }
    }
}

/// Outcome of a refinement sequence; `error` is the change produced by the
/// last node doubling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
    pub converged: bool,
}

impl Estimate {
    pub fn into_result(self) -> Result<Complex64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::NonConvergence { estimate: self.value, error_bound: self.error })
        }
    }
}

/// Integrates with node doubling until two successive estimates agree to
/// `tolerance · reference`.
pub fn integrate_refined<F: Fn(f64, f64) -> Complex64>(
    region: &Region,
    decay_rate: f64,
    max_frequency: f64,
    reference: f64,
    options: &QuadratureOptions,
    f: F,
) -> Estimate {
    let mut nodes = options.nodes_per_panel;
    let mut previous = Integrator::new(nodes, decay_rate, max_frequency).integrate(region, &f);
    let mut error = f64::INFINITY;
    for _ in 0..options.max_refinements {
        nodes *= 2;
        let next = Integrator::new(nodes, decay_rate, max_frequency).integrate(region, &f);
        error = (next - previous).norm();
        previous = next;
        if error <= options.tolerance * reference.abs() {
            return Estimate { value: next, error, converged: true };
        }
    }
    Estimate { value: previous, error, converged: false }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials() {
        let r = GaussLegendre::new(8);
        // exact up to degree 15
        let s: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(15)).sum();
        assert!((s - 1.0 / 16.0).abs() < 1e-15);
        let total: f64 = r.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-15);
        let big = GaussLegendre::new(256);
        let total: f64 = big.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-13);
        assert!(big.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn exponential_region_matches_closed_form() {
        let tau = 1.0;
        let g = |x: f64, y: f64| Complex64::new((-(x + y) / tau).exp() / (tau * tau), 0.0);
        let integ = Integrator::new(32, 1.0 / tau, 0.0);
        for (td, tdelta) in [(f64::INFINITY, 2.0), (2.0, 1.0), (3.0, 3.0), (5.0, 0.3), (f64::INFINITY, f64::INFINITY)] {
            let r = Region { start: 0.0, end: td, max_difference: tdelta };
            let v = integ.integrate(&r, g).re;
            let tdelta_eff: f64 = if tdelta.is_infinite() { td } else { tdelta };
            let expect = if tdelta_eff >= td {
                (1.0 - (-td).exp()).powi(2)
            } else {
                1.0 - (-tdelta_eff).exp() - (-(2.0 * td - tdelta_eff)).exp() + (-2.0 * td).exp()
            };
            assert!((v - expect).abs() < 1e-12, "T_D={td} T_delta={tdelta}: {v} vs {expect}");
        }
    }

    #[test]
    fn oscillatory_integrand_converges() {
        let w = 3.0;
        let f = |x: f64, y: f64| Complex64::from_polar((-(x + y)).exp(), w * (x - y));
        let r = Region { start: 0.0, end: f64::INFINITY, max_difference: f64::INFINITY };
        let v = integrate_refined(&r, 1.0, w, 1.0, &QuadratureOptions::default(), f).into_result().unwrap();
        // |∫ e^{-x} e^{iwx} dx|² = 1/(1+w²)
        assert!((v.re - 1.0 / (1.0 + w * w)).abs() < 1e-12);
        assert!(v.im.abs() < 1e-12);
    }
}
