//! Single-shot readout model. Each event draws a recombination time from a
//! mixture of exponentials; the NV Rabi-oscillates until the earlier of that
//! time and the measurement time, then N repeated projective readouts give a
//! binomial estimate of the bright-state probability.

use alloc::format;
use alloc::vec::Vec;
use core::ops::Range;

#[allow(unused_imports)]
use num_traits::Float;
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Binomial, Distribution, Exp, StandardUniform};

use crate::error::{Error, Result};

/// One spin configuration of the radical pair and its recombination rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateComponent {
    pub weight: f64,
    /// s⁻¹.
    pub k: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShotConfig {
    /// Rabi frequency, rad/s.
    pub omega: f64,
    /// Measurement time, s.
    pub t_m: f64,
    /// Projective readouts per event.
    pub n_readouts: u64,
    pub components: Vec<RateComponent>,
}

impl ShotConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(Error::InvalidArgument(format!("Rabi frequency must be positive, got {}", self.omega)));
        }
        if !(self.t_m.is_finite() && self.t_m >= 0.0) {
            return Err(Error::InvalidArgument(format!("measurement time must be non-negative, got {}", self.t_m)));
        }
        if self.n_readouts == 0 {
            return Err(Error::InvalidArgument("at least one readout per event is required".into()));
        }
        if self.components.is_empty() {
            return Err(Error::InvalidArgument("no rate components".into()));
        }
        let mut total = 0.0;
        for c in &self.components {
            if !(c.k.is_finite() && c.k > 0.0 && c.weight.is_finite() && c.weight >= 0.0) {
                return Err(Error::InvalidArgument(format!("invalid rate component {c:?}")));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("component weights sum to {total}, not 1")));
        }
        Ok(())
    }
}

/// P_r(t) = (1 + cos Ωt) / 2.
pub fn rabi_probability(omega: f64, t: f64) -> f64 {
    0.5 * (1.0 + (omega * t).cos())
}

/// Expected bright-state probability at measurement time `x`:
/// Σ_i w_i [k_i ∫₀ˣ P_r(t) e^{−k_i t} dt + P_r(x) e^{−k_i x}].
pub fn closed_form(omega: f64, components: &[RateComponent], x: f64) -> f64 {
    components
        .iter()
        .map(|c| {
            let k = c.k;
            let decay = (-k * x).exp();
            let z = Complex64::new(-k, omega);
            let osc = (((z * x).exp() - 1.0) / z).re;
            let integral = 0.5 * (1.0 - decay) / k + 0.5 * osc;
            c.weight * (k * integral + rabi_probability(omega, x) * decay)
        })
        .sum()
}

/// Fraction of events whose recombination time precedes `t_m`.
pub fn early_fraction(components: &[RateComponent], t_m: f64) -> f64 {
    components.iter().map(|c| c.weight * (1.0 - (-c.k * t_m).exp())).sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShotEvent {
    pub t_rec: f64,
    pub component: usize,
    /// P_r(min(t_rec, t_m)).
    pub truth: f64,
    /// Bright counts over N readouts, divided by N.
    pub estimate: f64,
    /// √((P − P²)/N) with P the true probability.
    pub error_bar: f64,
}

/// Independent generator for event `index`: the result does not depend on
/// how events are distributed over workers.
pub fn event_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn sample_event(cfg: &ShotConfig, rng: &mut ChaCha8Rng) -> Result<ShotEvent> {
    let u: f64 = StandardUniform.sample(rng);
    let mut acc = 0.0;
    let mut component = cfg.components.len() - 1;
    for (i, c) in cfg.components.iter().enumerate() {
        acc += c.weight;
        if u < acc {
            component = i;
            break;
        }
    }
    let exp = Exp::new(cfg.components[component].k).map_err(|e| Error::InvalidArgument(format!("{e}")))?;
    let t_rec: f64 = exp.sample(rng);
    let truth = rabi_probability(cfg.omega, t_rec.min(cfg.t_m)).clamp(0.0, 1.0);
    let counts = Binomial::new(cfg.n_readouts, truth).map_err(|e| Error::InvalidArgument(format!("{e}")))?.sample(rng);
    let n = cfg.n_readouts as f64;
    Ok(ShotEvent {
        t_rec,
        component,
        truth,
        estimate: counts as f64 / n,
        error_bar: ((truth - truth * truth).max(0.0) / n).sqrt(),
    })
}

/// Events `range` of the stream identified by `seed`.
pub fn simulate_events(cfg: &ShotConfig, seed: u64, range: Range<u64>) -> Result<Vec<ShotEvent>> {
    cfg.validate()?;
    range.map(|i| sample_event(cfg, &mut event_rng(seed, i))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleSummary {
    pub t_m: f64,
    pub n_events: usize,
    pub mean_estimate: f64,
    /// Standard error of `mean_estimate`.
    pub std_error: f64,
    pub mean_truth: f64,
    pub closed_form: f64,
    /// Observed fraction of events with t_rec < t_m.
    pub early_fraction: f64,
}

pub fn summarize(cfg: &ShotConfig, events: &[ShotEvent]) -> Result<EnsembleSummary> {
    if events.len() < 2 {
        return Err(Error::InvalidArgument("at least two events are needed for a standard error".into()));
    }
    let m = events.len() as f64;
    let mean = events.iter().map(|e| e.estimate).sum::<f64>() / m;
    let var = events.iter().map(|e| (e.estimate - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Ok(EnsembleSummary {
        t_m: cfg.t_m,
        n_events: events.len(),
        mean_estimate: mean,
        std_error: (var / m).sqrt(),
        mean_truth: events.iter().map(|e| e.truth).sum::<f64>() / m,
        closed_form: closed_form(cfg.omega, &cfg.components, cfg.t_m),
        early_fraction: events.iter().filter(|e| e.t_rec < cfg.t_m).count() as f64 / m,
    })
}
