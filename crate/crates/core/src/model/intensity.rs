//! Direct evaluation of the conditional intensity
//!
//! ```text
//! λ_k(t) = (μ_k(t) + G_k(t)) · H_k(t)
//! G_k(t) = Σ_{t_i < t} α_{m_i,k} η_{m_i}⁻¹ exp(−(t − t_i)/η_{m_i})
//! H_k(t) = exp(−Σ_{t_i < t} γ_{m_i,k} exp(−(t − t_i)/φ_{m_i}))
//! ```
//!
//! The free functions walk the whole history and serve as the reference
//! implementation. [`KernelState`] carries the per-source-mark decayed sums
//! forward in time and is what the simulator and likelihood engine use.

use crate::error::Result;
use crate::model::{CovariateTrack, ExInParams, MarkedEvent};

pub fn background_rate(
    t: f64,
    mark: usize,
    replicate: usize,
    params: &ExInParams,
    cov: &CovariateTrack,
) -> Result<f64> {
    let seg = cov.segment_at(t)?;
    let rate = params.background(replicate, mark, cov.row(seg));
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(crate::error::HawkesError::NonPositiveBackground {
            replicate,
            mark,
            segment: seg,
            rate,
        });
    }
    Ok(rate)
}

/// `G_k(t)`; events at or after `t` are ignored.
pub fn excitation_component(t: f64, mark: usize, history: &[MarkedEvent], params: &ExInParams) -> f64 {
    history
        .iter()
        .filter(|e| e.time < t)
        .map(|e| {
            let a = params.alpha(e.mark, mark);
            if a == 0.0 {
                0.0
            } else {
                let eta = params.eta[e.mark];
                a / eta * (-(t - e.time) / eta).exp()
            }
        })
        .sum()
}

/// `H_k(t)`, always in `(0, 1]`.
pub fn inhibition_factor(t: f64, mark: usize, history: &[MarkedEvent], params: &ExInParams) -> f64 {
    let exponent: f64 = history
        .iter()
        .filter(|e| e.time < t)
        .map(|e| {
            let g = params.gamma(e.mark, mark);
            if g == 0.0 {
                0.0
            } else {
                g * (-(t - e.time) / params.phi[e.mark]).exp()
            }
        })
        .sum();
    (-exponent).exp()
}

pub fn conditional_intensity(
    t: f64,
    mark: usize,
    replicate: usize,
    history: &[MarkedEvent],
    params: &ExInParams,
    cov: &CovariateTrack,
) -> Result<f64> {
    let mu = background_rate(t, mark, replicate, params, cov)?;
    let g = excitation_component(t, mark, history, params);
    let h = inhibition_factor(t, mark, history, params);
    Ok((mu + g) * h)
}

/// Decayed kernel sums per source mark, anchored at `time`.
///
/// `exc[ℓ] = Σ_{i: m_i = ℓ} exp(−(time − t_i)/η_ℓ)` and
/// `inh[ℓ] = Σ_{i: m_i = ℓ} exp(−(time − t_i)/φ_ℓ)` over events already added.
#[derive(Debug, Clone)]
pub struct KernelState {
    time: f64,
    exc: Vec<f64>,
    inh: Vec<f64>,
}

impl KernelState {
    pub fn new(mark_count: usize) -> Self {
        KernelState {
            time: 0.0,
            exc: vec![0.0; mark_count],
            inh: vec![0.0; mark_count],
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Decay all sums forward to `t >= self.time()`.
    pub fn advance(&mut self, t: f64, params: &ExInParams) {
        let dt = t - self.time;
        debug_assert!(dt >= 0.0);
        if dt > 0.0 {
            for l in 0..self.exc.len() {
                if self.exc[l] != 0.0 {
                    self.exc[l] *= (-dt / params.eta[l]).exp();
                }
                if self.inh[l] != 0.0 {
                    self.inh[l] *= (-dt / params.phi[l]).exp();
                }
            }
        }
        self.time = t;
    }

    /// Register an event of `mark` at the current time.
    pub fn push(&mut self, mark: usize) {
        self.exc[mark] += 1.0;
        self.inh[mark] += 1.0;
    }

    pub fn excitation_sums(&self) -> &[f64] {
        &self.exc
    }

    pub fn inhibition_sums(&self) -> &[f64] {
        &self.inh
    }

    pub fn excitation(&self, target: usize, params: &ExInParams) -> f64 {
        (0..self.exc.len())
            .map(|l| params.alpha(l, target) / params.eta[l] * self.exc[l])
            .sum()
    }

    pub fn inhibition(&self, target: usize, params: &ExInParams) -> f64 {
        let e: f64 = (0..self.inh.len())
            .map(|l| params.gamma(l, target) * self.inh[l])
            .sum();
        (-e).exp()
    }
}
