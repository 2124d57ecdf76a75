//! Univariate self-limiting Hawkes process:
//! `λ(t) = (μ + Σ_{t_i<t} α/η e^{−(t−t_i)/η}) · exp(−γ N(φ, t))`, with
//! `N(φ, t) = #{i : t − φ ≤ t_i < t}`.
//!
//! The damping count changes at every event and at every window exit
//! `t_i + φ`; between those breakpoints the intensity is a decaying
//! exponential, so the compensator is integrated exactly piece by piece.

use crate::error::{HawkesError, Result};
use crate::inference::PriorSpec;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfLimitingParams {
    pub mu: f64,
    pub alpha: f64,
    pub eta: f64,
    pub gamma: f64,
    pub phi_window: f64,
}

impl SelfLimitingParams {
    pub const NAMES: [&'static str; 5] = ["mu", "alpha", "eta", "gamma", "phi"];

    pub fn validate(&self) -> Result<()> {
        for (name, v) in Self::NAMES.iter().zip(self.to_array()) {
            let ok = if *name == "gamma" { v >= 0.0 } else { v > 0.0 };
            if !(ok && v.is_finite()) {
                return Err(HawkesError::validation(format!("self-limiting {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.mu, self.alpha, self.eta, self.gamma, self.phi_window]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        SelfLimitingParams {
            mu: a[0],
            alpha: a[1],
            eta: a[2],
            gamma: a[3],
            phi_window: a[4],
        }
    }
}

/// Number of events in `[t − φ, t)`.
fn window_count(t: f64, history: &[f64], phi: f64) -> usize {
    history.iter().filter(|&&s| s < t && s >= t - phi).count()
}

/// Intensity at `t` given the event history (only times before `t` count).
pub fn sl_intensity(t: f64, history: &[f64], params: &SelfLimitingParams) -> f64 {
    let exc: f64 = history
        .iter()
        .filter(|&&s| s < t)
        .map(|&s| params.alpha / params.eta * (-(t - s) / params.eta).exp())
        .sum();
    (params.mu + exc) * (-params.gamma * window_count(t, history, params.phi_window) as f64).exp()
}

fn check_times(times: &[f64], horizon: f64) -> Result<()> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(HawkesError::validation(format!("horizon must be positive, got {horizon}")));
    }
    for (i, w) in times.windows(2).enumerate() {
        if !(w[0] < w[1]) {
            return Err(HawkesError::validation(format!("event times not strictly increasing at index {}", i + 1)));
        }
    }
    if times.first().is_some_and(|&t| t <= 0.0) || times.last().is_some_and(|&t| t > horizon) {
        return Err(HawkesError::validation("event times must lie in (0, T]"));
    }
    Ok(())
}

/// Log-likelihood and compensator in one pass over events and window exits.
fn sl_pass(times: &[f64], horizon: f64, p: &SelfLimitingParams) -> (f64, f64) {
    let (mu, alpha, eta, gamma, phi) = (p.mu, p.alpha, p.eta, p.gamma, p.phi_window);
    let mut log_sum = 0.0;
    let mut comp = 0.0;
    let mut s = 0.0; // Σ exp(−(t − t_i)/η) at the current time
    let mut count = 0i64;
    let mut now = 0.0;
    let (mut next_event, mut next_exit) = (0usize, 0usize);
    let piece = |a: f64, b: f64, s: f64, count: i64| -> f64 {
        let len = b - a;
        (-gamma * count as f64).exp() * (mu * len + alpha * s * -(-len / eta).exp_m1())
    };
    loop {
        let te = times.get(next_event).copied().unwrap_or(f64::INFINITY);
        let tx = times.get(next_exit).map_or(f64::INFINITY, |t| t + phi);
        // an event at the same instant as an exit still sees the exiting event
        let t = te.min(tx).min(horizon);
        comp += piece(now, t, s, count);
        s *= (-(t - now) / eta).exp();
        now = t;
        if t >= horizon && te > horizon && tx >= horizon {
            break;
        }
        if te <= tx {
            log_sum += (mu + alpha / eta * s).ln() - gamma * count as f64;
            s += 1.0;
            count += 1;
            next_event += 1;
            if te >= horizon {
                break;
            }
        } else {
            count -= 1;
            next_exit += 1;
        }
    }
    (log_sum - comp, comp)
}

/// `Σ log λ(t_i) − ∫_0^T λ`.
pub fn sl_log_likelihood(times: &[f64], horizon: f64, params: &SelfLimitingParams) -> Result<f64> {
    check_times(times, horizon)?;
    params.validate()?;
    Ok(sl_pass(times, horizon, params).0)
}

/// `∫_0^T λ(u) du`, exact.
pub fn sl_compensator(times: &[f64], horizon: f64, params: &SelfLimitingParams) -> Result<f64> {
    check_times(times, horizon)?;
    params.validate()?;
    Ok(sl_pass(times, horizon, params).1)
}

/// Thinning simulation on `(0, T]`.
///
/// Between breakpoints (events and window exits) the damping count is
/// constant and `G` decays, so `(μ + G(t+)) e^{−γ N}` bounds the intensity
/// until the next exit; candidates past an exit restart from the exit.
pub fn sl_simulate(params: &SelfLimitingParams, horizon: f64, seed: u64) -> Result<Vec<f64>> {
    let mut rng = crate::rng::stream(seed, 0);
    sl_simulate_with(params, horizon, &mut rng)
}

pub fn sl_simulate_with<R: Rng + ?Sized>(params: &SelfLimitingParams, horizon: f64, rng: &mut R) -> Result<Vec<f64>> {
    params.validate()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(HawkesError::validation(format!("horizon must be positive, got {horizon}")));
    }
    let (mu, alpha, eta, gamma, phi) = (params.mu, params.alpha, params.eta, params.gamma, params.phi_window);
    let max_events = ((100.0 * mu * horizon).ceil() as usize).max(100);
    let mut times: Vec<f64> = Vec::new();
    let mut t = 0.0;
    let mut s = 0.0;
    let mut first_in_window = 0usize;
    loop {
        // events with t_i + φ ≥ t are in the window just after t
        while first_in_window < times.len() && times[first_in_window] + phi < t {
            first_in_window += 1;
        }
        let count = (times.len() - first_in_window) as f64;
        let damp = (-gamma * count).exp();
        let bound = (mu + alpha / eta * s) * damp;
        let exit = times.get(first_in_window).map_or(f64::INFINITY, |&x| x + phi);
        let wait: f64 = rng.sample(Exp1);
        let cand = t + wait / bound;
        if cand > exit.min(horizon) {
            if exit >= horizon {
                break;
            }
            s *= (-(exit - t) / eta).exp();
            // step just past the exit so the leaving event is dropped
            t = exit;
            first_in_window += 1;
            continue;
        }
        s *= (-(cand - t) / eta).exp();
        t = cand;
        let lam = (mu + alpha / eta * s) * damp;
        if lam > bound * (1.0 + 1e-12) {
            return Err(HawkesError::BoundViolation {
                time: cand,
                intensity: lam,
                bound,
            });
        }
        if rng.random::<f64>() * bound <= lam {
            times.push(cand);
            s += 1.0;
            if times.len() > max_events {
                return Err(HawkesError::Explosion { max_events, time: cand });
            }
        }
    }
    Ok(times)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlFitConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub adaptation_window: usize,
    pub target_acceptance: f64,
    /// Initial log-scale random-walk standard deviation.
    pub scale: f64,
    /// Hold `γ` at this value instead of sampling it.
    pub fixed_gamma: Option<f64>,
    pub initial: Option<SelfLimitingParams>,
}

impl Default for SlFitConfig {
    fn default() -> Self {
        SlFitConfig {
            iterations: 20_000,
            burn_in: 10_000,
            thin: 1,
            seed: 0,
            adaptation_window: 5_000,
            target_acceptance: 0.3,
            scale: 0.1,
            fixed_gamma: None,
            initial: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlPosterior {
    pub draws: Vec<SelfLimitingParams>,
    pub loglik: Vec<f64>,
    /// Post burn-in acceptance rate per parameter, in [`SelfLimitingParams::NAMES`] order.
    pub acceptance: [f64; 5],
}

impl SlPosterior {
    pub fn values(&self, index: usize) -> Vec<f64> {
        self.draws.iter().map(|p| p.to_array()[index]).collect()
    }
}

/// Random-walk MH on the log parameters, one coordinate at a time. Priors:
/// `log μ ~ N(0, beta_variance)`, `log α, log γ` from the slab and
/// `log η, log φ` from the decay prior of `prior`.
pub fn sl_fit(times: &[f64], horizon: f64, prior: &PriorSpec, config: &SlFitConfig) -> Result<SlPosterior> {
    check_times(times, horizon)?;
    if config.burn_in >= config.iterations || config.thin == 0 {
        return Err(HawkesError::validation("need burn-in < iterations and thin ≥ 1"));
    }
    let mut rng = crate::rng::stream(config.seed, 0);
    let init = config.initial.unwrap_or(SelfLimitingParams {
        mu: (times.len() as f64 + 0.5) / horizon,
        alpha: 0.5,
        eta: 1.0,
        gamma: 0.5,
        phi_window: 1.0,
    });
    let mut theta = init.to_array().map(f64::ln);
    if let Some(g) = config.fixed_gamma {
        theta[3] = g.ln();
    }
    SelfLimitingParams::from_array(theta.map(f64::exp)).validate()?;
    let prior_sd = [
        prior.beta_variance.sqrt(),
        prior.slab_sd,
        prior.decay_sd,
        prior.slab_sd,
        prior.decay_sd,
    ];
    let prior_mean = [0.0, prior.slab_mean, prior.decay_mean, prior.slab_mean, prior.decay_mean];
    let log_prior = |i: usize, x: f64| PriorSpec::log_normal_kernel(x, prior_mean[i], prior_sd[i]);
    let eval = |th: &[f64; 5]| sl_pass(times, horizon, &SelfLimitingParams::from_array(th.map(f64::exp))).0;

    let mut ll = eval(&theta);
    if !ll.is_finite() {
        return Err(HawkesError::Initialization(format!("log-likelihood {ll} at the starting point")));
    }
    let mut log_scale = [config.scale.ln(); 5];
    let mut accepted = [0u64; 5];
    let mut proposed = [0u64; 5];
    let mut out = SlPosterior {
        draws: Vec::new(),
        loglik: Vec::new(),
        acceptance: [0.0; 5],
    };
    let adapt_until = config.adaptation_window.min(config.burn_in);
    for it in 0..config.iterations {
        for i in 0..5 {
            if i == 3 && config.fixed_gamma.is_some() {
                continue;
            }
            let mut prop = theta;
            let z: f64 = rng.sample(StandardNormal);
            prop[i] += log_scale[i].clamp(-30.0, 5.0).exp() * z;
            let ll_new = eval(&prop);
            let log_r = ll_new - ll + log_prior(i, prop[i]) - log_prior(i, theta[i]);
            let ok = ll_new.is_finite() && rng.random::<f64>().ln() < log_r;
            if ok {
                theta = prop;
                ll = ll_new;
            }
            if it < adapt_until {
                let gain = 1.0 / ((it + 1) as f64).powf(0.6);
                log_scale[i] += gain * (if ok { 1.0 } else { 0.0 } - config.target_acceptance);
            }
            if it >= config.burn_in {
                proposed[i] += 1;
                accepted[i] += ok as u64;
            }
        }
        if it >= config.burn_in && (it + 1 - config.burn_in) % config.thin == 0 {
            out.draws.push(SelfLimitingParams::from_array(theta.map(f64::exp)));
            out.loglik.push(ll);
        }
    }
    for i in 0..5 {
        out.acceptance[i] = if proposed[i] > 0 {
            accepted[i] as f64 / proposed[i] as f64
        } else {
            f64::NAN
        };
    }
    Ok(out)
}
