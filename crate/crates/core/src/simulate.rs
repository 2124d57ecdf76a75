//! Thinning simulation of the excitation-inhibition process.
//!
//! Between events `G_k` only decays and `H_k ≤ 1`, so
//! `M(t) = Σ_k [sup_{s > t} μ_k(s) + G_k(t+)]` dominates the total intensity
//! until the next accepted event. The bound is refreshed after every
//! candidate.

use crate::error::{HawkesError, Result};
use crate::model::{CovariateTrack, EventSequence, ExInParams, KernelState, MarkedEvent, ModelVariant};
use rand::Rng;
use rand_distr::Exp1;

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub params: ExInParams,
    pub variant: ModelVariant,
    pub horizon: f64,
    pub cov: CovariateTrack,
    pub seed: u64,
    /// Cap on accepted events; `None` means 100 × the expected background count.
    pub max_events: Option<usize>,
    /// Which replicate's β to use; also the RNG stream and the output replicate id.
    pub replicate: usize,
}

impl SimulationConfig {
    pub fn new(params: ExInParams, variant: ModelVariant, horizon: f64, seed: u64) -> Self {
        SimulationConfig {
            params,
            variant,
            horizon,
            cov: CovariateTrack::intercept_only(),
            seed,
            max_events: None,
            replicate: 0,
        }
    }

    pub fn with_covariates(mut self, cov: CovariateTrack) -> Self {
        self.cov = cov;
        self
    }

    pub fn with_replicate(mut self, replicate: usize) -> Self {
        self.replicate = replicate;
        self
    }

    pub fn with_max_events(mut self, max_events: usize) -> Self {
        self.max_events = Some(max_events);
        self
    }
}

/// Suffix maxima of the background over covariate segments, per mark.
struct BackgroundEnvelope {
    rates: Vec<Vec<f64>>,
    suffix_max: Vec<Vec<f64>>,
}

impl BackgroundEnvelope {
    fn new(params: &ExInParams, cov: &CovariateTrack, replicate: usize, horizon: f64) -> Result<Self> {
        let k = params.mark_count();
        let nseg = cov.segment_count();
        let mut rates = vec![vec![0.0; nseg]; k];
        let mut suffix_max = vec![vec![0.0; nseg]; k];
        for m in 0..k {
            for s in 0..nseg {
                let r = params.background(replicate, m, cov.row(s));
                let (lo, _) = cov.segment_bounds(s);
                if lo < horizon && !(r > 0.0 && r.is_finite()) {
                    return Err(HawkesError::NonPositiveBackground {
                        replicate,
                        mark: m,
                        segment: s,
                        rate: r,
                    });
                }
                rates[m][s] = r;
            }
            let mut best = 0.0f64;
            for s in (0..nseg).rev() {
                let (lo, _) = cov.segment_bounds(s);
                if lo < horizon {
                    best = best.max(rates[m][s]);
                }
                suffix_max[m][s] = best;
            }
        }
        Ok(BackgroundEnvelope { rates, suffix_max })
    }
}

/// Expected number of background events, `Σ_k ∫_0^T μ_k`.
pub fn expected_background_count(
    params: &ExInParams,
    cov: &CovariateTrack,
    replicate: usize,
    horizon: f64,
) -> Result<f64> {
    let env = BackgroundEnvelope::new(params, cov, replicate, horizon)?;
    let mut total = 0.0;
    for s in 0..cov.segment_count() {
        let (lo, hi) = cov.segment_bounds(s);
        let len = (hi.min(horizon) - lo).max(0.0);
        total += env.rates.iter().map(|r| r[s]).sum::<f64>() * len;
    }
    Ok(total)
}

/// `M(t) = Σ_k [sup_{s ∈ (t,T]} μ_k(s) + G_k(t+)]`; `history` may include
/// events at `t` itself.
pub fn dominating_bound(
    t: f64,
    horizon: f64,
    history: &[MarkedEvent],
    replicate: usize,
    params: &ExInParams,
    cov: &CovariateTrack,
) -> Result<f64> {
    if !(t >= 0.0 && t < horizon) {
        return Err(HawkesError::validation(format!("bound requested at {t} outside [0, {horizon})")));
    }
    let env = BackgroundEnvelope::new(params, cov, replicate, horizon)?;
    let seg = cov.segment_at(t)?;
    let mut m = 0.0;
    for k in 0..params.mark_count() {
        m += env.suffix_max[k][seg];
        for e in history.iter().filter(|e| e.time <= t) {
            let a = params.alpha(e.mark, k);
            if a > 0.0 {
                let eta = params.eta[e.mark];
                m += a / eta * (-(t - e.time) / eta).exp();
            }
        }
    }
    Ok(m)
}

/// Draw one realization on `(0, T]` by thinning.
pub fn simulate(config: &SimulationConfig) -> Result<EventSequence> {
    let mut rng = crate::rng::stream(config.seed, config.replicate as u64);
    simulate_with(config, &mut rng)
}

pub fn simulate_with<R: Rng + ?Sized>(config: &SimulationConfig, rng: &mut R) -> Result<EventSequence> {
    let horizon = config.horizon;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(HawkesError::validation(format!("horizon must be positive, got {horizon}")));
    }
    config.cov.covers(horizon)?;
    let params = config.params.clone().restricted(config.variant);
    params.validate()?;
    let d = config.replicate;
    if d >= params.replicate_count() {
        return Err(HawkesError::validation(format!("no β for replicate {d}")));
    }
    let k_count = params.mark_count();
    let env = BackgroundEnvelope::new(&params, &config.cov, d, horizon)?;
    let max_events = match config.max_events {
        Some(0) => return Err(HawkesError::validation("max_events must be positive")),
        Some(m) => m,
        None => {
            let expected = expected_background_count(&params, &config.cov, d, horizon)?;
            ((100.0 * expected).ceil() as usize).max(100)
        }
    };

    let mut state = KernelState::new(k_count);
    let mut events = Vec::new();
    let mut lambdas = vec![0.0; k_count];
    let mut t = 0.0;
    let mut seg = 0;
    loop {
        while seg + 1 < config.cov.segment_count() && config.cov.segment_bounds(seg).1 <= t {
            seg += 1;
        }
        let mut bound = 0.0;
        for k in 0..k_count {
            bound += env.suffix_max[k][seg] + state.excitation(k, &params);
        }
        let wait: f64 = rng.sample(Exp1);
        let candidate = t + wait / bound;
        if candidate > horizon {
            break;
        }
        state.advance(candidate, &params);
        let cseg = config.cov.segment_at(candidate)?;
        let mut total = 0.0;
        for (k, lam) in lambdas.iter_mut().enumerate() {
            *lam = (env.rates[k][cseg] + state.excitation(k, &params)) * state.inhibition(k, &params);
            total += *lam;
        }
        if total > bound * (1.0 + 1e-12) {
            return Err(HawkesError::BoundViolation {
                time: candidate,
                intensity: total,
                bound,
            });
        }
        let u: f64 = rng.random::<f64>() * bound;
        if u <= total {
            let mut pick = rng.random::<f64>() * total;
            let mut mark = k_count - 1;
            for (k, lam) in lambdas.iter().enumerate() {
                if pick < *lam {
                    mark = k;
                    break;
                }
                pick -= lam;
            }
            // strictly increasing times; a repeat is measure-zero but guard anyway
            if events.last().is_some_and(|e: &MarkedEvent| e.time >= candidate) {
                t = candidate;
                continue;
            }
            events.push(MarkedEvent::new(candidate, mark));
            state.push(mark);
            if events.len() > max_events {
                return Err(HawkesError::Explosion {
                    max_events,
                    time: candidate,
                });
            }
        }
        t = candidate;
    }
    EventSequence::new(events, horizon, k_count, d)
}

/// Simulate independent replicates, one RNG stream each.
pub fn simulate_replicates(
    params: &ExInParams,
    variant: ModelVariant,
    horizons: &[f64],
    covariates: &[CovariateTrack],
    seed: u64,
) -> Result<Vec<EventSequence>> {
    if horizons.len() != covariates.len() {
        return Err(HawkesError::validation("one covariate track per replicate is required"));
    }
    horizons
        .iter()
        .zip(covariates)
        .enumerate()
        .map(|(d, (&h, cov))| {
            let cfg = SimulationConfig::new(params.clone(), variant, h, seed)
                .with_covariates(cov.clone())
                .with_replicate(d);
            simulate(&cfg)
        })
        .collect()
}
