//! Bayesian posterior sampling: Metropolis–Hastings within Gibbs with latent
//! parents and spike-and-slab selection of every excitatory or inhibitory
//! edge.

mod prior;
mod sampler;
mod summary;

pub use prior::PriorSpec;
pub use sampler::{initial_params, Sampler};
pub use summary::{batch_means_mcse, gelman_rubin, hpd_interval, mean, quantile, variance};

use crate::error::{HawkesError, Result};
use crate::likelihood::BranchingAssignment;
use crate::model::{BackgroundLink, CovariateTrack, Dataset, EventSequence, ExInParams, Interaction, KernelState, ModelVariant};
use crate::quadrature::QuadratureSpec;
use rand::Rng;
use rayon::prelude::*;

/// Initial random-walk standard deviations (β on its natural scale, the
/// rest on the log scale).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProposalScales {
    pub beta: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub eta: f64,
    pub phi: f64,
}

impl Default for ProposalScales {
    fn default() -> Self {
        ProposalScales {
            beta: 0.1,
            alpha: 0.3,
            gamma: 0.3,
            eta: 0.2,
            phi: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McmcConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub chain_count: usize,
    /// Scales adapt during the first `adaptation_window` iterations (never
    /// past burn-in), then stay fixed.
    pub adaptation_window: usize,
    pub target_acceptance: f64,
    pub scales: ProposalScales,
    pub link: BackgroundLink,
    pub quad: QuadratureSpec,
    /// Keep per-event log-likelihood terms of every retained draw.
    pub store_pointwise: bool,
    pub update_beta: bool,
    pub update_indicators: bool,
    pub update_decays: bool,
    /// Starting point; `None` uses [`initial_params`].
    pub initial: Option<ExInParams>,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            iterations: 20_000,
            burn_in: 10_000,
            thin: 1,
            seed: 0,
            chain_count: 1,
            adaptation_window: 5_000,
            target_acceptance: 0.3,
            scales: ProposalScales::default(),
            link: BackgroundLink::Log,
            quad: QuadratureSpec::default(),
            store_pointwise: true,
            update_beta: true,
            update_indicators: true,
            update_decays: true,
            initial: None,
        }
    }
}

impl McmcConfig {
    pub fn short(iterations: usize, burn_in: usize, thin: usize, seed: u64) -> Self {
        McmcConfig {
            iterations,
            burn_in,
            thin,
            seed,
            adaptation_window: burn_in,
            ..McmcConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(HawkesError::validation(format!(
                "burn-in ({}) must be smaller than the number of iterations ({}); no draws would be kept",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 || self.chain_count == 0 {
            return Err(HawkesError::validation("thin and chain count must be at least 1"));
        }
        let s = &self.scales;
        if [s.beta, s.alpha, s.gamma, s.eta, s.phi]
            .iter()
            .any(|x| !(*x > 0.0 && x.is_finite()))
        {
            return Err(HawkesError::validation("proposal scales must be positive"));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(HawkesError::validation("target acceptance must lie in (0, 1)"));
        }
        self.quad.validate()
    }

    /// Draws kept per chain.
    pub fn draws_per_chain(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}

/// Parameter blocks of one sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    Beta,
    AlphaEta,
    GammaPhi,
    Indicators,
}

impl Block {
    pub const ALL: [Block; 4] = [Block::Beta, Block::AlphaEta, Block::GammaPhi, Block::Indicators];

    pub fn name(self) -> &'static str {
        match self {
            Block::Beta => "beta",
            Block::AlphaEta => "alpha_eta",
            Block::GammaPhi => "gamma_phi",
            Block::Indicators => "indicators",
        }
    }
}

/// Accepted / proposed counts per block.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AcceptanceReport {
    counts: [(u64, u64); 4],
}

impl AcceptanceReport {
    pub fn record(&mut self, block: Block, accepted: bool) {
        let c = &mut self.counts[block as usize];
        c.1 += 1;
        if accepted {
            c.0 += 1;
        }
    }

    pub fn accepted(&self, block: Block) -> u64 {
        self.counts[block as usize].0
    }

    pub fn proposed(&self, block: Block) -> u64 {
        self.counts[block as usize].1
    }

    /// `None` when the block made no MH proposals.
    pub fn rate(&self, block: Block) -> Option<f64> {
        let (a, p) = self.counts[block as usize];
        (p > 0).then(|| a as f64 / p as f64)
    }

    pub fn merge(&mut self, other: &AcceptanceReport) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            a.0 += b.0;
            a.1 += b.1;
        }
    }
}

/// Retained draws of one or more chains, in chain order.
#[derive(Debug, Clone)]
pub struct PosteriorDraws {
    pub variant: ModelVariant,
    pub draws: Vec<ExInParams>,
    pub loglik: Vec<f64>,
    /// Per draw: the per-event terms of every replicate, each replicate
    /// followed by its tail term. Empty when not stored.
    pub pointwise: Vec<Vec<f64>>,
    pub chain: Vec<usize>,
    /// Post burn-in acceptance per chain.
    pub acceptance: Vec<AcceptanceReport>,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn chain_count(&self) -> usize {
        self.acceptance.len()
    }

    /// Values of one scalar summary per draw.
    pub fn map<F: Fn(&ExInParams) -> f64>(&self, f: F) -> Vec<f64> {
        self.draws.iter().map(f).collect()
    }

    pub fn chain_values(&self, values: &[f64]) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); self.chain_count()];
        for (v, &c) in values.iter().zip(&self.chain) {
            out[c].push(*v);
        }
        out
    }

    /// Fraction of draws in which pair `(l, k)` is in `state`.
    pub fn state_probability(&self, l: usize, k: usize, state: Interaction) -> f64 {
        self.draws
            .iter()
            .filter(|p| *p.interaction.get(l, k) == state)
            .count() as f64
            / self.len() as f64
    }

    pub fn acceptance_total(&self) -> AcceptanceReport {
        let mut r = AcceptanceReport::default();
        for a in &self.acceptance {
            r.merge(a);
        }
        r
    }
}

/// Run one chain with its own RNG stream.
pub fn run_chain(
    data: &Dataset,
    variant: ModelVariant,
    prior: &PriorSpec,
    config: &McmcConfig,
    chain: usize,
) -> Result<PosteriorDraws> {
    config.validate()?;
    let mut rng = crate::rng::stream(config.seed, chain as u64);
    let initial = match &config.initial {
        Some(p) => p.clone(),
        None => initial_params(data, variant, config.link)?,
    };
    let mut sampler = Sampler::new(data, variant, prior, config, initial)?;
    let keep = config.draws_per_chain();
    let mut out = PosteriorDraws {
        variant,
        draws: Vec::with_capacity(keep),
        loglik: Vec::with_capacity(keep),
        pointwise: Vec::new(),
        chain: Vec::with_capacity(keep),
        acceptance: Vec::new(),
    };
    let adapt_until = config.adaptation_window.min(config.burn_in);
    for it in 0..config.iterations {
        if it == adapt_until {
            sampler.set_adapting(false);
        }
        if it == config.burn_in {
            sampler.reset_report();
        }
        sampler.sweep(&mut rng)?;
        if it >= config.burn_in && (it + 1 - config.burn_in) % config.thin == 0 {
            let ll = sampler.log_likelihood()?;
            out.draws.push(sampler.params().clone());
            out.loglik.push(ll);
            out.chain.push(chain);
            if config.store_pointwise {
                out.pointwise.push(sampler.pointwise());
            }
        }
    }
    out.acceptance.push(sampler.report().clone());
    Ok(out)
}

/// Run `config.chain_count` independent chains in parallel and concatenate
/// their draws in chain order.
pub fn run_mcmc(data: &Dataset, variant: ModelVariant, prior: &PriorSpec, config: &McmcConfig) -> Result<PosteriorDraws> {
    config.validate()?;
    prior.validate()?;
    let chains: Vec<Result<PosteriorDraws>> = (0..config.chain_count)
        .into_par_iter()
        .map(|c| run_chain(data, variant, prior, config, c))
        .collect();
    let mut merged: Option<PosteriorDraws> = None;
    for c in chains {
        let c = c?;
        match &mut merged {
            None => merged = Some(c),
            Some(m) => {
                m.draws.extend(c.draws);
                m.loglik.extend(c.loglik);
                m.pointwise.extend(c.pointwise);
                m.chain.extend(c.chain);
                m.acceptance.extend(c.acceptance);
            }
        }
    }
    Ok(merged.expect("at least one chain"))
}

/// Independent draw of every latent parent from its full conditional.
pub fn sample_branching<R: Rng + ?Sized>(
    seq: &EventSequence,
    replicate: usize,
    params: &ExInParams,
    cov: &CovariateTrack,
    rng: &mut R,
) -> Result<BranchingAssignment> {
    let ev = seq.events();
    let k_count = params.mark_count();
    let by_mark = sampler::events_by_mark(ev, k_count);
    let mut state = KernelState::new(k_count);
    let mut parent = Vec::with_capacity(ev.len());
    for (i, e) in ev.iter().enumerate() {
        state.advance(e.time, params);
        let mu = crate::model::background_rate(e.time, e.mark, replicate, params, cov)?;
        let sums = state.excitation_sums().to_vec();
        parent.push(sampler::draw_parent(rng, i, ev, &by_mark, mu, |l| sums[l], params));
        state.push(e.mark);
    }
    Ok(BranchingAssignment { parent })
}
