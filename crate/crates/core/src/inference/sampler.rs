//! One Metropolis–Hastings-within-Gibbs chain.
//!
//! The chain state is the parameter vector, the latent parent of every
//! event, and a [`ReplicateTable`] per replicate kept consistent with the
//! parameters. Sufficient statistics of the branching (background counts per
//! covariate segment, child counts and lag sums per edge) make the β and
//! α*/η conditionals cheap; γ*/φ and indicator moves go through trial
//! evaluations on the tables.

use super::prior::PriorSpec;
use super::{AcceptanceReport, Block, McmcConfig};
use crate::error::{HawkesError, Result};
use crate::likelihood::{BranchingAssignment, ReplicateTable};
use crate::model::{BackgroundLink, Dataset, ExInParams, Interaction, MarkedEvent, ModelVariant};
use crate::quadrature::QuadratureSpec;
use rand::Rng;
use rand_distr::StandardNormal;

/// Per-parameter random-walk scales (log scale for positive parameters).
#[derive(Debug, Clone)]
struct Scales {
    beta: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    gamma: Vec<f64>,
    eta: Vec<f64>,
    phi: Vec<f64>,
}

/// Draw the parent of event `i` given the background rate at `t_i` and the
/// excitation sums `S_ℓ(t_i−)` of every source mark.
///
/// A source mark is chosen with weight `α_{ℓ,k}/η_ℓ · S_ℓ`, then a specific
/// earlier event of that mark with weight `exp(−lag/η_ℓ)` by walking back in
/// time; both stages together give exactly the normalized
/// `μ` / `α g(lag)` weights.
pub(crate) fn draw_parent<R: Rng + ?Sized>(
    rng: &mut R,
    i: usize,
    events: &[MarkedEvent],
    by_mark: &[Vec<usize>],
    mu: f64,
    exc_sum: impl Fn(usize) -> f64,
    params: &ExInParams,
) -> Option<usize> {
    let k = events[i].mark;
    let k_count = params.mark_count();
    let mut weights = [0.0f64; 16];
    let mut heap;
    let w: &mut [f64] = if k_count <= 16 {
        &mut weights[..k_count]
    } else {
        heap = vec![0.0; k_count];
        &mut heap
    };
    let mut total = mu;
    for (l, wl) in w.iter_mut().enumerate() {
        let a = params.alpha(l, k);
        if a > 0.0 {
            *wl = a / params.eta[l] * exc_sum(l);
            total += *wl;
        }
    }
    let mut u = rng.random::<f64>() * total;
    if u < mu {
        return None;
    }
    u -= mu;
    let mut source = None;
    for (l, wl) in w.iter().enumerate() {
        if *wl > 0.0 {
            source = Some(l);
            if u < *wl {
                break;
            }
            u -= wl;
        }
    }
    let l = source?;
    let eta = params.eta[l];
    let list = &by_mark[l];
    let end = list.partition_point(|&j| j < i);
    let t = events[i].time;
    let target = rng.random::<f64>() * exc_sum(l);
    let mut acc = 0.0;
    let mut chosen = None;
    for &j in list[..end].iter().rev() {
        acc += (-(t - events[j].time) / eta).exp();
        chosen = Some(j);
        if acc >= target {
            break;
        }
    }
    chosen
}

pub(crate) fn events_by_mark(events: &[MarkedEvent], k_count: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); k_count];
    for (i, e) in events.iter().enumerate() {
        out[e.mark].push(i);
    }
    out
}

/// Starting point: crude-rate backgrounds, self-excitation on the diagonal
/// where the variant allows it, `α* = γ* = 0.5`, `η = φ = 1`.
pub fn initial_params(data: &Dataset, variant: ModelVariant, link: BackgroundLink) -> Result<ExInParams> {
    let k = data.mark_count();
    let dim = data.covariate_dim();
    let mut beta = Vec::with_capacity(data.replicates.len());
    for rep in &data.replicates {
        let counts = rep.events.counts_by_mark();
        let horizon = rep.events.horizon();
        beta.push(
            counts
                .iter()
                .map(|&c| {
                    let rate = (c as f64 + 0.5) / horizon;
                    let mut b = vec![0.0; dim];
                    b[0] = match link {
                        BackgroundLink::Linear => rate,
                        BackgroundLink::Log => rate.ln(),
                    };
                    b
                })
                .collect(),
        );
    }
    let mut interaction = crate::model::PairMatrix::filled(k, Interaction::Absent);
    if variant.allows(Interaction::Excitatory) {
        for m in 0..k {
            interaction.set(m, m, Interaction::Excitatory);
        }
    }
    let params = ExInParams {
        link,
        beta,
        alpha_star: crate::model::PairMatrix::filled(k, 0.5),
        gamma_star: crate::model::PairMatrix::filled(k, 0.5),
        interaction,
        eta: vec![1.0; k],
        phi: vec![1.0; k],
    };
    params.validate()?;
    Ok(params)
}

/// A single chain.
pub struct Sampler<'a> {
    data: &'a Dataset,
    variant: ModelVariant,
    prior: &'a PriorSpec,
    params: ExInParams,
    tables: Vec<ReplicateTable>,
    by_mark: Vec<Vec<Vec<usize>>>,
    z: Vec<Vec<Option<usize>>>,
    bg_count: Vec<Vec<Vec<f64>>>,
    child_count: Vec<f64>,
    child_total: Vec<f64>,
    lag_sum: Vec<f64>,
    scales: Scales,
    target_acceptance: f64,
    adapting: bool,
    step: usize,
    update_beta: bool,
    update_indicators: bool,
    update_decays: bool,
    report: AcceptanceReport,
}

impl<'a> Sampler<'a> {
    pub fn new(
        data: &'a Dataset,
        variant: ModelVariant,
        prior: &'a PriorSpec,
        config: &McmcConfig,
        initial: ExInParams,
    ) -> Result<Self> {
        prior.validate()?;
        config.validate()?;
        let k = data.mark_count();
        if prior.mark_count() != k {
            return Err(HawkesError::validation(format!(
                "prior is for {} marks, data has {k}",
                prior.mark_count()
            )));
        }
        if initial.mark_count() != k || initial.replicate_count() != data.replicates.len() {
            return Err(HawkesError::Initialization(
                "initial parameters do not match the data's marks or replicates".into(),
            ));
        }
        let params = initial.restricted(variant);
        Self::build(data, variant, prior, config, params, &config.quad)
    }

    fn build(
        data: &'a Dataset,
        variant: ModelVariant,
        prior: &'a PriorSpec,
        config: &McmcConfig,
        params: ExInParams,
        quad: &QuadratureSpec,
    ) -> Result<Self> {
        let k = data.mark_count();
        let mut tables = Vec::with_capacity(data.replicates.len());
        for (d, rep) in data.replicates.iter().enumerate() {
            let table = ReplicateTable::new(rep, d, &params, quad).map_err(|e| {
                HawkesError::Initialization(format!(
                    "{e}; check that the initial backgrounds are positive on every covariate segment"
                ))
            })?;
            let ll = table.log_likelihood(&params).map_err(|e| {
                HawkesError::Initialization(format!(
                    "{e}; the starting point gives zero intensity at an event, start from a larger background"
                ))
            })?;
            if !ll.is_finite() {
                return Err(HawkesError::Initialization(format!(
                    "log-likelihood of replicate {d} is {ll} at the starting point"
                )));
            }
            tables.push(table);
        }
        let by_mark = data
            .replicates
            .iter()
            .map(|r| events_by_mark(r.events.events(), k))
            .collect();
        let z = data.replicates.iter().map(|r| vec![None; r.events.len()]).collect();
        let bg_count = tables
            .iter()
            .map(|t| vec![vec![0.0; t.grid().segment_count()]; k])
            .collect();
        let s = &config.scales;
        let scales = Scales {
            beta: vec![vec![s.beta.ln(); k]; data.replicates.len()],
            alpha: vec![s.alpha.ln(); k * k],
            gamma: vec![s.gamma.ln(); k * k],
            eta: vec![s.eta.ln(); k],
            phi: vec![s.phi.ln(); k],
        };
        let mut sampler = Sampler {
            data,
            variant,
            prior,
            params,
            tables,
            by_mark,
            z,
            bg_count,
            child_count: vec![0.0; k * k],
            child_total: vec![0.0; k],
            lag_sum: vec![0.0; k],
            scales,
            target_acceptance: config.target_acceptance,
            adapting: true,
            step: 0,
            update_beta: config.update_beta,
            update_indicators: config.update_indicators,
            update_decays: config.update_decays,
            report: AcceptanceReport::default(),
        };
        sampler.recount();
        Ok(sampler)
    }

    pub fn params(&self) -> &ExInParams {
        &self.params
    }

    pub fn tables(&self) -> &[ReplicateTable] {
        &self.tables
    }

    pub fn report(&self) -> &AcceptanceReport {
        &self.report
    }

    pub fn reset_report(&mut self) {
        self.report = AcceptanceReport::default();
    }

    pub fn set_adapting(&mut self, on: bool) {
        self.adapting = on;
    }

    pub fn branching(&self, replicate: usize) -> BranchingAssignment {
        BranchingAssignment {
            parent: self.z[replicate].clone(),
        }
    }

    /// Observed-data log-likelihood at the current state.
    pub fn log_likelihood(&self) -> Result<f64> {
        let mut total = 0.0;
        for t in &self.tables {
            total += t.log_likelihood(&self.params)?;
        }
        Ok(total)
    }

    /// Per-event pointwise terms of every replicate, concatenated.
    pub fn pointwise(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for t in &self.tables {
            out.extend(t.pointwise_log_likelihood(&self.params));
        }
        out
    }

    fn recount(&mut self) {
        let k = self.params.mark_count();
        self.child_count.iter_mut().for_each(|c| *c = 0.0);
        self.child_total.iter_mut().for_each(|c| *c = 0.0);
        self.lag_sum.iter_mut().for_each(|c| *c = 0.0);
        for (d, table) in self.tables.iter().enumerate() {
            for row in &mut self.bg_count[d] {
                row.iter_mut().for_each(|c| *c = 0.0);
            }
            let ev = table.events();
            for (i, p) in self.z[d].iter().enumerate() {
                match *p {
                    None => self.bg_count[d][ev[i].mark][table.event_segment(i)] += 1.0,
                    Some(j) => {
                        let l = ev[j].mark;
                        self.child_count[l * k + ev[i].mark] += 1.0;
                        self.child_total[l] += 1.0;
                        self.lag_sum[l] += ev[i].time - ev[j].time;
                    }
                }
            }
        }
    }

    /// Gibbs step for every latent parent (optionally only those of one mark).
    pub fn sample_branching<R: Rng + ?Sized>(&mut self, rng: &mut R, only_mark: Option<usize>) {
        for (d, table) in self.tables.iter().enumerate() {
            let ev = table.events();
            for i in 0..ev.len() {
                if only_mark.is_some_and(|m| m != ev[i].mark) {
                    continue;
                }
                self.z[d][i] = draw_parent(
                    rng,
                    i,
                    ev,
                    &self.by_mark[d],
                    table.background_at_event(i),
                    |l| table.excitation_sum_at_event(l, i),
                    &self.params,
                );
            }
        }
        self.recount();
    }

    fn adapt(&mut self, accepted: bool) -> f64 {
        if !self.adapting {
            return 0.0;
        }
        let gain = 1.0 / ((self.step + 1) as f64).powf(0.6);
        gain * (if accepted { 1.0 } else { 0.0 } - self.target_acceptance)
    }

    fn tally(&mut self, block: Block, accepted: bool) {
        self.report.record(block, accepted);
    }

    /// Complete-data log-likelihood change from replacing `β_{d,k}`
    /// (`−∞` if the proposal is inadmissible).
    pub fn beta_log_ratio(&self, d: usize, k: usize, proposal: &[f64]) -> f64 {
        let mut p = self.params.clone();
        p.beta[d][k] = proposal.to_vec();
        let table = &self.tables[d];
        let new = table.background_rates(k, &p);
        let old = table.background_rates(k, &self.params);
        let ih = table.ih(k);
        let lengths = &table.grid().segment_length;
        let mut delta = 0.0;
        for s in 0..new.len() {
            if lengths[s] <= 0.0 {
                continue;
            }
            if !(new[s] > 0.0 && new[s].is_finite()) {
                return f64::NEG_INFINITY;
            }
            let c = self.bg_count[d][k][s];
            if c > 0.0 {
                delta += c * (new[s].ln() - old[s].ln());
            }
            delta -= (new[s] - old[s]) * ih[s];
        }
        delta
    }

    fn update_beta<R: Rng + ?Sized>(&mut self, rng: &mut R, d: usize, k: usize) -> Result<()> {
        let scale = step_size(self.scales.beta[d][k]);
        let cur = self.params.beta[d][k].clone();
        let prop: Vec<f64> = cur
            .iter()
            .map(|b| b + scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let mut log_r = self.beta_log_ratio(d, k, &prop);
        let var = self.prior.beta_variance;
        log_r -= (prop.iter().map(|b| b * b).sum::<f64>() - cur.iter().map(|b| b * b).sum::<f64>()) / (2.0 * var);
        let accepted = log_r.is_finite() && rng.random::<f64>().ln() < log_r;
        if accepted {
            self.params.beta[d][k] = prop;
            self.tables[d].refresh_beta(&self.params)?;
        }
        let a = self.adapt(accepted);
        self.scales.beta[d][k] += a;
        self.tally(Block::Beta, accepted);
        Ok(())
    }

    fn update_alpha<R: Rng + ?Sized>(&mut self, rng: &mut R, l: usize, k: usize) {
        let kk = self.params.mark_count();
        let (mean, sd) = (self.prior.slab_mean, self.prior.slab_sd);
        if self.params.alpha(l, k) == 0.0 {
            let x: f64 = rng.sample(StandardNormal);
            self.params.alpha_star.set(l, k, (mean + sd * x).exp());
            return;
        }
        let cur = *self.params.alpha_star.get(l, k);
        let log_cur = cur.ln();
        let log_new = log_cur + step_size(self.scales.alpha[l * kk + k]) * rng.sample::<f64, _>(StandardNormal);
        let new = log_new.exp();
        let ish: f64 = self.tables.iter().map(|t| t.ish(l, k)).sum();
        let log_r = self.child_count[l * kk + k] * (log_new - log_cur) - (new - cur) / self.params.eta[l] * ish
            + PriorSpec::log_normal_kernel(log_new, mean, sd)
            - PriorSpec::log_normal_kernel(log_cur, mean, sd);
        let accepted = new > 0.0 && new.is_finite() && rng.random::<f64>().ln() < log_r;
        if accepted {
            self.params.alpha_star.set(l, k, new);
        }
        let a = self.adapt(accepted);
        self.scales.alpha[l * kk + k] += a;
        self.tally(Block::AlphaEta, accepted);
    }

    fn update_eta<R: Rng + ?Sized>(&mut self, rng: &mut R, l: usize) {
        let (mean, sd) = (self.prior.decay_mean, self.prior.decay_sd);
        if !self.params.has_excitation_from(l) {
            let x: f64 = rng.sample(StandardNormal);
            let eta = (mean + sd * x).exp();
            for t in &mut self.tables {
                t.trial_eta(l, eta);
                t.commit_eta(l);
            }
            self.params.eta[l] = eta;
            return;
        }
        let k_count = self.params.mark_count();
        let cur = self.params.eta[l];
        let log_cur = cur.ln();
        let log_new = log_cur + step_size(self.scales.eta[l]) * rng.sample::<f64, _>(StandardNormal);
        let new = log_new.exp();
        if !(new > 0.0 && new.is_finite()) {
            let a = self.adapt(false);
            self.scales.eta[l] += a;
            self.tally(Block::AlphaEta, false);
            return;
        }
        let mut log_r = self.child_total[l] * (log_cur - log_new) + self.lag_sum[l] * (1.0 / cur - 1.0 / new)
            + PriorSpec::log_normal_kernel(log_new, mean, sd)
            - PriorSpec::log_normal_kernel(log_cur, mean, sd);
        for t in &mut self.tables {
            let old: Vec<f64> = (0..k_count).map(|k| t.ish(l, k)).collect();
            let fresh = t.trial_eta(l, new);
            for k in 0..k_count {
                let a = self.params.alpha(l, k);
                if a > 0.0 {
                    log_r += a / cur * old[k] - a / new * fresh[k];
                }
            }
        }
        let accepted = log_r.is_finite() && rng.random::<f64>().ln() < log_r;
        if accepted {
            for t in &mut self.tables {
                t.commit_eta(l);
            }
            self.params.eta[l] = new;
        }
        let a = self.adapt(accepted);
        self.scales.eta[l] += a;
        self.tally(Block::AlphaEta, accepted);
    }

    /// MH step on the inhibition part: `Σ_{m_i ∈ targets} log H − Λ` changes.
    fn inhibition_move(&mut self, proposal: &ExInParams, phi_change: Option<(usize, f64)>, targets: &[usize]) -> f64 {
        let mut log_r = 0.0;
        for t in &mut self.tables {
            let mut old = 0.0;
            for &k in targets {
                old += t.mark_inhibition_log_likelihood(k, &self.params);
            }
            t.trial_inhibition(phi_change, targets, proposal);
            for &k in targets {
                log_r += t.trial_mark_inhibition_log_likelihood(k, proposal);
            }
            log_r -= old;
        }
        log_r
    }

    fn update_gamma<R: Rng + ?Sized>(&mut self, rng: &mut R, l: usize, k: usize) {
        let kk = self.params.mark_count();
        let (mean, sd) = (self.prior.slab_mean, self.prior.slab_sd);
        if self.params.gamma(l, k) == 0.0 {
            let x: f64 = rng.sample(StandardNormal);
            self.params.gamma_star.set(l, k, (mean + sd * x).exp());
            return;
        }
        let cur = *self.params.gamma_star.get(l, k);
        let log_cur = cur.ln();
        let log_new = log_cur + step_size(self.scales.gamma[l * kk + k]) * rng.sample::<f64, _>(StandardNormal);
        let new = log_new.exp();
        let mut accepted = false;
        if new > 0.0 && new.is_finite() {
            let mut prop = self.params.clone();
            prop.gamma_star.set(l, k, new);
            let log_r = self.inhibition_move(&prop, None, &[k]) + PriorSpec::log_normal_kernel(log_new, mean, sd)
                - PriorSpec::log_normal_kernel(log_cur, mean, sd);
            accepted = log_r.is_finite() && rng.random::<f64>().ln() < log_r;
            if accepted {
                for t in &mut self.tables {
                    t.commit_inhibition();
                }
                self.params = prop;
            }
        }
        let a = self.adapt(accepted);
        self.scales.gamma[l * kk + k] += a;
        self.tally(Block::GammaPhi, accepted);
    }

    fn update_phi<R: Rng + ?Sized>(&mut self, rng: &mut R, l: usize) {
        let (mean, sd) = (self.prior.decay_mean, self.prior.decay_sd);
        let k_count = self.params.mark_count();
        if !self.params.has_inhibition_from(l) {
            let x: f64 = rng.sample(StandardNormal);
            let phi = (mean + sd * x).exp();
            let mut prop = self.params.clone();
            prop.phi[l] = phi;
            for t in &mut self.tables {
                t.trial_inhibition(Some((l, phi)), &[], &prop);
                t.commit_inhibition();
            }
            self.params = prop;
            return;
        }
        let cur = self.params.phi[l];
        let log_cur = cur.ln();
        let log_new = log_cur + step_size(self.scales.phi[l]) * rng.sample::<f64, _>(StandardNormal);
        let new = log_new.exp();
        let mut accepted = false;
        if new > 0.0 && new.is_finite() {
            let mut prop = self.params.clone();
            prop.phi[l] = new;
            let targets: Vec<usize> = (0..k_count).filter(|&k| self.params.gamma(l, k) > 0.0).collect();
            let log_r = self.inhibition_move(&prop, Some((l, new)), &targets)
                + PriorSpec::log_normal_kernel(log_new, mean, sd)
                - PriorSpec::log_normal_kernel(log_cur, mean, sd);
            accepted = log_r.is_finite() && rng.random::<f64>().ln() < log_r;
            if accepted {
                for t in &mut self.tables {
                    t.commit_inhibition();
                }
                self.params = prop;
            }
        }
        let a = self.adapt(accepted);
        self.scales.phi[l] += a;
        self.tally(Block::GammaPhi, accepted);
    }

    /// Propose a different admissible state for pair `(l, k)`, accepted on
    /// the observed-data likelihood of mark `k` (latent parents integrated
    /// out). On acceptance the parents of every mark-`k` event are redrawn.
    pub fn update_indicator<R: Rng + ?Sized>(&mut self, rng: &mut R, l: usize, k: usize) -> bool {
        let current = *self.params.interaction.get(l, k);
        let others: Vec<Interaction> = self
            .variant
            .states()
            .into_iter()
            .filter(|s| *s != current)
            .collect();
        if others.is_empty() {
            return false;
        }
        let next = others[rng.random_range(0..others.len())];
        let w_new = self.prior.state_weight(l, k, next);
        let w_cur = self.prior.state_weight(l, k, current);
        let mut accepted = false;
        if w_new > 0.0 {
            let mut prop = self.params.clone();
            prop.interaction.set(l, k, next);
            let inhibition_changes = current == Interaction::Inhibitory || next == Interaction::Inhibitory;
            let targets: &[usize] = if inhibition_changes { &[k] } else { &[] };
            let mut log_r = w_new.ln() - w_cur.ln();
            for t in &mut self.tables {
                let old = t.mark_log_likelihood(k, &self.params);
                t.trial_inhibition(None, targets, &prop);
                log_r += t.trial_mark_log_likelihood(k, &prop) - old;
            }
            accepted = log_r.is_finite() && rng.random::<f64>().ln() < log_r;
            if accepted {
                for t in &mut self.tables {
                    t.commit_inhibition();
                }
                self.params = prop;
                self.sample_branching(rng, Some(k));
            }
        }
        self.tally(Block::Indicators, accepted);
        accepted
    }

    /// One full sweep: parents, β, then the excitation block (indicators,
    /// α*, η), then the inhibition block (γ*, φ).
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let k_count = self.params.mark_count();
        self.sample_branching(rng, None);
        if self.update_beta {
            for d in 0..self.tables.len() {
                for k in 0..k_count {
                    self.update_beta(rng, d, k)?;
                }
            }
        }
        if self.update_indicators {
            for l in 0..k_count {
                for k in 0..k_count {
                    self.update_indicator(rng, l, k);
                }
            }
        }
        for l in 0..k_count {
            for k in 0..k_count {
                self.update_alpha(rng, l, k);
            }
        }
        if self.update_decays {
            for l in 0..k_count {
                self.update_eta(rng, l);
            }
        }
        for l in 0..k_count {
            for k in 0..k_count {
                self.update_gamma(rng, l, k);
            }
        }
        if self.update_decays {
            for l in 0..k_count {
                self.update_phi(rng, l);
            }
        }
        self.assert_admissible()?;
        self.step += 1;
        Ok(())
    }

    /// Check the latent parents against the current parameters.
    pub fn assert_admissible(&self) -> Result<()> {
        for (d, rep) in self.data.replicates.iter().enumerate() {
            self.branching(d).validate(&rep.events, &self.params)?;
        }
        if !self.params.conforms_to(self.variant) {
            return Err(HawkesError::Numerical("state left the model variant".into()));
        }
        Ok(())
    }
}

/// Scales are adapted on the log scale.
#[inline]
fn step_size(log_scale: f64) -> f64 {
    log_scale.clamp(-30.0, 10.0).exp()
}
