//! Observed-data and complete-data likelihoods, compensators and the
//! branching (parent attribution) distribution.
//!
//! All integrals go through [`ReplicateTable`], which caches per-node kernel
//! sums for one replicate so that the sampler can re-evaluate only the
//! pieces a parameter block touches. The free functions build a fresh table
//! and are the public entry points.

use crate::error::{HawkesError, Result};
use crate::model::{CovariateTrack, Dataset, EventSequence, ExInParams, MarkedEvent, Replicate};
use crate::quadrature::{DecayTrack, QuadGrid, QuadratureSpec};
use rayon::prelude::*;

/// Latent parent of each event: `None` for a background event, `Some(j)` when
/// event `j` (strictly earlier) triggered it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchingAssignment {
    pub parent: Vec<Option<usize>>,
}

impl BranchingAssignment {
    pub fn all_background(n: usize) -> Self {
        BranchingAssignment {
            parent: vec![None; n],
        }
    }

    /// Check ordering and that every parent edge is excitatory.
    pub fn validate(&self, seq: &EventSequence, params: &ExInParams) -> Result<()> {
        if self.parent.len() != seq.len() {
            return Err(HawkesError::validation(format!(
                "branching has {} entries for {} events",
                self.parent.len(),
                seq.len()
            )));
        }
        let ev = seq.events();
        for (i, p) in self.parent.iter().enumerate() {
            if let Some(j) = *p {
                if j >= i {
                    return Err(HawkesError::InadmissibleParent {
                        child: i,
                        parent: j,
                        reason: "parent must be strictly earlier".into(),
                    });
                }
                if params.alpha(ev[j].mark, ev[i].mark) <= 0.0 {
                    return Err(HawkesError::InadmissibleParent {
                        child: i,
                        parent: j,
                        reason: format!(
                            "mark {} does not excite mark {}",
                            ev[j].mark, ev[i].mark
                        ),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Expected background-driven and excitation-driven counts of one mark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubCompensator {
    pub background: f64,
    pub excitation: f64,
}

impl SubCompensator {
    pub fn total(&self) -> f64 {
        self.background + self.excitation
    }
}

#[derive(Debug, Clone, Default)]
struct TargetTrial {
    active: bool,
    inhibited: bool,
    h: Vec<f64>,
    ih: Vec<f64>,
    ish: Vec<f64>,
}

/// Cached intensity pieces of one replicate under one parameter value.
///
/// Holds, per source mark `ℓ`, the decayed excitation sums `S_ℓ` (scale
/// `η_ℓ`) and inhibition sums `R_ℓ` (scale `φ_ℓ`) at every quadrature node and
/// at every event, the inhibition factor `H_k` at every node, and the
/// integrals `∫ H_k` per covariate segment and `∫ S_ℓ H_k`. The compensator
/// of mark `k` is then `Σ_seg μ_k ∫H_k + Σ_ℓ α_{ℓ,k}/η_ℓ ∫S_ℓ H_k`.
#[derive(Debug, Clone)]
pub struct ReplicateTable {
    replicate: usize,
    events: Vec<MarkedEvent>,
    grid: QuadGrid,
    rows: Vec<Vec<f64>>,
    closed_form: bool,
    exc: Vec<DecayTrack>,
    inh: Vec<DecayTrack>,
    inhibited: Vec<bool>,
    h: Vec<Vec<f64>>,
    mu: Vec<Vec<f64>>,
    ih: Vec<Vec<f64>>,
    ish: Vec<Vec<f64>>,
    exact_s: Vec<f64>,
    seg_weight: Vec<f64>,
    seq: EventSequence,
    // proposal scratch
    trial_exc: DecayTrack,
    trial_exact_s: f64,
    trial_ish_row: Vec<f64>,
    trial_inh: Option<(usize, DecayTrack)>,
    trial_targets: Vec<TargetTrial>,
}

impl ReplicateTable {
    pub fn new(rep: &Replicate, replicate: usize, params: &ExInParams, spec: &QuadratureSpec) -> Result<Self> {
        Self::with_knots(rep, replicate, params, spec, &[])
    }

    pub fn with_knots(
        rep: &Replicate,
        replicate: usize,
        params: &ExInParams,
        spec: &QuadratureSpec,
        extra_knots: &[f64],
    ) -> Result<Self> {
        params.validate()?;
        if replicate >= params.replicate_count() {
            return Err(HawkesError::validation(format!(
                "no β for replicate {replicate} ({} available)",
                params.replicate_count()
            )));
        }
        if rep.events.mark_count() != params.mark_count() {
            return Err(HawkesError::validation(format!(
                "data has {} marks, parameters {}",
                rep.events.mark_count(),
                params.mark_count()
            )));
        }
        if rep.covariates.dim() != params.covariate_dim() {
            return Err(HawkesError::validation(format!(
                "covariates have {} columns, β has {}",
                rep.covariates.dim(),
                params.covariate_dim()
            )));
        }
        let grid = QuadGrid::build_with_knots(&rep.events, &rep.covariates, spec, extra_knots)?;
        let k = params.mark_count();
        let n = rep.events.len();
        let nseg = grid.segment_count();
        let mut seg_weight = vec![0.0; nseg];
        for iv in &grid.intervals {
            seg_weight[iv.segment] += grid.weights[iv.nodes.clone()].iter().sum::<f64>();
        }
        let rows = (0..nseg).map(|s| rep.covariates.row(s).to_vec()).collect();
        let mut table = ReplicateTable {
            replicate,
            events: rep.events.events().to_vec(),
            rows,
            closed_form: spec.closed_form_uninhibited,
            exc: vec![DecayTrack::zeros(&grid, n); k],
            inh: vec![DecayTrack::zeros(&grid, n); k],
            inhibited: vec![false; k],
            h: vec![Vec::new(); k],
            mu: vec![vec![0.0; nseg]; k],
            ih: vec![vec![0.0; nseg]; k],
            ish: vec![vec![0.0; k]; k],
            exact_s: vec![0.0; k],
            seg_weight,
            trial_exc: DecayTrack::zeros(&grid, n),
            trial_exact_s: 0.0,
            trial_ish_row: vec![0.0; k],
            trial_inh: None,
            trial_targets: vec![TargetTrial::default(); k],
            seq: rep.events.clone(),
            grid,
        };
        table.refresh_all(params)?;
        Ok(table)
    }

    pub fn mark_count(&self) -> usize {
        self.exc.len()
    }

    pub fn events(&self) -> &[MarkedEvent] {
        &self.events
    }

    pub fn sequence(&self) -> &EventSequence {
        &self.seq
    }

    pub fn grid(&self) -> &QuadGrid {
        &self.grid
    }

    pub fn replicate(&self) -> usize {
        self.replicate
    }

    /// Recompute every cached quantity.
    pub fn refresh_all(&mut self, params: &ExInParams) -> Result<()> {
        let k = self.mark_count();
        for l in 0..k {
            self.exc[l].fill(&self.grid, &self.seq, l, params.eta[l]);
            self.exact_s[l] = exact_decay_integral(&self.events, l, params.eta[l], self.grid.horizon);
            self.inh[l].fill(&self.grid, &self.seq, l, params.phi[l]);
        }
        self.refresh_beta(params)?;
        for target in 0..k {
            let inhibited = params.is_inhibited(target);
            self.inhibited[target] = inhibited;
            let mut h = std::mem::take(&mut self.h[target]);
            if inhibited {
                compute_h(&mut h, target, params, &self.inh, None);
            } else {
                h.clear();
            }
            self.h[target] = h;
            let (ih, ish) = self.integrals(target, inhibited, &self.h[target], &self.exc, None);
            self.ih[target] = ih;
            for l in 0..k {
                self.ish[l][target] = ish[l];
            }
        }
        Ok(())
    }

    /// Recompute backgrounds after a β change.
    pub fn refresh_beta(&mut self, params: &ExInParams) -> Result<()> {
        let d = self.replicate;
        for (k, mu) in self.mu.iter_mut().enumerate() {
            for (s, row) in self.rows.iter().enumerate() {
                let rate = params.background(d, k, row);
                // segments outside the window never enter the likelihood
                if self.grid.segment_length[s] <= 0.0 {
                    mu[s] = 0.0;
                    continue;
                }
                if !(rate > 0.0 && rate.is_finite()) {
                    return Err(HawkesError::NonPositiveBackground {
                        replicate: d,
                        mark: k,
                        segment: s,
                        rate,
                    });
                }
                mu[s] = rate;
            }
        }
        Ok(())
    }

    /// Background rates of mark `k` per segment under `params` without
    /// storing them. Nonpositive rates come back as-is.
    pub fn background_rates(&self, k: usize, params: &ExInParams) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| params.background(self.replicate, k, row))
            .collect()
    }

    fn integrals(
        &self,
        target: usize,
        inhibited: bool,
        h: &[f64],
        exc: &[DecayTrack],
        replaced: Option<(usize, &DecayTrack)>,
    ) -> (Vec<f64>, Vec<f64>) {
        let k = self.mark_count();
        let nseg = self.grid.segment_count();
        let exact_s = |l: usize| -> f64 {
            match replaced {
                Some((rl, _)) if rl == l => self.trial_exact_s,
                _ => self.exact_s[l],
            }
        };
        let track = |l: usize| -> &DecayTrack {
            match replaced {
                Some((rl, t)) if rl == l => t,
                _ => &exc[l],
            }
        };
        let _ = target;
        if !inhibited {
            if self.closed_form {
                let ih = self.grid.segment_length.clone();
                let ish = (0..k).map(exact_s).collect();
                return (ih, ish);
            }
            let ih = self.seg_weight.clone();
            let ish = (0..k)
                .map(|l| {
                    track(l)
                        .nodes
                        .iter()
                        .zip(&self.grid.weights)
                        .map(|(s, w)| s * w)
                        .sum()
                })
                .collect();
            return (ih, ish);
        }
        let mut ih = vec![0.0; nseg];
        for iv in &self.grid.intervals {
            let r = iv.nodes.clone();
            ih[iv.segment] += self.grid.weights[r.clone()]
                .iter()
                .zip(&h[r])
                .map(|(w, h)| w * h)
                .sum::<f64>();
        }
        let ish = (0..k)
            .map(|l| {
                track(l)
                    .nodes
                    .iter()
                    .zip(&self.grid.weights)
                    .zip(h)
                    .map(|((s, w), h)| s * w * h)
                    .sum()
            })
            .collect();
        (ih, ish)
    }

    /// `(∫ μ_k H_k, ∫ G_k H_k)` over `(0, T]`.
    pub fn subcompensator(&self, k: usize, params: &ExInParams) -> SubCompensator {
        let background = self.mu[k].iter().zip(&self.ih[k]).map(|(m, i)| m * i).sum();
        let excitation = (0..self.mark_count())
            .map(|l| {
                let a = params.alpha(l, k);
                if a == 0.0 {
                    0.0
                } else {
                    a / params.eta[l] * self.ish[l][k]
                }
            })
            .sum();
        SubCompensator {
            background,
            excitation,
        }
    }

    pub fn compensator(&self, k: usize, params: &ExInParams) -> f64 {
        self.subcompensator(k, params).total()
    }

    #[inline]
    pub fn background_at_event(&self, i: usize) -> f64 {
        self.mu[self.events[i].mark][self.grid.event_segment[i]]
    }

    pub fn event_segment(&self, i: usize) -> usize {
        self.grid.event_segment[i]
    }

    /// `S_ℓ(t_i−)`, the excitation sum of source mark `l` just before event `i`.
    #[inline]
    pub fn excitation_sum_at_event(&self, l: usize, i: usize) -> f64 {
        self.exc[l].events[i]
    }

    #[inline]
    pub fn excitation_at_event(&self, i: usize, params: &ExInParams) -> f64 {
        let k = self.events[i].mark;
        (0..self.mark_count())
            .map(|l| {
                let a = params.alpha(l, k);
                if a == 0.0 {
                    0.0
                } else {
                    a / params.eta[l] * self.exc[l].events[i]
                }
            })
            .sum()
    }

    #[inline]
    pub fn log_inhibition_at_event(&self, i: usize, params: &ExInParams) -> f64 {
        let k = self.events[i].mark;
        -(0..self.mark_count())
            .map(|l| params.gamma(l, k) * self.inh[l].events[i])
            .sum::<f64>()
    }

    /// `log λ_{m_i}(t_i)`; `-∞` when the intensity vanishes.
    pub fn log_intensity_at_event(&self, i: usize, params: &ExInParams) -> f64 {
        let base = self.background_at_event(i) + self.excitation_at_event(i, params);
        if base > 0.0 {
            base.ln() + self.log_inhibition_at_event(i, params)
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Observed-data log-likelihood of this replicate.
    pub fn log_likelihood(&self, params: &ExInParams) -> Result<f64> {
        let mut ll = 0.0;
        for i in 0..self.events.len() {
            let v = self.log_intensity_at_event(i, params);
            if !v.is_finite() {
                return Err(HawkesError::ZeroIntensity {
                    replicate: self.replicate,
                    index: i,
                    time: self.events[i].time,
                    mark: self.events[i].mark,
                });
            }
            ll += v;
        }
        for k in 0..self.mark_count() {
            ll -= self.compensator(k, params);
        }
        Ok(ll)
    }

    /// Observed-data contribution of one mark: `Σ_{m_i = k} log λ_k(t_i) − Λ_k`.
    pub fn mark_log_likelihood(&self, k: usize, params: &ExInParams) -> f64 {
        let mut ll = -self.compensator(k, params);
        for i in 0..self.events.len() {
            if self.events[i].mark == k {
                ll += self.log_intensity_at_event(i, params);
            }
        }
        ll
    }

    /// Inhibition-dependent part of the complete-data likelihood for one
    /// mark: `Σ_{m_i = k} log H_k(t_i) − Λ_k`.
    pub fn mark_inhibition_log_likelihood(&self, k: usize, params: &ExInParams) -> f64 {
        let mut ll = -self.compensator(k, params);
        for i in 0..self.events.len() {
            if self.events[i].mark == k {
                ll += self.log_inhibition_at_event(i, params);
            }
        }
        ll
    }

    /// Integral of each mark's intensity over each grid interval.
    /// Returned row-major: `out[interval * K + k]`.
    pub fn interval_integrals(&self, params: &ExInParams) -> Vec<f64> {
        let k_count = self.mark_count();
        let mut out = vec![0.0; self.grid.intervals.len() * k_count];
        for k in 0..k_count {
            let coef: Vec<f64> = (0..k_count)
                .map(|l| params.alpha(l, k) / params.eta[l])
                .collect();
            for (idx, iv) in self.grid.intervals.iter().enumerate() {
                let mu = self.mu[k][iv.segment];
                let v = if !self.inhibited[k] && self.closed_form {
                    let len = iv.len();
                    let mut v = mu * len;
                    for l in 0..k_count {
                        if coef[l] != 0.0 {
                            let eta = params.eta[l];
                            v += coef[l] * self.exc[l].starts[idx] * eta * -(-len / eta).exp_m1();
                        }
                    }
                    v
                } else {
                    let r = iv.nodes.clone();
                    let w = &self.grid.weights[r.clone()];
                    let mut v = 0.0;
                    for (j, n) in r.enumerate() {
                        let mut lam = mu;
                        for l in 0..k_count {
                            if coef[l] != 0.0 {
                                lam += coef[l] * self.exc[l].nodes[n];
                            }
                        }
                        if self.inhibited[k] {
                            lam *= self.h[k][n];
                        }
                        v += w[j] * lam;
                    }
                    v
                };
                out[idx * k_count + k] = v;
            }
        }
        out
    }

    /// Superposed-process compensator increments `Λ(t_{i-1}, t_i)` for every
    /// event (with `t_0 = 0`) plus the tail `Λ(t_n, T)` as the last entry.
    pub fn superposed_increments(&self, params: &ExInParams) -> Vec<f64> {
        let k = self.mark_count();
        let per = self.interval_integrals(params);
        let mut out = Vec::with_capacity(self.events.len() + 1);
        let mut lo = 0;
        let bounds = self
            .grid
            .event_boundary
            .iter()
            .copied()
            .chain(std::iter::once(self.grid.intervals.len()));
        for hi in bounds {
            let s: f64 = per[lo * k..hi * k].iter().sum();
            out.push(s);
            lo = hi;
        }
        out
    }

    /// Per-mark compensator increments between consecutive events of the
    /// same mark (the first measured from 0). The tail after each mark's last
    /// event is dropped.
    pub fn per_mark_increments(&self, params: &ExInParams) -> Vec<Vec<f64>> {
        let k_count = self.mark_count();
        let per = self.interval_integrals(params);
        let mut out = vec![Vec::new(); k_count];
        let mut acc = vec![0.0; k_count];
        let mut lo = 0;
        for (i, &hi) in self.grid.event_boundary.iter().enumerate() {
            for iv in lo..hi {
                for k in 0..k_count {
                    acc[k] += per[iv * k_count + k];
                }
            }
            lo = hi;
            let m = self.events[i].mark;
            out[m].push(acc[m]);
            acc[m] = 0.0;
        }
        out
    }

    /// Pointwise log-likelihood units: `log λ_{m_i}(t_i) − Λ(t_{i−1}, t_i)`
    /// for each event, followed by the tail `−Λ(t_n, T)`. They sum to the
    /// replicate log-likelihood.
    pub fn pointwise_log_likelihood(&self, params: &ExInParams) -> Vec<f64> {
        let inc = self.superposed_increments(params);
        let mut out = Vec::with_capacity(inc.len());
        for (i, d) in inc.iter().enumerate() {
            if i < self.events.len() {
                out.push(self.log_intensity_at_event(i, params) - d);
            } else {
                out.push(-d);
            }
        }
        out
    }

    // ---- proposal support -------------------------------------------------

    /// Evaluate a new `η_l` without committing. Returns `∫ S'_l H_k` for every
    /// target `k`.
    pub fn trial_eta(&mut self, l: usize, eta: f64) -> &[f64] {
        let mut track = std::mem::take(&mut self.trial_exc);
        track.fill(&self.grid, &self.seq, l, eta);
        self.trial_exact_s = exact_decay_integral(&self.events, l, eta, self.grid.horizon);
        for k in 0..self.mark_count() {
            let (_, ish) = self.integrals(k, self.inhibited[k], &self.h[k], &self.exc, Some((l, &track)));
            self.trial_ish_row[k] = ish[l];
        }
        self.trial_exc = track;
        &self.trial_ish_row
    }

    /// `Σ_{m_i=k, z_i = j with m_j = l} ...` helpers need the trial sums at
    /// events; exposed for the branching sampler.
    pub fn trial_excitation_sum_at_event(&self, i: usize) -> f64 {
        self.trial_exc.events[i]
    }

    pub fn commit_eta(&mut self, l: usize) {
        std::mem::swap(&mut self.exc[l], &mut self.trial_exc);
        self.exact_s[l] = self.trial_exact_s;
        for k in 0..self.mark_count() {
            self.ish[l][k] = self.trial_ish_row[k];
        }
    }

    pub fn ish(&self, l: usize, k: usize) -> f64 {
        self.ish[l][k]
    }

    pub fn ih(&self, k: usize) -> &[f64] {
        &self.ih[k]
    }

    /// Start a trial that may replace the inhibition track of `phi_change.0`
    /// and recompute `H` for `targets` under `params`.
    pub fn trial_inhibition(&mut self, phi_change: Option<(usize, f64)>, targets: &[usize], params: &ExInParams) {
        for t in &mut self.trial_targets {
            t.active = false;
        }
        self.trial_inh = phi_change.map(|(l, phi)| {
            let mut track = DecayTrack::zeros(&self.grid, self.events.len());
            track.fill(&self.grid, &self.seq, l, phi);
            (l, track)
        });
        for &k in targets {
            let mut trial = std::mem::take(&mut self.trial_targets[k]);
            trial.inhibited = params.is_inhibited(k);
            if trial.inhibited {
                let replaced = self.trial_inh.as_ref().map(|(l, t)| (*l, t));
                compute_h(&mut trial.h, k, params, &self.inh, replaced);
            } else {
                trial.h.clear();
            }
            let (ih, ish) = self.integrals(k, trial.inhibited, &trial.h, &self.exc, None);
            trial.ih = ih;
            trial.ish = ish;
            trial.active = true;
            self.trial_targets[k] = trial;
        }
    }

    fn trial_inh_event(&self, l: usize, i: usize) -> f64 {
        match &self.trial_inh {
            Some((tl, t)) if *tl == l => t.events[i],
            _ => self.inh[l].events[i],
        }
    }

    fn trial_compensator(&self, k: usize, params: &ExInParams) -> f64 {
        let t = &self.trial_targets[k];
        if !t.active {
            return self.compensator(k, params);
        }
        let bg: f64 = self.mu[k].iter().zip(&t.ih).map(|(m, i)| m * i).sum();
        let exc: f64 = (0..self.mark_count())
            .map(|l| {
                let a = params.alpha(l, k);
                if a == 0.0 {
                    0.0
                } else {
                    a / params.eta[l] * t.ish[l]
                }
            })
            .sum();
        bg + exc
    }

    fn trial_log_inhibition_at_event(&self, i: usize, params: &ExInParams) -> f64 {
        let k = self.events[i].mark;
        -(0..self.mark_count())
            .map(|l| {
                let g = params.gamma(l, k);
                if g == 0.0 {
                    0.0
                } else {
                    g * self.trial_inh_event(l, i)
                }
            })
            .sum::<f64>()
    }

    /// Trial counterpart of [`Self::mark_log_likelihood`].
    pub fn trial_mark_log_likelihood(&self, k: usize, params: &ExInParams) -> f64 {
        let mut ll = -self.trial_compensator(k, params);
        for i in 0..self.events.len() {
            if self.events[i].mark == k {
                let base = self.background_at_event(i) + self.excitation_at_event(i, params);
                if base <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                ll += base.ln() + self.trial_log_inhibition_at_event(i, params);
            }
        }
        ll
    }

    /// Trial counterpart of [`Self::mark_inhibition_log_likelihood`].
    pub fn trial_mark_inhibition_log_likelihood(&self, k: usize, params: &ExInParams) -> f64 {
        let mut ll = -self.trial_compensator(k, params);
        for i in 0..self.events.len() {
            if self.events[i].mark == k {
                ll += self.trial_log_inhibition_at_event(i, params);
            }
        }
        ll
    }

    pub fn commit_inhibition(&mut self) {
        if let Some((l, track)) = self.trial_inh.take() {
            self.inh[l] = track;
        }
        let k_count = self.mark_count();
        for k in 0..k_count {
            if !self.trial_targets[k].active {
                continue;
            }
            let t = &mut self.trial_targets[k];
            t.active = false;
            self.inhibited[k] = t.inhibited;
            std::mem::swap(&mut self.h[k], &mut t.h);
            std::mem::swap(&mut self.ih[k], &mut t.ih);
            for l in 0..k_count {
                self.ish[l][k] = t.ish[l];
            }
        }
    }

    /// Refresh `H` and the integrals of one target after an in-place change
    /// of its inhibition parameters.
    pub fn refresh_target(&mut self, k: usize, params: &ExInParams) {
        self.trial_inhibition(None, &[k], params);
        self.commit_inhibition();
    }
}

fn compute_h(
    out: &mut Vec<f64>,
    target: usize,
    params: &ExInParams,
    inh: &[DecayTrack],
    replaced: Option<(usize, &DecayTrack)>,
) {
    let n = inh[0].nodes.len();
    out.clear();
    out.resize(n, 0.0);
    for (l, base) in inh.iter().enumerate() {
        let g = params.gamma(l, target);
        if g == 0.0 {
            continue;
        }
        let track = match replaced {
            Some((rl, t)) if rl == l => t,
            _ => base,
        };
        for (o, r) in out.iter_mut().zip(&track.nodes) {
            *o += g * r;
        }
    }
    for o in out.iter_mut() {
        *o = (-*o).exp();
    }
}

/// `∫_0^T Σ_{i: m_i = mark} exp(−(t − t_i)/scale) dt`, exactly.
fn exact_decay_integral(events: &[MarkedEvent], mark: usize, scale: f64, horizon: f64) -> f64 {
    events
        .iter()
        .filter(|e| e.mark == mark)
        .map(|e| scale * -(-(horizon - e.time) / scale).exp_m1())
        .sum()
}

/// `∫_a^b λ_k(u) du` for one replicate.
pub fn compensator(
    a: f64,
    b: f64,
    mark: usize,
    rep: &Replicate,
    replicate: usize,
    params: &ExInParams,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let horizon = rep.events.horizon();
    if !(0.0 <= a && a <= b && b <= horizon) {
        return Err(HawkesError::validation(format!(
            "compensator bounds must satisfy 0 ≤ a ≤ b ≤ T, got [{a}, {b}] with T = {horizon}"
        )));
    }
    if mark >= params.mark_count() {
        return Err(HawkesError::validation(format!("mark {mark} out of range")));
    }
    let table = ReplicateTable::with_knots(rep, replicate, params, quad, &[a, b])?;
    let k = params.mark_count();
    let per = table.interval_integrals(params);
    Ok(table
        .grid()
        .intervals
        .iter()
        .enumerate()
        .filter(|(_, iv)| iv.start >= a && iv.end <= b)
        .map(|(idx, _)| per[idx * k + mark])
        .sum())
}

/// Background and excitation subcompensators of every mark.
pub fn subcompensators(
    rep: &Replicate,
    replicate: usize,
    params: &ExInParams,
    quad: &QuadratureSpec,
) -> Result<Vec<SubCompensator>> {
    let table = ReplicateTable::new(rep, replicate, params, quad)?;
    Ok((0..params.mark_count())
        .map(|k| table.subcompensator(k, params))
        .collect())
}

/// Observed-data log-likelihood summed over replicates. Replicates are
/// evaluated in parallel and reduced in index order.
pub fn log_likelihood(data: &Dataset, params: &ExInParams, quad: &QuadratureSpec) -> Result<f64> {
    let parts: Vec<Result<f64>> = data
        .replicates
        .par_iter()
        .enumerate()
        .map(|(d, rep)| ReplicateTable::new(rep, d, params, quad)?.log_likelihood(params))
        .collect();
    let mut total = 0.0;
    for p in parts {
        total += p?;
    }
    Ok(total)
}

pub fn replicate_log_likelihood(
    rep: &Replicate,
    replicate: usize,
    params: &ExInParams,
    quad: &QuadratureSpec,
) -> Result<f64> {
    ReplicateTable::new(rep, replicate, params, quad)?.log_likelihood(params)
}

/// Complete-data log-likelihood given a branching assignment:
/// `Σ_{z_i=0} log μ H + Σ_{z_i=j} log(α g(t_i − t_j) H) − Σ_k Λ_k`.
pub fn complete_data_log_likelihood(
    rep: &Replicate,
    replicate: usize,
    z: &BranchingAssignment,
    params: &ExInParams,
    quad: &QuadratureSpec,
) -> Result<f64> {
    z.validate(&rep.events, params)?;
    let table = ReplicateTable::new(rep, replicate, params, quad)?;
    let ev = rep.events.events();
    let mut ll = 0.0;
    for (i, p) in z.parent.iter().enumerate() {
        let log_h = table.log_inhibition_at_event(i, params);
        let factor = match *p {
            None => table.background_at_event(i),
            Some(j) => parent_weight(&ev[j], &ev[i], params),
        };
        ll += factor.ln() + log_h;
    }
    for k in 0..params.mark_count() {
        ll -= table.compensator(k, params);
    }
    Ok(ll)
}

/// `α_{m_j,m_i} g(t_i − t_j)`.
#[inline]
pub fn parent_weight(parent: &MarkedEvent, child: &MarkedEvent, params: &ExInParams) -> f64 {
    let a = params.alpha(parent.mark, child.mark);
    if a == 0.0 {
        return 0.0;
    }
    let eta = params.eta[parent.mark];
    a / eta * (-(child.time - parent.time) / eta).exp()
}

/// Probabilities of each admissible parent of event `i`: background first
/// (`None`), then every strictly earlier event with an excitatory edge into
/// `m_i`. The inhibition factor is common to all options and cancels.
pub fn branching_conditional(
    i: usize,
    seq: &EventSequence,
    replicate: usize,
    params: &ExInParams,
    cov: &CovariateTrack,
) -> Result<Vec<(Option<usize>, f64)>> {
    let ev = seq.events();
    if i >= ev.len() {
        return Err(HawkesError::validation(format!("event index {i} out of range")));
    }
    let child = ev[i];
    let mu = crate::model::background_rate(child.time, child.mark, replicate, params, cov)?;
    let mut out = vec![(None, mu)];
    for (j, parent) in ev[..i].iter().enumerate() {
        let w = parent_weight(parent, &child, params);
        if w > 0.0 {
            out.push((Some(j), w));
        }
    }
    let total: f64 = out.iter().map(|(_, w)| w).sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(HawkesError::ZeroIntensity {
            replicate,
            index: i,
            time: child.time,
            mark: child.mark,
        });
    }
    for (_, w) in &mut out {
        *w /= total;
    }
    Ok(out)
}
