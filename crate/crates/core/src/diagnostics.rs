//! Goodness of fit: residual (time-rescaled) increments with posterior Q-Q
//! bands, the Q-Q mean squared distance, WAIC, and the background /
//! excitation decomposition of the expected counts.

use crate::error::{HawkesError, Result};
use crate::inference::{hpd_interval, PosteriorDraws};
use crate::likelihood::{ReplicateTable, SubCompensator};
use crate::model::{Dataset, ExInParams};
use crate::quadrature::QuadratureSpec;
use rayon::prelude::*;

/// Ordered residual increments per draw and their pointwise summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct RtctResult {
    /// `per_draw[b]` holds the sorted increments of draw `b`.
    pub per_draw: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Exp(1) quantiles at plotting positions `(i − 0.5)/n`.
    pub theoretical: Vec<f64>,
}

impl RtctResult {
    /// Summarize per-draw increments (sorted here).
    pub fn from_increments(mut per_draw: Vec<Vec<f64>>) -> Result<Self> {
        if per_draw.is_empty() {
            return Err(HawkesError::validation("no draws to summarize"));
        }
        let n = per_draw[0].len();
        if per_draw.iter().any(|d| d.len() != n) {
            return Err(HawkesError::validation("draws disagree on the number of increments"));
        }
        for d in &mut per_draw {
            d.sort_by(f64::total_cmp);
        }
        let b = per_draw.len();
        let mut mean = vec![0.0; n];
        let mut lower = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut column = vec![0.0; b];
        for i in 0..n {
            for (c, d) in column.iter_mut().zip(&per_draw) {
                *c = d[i];
            }
            mean[i] = column.iter().sum::<f64>() / b as f64;
            column.sort_by(f64::total_cmp);
            lower[i] = crate::inference::quantile(&column, 0.025);
            upper[i] = crate::inference::quantile(&column, 0.975);
        }
        Ok(RtctResult {
            per_draw,
            mean,
            lower,
            upper,
            theoretical: exp1_quantiles(n),
        })
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }
}

/// `−ln(1 − (i − 0.5)/n)` for `i = 1..n`.
pub fn exp1_quantiles(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|i| -(-((i as f64 - 0.5) / n as f64)).ln_1p())
        .collect()
}

/// Superposed-process increments `Λ(t_{i−1}, t_i)` (with `t_0 = 0`) of every
/// replicate under one parameter value, replicates concatenated.
pub fn superposed_increments(data: &Dataset, params: &ExInParams, quad: &QuadratureSpec) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(data.event_count());
    for (d, rep) in data.replicates.iter().enumerate() {
        let table = ReplicateTable::new(rep, d, params, quad)?;
        let mut inc = table.superposed_increments(params);
        inc.pop();
        out.extend(inc);
    }
    Ok(out)
}

/// Per-mark increments between consecutive events of the same mark.
pub fn per_mark_increments(data: &Dataset, params: &ExInParams, quad: &QuadratureSpec) -> Result<Vec<Vec<f64>>> {
    let mut out = vec![Vec::new(); data.mark_count()];
    for (d, rep) in data.replicates.iter().enumerate() {
        let table = ReplicateTable::new(rep, d, params, quad)?;
        for (k, inc) in table.per_mark_increments(params).into_iter().enumerate() {
            out[k].extend(inc);
        }
    }
    Ok(out)
}

fn draws_or_error(draws: &PosteriorDraws) -> Result<()> {
    if draws.is_empty() {
        return Err(HawkesError::validation("posterior draws are empty"));
    }
    Ok(())
}

/// Residual increments of the superposed process for every draw.
pub fn rtct_increments(data: &Dataset, draws: &PosteriorDraws, quad: &QuadratureSpec) -> Result<RtctResult> {
    draws_or_error(draws)?;
    let per_draw: Vec<Result<Vec<f64>>> = draws
        .draws
        .par_iter()
        .map(|p| superposed_increments(data, p, quad))
        .collect();
    RtctResult::from_increments(per_draw.into_iter().collect::<Result<_>>()?)
}

/// Residual increments of each mark's own process for every draw.
pub fn rtct_per_mark(data: &Dataset, draws: &PosteriorDraws, quad: &QuadratureSpec) -> Result<Vec<RtctResult>> {
    draws_or_error(draws)?;
    let per_draw: Vec<Result<Vec<Vec<f64>>>> = draws
        .draws
        .par_iter()
        .map(|p| per_mark_increments(data, p, quad))
        .collect();
    let per_draw: Vec<Vec<Vec<f64>>> = per_draw.into_iter().collect::<Result<_>>()?;
    (0..data.mark_count())
        .map(|k| RtctResult::from_increments(per_draw.iter().map(|d| d[k].clone()).collect()))
        .collect()
}

/// Mean squared distance between posterior-mean ordered increments and
/// Exp(1) quantiles.
pub fn qq_msd(result: &RtctResult) -> f64 {
    if result.is_empty() {
        return 0.0;
    }
    result
        .mean
        .iter()
        .zip(&result.theoretical)
        .map(|(m, q)| (m - q) * (m - q))
        .sum::<f64>()
        / result.len() as f64
}

/// One-sample Kolmogorov–Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
}

/// KS test of `sample` against Exp(1), asymptotic p-value with the
/// small-sample correction `(√n + 0.12 + 0.11/√n)·D`.
pub fn ks_exp1(sample: &[f64]) -> Result<KsTest> {
    if sample.is_empty() {
        return Err(HawkesError::validation("KS test of an empty sample"));
    }
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d = 0.0f64;
    for (i, x) in s.iter().enumerate() {
        let f = -(-x.max(0.0)).exp_m1();
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let sq = n.sqrt();
    let lambda = (sq + 0.12 + 0.11 / sq) * d;
    Ok(KsTest {
        statistic: d,
        p_value: kolmogorov_survival(lambda),
    })
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let j = j as f64;
        let term = (-2.0 * j * j * lambda * lambda).exp();
        sum += if j as i64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waic {
    /// `−2 (lppd − p_waic)`.
    pub waic: f64,
    pub lppd: f64,
    pub p_waic: f64,
}

/// WAIC from pointwise log-likelihood terms, `pointwise[b][i]` for draw `b`
/// and unit `i`.
pub fn waic(pointwise: &[Vec<f64>]) -> Result<Waic> {
    if pointwise.len() < 2 {
        return Err(HawkesError::validation("WAIC needs at least two draws"));
    }
    let n = pointwise[0].len();
    if pointwise.iter().any(|p| p.len() != n) {
        return Err(HawkesError::validation("draws disagree on the number of pointwise terms"));
    }
    let b = pointwise.len() as f64;
    let mut lppd = 0.0;
    let mut p_waic = 0.0;
    for i in 0..n {
        let mut max = f64::NEG_INFINITY;
        let mut mean = 0.0;
        for p in pointwise {
            max = max.max(p[i]);
            mean += p[i];
        }
        if !max.is_finite() {
            return Err(HawkesError::Numerical(format!("pointwise term {i} is not finite")));
        }
        mean /= b;
        let mut acc = 0.0;
        let mut var = 0.0;
        for p in pointwise {
            acc += (p[i] - max).exp();
            var += (p[i] - mean) * (p[i] - mean);
        }
        lppd += max + (acc / b).ln();
        p_waic += var / (b - 1.0);
    }
    Ok(Waic {
        waic: -2.0 * (lppd - p_waic),
        lppd,
        p_waic,
    })
}

/// Posterior summary of one expected count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountSummary {
    pub mean: f64,
    pub hpd: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkDecomposition {
    pub replicate: usize,
    pub mark: usize,
    pub observed: usize,
    pub background: CountSummary,
    pub excitation: CountSummary,
    pub total: CountSummary,
}

/// Subcompensators of every replicate and mark, per draw:
/// `out[b][d][k]`.
pub fn decomposition_draws(
    data: &Dataset,
    draws: &PosteriorDraws,
    quad: &QuadratureSpec,
) -> Result<Vec<Vec<Vec<SubCompensator>>>> {
    draws_or_error(draws)?;
    let out: Vec<Result<Vec<Vec<SubCompensator>>>> = draws
        .draws
        .par_iter()
        .map(|p| {
            data.replicates
                .iter()
                .enumerate()
                .map(|(d, rep)| {
                    let t = ReplicateTable::new(rep, d, p, quad)?;
                    Ok((0..p.mark_count()).map(|k| t.subcompensator(k, p)).collect())
                })
                .collect()
        })
        .collect();
    out.into_iter().collect()
}

fn summarize(values: &[f64]) -> Result<CountSummary> {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let hpd = if values.len() >= 2 {
        hpd_interval(values, 0.95)?
    } else {
        (mean, mean)
    };
    Ok(CountSummary { mean, hpd })
}

/// Posterior mean and 95% HPD of the expected background-driven and
/// excitation-driven counts per replicate and mark.
pub fn decomposition_report(data: &Dataset, draws: &PosteriorDraws, quad: &QuadratureSpec) -> Result<Vec<MarkDecomposition>> {
    let per = decomposition_draws(data, draws, quad)?;
    let mut out = Vec::new();
    for (d, rep) in data.replicates.iter().enumerate() {
        let counts = rep.events.counts_by_mark();
        for k in 0..data.mark_count() {
            let bg: Vec<f64> = per.iter().map(|b| b[d][k].background).collect();
            let ex: Vec<f64> = per.iter().map(|b| b[d][k].excitation).collect();
            let tot: Vec<f64> = per.iter().map(|b| b[d][k].total()).collect();
            out.push(MarkDecomposition {
                replicate: d,
                mark: k,
                observed: counts[k],
                background: summarize(&bg)?,
                excitation: summarize(&ex)?,
                total: summarize(&tot)?,
            });
        }
    }
    Ok(out)
}
