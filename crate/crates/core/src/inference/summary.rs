//! Posterior summaries: HPD intervals, quantiles, convergence and Monte
//! Carlo error.

use crate::error::{HawkesError, Result};

/// Shortest interval containing `⌈level·n⌉` of the sorted samples.
pub fn hpd_interval(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(HawkesError::validation("HPD interval needs at least two samples"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(HawkesError::validation(format!("HPD level must lie in (0, 1), got {level}")));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(HawkesError::validation("HPD interval of NaN samples"));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let m = ((level * n as f64).ceil() as usize).clamp(1, n);
    let mut best = (s[0], s[m - 1]);
    for i in 1..=n - m {
        if s[i + m - 1] - s[i] < best.1 - best.0 {
            best = (s[i], s[i + m - 1]);
        }
    }
    Ok(best)
}

/// Linear-interpolation quantile of an unsorted sample (type 7).
pub fn quantile(samples: &[f64], q: f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    sorted_quantile(&s, q)
}

pub(crate) fn sorted_quantile(s: &[f64], q: f64) -> f64 {
    if s.is_empty() {
        return f64::NAN;
    }
    let h = (s.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with denominator `n − 1`.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Potential scale reduction factor over equal-length chains.
pub fn gelman_rubin(chains: &[Vec<f64>]) -> Result<f64> {
    if chains.len() < 2 {
        return Err(HawkesError::validation("Gelman–Rubin needs at least two chains"));
    }
    let n = chains.iter().map(Vec::len).min().unwrap_or(0);
    if n < 2 {
        return Err(HawkesError::validation("Gelman–Rubin needs at least two draws per chain"));
    }
    let m = chains.len() as f64;
    let nf = n as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(&c[..n])).collect();
    let grand = mean(&means);
    let b = nf / (m - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let w = chains.iter().map(|c| variance(&c[..n])).sum::<f64>() / m;
    if w == 0.0 {
        return Ok(if b == 0.0 { 1.0 } else { f64::INFINITY });
    }
    let var_plus = (nf - 1.0) / nf * w + b / nf;
    Ok((var_plus / w).sqrt())
}

/// Monte Carlo standard error of the mean by non-overlapping batch means
/// with `⌊√n⌋` batches.
pub fn batch_means_mcse(x: &[f64]) -> f64 {
    let n = x.len();
    let batches = ((n as f64).sqrt().floor() as usize).max(2);
    let size = n / batches;
    if size < 1 {
        return f64::NAN;
    }
    let used = size * batches;
    let bm: Vec<f64> = x[..used].chunks(size).map(mean).collect();
    (variance(&bm) * size as f64 / used as f64).sqrt()
}
