use crate::error::{HawkesError, Result};
use crate::inference::{AcceptanceReport, PosteriorDraws};
use crate::model::{BackgroundLink, ExInParams, Interaction, ModelVariant, PairMatrix};
use std::path::Path;

/// Column names of the flattened parameter vector (1-based indices).
pub fn column_names(mark_count: usize, replicate_count: usize, dim: usize) -> Vec<String> {
    let mut c = Vec::new();
    for d in 1..=replicate_count {
        for k in 1..=mark_count {
            for j in 1..=dim {
                c.push(format!("beta.{d}.{k}.{j}"));
            }
        }
    }
    for prefix in ["alpha_star", "inc_alpha", "gamma_star", "inc_gamma"] {
        for l in 1..=mark_count {
            for k in 1..=mark_count {
                c.push(format!("{prefix}.{l}.{k}"));
            }
        }
    }
    for l in 1..=mark_count {
        c.push(format!("eta.{l}"));
    }
    for l in 1..=mark_count {
        c.push(format!("phi.{l}"));
    }
    c
}

pub fn flatten(p: &ExInParams) -> Vec<f64> {
    let k = p.mark_count();
    let mut v: Vec<f64> = p.beta.iter().flatten().flatten().copied().collect();
    let pairs: Vec<(usize, usize)> = p.alpha_star.pairs().collect();
    v.extend(pairs.iter().map(|&(l, t)| *p.alpha_star.get(l, t)));
    v.extend(pairs.iter().map(|&(l, t)| p.include_alpha(l, t) as u8 as f64));
    v.extend(pairs.iter().map(|&(l, t)| *p.gamma_star.get(l, t)));
    v.extend(pairs.iter().map(|&(l, t)| p.include_gamma(l, t) as u8 as f64));
    v.extend(&p.eta[..k]);
    v.extend(&p.phi[..k]);
    v
}

pub fn unflatten(v: &[f64], mark_count: usize, replicate_count: usize, dim: usize, link: BackgroundLink) -> Result<ExInParams> {
    let k = mark_count;
    let expected = replicate_count * k * dim + 4 * k * k + 2 * k;
    if v.len() != expected {
        return Err(HawkesError::validation(format!("expected {expected} values, found {}", v.len())));
    }
    let mut it = v.iter().copied();
    let mut beta = vec![vec![vec![0.0; dim]; k]; replicate_count];
    for b in beta.iter_mut().flatten().flatten() {
        *b = it.next().unwrap();
    }
    let mut block = || -> Vec<f64> { (0..k * k).map(|_| it.next().unwrap()).collect() };
    let (a, ia, g, ig) = (block(), block(), block(), block());
    let mut interaction = PairMatrix::filled(k, Interaction::Absent);
    let mut alpha_star = PairMatrix::filled(k, 0.0);
    let mut gamma_star = PairMatrix::filled(k, 0.0);
    for l in 0..k {
        for t in 0..k {
            let i = l * k + t;
            interaction.set(l, t, Interaction::from_indicators(ia[i] != 0.0, ig[i] != 0.0)?);
            alpha_star.set(l, t, a[i]);
            gamma_star.set(l, t, g[i]);
        }
    }
    let eta: Vec<f64> = (0..k).map(|_| it.next().unwrap()).collect();
    let phi: Vec<f64> = (0..k).map(|_| it.next().unwrap()).collect();
    let p = ExInParams {
        link,
        beta,
        alpha_star,
        gamma_star,
        interaction,
        eta,
        phi,
    };
    p.validate()?;
    Ok(p)
}

/// One row per draw: `chain`, every flattened parameter, `loglik`.
pub fn write_draws(path: impl AsRef<Path>, draws: &PosteriorDraws) -> Result<()> {
    let path = path.as_ref();
    let first = draws
        .draws
        .first()
        .ok_or_else(|| HawkesError::validation("no draws to write"))?;
    let mut w = csv::Writer::from_path(path).map_err(|e| HawkesError::io(path, e.into()))?;
    let io = |e: csv::Error| HawkesError::io(path, e.into());
    let mut header = vec!["chain".to_string()];
    header.extend(column_names(first.mark_count(), first.replicate_count(), first.covariate_dim()));
    header.push("loglik".into());
    w.write_record(&header).map_err(io)?;
    for ((p, ll), c) in draws.draws.iter().zip(&draws.loglik).zip(&draws.chain) {
        let mut row = vec![(c + 1).to_string()];
        row.extend(flatten(p).into_iter().map(super::fmt_f64));
        row.push(super::fmt_f64(*ll));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| HawkesError::io(path, e))
}

/// Read draws written by [`write_draws`]. Pointwise terms and acceptance
/// counts are not stored and come back empty.
pub fn read_draws(path: impl AsRef<Path>, variant: ModelVariant, link: BackgroundLink) -> Result<PosteriorDraws> {
    let path = path.as_ref();
    let perr = |line: u64, message: String| HawkesError::Parse {
        path: path.display().to_string(),
        line: line as usize,
        message,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| HawkesError::io(path, e.into()))?;
    let headers = rdr.headers().map_err(|e| perr(1, e.to_string()))?.clone();
    let names: Vec<&str> = headers.iter().collect();
    if names.first() != Some(&"chain") || names.last() != Some(&"loglik") {
        return Err(perr(1, "expected `chain` first and `loglik` last".into()));
    }
    let k = names.iter().filter(|n| n.starts_with("eta.")).count();
    let dim = names
        .iter()
        .filter(|n| n.starts_with("beta.1.1."))
        .count();
    let d_count = names.iter().filter(|n| n.starts_with("beta.")).count() / (k * dim).max(1);
    if names[1..names.len() - 1] != column_names(k, d_count, dim)[..] {
        return Err(perr(1, "unexpected column layout".into()));
    }
    let mut out = PosteriorDraws {
        variant,
        draws: Vec::new(),
        loglik: Vec::new(),
        pointwise: Vec::new(),
        chain: Vec::new(),
        acceptance: Vec::new(),
    };
    for rec in rdr.records() {
        let rec = rec.map_err(|e| perr(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| perr(line, format!("{s:?} is not a number"))))
            .collect::<Result<_>>()?;
        let chain = vals[0] as usize;
        if chain == 0 {
            return Err(perr(line, "chains are numbered from 1".into()));
        }
        out.chain.push(chain - 1);
        out.loglik.push(*vals.last().unwrap());
        out.draws.push(unflatten(&vals[1..vals.len() - 1], k, d_count, dim, link)?);
    }
    if out.draws.is_empty() {
        return Err(perr(2, "no draws".into()));
    }
    let chains = out.chain.iter().max().map_or(0, |c| c + 1);
    out.acceptance = vec![AcceptanceReport::default(); chains];
    Ok(out)
}
