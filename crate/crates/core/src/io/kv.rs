use crate::error::{HawkesError, Result};
use crate::model::{BackgroundLink, ExInParams, Interaction, PairMatrix};
use std::collections::BTreeMap;

/// Parse `key=value` lines; `#` starts a comment, blank lines are skipped,
/// repeated keys are an error.
pub fn parse_kv(text: &str, origin: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| HawkesError::Parse {
            path: origin.to_string(),
            line: i + 1,
            message: format!("expected key=value, found {line:?}"),
        })?;
        let key = k.trim().to_string();
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(HawkesError::Parse {
                path: origin.to_string(),
                line: i + 1,
                message: format!("duplicate key {key:?}"),
            });
        }
    }
    Ok(out)
}

/// Render sorted `key=value` lines.
pub fn render_kv(map: &BTreeMap<String, String>) -> String {
    map.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

fn state_name(s: Interaction) -> &'static str {
    match s {
        Interaction::Absent => "absent",
        Interaction::Excitatory => "excitatory",
        Interaction::Inhibitory => "inhibitory",
    }
}

fn parse_state(s: &str) -> Result<Interaction> {
    match s {
        "absent" => Ok(Interaction::Absent),
        "excitatory" => Ok(Interaction::Excitatory),
        "inhibitory" => Ok(Interaction::Inhibitory),
        other => Err(HawkesError::validation(format!("unknown pair state {other:?}"))),
    }
}

/// Flat key-value form of a parameter set. Indices are 1-based.
pub fn params_to_kv(p: &ExInParams) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    let k = p.mark_count();
    m.insert("marks".into(), k.to_string());
    m.insert("replicates".into(), p.replicate_count().to_string());
    m.insert("covariate_dim".into(), p.covariate_dim().to_string());
    m.insert("link".into(), p.link.name().to_string());
    for (d, rep) in p.beta.iter().enumerate() {
        for (mk, b) in rep.iter().enumerate() {
            for (j, v) in b.iter().enumerate() {
                m.insert(format!("beta.{}.{}.{}", d + 1, mk + 1, j + 1), super::fmt_f64(*v));
            }
        }
    }
    for (l, t) in p.alpha_star.pairs() {
        let key = |name: &str| format!("{name}.{}.{}", l + 1, t + 1);
        m.insert(key("state"), state_name(*p.interaction.get(l, t)).into());
        m.insert(key("alpha_star"), super::fmt_f64(*p.alpha_star.get(l, t)));
        m.insert(key("gamma_star"), super::fmt_f64(*p.gamma_star.get(l, t)));
    }
    for l in 0..k {
        m.insert(format!("eta.{}", l + 1), super::fmt_f64(p.eta[l]));
        m.insert(format!("phi.{}", l + 1), super::fmt_f64(p.phi[l]));
    }
    m
}

pub fn params_to_string(p: &ExInParams) -> String {
    render_kv(&params_to_kv(p))
}

fn get<'a>(m: &'a BTreeMap<String, String>, key: &str) -> Result<&'a str> {
    m.get(key)
        .map(String::as_str)
        .ok_or_else(|| HawkesError::validation(format!("missing key {key:?}")))
}

fn num<T: std::str::FromStr>(m: &BTreeMap<String, String>, key: &str) -> Result<T> {
    let v = get(m, key)?;
    v.parse()
        .map_err(|_| HawkesError::validation(format!("key {key:?}: cannot parse {v:?}")))
}

pub fn params_from_kv(m: &BTreeMap<String, String>) -> Result<ExInParams> {
    let k: usize = num(m, "marks")?;
    let d_count: usize = num(m, "replicates")?;
    let dim: usize = num(m, "covariate_dim")?;
    let link = BackgroundLink::parse(get(m, "link")?)?;
    let mut beta = vec![vec![vec![0.0; dim]; k]; d_count];
    for (d, rep) in beta.iter_mut().enumerate() {
        for (mk, b) in rep.iter_mut().enumerate() {
            for (j, v) in b.iter_mut().enumerate() {
                *v = num(m, &format!("beta.{}.{}.{}", d + 1, mk + 1, j + 1))?;
            }
        }
    }
    let mut interaction = PairMatrix::filled(k, Interaction::Absent);
    let mut alpha_star = PairMatrix::filled(k, 0.0);
    let mut gamma_star = PairMatrix::filled(k, 0.0);
    for l in 0..k {
        for t in 0..k {
            let key = |name: &str| format!("{name}.{}.{}", l + 1, t + 1);
            interaction.set(l, t, parse_state(get(m, &key("state"))?)?);
            alpha_star.set(l, t, num(m, &key("alpha_star"))?);
            gamma_star.set(l, t, num(m, &key("gamma_star"))?);
        }
    }
    let eta = (0..k).map(|l| num(m, &format!("eta.{}", l + 1))).collect::<Result<_>>()?;
    let phi = (0..k).map(|l| num(m, &format!("phi.{}", l + 1))).collect::<Result<_>>()?;
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

pub fn params_from_str(text: &str, origin: &str) -> Result<ExInParams> {
    params_from_kv(&parse_kv(text, origin)?)
}

pub fn read_params(path: impl AsRef<std::path::Path>) -> Result<ExInParams> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| HawkesError::io(path, e))?;
    params_from_str(&text, &path.display().to_string())
}

pub fn write_params(path: impl AsRef<std::path::Path>, p: &ExInParams) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, params_to_string(p)).map_err(|e| HawkesError::io(path, e))
}
