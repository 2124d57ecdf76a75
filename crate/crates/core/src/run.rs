//! Reproducible workflows: one [`RunConfig`] in, artifacts and a manifest out.

use crate::baselines::{sl_fit, sl_simulate, SelfLimitingParams, SlFitConfig};
use crate::diagnostics::{decomposition_report, qq_msd, rtct_increments, rtct_per_mark, waic};
use crate::error::{HawkesError, Result};
use crate::inference::{gelman_rubin, hpd_interval, mean, run_mcmc, Block, McmcConfig, PosteriorDraws, PriorSpec};
use crate::io::{self, fmt_f64, EventData, Labels, Manifest};
use crate::likelihood::ReplicateTable;
use crate::model::{
    BackgroundLink, CovariateTrack, Dataset, EventSequence, ExInParams, Interaction, ModelVariant, PairMatrix,
    Replicate,
};
use crate::presets;
use crate::quadrature::{QuadratureScheme, QuadratureSpec};
use crate::simulate::simulate_replicates;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Environment variable read by the command-line tool for the thread count.
pub const THREADS_ENV: &str = "EXINHAWKES_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Fit,
    Assess,
    Decompose,
    Report,
    BaselineSl,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Fit => "fit",
            Command::Assess => "assess",
            Command::Decompose => "decompose",
            Command::Report => "report",
            Command::BaselineSl => "baseline-sl",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "simulate" => Command::Simulate,
            "fit" => Command::Fit,
            "assess" => Command::Assess,
            "decompose" => Command::Decompose,
            "report" => Command::Report,
            "baseline-sl" => Command::BaselineSl,
            other => return Err(HawkesError::validation(format!("unknown command {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlVerb {
    Simulate,
    Fit,
}

/// Scalar prior settings; inclusion probabilities apply to every pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSettings {
    pub beta_variance: f64,
    pub slab_mean: f64,
    pub slab_sd: f64,
    pub decay_mean: f64,
    pub decay_sd: f64,
    pub inclusion_alpha: f64,
    pub inclusion_gamma: f64,
}

impl Default for PriorSettings {
    fn default() -> Self {
        let p = PriorSpec::new(1);
        PriorSettings {
            beta_variance: p.beta_variance,
            slab_mean: p.slab_mean,
            slab_sd: p.slab_sd,
            decay_mean: p.decay_mean,
            decay_sd: p.decay_sd,
            inclusion_alpha: *p.inclusion_alpha.get(0, 0),
            inclusion_gamma: *p.inclusion_gamma.get(0, 0),
        }
    }
}

impl PriorSettings {
    pub fn spec(&self, mark_count: usize) -> PriorSpec {
        PriorSpec {
            beta_variance: self.beta_variance,
            slab_mean: self.slab_mean,
            slab_sd: self.slab_sd,
            decay_mean: self.decay_mean,
            decay_sd: self.decay_sd,
            inclusion_alpha: PairMatrix::filled(mark_count, self.inclusion_alpha),
            inclusion_gamma: PairMatrix::filled(mark_count, self.inclusion_gamma),
        }
    }
}

/// Everything a run needs. Serializes to a flat dotted key-value document.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub variant: ModelVariant,
    pub events: Option<PathBuf>,
    /// One track for all replicates or one per replicate.
    pub covariates: Vec<PathBuf>,
    pub params: Option<PathBuf>,
    /// Posterior draws consumed by `assess`, `decompose` and `report`;
    /// defaults to `posterior.csv` in the output directory.
    pub draws: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub output: PathBuf,
    pub seed: u64,
    /// 0 lets the thread pool pick.
    pub threads: usize,
    /// Observation windows: simulation lengths, or ingest overrides.
    pub horizons: Vec<f64>,
    pub replicates: usize,
    pub prior: PriorSettings,
    pub mcmc: McmcConfig,
    pub dump_params: bool,
    pub sl_verb: SlVerb,
    pub sl_params: SelfLimitingParams,
    pub sl_fixed_gamma: Option<f64>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            variant: ModelVariant::ExcInh,
            events: None,
            covariates: Vec::new(),
            params: None,
            draws: None,
            labels: None,
            output: PathBuf::from("."),
            seed: 0,
            threads: 0,
            horizons: Vec::new(),
            replicates: 1,
            prior: PriorSettings::default(),
            mcmc: McmcConfig {
                store_pointwise: false,
                ..McmcConfig::default()
            },
            dump_params: false,
            sl_verb: SlVerb::Simulate,
            sl_params: presets::self_limiting_strong(),
            sl_fixed_gamma: None,
        }
    }

    pub fn to_kv(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        put("command", self.command.name().into());
        put("variant", self.variant.name().into());
        put("events", path(&self.events));
        put(
            "covariates",
            self.covariates.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(";"),
        );
        put("params", path(&self.params));
        put("draws", path(&self.draws));
        put("labels", path(&self.labels));
        put("output", self.output.display().to_string());
        put("seed", self.seed.to_string());
        put("threads", self.threads.to_string());
        put("horizon", self.horizons.iter().map(f64::to_string).collect::<Vec<_>>().join(";"));
        put("replicates", self.replicates.to_string());
        let p = &self.prior;
        put("prior.beta_variance", p.beta_variance.to_string());
        put("prior.slab_mean", p.slab_mean.to_string());
        put("prior.slab_sd", p.slab_sd.to_string());
        put("prior.decay_mean", p.decay_mean.to_string());
        put("prior.decay_sd", p.decay_sd.to_string());
        put("prior.inclusion_alpha", p.inclusion_alpha.to_string());
        put("prior.inclusion_gamma", p.inclusion_gamma.to_string());
        let c = &self.mcmc;
        put("mcmc.iterations", c.iterations.to_string());
        put("mcmc.burn_in", c.burn_in.to_string());
        put("mcmc.thin", c.thin.to_string());
        put("mcmc.chains", c.chain_count.to_string());
        put("mcmc.adaptation_window", c.adaptation_window.to_string());
        put("mcmc.target_acceptance", c.target_acceptance.to_string());
        put("mcmc.link", c.link.name().into());
        put("mcmc.scale.beta", c.scales.beta.to_string());
        put("mcmc.scale.alpha", c.scales.alpha.to_string());
        put("mcmc.scale.gamma", c.scales.gamma.to_string());
        put("mcmc.scale.eta", c.scales.eta.to_string());
        put("mcmc.scale.phi", c.scales.phi.to_string());
        let q = &c.quad;
        put("quad.scheme", q.scheme.name().into());
        put("quad.gauss_order", q.gauss_order.to_string());
        put("quad.subdivisions", q.subdivisions_per_interval.to_string());
        put("quad.first_panel", q.first_panel.map(|x| x.to_string()).unwrap_or_default());
        put("quad.closed_form", q.closed_form_uninhibited.to_string());
        put("report.dump_params", self.dump_params.to_string());
        put(
            "sl.verb",
            match self.sl_verb {
                SlVerb::Simulate => "simulate",
                SlVerb::Fit => "fit",
            }
            .into(),
        );
        let s = &self.sl_params;
        put("sl.mu", s.mu.to_string());
        put("sl.alpha", s.alpha.to_string());
        put("sl.eta", s.eta.to_string());
        put("sl.gamma", s.gamma.to_string());
        put("sl.phi", s.phi_window.to_string());
        put("sl.fixed_gamma", self.sl_fixed_gamma.map(|x| x.to_string()).unwrap_or_default());
        m
    }

    /// Build from key-value pairs. A manifest is accepted as-is: its
    /// `config.` keys are read and its bookkeeping keys are skipped.
    pub fn from_kv(m: &BTreeMap<String, String>) -> Result<Self> {
        let cmd = m
            .get("command")
            .or_else(|| m.get("config.command"))
            .ok_or_else(|| HawkesError::validation("missing key \"command\""))?;
        let mut cfg = RunConfig::new(Command::parse(cmd)?);
        for (key, value) in m {
            if ["manifest.", "input.", "output."].iter().any(|p| key.starts_with(p)) {
                continue;
            }
            cfg.set(key.strip_prefix("config.").unwrap_or(key), value)?;
        }
        Ok(cfg)
    }

    /// Apply one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| HawkesError::validation(format!("{key}: cannot parse {v:?}")))
        }
        fn opt_path(v: &str) -> Option<PathBuf> {
            (!v.is_empty()).then(|| PathBuf::from(v))
        }
        fn opt_num(key: &str, v: &str) -> Result<Option<f64>> {
            if v.is_empty() {
                Ok(None)
            } else {
                num(key, v).map(Some)
            }
        }
        let v = value.trim();
        match key {
            "command" => self.command = Command::parse(v)?,
            "variant" => self.variant = ModelVariant::parse(v)?,
            "events" => self.events = opt_path(v),
            "covariates" => self.covariates = v.split(';').filter(|s| !s.is_empty()).map(PathBuf::from).collect(),
            "params" => self.params = opt_path(v),
            "draws" => self.draws = opt_path(v),
            "labels" => self.labels = opt_path(v),
            "output" => self.output = PathBuf::from(v),
            "seed" => self.seed = num(key, v)?,
            "threads" => self.threads = num(key, v)?,
            "horizon" => {
                self.horizons = v
                    .split(';')
                    .filter(|s| !s.is_empty())
                    .map(|s| num(key, s))
                    .collect::<Result<_>>()?
            }
            "replicates" => self.replicates = num(key, v)?,
            "prior.beta_variance" => self.prior.beta_variance = num(key, v)?,
            "prior.slab_mean" => self.prior.slab_mean = num(key, v)?,
            "prior.slab_sd" => self.prior.slab_sd = num(key, v)?,
            "prior.decay_mean" => self.prior.decay_mean = num(key, v)?,
            "prior.decay_sd" => self.prior.decay_sd = num(key, v)?,
            "prior.inclusion_alpha" => self.prior.inclusion_alpha = num(key, v)?,
            "prior.inclusion_gamma" => self.prior.inclusion_gamma = num(key, v)?,
            "mcmc.iterations" => self.mcmc.iterations = num(key, v)?,
            "mcmc.burn_in" => self.mcmc.burn_in = num(key, v)?,
            "mcmc.thin" => self.mcmc.thin = num(key, v)?,
            "mcmc.chains" => self.mcmc.chain_count = num(key, v)?,
            "mcmc.adaptation_window" => self.mcmc.adaptation_window = num(key, v)?,
            "mcmc.target_acceptance" => self.mcmc.target_acceptance = num(key, v)?,
            "mcmc.link" => self.mcmc.link = BackgroundLink::parse(v)?,
            "mcmc.scale.beta" => self.mcmc.scales.beta = num(key, v)?,
            "mcmc.scale.alpha" => self.mcmc.scales.alpha = num(key, v)?,
            "mcmc.scale.gamma" => self.mcmc.scales.gamma = num(key, v)?,
            "mcmc.scale.eta" => self.mcmc.scales.eta = num(key, v)?,
            "mcmc.scale.phi" => self.mcmc.scales.phi = num(key, v)?,
            "quad.scheme" => self.mcmc.quad.scheme = QuadratureScheme::parse(v)?,
            "quad.gauss_order" => self.mcmc.quad.gauss_order = num(key, v)?,
            "quad.subdivisions" => self.mcmc.quad.subdivisions_per_interval = num(key, v)?,
            "quad.first_panel" => self.mcmc.quad.first_panel = opt_num(key, v)?,
            "quad.closed_form" => self.mcmc.quad.closed_form_uninhibited = num(key, v)?,
            "report.dump_params" => self.dump_params = num(key, v)?,
            "sl.verb" => {
                self.sl_verb = match v {
                    "simulate" => SlVerb::Simulate,
                    "fit" => SlVerb::Fit,
                    other => return Err(HawkesError::validation(format!("unknown baseline-sl verb {other:?}"))),
                }
            }
            "sl.mu" => self.sl_params.mu = num(key, v)?,
            "sl.alpha" => self.sl_params.alpha = num(key, v)?,
            "sl.eta" => self.sl_params.eta = num(key, v)?,
            "sl.gamma" => self.sl_params.gamma = num(key, v)?,
            "sl.phi" => self.sl_params.phi_window = num(key, v)?,
            "sl.fixed_gamma" => self.sl_fixed_gamma = opt_num(key, v)?,
            other => return Err(HawkesError::validation(format!("unknown configuration key {other:?}"))),
        }
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HawkesError::io(path, e))?;
        Self::from_kv(&io::parse_kv(&text, &path.display().to_string())?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, io::render_kv(&self.to_kv())).map_err(|e| HawkesError::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        for p in self.events.iter().chain(&self.covariates).chain(&self.params).chain(&self.labels) {
            if !p.is_file() {
                return Err(HawkesError::validation(format!("input file {} does not exist", p.display())));
            }
        }
        if self.replicates == 0 {
            return Err(HawkesError::validation("replicates must be at least 1"));
        }
        self.mcmc.quad.validate()?;
        Ok(())
    }

    fn mcmc_config(&self) -> McmcConfig {
        McmcConfig {
            seed: self.seed,
            ..self.mcmc.clone()
        }
    }

    fn draws_path(&self) -> PathBuf {
        self.draws.clone().unwrap_or_else(|| self.output.join("posterior.csv"))
    }
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub outputs: Vec<PathBuf>,
    pub manifest: PathBuf,
    /// One-line human summary.
    pub message: String,
}

struct Artifacts {
    dir: PathBuf,
    written: Vec<PathBuf>,
    inputs: Vec<PathBuf>,
}

impl Artifacts {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let p = self.path(name);
        std::fs::write(&p, body).map_err(|e| HawkesError::io(&p, e))
    }
}

/// Execute a configuration in a thread pool of `config.threads` workers.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    std::fs::create_dir_all(&config.output).map_err(|e| HawkesError::io(&config.output, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| HawkesError::validation(format!("thread pool: {e}")))?;
    let mut art = Artifacts {
        dir: config.output.clone(),
        written: Vec::new(),
        inputs: Vec::new(),
    };
    let message = pool.install(|| match config.command {
        Command::Simulate => cmd_simulate(config, &mut art),
        Command::Fit => cmd_fit(config, &mut art),
        Command::Assess => cmd_assess(config, &mut art),
        Command::Decompose => cmd_decompose(config, &mut art),
        Command::Report => cmd_report(config, &mut art),
        Command::BaselineSl => match config.sl_verb {
            SlVerb::Simulate => cmd_sl_simulate(config, &mut art),
            SlVerb::Fit => cmd_sl_fit(config, &mut art),
        },
    })?;

    let digest = |p: &PathBuf| -> Result<(String, String)> { Ok((p.display().to_string(), io::file_digest(p)?)) };
    let manifest = Manifest {
        command: config.command.name().to_string(),
        seed: config.seed,
        config: config.to_kv(),
        inputs: art.inputs.iter().map(digest).collect::<Result<_>>()?,
        outputs: art.written.iter().map(digest).collect::<Result<_>>()?,
    };
    let name = match config.command {
        Command::BaselineSl => match config.sl_verb {
            SlVerb::Simulate => "manifest-baseline-sl-simulate.txt".to_string(),
            SlVerb::Fit => "manifest-baseline-sl-fit.txt".to_string(),
        },
        c => format!("manifest-{}.txt", c.name()),
    };
    let manifest_path = config.output.join(name);
    manifest.write(&manifest_path)?;
    Ok(RunOutcome {
        outputs: art.written,
        manifest: manifest_path,
        message,
    })
}

fn load_data(config: &RunConfig, art: &mut Artifacts) -> Result<(Dataset, Labels)> {
    let path = config
        .events
        .as_ref()
        .ok_or_else(|| HawkesError::validation("an events file is required"))?;
    art.inputs.push(path.clone());
    let EventData {
        sequences, labels, ..
    } = io::ingest_events(path, &config.horizons)?;
    let tracks: Vec<CovariateTrack> = match config.covariates.len() {
        0 => {
            let reps = sequences.into_iter().map(Replicate::constant).collect();
            return Ok((Dataset::new(reps)?, labels));
        }
        1 => {
            art.inputs.push(config.covariates[0].clone());
            let (t, _) = io::ingest_covariates(&config.covariates[0], None)?;
            vec![t; sequences.len()]
        }
        n if n == sequences.len() => config
            .covariates
            .iter()
            .map(|p| {
                art.inputs.push(p.clone());
                io::ingest_covariates(p, None).map(|(t, _)| t)
            })
            .collect::<Result<_>>()?,
        n => {
            return Err(HawkesError::validation(format!(
                "{n} covariate files for {} replicates",
                sequences.len()
            )))
        }
    };
    let reps = sequences
        .into_iter()
        .zip(tracks)
        .map(|(s, t)| Replicate::new(s, t))
        .collect::<Result<Vec<_>>>()?;
    Ok((Dataset::new(reps)?, labels))
}

fn load_draws(config: &RunConfig, art: &mut Artifacts) -> Result<PosteriorDraws> {
    let path = config.draws_path();
    art.inputs.push(path.clone());
    io::read_draws(&path, config.variant, config.mcmc.link)
}

fn load_labels(config: &RunConfig, art: &mut Artifacts, mark_count: usize, replicate_count: usize) -> Result<Labels> {
    let path = config
        .labels
        .clone()
        .or_else(|| Some(config.draws_path().with_file_name("labels.txt")).filter(|p| p.is_file()));
    match path {
        Some(p) => {
            art.inputs.push(p.clone());
            let l = Labels::read(&p)?;
            if l.marks.len() != mark_count || l.replicates.len() != replicate_count {
                return Err(HawkesError::validation(format!("labels in {} do not match the draws", p.display())));
            }
            Ok(l)
        }
        None => Ok(Labels::numeric(mark_count, replicate_count)),
    }
}

fn cmd_simulate(config: &RunConfig, art: &mut Artifacts) -> Result<String> {
    let params = match &config.params {
        Some(p) => {
            art.inputs.push(p.clone());
            io::read_params(p)?
        }
        None => presets::reference_truth(&vec![presets::REFERENCE_BACKGROUND.to_vec(); config.replicates])?,
    }
    .restricted(config.variant);
    let d = params.replicate_count();
    let horizons: Vec<f64> = match config.horizons.len() {
        0 => vec![presets::reference_horizon(config.variant); d],
        1 => vec![config.horizons[0]; d],
        n if n == d => config.horizons.clone(),
        n => return Err(HawkesError::validation(format!("{n} horizons for {d} replicates"))),
    };
    let covs: Vec<CovariateTrack> = match config.covariates.len() {
        0 => horizons.iter().map(|_| CovariateTrack::intercept_only()).collect(),
        1 => {
            art.inputs.push(config.covariates[0].clone());
            let (t, _) = io::ingest_covariates(&config.covariates[0], None)?;
            vec![t; d]
        }
        _ => config
            .covariates
            .iter()
            .map(|p| {
                art.inputs.push(p.clone());
                io::ingest_covariates(p, None).map(|(t, _)| t)
            })
            .collect::<Result<_>>()?,
    };
    let seqs = simulate_replicates(&params, config.variant, &horizons, &covs, config.seed)?;
    let labels = Labels::numeric(params.mark_count(), d);
    io::write_events(art.path("events.csv"), &seqs, &labels)?;
    let n: usize = seqs.iter().map(EventSequence::len).sum();
    Ok(format!("simulated {n} events in {d} replicate(s)"))
}

fn render_acceptance(draws: &PosteriorDraws) -> String {
    let mut m = BTreeMap::new();
    let blocks = [Block::Beta, Block::AlphaEta, Block::GammaPhi, Block::Indicators];
    for (c, rep) in draws.acceptance.iter().enumerate() {
        for b in blocks {
            m.insert(format!("chain.{}.{}.accepted", c + 1, b.name()), rep.accepted(b).to_string());
            m.insert(format!("chain.{}.{}.proposed", c + 1, b.name()), rep.proposed(b).to_string());
            if let Some(r) = rep.rate(b) {
                m.insert(format!("chain.{}.{}.rate", c + 1, b.name()), fmt_f64(r));
            }
        }
    }
    if draws.chain_count() > 1 {
        if let Ok(r) = gelman_rubin(&draws.chain_values(&draws.loglik)) {
            m.insert("gelman_rubin.loglik".into(), fmt_f64(r));
        }
    }
    io::render_kv(&m)
}

fn cmd_fit(config: &RunConfig, art: &mut Artifacts) -> Result<String> {
    let (data, labels) = load_data(config, art)?;
    let prior = config.prior.spec(data.mark_count());
    let mut mcmc = config.mcmc_config();
    if let Some(p) = &config.params {
        art.inputs.push(p.clone());
        mcmc.initial = Some(io::read_params(p)?);
    }
    let draws = run_mcmc(&data, config.variant, &prior, &mcmc)?;
    io::write_draws(art.path("posterior.csv"), &draws)?;
    art.text("acceptance.txt", &render_acceptance(&draws))?;
    labels.write(art.path("labels.txt"))?;
    Ok(format!(
        "{} draws from {} chain(s) on {} events",
        draws.len(),
        draws.chain_count(),
        data.event_count()
    ))
}

/// Per-event log-likelihood terms of every draw, in replicate order.
pub fn pointwise_from_draws(data: &Dataset, draws: &PosteriorDraws, quad: &QuadratureSpec) -> Result<Vec<Vec<f64>>> {
    let out: Vec<Result<Vec<f64>>> = draws
        .draws
        .par_iter()
        .map(|p| {
            let mut row = Vec::new();
            for (d, rep) in data.replicates.iter().enumerate() {
                row.extend(ReplicateTable::new(rep, d, p, quad)?.pointwise_log_likelihood(p));
            }
            Ok(row)
        })
        .collect();
    out.into_iter().collect()
}

fn cmd_assess(config: &RunConfig, art: &mut Artifacts) -> Result<String> {
    let (data, labels) = load_data(config, art)?;
    let draws = load_draws(config, art)?;
    let quad = &config.mcmc.quad;
    let rtct = rtct_increments(&data, &draws, quad)?;
    let mut qq = String::from("theoretical,mean,lower,upper\n");
    for i in 0..rtct.len() {
        let _ = writeln!(
            qq,
            "{},{},{},{}",
            fmt_f64(rtct.theoretical[i]),
            fmt_f64(rtct.mean[i]),
            fmt_f64(rtct.lower[i]),
            fmt_f64(rtct.upper[i])
        );
    }
    art.text("qq.csv", &qq)?;
    let msd = qq_msd(&rtct);
    let mut msd_doc = BTreeMap::new();
    msd_doc.insert("msd".to_string(), fmt_f64(msd));
    for (k, r) in rtct_per_mark(&data, &draws, quad)?.iter().enumerate() {
        if !r.is_empty() {
            msd_doc.insert(format!("msd.mark.{}", labels.mark(k)), fmt_f64(qq_msd(r)));
        }
    }
    art.text("msd.txt", &io::render_kv(&msd_doc))?;
    let w = waic(&pointwise_from_draws(&data, &draws, quad)?)?;
    let mut waic_doc = BTreeMap::new();
    waic_doc.insert("waic".to_string(), fmt_f64(w.waic));
    waic_doc.insert("lppd".to_string(), fmt_f64(w.lppd));
    waic_doc.insert("p_waic".to_string(), fmt_f64(w.p_waic));
    art.text("waic.txt", &io::render_kv(&waic_doc))?;
    Ok(format!("MSD {msd:.4}, WAIC {:.2}", w.waic))
}

fn cmd_decompose(config: &RunConfig, art: &mut Artifacts) -> Result<String> {
    let (data, labels) = load_data(config, art)?;
    let draws = load_draws(config, art)?;
    let report = decomposition_report(&data, &draws, &config.mcmc.quad)?;
    let mut out = String::from(
        "replicate,mark,observed,background_mean,background_lower,background_upper,\
         excitation_mean,excitation_lower,excitation_upper,total_mean,total_lower,total_upper\n",
    );
    for r in &report {
        let _ = write!(out, "{},{},{}", labels.replicates[r.replicate], labels.mark(r.mark), r.observed);
        for s in [&r.background, &r.excitation, &r.total] {
            let _ = write!(out, ",{},{},{}", fmt_f64(s.mean), fmt_f64(s.hpd.0), fmt_f64(s.hpd.1));
        }
        out.push('\n');
    }
    art.text("decomposition.csv", &out)?;
    Ok(format!("decomposed {} replicate-mark cells", report.len()))
}

/// Posterior-mean parameters with each pair in its most probable state.
pub fn posterior_point_estimate(draws: &PosteriorDraws) -> Result<ExInParams> {
    let first = draws
        .draws
        .first()
        .ok_or_else(|| HawkesError::validation("no draws"))?;
    let n = draws.len() as f64;
    let mut out = first.clone();
    for (d, rep) in out.beta.iter_mut().enumerate() {
        for (k, b) in rep.iter_mut().enumerate() {
            for (j, v) in b.iter_mut().enumerate() {
                *v = draws.draws.iter().map(|p| p.beta[d][k][j]).sum::<f64>() / n;
            }
        }
    }
    for (l, k) in first.alpha_star.pairs() {
        out.alpha_star.set(l, k, mean(&draws.map(|p| *p.alpha_star.get(l, k))));
        out.gamma_star.set(l, k, mean(&draws.map(|p| *p.gamma_star.get(l, k))));
        let state = [Interaction::Absent, Interaction::Excitatory, Interaction::Inhibitory]
            .into_iter()
            .map(|s| (s, draws.state_probability(l, k, s)))
            .fold((Interaction::Absent, -1.0), |best, c| if c.1 > best.1 { c } else { best })
            .0;
        out.interaction.set(l, k, state);
    }
    for l in 0..first.mark_count() {
        out.eta[l] = mean(&draws.map(|p| p.eta[l]));
        out.phi[l] = mean(&draws.map(|p| p.phi[l]));
    }
    out.validate()?;
    Ok(out)
}

/// Table of posterior means and 95% HPD intervals.
pub fn render_report(draws: &PosteriorDraws, labels: &Labels) -> Result<String> {
    let first = draws
        .draws
        .first()
        .ok_or_else(|| HawkesError::validation("no draws"))?;
    let mut rows: Vec<(String, Vec<f64>, Option<f64>)> = Vec::new();
    let dim = first.covariate_dim();
    for d in 0..first.replicate_count() {
        for k in 0..first.mark_count() {
            for j in 0..dim {
                let v = draws.map(|p| p.beta[d][k][j]);
                let name = if dim == 1 {
                    format!("beta[{},{}]", labels.replicates[d], labels.mark(k))
                } else {
                    format!("beta[{},{},{}]", labels.replicates[d], labels.mark(k), j + 1)
                };
                rows.push((name, v, None));
            }
        }
    }
    let variant = draws.variant;
    for (l, k) in first.alpha_star.pairs() {
        if variant.allows(Interaction::Excitatory) {
            rows.push((
                format!("alpha[{},{}]", labels.mark(l), labels.mark(k)),
                draws.map(|p| p.alpha(l, k)),
                Some(draws.state_probability(l, k, Interaction::Excitatory)),
            ));
        }
    }
    for (l, k) in first.alpha_star.pairs() {
        if variant.allows(Interaction::Inhibitory) {
            rows.push((
                format!("gamma[{},{}]", labels.mark(l), labels.mark(k)),
                draws.map(|p| p.gamma(l, k)),
                Some(draws.state_probability(l, k, Interaction::Inhibitory)),
            ));
        }
    }
    for l in 0..first.mark_count() {
        if variant.allows(Interaction::Excitatory) {
            rows.push((format!("eta[{}]", labels.mark(l)), draws.map(|p| p.eta[l]), None));
        }
    }
    for l in 0..first.mark_count() {
        if variant.allows(Interaction::Inhibitory) {
            rows.push((format!("phi[{}]", labels.mark(l)), draws.map(|p| p.phi[l]), None));
        }
    }
    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(9).max(9);
    let mut out = format!(
        "Posterior mean estimates and 95% HPD intervals\nvariant {}, {} draws, {} chain(s)\n\n",
        variant.name(),
        draws.len(),
        draws.chain_count()
    );
    let _ = writeln!(out, "{:<width$}  {:>10}  {:>23}  {:>9}", "parameter", "mean", "95% HPD", "P(state)");
    for (name, v, prob) in rows {
        let (lo, hi) = if v.len() >= 2 { hpd_interval(&v, 0.95)? } else { (v[0], v[0]) };
        let prob = prob.map(|p| format!("{p:.3}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:<width$}  {:>10.4}  {:>23}  {:>9}",
            name,
            mean(&v),
            format!("({lo:.4}, {hi:.4})"),
            prob
        );
    }
    let ll = &draws.loglik;
    let _ = writeln!(out, "\nmean log-likelihood {:.3}", mean(ll));
    Ok(out)
}

fn cmd_report(config: &RunConfig, art: &mut Artifacts) -> Result<String> {
    let draws = load_draws(config, art)?;
    let first = &draws.draws[0];
    let labels = load_labels(config, art, first.mark_count(), first.replicate_count())?;
    art.text("report.txt", &render_report(&draws, &labels)?)?;
    if config.dump_params {
        io::write_params(art.path("params.txt"), &posterior_point_estimate(&draws)?)?;
    }
    Ok(format!("reported {} draws", draws.len()))
}

fn cmd_sl_simulate(config: &RunConfig, art: &mut Artifacts) -> Result<String> {
    let horizon = config.horizons.first().copied().unwrap_or(1000.0);
    let times = sl_simulate(&config.sl_params, horizon, config.seed)?;
    let events = times
        .iter()
        .map(|&t| crate::model::MarkedEvent { time: t, mark: 0 })
        .collect();
    let seq = EventSequence::new(events, horizon, 1, 0)?;
    io::write_events(art.path("events.csv"), &[seq], &Labels::numeric(1, 1))?;
    Ok(format!("simulated {} self-limiting events", times.len()))
}

fn cmd_sl_fit(config: &RunConfig, art: &mut Artifacts) -> Result<String> {
    let (data, _) = load_data(config, art)?;
    if data.mark_count() != 1 || data.replicates.len() != 1 {
        return Err(HawkesError::validation("the self-limiting model needs one mark and one replicate"));
    }
    let seq = &data.replicates[0].events;
    let times: Vec<f64> = seq.times().collect();
    let c = &config.mcmc;
    let fit_cfg = SlFitConfig {
        iterations: c.iterations,
        burn_in: c.burn_in,
        thin: c.thin,
        seed: config.seed,
        adaptation_window: c.adaptation_window,
        target_acceptance: c.target_acceptance,
        fixed_gamma: config.sl_fixed_gamma,
        ..SlFitConfig::default()
    };
    let post = sl_fit(&times, seq.horizon(), &config.prior.spec(1), &fit_cfg)?;
    let mut csv = String::new();
    let _ = writeln!(csv, "{},loglik", SelfLimitingParams::NAMES.join(","));
    for (p, ll) in post.draws.iter().zip(&post.loglik) {
        let vals: Vec<String> = p.to_array().iter().map(|&x| fmt_f64(x)).collect();
        let _ = writeln!(csv, "{},{}", vals.join(","), fmt_f64(*ll));
    }
    art.text("sl_posterior.csv", &csv)?;
    let mut summary = String::from("Posterior mean estimates and 95% HPD intervals (self-limiting)\n\n");
    for (i, name) in SelfLimitingParams::NAMES.iter().enumerate() {
        let v = post.values(i);
        let (lo, hi) = hpd_interval(&v, 0.95)?;
        let _ = writeln!(
            summary,
            "{name:<8}  {:>10.4}  ({lo:.4}, {hi:.4})  acceptance {:.3}",
            mean(&v),
            post.acceptance[i]
        );
    }
    art.text("sl_report.txt", &summary)?;
    Ok(format!("{} self-limiting draws", post.draws.len()))
}
