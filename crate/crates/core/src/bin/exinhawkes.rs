use clap::{Args, Parser, Subcommand};
use exinhawkes::run::{run, RunConfig, THREADS_ENV};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

/// Multivariate Hawkes processes with excitation and inhibition.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Start from a config document or a manifest of an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Extra `key=value` settings, applied last.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to $EXINHAWKES_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Default)]
struct Common {
    /// exc_inh, exc_only or inh_only.
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    events: Option<PathBuf>,
    /// Covariate CSV; repeat once per replicate or give one for all.
    #[arg(long)]
    covariates: Vec<PathBuf>,
    /// Observation window end; repeat once per replicate or give one for all.
    #[arg(long)]
    horizon: Vec<f64>,
}

#[derive(Args, Default)]
struct Chain {
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate by thinning; writes events.csv.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Parameter file; defaults to the reference configuration.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// MCMC fit; writes posterior.csv, acceptance.txt and labels.txt.
    Fit {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        chain: Chain,
        #[arg(long)]
        chains: Option<usize>,
        /// Starting values.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Residual Q-Q table, MSD and WAIC.
    Assess {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        draws: Option<PathBuf>,
    },
    /// Background versus excitation expected counts.
    Decompose {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        draws: Option<PathBuf>,
    },
    /// Posterior means and 95% HPD intervals.
    Report {
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        draws: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Also write the posterior point estimate as params.txt.
        #[arg(long)]
        dump_params: bool,
    },
    /// Univariate self-limiting baseline.
    BaselineSl {
        #[command(subcommand)]
        verb: SlCmd,
    },
}

#[derive(Subcommand)]
enum SlCmd {
    Simulate {
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        phi: Option<f64>,
    },
    Fit {
        #[arg(long)]
        events: PathBuf,
        #[command(flatten)]
        chain: Chain,
        /// Hold gamma at this value.
        #[arg(long)]
        fixed_gamma: Option<f64>,
    },
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(";")
}

fn settings(cli: &Cli) -> Vec<(String, String)> {
    let mut s: Vec<(String, String)> = Vec::new();
    let mut put = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            s.push((k.to_string(), v));
        }
    };
    let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
    let common = |put: &mut dyn FnMut(&str, Option<String>), c: &Common| {
        put("variant", c.variant.clone());
        put("events", path(&c.events));
        if !c.covariates.is_empty() {
            put("covariates", Some(join(&c.covariates.iter().map(|p| p.display()).collect::<Vec<_>>())));
        }
        if !c.horizon.is_empty() {
            put("horizon", Some(join(&c.horizon)));
        }
    };
    let chain = |put: &mut dyn FnMut(&str, Option<String>), c: &Chain| {
        put("mcmc.iterations", c.iterations.map(|x| x.to_string()));
        put("mcmc.burn_in", c.burn_in.map(|x| x.to_string()));
        put("mcmc.thin", c.thin.map(|x| x.to_string()));
    };
    match &cli.command {
        Cmd::Simulate {
            common: c,
            params,
            replicates,
        } => {
            put("command", Some("simulate".into()));
            common(&mut put, c);
            put("params", path(params));
            put("replicates", replicates.map(|x| x.to_string()));
        }
        Cmd::Fit {
            common: c,
            chain: ch,
            chains,
            params,
        } => {
            put("command", Some("fit".into()));
            common(&mut put, c);
            chain(&mut put, ch);
            put("mcmc.chains", chains.map(|x| x.to_string()));
            put("params", path(params));
        }
        Cmd::Assess { common: c, draws } | Cmd::Decompose { common: c, draws } => {
            let name = if matches!(cli.command, Cmd::Assess { .. }) { "assess" } else { "decompose" };
            put("command", Some(name.into()));
            common(&mut put, c);
            put("draws", path(draws));
        }
        Cmd::Report {
            variant,
            draws,
            labels,
            dump_params,
        } => {
            put("command", Some("report".into()));
            put("variant", variant.clone());
            put("draws", path(draws));
            put("labels", path(labels));
            put("report.dump_params", Some(dump_params.to_string()));
        }
        Cmd::BaselineSl { verb } => {
            put("command", Some("baseline-sl".into()));
            match verb {
                SlCmd::Simulate {
                    horizon,
                    mu,
                    alpha,
                    eta,
                    gamma,
                    phi,
                } => {
                    put("sl.verb", Some("simulate".into()));
                    put("horizon", horizon.map(|x| x.to_string()));
                    for (k, v) in [("sl.mu", mu), ("sl.alpha", alpha), ("sl.eta", eta), ("sl.gamma", gamma), ("sl.phi", phi)] {
                        put(k, v.map(|x| x.to_string()));
                    }
                }
                SlCmd::Fit {
                    events,
                    chain: ch,
                    fixed_gamma,
                } => {
                    put("sl.verb", Some("fit".into()));
                    put("events", Some(events.display().to_string()));
                    chain(&mut put, ch);
                    put("sl.fixed_gamma", fixed_gamma.map(|x| x.to_string()));
                }
            }
        }
    }
    put("output", path(&cli.output));
    put("seed", cli.seed.map(|x| x.to_string()));
    let threads = cli.threads.map(|x| x.to_string()).or_else(|| std::env::var(THREADS_ENV).ok());
    put("threads", threads);
    s
}

fn build_config(cli: &Cli) -> exinhawkes::Result<RunConfig> {
    let mut doc = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| exinhawkes::HawkesError::io(p, e))?;
            exinhawkes::io::parse_kv(&text, &p.display().to_string())?
        }
        None => BTreeMap::new(),
    };
    // Flags name the command explicitly and win over the file.
    doc.retain(|k, _| k != "command");
    let (cmd, rest): (Vec<_>, Vec<_>) = settings(cli).into_iter().partition(|(k, _)| k == "command");
    doc.insert("config.command".into(), cmd[0].1.clone());
    let mut cfg = RunConfig::from_kv(&doc)?;
    for (k, v) in rest {
        cfg.set(&k, &v)?;
    }
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| exinhawkes::HawkesError::validation(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v)?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build_config(&cli).and_then(|cfg| run(&cfg));
    match result {
        Ok(outcome) => {
            println!("{}", outcome.message);
            for p in &outcome.outputs {
                println!("wrote {}", p.display());
            }
            println!("wrote {}", outcome.manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
