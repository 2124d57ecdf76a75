//! Background rates driven by a piecewise-constant noise covariate through
//! the log link, read from a `time,value` CSV.
//!
//! ```text
//! cargo run --release --example covariate_background -- [iterations]
//! ```

use exinhawkes::inference::{hpd_interval, mean, run_mcmc, McmcConfig, PriorSpec};
use exinhawkes::io::ingest_covariates;
use exinhawkes::model::{BackgroundLink, Dataset, ExInParams, ModelVariant, Replicate};
use exinhawkes::simulate::{simulate, SimulationConfig};

fn main() -> exinhawkes::Result<()> {
    let iterations: usize = std::env::args().nth(1).map(|s| s.parse().expect("iterations")).unwrap_or(2_000);
    let horizon = 4000.0;

    // Noise alternates between quiet and loud every 500 time units.
    let mut csv = String::from("time,noise\n");
    for i in 0..8 {
        csv.push_str(&format!("{},{}\n", i as f64 * 500.0, (i % 2) as f64));
    }
    csv.push_str(&format!("{horizon},\n"));
    let path = std::env::temp_dir().join("exinhawkes-noise.csv");
    std::fs::write(&path, csv).map_err(|e| exinhawkes::HawkesError::io(&path, e))?;
    let (track, names) = ingest_covariates(&path, Some(horizon))?;
    println!("covariates {names:?}, {} segments", track.segment_count());

    // One mark with excitation; noise raises the background by a factor e^0.8.
    let mut truth = ExInParams::from_matrices(
        BackgroundLink::Log,
        &[vec![0.1]],
        vec![vec![0.5]],
        vec![vec![0.0]],
        vec![2.0],
        vec![1.0],
    )?;
    truth.beta[0][0] = vec![0.1f64.ln(), 0.8];
    let cfg = SimulationConfig::new(truth.clone(), ModelVariant::ExcOnly, horizon, 4).with_covariates(track.clone());
    let seq = simulate(&cfg)?;
    println!("{} events", seq.len());

    let data = Dataset::new(vec![Replicate::new(seq, track)?])?;
    let config = McmcConfig::short(iterations, iterations / 2, 2, 4);
    let draws = run_mcmc(&data, ModelVariant::ExcOnly, &PriorSpec::new(1), &config)?;
    for (j, name) in ["intercept", "noise"].iter().enumerate() {
        let b = draws.map(|p| p.beta[0][0][j]);
        let (lo, hi) = hpd_interval(&b, 0.95)?;
        println!("β[{name}] true {:.3} mean {:.3} HPD ({lo:.3}, {hi:.3})", truth.beta[0][0][j], mean(&b));
    }
    Ok(())
}
