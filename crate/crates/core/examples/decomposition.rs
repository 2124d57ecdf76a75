//! Split each mark's expected count into background-driven and
//! excitation-driven parts, per posterior draw.
//!
//! ```text
//! cargo run --release --example decomposition -- [iterations] [seed]
//! ```

use exinhawkes::diagnostics::decomposition_report;
use exinhawkes::inference::{run_mcmc, McmcConfig, PriorSpec};
use exinhawkes::model::{Dataset, ModelVariant};
use exinhawkes::presets::{reference_default, reference_horizon};
use exinhawkes::simulate::{simulate, SimulationConfig};

fn main() -> exinhawkes::Result<()> {
    let mut args = std::env::args().skip(1);
    let iterations: usize = args.next().map(|s| s.parse().expect("iterations")).unwrap_or(2_000);
    let seed: u64 = args.next().map(|s| s.parse().expect("seed")).unwrap_or(5);

    let variant = ModelVariant::ExcInh;
    let seq = simulate(&SimulationConfig::new(reference_default(), variant, reference_horizon(variant), seed))?;
    let data = Dataset::single(seq);
    let config = McmcConfig::short(iterations, iterations / 2, 5, seed);
    let draws = run_mcmc(&data, variant, &PriorSpec::new(3), &config)?;

    println!("mark  observed   E[N_bg] (95% HPD)            E[N_exc] (95% HPD)");
    for r in decomposition_report(&data, &draws, &config.quad)? {
        println!(
            "{:4}  {:8}   {:8.1} ({:7.1}, {:7.1})   {:8.1} ({:7.1}, {:7.1})",
            r.mark + 1,
            r.observed,
            r.background.mean,
            r.background.hpd.0,
            r.background.hpd.1,
            r.excitation.mean,
            r.excitation.hpd.0,
            r.excitation.hpd.1,
        );
    }
    Ok(())
}
