//! Simulate from one variant, fit all three, and compare MSD and WAIC.
//!
//! ```text
//! cargo run --release --example model_comparison -- [exc_inh|exc_only|inh_only] [iterations] [seed]
//! ```

use exinhawkes::diagnostics::{qq_msd, rtct_increments, waic};
use exinhawkes::inference::{run_mcmc, McmcConfig, PriorSpec};
use exinhawkes::model::{Dataset, ModelVariant};
use exinhawkes::presets::{reference_default, reference_horizon};
use exinhawkes::simulate::{simulate, SimulationConfig};

fn main() -> exinhawkes::Result<()> {
    let mut args = std::env::args().skip(1);
    let truth_variant = args.next().map(|s| ModelVariant::parse(&s)).transpose()?.unwrap_or(ModelVariant::ExcInh);
    let iterations: usize = args.next().map(|s| s.parse().expect("iterations")).unwrap_or(2_000);
    let seed: u64 = args.next().map(|s| s.parse().expect("seed")).unwrap_or(11);

    let truth = reference_default().restricted(truth_variant);
    let seq = simulate(&SimulationConfig::new(
        truth,
        truth_variant,
        reference_horizon(truth_variant),
        seed,
    ))?;
    println!("data from {}: {} events {:?}", truth_variant.name(), seq.len(), seq.counts_by_mark());
    let data = Dataset::single(seq);

    println!("\nfitted      MSD       WAIC");
    for variant in ModelVariant::ALL {
        let mut config = McmcConfig::short(iterations, iterations / 2, 5, seed);
        config.store_pointwise = true;
        let draws = run_mcmc(&data, variant, &PriorSpec::new(3), &config)?;
        let rtct = rtct_increments(&data, &draws, &config.quad)?;
        let w = waic(&draws.pointwise)?;
        println!("{:<9} {:8.4}  {:10.2}", variant.name(), qq_msd(&rtct), w.waic);
    }
    Ok(())
}
