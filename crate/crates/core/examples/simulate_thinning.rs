//! Simulate the three model variants from the reference configuration and
//! report event counts per mark across a handful of seeds.
//!
//! ```text
//! cargo run --release --example simulate_thinning -- [horizon] [seeds]
//! ```

use exinhawkes::model::ModelVariant;
use exinhawkes::presets::reference_default;
use exinhawkes::simulate::{simulate, SimulationConfig};

fn main() -> exinhawkes::Result<()> {
    let mut args = std::env::args().skip(1);
    let horizon: f64 = args.next().map(|s| s.parse().expect("horizon")).unwrap_or(20_000.0);
    let seeds: u64 = args.next().map(|s| s.parse().expect("seeds")).unwrap_or(5);
    let params = reference_default();

    for variant in ModelVariant::ALL {
        println!("{variant} on (0, {horizon}]");
        let mut totals = Vec::new();
        for seed in 0..seeds {
            let seq = simulate(&SimulationConfig::new(params.clone(), variant, horizon, seed))?;
            let counts = seq.counts_by_mark();
            println!("  seed {seed}: {} events, by mark {:?}", seq.len(), counts);
            totals.push(seq.len() as f64);
        }
        let mean = totals.iter().sum::<f64>() / totals.len() as f64;
        println!("  mean count {mean:.1}");
    }
    Ok(())
}
