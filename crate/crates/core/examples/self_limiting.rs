//! Univariate self-limiting baseline: simulate under strong and weak
//! inhibition and check whether the posterior for α recovers 0.65.
//!
//! ```text
//! cargo run --release --example self_limiting -- [iterations] [seeds]
//! ```

use exinhawkes::baselines::{sl_fit, sl_simulate, SlFitConfig};
use exinhawkes::inference::{hpd_interval, mean, PriorSpec};
use exinhawkes::presets::{self_limiting_strong, self_limiting_weak};

fn main() -> exinhawkes::Result<()> {
    let mut args = std::env::args().skip(1);
    let iterations: usize = args.next().map(|s| s.parse().expect("iterations")).unwrap_or(4_000);
    let seeds: u64 = args.next().map(|s| s.parse().expect("seeds")).unwrap_or(3);
    let prior = PriorSpec::new(1);
    for (name, truth) in [("strong γ=0.3", self_limiting_strong()), ("weak γ=0.01", self_limiting_weak())] {
        println!("{name}");
        for seed in 0..seeds {
            let times = sl_simulate(&truth, 1000.0, seed)?;
            let config = SlFitConfig {
                iterations,
                burn_in: iterations / 2,
                seed,
                ..SlFitConfig::default()
            };
            let post = sl_fit(&times, 1000.0, &prior, &config)?;
            let alpha = post.values(1);
            let (lo, hi) = hpd_interval(&alpha, 0.95)?;
            println!(
                "  seed {seed}  events {:5}  α mean {:.3}  HPD ({lo:.3}, {hi:.3})  covers 0.65: {}",
                times.len(),
                mean(&alpha),
                lo <= 0.65 && 0.65 <= hi
            );
        }
    }
    Ok(())
}
