//! Several recording days sharing interaction parameters but with their own
//! backgrounds: write them to a labelled CSV, ingest it back, and fit.
//!
//! ```text
//! cargo run --release --example replicated_days -- [iterations]
//! ```

use exinhawkes::inference::{mean, run_mcmc, McmcConfig, PriorSpec};
use exinhawkes::io::{ingest_events, write_events, Labels};
use exinhawkes::model::{CovariateTrack, Dataset, ModelVariant, Replicate};
use exinhawkes::presets::reference_truth;
use exinhawkes::simulate::simulate_replicates;

fn main() -> exinhawkes::Result<()> {
    let iterations: usize = std::env::args().nth(1).map(|s| s.parse().expect("iterations")).unwrap_or(1_000);
    let backgrounds = vec![vec![0.05, 0.004, 0.008], vec![0.03, 0.006, 0.01], vec![0.06, 0.003, 0.006]];
    let truth = reference_truth(&backgrounds)?;
    let horizons = [3000.0, 3000.0, 3000.0];
    let covs = vec![CovariateTrack::intercept_only(); 3];
    let seqs = simulate_replicates(&truth, ModelVariant::ExcInh, &horizons, &covs, 21)?;

    let labels = Labels {
        marks: vec!["cc".into(), "al".into(), "sn".into()],
        replicates: vec!["day1".into(), "day2".into(), "day3".into()],
    };
    let dir = std::env::temp_dir().join("exinhawkes-replicated-days");
    std::fs::create_dir_all(&dir).map_err(|e| exinhawkes::HawkesError::io(&dir, e))?;
    let path = dir.join("calls.csv");
    write_events(&path, &seqs, &labels)?;
    let back = ingest_events(&path, &horizons)?;
    for (d, s) in back.sequences.iter().enumerate() {
        println!("{}: {:?}", back.labels.replicates[d], s.counts_by_mark());
    }

    let data = Dataset::new(back.sequences.into_iter().map(Replicate::constant).collect())?;
    let config = McmcConfig::short(iterations, iterations / 2, 5, 21);
    let draws = run_mcmc(&data, ModelVariant::ExcInh, &PriorSpec::new(3), &config)?;
    // Ingested marks are numbered by first appearance, so map back by label.
    for (d, day) in back.labels.replicates.iter().enumerate() {
        for (k, mark) in back.labels.marks.iter().enumerate() {
            let original = labels.marks.iter().position(|m| m == mark).expect("known label");
            let mu = draws.map(|p| p.beta[d][k][0].exp());
            println!("μ[{day},{mark}] true {:.4} mean {:.4}", backgrounds[d][original], mean(&mu));
        }
    }
    Ok(())
}
