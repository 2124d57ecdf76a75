//! Fit the full model to data simulated from the reference configuration and
//! print posterior means, 95% HPD intervals and inclusion probabilities.
//!
//! ```text
//! cargo run --release --example fit_posterior -- [iterations] [seed]
//! ```

use exinhawkes::inference::{hpd_interval, mean, run_mcmc, Block, McmcConfig, PriorSpec};
use exinhawkes::model::{Dataset, Interaction, ModelVariant};
use exinhawkes::presets::{reference_default, reference_horizon};
use exinhawkes::simulate::{simulate, SimulationConfig};

fn main() -> exinhawkes::Result<()> {
    let mut args = std::env::args().skip(1);
    let iterations: usize = args.next().map(|s| s.parse().expect("iterations")).unwrap_or(4_000);
    let seed: u64 = args.next().map(|s| s.parse().expect("seed")).unwrap_or(1);

    let truth = reference_default();
    let variant = ModelVariant::ExcInh;
    let seq = simulate(&SimulationConfig::new(truth.clone(), variant, reference_horizon(variant), seed))?;
    println!("simulated {} events, by mark {:?}", seq.len(), seq.counts_by_mark());
    let data = Dataset::single(seq);

    let config = McmcConfig::short(iterations, iterations / 2, 5, seed);
    let start = std::time::Instant::now();
    let draws = run_mcmc(&data, variant, &PriorSpec::new(3), &config)?;
    println!("{} draws in {:.1?}", draws.len(), start.elapsed());
    let acc = draws.acceptance_total();
    for b in Block::ALL {
        if let Some(r) = acc.rate(b) {
            println!("  acceptance {:<11} {r:.3}", b.name());
        }
    }

    println!("\npair     true     P(exc)  P(inh)  mean α   mean γ");
    for l in 0..3 {
        for k in 0..3 {
            let a = draws.map(|p| p.alpha(l, k));
            let g = draws.map(|p| p.gamma(l, k));
            println!(
                "({},{})  α={:.2} γ={:.2}  {:.2}    {:.2}    {:.3}    {:.3}",
                l + 1,
                k + 1,
                truth.alpha(l, k),
                truth.gamma(l, k),
                draws.state_probability(l, k, Interaction::Excitatory),
                draws.state_probability(l, k, Interaction::Inhibitory),
                mean(&a),
                mean(&g),
            );
        }
    }
    for l in 0..3 {
        let eta = draws.map(|p| p.eta[l]);
        let phi = draws.map(|p| p.phi[l]);
        let (elo, ehi) = hpd_interval(&eta, 0.95)?;
        let (plo, phi_hi) = hpd_interval(&phi, 0.95)?;
        println!(
            "η{} true {:6.2}  mean {:7.2}  HPD ({:.2}, {:.2})   φ{} true {:6.2}  mean {:7.2}  HPD ({:.2}, {:.2})",
            l + 1,
            truth.eta[l],
            mean(&eta),
            elo,
            ehi,
            l + 1,
            truth.phi[l],
            mean(&phi),
            plo,
            phi_hi
        );
    }
    for k in 0..3 {
        let mu = draws.map(|p| p.beta[0][k][0].exp());
        println!("μ{} true {:.4}  mean {:.4}", k + 1, truth.beta[0][k][0].exp(), mean(&mu));
    }
    println!("mean log-likelihood {:.1}", mean(&draws.loglik));
    Ok(())
}
