//! Compare the production log-likelihood with a brute-force Riemann sum on
//! short random sequences, and the uninhibited compensator with its closed
//! form.
//!
//! ```text
//! cargo run --release --example likelihood_oracle -- [sequences] [panels]
//! ```

use exinhawkes::likelihood::{compensator, log_likelihood};
use exinhawkes::model::{conditional_intensity, CovariateTrack, Dataset, ModelVariant};
use exinhawkes::presets::{reference_default, reference_truth};
use exinhawkes::quadrature::QuadratureSpec;
use exinhawkes::simulate::{simulate, SimulationConfig};

fn riemann(seq: &exinhawkes::model::EventSequence, p: &exinhawkes::model::ExInParams, panels: usize) -> f64 {
    let cov = CovariateTrack::intercept_only();
    let events = seq.events();
    let h = seq.horizon() / panels as f64;
    let mut integral = 0.0;
    let mut j = 0;
    for i in 0..panels {
        let t = (i as f64 + 0.5) * h;
        while j < events.len() && events[j].time < t {
            j += 1;
        }
        integral += (0..p.mark_count())
            .map(|k| conditional_intensity(t, k, 0, &events[..j], p, &cov).expect("covered"))
            .sum::<f64>()
            * h;
    }
    let log_terms: f64 = events
        .iter()
        .enumerate()
        .map(|(i, e)| conditional_intensity(e.time, e.mark, 0, &events[..i], p, &cov).expect("covered").ln())
        .sum();
    log_terms - integral
}

fn main() -> exinhawkes::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: u64 = args.next().map(|s| s.parse().expect("sequences")).unwrap_or(10);
    let panels: usize = args.next().map(|s| s.parse().expect("panels")).unwrap_or(1_000_000);

    // Raised backgrounds give a few events on a short window.
    let truth = reference_truth(&[vec![0.4, 0.2, 0.3]])?;
    let quad = QuadratureSpec::default();
    let mut seed = 0;
    for _ in 0..n {
        // Redraw until the sequence is short enough for the brute force.
        let seq = loop {
            seed += 1;
            let cfg = SimulationConfig::new(truth.clone(), ModelVariant::ExcInh, 12.0, seed).with_max_events(20);
            match simulate(&cfg) {
                Ok(s) if !s.is_empty() => break s,
                _ => continue,
            }
        };
        let data = Dataset::single(seq.clone());
        let fast = log_likelihood(&data, &truth, &quad)?;
        let slow = riemann(&seq, &truth, panels);
        println!(
            "seed {seed:2}  events {:2}  quadrature {fast:12.8}  riemann {slow:12.8}  rel {:.1e}",
            seq.len(),
            ((fast - slow) / slow).abs()
        );
    }

    // Closed-form compensator of an uninhibited mark.
    let p = reference_default().restricted(ModelVariant::ExcOnly);
    let seq = simulate(&SimulationConfig::new(p.clone(), ModelVariant::ExcOnly, 500.0, 7))?;
    let rep = exinhawkes::model::Replicate::constant(seq.clone());
    for k in 0..3 {
        let exact: f64 = p.background(0, k, &[1.0]) * seq.horizon()
            + seq
                .events()
                .iter()
                .map(|e| p.alpha(e.mark, k) * (1.0 - (-(seq.horizon() - e.time) / p.eta[e.mark]).exp()))
                .sum::<f64>();
        let q = compensator(0.0, seq.horizon(), k, &rep, 0, &p, &QuadratureSpec::default().quadrature_only())?;
        println!("mark {}  closed form {exact:.10}  quadrature {q:.10}  rel {:.1e}", k + 1, ((q - exact) / exact).abs());
    }
    Ok(())
}
