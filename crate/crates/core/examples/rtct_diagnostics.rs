//! Time-rescaling residuals under the generating parameters, with a
//! Kolmogorov-Smirnov test against Exp(1), and the same test after doubling
//! every background rate.
//!
//! ```text
//! cargo run --release --example rtct_diagnostics -- [seeds]
//! ```

use exinhawkes::diagnostics::{ks_exp1, superposed_increments};
use exinhawkes::model::{Dataset, ModelVariant};
use exinhawkes::presets::{reference_default, reference_horizon};
use exinhawkes::quadrature::QuadratureSpec;
use exinhawkes::simulate::{simulate, SimulationConfig};

fn main() -> exinhawkes::Result<()> {
    let seeds: u64 = std::env::args().nth(1).map(|s| s.parse().expect("seeds")).unwrap_or(10);
    let truth = reference_default();
    let mut doubled = truth.clone();
    for b in doubled.beta.iter_mut().flatten() {
        b[0] += 2f64.ln();
    }
    let quad = QuadratureSpec::default();
    let variant = ModelVariant::ExcInh;
    let (mut pass, mut reject) = (0, 0);
    println!("seed  events   KS p (truth)   KS p (2μ)");
    for seed in 0..seeds {
        let seq = simulate(&SimulationConfig::new(truth.clone(), variant, reference_horizon(variant), seed))?;
        let data = Dataset::single(seq);
        let good = ks_exp1(&superposed_increments(&data, &truth, &quad)?)?;
        let bad = ks_exp1(&superposed_increments(&data, &doubled, &quad)?)?;
        pass += (good.p_value >= 0.01) as u32;
        reject += (bad.p_value < 0.01) as u32;
        println!("{seed:4}  {:6}   {:12.4}   {:9.2e}", data.event_count(), good.p_value, bad.p_value);
    }
    println!("truth passes at 1%: {pass}/{seeds}; doubled background rejected: {reject}/{seeds}");
    Ok(())
}
