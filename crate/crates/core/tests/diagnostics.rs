//! Residual, WAIC and decomposition diagnostics.

use exinhawkes::diagnostics::{
    decomposition_draws, ks_exp1, qq_msd, rtct_increments, superposed_increments, waic, RtctResult,
};
use exinhawkes::inference::{run_mcmc, McmcConfig, PosteriorDraws, PriorSpec};
use exinhawkes::likelihood::ReplicateTable;
use exinhawkes::model::{BackgroundLink, Dataset, EventSequence, ExInParams, MarkedEvent, ModelVariant};
use exinhawkes::presets::{reference_default, reference_horizon};
use exinhawkes::quadrature::QuadratureSpec;
use exinhawkes::rng::stream;
use exinhawkes::simulate::{simulate, SimulationConfig};
use rand::Rng;

fn poisson_params(rate: f64) -> ExInParams {
    ExInParams::from_matrices(BackgroundLink::Log, &[vec![rate]], vec![vec![0.0]], vec![vec![0.0]], vec![1.0], vec![1.0])
        .unwrap()
}

fn single_draw(p: &ExInParams, variant: ModelVariant) -> PosteriorDraws {
    PosteriorDraws {
        variant,
        draws: vec![p.clone()],
        loglik: vec![0.0],
        pointwise: Vec::new(),
        chain: vec![0],
        acceptance: Vec::new(),
    }
}

#[test]
fn poisson_increments_are_rate_times_gap() {
    let rate = 0.7;
    let mut rng = stream(12, 0);
    let mut times = Vec::new();
    let mut t = 0.0;
    while times.len() < 500 {
        t += rng.random::<f64>() * 3.0 + 1e-3;
        times.push(t);
    }
    let horizon = t + 1.0;
    let events = times.iter().map(|&t| MarkedEvent::new(t, 0)).collect();
    let data = Dataset::single(EventSequence::new(events, horizon, 1, 0).unwrap());
    for quad in [QuadratureSpec::default(), QuadratureSpec::default().quadrature_only(), QuadratureSpec::trapezoid(3)] {
        let inc = superposed_increments(&data, &poisson_params(rate), &quad).unwrap();
        assert_eq!(inc.len(), times.len());
        let mut prev = 0.0;
        for (d, &t) in inc.iter().zip(&times) {
            let exact = rate * (t - prev);
            assert!((d - exact).abs() <= 1e-12 * exact.max(1.0), "{d} vs {exact}");
            prev = t;
        }
    }
}

#[test]
fn ks_rejects_wrong_rate() {
    let mut rng = stream(4, 0);
    let sample: Vec<f64> = (0..2000).map(|_| -rng.random::<f64>().ln()).collect();
    assert!(ks_exp1(&sample).unwrap().p_value > 0.01);
    let scaled: Vec<f64> = sample.iter().map(|x| x * 1.3).collect();
    assert!(ks_exp1(&scaled).unwrap().p_value < 1e-6);
}

#[test]
fn simulated_data_rescale_to_unit_exponentials() {
    for variant in ModelVariant::ALL {
        let truth = reference_default().restricted(variant);
        let seq = simulate(&SimulationConfig::new(truth.clone(), variant, reference_horizon(variant), 2)).unwrap();
        let data = Dataset::single(seq);
        let inc = superposed_increments(&data, &truth, &QuadratureSpec::default()).unwrap();
        let ks = ks_exp1(&inc).unwrap();
        assert!(ks.p_value > 0.01, "{}: p = {}", variant.name(), ks.p_value);
    }
}

#[test]
fn pointwise_waic_terms_sum_to_log_likelihood() {
    let truth = reference_default();
    let seq = simulate(&SimulationConfig::new(truth.clone(), ModelVariant::ExcInh, 1000.0, 3)).unwrap();
    let data = Dataset::single(seq);
    let quad = QuadratureSpec::default();
    let table = ReplicateTable::new(&data.replicates[0], 0, &truth, &quad).unwrap();
    let pw = table.pointwise_log_likelihood(&truth);
    let ll = table.log_likelihood(&truth).unwrap();
    assert!((pw.iter().sum::<f64>() - ll).abs() < 1e-8 * ll.abs());
    // Identical draws: no variance penalty and lppd is the log-likelihood.
    let w = waic(&[pw.clone(), pw]).unwrap();
    assert!(w.p_waic.abs() < 1e-12);
    assert!((w.lppd - ll).abs() < 1e-8 * ll.abs());
    assert!((w.waic + 2.0 * ll).abs() < 1e-7 * ll.abs());
}

#[test]
fn background_and_excitation_sum_to_compensator() {
    let truth = reference_default();
    let seq = simulate(&SimulationConfig::new(truth.clone(), ModelVariant::ExcInh, 2000.0, 6)).unwrap();
    let data = Dataset::single(seq);
    let draws = run_mcmc(&data, ModelVariant::ExcInh, &PriorSpec::new(3), &McmcConfig::short(200, 100, 10, 6)).unwrap();
    let quad = QuadratureSpec::default();
    let per = decomposition_draws(&data, &draws, &quad).unwrap();
    for (p, cells) in draws.draws.iter().zip(&per) {
        let table = ReplicateTable::new(&data.replicates[0], 0, p, &quad).unwrap();
        for (k, s) in cells[0].iter().enumerate() {
            let total = table.compensator(k, p);
            assert!((s.total() - total).abs() <= 1e-12 * total);
        }
    }
}

#[test]
fn qq_band_brackets_the_mean() {
    let truth = reference_default();
    let seq = simulate(&SimulationConfig::new(truth, ModelVariant::ExcInh, 1500.0, 9)).unwrap();
    let data = Dataset::single(seq);
    let draws = run_mcmc(&data, ModelVariant::ExcInh, &PriorSpec::new(3), &McmcConfig::short(300, 150, 5, 9)).unwrap();
    let r = rtct_increments(&data, &draws, &QuadratureSpec::default()).unwrap();
    assert_eq!(r.len(), data.event_count());
    for i in 0..r.len() {
        assert!(r.lower[i] <= r.mean[i] + 1e-12 && r.mean[i] <= r.upper[i] + 1e-12);
    }
    assert!(r.theoretical.windows(2).all(|w| w[0] < w[1]));
    assert!(RtctResult::from_increments(Vec::new()).is_err());
}

/// Truth-parameter residual MSD beats the inhibition-only fit on every one
/// of 20 simulated datasets.
#[test]
fn generating_model_beats_inhibition_only_on_every_seed() {
    let truth = reference_default();
    let variant = ModelVariant::ExcInh;
    let quad = QuadratureSpec::default();
    let mut wins = 0;
    for seed in 0..20 {
        let seq = simulate(&SimulationConfig::new(truth.clone(), variant, 3000.0, 500 + seed)).unwrap();
        let data = Dataset::single(seq);
        let own = qq_msd(&rtct_increments(&data, &single_draw(&truth, variant), &quad).unwrap());
        let fit = run_mcmc(&data, ModelVariant::InhOnly, &PriorSpec::new(3), &McmcConfig::short(300, 150, 10, seed)).unwrap();
        let other = qq_msd(&rtct_increments(&data, &fit, &quad).unwrap());
        wins += (own < other) as u32;
    }
    // One-sided sign test: 20 of 20 has p = 2^-20.
    assert_eq!(wins, 20);
}
