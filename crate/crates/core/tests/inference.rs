//! Sampler correctness: block ratios, bookkeeping and agreement with
//! grid-integrated posteriors on tiny problems.

use exinhawkes::inference::{
    gelman_rubin, initial_params, mean, run_chain, run_mcmc, McmcConfig, PriorSpec, Sampler,
};
use exinhawkes::likelihood::complete_data_log_likelihood;
use exinhawkes::model::{
    BackgroundLink, Dataset, EventSequence, ExInParams, Interaction, MarkedEvent, ModelVariant,
};
use exinhawkes::presets::{reference_default, reference_horizon};
use exinhawkes::quadrature::QuadratureSpec;
use exinhawkes::rng::stream;
use exinhawkes::simulate::{simulate, SimulationConfig};
use rand::Rng;

fn toy_data(n: usize, horizon: f64, k: usize, seed: u64) -> Dataset {
    let mut rng = stream(seed, 99);
    let mut times: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * horizon).collect();
    times.sort_by(f64::total_cmp);
    let events = times
        .into_iter()
        .enumerate()
        .map(|(i, t)| MarkedEvent::new(t, i % k))
        .collect();
    Dataset::single(EventSequence::new(events, horizon, k, 0).unwrap())
}

#[test]
fn beta_ratio_equals_complete_data_ratio() {
    let seq = simulate(&SimulationConfig::new(reference_default(), ModelVariant::ExcInh, 1500.0, 8)).unwrap();
    let data = Dataset::single(seq);
    let prior = PriorSpec::new(3);
    let config = McmcConfig::short(50, 10, 1, 4);
    let init = initial_params(&data, ModelVariant::ExcInh, BackgroundLink::Log).unwrap();
    let mut sampler = Sampler::new(&data, ModelVariant::ExcInh, &prior, &config, init).unwrap();
    let mut rng = stream(4, 0);
    for _ in 0..30 {
        sampler.sweep(&mut rng).unwrap();
    }
    let z = sampler.branching(0);
    let current = sampler.params().clone();
    let quad = QuadratureSpec::default();
    let base = complete_data_log_likelihood(&data.replicates[0], 0, &z, &current, &quad).unwrap();
    for k in 0..3 {
        for shift in [-0.3, 0.05, 0.4] {
            let proposal = vec![current.beta[0][k][0] + shift];
            let restricted = sampler.beta_log_ratio(0, k, &proposal);
            let mut moved = current.clone();
            moved.beta[0][k] = proposal;
            let full = complete_data_log_likelihood(&data.replicates[0], 0, &z, &moved, &quad).unwrap() - base;
            assert!((restricted - full).abs() < 1e-10, "mark {k}: {restricted} vs {full}");
        }
    }
}

#[test]
fn retained_draw_count_and_validity() {
    let data = toy_data(10, 20.0, 2, 1);
    let config = McmcConfig::short(200, 50, 3, 9);
    for variant in ModelVariant::ALL {
        let draws = run_mcmc(&data, variant, &PriorSpec::new(2), &config).unwrap();
        assert_eq!(draws.len(), (200 - 50) / 3);
        assert_eq!(draws.loglik.len(), draws.len());
        for p in &draws.draws {
            p.validate().unwrap();
            assert!(p.conforms_to(variant));
        }
    }
    let single = McmcConfig::short(200, 0, 1, 9);
    assert_eq!(run_mcmc(&data, ModelVariant::ExcInh, &PriorSpec::new(2), &single).unwrap().len(), 200);
}

#[test]
fn no_retained_draws_is_an_error() {
    let data = toy_data(10, 20.0, 1, 2);
    let config = McmcConfig::short(100, 100, 1, 1);
    assert!(run_mcmc(&data, ModelVariant::ExcInh, &PriorSpec::new(1), &config).is_err());
}

#[test]
fn pointwise_terms_sum_to_log_likelihood() {
    let data = toy_data(25, 40.0, 2, 3);
    let mut config = McmcConfig::short(60, 20, 1, 5);
    config.store_pointwise = true;
    let draws = run_mcmc(&data, ModelVariant::ExcInh, &PriorSpec::new(2), &config).unwrap();
    for (row, ll) in draws.pointwise.iter().zip(&draws.loglik) {
        assert_eq!(row.len(), 26);
        assert!((row.iter().sum::<f64>() - ll).abs() < 1e-8 * ll.abs().max(1.0));
    }
}

#[test]
fn chains_are_reproducible_and_distinct() {
    let data = toy_data(15, 30.0, 2, 4);
    let mut config = McmcConfig::short(120, 20, 1, 77);
    config.chain_count = 2;
    let a = run_mcmc(&data, ModelVariant::ExcInh, &PriorSpec::new(2), &config).unwrap();
    let b = run_mcmc(&data, ModelVariant::ExcInh, &PriorSpec::new(2), &config).unwrap();
    assert_eq!(a.loglik, b.loglik);
    assert_eq!(a.chain_count(), 2);
    let c0 = run_chain(&data, ModelVariant::ExcInh, &PriorSpec::new(2), &config, 0).unwrap();
    assert_eq!(&a.loglik[..c0.len()], &c0.loglik[..]);
    assert_ne!(a.loglik[..c0.len()], a.loglik[c0.len()..]);
}

/// Homogeneous Poisson data: the background posterior concentrates on the
/// observed rate.
#[test]
fn background_recovers_poisson_rate() {
    let horizon = 2000.0;
    let mut rng = stream(5, 0);
    let mut t = 0.0;
    let mut events = Vec::new();
    loop {
        t += -rng.random::<f64>().ln() / 0.5;
        if t >= horizon {
            break;
        }
        events.push(MarkedEvent::new(t, 0));
    }
    let n = events.len() as f64;
    let data = Dataset::single(EventSequence::new(events, horizon, 1, 0).unwrap());
    let draws = run_mcmc(&data, ModelVariant::ExcOnly, &PriorSpec::new(1), &McmcConfig::short(3000, 1000, 2, 3)).unwrap();
    let mu = mean(&draws.map(|p| p.background(0, 0, &[1.0])));
    let total = mean(&draws.map(|p| p.background(0, 0, &[1.0]) * horizon + p.alpha(0, 0) * n));
    assert!((total - n).abs() < 0.05 * n, "expected count {total} vs {n}");
    assert!(mu > 0.4 && mu <= 0.52, "μ = {mu}");
}

// Two events on (0, 5], one mark, decays fixed.
const T: f64 = 5.0;
const TIMES: [f64; 2] = [1.0, 1.4];
const ETA: f64 = 1.0;
const PHI: f64 = 1.5;

fn tiny_data() -> Dataset {
    let events = TIMES.iter().map(|&t| MarkedEvent::new(t, 0)).collect();
    Dataset::single(EventSequence::new(events, T, 1, 0).unwrap())
}

fn tiny_start(state: Interaction) -> ExInParams {
    let mut p = ExInParams::from_matrices(
        BackgroundLink::Log,
        &[vec![0.4]],
        vec![vec![0.5]],
        vec![vec![0.0]],
        vec![ETA],
        vec![PHI],
    )
    .unwrap();
    p.gamma_star.set(0, 0, 0.5);
    p.interaction.set(0, 0, state);
    p
}

fn normal_log_pdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (x - mean).powi(2) / var - 0.5 * (2.0 * std::f64::consts::PI * var).ln()
}

fn grid(lo: f64, hi: f64, n: usize) -> (Vec<f64>, f64) {
    let h = (hi - lo) / n as f64;
    ((0..n).map(|i| lo + (i as f64 + 0.5) * h).collect(), h)
}

/// `∫_0^T exp(−γ Σ_i e^{−(t−t_i)/φ}) dt`, Simpson's rule per inter-event piece.
fn inhibited_integral(gamma: f64) -> f64 {
    let h = |t: f64| {
        (-gamma
            * TIMES
                .iter()
                .filter(|&&s| s < t)
                .map(|&s| (-(t - s) / PHI).exp())
                .sum::<f64>())
        .exp()
    };
    let mut knots = vec![0.0];
    knots.extend(TIMES);
    knots.push(T);
    let mut total = 0.0;
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let n = 400;
        let step = (b - a) / n as f64;
        // Nudge the left end so the event itself counts.
        let f = |i: usize| h(a + i as f64 * step + if i == 0 { 1e-12 } else { 0.0 });
        let mut s = f(0) + f(n);
        for i in 1..n {
            s += f(i) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        total += s * step / 3.0;
    }
    total
}

fn log_lik_exc(mu: f64, alpha: f64) -> f64 {
    let g = alpha / ETA * (-(TIMES[1] - TIMES[0]) / ETA).exp();
    let comp = mu * T + alpha * TIMES.iter().map(|&s| 1.0 - (-(T - s) / ETA).exp()).sum::<f64>();
    mu.ln() + (mu + g).ln() - comp
}

fn log_lik_inh(mu: f64, gamma: f64, integral: f64) -> f64 {
    let h2 = -gamma * (-(TIMES[1] - TIMES[0]) / PHI).exp();
    mu.ln() + mu.ln() + h2 - mu * integral
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn tiny_config(iterations: usize, seed: u64, indicators: bool) -> McmcConfig {
    let mut c = McmcConfig::short(iterations, 5_000, 1, seed);
    c.update_decays = false;
    c.update_indicators = indicators;
    c.adaptation_window = 5_000;
    c
}

#[test]
fn alpha_marginal_matches_grid_posterior() {
    let data = tiny_data();
    let prior = PriorSpec::new(1);
    let mut config = tiny_config(400_000, 17, false);
    config.initial = Some(tiny_start(Interaction::Excitatory));
    let draws = run_mcmc(&data, ModelVariant::ExcOnly, &prior, &config).unwrap();
    let alpha = draws.map(|p| p.alpha(0, 0));

    let (betas, _) = grid(-12.0, 5.0, 800);
    let (log_as, dz) = grid(-7.0, 5.0, 2400);
    let mut log_post: Vec<f64> = log_as
        .iter()
        .map(|&z| {
            let a = z.exp();
            let terms: Vec<f64> = betas
                .iter()
                .map(|&b| log_lik_exc(b.exp(), a) + normal_log_pdf(b, 0.0, prior.beta_variance))
                .collect();
            log_sum_exp(&terms) + normal_log_pdf(z, prior.slab_mean, prior.slab_sd.powi(2))
        })
        .collect();
    let norm = log_sum_exp(&log_post);
    for v in log_post.iter_mut() {
        *v = (*v - norm).exp();
    }
    let _ = dz;

    // 50 equal-mass bins of the grid posterior.
    let bins = 50;
    let mut edges = Vec::new();
    let mut acc = 0.0;
    for (z, w) in log_as.iter().zip(&log_post) {
        acc += w;
        if edges.len() < bins - 1 && acc >= (edges.len() + 1) as f64 / bins as f64 {
            edges.push(z.exp());
        }
    }
    let mut counts = vec![0usize; bins];
    for a in &alpha {
        counts[edges.partition_point(|e| e < a)] += 1;
    }
    let tv: f64 = counts
        .iter()
        .map(|&c| (c as f64 / alpha.len() as f64 - 1.0 / bins as f64).abs())
        .sum::<f64>()
        / 2.0;
    assert!(tv < 0.05, "total variation {tv}");
}

#[test]
fn indicator_frequencies_match_model_probabilities() {
    let data = tiny_data();
    let prior = PriorSpec::new(1);
    let mut config = tiny_config(300_000, 23, true);
    config.initial = Some(tiny_start(Interaction::Absent));
    let draws = run_mcmc(&data, ModelVariant::ExcInh, &prior, &config).unwrap();

    let (betas, db) = grid(-12.0, 5.0, 800);
    let (zs, dz) = grid(-7.0, 5.0, 1200);
    let beta_prior: Vec<f64> = betas.iter().map(|&b| normal_log_pdf(b, 0.0, prior.beta_variance)).collect();
    let slab: Vec<f64> = zs
        .iter()
        .map(|&z| normal_log_pdf(z, prior.slab_mean, prior.slab_sd.powi(2)))
        .collect();
    let absent: Vec<f64> = betas
        .iter()
        .zip(&beta_prior)
        .map(|(&b, lp)| 2.0 * b - b.exp() * T + lp + db.ln())
        .collect();
    let mut exc = Vec::new();
    let mut inh = Vec::new();
    for (&z, ls) in zs.iter().zip(&slab) {
        let x = z.exp();
        let integral = inhibited_integral(x);
        for (&b, lp) in betas.iter().zip(&beta_prior) {
            let w = lp + ls + db.ln() + dz.ln();
            exc.push(log_lik_exc(b.exp(), x) + w);
            inh.push(log_lik_inh(b.exp(), x, integral) + w);
        }
    }
    // Equal prior weight on the three states at p = π = 1/2.
    let m = [log_sum_exp(&absent), log_sum_exp(&exc), log_sum_exp(&inh)];
    let total = log_sum_exp(&m);
    let expected: Vec<f64> = m.iter().map(|x| (x - total).exp()).collect();
    let observed = [
        draws.state_probability(0, 0, Interaction::Absent),
        draws.state_probability(0, 0, Interaction::Excitatory),
        draws.state_probability(0, 0, Interaction::Inhibitory),
    ];
    for (o, e) in observed.iter().zip(&expected) {
        assert!((o - e).abs() < 0.02, "observed {observed:?} expected {expected:?}");
    }
}

#[test]
fn two_chains_agree_on_reference_data() {
    let variant = ModelVariant::ExcInh;
    let seq = simulate(&SimulationConfig::new(reference_default(), variant, reference_horizon(variant), 31)).unwrap();
    let data = Dataset::single(seq);
    let mut config = McmcConfig::short(1_500, 750, 1, 31);
    config.chain_count = 2;
    let draws = run_mcmc(&data, variant, &PriorSpec::new(3), &config).unwrap();
    let r = gelman_rubin(&draws.chain_values(&draws.loglik)).unwrap();
    assert!(r < 1.1, "Gelman-Rubin {r}");
}
