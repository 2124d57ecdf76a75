//! Likelihood engine against independent brute-force evaluations.

use exinhawkes::likelihood::{
    branching_conditional, complete_data_log_likelihood, compensator, log_likelihood,
    replicate_log_likelihood, subcompensators, BranchingAssignment, ReplicateTable,
};
use exinhawkes::model::{
    conditional_intensity, BackgroundLink, CovariateTrack, Dataset, EventSequence, ExInParams,
    MarkedEvent, ModelVariant, Replicate,
};
use exinhawkes::presets::reference_truth;
use exinhawkes::quadrature::QuadratureSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_sequence(rng: &mut ChaCha8Rng, n: usize, horizon: f64, k: usize) -> EventSequence {
    let mut times: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * horizon).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let events = times
        .into_iter()
        .map(|t| MarkedEvent::new(t, rng.random_range(0..k)))
        .collect();
    EventSequence::new(events, horizon, k, 0).unwrap()
}

/// Midpoint rule on a uniform grid, intensity evaluated from scratch.
fn brute_compensator(rep: &Replicate, params: &ExInParams, a: f64, b: f64, mark: usize, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let ev = rep.events.events();
    let mut total = 0.0;
    let mut hist = 0;
    for j in 0..panels {
        let t = a + (j as f64 + 0.5) * h;
        while hist < ev.len() && ev[hist].time < t {
            hist += 1;
        }
        total += conditional_intensity(t, mark, 0, &ev[..hist], params, &rep.covariates).unwrap();
    }
    total * h
}

fn brute_log_likelihood(rep: &Replicate, params: &ExInParams, panels: usize) -> f64 {
    let ev = rep.events.events();
    let mut ll = 0.0;
    for (i, e) in ev.iter().enumerate() {
        ll += conditional_intensity(e.time, e.mark, 0, &ev[..i], params, &rep.covariates)
            .unwrap()
            .ln();
    }
    for k in 0..params.mark_count() {
        ll -= brute_compensator(rep, params, 0.0, rep.events.horizon(), k, panels);
    }
    ll
}

fn truth() -> ExInParams {
    reference_truth(&[vec![0.3, 0.15, 0.25]]).unwrap()
}

#[test]
fn log_likelihood_matches_riemann_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p = truth();
    for _ in 0..4 {
        let seq = random_sequence(&mut rng, 15, 40.0, 3);
        let rep = Replicate::constant(seq);
        let brute = brute_log_likelihood(&rep, &p, 400_000);
        for quad in [QuadratureSpec::default(), QuadratureSpec::trapezoid(20)] {
            let ll = replicate_log_likelihood(&rep, 0, &p, &quad).unwrap();
            assert!(((ll - brute) / brute).abs() < 1e-4, "{ll} vs {brute}");
        }
    }
}

#[test]
fn graded_gauss_is_tight() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = truth();
    let seq = random_sequence(&mut rng, 12, 200.0, 3);
    let rep = Replicate::constant(seq);
    let fine = QuadratureSpec {
        gauss_order: 12,
        first_panel: Some(0.01),
        ..QuadratureSpec::default()
    };
    let reference = replicate_log_likelihood(&rep, 0, &p, &fine).unwrap();
    let ll = replicate_log_likelihood(&rep, 0, &p, &QuadratureSpec::default()).unwrap();
    assert!(((ll - reference) / reference).abs() < 1e-9, "{ll} vs {reference}");
}

#[test]
fn trapezoid_converges_at_second_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let p = truth();
    let rep = Replicate::constant(random_sequence(&mut rng, 10, 30.0, 3));
    let exact = replicate_log_likelihood(&rep, 0, &p, &QuadratureSpec::default()).unwrap();
    let err = |m| (replicate_log_likelihood(&rep, 0, &p, &QuadratureSpec::trapezoid(m)).unwrap() - exact).abs();
    let (e1, e2) = (err(20), err(40));
    let ratio = e1 / e2;
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    assert!(e2 / exact.abs() < 1e-5);
}

#[test]
fn exc_only_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mu, alpha, eta) = (0.4, 0.6, 2.5);
    let p = ExInParams::from_matrices(
        BackgroundLink::Log,
        &[vec![mu]],
        vec![vec![alpha]],
        vec![vec![0.0]],
        vec![eta],
        vec![1.0],
    )
    .unwrap();
    let seq = random_sequence(&mut rng, 20, 50.0, 1);
    let closed: f64 = mu * 50.0
        + seq
            .events()
            .iter()
            .map(|e| alpha * (1.0 - (-(50.0 - e.time) / eta).exp()))
            .sum::<f64>();
    let rep = Replicate::constant(seq);
    for quad in [
        QuadratureSpec::default(),
        QuadratureSpec::default().quadrature_only(),
        QuadratureSpec::trapezoid(20),
    ] {
        let c = compensator(0.0, 50.0, 0, &rep, 0, &p, &quad).unwrap();
        assert!(((c - closed) / closed).abs() < 1e-6, "{c} vs {closed}");
    }
    // plain trapezoid without the exact path is only second-order accurate
    let c = compensator(0.0, 50.0, 0, &rep, 0, &p, &QuadratureSpec::trapezoid(20).quadrature_only()).unwrap();
    assert!(((c - closed) / closed).abs() < 1e-3);
}

#[test]
fn compensator_is_additive_over_adjacent_intervals() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let p = truth();
    let rep = Replicate::constant(random_sequence(&mut rng, 10, 30.0, 3));
    let quad = QuadratureSpec::default();
    for k in 0..3 {
        let whole = compensator(0.0, 30.0, k, &rep, 0, &p, &quad).unwrap();
        let parts = compensator(0.0, 7.3, k, &rep, 0, &p, &quad).unwrap()
            + compensator(7.3, 30.0, k, &rep, 0, &p, &quad).unwrap();
        let brute = brute_compensator(&rep, &p, 7.3, 30.0, k, 200_000);
        let partial = compensator(7.3, 30.0, k, &rep, 0, &p, &quad).unwrap();
        assert!((whole - parts).abs() < 1e-9 * whole);
        assert!((partial - brute).abs() < 1e-4 * brute);
    }
}

#[test]
fn subcompensators_add_up() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p = truth();
    let rep = Replicate::constant(random_sequence(&mut rng, 20, 60.0, 3));
    let quad = QuadratureSpec::default();
    let sc = subcompensators(&rep, 0, &p, &quad).unwrap();
    for (k, s) in sc.iter().enumerate() {
        let c = compensator(0.0, 60.0, k, &rep, 0, &p, &quad).unwrap();
        assert!((s.total() - c).abs() <= 1e-12 * c);
    }
}

#[test]
fn replicates_add() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let p = reference_truth(&[vec![0.3, 0.15, 0.25], vec![0.2, 0.1, 0.3]]).unwrap();
    let a = Replicate::constant(random_sequence(&mut rng, 10, 30.0, 3));
    let b = Replicate::constant(random_sequence(&mut rng, 8, 20.0, 3).with_replicate(1));
    let quad = QuadratureSpec::default();
    let data = Dataset::new(vec![a.clone(), b.clone()]).unwrap();
    let total = log_likelihood(&data, &p, &quad).unwrap();
    let sum = replicate_log_likelihood(&a, 0, &p, &quad).unwrap() + replicate_log_likelihood(&b, 1, &p, &quad).unwrap();
    assert!((total - sum).abs() < 1e-12 * sum.abs());
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Every admissible branching of a sequence.
fn enumerate(seq: &EventSequence, p: &ExInParams) -> Vec<BranchingAssignment> {
    let ev = seq.events();
    let mut out = vec![BranchingAssignment { parent: Vec::new() }];
    for i in 0..ev.len() {
        let mut next = Vec::new();
        for z in &out {
            let mut opts = vec![None];
            opts.extend((0..i).filter(|&j| p.alpha(ev[j].mark, ev[i].mark) > 0.0).map(Some));
            for o in opts {
                let mut z2 = z.clone();
                z2.parent.push(o);
                next.push(z2);
            }
        }
        out = next;
    }
    out
}

#[test]
fn complete_data_marginalizes_to_observed() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let quad = QuadratureSpec::default();
    for variant in ModelVariant::ALL {
        let p = truth().restricted(variant);
        for n in 1..=6 {
            let seq = random_sequence(&mut rng, n, 12.0, 3);
            let rep = Replicate::constant(seq.clone());
            let terms: Vec<f64> = enumerate(&seq, &p)
                .iter()
                .map(|z| complete_data_log_likelihood(&rep, 0, z, &p, &quad).unwrap())
                .collect();
            let ll = replicate_log_likelihood(&rep, 0, &p, &quad).unwrap();
            assert!((log_sum_exp(&terms) - ll).abs() < 1e-10, "{variant} n={n}");
        }
    }
}

#[test]
fn branching_conditional_matches_enumeration() {
    let p = reference_truth(&[vec![0.3, 0.15, 0.25]]).unwrap();
    let seq = EventSequence::new(
        vec![MarkedEvent::new(1.0, 1), MarkedEvent::new(1.8, 2), MarkedEvent::new(2.5, 2)],
        6.0,
        3,
        0,
    )
    .unwrap();
    let rep = Replicate::constant(seq.clone());
    let quad = QuadratureSpec::default();
    let all = enumerate(&seq, &p);
    let terms: Vec<f64> = all
        .iter()
        .map(|z| complete_data_log_likelihood(&rep, 0, z, &p, &quad).unwrap())
        .collect();
    let norm = log_sum_exp(&terms);
    let cov = CovariateTrack::intercept_only();
    for i in 0..3 {
        for (parent, prob) in branching_conditional(i, &seq, 0, &p, &cov).unwrap() {
            let marginal: f64 = all
                .iter()
                .zip(&terms)
                .filter(|(z, _)| z.parent[i] == parent)
                .map(|(_, t)| (t - norm).exp())
                .sum();
            assert!((marginal - prob).abs() < 1e-12, "event {i} parent {parent:?}");
        }
    }
}

#[test]
fn inhibition_cancels_in_branching() {
    let seq = EventSequence::new(
        vec![MarkedEvent::new(1.0, 1), MarkedEvent::new(1.8, 2), MarkedEvent::new(2.5, 2)],
        6.0,
        3,
        0,
    )
    .unwrap();
    let cov = CovariateTrack::intercept_only();
    let p = truth();
    let mut q = p.clone();
    q.gamma_star.set(0, 2, 3.0);
    q.gamma_star.set(2, 0, 0.01);
    q.phi = vec![0.3, 9.0, 1.0];
    for i in 0..3 {
        assert_eq!(
            branching_conditional(i, &seq, 0, &p, &cov).unwrap(),
            branching_conditional(i, &seq, 0, &q, &cov).unwrap()
        );
    }
}

#[test]
fn table_trials_agree_with_fresh_tables() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let p = truth();
    let rep = Replicate::constant(random_sequence(&mut rng, 30, 80.0, 3));
    let quad = QuadratureSpec::default();
    let mut table = ReplicateTable::new(&rep, 0, &p, &quad).unwrap();

    let mut q = p.clone();
    q.phi[0] = 4.1;
    q.gamma_star.set(0, 2, 0.5);
    table.trial_inhibition(Some((0, 4.1)), &[0, 1, 2], &q);
    let fresh = ReplicateTable::new(&rep, 0, &q, &quad).unwrap();
    for k in 0..3 {
        let a = table.trial_mark_log_likelihood(k, &q);
        let b = fresh.mark_log_likelihood(k, &q);
        assert!((a - b).abs() < 1e-10 * b.abs(), "{a} vs {b}");
    }
    table.commit_inhibition();
    assert!((table.log_likelihood(&q).unwrap() - fresh.log_likelihood(&q).unwrap()).abs() < 1e-9);

    let mut r = q.clone();
    r.eta[1] = 7.0;
    table.trial_eta(1, 7.0);
    table.commit_eta(1);
    let fresh = ReplicateTable::new(&rep, 0, &r, &quad).unwrap();
    assert!((table.log_likelihood(&r).unwrap() - fresh.log_likelihood(&r).unwrap()).abs() < 1e-9);
}
