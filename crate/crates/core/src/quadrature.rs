//! Knot-aligned quadrature grids for compensator integrals.
//!
//! The integrand `λ_k(t)` is smooth between consecutive knots (event times,
//! covariate change points, `0` and the horizon) and only kinks or jumps at
//! knots, so every rule here works interval by interval. Each interval
//! `(a, b]` is evaluated with the history of events at times `≤ a`.

use crate::error::{HawkesError, Result};
use crate::model::{CovariateTrack, EventSequence};
use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadratureScheme {
    /// Composite trapezoid with uniform panels per interval.
    Trapezoid,
    /// Gauss–Legendre panels whose widths double away from each left knot.
    #[default]
    GradedGauss,
}

impl QuadratureScheme {
    pub fn name(self) -> &'static str {
        match self {
            QuadratureScheme::Trapezoid => "trapezoid",
            QuadratureScheme::GradedGauss => "graded_gauss",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "trapezoid" => Ok(QuadratureScheme::Trapezoid),
            "graded_gauss" => Ok(QuadratureScheme::GradedGauss),
            other => Err(HawkesError::validation(format!("unknown quadrature scheme {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    pub scheme: QuadratureScheme,
    /// Uniform panels per inter-knot interval (trapezoid).
    pub subdivisions_per_interval: usize,
    /// Nodes per Gauss–Legendre panel.
    pub gauss_order: usize,
    /// Width of the first graded panel after each knot. `None` uses a quarter
    /// of the mean inter-event gap.
    pub first_panel: Option<f64>,
    /// Integrate marks with no active inhibition exactly instead of by
    /// quadrature.
    pub closed_form_uninhibited: bool,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            scheme: QuadratureScheme::GradedGauss,
            subdivisions_per_interval: 20,
            gauss_order: 6,
            first_panel: None,
            closed_form_uninhibited: true,
        }
    }
}

impl QuadratureSpec {
    pub fn trapezoid(subdivisions: usize) -> Self {
        QuadratureSpec {
            scheme: QuadratureScheme::Trapezoid,
            subdivisions_per_interval: subdivisions,
            ..Default::default()
        }
    }

    /// Same rule, but never substitute closed forms.
    pub fn quadrature_only(mut self) -> Self {
        self.closed_form_uninhibited = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.subdivisions_per_interval == 0 {
            return Err(HawkesError::validation("quadrature needs at least one subdivision"));
        }
        if !(1..=16).contains(&self.gauss_order) {
            return Err(HawkesError::validation("gauss_order must be in 1..=16"));
        }
        if let Some(h) = self.first_panel {
            if !(h > 0.0 && h.is_finite()) {
                return Err(HawkesError::validation("first_panel must be positive"));
            }
        }
        Ok(())
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` via Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // p1 = P_n(x), p0 = P_{n-1}(x)
            let (mut p0, mut p1) = (0.0, 1.0);
            for j in 1..=n {
                let p2 = p0;
                p0 = p1;
                p1 = ((2 * j - 1) as f64 * x * p0 - (j - 1) as f64 * p2) / j as f64;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// One inter-knot interval `(start, end]`.
#[derive(Debug, Clone)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
    /// Covariate segment the interval lies in.
    pub segment: usize,
    /// Number of events with time `≤ start`.
    pub events_before: usize,
    pub nodes: Range<usize>,
}

impl Interval {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }
}

/// Quadrature nodes for one replicate.
#[derive(Debug, Clone)]
pub struct QuadGrid {
    pub intervals: Vec<Interval>,
    /// Node offset from its interval start.
    pub offsets: Vec<f64>,
    pub weights: Vec<f64>,
    /// `boundary[i]` = number of intervals ending at or before event `i`.
    pub event_boundary: Vec<usize>,
    /// Covariate segment of each event.
    pub event_segment: Vec<usize>,
    /// Exact length of each covariate segment inside `(0, horizon]`.
    pub segment_length: Vec<f64>,
    pub horizon: f64,
}

impl QuadGrid {
    pub fn build(seq: &EventSequence, cov: &CovariateTrack, spec: &QuadratureSpec) -> Result<Self> {
        Self::build_with_knots(seq, cov, spec, &[])
    }

    /// Grid with additional knots (e.g. the ends of a partial integral).
    pub fn build_with_knots(
        seq: &EventSequence,
        cov: &CovariateTrack,
        spec: &QuadratureSpec,
        extra: &[f64],
    ) -> Result<Self> {
        spec.validate()?;
        let horizon = seq.horizon();
        cov.covers(horizon)?;
        let mut knots: Vec<f64> = Vec::with_capacity(seq.len() + 2 + extra.len());
        knots.push(0.0);
        knots.extend(seq.times());
        knots.extend(cov.interior_knots(horizon));
        knots.extend(extra.iter().copied().filter(|&x| x > 0.0 && x < horizon));
        knots.push(horizon);
        knots.sort_by(f64::total_cmp);
        knots.dedup();

        let first_panel = spec
            .first_panel
            .unwrap_or(horizon / (seq.len() as f64 + 1.0) / 4.0);
        let (gl_x, gl_w) = gauss_legendre(spec.gauss_order);

        let events = seq.events();
        let mut intervals = Vec::with_capacity(knots.len());
        let mut offsets = Vec::new();
        let mut weights = Vec::new();
        let mut ev = 0;
        for w in knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            while ev < events.len() && events[ev].time <= a {
                ev += 1;
            }
            let segment = cov.segment_at(0.5 * (a + b))?;
            let first = offsets.len();
            let len = b - a;
            match spec.scheme {
                QuadratureScheme::Trapezoid => {
                    let m = spec.subdivisions_per_interval;
                    let h = len / m as f64;
                    for j in 0..=m {
                        let wt = if j == 0 || j == m { 0.5 * h } else { h };
                        offsets.push(if j == m { len } else { j as f64 * h });
                        weights.push(wt);
                    }
                }
                QuadratureScheme::GradedGauss => {
                    let mut lo = 0.0;
                    let mut width = first_panel;
                    while lo < len {
                        let hi = (lo + width).min(len);
                        // absorb a sliver at the end into the last panel
                        let hi = if len - hi < 0.25 * width { len } else { hi };
                        let half = 0.5 * (hi - lo);
                        let mid = 0.5 * (hi + lo);
                        for (x, wq) in gl_x.iter().zip(&gl_w) {
                            offsets.push(mid + half * x);
                            weights.push(half * wq);
                        }
                        lo = hi;
                        width *= 2.0;
                    }
                }
            }
            intervals.push(Interval {
                start: a,
                end: b,
                segment,
                events_before: ev,
                nodes: first..offsets.len(),
            });
        }

        let mut event_boundary = Vec::with_capacity(events.len());
        let mut idx = 0;
        for e in events {
            while idx < intervals.len() && intervals[idx].end <= e.time {
                idx += 1;
            }
            event_boundary.push(idx);
        }
        let event_segment = events
            .iter()
            .map(|e| cov.segment_at(e.time))
            .collect::<Result<Vec<_>>>()?;
        let segment_length = (0..cov.segment_count())
            .map(|s| {
                let (lo, hi) = cov.segment_bounds(s);
                (hi.min(horizon) - lo.max(0.0)).max(0.0)
            })
            .collect();

        Ok(QuadGrid {
            intervals,
            offsets,
            weights,
            event_boundary,
            event_segment,
            segment_length,
            horizon,
        })
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len()
    }

    pub fn segment_count(&self) -> usize {
        self.segment_length.len()
    }
}

/// Per-source-mark decayed sums at nodes, events and interval starts.
#[derive(Debug, Clone, Default)]
pub struct DecayTrack {
    pub nodes: Vec<f64>,
    /// Left limits at each event.
    pub events: Vec<f64>,
    /// Right limits at each interval start.
    pub starts: Vec<f64>,
}

impl DecayTrack {
    pub fn zeros(grid: &QuadGrid, n_events: usize) -> Self {
        DecayTrack {
            nodes: vec![0.0; grid.node_count()],
            events: vec![0.0; n_events],
            starts: vec![0.0; grid.intervals.len()],
        }
    }

    /// Fill with `Σ_{i: m_i = mark} exp(−(t − t_i)/scale)` for events before `t`.
    pub fn fill(&mut self, grid: &QuadGrid, seq: &EventSequence, mark: usize, scale: f64) {
        let events = seq.events();
        let inv = 1.0 / scale;
        let mut s = 0.0;
        let mut t = 0.0;
        let mut ev = 0;
        for (idx, iv) in grid.intervals.iter().enumerate() {
            if s != 0.0 {
                s *= (-(iv.start - t) * inv).exp();
            }
            t = iv.start;
            while ev < iv.events_before {
                self.events[ev] = s;
                if events[ev].mark == mark {
                    s += 1.0;
                }
                ev += 1;
            }
            self.starts[idx] = s;
            let nodes = &mut self.nodes[iv.nodes.clone()];
            if s == 0.0 {
                nodes.fill(0.0);
            } else {
                for (v, off) in nodes.iter_mut().zip(&grid.offsets[iv.nodes.clone()]) {
                    *v = s * (-off * inv).exp();
                }
            }
        }
        while ev < events.len() {
            s *= (-(events[ev].time - t) * inv).exp();
            t = events[ev].time;
            self.events[ev] = s;
            if events[ev].mark == mark {
                s += 1.0;
            }
            ev += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MarkedEvent;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..=10 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13, "order {n}");
            for p in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-12, "order {n} power {p}");
            }
        }
    }

    fn toy() -> EventSequence {
        EventSequence::new(
            vec![
                MarkedEvent::new(0.7, 0),
                MarkedEvent::new(2.0, 1),
                MarkedEvent::new(5.0, 0),
            ],
            9.0,
            2,
            0,
        )
        .unwrap()
    }

    #[test]
    fn weights_sum_to_interval_lengths() {
        let seq = toy();
        let cov = CovariateTrack::new(vec![0.0, 3.0], 10.0, vec![vec![0.0], vec![1.0]]).unwrap();
        for spec in [QuadratureSpec::default(), QuadratureSpec::trapezoid(7)] {
            let grid = QuadGrid::build(&seq, &cov, &spec).unwrap();
            assert_eq!(grid.intervals.len(), 5);
            for iv in &grid.intervals {
                let w: f64 = grid.weights[iv.nodes.clone()].iter().sum();
                assert!((w - iv.len()).abs() < 1e-13);
                assert!(grid.offsets[iv.nodes.clone()].iter().all(|&o| o >= 0.0 && o <= iv.len()));
            }
            assert_eq!(grid.event_boundary, vec![1, 2, 4]);
            assert_eq!(grid.event_segment, vec![0, 0, 1]);
            assert_eq!(grid.intervals[2].segment, 0);
            assert_eq!(grid.intervals[3].segment, 1);
            assert!((grid.segment_length[0] - 3.0).abs() < 1e-15);
            assert!((grid.segment_length[1] - 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn decay_track_matches_direct_sum() {
        let seq = toy();
        let cov = CovariateTrack::intercept_only();
        let grid = QuadGrid::build(&seq, &cov, &QuadratureSpec::default()).unwrap();
        let mut tr = DecayTrack::zeros(&grid, seq.len());
        tr.fill(&grid, &seq, 0, 1.7);
        let direct = |t: f64, strict: bool| -> f64 {
            seq.events()
                .iter()
                .filter(|e| e.mark == 0 && if strict { e.time < t } else { e.time <= t })
                .map(|e| (-(t - e.time) / 1.7).exp())
                .sum()
        };
        for (i, e) in seq.events().iter().enumerate() {
            assert!((tr.events[i] - direct(e.time, true)).abs() < 1e-14);
        }
        for iv in &grid.intervals {
            for n in iv.nodes.clone() {
                let t = iv.start + grid.offsets[n];
                assert!((tr.nodes[n] - direct(iv.start, false) * (-(t - iv.start) / 1.7).exp()).abs() < 1e-14);
            }
        }
    }
}
