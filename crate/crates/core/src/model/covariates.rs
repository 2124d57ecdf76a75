use crate::error::{HawkesError, Result};

/// Piecewise-constant covariate path `x(t)`.
///
/// Segment `j` covers `[knots[j], knots[j+1])`; the final segment is closed on
/// the right. Every row starts with the intercept column (`1.0`).
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateTrack {
    knots: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

impl CovariateTrack {
    /// Build a track from segment start times, the end of coverage, and
    /// covariate rows *without* the intercept (it is prepended here).
    pub fn new(starts: Vec<f64>, end: f64, values: Vec<Vec<f64>>) -> Result<Self> {
        if starts.is_empty() {
            return Err(HawkesError::validation("covariate track needs at least one segment"));
        }
        if starts.len() != values.len() {
            return Err(HawkesError::validation(format!(
                "{} segment starts but {} value rows",
                starts.len(),
                values.len()
            )));
        }
        if starts[0] != 0.0 {
            return Err(HawkesError::validation(format!(
                "covariate track must start at 0, starts at {}",
                starts[0]
            )));
        }
        let dim = values[0].len();
        if values.iter().any(|r| r.len() != dim) {
            return Err(HawkesError::validation("covariate rows have inconsistent widths"));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(HawkesError::validation("covariate values must be finite"));
        }
        let mut knots = starts;
        knots.push(end);
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(HawkesError::validation("covariate knot times must be strictly increasing"));
        }
        let rows = values
            .into_iter()
            .map(|r| std::iter::once(1.0).chain(r).collect())
            .collect();
        Ok(CovariateTrack { knots, rows })
    }

    /// Intercept-only track covering `[0, ∞)`.
    pub fn intercept_only() -> Self {
        CovariateTrack {
            knots: vec![0.0, f64::INFINITY],
            rows: vec![vec![1.0]],
        }
    }

    /// Number of columns including the intercept.
    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }

    pub fn segment_count(&self) -> usize {
        self.rows.len()
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn end(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    pub fn row(&self, segment: usize) -> &[f64] {
        &self.rows[segment]
    }

    pub fn segment_bounds(&self, segment: usize) -> (f64, f64) {
        (self.knots[segment], self.knots[segment + 1])
    }

    /// Segment containing `t`.
    pub fn segment_at(&self, t: f64) -> Result<usize> {
        let end = self.end();
        if !(t >= 0.0 && t <= end) {
            return Err(HawkesError::Coverage {
                time: t,
                start: 0.0,
                end,
            });
        }
        let idx = self.knots.partition_point(|&k| k <= t);
        Ok(idx.saturating_sub(1).min(self.rows.len() - 1))
    }

    pub fn covers(&self, horizon: f64) -> Result<()> {
        if self.end() < horizon {
            return Err(HawkesError::Coverage {
                time: horizon,
                start: 0.0,
                end: self.end(),
            });
        }
        Ok(())
    }

    /// Interior knots strictly inside `(0, horizon)`.
    pub fn interior_knots(&self, horizon: f64) -> impl Iterator<Item = f64> + '_ {
        self.knots
            .iter()
            .copied()
            .filter(move |&k| k > 0.0 && k < horizon)
    }
}
