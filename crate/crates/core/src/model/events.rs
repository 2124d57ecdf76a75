use crate::error::{HawkesError, Result};

/// One observed event: a time in `(0, horizon]` and a 0-based mark index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkedEvent {
    pub time: f64,
    pub mark: usize,
}

impl MarkedEvent {
    pub fn new(time: f64, mark: usize) -> Self {
        MarkedEvent { time, mark }
    }
}

/// Strictly time-ordered marked events observed on `(0, horizon]`.
///
/// Marks are stored 0-based (`0..mark_count`); file formats and reports use
/// the original labels through [`crate::io::MarkLabels`].
#[derive(Debug, Clone, PartialEq)]
pub struct EventSequence {
    events: Vec<MarkedEvent>,
    horizon: f64,
    mark_count: usize,
    replicate: usize,
}

impl EventSequence {
    pub fn new(
        events: Vec<MarkedEvent>,
        horizon: f64,
        mark_count: usize,
        replicate: usize,
    ) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(HawkesError::validation(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if mark_count == 0 {
            return Err(HawkesError::validation("mark count must be at least 1"));
        }
        let mut prev = 0.0;
        for (i, ev) in events.iter().enumerate() {
            if !(ev.time.is_finite() && ev.time > 0.0) {
                return Err(HawkesError::validation(format!(
                    "event {i} has nonpositive or non-finite time {}",
                    ev.time
                )));
            }
            if ev.time > horizon {
                return Err(HawkesError::validation(format!(
                    "event {i} at {} lies beyond the horizon {horizon}",
                    ev.time
                )));
            }
            if i > 0 && ev.time <= prev {
                return Err(HawkesError::validation(format!(
                    "event times must be strictly increasing (event {i} at {} after {prev})",
                    ev.time
                )));
            }
            if ev.mark >= mark_count {
                return Err(HawkesError::validation(format!(
                    "event {i} has mark {} but only {mark_count} marks are declared",
                    ev.mark
                )));
            }
            prev = ev.time;
        }
        Ok(EventSequence {
            events,
            horizon,
            mark_count,
            replicate,
        })
    }

    pub fn empty(horizon: f64, mark_count: usize) -> Result<Self> {
        Self::new(Vec::new(), horizon, mark_count, 0)
    }

    pub fn events(&self) -> &[MarkedEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn mark_count(&self) -> usize {
        self.mark_count
    }

    pub fn replicate(&self) -> usize {
        self.replicate
    }

    pub fn with_replicate(mut self, replicate: usize) -> Self {
        self.replicate = replicate;
        self
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.events.iter().map(|e| e.time)
    }

    pub fn counts_by_mark(&self) -> Vec<usize> {
        let mut counts = vec![0; self.mark_count];
        for ev in &self.events {
            counts[ev.mark] += 1;
        }
        counts
    }

    /// Events strictly before `t`.
    pub fn history_before(&self, t: f64) -> &[MarkedEvent] {
        let n = self.events.partition_point(|e| e.time < t);
        &self.events[..n]
    }

    /// Keep only the first `n` events and shrink the horizon to `horizon`.
    pub fn truncated(&self, n: usize, horizon: f64) -> Result<Self> {
        let events = self.events[..n.min(self.events.len())].to_vec();
        Self::new(events, horizon, self.mark_count, self.replicate)
    }
}

/// Sort raw `(time, mark)` pairs and break exact ties.
///
/// Each tied event is pushed forward by `1e-9 * horizon` past its predecessor.
/// Returns the sorted events and the number of collisions that were perturbed.
pub fn sort_and_break_ties(mut raw: Vec<MarkedEvent>, horizon: f64) -> (Vec<MarkedEvent>, usize) {
    raw.sort_by(|a, b| a.time.total_cmp(&b.time));
    let eps = 1e-9 * horizon;
    let mut collisions = 0;
    for i in 1..raw.len() {
        if raw[i].time <= raw[i - 1].time {
            collisions += 1;
            raw[i].time = raw[i - 1].time + eps;
        }
    }
    (raw, collisions)
}
