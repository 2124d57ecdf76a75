//! Domain types and intensity evaluation.

mod covariates;
mod events;
pub mod intensity;
mod params;

pub use covariates::CovariateTrack;
pub use events::{sort_and_break_ties, EventSequence, MarkedEvent};
pub use intensity::{
    background_rate, conditional_intensity, excitation_component, inhibition_factor, KernelState,
};
pub use params::{BackgroundLink, ExInParams, Interaction, ModelVariant, PairMatrix};

/// One independently observed replicate (a day, a recording segment) with its
/// own covariate path.
#[derive(Debug, Clone)]
pub struct Replicate {
    pub events: EventSequence,
    pub covariates: CovariateTrack,
}

impl Replicate {
    pub fn new(events: EventSequence, covariates: CovariateTrack) -> crate::Result<Self> {
        covariates.covers(events.horizon())?;
        Ok(Replicate { events, covariates })
    }

    /// Intercept-only covariates.
    pub fn constant(events: EventSequence) -> Self {
        Replicate {
            events,
            covariates: CovariateTrack::intercept_only(),
        }
    }
}

/// A set of replicates sharing the same marks.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub replicates: Vec<Replicate>,
}

impl Dataset {
    pub fn new(replicates: Vec<Replicate>) -> crate::Result<Self> {
        if replicates.is_empty() {
            return Err(crate::HawkesError::validation("dataset has no replicates"));
        }
        let k = replicates[0].events.mark_count();
        let dim = replicates[0].covariates.dim();
        for r in &replicates {
            if r.events.mark_count() != k {
                return Err(crate::HawkesError::validation("replicates disagree on the mark count"));
            }
            if r.covariates.dim() != dim {
                return Err(crate::HawkesError::validation(
                    "replicates disagree on the covariate dimension",
                ));
            }
        }
        Ok(Dataset { replicates })
    }

    pub fn single(events: EventSequence) -> Self {
        Dataset {
            replicates: vec![Replicate::constant(events)],
        }
    }

    pub fn mark_count(&self) -> usize {
        self.replicates[0].events.mark_count()
    }

    pub fn covariate_dim(&self) -> usize {
        self.replicates[0].covariates.dim()
    }

    pub fn event_count(&self) -> usize {
        self.replicates.iter().map(|r| r.events.len()).sum()
    }

    pub fn covariate_refs(&self) -> Vec<&CovariateTrack> {
        self.replicates.iter().map(|r| &r.covariates).collect()
    }
}
