use crate::error::{HawkesError, Result};
use crate::model::{Interaction, ModelVariant, PairMatrix};

/// Prior distribution of the model parameters.
///
/// `β ~ N(0, beta_variance)` per coefficient; `log α*`, `log γ*` follow the
/// slab `N(slab_mean, slab_sd²)`; `log η`, `log φ` follow
/// `N(decay_mean, decay_sd²)`. Each ordered pair independently has
/// inclusion probabilities `p` (excitation) and `π` (inhibition), conditioned
/// on never being both, so the pair state has prior weights
/// `p(1−π)`, `(1−p)π`, `(1−p)(1−π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    pub beta_variance: f64,
    pub slab_mean: f64,
    pub slab_sd: f64,
    pub decay_mean: f64,
    pub decay_sd: f64,
    pub inclusion_alpha: PairMatrix<f64>,
    pub inclusion_gamma: PairMatrix<f64>,
}

impl PriorSpec {
    pub fn new(mark_count: usize) -> Self {
        PriorSpec {
            beta_variance: 10.0,
            slab_mean: 0.0,
            slab_sd: 1.0,
            decay_mean: 0.0,
            decay_sd: 1.0,
            inclusion_alpha: PairMatrix::filled(mark_count, 0.5),
            inclusion_gamma: PairMatrix::filled(mark_count, 0.5),
        }
    }

    pub fn mark_count(&self) -> usize {
        self.inclusion_alpha.size()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("beta_variance", self.beta_variance),
            ("slab_sd", self.slab_sd),
            ("decay_sd", self.decay_sd),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(HawkesError::validation(format!("prior {name} must be positive")));
            }
        }
        if !(self.slab_mean.is_finite() && self.decay_mean.is_finite()) {
            return Err(HawkesError::validation("prior means must be finite"));
        }
        if self.inclusion_gamma.size() != self.inclusion_alpha.size() {
            return Err(HawkesError::validation("inclusion matrices differ in size"));
        }
        for ((l, k), &p) in self.inclusion_alpha.iter() {
            let q = *self.inclusion_gamma.get(l, k);
            if !((0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&q)) {
                return Err(HawkesError::validation(format!(
                    "inclusion probabilities of pair ({l}, {k}) must lie in [0, 1]"
                )));
            }
            if p == 1.0 && q == 1.0 {
                return Err(HawkesError::validation(format!(
                    "pair ({l}, {k}) cannot require both excitation and inhibition"
                )));
            }
        }
        Ok(())
    }

    /// Unnormalized prior weight of a pair state.
    pub fn state_weight(&self, source: usize, target: usize, state: Interaction) -> f64 {
        let p = *self.inclusion_alpha.get(source, target);
        let q = *self.inclusion_gamma.get(source, target);
        match state {
            Interaction::Absent => (1.0 - p) * (1.0 - q),
            Interaction::Excitatory => p * (1.0 - q),
            Interaction::Inhibitory => (1.0 - p) * q,
        }
    }

    /// Prior probability of a pair state among those `variant` admits.
    pub fn state_probability(&self, source: usize, target: usize, state: Interaction, variant: ModelVariant) -> f64 {
        if !variant.allows(state) {
            return 0.0;
        }
        let total: f64 = variant
            .states()
            .into_iter()
            .map(|s| self.state_weight(source, target, s))
            .sum();
        if total == 0.0 {
            0.0
        } else {
            self.state_weight(source, target, state) / total
        }
    }

    /// Log density of `log x` under `N(mean, sd²)`, up to a constant.
    #[inline]
    pub(crate) fn log_normal_kernel(log_x: f64, mean: f64, sd: f64) -> f64 {
        let z = (log_x - mean) / sd;
        -0.5 * z * z
    }
}
