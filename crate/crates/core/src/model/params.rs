use crate::error::{HawkesError, Result};
use crate::model::CovariateTrack;

/// How `x(t)β` becomes a background rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum BackgroundLink {
    /// `μ(t) = x(t)β`; must be validated positive.
    Linear,
    /// `μ(t) = exp(x(t)β)`.
    #[default]
    Log,
}

impl BackgroundLink {
    pub fn apply(self, eta: f64) -> f64 {
        match self {
            BackgroundLink::Linear => eta,
            BackgroundLink::Log => eta.exp(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BackgroundLink::Linear => "linear",
            BackgroundLink::Log => "log",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(BackgroundLink::Linear),
            "log" => Ok(BackgroundLink::Log),
            other => Err(HawkesError::validation(format!("unknown background link {other:?}"))),
        }
    }
}

/// Interaction type of one ordered pair `(source, target)`.
///
/// This is the indicator pair `(I_α, I_γ)` restricted to its three admissible
/// values, so excitation and inhibition can never both be switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Interaction {
    #[default]
    Absent,
    Excitatory,
    Inhibitory,
}

impl Interaction {
    pub const ALL: [Interaction; 3] = [
        Interaction::Absent,
        Interaction::Excitatory,
        Interaction::Inhibitory,
    ];

    /// `(I_α, I_γ)`.
    pub fn indicators(self) -> (bool, bool) {
        match self {
            Interaction::Absent => (false, false),
            Interaction::Excitatory => (true, false),
            Interaction::Inhibitory => (false, true),
        }
    }

    pub fn from_indicators(include_alpha: bool, include_gamma: bool) -> Result<Self> {
        match (include_alpha, include_gamma) {
            (false, false) => Ok(Interaction::Absent),
            (true, false) => Ok(Interaction::Excitatory),
            (false, true) => Ok(Interaction::Inhibitory),
            (true, true) => Err(HawkesError::validation(
                "a pair cannot be both excitatory and inhibitory",
            )),
        }
    }
}

/// Which interaction types a fitted or simulated model may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ModelVariant {
    /// Excitation and inhibition.
    #[default]
    ExcInh,
    /// Excitation only (`H ≡ 1`).
    ExcOnly,
    /// Inhibition only (`G ≡ 0`).
    InhOnly,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 3] = [ModelVariant::ExcInh, ModelVariant::ExcOnly, ModelVariant::InhOnly];

    pub fn allows(self, state: Interaction) -> bool {
        !matches!(
            (self, state),
            (ModelVariant::ExcOnly, Interaction::Inhibitory)
                | (ModelVariant::InhOnly, Interaction::Excitatory)
        )
    }

    /// Admissible pair states, in a fixed order.
    pub fn states(self) -> Vec<Interaction> {
        Interaction::ALL.into_iter().filter(|s| self.allows(*s)).collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::ExcInh => "exc_inh",
            ModelVariant::ExcOnly => "exc_only",
            ModelVariant::InhOnly => "inh_only",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "exc_inh" | "i" => Ok(ModelVariant::ExcInh),
            "exc_only" | "ii" => Ok(ModelVariant::ExcOnly),
            "inh_only" | "iii" => Ok(ModelVariant::InhOnly),
            other => Err(HawkesError::validation(format!("unknown model variant {other:?}"))),
        }
    }
}

impl std::fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Square matrix indexed by `(source, target)` marks, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMatrix<T> {
    size: usize,
    data: Vec<T>,
}

impl<T: Clone> PairMatrix<T> {
    pub fn filled(size: usize, value: T) -> Self {
        PairMatrix {
            size,
            data: vec![value; size * size],
        }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let size = rows.len();
        if rows.iter().any(|r| r.len() != size) {
            return Err(HawkesError::validation("interaction matrix must be square"));
        }
        Ok(PairMatrix {
            size,
            data: rows.into_iter().flatten().collect(),
        })
    }
}

impl<T> PairMatrix<T> {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, source: usize, target: usize) -> &T {
        &self.data[source * self.size + target]
    }

    pub fn set(&mut self, source: usize, target: usize, value: T) {
        self.data[source * self.size + target] = value;
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &T)> {
        let n = self.size;
        self.data.iter().enumerate().map(move |(i, v)| ((i / n, i % n), v))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> {
        let n = self.size;
        (0..n * n).map(move |i| (i / n, i % n))
    }
}

/// Full parameter set of the additive-excitation / multiplicative-inhibition
/// model.
///
/// `beta[d][k]` are the background regression coefficients of mark `k` in
/// replicate `d`; interactions and decays are shared by every replicate.
/// Decays are indexed by the *source* mark only.
#[derive(Debug, Clone, PartialEq)]
pub struct ExInParams {
    pub link: BackgroundLink,
    pub beta: Vec<Vec<Vec<f64>>>,
    pub alpha_star: PairMatrix<f64>,
    pub gamma_star: PairMatrix<f64>,
    pub interaction: PairMatrix<Interaction>,
    pub eta: Vec<f64>,
    pub phi: Vec<f64>,
}

impl ExInParams {
    /// Constant-background parameters from effective `α` and `γ` matrices.
    ///
    /// A pair with a positive `α` becomes excitatory, a pair with a positive
    /// `γ` inhibitory; both positive is rejected. `backgrounds[d][k]` is the
    /// constant rate of mark `k` in replicate `d`.
    pub fn from_matrices(
        link: BackgroundLink,
        backgrounds: &[Vec<f64>],
        alpha: Vec<Vec<f64>>,
        gamma: Vec<Vec<f64>>,
        eta: Vec<f64>,
        phi: Vec<f64>,
    ) -> Result<Self> {
        let alpha = PairMatrix::from_rows(alpha)?;
        let gamma = PairMatrix::from_rows(gamma)?;
        let k = alpha.size();
        if gamma.size() != k {
            return Err(HawkesError::validation("alpha and gamma sizes differ"));
        }
        let mut interaction = PairMatrix::filled(k, Interaction::Absent);
        let mut alpha_star = PairMatrix::filled(k, 0.0);
        let mut gamma_star = PairMatrix::filled(k, 0.0);
        for (l, m) in alpha.pairs() {
            let a = *alpha.get(l, m);
            let g = *gamma.get(l, m);
            let state = Interaction::from_indicators(a > 0.0, g > 0.0)?;
            interaction.set(l, m, state);
            alpha_star.set(l, m, a);
            gamma_star.set(l, m, g);
        }
        let beta = backgrounds
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&mu| match link {
                        BackgroundLink::Linear => vec![mu],
                        BackgroundLink::Log => vec![mu.ln()],
                    })
                    .collect()
            })
            .collect();
        let params = ExInParams {
            link,
            beta,
            alpha_star,
            gamma_star,
            interaction,
            eta,
            phi,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn mark_count(&self) -> usize {
        self.eta.len()
    }

    pub fn replicate_count(&self) -> usize {
        self.beta.len()
    }

    pub fn covariate_dim(&self) -> usize {
        self.beta.first().and_then(|r| r.first()).map_or(0, |b| b.len())
    }

    /// Effective excitation `α_{ℓ,k} = α*_{ℓ,k} I_α`.
    #[inline]
    pub fn alpha(&self, source: usize, target: usize) -> f64 {
        match self.interaction.get(source, target) {
            Interaction::Excitatory => *self.alpha_star.get(source, target),
            _ => 0.0,
        }
    }

    /// Effective inhibition `γ_{ℓ,k} = γ*_{ℓ,k} I_γ`.
    #[inline]
    pub fn gamma(&self, source: usize, target: usize) -> f64 {
        match self.interaction.get(source, target) {
            Interaction::Inhibitory => *self.gamma_star.get(source, target),
            _ => 0.0,
        }
    }

    pub fn include_alpha(&self, source: usize, target: usize) -> bool {
        self.interaction.get(source, target).indicators().0
    }

    pub fn include_gamma(&self, source: usize, target: usize) -> bool {
        self.interaction.get(source, target).indicators().1
    }

    /// Does any active inhibition point into `target`?
    pub fn is_inhibited(&self, target: usize) -> bool {
        (0..self.mark_count()).any(|l| self.gamma(l, target) > 0.0)
    }

    pub fn has_excitation_from(&self, source: usize) -> bool {
        (0..self.mark_count()).any(|k| self.alpha(source, k) > 0.0)
    }

    pub fn has_inhibition_from(&self, source: usize) -> bool {
        (0..self.mark_count()).any(|k| self.gamma(source, k) > 0.0)
    }

    /// Background rate for replicate `d`, mark `k`, given a covariate row.
    #[inline]
    pub fn background(&self, replicate: usize, mark: usize, row: &[f64]) -> f64 {
        let lin: f64 = self.beta[replicate][mark]
            .iter()
            .zip(row)
            .map(|(b, x)| b * x)
            .sum();
        self.link.apply(lin)
    }

    /// Force the interaction pattern into `variant`.
    pub fn restrict_to(&mut self, variant: ModelVariant) {
        let pairs: Vec<_> = self.interaction.pairs().collect();
        for (l, k) in pairs {
            if !variant.allows(*self.interaction.get(l, k)) {
                self.interaction.set(l, k, Interaction::Absent);
            }
        }
    }

    pub fn restricted(mut self, variant: ModelVariant) -> Self {
        self.restrict_to(variant);
        self
    }

    pub fn conforms_to(&self, variant: ModelVariant) -> bool {
        self.interaction.iter().all(|(_, s)| variant.allows(*s))
    }

    /// Check shape, sign and finiteness invariants.
    pub fn validate(&self) -> Result<()> {
        let k = self.mark_count();
        if k == 0 {
            return Err(HawkesError::validation("at least one mark is required"));
        }
        if self.phi.len() != k
            || self.alpha_star.size() != k
            || self.gamma_star.size() != k
            || self.interaction.size() != k
        {
            return Err(HawkesError::validation("parameter blocks disagree on the mark count"));
        }
        if self.beta.is_empty() {
            return Err(HawkesError::validation("at least one replicate of β is required"));
        }
        let dim = self.covariate_dim();
        for (d, rep) in self.beta.iter().enumerate() {
            if rep.len() != k || rep.iter().any(|b| b.len() != dim || dim == 0) {
                return Err(HawkesError::validation(format!(
                    "β for replicate {d} must have {k} marks × {dim} coefficients"
                )));
            }
            if rep.iter().flatten().any(|b| !b.is_finite()) {
                return Err(HawkesError::validation("β must be finite"));
            }
        }
        for ((l, m), &a) in self.alpha_star.iter() {
            let g = *self.gamma_star.get(l, m);
            if !(a >= 0.0 && a.is_finite() && g >= 0.0 && g.is_finite()) {
                return Err(HawkesError::validation(format!(
                    "α*/γ* for pair ({l}, {m}) must be finite and nonnegative"
                )));
            }
        }
        for (name, v) in [("η", &self.eta), ("φ", &self.phi)] {
            if v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(HawkesError::validation(format!("{name} must be positive and finite")));
            }
        }
        Ok(())
    }

    /// Under the linear link every segment of every replicate must yield a
    /// strictly positive background.
    pub fn validate_backgrounds(&self, covariates: &[&CovariateTrack]) -> Result<()> {
        if covariates.len() != self.replicate_count() {
            return Err(HawkesError::validation(format!(
                "{} covariate tracks for {} replicates",
                covariates.len(),
                self.replicate_count()
            )));
        }
        for (d, cov) in covariates.iter().enumerate() {
            if cov.dim() != self.covariate_dim() {
                return Err(HawkesError::validation(format!(
                    "replicate {d}: covariate dimension {} but β has {}",
                    cov.dim(),
                    self.covariate_dim()
                )));
            }
            for seg in 0..cov.segment_count() {
                for k in 0..self.mark_count() {
                    let rate = self.background(d, k, cov.row(seg));
                    if !(rate > 0.0 && rate.is_finite()) {
                        return Err(HawkesError::NonPositiveBackground {
                            replicate: d,
                            mark: k,
                            segment: seg,
                            rate,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exclusivity_is_structural() {
        assert!(Interaction::from_indicators(true, true).is_err());
        let p = ExInParams::from_matrices(
            BackgroundLink::Log,
            &[vec![0.5, 0.5]],
            vec![vec![0.3, 0.0], vec![0.0, 0.0]],
            vec![vec![0.0, 0.2], vec![0.0, 0.0]],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        for (l, k) in p.interaction.pairs() {
            assert_eq!(p.alpha(l, k) * p.gamma(l, k), 0.0);
        }
        let bad = ExInParams::from_matrices(
            BackgroundLink::Log,
            &[vec![0.5]],
            vec![vec![0.3]],
            vec![vec![0.2]],
            vec![1.0],
            vec![1.0],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn variant_restriction() {
        let p = ExInParams::from_matrices(
            BackgroundLink::Log,
            &[vec![0.5, 0.5]],
            vec![vec![0.3, 0.0], vec![0.0, 0.0]],
            vec![vec![0.0, 0.2], vec![0.0, 0.0]],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        let exc = p.clone().restricted(ModelVariant::ExcOnly);
        assert_eq!(exc.gamma(0, 1), 0.0);
        assert_eq!(exc.alpha(0, 0), 0.3);
        let inh = p.restricted(ModelVariant::InhOnly);
        assert_eq!(inh.alpha(0, 0), 0.0);
        assert_eq!(inh.gamma(0, 1), 0.2);
        assert!(inh.conforms_to(ModelVariant::InhOnly));
    }

    #[test]
    fn negative_linear_background_rejected() {
        let mut p = ExInParams::from_matrices(
            BackgroundLink::Linear,
            &[vec![0.5]],
            vec![vec![0.0]],
            vec![vec![0.0]],
            vec![1.0],
            vec![1.0],
        )
        .unwrap();
        let cov = CovariateTrack::new(vec![0.0, 5.0], 10.0, vec![vec![0.0], vec![1.0]]).unwrap();
        p.beta[0][0] = vec![0.5, -1.0];
        let err = p.validate_backgrounds(&[&cov]).unwrap_err();
        assert!(matches!(err, HawkesError::NonPositiveBackground { segment: 1, .. }));
    }
}
