use thiserror::Error;

/// Errors raised anywhere in the crate.
///
/// Variants split into two families: validation failures (bad inputs, bad
/// configuration) and numerical failures (non-finite likelihoods, runaway
/// simulations). The CLI maps them to exit codes 2 and 3.
#[derive(Debug, Error)]
pub enum HawkesError {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("time {time} is outside the covariate coverage [{start}, {end}]")]
    Coverage { time: f64, start: f64, end: f64 },

    #[error("nonpositive background rate {rate} for mark {mark} in replicate {replicate} (segment {segment})")]
    NonPositiveBackground {
        replicate: usize,
        mark: usize,
        segment: usize,
        rate: f64,
    },

    #[error("zero intensity at observed event {index} (t = {time}, mark {mark}) in replicate {replicate}")]
    ZeroIntensity {
        replicate: usize,
        index: usize,
        time: f64,
        mark: usize,
    },

    #[error("branching parent {parent} for event {child} is not admissible: {reason}")]
    InadmissibleParent {
        child: usize,
        parent: usize,
        reason: String,
    },

    #[error("simulation exceeded {max_events} events before t = {time}; the parameters are likely supercritical")]
    Explosion { max_events: usize, time: f64 },

    #[error("dominating bound violated at t = {time}: total intensity {intensity} > bound {bound}")]
    BoundViolation {
        time: f64,
        intensity: f64,
        bound: f64,
    },

    #[error("non-finite log-likelihood at initialization ({0}); check that every observed mark has a positive background rate")]
    Initialization(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl HawkesError {
    pub fn validation(msg: impl Into<String>) -> Self {
        HawkesError::Validation(msg.into())
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        HawkesError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for failures caused by numerics rather than bad inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            HawkesError::ZeroIntensity { .. }
                | HawkesError::Explosion { .. }
                | HawkesError::BoundViolation { .. }
                | HawkesError::Initialization(_)
                | HawkesError::Numerical(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, HawkesError>;
