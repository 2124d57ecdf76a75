//! Parameter sets used by the simulation experiments and examples.

use crate::error::Result;
use crate::model::{BackgroundLink, ExInParams};

/// Excitation matrix of the three-mark reference configuration
/// (rows: source mark, columns: target mark).
pub const REFERENCE_ALPHA: [[f64; 3]; 3] = [[0.73, 0.0, 0.0], [0.0, 0.90, 0.26], [0.0, 0.0, 0.94]];

/// Inhibition matrix of the reference configuration.
pub const REFERENCE_GAMMA: [[f64; 3]; 3] = [[0.0, 0.0, 0.26], [0.0, 0.0, 0.0], [0.14, 0.0, 0.0]];

pub const REFERENCE_ETA: [f64; 3] = [22.38, 4.19, 2.49];
pub const REFERENCE_PHI: [f64; 3] = [2.64, 25.15, 2.74];

/// Constant backgrounds used for the desk-scale experiments. They give an
/// event mix dominated by the first and third marks with a sparse second
/// mark, resembling a close/alarm/short-note call pattern.
pub const REFERENCE_BACKGROUND: [f64; 3] = [0.05, 0.004, 0.008];

/// Reference configuration with the given per-replicate constant
/// backgrounds, log link.
pub fn reference_truth(backgrounds: &[Vec<f64>]) -> Result<ExInParams> {
    ExInParams::from_matrices(
        BackgroundLink::Log,
        backgrounds,
        REFERENCE_ALPHA.iter().map(|r| r.to_vec()).collect(),
        REFERENCE_GAMMA.iter().map(|r| r.to_vec()).collect(),
        REFERENCE_ETA.to_vec(),
        REFERENCE_PHI.to_vec(),
    )
}

/// Reference configuration with [`REFERENCE_BACKGROUND`] and one replicate.
pub fn reference_default() -> ExInParams {
    reference_truth(&[REFERENCE_BACKGROUND.to_vec()]).expect("reference configuration is valid")
}

/// Self-limiting configuration with strong excitation and inhibition.
pub fn self_limiting_strong() -> crate::baselines::SelfLimitingParams {
    crate::baselines::SelfLimitingParams {
        mu: 0.65,
        alpha: 0.65,
        eta: 5.0,
        gamma: 0.3,
        phi_window: 3.0,
    }
}

/// Same as [`self_limiting_strong`] but with weak inhibition (`γ = 0.01`).
pub fn self_limiting_weak() -> crate::baselines::SelfLimitingParams {
    crate::baselines::SelfLimitingParams {
        gamma: 0.01,
        ..self_limiting_strong()
    }
}

/// Observation window giving roughly 2,500 events for data generated from
/// the reference configuration under `variant`.
pub fn reference_horizon(variant: crate::model::ModelVariant) -> f64 {
    match variant {
        crate::model::ModelVariant::ExcInh => 7_000.0,
        crate::model::ModelVariant::ExcOnly => 5_000.0,
        crate::model::ModelVariant::InhOnly => 40_000.0,
    }
}
