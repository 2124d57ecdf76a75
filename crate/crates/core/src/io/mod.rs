//! File formats: event and covariate CSVs, key-value parameter and config
//! documents, posterior draw tables and run manifests.

mod covariates;
mod draws;
mod events;
mod kv;
mod manifest;

pub use covariates::ingest_covariates;
pub use draws::{column_names, flatten, read_draws, unflatten, write_draws};
pub use events::{ingest_events, read_events, write_events, EventData, Labels};
pub use kv::{
    params_from_kv, params_from_str, params_to_kv, params_to_string, parse_kv, read_params, render_kv,
    write_params,
};
pub use manifest::{file_digest, Manifest};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
