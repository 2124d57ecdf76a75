//! Multivariate Hawkes processes with additive excitation and multiplicative
//! inhibition.
//!
//! The conditional intensity of mark `k` is
//!
//! ```text
//! λ_k(t) = (μ_k(t) + G_k(t)) · H_k(t)
//! G_k(t) = Σ_{t_i < t} α_{m_i,k} / η_{m_i} · exp(−(t − t_i)/η_{m_i})
//! H_k(t) = exp(−Σ_{t_i < t} γ_{m_i,k} · exp(−(t − t_i)/φ_{m_i}))
//! ```
//!
//! with a covariate-driven background `μ_k(t)`. The crate simulates such
//! processes, evaluates their likelihood, fits them by MCMC with
//! spike-and-slab selection of every excitatory or inhibitory edge, and
//! checks fits with residual-time and WAIC diagnostics.

pub mod baselines;
pub mod diagnostics;
pub mod error;
pub mod inference;
pub mod io;
pub mod likelihood;
pub mod model;
pub mod presets;
pub mod quadrature;
pub mod rng;
pub mod run;
pub mod simulate;

pub use error::{HawkesError, Result};
