//! Model-preserving sensitivity analysis for Gaussian conditional-independence models.
//!
//! Covariance perturbations are applied multiplicatively, `Σ ↦ Δ̃∘Δ∘Σ`, where
//! the variation `Δ` changes the parameters of interest and the covariation
//! `Δ̃` adjusts enough other entries that every vanishing minor defining the
//! model keeps vanishing. The crate provides:
//!
//! - [`matcore`]: small dense symmetric-matrix kernel (minors, inverse, PSD test).
//! - [`cimodel`]: CI statements and their vanishing-minor membership test.
//! - [`graphmodels`]: Gaussian DAGs and undirected graphs.
//! - [`covariation`]: variation matrices, covariation schemes and their composition.
//! - [`divergence`]: KL divergence and Frobenius distance between the two Gaussians.
//! - [`conditioning`]: conditional moments under evidence.
//! - [`analysis`]: model files, one- and two-way sweeps and report emission.

pub mod analysis;
pub mod cimodel;
pub mod conditioning;
pub mod covariation;
pub mod divergence;
pub mod error;
pub mod fixtures;
pub mod graphmodels;
pub mod matcore;

pub use cimodel::{ci_holds, model_holds, CISet, CIStatement};
pub use error::{Error, Result};
pub use matcore::{IndexSet, SymMatrix, TolPolicy};
