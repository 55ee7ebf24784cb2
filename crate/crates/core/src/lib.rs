//! Generalized Omnibus embeddings of multiple graphs.
//!
//! The crate covers the whole workflow: sampling correlated random dot
//! product graphs ([`jrdpg`]), assembling weighted Omnibus matrices
//! ([`omni`]), embedding them ([`spectral`]), computing the correlation a
//! weighting induces between graph embeddings ([`corr_theory`]), searching
//! for weights that induce a target correlation ([`corr2omni`]) and
//! downstream inference ([`analysis`]).

pub mod analysis;
pub mod corr2omni;
pub mod corr_theory;
pub mod error;
pub mod experiments;
pub mod graph_store;
pub mod jrdpg;
pub mod omni;
pub mod qp;
pub mod rng;
pub mod spectral;

pub use corr_theory::{induced_correlation, CorrRole, CorrelationMatrix};
pub use error::{Error, Result};
pub use graph_store::{GraphCollection, MatrixFormat};
pub use omni::{OmniWeights, WeightRowSums};
