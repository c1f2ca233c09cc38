//! Reflected entropy, mutual information and logarithmic negativity between
//! two disjoint intervals of a free chain in quasiparticle excited states.
//!
//! The main route builds `ρ_AB` in non-orthonormal subsystem bases
//! ([`statebuilder`]), orthonormalizes it against the Gram matrices and
//! evaluates the measures ([`measures`]). [`oracle`] recomputes the same
//! quantities by brute force in the site-occupation basis.

pub mod combinatorics;
pub mod error;
pub mod linalg;
pub mod measures;
pub mod model;
pub mod oracle;
pub mod output;
pub mod parallel;
pub mod statebuilder;
pub mod sweeps;

pub use combinatorics::{MomentumMultiset, Splitting};
pub use error::{QentError, Result};
pub use measures::{MeasureSet, OrthoDensity};
pub use model::{Geometry, Statistics};
pub use parallel::Execution;
pub use statebuilder::{ClassicalState, NonOrthoDensity};
