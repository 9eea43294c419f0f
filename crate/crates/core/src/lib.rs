//! Local Wasserstein distances, self-similarity coefficients and flatness
//! coefficients for finite weighted point clouds.
//!
//! A [`DiscreteMeasure`] stands in for a doubling Radon measure. Every
//! coefficient works on blow-ups `μ₀^{x,r}` (the measure rescaled so that
//! `B(x,r)` becomes the open unit ball `𝔹` and normalized to carry mass one
//! there) and compares them with the local distance `W₁`: the supremum of
//! `|∫ψ dμ − ∫ψ dν|` over 1-Lipschitz `ψ` vanishing outside `𝔹`.
//!
//! - [`transport`] evaluates `W₁` and its smoothed variant `W_φ` exactly, as
//!   finite transshipment problems with a boundary node.
//! - [`alpha`] computes the dilation and similarity coefficients `α_𝒟`, `α_𝒢`
//!   and the flatness coefficients `α_d`.
//! - [`multiscale`] sweeps dyadic ladders and forms discretized Dini sums.
//! - [`classify`] labels probe points as atoms, `d`-rectifiable points or
//!   unclassified.
//! - [`generators`] builds the synthetic corpus (flat lattices, IFS measures,
//!   Koch-type snowflakes).
//! - [`verify`] is a seeded harness checking the comparison inequalities
//!   between `W₁` and `W_φ`.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod alpha;
pub mod classify;
mod error;
pub mod generators;
pub mod linalg;
pub mod math;
pub mod measure;
pub mod multiscale;
pub mod transport;
pub mod verify;

pub use alpha::{AlphaProfile, GroupWindow, SearchConfig};
pub use classify::{ClassificationReport, ClassifyConfig, StratumKind, StratumLabel};
pub use error::{Error, Result};
pub use measure::{BallQuery, DiscreteMeasure, SimilarityMap};
pub use multiscale::{DiniReport, DiniWeight, ScaleLadder};
pub use transport::{default_bump, BumpFunction, DualSolution, TransportConfig};
