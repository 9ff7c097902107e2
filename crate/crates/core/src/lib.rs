//! Numerical laboratory for maximal partial sums of wavelet-type orthonormal
//! systems on `[0,1)`: dyadic grids, Haar and Franklin systems, the operators
//! acting on them, constant estimators for the supporting inequalities, and an
//! extremal search for the growth of the maximal projection norm.

pub mod error;
pub mod extremal;
pub mod grid;
pub mod operators;
pub mod lemmas;
pub mod random;
pub mod stats;
pub mod systems;

pub use error::{LabError, Result};
pub use grid::{DyadicGrid, DyadicInterval, Interval, SampledFunction, MAX_LEVEL};
pub use systems::{center, xi, Center, Localization, OrthonormalSystem};
pub use operators::{ChainKind, CoefficientVector, IndexChain, MaximalMode, MaximalOutput};
pub use lemmas::{ConstantEstimate, Lemma, LemmaParams, LemmaReport, Witness};
