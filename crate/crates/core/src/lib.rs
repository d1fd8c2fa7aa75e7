//! Autocorrelation and diffraction of f-weighted return time combs.
//!
//! A reference point `y`, an interval map `T` and a non-negative observable `f`
//! define a weighted Dirac comb on the integers whose weight at `z` is
//! `f(T^z(y))`. This crate builds such combs, computes their autocorrelation
//! coefficients by several independent engines (Birkhoff averages, exact cyclic
//! sums for rational rotations, circle convolutions for irrational rotations and
//! transfer operators for mixing maps) and turns them into diffraction spectra.
//!
//! Circle positions are additive: a point `θ ∈ [0, 1)` stands for the character
//! `x ↦ e^{2πiθx}`, so the trivial character sits at `θ = 0`.

pub mod autocorrelation;
pub mod combs;
pub mod convergence;
pub mod diffraction;
pub mod dynamics;
mod error;
pub mod io;
pub mod numeric;
pub mod observables;
pub mod poly;
pub mod transfer;

pub use autocorrelation::{XiEngine, XiSequence};
pub use combs::{CoefficientSeq, WeightedComb};
pub use diffraction::{Atom, DiffractionSpectrum, SpectrumKind};
pub use dynamics::{IntervalMap, MeasureSpec, ReferencePoint};
pub use error::{Error, Result};
pub use observables::Observable;
pub use transfer::{Projection, SpectralData, StationaryDensity, UlamOperator};
