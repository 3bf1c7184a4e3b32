//! Distributionally robust optimal stopping for a seller receiving `n`
//! sequential offers.
//!
//! The seller commits to a stopping rule knowing only partial information
//! about the offer-value distributions (mean, dispersion, support bound);
//! nature then picks the worst distributions consistent with that
//! information. The maximin solution is a schedule of nonincreasing
//! thresholds `T(0..n)` computed by a backward recursion
//!
//! ```text
//! T(n) = 0,
//! T(i) = T(i+1) + mu - max_P E[min(T(i+1), X)],
//! ```
//!
//! where the max runs over the ambiguity set. The crate provides:
//!
//! - [`ambiguity`]: ambiguity-set specifications, non-emptiness checks and
//!   canonical member distributions;
//! - [`momentbound`]: tight closed-form bounds on `E[min(xi, X)]` with
//!   extremal distributions and dual majorant certificates;
//! - [`thresholds`]: the generic backward recursion plus every closed-form
//!   threshold schedule, turning-point analysis and asymptotic payoffs;
//! - [`game`]: a seeded Monte Carlo simulator of the seller-vs-nature game;
//! - [`oracle`]: brute-force verifiers (grid search, support enumeration,
//!   certificate checking) that everything else is validated against.

pub mod ambiguity;
pub mod game;
pub mod momentbound;
pub mod oracle;
pub mod thresholds;

mod error;

pub use error::{Error, Result};

pub use ambiguity::{AmbiguitySpec, DiscreteDistribution, Moments, SpecKind, ValidatedSpec};
pub use momentbound::{Majorant, MajorantBasis, MomentBoundCertificate};
pub use thresholds::{ThresholdSchedule, TurningPointReport};
