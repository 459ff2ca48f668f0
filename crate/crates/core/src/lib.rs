//! Spatial scattering modulation with multipath component aggregation (MCA-SSM).
//!
//! The crate covers the whole link: a sparse multipath MIMO channel built from
//! per-component gains and angles, the whitened effective channel seen by the
//! receive RF chains, the closed-form max-min Euclidean distance design of the
//! aggregation matrix, maximum-likelihood detection, seeded Monte-Carlo bit
//! error simulation and the union upper bound on the average bit error
//! probability. Conventional SSM (`W = I`) and generalized SSM are available as
//! baselines.
//!
//! ```
//! use mcassm::{channel, array, constellation::{Constellation, Family}, design};
//!
//! let scenario = channel::reference_scenario();
//! let eff = array::effective_channel(&scenario, 4).unwrap();
//! let qam = Constellation::new(Family::SquareQam, 16).unwrap();
//! let opt = design::optimize(&eff, &qam, 4, 2).unwrap();
//! assert!(opt.design.min_ed > 0.0);
//! ```

pub mod analysis;
pub mod array;
pub mod channel;
pub mod constellation;
pub mod design;
pub mod digest;
mod error;
pub mod link;
pub mod qfunc;
pub mod rng;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Dense complex matrix used for channels, whiteners and precoders.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<Complex64>;
