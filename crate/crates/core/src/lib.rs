//! Desk-scale laboratory for two-mode squeezed vacuum states of atoms.
//!
//! The crate covers the whole chain from state preparation to analysis:
//!
//! * [`fock`]: truncated two-mode Fock space, states and operators.
//! * [`states`]: ideal and phase-noisy two-mode squeezed vacuum.
//! * [`homodyne`]: three-mode unbalanced homodyning, quadrature densities,
//!   Monte-Carlo samples and atom-number shots.
//! * [`criteria`]: two-mode variances, Reid's EPR product and the
//!   inseparability sum.
//! * [`tomography`]: binning and the iterative maximum-likelihood
//!   reconstruction, plus bootstrap errors.
//! * [`metrics`]: fidelities, logarithmic negativity, fixed-N quantum
//!   Fisher information and squeezing fits.
//! * [`pipelines`]: end-to-end recipes for the squeezing dynamics and the
//!   simulated tomography studies.

pub mod criteria;
pub mod error;
pub mod fock;
pub mod hermite;
pub mod homodyne;
pub mod linalg;
pub mod metrics;
pub mod pipelines;
pub mod quadrature;
pub mod rng;
pub mod states;
pub mod stats;
pub mod tomography;

pub use error::{Error, Result};
pub use fock::{DensityMatrix, FockSpace, Mode, OperatorMatrix, PureState};
pub use homodyne::{HomodyneConfig, QuadratureSample, ShotRecord};
pub use states::{NoiseModel, SqueezingSchedule};

/// Dense complex matrix used for every operator on the two-mode space.
pub type CMatrix = nalgebra::DMatrix<num_complex::Complex64>;
/// Dense complex vector.
pub type CVector = nalgebra::DVector<num_complex::Complex64>;
