//! Spectral Galerkin simulation of the stochastic heat equation with
//! logarithmic nonlinearity
//!
//! ```text
//! du = (u_xx + u log|u|) dt + sigma(u) (eps dW + h dt)   on (0, L),  u = 0 on the boundary,
//! ```
//!
//! driven by one scalar Brownian motion `W`, together with the controlled
//! (skeleton) equation, its discrete adjoint, rate-function optimization and
//! Monte Carlo rare-event estimates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coefficients;
pub mod error;
pub mod io;
pub mod ldp;
pub mod quadrature;
pub mod skeleton;
pub mod spde;
pub mod spectral;
pub mod stats;
pub mod trajectory;

pub use coefficients::{CoefficientSet, HConstants, Sigma};
pub use error::{Error, Result};
pub use skeleton::{Control, OracleMode, ReactionScheme, Scheme, SkeletonConfig};
pub use spde::NoisePath;
pub use spectral::{Domain, DomainConfig, SpectralField};
pub use trajectory::Trajectory;
