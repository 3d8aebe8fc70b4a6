//! Two-stage exact model reduction for a finite-element von Kármán beam:
//! slow-fast decomposition of the axial/transverse coupling followed by a
//! single-mode spectral submanifold of the slow model.

pub mod beam;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod multilinear;
pub mod quadrature;
pub mod scalar;
pub mod sfd;
pub mod spectra;
pub mod ssm;

pub use error::{Error, Result};
