//! Completely bounded trace and spectral norms of super-operators, computed
//! with semidefinite programs and backed by checkable certificates.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`.
//!
//! ```
//! use cbnorm::{diamond_norm, NormOptions, SuperOp};
//!
//! let res = diamond_norm(&SuperOp::transpose(2), &NormOptions::default()).unwrap();
//! assert!((res.value - 2.0).abs() < 1e-6);
//! ```

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dnorm;
pub mod error;
pub mod fidelity;
pub mod linalg;
pub mod random;
pub mod scalar;
pub mod sdp;
pub mod superop;

pub use dnorm::{
    build_channel_diff_sdp, build_general_sdp, cb_spectral_norm, diamond_norm, rebalance_stinespring,
    verify_certificate, CertificateCheck, Method, MethodChoice, NormOptions,
};
pub use error::{Error, Result};
pub use fidelity::{check_alberti_certificate, check_proposition, fidelity_closed_form, fidelity_sdp};
pub use scalar::{Real, Tolerances};
pub use sdp::{SdpOptions, SolveStatus};

/// Dense complex matrix over `f64`.
pub type Matrix = linalg::ComplexMatrix<f64>;
/// Hermitian matrix over `f64`.
pub type Hermitian = linalg::HermitianMatrix<f64>;
/// Super-operator over `f64`.
pub type SuperOp = superop::SuperOp<f64>;
pub type StinespringPair = superop::StinespringPair<f64>;
pub type NormResult = dnorm::NormResult<f64>;
pub type NormCertificate = dnorm::NormCertificate<f64>;
pub type SdpProblem = sdp::SdpProblem<f64>;
pub type SdpSolution = sdp::SdpSolution<f64>;
pub type FidelityResult = fidelity::FidelityResult<f64>;

/// Single precision variants.
pub type Matrix32 = linalg::ComplexMatrix<f32>;
pub type SuperOp32 = superop::SuperOp<f32>;
