//! Utility-region analysis for interference-coupled wireless networks.
//!
//! The crate evaluates standard interference mappings and their norm-augmented
//! and asymptotic counterparts, computes nonlinear spectral radii through
//! conditional eigenpairs, classifies SINR and rate vectors against the
//! feasible regions, certifies convexity through inverse Z-matrix tests,
//! maximizes weighted sum rates, and generates cell-less uplink scenarios.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64` for everyday use.

pub mod certificates;
pub mod error;
pub mod linalg;
pub mod mappings;
pub mod presets;
pub mod regions;
pub mod scalar;
pub mod scenario;
pub mod spectral;
pub mod sumrate;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use mappings::{
    AffineInterferenceModel, AffinePiece, AsymptoticMapping, InfFamily, InterferenceMapping,
    NormAugmentedMapping, PolyhedralMonotoneNorm,
};
pub use scalar::Real;

pub type Matrix64 = Matrix<f64>;
pub type AffineModel = AffineInterferenceModel<f64>;
pub type AffineModelF32 = AffineInterferenceModel<f32>;
pub type Norm = PolyhedralMonotoneNorm<f64>;
pub type NormF32 = PolyhedralMonotoneNorm<f32>;
pub type Mapping = InterferenceMapping<f64>;
pub type MappingF32 = InterferenceMapping<f32>;
pub type EigenResult = spectral::EigenResult<f64>;
pub type FeasibilityVerdict = spectral::FeasibilityVerdict<f64>;
pub type BoundaryPoint = regions::BoundaryPoint<f64>;
pub type CertificateReport = certificates::CertificateReport<f64>;
pub type ConjectureReport = certificates::ConjectureReport<f64>;
pub type SumRateSolution = sumrate::SumRateSolution<f64>;
