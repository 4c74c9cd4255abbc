//! Interference mappings, their norm-augmented and asymptotic forms, and
//! polyhedral monotone norms.

mod affine;
mod mapping;
mod norm;

pub use affine::AffineInterferenceModel;
pub use mapping::{AffinePiece, AsymptoticMapping, InfFamily, InterferenceMapping, NormAugmentedMapping};
pub use norm::PolyhedralMonotoneNorm;
