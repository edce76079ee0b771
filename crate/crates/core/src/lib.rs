//! Correlation geometries of discretized effective models.
//!
//! A model is a sampled manifold carrying a reference system of fields. The
//! fields span a Hilbert space `H = ℂ^f`; a pointwise Hermitian form on them
//! turns every sample point into a Hermitian operator on `H`, and the volume
//! measure pushed through this map is a weighted cloud of operators. Two
//! models are considered the same when their clouds are unitarily
//! conjugate.
//!
//! - [`operator_space`]: Hermitian operators, signatures, `F^{p,q}`.
//! - [`model`]: sampled manifolds, reference systems, built-in generators,
//!   gauge and diffeomorphism transforms.
//! - [`correlation`]: Gram matrices, the local correlation map, pushforward.
//! - [`equivalence`]: invariants, witness search, gauge/diffeo/symmetry checks.
//! - [`mixing`]: convex combinations of geometries.
//!
//! All randomness goes through [`linalg::seeded_rng`], a ChaCha8 generator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correlation;
pub mod equivalence;
pub mod error;
pub mod linalg;
pub mod mixing;
pub mod model;
pub mod operator_space;

pub use correlation::{
    gram, local_correlation, local_form_matrix, pushforward, Atom, CorrelationGeometry, CorrelationMeasure,
    GeometryFile, GramMatrix, LocalFormSpec, ScalarProductSpec,
};
pub use error::{Error, Result};
pub use model::{
    apply_diffeo, apply_gauge_phase, circle_plane_waves, circle_trig_pair, lattice_dirac_sea, torus_tetrads,
    DiscreteManifold, EffectiveModel, FiberKind, GaugeField, LatticeDiracModel, ReferenceField, ReferenceSystem,
};
pub use operator_space::{
    conjugate, fpq_dimension, fpq_rank_check, hs_dist, hs_inner, in_fpq, signature, HermitianOperator, Signature,
    SignatureBound,
};
