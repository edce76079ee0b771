//! The local correlation map.
//!
//! A reference system `ψ_1..ψ_m` with a scalar product spans a Hilbert space
//! `H`. Whitening the Gram matrix gives an orthonormal basis of `H`; a
//! pointwise Hermitian form `b_x` on the fields then becomes the operator
//! `F(x) = W B_x W*` on `H`. Pushing the volume measure through `x ↦ F(x)`
//! yields a weighted cloud of operators, the [`CorrelationGeometry`].

mod forms;
mod io;
mod measure;

pub use forms::{local_form_matrix, LocalFormSpec, ScalarProductSpec};
pub use io::{matrix_to_pairs, pairs_dim, pairs_to_matrix, AggTol, AtomFile, GeometryFile, Provenance};
pub use measure::{
    aggregate, min_separation, pushforward, regularity_report, regularity_report_with_bound, resolution_study, Atom,
    CorrelationGeometry, CorrelationMeasure, RegularityReport, ResolutionRow, SignatureCount,
};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::model::EffectiveModel;
use crate::operator_space::HermitianOperator;

/// Relative cut below which Gram eigenvalues count as zero.
pub const GRAM_RANK_CUT: f64 = 1e-10;

/// Gram matrix of a reference system together with its whitening map.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub matrix: CMat,
    /// Eigenvalues in descending order.
    pub eigenvalues: Vec<f64>,
    pub rank: usize,
    /// `rank × m` map with `W G W* = I`.
    pub whitening: CMat,
}

impl GramMatrix {
    /// Whitening by spectral decomposition. A full-rank Gram matrix is
    /// whitened by `G^{-1/2}`. Otherwise directions with eigenvalue at or
    /// below `GRAM_RANK_CUT · λ_max` are dropped, which realizes the
    /// quotient by null vectors, and the remaining eigenvectors (largest
    /// first, each with its largest entry made real positive) form the rows.
    pub fn from_matrix(matrix: CMat) -> Result<Self> {
        let matrix = linalg::hermitian_part(&matrix);
        let (ascending, vectors) = linalg::eigh(&matrix)?;
        let m = matrix.nrows();
        // descending, ties keep the solver's column order
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| ascending[b].total_cmp(&ascending[a]));
        let values: Vec<f64> = order.iter().map(|&i| ascending[i]).collect();
        let lambda_max = values.first().copied().unwrap_or(0.0);
        if !(lambda_max > 0.0) {
            return Err(Error::DegenerateSystem);
        }
        if values.iter().any(|&v| v < -1e-10 * lambda_max) {
            return Err(Error::InvalidModel("Gram matrix is not positive semidefinite".into()));
        }
        let cut = GRAM_RANK_CUT * lambda_max;
        let rank = values.iter().take_while(|&&v| v > cut).count();
        let whitening = if rank == m {
            // G^{-1/2}: independent of the eigenbasis chosen inside degenerate levels
            let scaled = CMat::from_fn(m, m, |i, r| vectors[(i, order[r])] * (1.0 / values[r].sqrt()));
            let basis = CMat::from_fn(m, m, |i, r| vectors[(i, order[r])]);
            linalg::hermitian_part(&(scaled * basis.adjoint()))
        } else {
            let mut w = CMat::zeros(rank, m);
            for r in 0..rank {
                let col = linalg::canonical_phase(vectors.column(order[r]).into_owned());
                let s = 1.0 / values[r].sqrt();
                for i in 0..m {
                    w[(r, i)] = col[i].conj() * s;
                }
            }
            w
        };
        Ok(Self {
            matrix,
            eigenvalues: values,
            rank,
            whitening,
        })
    }

    pub fn effective_dim(&self) -> usize {
        self.rank
    }

    /// `‖W G W* − I‖_F`
    pub fn whitening_defect(&self) -> f64 {
        let wgw = &self.whitening * &self.matrix * self.whitening.adjoint();
        linalg::frobenius(&(wgw - CMat::identity(self.rank, self.rank)))
    }
}

/// `G_ij = Σ_k w_k · integrand(ψ_i, ψ_j)(x_k)` for the model's scalar product.
pub fn gram(model: &EffectiveModel) -> Result<GramMatrix> {
    model.validate()?;
    let m = model.system.len();
    let mut g = CMat::zeros(m, m);
    for (k, point) in model.manifold.points.iter().enumerate() {
        g += forms::gram_integrand(model, k)? * linalg::c(point.weight, 0.0);
    }
    GramMatrix::from_matrix(g)
}

/// The local correlation map of one model: Gram data plus per-point
/// evaluation of `F(x)`.
#[derive(Debug, Clone)]
pub struct CorrelationMap<'a> {
    model: &'a EffectiveModel,
    gram: GramMatrix,
}

impl<'a> CorrelationMap<'a> {
    pub fn new(model: &'a EffectiveModel) -> Result<Self> {
        let gram = gram(model)?;
        Ok(Self { model, gram })
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    pub fn hilbert_dim(&self) -> usize {
        self.gram.rank
    }

    pub fn model(&self) -> &EffectiveModel {
        self.model
    }

    /// `F(x_k) = W B_k W*`.
    pub fn operator_at(&self, k: usize) -> Result<HermitianOperator> {
        if k >= self.model.n_points() {
            return Err(Error::InvalidArgs(format!("point {k} out of range")));
        }
        let b = local_form_matrix(self.model, k, &self.model.local_form)?;
        let w = &self.gram.whitening;
        HermitianOperator::new(w * b * w.adjoint())
    }

    /// `F(x_k)` for every point, in point order. Evaluated in parallel.
    pub fn operators(&self) -> Result<Vec<HermitianOperator>> {
        (0..self.model.n_points())
            .into_par_iter()
            .map(|k| self.operator_at(k))
            .collect()
    }
}

/// `F(x_k)` for a single point; recomputes the Gram matrix.
pub fn local_correlation(model: &EffectiveModel, point: usize) -> Result<HermitianOperator> {
    CorrelationMap::new(model)?.operator_at(point)
}
