//! Unitary equivalence of correlation geometries.
//!
//! Two geometries are equivalent when, after embedding the smaller Hilbert
//! space into the larger by zero padding, some unitary `U` carries every
//! atom `F_i` of the first onto an atom `F'_{π(i)}` of the second with the
//! same weight. The test is sound but incomplete: inequivalence is only
//! reported with a recomputable [`Certificate`], equivalence only with a
//! verified witness, and everything else is `Inconclusive`.

mod checks;
mod invariants;
mod witness;

pub use checks::{
    check_symmetry, diffeo_check, form_deviation, gauge_check, induced_translation_unitary, lattice_gauge_check,
    CheckConfig, GaugeReport, SymmetryReport,
};
pub use invariants::{
    compare_invariants, geometry_scale, invariant_profile, AtomInvariant, Certificate, InvariantProfile, Side,
    Tolerances, MAX_POWER,
};
pub use witness::{find_witness, LEAF_BUDGET, WITNESS_SEEDS};

use serde::{Deserialize, Serialize};

use crate::correlation::{Atom, CorrelationGeometry, CorrelationMeasure};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::operator_space::HermitianOperator;

#[derive(Debug, Clone, PartialEq)]
pub enum EquivalenceVerdict {
    Equivalent {
        /// `U F_i U* ≈ F'_{pairing[i]}` on the common Hilbert space.
        witness: CMat,
        pairing: Vec<usize>,
        /// `max_i ‖U F_i U* − F'_{pairing[i]}‖_HS`.
        residual: f64,
        weight_mismatch: f64,
    },
    Inequivalent {
        certificate: Certificate,
    },
    Inconclusive {
        reason: String,
        best_residual: Option<f64>,
    },
}

impl EquivalenceVerdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, EquivalenceVerdict::Equivalent { .. })
    }

    pub fn is_inequivalent(&self) -> bool {
        matches!(self, EquivalenceVerdict::Inequivalent { .. })
    }

    pub fn residual(&self) -> Option<f64> {
        match self {
            EquivalenceVerdict::Equivalent { residual, .. } => Some(*residual),
            EquivalenceVerdict::Inequivalent { .. } => None,
            EquivalenceVerdict::Inconclusive { best_residual, .. } => *best_residual,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            EquivalenceVerdict::Equivalent { .. } => "equivalent",
            EquivalenceVerdict::Inequivalent { .. } => "inequivalent",
            EquivalenceVerdict::Inconclusive { .. } => "inconclusive",
        }
    }

    pub fn to_file(&self) -> VerdictFile {
        let mut file = VerdictFile {
            verdict: self.label().to_string(),
            residual: self.residual(),
            weight_mismatch: None,
            certificate: None,
            witness: None,
            pairing: None,
            reason: None,
        };
        match self {
            EquivalenceVerdict::Equivalent {
                witness,
                pairing,
                weight_mismatch,
                ..
            } => {
                file.witness = Some(crate::correlation::matrix_to_pairs(witness));
                file.pairing = Some(pairing.clone());
                file.weight_mismatch = Some(*weight_mismatch);
            }
            EquivalenceVerdict::Inequivalent { certificate } => file.certificate = Some(certificate.clone()),
            EquivalenceVerdict::Inconclusive { reason, .. } => file.reason = Some(reason.clone()),
        }
        file
    }
}

/// JSON form of a verdict. The witness is a row-major list of `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictFile {
    pub verdict: String,
    pub residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_mismatch: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairing: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl VerdictFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgs(format!("verdict file: {e}")))
    }

    pub fn witness_matrix(&self) -> Result<Option<CMat>> {
        self.witness
            .as_ref()
            .map(|pairs| crate::correlation::pairs_to_matrix(pairs, crate::correlation::pairs_dim(pairs)?))
            .transpose()
    }
}

/// Zero-pad every atom to `f_target × f_target`; weights and bound are kept.
pub fn embed(geom: &CorrelationGeometry, f_target: usize) -> Result<CorrelationGeometry> {
    if f_target < geom.f {
        return Err(Error::InvalidEmbedding {
            source_dim: geom.f,
            target: f_target,
        });
    }
    if f_target == geom.f {
        return Ok(geom.clone());
    }
    let atoms = geom
        .atoms()
        .iter()
        .map(|a| {
            let mut m = CMat::zeros(f_target, f_target);
            m.view_mut((0, 0), (geom.f, geom.f)).copy_from(a.operator.entries());
            Ok(Atom::new(HermitianOperator::new(m)?, a.weight))
        })
        .collect::<Result<Vec<_>>>()?;
    CorrelationGeometry::with_bound(
        f_target,
        geom.bound,
        CorrelationMeasure {
            atoms,
            agg_tol: geom.measure.agg_tol,
        },
    )
}

/// Bring both geometries to the larger Hilbert dimension.
pub fn embed_common(
    g1: &CorrelationGeometry,
    g2: &CorrelationGeometry,
) -> Result<(CorrelationGeometry, CorrelationGeometry)> {
    let f = g1.f.max(g2.f);
    Ok((embed(g1, f)?, embed(g2, f)?))
}

/// [`check_equivalence_seeded`] with seed 0.
pub fn check_equivalence(g1: &CorrelationGeometry, g2: &CorrelationGeometry, tol: f64) -> Result<EquivalenceVerdict> {
    check_equivalence_seeded(g1, g2, tol, 0)
}

/// Embed the smaller geometry into the larger Hilbert space and search for
/// a witness. When the signature bounds differ, an atom that robustly
/// occupies a slot the other bound does not have settles inequivalence
/// before any witness search.
pub fn check_equivalence_seeded(
    g1: &CorrelationGeometry,
    g2: &CorrelationGeometry,
    tol: f64,
    seed: u64,
) -> Result<EquivalenceVerdict> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidArgs(format!("tolerance must be >= 0, got {tol}")));
    }
    let (a, b) = embed_common(g1, g2)?;
    if a.bound != b.bound {
        if let Some(certificate) = invariants::occupancy_certificate(&a, &b, tol) {
            return Ok(EquivalenceVerdict::Inequivalent { certificate });
        }
    }
    find_witness(&a, &b, tol, seed)
}
