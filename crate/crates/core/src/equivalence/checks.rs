//! Gauge, diffeomorphism and symmetry checks built on the equivalence test.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::correlation::{aggregate, local_form_matrix, pushforward, CorrelationGeometry, CorrelationMap};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};
use crate::model::{
    apply_diffeo, apply_gauge_phase, lattice_dirac_sea, EffectiveModel, GaugeField, LatticeDiracModel, ModelFamily,
};
use crate::operator_space::hs_dist_unchecked;

use super::invariants::geometry_scale;
use super::witness::conjugate_atoms;
use super::{check_equivalence_seeded, EquivalenceVerdict};

/// Tolerances and seed shared by the model-level checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckConfig {
    /// Relative tolerance for equivalence verdicts.
    pub tol: f64,
    /// Aggregation tolerance for building geometries.
    pub agg_tol: f64,
    pub seed: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            agg_tol: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaugeReport {
    /// `max_k ‖B'_k − B_k‖_F / max_k ‖B_k‖_F` over sample points.
    pub deviation: f64,
    /// Point attaining the largest absolute deviation.
    pub worst_point: usize,
    pub verdict: EquivalenceVerdict,
}

/// Largest change of the local form matrices between two models on the
/// same point set, relative to the largest form matrix of `before`.
pub fn form_deviation(before: &EffectiveModel, after: &EffectiveModel) -> Result<(f64, usize)> {
    if before.n_points() != after.n_points() {
        return Err(Error::DimMismatch {
            expected: before.n_points(),
            found: after.n_points(),
        });
    }
    let mut worst = (0.0_f64, 0usize);
    let mut size = 0.0_f64;
    for k in 0..before.n_points() {
        let b = local_form_matrix(before, k, &before.local_form)?;
        let b2 = local_form_matrix(after, k, &after.local_form)?;
        size = size.max(linalg::frobenius(&b));
        let d = hs_dist_unchecked(&b, &b2);
        if d > worst.0 {
            worst = (d, k);
        }
    }
    let rel = if size > 0.0 { worst.0 / size } else { worst.0 };
    Ok((rel, worst.1))
}

/// Compare a model with its gauge transform `ψ → e^{−iqχ}ψ`.
///
/// Only local forms that commute with pointwise phases are admitted.
pub fn gauge_check(model: &EffectiveModel, chi: &GaugeField, q: f64, cfg: &CheckConfig) -> Result<GaugeReport> {
    if !model.local_form.is_pointwise_sesquilinear() {
        return Err(Error::FormNotCovariant(format!(
            "{:?} involves derivatives of the fields",
            model.local_form
        )));
    }
    let gauged = apply_gauge_phase(model, chi, q)?;
    let (deviation, worst_point) = form_deviation(model, &gauged)?;
    let g1 = pushforward(model, cfg.agg_tol)?;
    let g2 = pushforward(&gauged, cfg.agg_tol)?;
    let verdict = check_equivalence_seeded(&g1, &g2, cfg.tol, cfg.seed)?;
    Ok(GaugeReport {
        deviation,
        worst_point,
        verdict,
    })
}

/// Rebuild the lattice Dirac sea after `A → A + Δχ/a` and compare the
/// geometries. The two seas differ by the site phases `e^{−iqχ}` and a
/// unitary change of basis within each energy level.
pub fn lattice_gauge_check(
    lattice: &LatticeDiracModel,
    m_fields: usize,
    chi: &[f64],
    cfg: &CheckConfig,
) -> Result<EquivalenceVerdict> {
    let shifted = lattice.gauge_shifted(chi)?;
    let g1 = pushforward(&lattice_dirac_sea(lattice, m_fields)?, cfg.agg_tol)?;
    let g2 = pushforward(&lattice_dirac_sea(&shifted, m_fields)?, cfg.agg_tol)?;
    check_equivalence_seeded(&g1, &g2, cfg.tol, cfg.seed)
}

/// Compare a model with its transport along a point bijection.
pub fn diffeo_check(
    model: &EffectiveModel,
    perm: &[usize],
    jacobians: &[DMatrix<f64>],
    cfg: &CheckConfig,
) -> Result<EquivalenceVerdict> {
    let moved = apply_diffeo(model, perm, jacobians)?;
    let g1 = pushforward(model, cfg.agg_tol)?;
    let g2 = pushforward(&moved, cfg.agg_tol)?;
    check_equivalence_seeded(&g1, &g2, cfg.tol, cfg.seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub symmetric: bool,
    /// Largest paired Hilbert–Schmidt distance when a matching exists,
    /// otherwise the Hausdorff distance between the two atom clouds.
    pub discrepancy: f64,
    /// Largest paired weight difference (0 when unmatched clouds are
    /// compared by distance only).
    pub weight_discrepancy: f64,
    pub atom_count: usize,
    pub conjugated_atom_count: usize,
}

/// Augmenting-path bipartite matching on a sparse edge list.
fn perfect_matching(adj: &[Vec<usize>], n_right: usize) -> Option<Vec<usize>> {
    fn augment(u: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [usize]) -> bool {
        for &v in &adj[u] {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if owner[v] == usize::MAX || augment(owner[v], adj, seen, owner) {
                owner[v] = u;
                return true;
            }
        }
        false
    }
    let mut owner = vec![usize::MAX; n_right];
    for u in 0..adj.len() {
        let mut seen = vec![false; n_right];
        if !augment(u, adj, &mut seen, &mut owner) {
            return None;
        }
    }
    let mut pairing = vec![usize::MAX; adj.len()];
    for (v, &u) in owner.iter().enumerate() {
        if u != usize::MAX {
            pairing[u] = v;
        }
    }
    Some(pairing)
}

/// Whether conjugation by `u` preserves the measure: conjugate every atom,
/// re-aggregate at the geometry's tolerance, and look for a perfect
/// matching with pair distances within `tol · scale` and weight
/// differences within `tol · max(1, w)`.
pub fn check_symmetry(geom: &CorrelationGeometry, u: &CMat, tol: f64) -> Result<SymmetryReport> {
    if u.nrows() != geom.f || u.ncols() != geom.f {
        return Err(Error::DimMismatch {
            expected: geom.f,
            found: u.nrows(),
        });
    }
    linalg::ensure_unitary(u)?;
    if !(tol >= 0.0) {
        return Err(Error::InvalidArgs(format!("tolerance must be >= 0, got {tol}")));
    }
    let items = conjugate_atoms(geom, u)
        .into_iter()
        .zip(geom.atoms().iter().map(|a| a.weight))
        .collect();
    let moved = aggregate(items, geom.measure.agg_tol)?;
    let atoms = geom.atoms();
    let (n, m) = (atoms.len(), moved.atoms.len());
    let threshold = tol * geometry_scale(geom);
    let dist: Vec<Vec<f64>> = atoms
        .iter()
        .map(|a| {
            moved
                .atoms
                .iter()
                .map(|b| hs_dist_unchecked(a.operator.entries(), b.operator.entries()))
                .collect()
        })
        .collect();
    let weight_ok = |i: usize, j: usize| {
        let (w1, w2) = (atoms[i].weight, moved.atoms[j].weight);
        (w1 - w2).abs() <= tol * w1.max(w2).max(1.0)
    };
    let matching = if n == m {
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|i| (0..m).filter(|&j| dist[i][j] <= threshold && weight_ok(i, j)).collect())
            .collect();
        perfect_matching(&adj, m)
    } else {
        None
    };
    Ok(match matching {
        Some(pairing) => {
            let mut discrepancy = 0.0_f64;
            let mut weight_discrepancy = 0.0_f64;
            for (i, &j) in pairing.iter().enumerate() {
                discrepancy = discrepancy.max(dist[i][j]);
                weight_discrepancy = weight_discrepancy.max((atoms[i].weight - moved.atoms[j].weight).abs());
            }
            SymmetryReport {
                symmetric: true,
                discrepancy,
                weight_discrepancy,
                atom_count: n,
                conjugated_atom_count: m,
            }
        }
        None => {
            let forward = dist
                .iter()
                .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
                .fold(0.0_f64, f64::max);
            let backward = (0..m)
                .map(|j| dist.iter().map(|row| row[j]).fold(f64::INFINITY, f64::min))
                .fold(0.0_f64, f64::max);
            SymmetryReport {
                symmetric: false,
                discrepancy: forward.max(backward),
                weight_discrepancy: 0.0,
                atom_count: n,
                conjugated_atom_count: m,
            }
        }
    })
}

/// Unitary on the whitened Hilbert space induced by the rotation
/// `θ → θ + 2π·shift/N` of a plane-wave circle model.
///
/// The rotation multiplies `e^{ikθ}` by `t_k = e^{ikδ}`, so
/// `B_{θ+δ} = T* B_θ T` with `T = diag(t_k)` and
/// `U = W T* G W*` satisfies `U F(θ) U* = F(θ + δ)`.
pub fn induced_translation_unitary(model: &EffectiveModel, shift: i64) -> Result<CMat> {
    let Some(ModelFamily::CirclePlaneWaves { n, k_max, .. }) = model.family else {
        return Err(Error::Unsupported(
            "translation unitaries are only defined for plane-wave circle models".into(),
        ));
    };
    let map = CorrelationMap::new(model)?;
    let gram = map.gram();
    let m = 2 * k_max + 1;
    let s = shift.rem_euclid(n as i64);
    let delta = 2.0 * std::f64::consts::PI * s as f64 / n as f64;
    let t_conj = CMat::from_fn(m, m, |i, j| {
        if i == j {
            let k = i as f64 - k_max as f64;
            c((k * delta).cos(), -(k * delta).sin())
        } else {
            c(0.0, 0.0)
        }
    });
    let w = &gram.whitening;
    let u = w * t_conj * &gram.matrix * w.adjoint();
    linalg::ensure_unitary(&u)?;
    Ok(u)
}
