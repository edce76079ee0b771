//! Witness search for unitary equivalence.
//!
//! Atoms are paired by individualization and refinement: weight and
//! spectrum give initial candidate sets, and every fixed pair `(i, j)`
//! prunes the others by requiring `tr(F_k F_i) = tr(F'_l F'_j)`. A complete
//! pairing is turned into a unitary by diagonalizing a generic combination
//! `A = Σ c_i F_i` and its image `A'`, then solving the linear intertwiner
//! equations `P'_k R = R P_k` for a block-diagonal `R` in the two
//! eigenbases. The polar part of a generic null vector gives the witness
//! `U = V' R V*`, which is accepted only after every pair has been checked.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::correlation::CorrelationGeometry;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, SeededRng};
use crate::operator_space::{conjugate_unchecked, hs_dist_unchecked, hs_inner_unchecked};

use super::invariants::{compare_invariants, geometry_scale, Tolerances};
use super::EquivalenceVerdict;

/// Complete pairings tried before giving up.
pub const LEAF_BUDGET: usize = 2048;
/// Random combinations tried per pairing.
pub const WITNESS_SEEDS: u64 = 8;
/// Relative eigenvalue gap below which eigenvalues of `A` share a block.
const CLUSTER_GAP: f64 = 1e-6;
/// Number of random combinations the intertwiner equations are imposed on.
const COMBINATIONS: usize = 6;

struct Cloud<'a> {
    ops: Vec<&'a CMat>,
    weights: Vec<f64>,
    spectra: Vec<&'a [f64]>,
    fro: Vec<f64>,
}

impl<'a> Cloud<'a> {
    fn new(geom: &'a CorrelationGeometry) -> Self {
        Self {
            ops: geom.atoms().iter().map(|a| a.operator.entries()).collect(),
            weights: geom.atoms().iter().map(|a| a.weight).collect(),
            spectra: geom.atoms().iter().map(|a| a.operator.spectrum()).collect(),
            fro: geom.atoms().iter().map(|a| a.operator.frobenius_norm()).collect(),
        }
    }

    fn len(&self) -> usize {
        self.ops.len()
    }

    fn inner_row(&self, i: usize) -> Vec<f64> {
        self.ops.iter().map(|b| hs_inner_unchecked(self.ops[i], b)).collect()
    }
}

enum Attempt {
    Found { unitary: CMat, residual: f64 },
    WrongPairing,
    Failed { residual: f64 },
}

struct Search<'a> {
    left: Cloud<'a>,
    right: Cloud<'a>,
    tols: Tolerances,
    /// Rounding allowance added to every comparison.
    noise: f64,
    seed: u64,
    leaves: usize,
    best_residual: Option<f64>,
    left_rows: Vec<Option<Vec<f64>>>,
    right_rows: Vec<Option<Vec<f64>>>,
}

/// Search for a unitary `U` with `U F_i U* ≈ F'_{π(i)}` and matching weights.
///
/// Both geometries must act on the same Hilbert dimension (see
/// [`super::embed`]). Differing invariants give `Inequivalent`; a pairing
/// and unitary verified to `tol · scale` give `Equivalent`; anything else is
/// `Inconclusive`. `scale` is the largest atom spectral norm. The identity
/// with same-index pairing is tried before any search.
pub fn find_witness(
    g1: &CorrelationGeometry,
    g2: &CorrelationGeometry,
    tol: f64,
    seed: u64,
) -> Result<EquivalenceVerdict> {
    if g1.f != g2.f {
        return Err(Error::DimMismatch {
            expected: g1.f,
            found: g2.f,
        });
    }
    if !(tol >= 0.0) {
        return Err(Error::InvalidArgs(format!("tolerance must be >= 0, got {tol}")));
    }
    if let Some(certificate) = compare_invariants(g1, g2, tol) {
        return Ok(EquivalenceVerdict::Inequivalent { certificate });
    }
    let (n1, n2) = (g1.atoms().len(), g2.atoms().len());
    if n1 != n2 {
        return Ok(EquivalenceVerdict::Inconclusive {
            reason: format!("invariants agree but atom counts differ ({n1} vs {n2})"),
            best_residual: None,
        });
    }
    if n1 == 0 {
        return Ok(EquivalenceVerdict::Equivalent {
            witness: CMat::identity(g1.f, g1.f),
            pairing: Vec::new(),
            residual: 0.0,
            weight_mismatch: 0.0,
        });
    }
    if let Some(v) = identity_verdict(g1, g2, tol) {
        return Ok(v);
    }
    let scale = geometry_scale(g1).max(geometry_scale(g2));
    let mut search = Search {
        left: Cloud::new(g1),
        right: Cloud::new(g2),
        tols: Tolerances::new(g1, g2, tol),
        noise: 1e-11 * scale * (g1.f as f64).sqrt(),
        seed,
        leaves: 0,
        best_residual: None,
        left_rows: vec![None; n1],
        right_rows: vec![None; n1],
    };
    let Some(candidates) = search.initial_candidates() else {
        return Ok(EquivalenceVerdict::Inconclusive {
            reason: "no atom of the second geometry matches some atom's weight and spectrum".into(),
            best_residual: None,
        });
    };
    match search.branch(candidates, vec![false; n1])? {
        Some((pairing, witness, residual)) => {
            let weight_mismatch = pairing.iter().enumerate().fold(0.0_f64, |m, (i, &j)| {
                m.max((search.left.weights[i] - search.right.weights[j]).abs())
            });
            Ok(EquivalenceVerdict::Equivalent {
                witness,
                pairing,
                residual,
                weight_mismatch,
            })
        }
        None => {
            let reason = if search.leaves >= LEAF_BUDGET {
                format!("pairing search exhausted its budget of {LEAF_BUDGET} complete pairings")
            } else if search.leaves == 0 {
                "no pairing of atoms is consistent with their mutual inner products".into()
            } else {
                format!("no verified witness among {} candidate pairings", search.leaves)
            };
            Ok(EquivalenceVerdict::Inconclusive {
                reason,
                best_residual: search.best_residual,
            })
        }
    }
}

/// Same-index pairing with the identity as witness, if it verifies.
pub(crate) fn identity_verdict(
    g1: &CorrelationGeometry,
    g2: &CorrelationGeometry,
    tol: f64,
) -> Option<EquivalenceVerdict> {
    if g1.f != g2.f || g1.atoms().len() != g2.atoms().len() {
        return None;
    }
    let tols = Tolerances::new(g1, g2, tol);
    let mut residual = 0.0_f64;
    let mut weight_mismatch = 0.0_f64;
    for (a, b) in g1.atoms().iter().zip(g2.atoms()) {
        residual = residual.max(hs_dist_unchecked(a.operator.entries(), b.operator.entries()));
        weight_mismatch = weight_mismatch.max((a.weight - b.weight).abs());
    }
    (residual <= tols.delta && weight_mismatch <= tols.weight).then(|| EquivalenceVerdict::Equivalent {
        witness: CMat::identity(g1.f, g1.f),
        pairing: (0..g1.atoms().len()).collect(),
        residual,
        weight_mismatch,
    })
}

fn spectral_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

impl<'a> Search<'a> {
    fn initial_candidates(&self) -> Option<Vec<Vec<usize>>> {
        let spec_tol = self.tols.delta + self.noise;
        (0..self.left.len())
            .map(|i| {
                let list: Vec<usize> = (0..self.right.len())
                    .filter(|&j| {
                        (self.left.weights[i] - self.right.weights[j]).abs() <= self.tols.weight
                            && spectral_gap(self.left.spectra[i], self.right.spectra[j]) <= spec_tol
                    })
                    .collect();
                (!list.is_empty()).then_some(list)
            })
            .collect()
    }

    fn row(&mut self, right: bool, i: usize) -> &[f64] {
        let (cloud, cache) = if right {
            (&self.right, &mut self.right_rows)
        } else {
            (&self.left, &mut self.left_rows)
        };
        cache[i].get_or_insert_with(|| cloud.inner_row(i))
    }

    /// Fix every singleton candidate as an anchor and prune the rest.
    /// Returns false on a contradiction.
    fn propagate(&mut self, cand: &mut [Vec<usize>], anchored: &mut [bool]) -> bool {
        let n = cand.len();
        loop {
            let Some(i) = (0..n).find(|&i| !anchored[i] && cand[i].len() == 1) else {
                return true;
            };
            anchored[i] = true;
            let j = cand[i][0];
            let left_row = self.row(false, i).to_vec();
            let right_row = self.row(true, j).to_vec();
            let delta = self.tols.delta;
            for k in 0..n {
                if k == i {
                    continue;
                }
                let fk = self.left.fro[k];
                let fi = self.left.fro[i];
                let eps = delta * (fk + fi + delta) + self.noise * (fk * fi + 1.0);
                cand[k].retain(|&l| l != j && (left_row[k] - right_row[l]).abs() <= eps);
                if cand[k].is_empty() {
                    return false;
                }
            }
        }
    }

    fn branch(
        &mut self,
        mut cand: Vec<Vec<usize>>,
        mut anchored: Vec<bool>,
    ) -> Result<Option<(Vec<usize>, CMat, f64)>> {
        if self.leaves >= LEAF_BUDGET || !self.propagate(&mut cand, &mut anchored) {
            return Ok(None);
        }
        let open = (0..cand.len())
            .filter(|&i| cand[i].len() > 1)
            .min_by_key(|&i| cand[i].len());
        let Some(i) = open else {
            self.leaves += 1;
            let pairing: Vec<usize> = cand.iter().map(|c| c[0]).collect();
            return Ok(self.witness(&pairing)?.map(|(u, r)| (pairing, u, r)));
        };
        let mut order = cand[i].clone();
        if let Some(pos) = order.iter().position(|&j| j == i) {
            order[..=pos].rotate_right(1);
        }
        for j in order {
            let mut next = cand.clone();
            next[i] = vec![j];
            if let Some(found) = self.branch(next, anchored.clone())? {
                return Ok(Some(found));
            }
            if self.leaves >= LEAF_BUDGET {
                break;
            }
        }
        Ok(None)
    }

    fn witness(&mut self, pairing: &[usize]) -> Result<Option<(CMat, f64)>> {
        for s in 0..WITNESS_SEEDS {
            let mut rng = linalg::seeded_rng(linalg::sub_seed(self.seed, s));
            match self.attempt(pairing, &mut rng)? {
                Attempt::Found { unitary, residual } => {
                    self.note_residual(residual);
                    return Ok(Some((unitary, residual)));
                }
                Attempt::WrongPairing => return Ok(None),
                Attempt::Failed { residual } => self.note_residual(residual),
            }
        }
        Ok(None)
    }

    fn note_residual(&mut self, r: f64) {
        self.best_residual = Some(self.best_residual.map_or(r, |b| b.min(r)));
    }

    fn combination(&self, coeffs: &[f64], pairing: &[usize]) -> (CMat, CMat) {
        let f = self.left.ops[0].nrows();
        let mut a = CMat::zeros(f, f);
        let mut b = CMat::zeros(f, f);
        for (i, &ci) in coeffs.iter().enumerate() {
            a += self.left.ops[i] * c(ci, 0.0);
            b += self.right.ops[pairing[i]] * c(ci, 0.0);
        }
        (linalg::hermitian_part(&a), linalg::hermitian_part(&b))
    }

    fn attempt(&self, pairing: &[usize], rng: &mut SeededRng) -> Result<Attempt> {
        let n = pairing.len();
        let f = self.left.ops[0].nrows();
        let coeffs: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let (a, a2) = self.combination(&coeffs, pairing);
        let (la, va) = linalg::eigh(&a)?;
        let (lb, vb) = linalg::eigh(&a2)?;
        let weight: f64 = coeffs.iter().map(|x| x.abs()).sum();
        if spectral_gap(&la, &lb) > weight * (self.tols.delta + self.noise) {
            return Ok(Attempt::WrongPairing);
        }
        let norm_a = la.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mut blocks: Vec<(usize, usize)> = Vec::new();
        let mut start = 0;
        for k in 1..=f {
            if k == f || la[k] - la[k - 1] > CLUSTER_GAP * norm_a {
                blocks.push((start, k));
                start = k;
            }
        }
        let (left_terms, right_terms): (Vec<CMat>, Vec<CMat>) = if n <= COMBINATIONS {
            (0..n)
                .map(|i| (self.left.ops[i].clone(), self.right.ops[pairing[i]].clone()))
                .unzip()
        } else {
            (0..COMBINATIONS)
                .map(|_| {
                    let cs: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                    self.combination(&cs, pairing)
                })
                .unzip()
        };
        let p: Vec<CMat> = left_terms.iter().map(|b| va.adjoint() * b * &va).collect();
        let p2: Vec<CMat> = right_terms.iter().map(|b| vb.adjoint() * b * &vb).collect();
        let r = intertwiner(&blocks, &p, &p2, f, rng)?;
        let unitary = &vb * r * va.adjoint();
        let mut residual = 0.0_f64;
        for (i, &j) in pairing.iter().enumerate() {
            let moved = &unitary * self.left.ops[i] * unitary.adjoint();
            residual = residual.max(hs_dist_unchecked(&moved, self.right.ops[j]));
        }
        Ok(if residual <= self.tols.delta {
            Attempt::Found { unitary, residual }
        } else {
            Attempt::Failed { residual }
        })
    }
}

/// Unitary polar part of a generic block-diagonal `R` with `P'_k R = R P_k`.
fn intertwiner(blocks: &[(usize, usize)], p: &[CMat], p2: &[CMat], f: usize, rng: &mut SeededRng) -> Result<CMat> {
    let vars: Vec<(usize, usize)> = blocks
        .iter()
        .flat_map(|&(s, e)| (s..e).flat_map(move |a| (s..e).map(move |b| (a, b))))
        .collect();
    let nv = vars.len();
    let mut normal = CMat::zeros(nv, nv);
    for (pk, pk2) in p.iter().zip(p2) {
        // columns of the linear map R ↦ P'R − RP, rows indexed by x·f + y
        let mut l = CMat::zeros(f * f, nv);
        for (col, &(a, b)) in vars.iter().enumerate() {
            for x in 0..f {
                l[(x * f + b, col)] += pk2[(x, a)];
            }
            for y in 0..f {
                l[(a * f + y, col)] -= pk[(b, y)];
            }
        }
        normal += l.adjoint() * &l;
    }
    let (mu, vecs) = linalg::eigh(&linalg::hermitian_part(&normal))?;
    let mu_max = mu.last().copied().unwrap_or(0.0).max(0.0);
    let null = mu.iter().take_while(|&&m| m <= 1e-9 * mu_max).count().max(1);
    let mut r = CMat::zeros(f, f);
    for k in 0..null {
        let g = c(rng.sample(StandardNormal), rng.sample(StandardNormal));
        for (row, &(a, b)) in vars.iter().enumerate() {
            r[(a, b)] += vecs[(row, k)] * g;
        }
    }
    linalg::nearest_unitary(&r)
}

/// Apply `u` to every atom of `geom` without unitarity checks.
pub(crate) fn conjugate_atoms(geom: &CorrelationGeometry, u: &CMat) -> Vec<crate::operator_space::HermitianOperator> {
    geom.atoms()
        .iter()
        .map(|a| conjugate_unchecked(u, &a.operator))
        .collect()
}
