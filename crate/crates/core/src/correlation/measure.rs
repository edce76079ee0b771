//! Discrete pushforward measures and their aggregation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMat};
use crate::model::EffectiveModel;
use crate::operator_space::{classify, hs_dist_unchecked, HermitianOperator, Signature, SignatureBound};

use super::CorrelationMap;

/// Tolerance used to read off signatures of atoms.
pub const SIGNATURE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub operator: HermitianOperator,
    pub weight: f64,
}

impl Atom {
    pub fn new(operator: HermitianOperator, weight: f64) -> Self {
        Self { operator, weight }
    }

    pub fn signature(&self) -> Signature {
        classify(self.operator.spectrum(), SIGNATURE_TOL)
    }
}

/// Weighted atom cloud together with the tolerance it was aggregated at.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMeasure {
    pub atoms: Vec<Atom>,
    pub agg_tol: f64,
}

impl CorrelationMeasure {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// The triple `(H, F^{p,q}, ρ)` with `H = ℂ^f`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationGeometry {
    pub f: usize,
    pub bound: SignatureBound,
    pub measure: CorrelationMeasure,
}

impl CorrelationGeometry {
    /// Takes the bound as the componentwise maximum of atom signatures.
    pub fn from_measure(f: usize, measure: CorrelationMeasure) -> Result<Self> {
        check_atoms(f, &measure)?;
        let bound = measure.atoms.iter().fold(SignatureBound::new(0, 0), |b, a| {
            let s = a.signature();
            b.join(SignatureBound::new(s.n_pos, s.n_neg))
        });
        Ok(Self { f, bound, measure })
    }

    /// Uses an explicit bound; every atom must lie in `F^{p,q}`.
    pub fn with_bound(f: usize, bound: SignatureBound, measure: CorrelationMeasure) -> Result<Self> {
        check_atoms(f, &measure)?;
        for (i, a) in measure.atoms.iter().enumerate() {
            let s = a.signature();
            if s.n_pos > bound.p || s.n_neg > bound.q {
                return Err(Error::InvalidOperator(format!(
                    "atom {i} has signature {s}, outside F^({},{})",
                    bound.p, bound.q
                )));
            }
        }
        Ok(Self { f, bound, measure })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.measure.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.measure.total_mass()
    }

    /// Largest spectral norm over atoms, at least 1.
    pub fn scale(&self) -> f64 {
        self.atoms()
            .iter()
            .fold(1.0_f64, |m, a| m.max(a.operator.spectral_norm()))
    }
}

fn check_atoms(f: usize, measure: &CorrelationMeasure) -> Result<()> {
    if f == 0 {
        return Err(Error::InvalidArgs("Hilbert dimension must be positive".into()));
    }
    for (i, a) in measure.atoms.iter().enumerate() {
        if a.operator.dim() != f {
            return Err(Error::DimMismatch {
                expected: f,
                found: a.operator.dim(),
            });
        }
        if !(a.weight > 0.0) || !a.weight.is_finite() {
            return Err(Error::InvalidArgs(format!(
                "atom {i} has non-positive weight {}",
                a.weight
            )));
        }
    }
    Ok(())
}

struct Cluster {
    seed: HermitianOperator,
    weight: f64,
    /// `Σ w F` once a second member joins.
    sum: Option<CMat>,
}

/// Greedy clustering in input order.
///
/// Each operator joins the earliest cluster whose seed lies within
/// `agg_tol · max(1, ‖F‖)` in Hilbert–Schmidt distance, `‖F‖` being the
/// incoming operator's spectral norm; otherwise it seeds a new cluster.
/// Singleton clusters keep their seed unchanged, larger ones are replaced by
/// the weighted mean. `agg_tol = 0` disables merging entirely.
pub fn aggregate(items: Vec<(HermitianOperator, f64)>, agg_tol: f64) -> Result<CorrelationMeasure> {
    if !(agg_tol >= 0.0) {
        return Err(Error::InvalidArgs(format!(
            "aggregation tolerance must be >= 0, got {agg_tol}"
        )));
    }
    let mut clusters: Vec<Cluster> = Vec::new();
    // (frobenius norm of seed, cluster index), sorted by norm
    let mut by_norm: Vec<(f64, usize)> = Vec::new();
    for (op, w) in items {
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::InvalidArgs(format!("weight {w} is not a nonnegative number")));
        }
        if w == 0.0 {
            continue;
        }
        let norm = op.frobenius_norm();
        let mut target = None;
        if agg_tol > 0.0 {
            let radius = agg_tol * op.spectral_norm().max(1.0);
            // |‖A‖ − ‖B‖| ≤ ‖A − B‖ restricts the candidates to a norm window
            let lo = by_norm.partition_point(|&(n, _)| n < norm - radius);
            for &(n, idx) in &by_norm[lo..] {
                if n > norm + radius {
                    break;
                }
                if target.is_some_and(|t| t < idx) {
                    continue;
                }
                if hs_dist_unchecked(clusters[idx].seed.entries(), op.entries()) <= radius {
                    target = Some(idx);
                }
            }
        }
        match target {
            Some(idx) => {
                let cl = &mut clusters[idx];
                let sum = cl.sum.get_or_insert_with(|| cl.seed.entries() * c(cl.weight, 0.0));
                *sum += op.entries() * c(w, 0.0);
                cl.weight += w;
            }
            None => {
                let idx = clusters.len();
                let pos = by_norm.partition_point(|&(n, _)| n <= norm);
                by_norm.insert(pos, (norm, idx));
                clusters.push(Cluster {
                    seed: op,
                    weight: w,
                    sum: None,
                });
            }
        }
    }
    let atoms = clusters
        .into_iter()
        .map(|cl| {
            let operator = match cl.sum {
                None => cl.seed,
                Some(sum) => HermitianOperator::new(sum.unscale(cl.weight))?,
            };
            Ok(Atom::new(operator, cl.weight))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelationMeasure { atoms, agg_tol })
}

/// Pushforward of the volume measure through the local correlation map.
pub fn pushforward(model: &EffectiveModel, agg_tol: f64) -> Result<CorrelationGeometry> {
    let map = CorrelationMap::new(model)?;
    let ops = map.operators()?;
    let items = ops.into_iter().zip(model.manifold.weights()).collect::<Vec<_>>();
    let measure = aggregate(items, agg_tol)?;
    CorrelationGeometry::from_measure(map.hilbert_dim(), measure)
}

/// Atoms and mass carried by one signature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignatureCount {
    pub signature: Signature,
    pub atoms: usize,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub p: usize,
    pub q: usize,
    pub atom_count: usize,
    /// Share of the total mass on atoms of signature exactly `(p, q)`.
    pub regular_mass_fraction: f64,
    /// Sorted by signature.
    pub histogram: Vec<SignatureCount>,
}

pub fn regularity_report(geom: &CorrelationGeometry) -> RegularityReport {
    regularity_report_with_bound(geom, geom.bound)
}

pub fn regularity_report_with_bound(geom: &CorrelationGeometry, bound: SignatureBound) -> RegularityReport {
    let mut histogram: Vec<SignatureCount> = Vec::new();
    let mut regular = 0.0;
    for atom in geom.atoms() {
        let s = atom.signature();
        if s.n_pos == bound.p && s.n_neg == bound.q {
            regular += atom.weight;
        }
        match histogram.binary_search_by(|h| h.signature.cmp(&s)) {
            Ok(i) => {
                histogram[i].atoms += 1;
                histogram[i].mass += atom.weight;
            }
            Err(i) => histogram.insert(
                i,
                SignatureCount {
                    signature: s,
                    atoms: 1,
                    mass: atom.weight,
                },
            ),
        }
    }
    let total = geom.total_mass();
    RegularityReport {
        p: bound.p,
        q: bound.q,
        atom_count: geom.atoms().len(),
        regular_mass_fraction: if total > 0.0 { regular / total } else { 0.0 },
        histogram,
    }
}

/// Smallest pairwise Hilbert–Schmidt distance between atoms; `None` for
/// fewer than two atoms.
pub fn min_separation(measure: &CorrelationMeasure) -> Option<f64> {
    let n = measure.atoms.len();
    if n < 2 {
        return None;
    }
    (0..n)
        .into_par_iter()
        .map(|i| {
            let a = measure.atoms[i].operator.entries();
            ((i + 1)..n)
                .map(|j| hs_dist_unchecked(a, measure.atoms[j].operator.entries()))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min)
        .into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionRow {
    pub n: usize,
    pub hilbert_dim: usize,
    pub atom_count: usize,
    pub min_separation: Option<f64>,
}

/// Build the geometry of `family(n)` for each `n` and tabulate how many
/// points it distinguishes.
pub fn resolution_study<F>(family: F, ns: &[usize], agg_tol: f64) -> Result<Vec<ResolutionRow>>
where
    F: Fn(usize) -> Result<EffectiveModel>,
{
    ns.iter()
        .map(|&n| {
            let geom = pushforward(&family(n)?, agg_tol)?;
            Ok(ResolutionRow {
                n,
                hilbert_dim: geom.f,
                atom_count: geom.atoms().len(),
                min_separation: min_separation(&geom.measure),
            })
        })
        .collect()
}
