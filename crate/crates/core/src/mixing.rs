//! Convex combinations of correlation measures.
//!
//! `mix(g1, g2, τ, U)` is the measure `τ ρ₂ + (1 − τ) U ρ₁ U*` on the larger
//! of the two Hilbert spaces, re-aggregated at a chosen tolerance. The
//! aligner `U` is explicit because the identification of the two Hilbert
//! spaces is only fixed up to a unitary.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::correlation::{
    aggregate, matrix_to_pairs, min_separation, regularity_report, Atom, CorrelationGeometry, CorrelationMeasure,
    GeometryFile, Provenance,
};
use crate::equivalence::embed_common;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::operator_space::{conjugate_unchecked, hs_dist_unchecked};

#[derive(Debug, Clone, PartialEq)]
pub struct MixSpec {
    pub tau: f64,
    /// Unitary applied to the first geometry; identity when absent.
    pub aligner: Option<CMat>,
}

impl MixSpec {
    pub fn new(tau: f64) -> Self {
        Self { tau, aligner: None }
    }

    pub fn with_aligner(mut self, u: CMat) -> Self {
        self.aligner = Some(u);
        self
    }

    pub fn validate(&self, f: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::InvalidArgs(format!("tau must lie in [0, 1], got {}", self.tau)));
        }
        if let Some(u) = &self.aligner {
            if u.nrows() != f || u.ncols() != f {
                return Err(Error::DimMismatch {
                    expected: f,
                    found: u.nrows(),
                });
            }
            linalg::ensure_unitary(u)?;
        }
        Ok(())
    }
}

/// `τ·g2 + (1 − τ)·U g1 U*`.
///
/// The smaller geometry is zero-padded first. Atoms of `g2` come first,
/// then the conjugated atoms of `g1`; zero-weight atoms are dropped and the
/// rest re-aggregated at `agg_tol`. When only one side carries weight its
/// atoms are returned as they are. The bound is the componentwise maximum
/// of both inputs' bounds and the mixture's own signatures.
pub fn mix(
    g1: &CorrelationGeometry,
    g2: &CorrelationGeometry,
    spec: &MixSpec,
    agg_tol: f64,
) -> Result<CorrelationGeometry> {
    let (a, b) = embed_common(g1, g2)?;
    spec.validate(a.f)?;
    let tau = spec.tau;
    let first: Vec<Atom> = a
        .atoms()
        .iter()
        .map(|atom| {
            let operator = match &spec.aligner {
                Some(u) => conjugate_unchecked(u, &atom.operator),
                None => atom.operator.clone(),
            };
            Atom::new(operator, (1.0 - tau) * atom.weight)
        })
        .collect();
    let second: Vec<Atom> = b
        .atoms()
        .iter()
        .map(|atom| Atom::new(atom.operator.clone(), tau * atom.weight))
        .collect();
    let measure = if tau == 1.0 || tau == 0.0 {
        let atoms = if tau == 1.0 { second } else { first };
        CorrelationMeasure {
            atoms: atoms.into_iter().filter(|a| a.weight > 0.0).collect(),
            agg_tol,
        }
    } else {
        let items = second
            .into_iter()
            .chain(first)
            .map(|a| (a.operator, a.weight))
            .collect();
        aggregate(items, agg_tol)?
    };
    let own = CorrelationGeometry::from_measure(a.f, measure)?;
    let bound = own.bound.join(a.bound).join(b.bound);
    CorrelationGeometry::with_bound(a.f, bound, own.measure)
}

/// Hex SHA-256 of a geometry's JSON form.
pub fn geometry_hash(geom: &CorrelationGeometry) -> String {
    hex::encode(Sha256::digest(geom.to_json_string().as_bytes()))
}

pub fn provenance(g1: &CorrelationGeometry, g2: &CorrelationGeometry, spec: &MixSpec) -> Provenance {
    Provenance {
        tau: spec.tau,
        aligner: spec.aligner.as_ref().map(matrix_to_pairs),
        parents: vec![geometry_hash(g1), geometry_hash(g2)],
    }
}

/// Geometry file of a mixture with its provenance block.
pub fn mixture_file(
    mixed: &CorrelationGeometry,
    g1: &CorrelationGeometry,
    g2: &CorrelationGeometry,
    spec: &MixSpec,
) -> GeometryFile {
    let mut file = GeometryFile::from_geometry(mixed);
    file.provenance = Some(provenance(g1, g2, spec));
    file
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceStats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureDiagnostics {
    pub atom_count: usize,
    pub total_mass: f64,
    pub regular_mass_fraction: f64,
    /// Weighted standard deviation of atom spectra around their weighted
    /// mean, `sqrt(Σ w ‖λ − λ̄‖² / Σ w)`.
    pub spectral_spread: f64,
    /// Statistics of each atom's distance to its nearest other atom.
    pub nearest_atom: Option<DistanceStats>,
}

/// Descriptive statistics of a geometry; nothing here decides whether the
/// geometry comes from a model.
pub fn mixture_diagnostics(geom: &CorrelationGeometry) -> MixtureDiagnostics {
    let atoms = geom.atoms();
    let total = geom.total_mass();
    let f = geom.f;
    let mut mean = vec![0.0; f];
    for a in atoms {
        for (m, l) in mean.iter_mut().zip(a.operator.spectrum()) {
            *m += a.weight * l;
        }
    }
    let spectral_spread = if total > 0.0 {
        mean.iter_mut().for_each(|m| *m /= total);
        let var: f64 = atoms
            .iter()
            .map(|a| {
                a.weight
                    * a.operator
                        .spectrum()
                        .iter()
                        .zip(&mean)
                        .map(|(l, m)| (l - m).powi(2))
                        .sum::<f64>()
            })
            .sum::<f64>()
            / total;
        var.max(0.0).sqrt()
    } else {
        0.0
    };
    let nearest_atom = (atoms.len() >= 2).then(|| {
        let nearest: Vec<f64> = (0..atoms.len())
            .map(|i| {
                (0..atoms.len())
                    .filter(|&j| j != i)
                    .map(|j| hs_dist_unchecked(atoms[i].operator.entries(), atoms[j].operator.entries()))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        DistanceStats {
            min: min_separation(&geom.measure).unwrap_or(0.0),
            mean: nearest.iter().sum::<f64>() / nearest.len() as f64,
            max: nearest.iter().copied().fold(0.0, f64::max),
        }
    });
    MixtureDiagnostics {
        atom_count: atoms.len(),
        total_mass: total,
        regular_mass_fraction: regularity_report(geom).regular_mass_fraction,
        spectral_spread,
        nearest_atom,
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::correlation::pushforward;
    use crate::equivalence::{check_symmetry, find_witness, induced_translation_unitary, EquivalenceVerdict};
    use crate::linalg::{random_unitary, seeded_rng};
    use crate::model::{circle_plane_waves, circle_trig_pair, torus_tetrads, CirclePlaneWaves};
    use crate::operator_space::conjugate;

    fn circle(radius: f64) -> CorrelationGeometry {
        pushforward(&CirclePlaneWaves::new(16, 1).radius(radius).build().unwrap(), 1e-8).unwrap()
    }

    fn conjugated(geom: &CorrelationGeometry, u: &CMat) -> CorrelationGeometry {
        let atoms = geom
            .atoms()
            .iter()
            .map(|a| Atom::new(conjugate(u, &a.operator).unwrap(), a.weight))
            .collect();
        CorrelationGeometry::with_bound(geom.f, geom.bound, CorrelationMeasure { atoms, agg_tol: 1e-8 }).unwrap()
    }

    #[test]
    fn endpoints_return_the_inputs() {
        let (g1, g2) = (circle(1.0), circle(2.0));
        let m = mix(&g1, &g2, &MixSpec::new(1.0), 1e-8).unwrap();
        assert_eq!(m.atoms(), g2.atoms());
        let m = mix(&g1, &g1, &MixSpec::new(0.0), 1e-8).unwrap();
        assert_eq!(m.atoms(), g1.atoms());
        let m = mix(&g1, &g2, &MixSpec::new(0.0).with_aligner(CMat::identity(3, 3)), 1e-8).unwrap();
        assert_eq!(m.atoms(), g1.atoms());
    }

    #[test]
    fn different_radii_do_not_collide() {
        let (g1, g2) = (circle(1.0), circle(2.0));
        let m = mix(&g1, &g2, &MixSpec::new(0.5), 1e-8).unwrap();
        assert_eq!(m.atoms().len(), g1.atoms().len() + g2.atoms().len());
        let expected = 0.5 * (g1.total_mass() + g2.total_mass());
        assert!((m.total_mass() - expected).abs() <= 1e-12 * expected);
        let diag = mixture_diagnostics(&m);
        assert!(diag.atom_count > g1.atoms().len().max(g2.atoms().len()));
    }

    #[test]
    fn zero_tolerance_gives_the_tagged_union() {
        let g = circle(1.0);
        let m = mix(&g, &g, &MixSpec::new(0.25), 0.0).unwrap();
        assert_eq!(m.atoms().len(), 2 * g.atoms().len());
        for (i, a) in g.atoms().iter().enumerate() {
            assert_eq!(m.atoms()[i].operator, a.operator);
            assert_eq!(m.atoms()[i].weight, 0.25 * a.weight);
            assert_eq!(m.atoms()[i + g.atoms().len()].operator, a.operator);
            assert_eq!(m.atoms()[i + g.atoms().len()].weight, 0.75 * a.weight);
        }
    }

    #[test]
    fn smaller_geometry_is_embedded() {
        let small = pushforward(&torus_tetrads(4).unwrap(), 1e-8).unwrap();
        let big = circle(1.0);
        let m = mix(&small, &big, &MixSpec::new(0.5), 1e-8).unwrap();
        assert_eq!(m.f, 3);
        assert_eq!(m.atoms().len(), big.atoms().len() + 1);
    }

    #[test]
    fn rejects_bad_specs() {
        let g = circle(1.0);
        assert!(matches!(
            mix(&g, &g, &MixSpec::new(1.5), 1e-8),
            Err(Error::InvalidArgs(_))
        ));
        let mut u = CMat::identity(3, 3);
        u[(0, 0)] = crate::linalg::c(0.5, 0.0);
        assert!(matches!(
            mix(&g, &g, &MixSpec::new(0.5).with_aligner(u), 1e-8),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn tetrad_diagnostics() {
        let d = mixture_diagnostics(&pushforward(&torus_tetrads(8).unwrap(), 1e-8).unwrap());
        assert_eq!(d.atom_count, 1);
        assert_eq!(d.spectral_spread, 0.0);
        assert!(d.nearest_atom.is_none());
    }

    #[test]
    fn aligned_mixture_of_equivalent_geometries_looks_unmixed() {
        let g1 = pushforward(&circle_trig_pair(16).unwrap(), 1e-8).unwrap();
        let v = random_unitary(2, &mut seeded_rng(3));
        let g2 = conjugated(&g1, &v);
        let EquivalenceVerdict::Equivalent { witness, .. } = find_witness(&g1, &g2, 1e-8, 0).unwrap() else {
            panic!("expected a witness");
        };
        let m = mix(&g1, &g2, &MixSpec::new(0.5).with_aligner(witness), 1e-8).unwrap();
        let (dm, d2) = (mixture_diagnostics(&m), mixture_diagnostics(&g2));
        assert_eq!(dm.atom_count, d2.atom_count);
        assert!((dm.total_mass - d2.total_mass).abs() <= 1e-9);
        assert!((dm.regular_mass_fraction - d2.regular_mass_fraction).abs() <= 1e-9);
        assert!((dm.spectral_spread - d2.spectral_spread).abs() <= 1e-9);
        let (a, b) = (dm.nearest_atom.unwrap(), d2.nearest_atom.unwrap());
        assert!((a.min - b.min).abs() <= 1e-9 && (a.mean - b.mean).abs() <= 1e-9 && (a.max - b.max).abs() <= 1e-9);
    }

    #[test]
    fn shared_symmetry_survives_mixing() {
        let m1 = circle_plane_waves(16, 1).unwrap();
        let m2 = CirclePlaneWaves::new(16, 1).radius(2.0).build().unwrap();
        let (g1, g2) = (pushforward(&m1, 1e-8).unwrap(), pushforward(&m2, 1e-8).unwrap());
        let u = induced_translation_unitary(&m1, 3).unwrap();
        let u2 = induced_translation_unitary(&m2, 3).unwrap();
        assert!(crate::linalg::frobenius(&(&u - &u2)) < 1e-12);
        assert!(check_symmetry(&g1, &u, 1e-8).unwrap().symmetric);
        assert!(check_symmetry(&g2, &u, 1e-8).unwrap().symmetric);
        let m = mix(&g1, &g2, &MixSpec::new(0.3), 1e-8).unwrap();
        assert!(check_symmetry(&m, &u, 1e-8).unwrap().symmetric);
    }

    #[test]
    fn provenance_names_parents() {
        let (g1, g2) = (circle(1.0), circle(2.0));
        let spec = MixSpec::new(0.5);
        let m = mix(&g1, &g2, &spec, 1e-8).unwrap();
        let file = mixture_file(&m, &g1, &g2, &spec);
        let p = file.provenance.clone().unwrap();
        assert_eq!(p.parents, vec![geometry_hash(&g1), geometry_hash(&g2)]);
        assert_eq!(p.parents[0].len(), 64);
        let text = file.to_json_string();
        assert_eq!(GeometryFile::parse(&text).unwrap(), file);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn mass_is_linear_in_tau(tau_idx in 0usize..5, r1 in 0.5f64..3.0, r2 in 0.5f64..3.0, agg in prop_oneof![Just(0.0), Just(1e-8), Just(f64::INFINITY)]) {
            let tau = tau_idx as f64 / 4.0;
            let g1 = circle(r1);
            let g2 = pushforward(&CirclePlaneWaves::new(12, 2).radius(r2).build().unwrap(), 1e-8).unwrap();
            let m = mix(&g1, &g2, &MixSpec::new(tau), agg).unwrap();
            let expected = tau * g2.total_mass() + (1.0 - tau) * g1.total_mass();
            prop_assert!((m.total_mass() - expected).abs() <= 1e-10 * expected);
        }
    }
}
