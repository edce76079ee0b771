//! Conjugation invariants of correlation geometries and inequivalence
//! certificates derived from them.

use serde::{Deserialize, Serialize};

use crate::correlation::CorrelationGeometry;
use crate::operator_space::{classify, Signature};

/// Highest order of the weighted trace power sums.
pub const MAX_POWER: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomInvariant {
    pub weight: f64,
    /// Descending.
    pub spectrum: Vec<f64>,
    pub signature: Signature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantProfile {
    pub total_mass: f64,
    /// Sorted by weight, then spectrum.
    pub atoms: Vec<AtomInvariant>,
    /// `M_r = Σ_i w_i tr(F_i^r)` for `r = 1..=4`.
    pub power_sums: [f64; MAX_POWER],
    /// `Σ_i w_i Σ_k |λ_ik|^r`, the natural size of `M_r`.
    pub power_scales: [f64; MAX_POWER],
}

pub fn invariant_profile(geom: &CorrelationGeometry) -> InvariantProfile {
    let mut atoms: Vec<AtomInvariant> = geom
        .atoms()
        .iter()
        .map(|a| {
            let spectrum = a.operator.spectrum().to_vec();
            AtomInvariant {
                weight: a.weight,
                signature: classify(&spectrum, 1e-9),
                spectrum,
            }
        })
        .collect();
    let mut power_sums = [0.0; MAX_POWER];
    let mut power_scales = [0.0; MAX_POWER];
    for a in &atoms {
        for r in 0..MAX_POWER {
            let exp = r as i32 + 1;
            power_sums[r] += a.weight * a.spectrum.iter().map(|l| l.powi(exp)).sum::<f64>();
            power_scales[r] += a.weight * a.spectrum.iter().map(|l| l.abs().powi(exp)).sum::<f64>();
        }
    }
    atoms.sort_by(|x, y| {
        x.weight.total_cmp(&y.weight).then_with(|| {
            x.spectrum
                .iter()
                .zip(&y.spectrum)
                .map(|(a, b)| a.total_cmp(b))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    InvariantProfile {
        total_mass: geom.total_mass(),
        atoms,
        power_sums,
        power_scales,
    }
}

/// Which geometry an index refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    First,
    Second,
}

/// A conjugation invariant that takes different values on two geometries.
///
/// Every variant carries the values and the threshold they were compared
/// against; [`Certificate::verify`] recomputes them from the geometries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "invariant", rename_all = "snake_case")]
pub enum Certificate {
    TotalMass {
        first: f64,
        second: f64,
        threshold: f64,
    },
    PowerSum {
        order: usize,
        first: f64,
        second: f64,
        threshold: f64,
    },
    /// Mass of atoms whose spectra lie within `radius` of the centre atom's
    /// spectrum (max-norm on sorted eigenvalues) exceeds the mass the other
    /// geometry has within `radius + slack` by more than `threshold`.
    SpectralMass {
        center: Side,
        atom: usize,
        radius: f64,
        slack: f64,
        first: f64,
        second: f64,
        threshold: f64,
    },
    /// An atom robustly has more positive (or negative) eigenvalues than
    /// any atom of the other geometry may carry.
    SignatureOccupancy {
        side: Side,
        atom: usize,
        n_pos: usize,
        n_neg: usize,
        other_p: usize,
        other_q: usize,
    },
}

/// Thresholds shared by certificates and witness verification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed Hilbert–Schmidt distance between paired atoms.
    pub delta: f64,
    /// Allowed weight difference between paired atoms.
    pub weight: f64,
    /// Allowed difference of total masses.
    pub mass: f64,
}

impl Tolerances {
    pub fn new(g1: &CorrelationGeometry, g2: &CorrelationGeometry, tol: f64) -> Self {
        let scale = geometry_scale(g1).max(geometry_scale(g2));
        let max_weight = g1
            .atoms()
            .iter()
            .chain(g2.atoms())
            .fold(1.0_f64, |m, a| m.max(a.weight));
        let mass = g1.total_mass().abs().max(g2.total_mass().abs()).max(1.0);
        Self {
            delta: tol * scale,
            weight: tol * max_weight,
            mass: tol * mass,
        }
    }
}

/// Largest atom spectral norm, or 1 for a geometry of zero operators.
pub fn geometry_scale(geom: &CorrelationGeometry) -> f64 {
    let s = geom
        .atoms()
        .iter()
        .fold(0.0_f64, |m, a| m.max(a.operator.spectral_norm()));
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

fn spectral_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

fn padded_spectrum(spectrum: &[f64], f: usize) -> Vec<f64> {
    let mut s = spectrum.to_vec();
    s.resize(f, 0.0);
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

fn spectra(geom: &CorrelationGeometry, f: usize) -> Vec<Vec<f64>> {
    geom.atoms()
        .iter()
        .map(|a| padded_spectrum(a.operator.spectrum(), f))
        .collect()
}

fn ball_mass(center: &[f64], spectra: &[Vec<f64>], weights: &[f64], radius: f64) -> f64 {
    spectra
        .iter()
        .zip(weights)
        .filter(|(s, _)| spectral_distance(center, s) <= radius)
        .map(|(_, w)| w)
        .sum()
}

struct SpectralData {
    spectra: [Vec<Vec<f64>>; 2],
    weights: [Vec<f64>; 2],
}

impl SpectralData {
    fn new(g1: &CorrelationGeometry, g2: &CorrelationGeometry) -> Self {
        let f = g1.f.max(g2.f);
        Self {
            spectra: [spectra(g1, f), spectra(g2, f)],
            weights: [
                g1.atoms().iter().map(|a| a.weight).collect(),
                g2.atoms().iter().map(|a| a.weight).collect(),
            ],
        }
    }

    fn index(side: Side) -> usize {
        match side {
            Side::First => 0,
            Side::Second => 1,
        }
    }

    /// `(mass on the centre's side within radius, other side within radius + slack)`
    fn masses(&self, center: Side, atom: usize, radius: f64, slack: f64) -> Option<(f64, f64)> {
        let c = Self::index(center);
        let centre = self.spectra[c].get(atom)?;
        let own = ball_mass(centre, &self.spectra[c], &self.weights[c], radius);
        let other = ball_mass(centre, &self.spectra[1 - c], &self.weights[1 - c], radius + slack);
        Some((own, other))
    }
}

fn signature_threshold_pair(spectrum: &[f64], delta: f64) -> (usize, usize) {
    let norm = spectrum.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let cut = 1e-9 * (norm + delta) + delta;
    (
        spectrum.iter().filter(|&&v| v > cut).count(),
        spectrum.iter().filter(|&&v| v < -cut).count(),
    )
}

/// Robust signature counts exceeding the other geometry's bound.
pub(crate) fn occupancy_certificate(
    g1: &CorrelationGeometry,
    g2: &CorrelationGeometry,
    tol: f64,
) -> Option<Certificate> {
    let tols = Tolerances::new(g1, g2, tol);
    for (side, own, other) in [(Side::First, g1, g2), (Side::Second, g2, g1)] {
        for (i, a) in own.atoms().iter().enumerate() {
            let (n_pos, n_neg) = signature_threshold_pair(a.operator.spectrum(), tols.delta);
            if n_pos > other.bound.p || n_neg > other.bound.q {
                return Some(Certificate::SignatureOccupancy {
                    side,
                    atom: i,
                    n_pos,
                    n_neg,
                    other_p: other.bound.p,
                    other_q: other.bound.q,
                });
            }
        }
    }
    None
}

/// First invariant that separates the geometries, if any. Symmetric in
/// its arguments up to the [`Side`] labels.
pub fn compare_invariants(g1: &CorrelationGeometry, g2: &CorrelationGeometry, tol: f64) -> Option<Certificate> {
    let tols = Tolerances::new(g1, g2, tol);
    let (m1, m2) = (g1.total_mass(), g2.total_mass());
    if (m1 - m2).abs() > tols.mass {
        return Some(Certificate::TotalMass {
            first: m1,
            second: m2,
            threshold: tols.mass,
        });
    }
    let (p1, p2) = (invariant_profile(g1), invariant_profile(g2));
    for r in 0..MAX_POWER {
        let threshold = tol * p1.power_scales[r].max(p2.power_scales[r]).max(1.0);
        if (p1.power_sums[r] - p2.power_sums[r]).abs() > threshold {
            return Some(Certificate::PowerSum {
                order: r + 1,
                first: p1.power_sums[r],
                second: p2.power_sums[r],
                threshold,
            });
        }
    }
    let data = SpectralData::new(g1, g2);
    let n_max = g1.atoms().len().max(g2.atoms().len());
    let threshold = tols.weight * n_max as f64;
    let radius = tols.delta;
    for center in [Side::First, Side::Second] {
        for atom in 0..data.spectra[SpectralData::index(center)].len() {
            let Some((own, other)) = data.masses(center, atom, radius, tols.delta) else {
                continue;
            };
            if own > other + threshold {
                let (first, second) = match center {
                    Side::First => (own, other),
                    Side::Second => (other, own),
                };
                return Some(Certificate::SpectralMass {
                    center,
                    atom,
                    radius,
                    slack: tols.delta,
                    first,
                    second,
                    threshold,
                });
            }
        }
    }
    None
}

impl Certificate {
    /// Recompute the invariant from the geometries and confirm that it
    /// still separates them by more than the recorded threshold.
    pub fn verify(&self, g1: &CorrelationGeometry, g2: &CorrelationGeometry) -> bool {
        match *self {
            Certificate::TotalMass { threshold, .. } => (g1.total_mass() - g2.total_mass()).abs() > threshold,
            Certificate::PowerSum { order, threshold, .. } => {
                if order == 0 || order > MAX_POWER {
                    return false;
                }
                let (p1, p2) = (invariant_profile(g1), invariant_profile(g2));
                (p1.power_sums[order - 1] - p2.power_sums[order - 1]).abs() > threshold
            }
            Certificate::SpectralMass {
                center,
                atom,
                radius,
                slack,
                threshold,
                ..
            } => match SpectralData::new(g1, g2).masses(center, atom, radius, slack) {
                Some((own, other)) => own > other + threshold,
                None => false,
            },
            Certificate::SignatureOccupancy {
                side,
                atom,
                n_pos,
                n_neg,
                other_p,
                other_q,
            } => {
                let (own, other) = match side {
                    Side::First => (g1, g2),
                    Side::Second => (g2, g1),
                };
                let Some(a) = own.atoms().get(atom) else {
                    return false;
                };
                let s = a.signature();
                other.bound.p == other_p
                    && other.bound.q == other_q
                    && s.n_pos >= n_pos
                    && s.n_neg >= n_neg
                    && (n_pos > other_p || n_neg > other_q)
                    && other
                        .atoms()
                        .iter()
                        .all(|b| b.signature().n_pos <= other_p && b.signature().n_neg <= other_q)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Certificate::TotalMass { .. } => "total_mass",
            Certificate::PowerSum { .. } => "power_sum",
            Certificate::SpectralMass { .. } => "spectral_mass",
            Certificate::SignatureOccupancy { .. } => "signature_occupancy",
        }
    }
}
