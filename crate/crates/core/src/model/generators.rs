//! Built-in model generators.
//!
//! Every generator supplies analytic jets where derivatives are defined, so
//! nothing downstream differentiates on the mesh.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{
    CVec, DiscreteManifold, EffectiveModel, FiberKind, ModelFamily, ReferenceField, ReferenceSystem, SamplePoint,
};
use crate::correlation::{LocalFormSpec, ScalarProductSpec};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};

/// A scalar field on the circle given by its value and its derivative in
/// the angle coordinate.
pub struct CircleField {
    pub label: String,
    pub value: Box<dyn Fn(f64) -> Complex64 + Send + Sync>,
    pub derivative: Box<dyn Fn(f64) -> Complex64 + Send + Sync>,
}

impl CircleField {
    pub fn new<V, D>(label: impl Into<String>, value: V, derivative: D) -> Self
    where
        V: Fn(f64) -> Complex64 + Send + Sync + 'static,
        D: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            value: Box::new(value),
            derivative: Box::new(derivative),
        }
    }

    /// `e^{ikθ}`
    pub fn plane_wave(k: i64) -> Self {
        let kf = k as f64;
        Self::new(
            format!("e^(i{k}θ)"),
            move |t| Complex64::from_polar(1.0, kf * t),
            move |t| c(0.0, kf) * Complex64::from_polar(1.0, kf * t),
        )
    }
}

/// Circle of the given radius sampled at `θ_j = 2πj/n`, angle chart,
/// metric `radius²`, weights `2π·radius/n`.
pub fn circle_model(
    n: usize,
    radius: f64,
    fields: Vec<CircleField>,
    scalar_product: ScalarProductSpec,
    local_form: LocalFormSpec,
) -> Result<EffectiveModel> {
    if n < 2 {
        return Err(Error::InvalidArgs(format!("circle needs at least 2 points, got {n}")));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidArgs(format!("radius must be positive, got {radius}")));
    }
    let thetas: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
    let weight = 2.0 * PI * radius / n as f64;
    let manifold = DiscreteManifold {
        chart_dim: 1,
        points: thetas
            .iter()
            .map(|&t| SamplePoint {
                coords: vec![t],
                weight,
            })
            .collect(),
        metric: Some(vec![DMatrix::from_element(1, 1, radius * radius); n]),
        neighbors: None,
    };
    let fields = fields
        .into_iter()
        .map(|f| ReferenceField {
            values: thetas.iter().map(|&t| CVec::from_element(1, (f.value)(t))).collect(),
            jet: Some(
                thetas
                    .iter()
                    .map(|&t| CMat::from_element(1, 1, (f.derivative)(t)))
                    .collect(),
            ),
            label: f.label,
        })
        .collect();
    Ok(EffectiveModel::new(
        manifold,
        ReferenceSystem {
            fiber: FiberKind::Scalar,
            fields,
        },
        scalar_product,
        local_form,
    ))
}

/// Plane waves `e^{ikθ}`, `k = −k_max..=k_max`, on a sampled circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirclePlaneWaves {
    pub n: usize,
    pub k_max: usize,
    pub radius: f64,
}

impl CirclePlaneWaves {
    pub fn new(n: usize, k_max: usize) -> Self {
        Self { n, k_max, radius: 1.0 }
    }

    pub fn radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    pub fn build(&self) -> Result<EffectiveModel> {
        if self.n <= 2 * self.k_max + 1 {
            return Err(Error::Undersampled {
                points: self.n,
                k_max: self.k_max,
            });
        }
        let k_max = self.k_max as i64;
        let fields = (-k_max..=k_max).map(CircleField::plane_wave).collect();
        let mut model = circle_model(
            self.n,
            self.radius,
            fields,
            ScalarProductSpec::L2,
            LocalFormSpec::PointwiseSesquilinear,
        )?;
        model.family = Some(ModelFamily::CirclePlaneWaves {
            n: self.n,
            k_max: self.k_max,
            radius: self.radius,
        });
        Ok(model)
    }
}

/// Unit circle with plane waves, pointwise form and L² product.
pub fn circle_plane_waves(n: usize, k_max: usize) -> Result<EffectiveModel> {
    CirclePlaneWaves::new(n, k_max).build()
}

/// Flat unit-volume 2-torus with the two coordinate frame fields, the metric
/// paired on the fiber and the L² product `∫ g(V_i, V_j) dμ`.
pub fn torus_tetrads(n_per_dim: usize) -> Result<EffectiveModel> {
    if n_per_dim < 2 {
        return Err(Error::InvalidArgs(format!(
            "need at least 2 points per dimension, got {n_per_dim}"
        )));
    }
    let n = n_per_dim;
    let weight = 1.0 / (n * n) as f64;
    let mut points = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            points.push(SamplePoint {
                coords: vec![i as f64 / n as f64, j as f64 / n as f64],
                weight,
            });
        }
    }
    let count = points.len();
    let manifold = DiscreteManifold {
        chart_dim: 2,
        points,
        metric: Some(vec![DMatrix::identity(2, 2); count]),
        neighbors: None,
    };
    let frame = |axis: usize| ReferenceField {
        label: format!("e{}", axis + 1),
        values: vec![CVec::from_fn(2, |r, _| if r == axis { c(1.0, 0.0) } else { c(0.0, 0.0) }); count],
        jet: Some(vec![CMat::zeros(2, 2); count]),
    };
    let mut model = EffectiveModel::new(
        manifold,
        ReferenceSystem {
            fiber: FiberKind::Tangent,
            fields: vec![frame(0), frame(1)],
        },
        ScalarProductSpec::L2,
        LocalFormSpec::MetricOnFiber,
    );
    model.family = Some(ModelFamily::TorusTetrads { n_per_dim });
    Ok(model)
}

/// Unit circle with the real fields `cos θ`, `sin θ`, gradient local form
/// and H¹ product.
pub fn circle_trig_pair(n: usize) -> Result<EffectiveModel> {
    if n < 8 {
        return Err(Error::InvalidArgs(format!("circle_trig_pair needs n >= 8, got {n}")));
    }
    let fields = vec![
        CircleField::new("cos", |t: f64| c(t.cos(), 0.0), |t: f64| c(-t.sin(), 0.0)),
        CircleField::new("sin", |t: f64| c(t.sin(), 0.0), |t: f64| c(t.cos(), 0.0)),
    ];
    let mut model = circle_model(
        n,
        1.0,
        fields,
        ScalarProductSpec::SobolevH1,
        LocalFormSpec::GradientForm,
    )?;
    model.family = Some(ModelFamily::CircleTrigPair { n });
    Ok(model)
}

/// Boundary condition for the wrap-around link of the lattice ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LatticeBoundary {
    Periodic,
    /// The wrap-around hop picks up a factor −1.
    #[default]
    Antiperiodic,
}

/// One-dimensional lattice Dirac operator on a ring of `sites` sites.
///
/// The one-particle Hamiltonian acts on `C^{2N}`, index `2j + s` for site `j`
/// and spinor component `s`:
///
/// ```text
/// H = K ⊗ σ₁ + m · 1 ⊗ σ₃
/// K[j, j+1] = −i e^{+iqaA_j} / (2a)
/// K[j+1, j] = +i e^{−iqaA_j} / (2a)
/// ```
///
/// i.e. `K = −i D` with `D` the covariant central difference whose hop from
/// site `j` to `j+1` carries the link phase `e^{−iqaA_j}`. The wrap link
/// `N−1 → 0` is multiplied by −1 for antiperiodic boundaries. Under
/// `ψ_j → e^{−iqχ_j} ψ_j` this Hamiltonian maps to the one with
/// `A_j → A_j + (χ_{j+1} − χ_j)/a`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDiracModel {
    pub sites: usize,
    pub spacing: f64,
    pub mass: f64,
    pub charge: f64,
    /// Link potential `A_j` on the link `j → j+1`.
    pub potential: Vec<f64>,
    pub boundary: LatticeBoundary,
}

impl LatticeDiracModel {
    pub fn new(sites: usize, spacing: f64, mass: f64, charge: f64) -> Self {
        Self {
            sites,
            spacing,
            mass,
            charge,
            potential: vec![0.0; sites],
            boundary: LatticeBoundary::default(),
        }
    }

    pub fn with_potential(mut self, potential: Vec<f64>) -> Self {
        self.potential = potential;
        self
    }

    pub fn with_boundary(mut self, boundary: LatticeBoundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites < 4 || !self.sites.is_multiple_of(2) {
            return Err(Error::InvalidArgs(format!(
                "lattice needs an even number >= 4 of sites, got {}",
                self.sites
            )));
        }
        if !(self.spacing > 0.0) || !self.spacing.is_finite() {
            return Err(Error::InvalidArgs(format!(
                "lattice spacing must be positive, got {}",
                self.spacing
            )));
        }
        if self.potential.len() != self.sites {
            return Err(Error::InvalidArgs("potential must have one value per link".into()));
        }
        if !self.mass.is_finite() || !self.charge.is_finite() || self.potential.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidArgs("lattice parameters must be finite".into()));
        }
        Ok(())
    }

    /// Link potential after the lattice gauge transformation by `chi`.
    pub fn gauge_shifted(&self, chi: &[f64]) -> Result<Self> {
        if chi.len() != self.sites {
            return Err(Error::DimMismatch {
                expected: self.sites,
                found: chi.len(),
            });
        }
        let n = self.sites;
        let potential = (0..n)
            .map(|j| self.potential[j] + (chi[(j + 1) % n] - chi[j]) / self.spacing)
            .collect();
        Ok(Self {
            potential,
            ..self.clone()
        })
    }

    pub fn hamiltonian(&self) -> Result<CMat> {
        self.validate()?;
        let n = self.sites;
        let a = self.spacing;
        let mut k = CMat::zeros(n, n);
        for j in 0..n {
            let next = (j + 1) % n;
            let wrap = if next == 0 && self.boundary == LatticeBoundary::Antiperiodic {
                -1.0
            } else {
                1.0
            };
            let link = Complex64::from_polar(1.0, self.charge * a * self.potential[j]) * wrap;
            let hop = c(0.0, -1.0) * link / (2.0 * a);
            k[(j, next)] += hop;
            k[(next, j)] += hop.conj();
        }
        let mut h = CMat::zeros(2 * n, 2 * n);
        for j in 0..n {
            for l in 0..n {
                let kjl = k[(j, l)];
                // σ₁ = [[0,1],[1,0]]
                h[(2 * j, 2 * l + 1)] += kjl;
                h[(2 * j + 1, 2 * l)] += kjl;
            }
            // σ₃ = diag(1, −1)
            h[(2 * j, 2 * j)] += c(self.mass, 0.0);
            h[(2 * j + 1, 2 * j + 1)] += c(-self.mass, 0.0);
        }
        Ok(h)
    }

    /// Eigenvalues of the Hamiltonian, ascending.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        linalg::eigvalsh(&self.hamiltonian()?)
    }
}

/// Reference system spanned by the `m_fields` lowest eigenvectors of the
/// lattice Hamiltonian, normalized so the lattice L² Gram matrix is the
/// identity. Local form is the pointwise spinor product.
pub fn lattice_dirac_sea(model: &LatticeDiracModel, m_fields: usize) -> Result<EffectiveModel> {
    model.validate()?;
    let n = model.sites;
    if m_fields == 0 || m_fields > n {
        return Err(Error::InvalidArgs(format!(
            "m_fields must lie in 1..={n}, got {m_fields}"
        )));
    }
    let (values, vectors) = linalg::eigh(&model.hamiltonian()?)?;
    if m_fields < values.len() && (values[m_fields] - values[m_fields - 1]).abs() <= 1e-10 {
        return Err(Error::AmbiguousSeaCut {
            below: values[m_fields - 1],
            above: values[m_fields],
        });
    }
    let a = model.spacing;
    let norm = 1.0 / a.sqrt();
    let fields = (0..m_fields)
        .map(|i| {
            let col = linalg::canonical_phase(vectors.column(i).into_owned());
            ReferenceField {
                label: format!("sea{i}"),
                values: (0..n)
                    .map(|j| CVec::from_vec(vec![col[2 * j] * norm, col[2 * j + 1] * norm]))
                    .collect(),
                jet: None,
            }
        })
        .collect();
    let manifold = DiscreteManifold {
        chart_dim: 1,
        points: (0..n)
            .map(|j| SamplePoint {
                coords: vec![j as f64 * a],
                weight: a,
            })
            .collect(),
        metric: Some(vec![DMatrix::identity(1, 1); n]),
        neighbors: None,
    };
    let mut out = EffectiveModel::new(
        manifold,
        ReferenceSystem {
            fiber: FiberKind::Spinor,
            fields,
        },
        ScalarProductSpec::L2,
        LocalFormSpec::PointwiseSesquilinear,
    );
    out.potential = Some(model.potential.iter().map(|&v| vec![v]).collect());
    out.mass = model.mass;
    out.charge = model.charge;
    out.family = Some(ModelFamily::LatticeDiracSea { sites: n, m_fields });
    Ok(out)
}
