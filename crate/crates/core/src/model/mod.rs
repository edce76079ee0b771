//! Discrete effective models: a sampled manifold with volume weights and
//! optional metric, a reference system of fields over it, and the physical
//! descriptors (potential, gauge scalar, mass, charge) that went into it.

mod generators;
mod io;
mod transform;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::correlation::{LocalFormSpec, ScalarProductSpec};
use crate::error::{Error, Result};
use crate::linalg::CMat;

pub use generators::{
    circle_model, circle_plane_waves, circle_trig_pair, lattice_dirac_sea, torus_tetrads, CircleField,
    CirclePlaneWaves, LatticeBoundary, LatticeDiracModel,
};
pub use io::ModelFile;
pub use transform::{apply_diffeo, apply_gauge_phase, GaugeField};

pub type CVec = DVector<Complex64>;

/// One sample of the manifold. The index is its position in
/// [`DiscreteManifold::points`].
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePoint {
    pub coords: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteManifold {
    pub chart_dim: usize,
    pub points: Vec<SamplePoint>,
    /// Per-point Riemannian metric in chart coordinates.
    pub metric: Option<Vec<DMatrix<f64>>>,
    /// Per-point `(index, distance)` lists used for epsilon balls. A point's
    /// own index need not appear.
    pub neighbors: Option<Vec<Vec<(usize, f64)>>>,
}

impl DiscreteManifold {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_volume(&self) -> f64 {
        self.points.iter().map(|p| p.weight).sum()
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.weight)
    }

    /// Fill neighbor lists with every pair closer than `cutoff` under `dist`.
    pub fn with_neighbors<F>(mut self, cutoff: f64, dist: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> f64,
    {
        let n = self.points.len();
        let mut lists = vec![Vec::new(); n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = dist(&self.points[i].coords, &self.points[j].coords);
                if d < cutoff {
                    lists[i].push((j, d));
                    lists[j].push((i, d));
                }
            }
        }
        self.neighbors = Some(lists);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::InvalidModel("manifold has no points".into()));
        }
        for (k, p) in self.points.iter().enumerate() {
            if p.coords.len() != self.chart_dim {
                return Err(Error::InvalidModel(format!(
                    "point {k} has {} coordinates, chart dimension is {}",
                    p.coords.len(),
                    self.chart_dim
                )));
            }
            if !(p.weight > 0.0) || !p.weight.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "point {k} has non-positive weight {}",
                    p.weight
                )));
            }
        }
        if let Some(metric) = &self.metric {
            if metric.len() != self.points.len() {
                return Err(Error::InvalidModel("metric must be given at every point".into()));
            }
            for (k, g) in metric.iter().enumerate() {
                if g.nrows() != self.chart_dim || g.ncols() != self.chart_dim {
                    return Err(Error::InvalidModel(format!("metric at point {k} has wrong shape")));
                }
                let sym = (g - g.transpose()).abs().max();
                if sym > 1e-12 * g.abs().max().max(1.0) || g.clone().cholesky().is_none() {
                    return Err(Error::InvalidModel(format!(
                        "metric at point {k} is not symmetric positive definite"
                    )));
                }
            }
        }
        if let Some(neighbors) = &self.neighbors {
            if neighbors.len() != self.points.len() {
                return Err(Error::InvalidModel(
                    "neighbor lists must be given at every point".into(),
                ));
            }
            for (i, list) in neighbors.iter().enumerate() {
                for &(j, d) in list {
                    if j >= self.points.len() || !(d >= 0.0) {
                        return Err(Error::InvalidModel(format!(
                            "bad neighbor entry ({j}, {d}) at point {i}"
                        )));
                    }
                    if let Some(&(_, back)) = neighbors[j].iter().find(|(m, _)| *m == i) {
                        if (back - d).abs() > 1e-9 {
                            return Err(Error::InvalidModel(format!(
                                "neighbor distance {i}<->{j} is not symmetric"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Inverse metric at point `k`, identity when no metric is present.
    pub(crate) fn inverse_metric(&self, k: usize) -> Result<DMatrix<f64>> {
        match &self.metric {
            Some(m) => m[k]
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::InvalidModel(format!("metric at point {k} is singular"))),
            None => Ok(DMatrix::identity(self.chart_dim, self.chart_dim)),
        }
    }
}

/// How fiber vectors are paired pointwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FiberKind {
    /// Complex scalars or a trivial bundle, paired by `conj(u)·v`.
    #[default]
    Scalar,
    /// Tangent vectors in chart components, paired by the metric.
    Tangent,
    /// Spinors, paired by `conj(u)·v`.
    Spinor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceField {
    pub label: String,
    /// Fiber vector at every point.
    pub values: Vec<CVec>,
    /// Per-point `chart_dim × fiber_dim` first derivatives; row `a` holds
    /// the derivative along chart direction `a`.
    pub jet: Option<Vec<CMat>>,
}

impl ReferenceField {
    pub fn fiber_dim(&self) -> usize {
        self.values.first().map_or(0, |v| v.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSystem {
    pub fiber: FiberKind,
    pub fields: Vec<ReferenceField>,
}

impl ReferenceSystem {
    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn fiber_dim(&self) -> usize {
        self.fields.first().map_or(0, |f| f.fiber_dim())
    }

    pub fn has_jets(&self) -> bool {
        self.fields.iter().all(|f| f.jet.is_some())
    }

    /// Replace the fields by `ψ'_j = Σ_i t[i][j] ψ_i` (same span when `t`
    /// is invertible).
    pub fn recombined(&self, t: &CMat) -> Result<Self> {
        let m = self.fields.len();
        if t.nrows() != m {
            return Err(Error::DimMismatch {
                expected: m,
                found: t.nrows(),
            });
        }
        let n_points = self.fields.first().map_or(0, |f| f.values.len());
        let fields = (0..t.ncols())
            .map(|j| {
                let values = (0..n_points)
                    .map(|k| {
                        self.fields
                            .iter()
                            .enumerate()
                            .fold(CVec::zeros(self.fiber_dim()), |acc, (i, f)| {
                                acc + &f.values[k] * t[(i, j)]
                            })
                    })
                    .collect();
                let jet = if self.has_jets() {
                    Some(
                        (0..n_points)
                            .map(|k| {
                                let first = self.fields[0].jet.as_ref().unwrap();
                                let shape = (first[k].nrows(), first[k].ncols());
                                self.fields
                                    .iter()
                                    .enumerate()
                                    .fold(CMat::zeros(shape.0, shape.1), |acc, (i, f)| {
                                        acc + &f.jet.as_ref().unwrap()[k] * t[(i, j)]
                                    })
                            })
                            .collect(),
                    )
                } else {
                    None
                };
                ReferenceField {
                    label: format!("combo{j}"),
                    values,
                    jet,
                }
            })
            .collect();
        Ok(Self {
            fiber: self.fiber,
            fields,
        })
    }
}

/// Which built-in generator produced a model, if any. Cleared by transforms.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelFamily {
    CirclePlaneWaves { n: usize, k_max: usize, radius: f64 },
    CircleTrigPair { n: usize },
    TorusTetrads { n_per_dim: usize },
    LatticeDiracSea { sites: usize, m_fields: usize },
}

/// Descriptors added by gauge transformations and diffeomorphisms.
#[derive(Debug, Clone, PartialEq)]
pub enum ExtraDescriptor {
    Gauge {
        charge: f64,
        chi: Vec<f64>,
    },
    /// `perm[new] = old` and the size of the source point set.
    Diffeo {
        perm: Vec<usize>,
        source_points: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveModel {
    pub manifold: DiscreteManifold,
    pub system: ReferenceSystem,
    /// Per-point covector (chart components).
    pub potential: Option<Vec<Vec<f64>>>,
    pub chi: Option<Vec<f64>>,
    pub mass: f64,
    pub charge: f64,
    pub scalar_product: ScalarProductSpec,
    pub local_form: LocalFormSpec,
    /// Named per-point multipliers referenced by
    /// [`ScalarProductSpec::WeightedCustom`].
    pub kernels: BTreeMap<String, Vec<f64>>,
    pub family: Option<ModelFamily>,
    pub extra: Vec<ExtraDescriptor>,
}

impl EffectiveModel {
    pub fn new(
        manifold: DiscreteManifold,
        system: ReferenceSystem,
        scalar_product: ScalarProductSpec,
        local_form: LocalFormSpec,
    ) -> Self {
        Self {
            manifold,
            system,
            potential: None,
            chi: None,
            mass: 0.0,
            charge: 0.0,
            scalar_product,
            local_form,
            kernels: BTreeMap::new(),
            family: None,
            extra: Vec::new(),
        }
    }

    pub fn n_points(&self) -> usize {
        self.manifold.len()
    }

    pub fn with_forms(mut self, scalar_product: ScalarProductSpec, local_form: LocalFormSpec) -> Self {
        self.scalar_product = scalar_product;
        self.local_form = local_form;
        self
    }

    /// Structural checks: shapes, weights, metric, jets and descriptors the
    /// chosen scalar product and local form depend on.
    pub fn validate(&self) -> Result<()> {
        self.manifold.validate()?;
        let n = self.manifold.len();
        let d = self.manifold.chart_dim;
        if self.system.fields.is_empty() {
            return Err(Error::InvalidModel("reference system has no fields".into()));
        }
        let fiber_dim = self.system.fiber_dim();
        if fiber_dim == 0 {
            return Err(Error::InvalidModel("fiber dimension is zero".into()));
        }
        if self.system.fiber == FiberKind::Tangent && fiber_dim != d {
            return Err(Error::InvalidModel(
                "tangent fibers must match the chart dimension".into(),
            ));
        }
        for f in &self.system.fields {
            if f.values.len() != n {
                return Err(Error::InvalidModel(format!(
                    "field `{}` is not given at every point",
                    f.label
                )));
            }
            if f.values.iter().any(|v| v.len() != fiber_dim) {
                return Err(Error::InvalidModel(format!(
                    "field `{}` has inconsistent fiber dimension",
                    f.label
                )));
            }
            if f.values
                .iter()
                .any(|v| v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()))
            {
                return Err(Error::InvalidModel(format!(
                    "field `{}` has non-finite values",
                    f.label
                )));
            }
            if let Some(jet) = &f.jet {
                if jet.len() != n || jet.iter().any(|j| j.nrows() != d || j.ncols() != fiber_dim) {
                    return Err(Error::InvalidModel(format!(
                        "jet of field `{}` has the wrong shape",
                        f.label
                    )));
                }
            }
        }
        if let Some(a) = &self.potential {
            if a.len() != n || a.iter().any(|v| v.len() != d) {
                return Err(Error::InvalidModel(
                    "potential must be a chart covector at every point".into(),
                ));
            }
        }
        if let Some(chi) = &self.chi {
            if chi.len() != n {
                return Err(Error::InvalidModel("chi must be given at every point".into()));
            }
        }
        self.scalar_product.check_requirements(self)?;
        self.local_form.check_requirements(self)?;
        Ok(())
    }
}
