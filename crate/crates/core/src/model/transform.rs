//! Gauge phases and diffeomorphisms acting on effective models.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{EffectiveModel, ExtraDescriptor, FiberKind, SamplePoint};
use crate::error::{Error, Result};
use crate::linalg::{c, CMat};

/// A real scalar sampled at every point, with an optional chart gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeField {
    pub values: Vec<f64>,
    pub gradient: Option<Vec<Vec<f64>>>,
}

impl GaugeField {
    pub fn sampled(values: Vec<f64>) -> Self {
        Self { values, gradient: None }
    }

    pub fn constant(model: &EffectiveModel, value: f64) -> Self {
        let d = model.manifold.chart_dim;
        Self {
            values: vec![value; model.n_points()],
            gradient: Some(vec![vec![0.0; d]; model.n_points()]),
        }
    }

    /// Evaluate `f(coords) -> (value, gradient)` at every point.
    pub fn from_chart<F>(model: &EffectiveModel, f: F) -> Self
    where
        F: Fn(&[f64]) -> (f64, Vec<f64>),
    {
        let (values, gradient) = model.manifold.points.iter().map(|p| f(&p.coords)).unzip();
        Self {
            values,
            gradient: Some(gradient),
        }
    }

    pub fn negated(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| -v).collect(),
            gradient: self
                .gradient
                .as_ref()
                .map(|g| g.iter().map(|row| row.iter().map(|v| -v).collect()).collect()),
        }
    }
}

/// Multiply every reference field by `e^{−iqχ}` and shift `A → A + dχ`.
///
/// Jets follow the product rule `∇ψ → e^{−iqχ}(∇ψ − iq(∇χ)ψ)`, which needs
/// the gradient of `χ` whenever the fields carry jets. Without a gradient
/// the potential on a one-dimensional point chain is shifted by forward
/// differences `(χ_{k+1} − χ_k)/w_k` (cyclic), matching the lattice link
/// convention where the weight is the cell length.
pub fn apply_gauge_phase(model: &EffectiveModel, chi: &GaugeField, q: f64) -> Result<EffectiveModel> {
    let n = model.n_points();
    let d = model.manifold.chart_dim;
    if chi.values.len() != n {
        return Err(Error::DimMismatch {
            expected: n,
            found: chi.values.len(),
        });
    }
    if let Some(g) = &chi.gradient {
        if g.len() != n || g.iter().any(|row| row.len() != d) {
            return Err(Error::InvalidArgs("gradient of chi has the wrong shape".into()));
        }
    }
    let phases: Vec<Complex64> = chi.values.iter().map(|&x| Complex64::from_polar(1.0, -q * x)).collect();

    let mut out = model.clone();
    for field in &mut out.system.fields {
        if let Some(jet) = &mut field.jet {
            let grad = chi.gradient.as_ref().ok_or_else(|| Error::MissingJet {
                field: format!("gradient of chi (needed by `{}`)", field.label),
            })?;
            for k in 0..n {
                let psi = &field.values[k];
                let mut new_jet = jet[k].clone();
                for a in 0..d {
                    for comp in 0..psi.len() {
                        let correction = c(0.0, -q * grad[k][a]) * psi[comp];
                        new_jet[(a, comp)] = phases[k] * (jet[k][(a, comp)] + correction);
                    }
                }
                jet[k] = new_jet;
            }
        }
        for (value, phase) in field.values.iter_mut().zip(&phases) {
            *value *= *phase;
        }
    }

    let d_chi: Option<Vec<Vec<f64>>> = match (&chi.gradient, d) {
        (Some(g), _) => Some(g.clone()),
        (None, 1) => Some(
            (0..n)
                .map(|k| vec![(chi.values[(k + 1) % n] - chi.values[k]) / model.manifold.points[k].weight])
                .collect(),
        ),
        (None, _) => None,
    };
    out.potential = match (&model.potential, d_chi) {
        (Some(a), Some(dc)) => Some(
            a.iter()
                .zip(&dc)
                .map(|(ak, gk)| ak.iter().zip(gk).map(|(x, y)| x + y).collect())
                .collect(),
        ),
        (None, Some(dc)) => Some(dc),
        (None, None) => None,
        (Some(_), None) => {
            return Err(Error::MissingDescriptor(
                "gradient of chi is required to shift a potential on a chart of dimension > 1".into(),
            ))
        }
    };
    out.chi = Some(match &model.chi {
        Some(prev) => prev.iter().zip(&chi.values).map(|(a, b)| a + b).collect(),
        None => chi.values.clone(),
    });
    out.family = None;
    out.extra.push(ExtraDescriptor::Gauge {
        charge: q,
        chi: chi.values.clone(),
    });
    Ok(out)
}

/// Transport a model along a point bijection.
///
/// `perm[new] = old` names the source point of each new point and
/// `jacobians[new]` is the chart Jacobian `∂x_old/∂y_new` there. Weights,
/// coordinates and scalar data follow the points. Covariant data transform
/// with `Jᵀ`: the metric becomes `Jᵀ g J`, the potential `Jᵀ A`, and jet
/// rows `Jᵀ · jet`. Tangent fiber values transform with `J⁻¹`, their jets
/// as `Jᵀ · jet · J⁻ᵀ` (the second-derivative term of a non-constant
/// Jacobian is not represented).
pub fn apply_diffeo(model: &EffectiveModel, perm: &[usize], jacobians: &[DMatrix<f64>]) -> Result<EffectiveModel> {
    let n = model.n_points();
    let d = model.manifold.chart_dim;
    if perm.len() != n || jacobians.len() != n {
        return Err(Error::InvalidDiffeo(format!(
            "expected {n} images and Jacobians, got {} and {}",
            perm.len(),
            jacobians.len()
        )));
    }
    let mut inverse = vec![usize::MAX; n];
    for (new, &old) in perm.iter().enumerate() {
        if old >= n || inverse[old] != usize::MAX {
            return Err(Error::InvalidDiffeo("point map is not a bijection".into()));
        }
        inverse[old] = new;
    }
    let mut j_inv = Vec::with_capacity(n);
    for (k, jac) in jacobians.iter().enumerate() {
        if jac.nrows() != d || jac.ncols() != d {
            return Err(Error::InvalidDiffeo(format!("Jacobian at point {k} is not {d}x{d}")));
        }
        let inv = jac
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidDiffeo(format!("Jacobian at point {k} is singular")))?;
        j_inv.push(inv);
    }
    let to_c = |m: &DMatrix<f64>| m.map(|x| c(x, 0.0));

    let mut out = model.clone();
    out.manifold.points = perm
        .iter()
        .map(|&old| SamplePoint {
            coords: model.manifold.points[old].coords.clone(),
            weight: model.manifold.points[old].weight,
        })
        .collect();
    out.manifold.metric = model.manifold.metric.as_ref().map(|g| {
        perm.iter()
            .enumerate()
            .map(|(new, &old)| jacobians[new].transpose() * &g[old] * &jacobians[new])
            .collect()
    });
    out.manifold.neighbors = model.manifold.neighbors.as_ref().map(|lists| {
        perm.iter()
            .map(|&old| lists[old].iter().map(|&(j, dist)| (inverse[j], dist)).collect())
            .collect()
    });
    out.potential = model.potential.as_ref().map(|a| {
        perm.iter()
            .enumerate()
            .map(|(new, &old)| {
                let v = nalgebra::DVector::from_column_slice(&a[old]);
                (jacobians[new].transpose() * v).iter().copied().collect()
            })
            .collect()
    });
    out.chi = model.chi.as_ref().map(|chi| perm.iter().map(|&old| chi[old]).collect());
    for kernel in out.kernels.values_mut() {
        let src = kernel.clone();
        *kernel = perm.iter().map(|&old| src[old]).collect();
    }

    let tangent = model.system.fiber == FiberKind::Tangent;
    for (field, src) in out.system.fields.iter_mut().zip(&model.system.fields) {
        field.values = perm
            .iter()
            .enumerate()
            .map(|(new, &old)| {
                if tangent {
                    to_c(&j_inv[new]) * &src.values[old]
                } else {
                    src.values[old].clone()
                }
            })
            .collect();
        field.jet = src.jet.as_ref().map(|jet| {
            perm.iter()
                .enumerate()
                .map(|(new, &old)| {
                    let rows: CMat = to_c(&jacobians[new].transpose()) * &jet[old];
                    if tangent {
                        rows * to_c(&j_inv[new].transpose())
                    } else {
                        rows
                    }
                })
                .collect()
        });
    }
    out.family = None;
    out.extra.push(ExtraDescriptor::Diffeo {
        perm: perm.to_vec(),
        source_points: n,
    });
    Ok(out)
}
