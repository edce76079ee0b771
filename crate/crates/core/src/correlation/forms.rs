//! Scalar products on the reference system and pointwise Hermitian forms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMat};
use crate::model::{EffectiveModel, FiberKind};

/// Global scalar product on the span of the reference fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ScalarProductSpec {
    /// `∫ ⟨ψ_i, ψ_j⟩ dμ` with the fiber pairing (metric for tangent fibers).
    L2,
    /// `∫ (⟨ψ_i, ψ_j⟩ + g⁻¹(∇ψ_i, ∇ψ_j)) dμ`.
    SobolevH1,
    /// Weighted Sobolev product; `weights[r]` multiplies the order-`r`
    /// term. Only orders 0 and 1 are available since jets are first order.
    SobolevHk { k: usize, weights: Vec<f64> },
    /// `∫ κ(x) ⟨ψ_i, ψ_j⟩ dμ` with `κ` a named per-point kernel.
    WeightedCustom { kernel: String },
}

/// Pointwise Hermitian form `b_x` on the fibers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LocalFormSpec {
    /// `g_x(ψ_i, ψ_j)` on tangent fibers.
    MetricOnFiber,
    /// `g_x⁻¹(∇ψ_i, ∇ψ_j)`.
    GradientForm,
    /// `conj(ψ_i(x)) · ψ_j(x)`.
    PointwiseSesquilinear,
    /// Volume-weighted mean of `inner` over `{y : d(x, y) < epsilon}`.
    EpsilonAveraged { inner: Box<LocalFormSpec>, epsilon: f64 },
}

fn require_jets(model: &EffectiveModel) -> Result<()> {
    match model.system.fields.iter().find(|f| f.jet.is_none()) {
        Some(f) => Err(Error::MissingJet { field: f.label.clone() }),
        None => Ok(()),
    }
}

impl ScalarProductSpec {
    pub(crate) fn check_requirements(&self, model: &EffectiveModel) -> Result<()> {
        match self {
            ScalarProductSpec::L2 => Ok(()),
            ScalarProductSpec::SobolevH1 => require_jets(model),
            ScalarProductSpec::SobolevHk { k, weights } => {
                if *k > 1 {
                    return Err(Error::Unsupported(format!(
                        "Sobolev order {k} needs derivatives beyond the first-order jets"
                    )));
                }
                if weights.len() != k + 1 || weights.iter().any(|w| !(*w >= 0.0)) {
                    return Err(Error::InvalidModel(format!(
                        "SobolevHk needs {} nonnegative weights",
                        k + 1
                    )));
                }
                if *k == 1 {
                    require_jets(model)?;
                }
                Ok(())
            }
            ScalarProductSpec::WeightedCustom { kernel } => match model.kernels.get(kernel) {
                Some(values) if values.len() == model.n_points() && values.iter().all(|v| *v >= 0.0) => Ok(()),
                Some(_) => Err(Error::InvalidModel(format!(
                    "kernel `{kernel}` must be nonnegative at every point"
                ))),
                None => Err(Error::MissingDescriptor(format!("kernel `{kernel}`"))),
            },
        }
    }
}

impl LocalFormSpec {
    pub(crate) fn check_requirements(&self, model: &EffectiveModel) -> Result<()> {
        match self {
            LocalFormSpec::PointwiseSesquilinear => Ok(()),
            LocalFormSpec::MetricOnFiber => {
                if model.manifold.metric.is_none() {
                    return Err(Error::MissingDescriptor("metric".into()));
                }
                if model.system.fiber_dim() != model.manifold.chart_dim {
                    return Err(Error::InvalidModel(
                        "MetricOnFiber needs fibers of the chart dimension".into(),
                    ));
                }
                Ok(())
            }
            LocalFormSpec::GradientForm => {
                if model.manifold.metric.is_none() {
                    return Err(Error::MissingDescriptor("metric".into()));
                }
                require_jets(model)
            }
            LocalFormSpec::EpsilonAveraged { inner, epsilon } => {
                if !(*epsilon > 0.0) {
                    return Err(Error::InvalidModel(format!("epsilon must be positive, got {epsilon}")));
                }
                if model.manifold.neighbors.is_none() {
                    return Err(Error::MissingDescriptor("neighbor lists".into()));
                }
                inner.check_requirements(model)
            }
        }
    }

    /// Whether `b_x(fψ, gφ) = conj(f) g b_x(ψ, φ)` for pointwise scalars.
    pub fn is_pointwise_sesquilinear(&self) -> bool {
        match self {
            LocalFormSpec::PointwiseSesquilinear | LocalFormSpec::MetricOnFiber => true,
            LocalFormSpec::GradientForm => false,
            LocalFormSpec::EpsilonAveraged { inner, .. } => inner.is_pointwise_sesquilinear(),
        }
    }
}

/// Fiber pairing matrix at point `k`: the metric for tangent fibers, the
/// identity otherwise.
fn fiber_metric(model: &EffectiveModel, k: usize) -> CMat {
    let d = model.system.fiber_dim();
    match (model.system.fiber, &model.manifold.metric) {
        (FiberKind::Tangent, Some(g)) => g[k].map(|x| c(x, 0.0)),
        _ => CMat::identity(d, d),
    }
}

/// `fiber_dim × m` matrix whose column `i` is `ψ_i(x_k)`.
fn values_at(model: &EffectiveModel, k: usize) -> CMat {
    let fields = &model.system.fields;
    let d = model.system.fiber_dim();
    CMat::from_fn(d, fields.len(), |r, i| fields[i].values[k][r])
}

/// `fiber_dim × m` matrix whose column `i` is `∂_a ψ_i(x_k)`.
fn derivative_at(model: &EffectiveModel, k: usize, a: usize) -> Result<CMat> {
    let fields = &model.system.fields;
    let d = model.system.fiber_dim();
    let mut out = CMat::zeros(d, fields.len());
    for (i, f) in fields.iter().enumerate() {
        let jet = f
            .jet
            .as_ref()
            .ok_or_else(|| Error::MissingJet { field: f.label.clone() })?;
        for r in 0..d {
            out[(r, i)] = jet[k][(a, r)];
        }
    }
    Ok(out)
}

fn value_form(model: &EffectiveModel, k: usize) -> CMat {
    let psi = values_at(model, k);
    psi.adjoint() * fiber_metric(model, k) * psi
}

fn gradient_form(model: &EffectiveModel, k: usize) -> Result<CMat> {
    let d = model.manifold.chart_dim;
    let g_inv = model.manifold.inverse_metric(k)?;
    let pairing = fiber_metric(model, k);
    let derivs = (0..d).map(|a| derivative_at(model, k, a)).collect::<Result<Vec<_>>>()?;
    let m = model.system.len();
    let mut out = CMat::zeros(m, m);
    for a in 0..d {
        let left = derivs[a].adjoint() * &pairing;
        for b in 0..d {
            if g_inv[(a, b)] != 0.0 {
                out += (&left * &derivs[b]) * c(g_inv[(a, b)], 0.0);
            }
        }
    }
    Ok(out)
}

/// Integrand of the model's scalar product at point `k` (before weighting).
pub(crate) fn gram_integrand(model: &EffectiveModel, k: usize) -> Result<CMat> {
    match &model.scalar_product {
        ScalarProductSpec::L2 => Ok(value_form(model, k)),
        ScalarProductSpec::SobolevH1 => Ok(value_form(model, k) + gradient_form(model, k)?),
        ScalarProductSpec::SobolevHk { k: order, weights } => {
            let mut out = value_form(model, k) * c(weights[0], 0.0);
            if *order >= 1 {
                out += gradient_form(model, k)? * c(weights[1], 0.0);
            }
            Ok(out)
        }
        ScalarProductSpec::WeightedCustom { kernel } => {
            let kappa = model
                .kernels
                .get(kernel)
                .ok_or_else(|| Error::MissingDescriptor(format!("kernel `{kernel}`")))?;
            Ok(value_form(model, k) * c(kappa[k], 0.0))
        }
    }
}

/// `B_ij = b_x(ψ_i(x), ψ_j(x))` at point `point`.
pub fn local_form_matrix(model: &EffectiveModel, point: usize, spec: &LocalFormSpec) -> Result<CMat> {
    if point >= model.n_points() {
        return Err(Error::InvalidArgs(format!("point {point} out of range")));
    }
    match spec {
        LocalFormSpec::PointwiseSesquilinear => {
            let psi = values_at(model, point);
            Ok(psi.adjoint() * psi)
        }
        LocalFormSpec::MetricOnFiber => {
            let g = model
                .manifold
                .metric
                .as_ref()
                .ok_or_else(|| Error::MissingDescriptor("metric".into()))?;
            let psi = values_at(model, point);
            if psi.nrows() != g[point].nrows() {
                return Err(Error::InvalidModel(
                    "MetricOnFiber needs fibers of the chart dimension".into(),
                ));
            }
            Ok(psi.adjoint() * g[point].map(|x| c(x, 0.0)) * psi)
        }
        LocalFormSpec::GradientForm => gradient_form(model, point),
        LocalFormSpec::EpsilonAveraged { inner, epsilon } => {
            let neighbors = model
                .manifold
                .neighbors
                .as_ref()
                .ok_or_else(|| Error::MissingDescriptor("neighbor lists".into()))?;
            let mut ball: Vec<usize> = Vec::new();
            if 0.0 < *epsilon {
                ball.push(point);
            }
            ball.extend(
                neighbors[point]
                    .iter()
                    .filter(|&&(j, d)| j != point && d < *epsilon)
                    .map(|&(j, _)| j),
            );
            ball.sort_unstable();
            ball.dedup();
            let volume: f64 = ball.iter().map(|&j| model.manifold.points[j].weight).sum();
            if ball.is_empty() || !(volume > 0.0) {
                return Err(Error::EmptyBall { point });
            }
            if let [only] = ball[..] {
                return local_form_matrix(model, only, inner);
            }
            let m = model.system.len();
            let mut acc = CMat::zeros(m, m);
            for &j in &ball {
                acc += local_form_matrix(model, j, inner)? * c(model.manifold.points[j].weight, 0.0);
            }
            Ok(acc.unscale(volume))
        }
    }
}
