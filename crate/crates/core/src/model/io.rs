//! JSON model files.
//!
//! ```json
//! {
//!   "manifold": { "points": [[θ0], [θ1]], "weights": [w0, w1],
//!                 "metric": [[[g]], [[g]]], "neighbors": [[[1, 0.1]], [[0, 0.1]]] },
//!   "fiber": "scalar",
//!   "fields": [{ "label": "ψ", "fiber_dim": 1,
//!                "values": [[[re, im]], [[re, im]]],
//!                "jet": [[[[re, im]]], [[[re, im]]]] }],
//!   "descriptors": { "A": [[a0], [a1]], "chi": [c0, c1], "mass": 0.0, "charge": 0.0 },
//!   "scalar_product": "L2",
//!   "local_form": "PointwiseSesquilinear"
//! }
//! ```
//!
//! `metric`, `neighbors`, `jet`, `A`, `chi`, `fiber` and `kernels` are optional.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{CVec, DiscreteManifold, EffectiveModel, FiberKind, ReferenceField, ReferenceSystem, SamplePoint};
use crate::correlation::{LocalFormSpec, ScalarProductSpec};
use crate::error::{Error, Result};
use crate::linalg::{c, CMat};

type Complex = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldFile {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighbors: Option<Vec<Vec<(usize, f64)>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldFile {
    pub label: String,
    pub fiber_dim: usize,
    pub values: Vec<Vec<Complex>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jet: Option<Vec<Vec<Vec<Complex>>>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescriptorsFile {
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<Vec<f64>>,
    #[serde(default)]
    pub mass: f64,
    #[serde(default)]
    pub charge: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub manifold: ManifoldFile,
    #[serde(default)]
    pub fiber: FiberKind,
    pub fields: Vec<FieldFile>,
    #[serde(default)]
    pub descriptors: DescriptorsFile,
    pub scalar_product: ScalarProductSpec,
    pub local_form: LocalFormSpec,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub kernels: BTreeMap<String, Vec<f64>>,
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidModel(format!("model file: {e}")))
    }

    pub fn into_model(self) -> Result<EffectiveModel> {
        let m = self.manifold;
        if m.points.len() != m.weights.len() {
            return Err(Error::InvalidModel(format!(
                "{} points but {} weights",
                m.points.len(),
                m.weights.len()
            )));
        }
        let chart_dim = m.points.first().map_or(0, |p| p.len());
        let metric = m
            .metric
            .map(|gs| {
                gs.into_iter()
                    .map(|rows| {
                        if rows.len() != chart_dim || rows.iter().any(|r| r.len() != chart_dim) {
                            return Err(Error::InvalidModel("metric entry has the wrong shape".into()));
                        }
                        Ok(DMatrix::from_fn(chart_dim, chart_dim, |i, j| rows[i][j]))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        let manifold = DiscreteManifold {
            chart_dim,
            points: m
                .points
                .into_iter()
                .zip(m.weights)
                .map(|(coords, weight)| SamplePoint { coords, weight })
                .collect(),
            metric,
            neighbors: m.neighbors,
        };
        let fields = self
            .fields
            .into_iter()
            .map(|f| {
                if f.values.iter().any(|v| v.len() != f.fiber_dim) {
                    return Err(Error::InvalidModel(format!(
                        "field `{}` values do not match fiber_dim {}",
                        f.label, f.fiber_dim
                    )));
                }
                let values = f
                    .values
                    .iter()
                    .map(|v| CVec::from_iterator(v.len(), v.iter().map(|z| c(z[0], z[1]))))
                    .collect();
                let jet = f
                    .jet
                    .map(|jet| {
                        jet.iter()
                            .map(|rows| {
                                if rows.len() != chart_dim || rows.iter().any(|r| r.len() != f.fiber_dim) {
                                    return Err(Error::InvalidModel(format!(
                                        "jet of field `{}` has the wrong shape",
                                        f.label
                                    )));
                                }
                                Ok(CMat::from_fn(chart_dim, f.fiber_dim, |a, k| {
                                    c(rows[a][k][0], rows[a][k][1])
                                }))
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .transpose()?;
                Ok(ReferenceField {
                    label: f.label,
                    values,
                    jet,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut model = EffectiveModel::new(
            manifold,
            ReferenceSystem {
                fiber: self.fiber,
                fields,
            },
            self.scalar_product,
            self.local_form,
        );
        model.potential = self.descriptors.potential;
        model.chi = self.descriptors.chi;
        model.mass = self.descriptors.mass;
        model.charge = self.descriptors.charge;
        model.kernels = self.kernels;
        model.validate()?;
        Ok(model)
    }

    pub fn from_model(model: &EffectiveModel) -> Self {
        let pair = |z: &num_complex::Complex64| [z.re, z.im];
        ModelFile {
            manifold: ManifoldFile {
                points: model.manifold.points.iter().map(|p| p.coords.clone()).collect(),
                weights: model.manifold.weights().collect(),
                metric: model.manifold.metric.as_ref().map(|gs| {
                    gs.iter()
                        .map(|g| (0..g.nrows()).map(|i| g.row(i).iter().copied().collect()).collect())
                        .collect()
                }),
                neighbors: model.manifold.neighbors.clone(),
            },
            fiber: model.system.fiber,
            fields: model
                .system
                .fields
                .iter()
                .map(|f| FieldFile {
                    label: f.label.clone(),
                    fiber_dim: f.fiber_dim(),
                    values: f.values.iter().map(|v| v.iter().map(pair).collect()).collect(),
                    jet: f.jet.as_ref().map(|jet| {
                        jet.iter()
                            .map(|j| (0..j.nrows()).map(|a| j.row(a).iter().map(pair).collect()).collect())
                            .collect()
                    }),
                })
                .collect(),
            descriptors: DescriptorsFile {
                potential: model.potential.clone(),
                chi: model.chi.clone(),
                mass: model.mass,
                charge: model.charge,
            },
            scalar_product: model.scalar_product.clone(),
            local_form: model.local_form.clone(),
            kernels: model.kernels.clone(),
        }
    }
}

impl EffectiveModel {
    pub fn from_json_str(text: &str) -> Result<Self> {
        ModelFile::parse(text)?.into_model()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&ModelFile::from_model(self)).expect("model file serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{circle_trig_pair, torus_tetrads};

    #[test]
    fn generated_models_survive_the_file_format() {
        for model in [circle_trig_pair(8).unwrap(), torus_tetrads(2).unwrap()] {
            let back = EffectiveModel::from_json_str(&model.to_json_string()).unwrap();
            assert_eq!(back.manifold, model.manifold);
            assert_eq!(back.system, model.system);
            assert_eq!(back.local_form, model.local_form);
        }
    }

    #[test]
    fn minimal_file_parses() {
        let text = r#"{
            "manifold": {"points": [[0.0], [1.0]], "weights": [0.5, 0.5]},
            "fields": [{"label": "one", "fiber_dim": 1, "values": [[[1.0, 0.0]], [[1.0, 0.0]]]}],
            "descriptors": {"mass": 1.0, "charge": 0.0},
            "scalar_product": "L2",
            "local_form": "PointwiseSesquilinear"
        }"#;
        let m = EffectiveModel::from_json_str(text).unwrap();
        assert_eq!(m.n_points(), 2);
        assert_eq!(m.mass, 1.0);
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(matches!(
            EffectiveModel::from_json_str("{"),
            Err(Error::InvalidModel(_))
        ));
        let bad_weights = r#"{
            "manifold": {"points": [[0.0]], "weights": [0.5, 0.5]},
            "fields": [{"label": "one", "fiber_dim": 1, "values": [[[1.0, 0.0]]]}],
            "scalar_product": "L2", "local_form": "PointwiseSesquilinear"
        }"#;
        assert!(EffectiveModel::from_json_str(bad_weights).is_err());
        let gradient_without_jets = r#"{
            "manifold": {"points": [[0.0], [1.0]], "weights": [0.5, 0.5]},
            "fields": [{"label": "one", "fiber_dim": 1, "values": [[[1.0, 0.0]], [[1.0, 0.0]]]}],
            "scalar_product": "SobolevH1", "local_form": "PointwiseSesquilinear"
        }"#;
        assert!(matches!(
            EffectiveModel::from_json_str(gradient_without_jets),
            Err(Error::MissingJet { .. })
        ));
    }
}
