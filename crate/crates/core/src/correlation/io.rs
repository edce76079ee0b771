//! JSON form of correlation geometries.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{c, CMat};
use crate::operator_space::{HermitianOperator, SignatureBound};

use super::measure::{Atom, CorrelationGeometry, CorrelationMeasure};

/// Aggregation tolerance; infinity is written as the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggTol(pub f64);

impl Serialize for AggTol {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for AggTol {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(AggTol(x)),
            Repr::Text(t) if t == "inf" => Ok(AggTol(f64::INFINITY)),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("bad agg_tol `{t}`"))),
        }
    }
}

/// Row-major list of `[re, im]` pairs.
pub fn matrix_to_pairs(m: &CMat) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            out.push([z.re, z.im]);
        }
    }
    out
}

pub fn pairs_to_matrix(pairs: &[[f64; 2]], dim: usize) -> Result<CMat> {
    if pairs.len() != dim * dim {
        return Err(Error::InvalidArgs(format!(
            "expected {} matrix entries, found {}",
            dim * dim,
            pairs.len()
        )));
    }
    Ok(CMat::from_fn(dim, dim, |i, j| {
        let [re, im] = pairs[i * dim + j];
        c(re, im)
    }))
}

/// Square dimension of a row-major pair list.
pub fn pairs_dim(pairs: &[[f64; 2]]) -> Result<usize> {
    let dim = (pairs.len() as f64).sqrt().round() as usize;
    if dim * dim != pairs.len() || dim == 0 {
        return Err(Error::InvalidArgs(format!(
            "{} entries do not form a square matrix",
            pairs.len()
        )));
    }
    Ok(dim)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomFile {
    pub weight: f64,
    pub matrix: Vec<[f64; 2]>,
}

/// Origin of a mixed geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub tau: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aligner: Option<Vec<[f64; 2]>>,
    /// SHA-256 of the parents' canonical JSON, first `g1` then `g2`.
    pub parents: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryFile {
    pub f: usize,
    pub p: usize,
    pub q: usize,
    pub atoms: Vec<AtomFile>,
    pub agg_tol: AggTol,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl GeometryFile {
    pub fn from_geometry(geom: &CorrelationGeometry) -> Self {
        Self {
            f: geom.f,
            p: geom.bound.p,
            q: geom.bound.q,
            atoms: geom
                .atoms()
                .iter()
                .map(|a| AtomFile {
                    weight: a.weight,
                    matrix: matrix_to_pairs(a.operator.entries()),
                })
                .collect(),
            agg_tol: AggTol(geom.measure.agg_tol),
            provenance: None,
        }
    }

    pub fn into_geometry(self) -> Result<CorrelationGeometry> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| {
                Ok(Atom::new(
                    HermitianOperator::new(pairs_to_matrix(&a.matrix, self.f)?)?,
                    a.weight,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let measure = CorrelationMeasure {
            atoms,
            agg_tol: self.agg_tol.0,
        };
        CorrelationGeometry::with_bound(self.f, SignatureBound::new(self.p, self.q), measure)
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgs(format!("geometry file: {e}")))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("geometry serializes")
    }
}

impl CorrelationGeometry {
    pub fn from_json_str(text: &str) -> Result<Self> {
        GeometryFile::parse(text)?.into_geometry()
    }

    pub fn to_json_string(&self) -> String {
        GeometryFile::from_geometry(self).to_json_string()
    }
}
