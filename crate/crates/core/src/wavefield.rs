//! Scalar free-space propagation and reference waves.
//!
//! Time dependence is `exp(-jωt)` throughout, so the outgoing free-space
//! Green's function is `exp(+jkd) / (4πd)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{CMat, Error, Point3, Result, C64};

/// Identifies the point set a field or matrix is sampled on.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryTag {
    Hologram,
    Sensor,
    Particles,
    Custom(String),
}

/// Complex samples of a scalar field on a tagged point set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexField {
    #[serde(with = "crate::store::complex_values")]
    pub values: Vec<C64>,
    pub tag: GeometryTag,
}

impl ComplexField {
    pub fn new(values: Vec<C64>, tag: GeometryTag) -> Self {
        Self { values, tag }
    }

    pub fn zeros(len: usize, tag: GeometryTag) -> Self {
        Self::new(vec![C64::new(0.0, 0.0); len], tag)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// The field as an `n x 1` column.
    pub fn to_column(&self) -> CMat {
        CMat::from_fn(self.values.len(), 1, |i, _| self.values[i])
    }

    pub fn from_column(col: &CMat, tag: GeometryTag) -> Self {
        Self::new((0..col.nrows()).map(|i| col[(i, 0)]).collect(), tag)
    }
}

pub(crate) fn norm(values: &[C64]) -> f64 {
    values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Dense free-space propagator between two point sets.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationMatrix {
    /// Rows are observation points, columns are source points.
    pub entries: CMat,
    pub source: GeometryTag,
    pub observation: GeometryTag,
}

/// Outgoing scalar Green's function between two distinct points.
pub fn green(src: &Point3, obs: &Point3, k: f64) -> Result<C64> {
    let d = distance(src, obs);
    if d == 0.0 {
        return Err(Error::CoincidentPoints {
            source_index: 0,
            observation_index: 0,
        });
    }
    Ok(green_at(d, k))
}

#[inline]
pub(crate) fn green_at(d: f64, k: f64) -> C64 {
    C64::from_polar(1.0 / (4.0 * PI * d), k * d)
}

#[inline]
pub(crate) fn distance(a: &Point3, b: &Point3) -> f64 {
    let dx = b[0] - a[0];
    let dy = b[1] - a[1];
    let dz = b[2] - a[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// `entries[(n, m)] = green(src[m], obs[n], k)`.
pub fn propagation_matrix(
    src: &[Point3],
    obs: &[Point3],
    k: f64,
    source: GeometryTag,
    observation: GeometryTag,
) -> Result<PropagationMatrix> {
    for (n, o) in obs.iter().enumerate() {
        if let Some(m) = src.iter().position(|s| distance(s, o) == 0.0) {
            return Err(Error::CoincidentPoints {
                source_index: m,
                observation_index: n,
            });
        }
    }
    let entries = CMat::from_fn(obs.len(), src.len(), |n, m| {
        green_at(distance(&src[m], &obs[n]), k)
    });
    Ok(PropagationMatrix {
        entries,
        source,
        observation,
    })
}

/// Ideal off-axis plane reference wave.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceWave {
    pub amplitude: f64,
    /// Direction cosine along x.
    pub tilt_x: f64,
    /// Direction cosine along z.
    pub tilt_z: f64,
    pub plane: GeometryTag,
}

impl ReferenceWave {
    pub fn new(amplitude: f64, tilt_x: f64, tilt_z: f64, plane: GeometryTag) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "reference amplitude {amplitude} must be positive"
            )));
        }
        if !(tilt_x.abs() < 1.0 && tilt_z.abs() < 1.0 && tilt_x * tilt_x + tilt_z * tilt_z < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "reference tilt ({tilt_x}, {tilt_z}) is not a propagating direction"
            )));
        }
        Ok(Self {
            amplitude,
            tilt_x,
            tilt_z,
            plane,
        })
    }

    /// Same wave re-targeted at another plane.
    pub fn on_plane(&self, plane: GeometryTag) -> Self {
        Self {
            plane,
            ..self.clone()
        }
    }
}

/// `amplitude * exp(+jk(αx x + αz z))` at every point.
pub fn reference_field(reference: &ReferenceWave, points: &[Point3], k: f64) -> ComplexField {
    let values = points
        .iter()
        .map(|p| {
            C64::from_polar(
                reference.amplitude,
                k * (reference.tilt_x * p[0] + reference.tilt_z * p[2]),
            )
        })
        .collect();
    ComplexField::new(values, reference.plane.clone())
}
