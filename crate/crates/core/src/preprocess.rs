//! Descriptor preprocessing: random projection, L2 normalization and
//! mean-centering.
//!
//! The pipeline order is fixed: project (when configured), normalize, center.
//! Centering either subtracts the mean over one image's descriptors
//! ([`CenteringMode::Image`]) or a mean over a whole population of
//! descriptors supplied by the caller ([`CenteringMode::Set`]).

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::hypervector::{check_dims, dot, HdVector};
use crate::seed;

/// Norms at or below this are treated as zero.
pub const NORM_EPSILON: f64 = 1e-12;

/// Gaussian random projection `in_dim -> out_dim`.
///
/// Entries are i.i.d. `N(0, 1 / out_dim)`, so unit inputs map to roughly unit
/// outputs. The matrix is a pure function of `(seed, in_dim, out_dim)` and is
/// regenerated rather than stored.
#[derive(Debug, Clone)]
pub struct ProjectionSpec {
    seed: u64,
    in_dim: usize,
    out_dim: usize,
    // row-major, out_dim rows
    matrix: Arc<[f64]>,
}

impl ProjectionSpec {
    pub fn new(seed: u64, in_dim: usize, out_dim: usize) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::invalid("projection dimensions must be positive"));
        }
        let mut rng = seed::stream(seed, &format!("projection/{in_dim}x{out_dim}"));
        let scale = 1.0 / (out_dim as f64).sqrt();
        let matrix: Arc<[f64]> = (0..in_dim * out_dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal) * scale)
            .collect();
        Ok(ProjectionSpec {
            seed,
            in_dim,
            out_dim,
            matrix,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.matrix[i * self.in_dim..(i + 1) * self.in_dim]
    }

    /// `M · v`.
    pub fn project(&self, v: &[f64]) -> Result<HdVector> {
        check_dims(self.in_dim, v.len())?;
        let out = self
            .matrix
            .chunks_exact(self.in_dim)
            .map(|row| dot(row, v))
            .collect();
        Ok(HdVector::from_vec_unchecked(out))
    }
}

pub fn project(spec: &ProjectionSpec, v: &[f64]) -> Result<HdVector> {
    spec.project(v)
}

/// `v / ‖v‖`; vectors with norm at most [`NORM_EPSILON`] pass through unchanged.
pub fn l2_normalize(v: &HdVector) -> HdVector {
    let mut out = v.clone();
    l2_normalize_in_place(&mut out);
    out
}

pub(crate) fn l2_normalize_in_place(v: &mut HdVector) {
    let n = v.norm();
    if n > NORM_EPSILON {
        v.divide(n);
    }
}

/// Arithmetic mean of a non-empty, uniformly sized list.
pub fn mean(vs: &[HdVector]) -> Result<HdVector> {
    let first = vs.first().ok_or(Error::Empty("mean input"))?;
    let mut acc = HdVector::zeros(first.dim());
    for v in vs {
        acc.add_assign(v)?;
    }
    acc.divide(vs.len() as f64);
    Ok(acc)
}

/// Subtracts the mean of `vs` from every element.
pub fn mean_center_set(vs: &[HdVector]) -> Result<Vec<HdVector>> {
    let m = mean(vs)?;
    vs.iter()
        .map(|v| {
            let mut c = v.clone();
            c.sub_assign(&m)?;
            Ok(c)
        })
        .collect()
}

/// Population used for mean-centering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CenteringMode {
    /// Mean over a caller-supplied population (e.g. database and queries).
    Set,
    /// Mean over the descriptors of the current image.
    #[default]
    Image,
}

impl fmt::Display for CenteringMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CenteringMode::Set => "set",
            CenteringMode::Image => "image",
        })
    }
}

impl FromStr for CenteringMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "set" => Ok(CenteringMode::Set),
            "image" => Ok(CenteringMode::Image),
            other => Err(Error::invalid(format!("unknown centering mode `{other}`"))),
        }
    }
}

/// Preprocessed local features of one image, ready for aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedFeatures {
    pub image_id: String,
    pub width: f64,
    pub height: f64,
    pub descriptors: Vec<HdVector>,
    pub positions: Vec<(f64, f64)>,
    pub scores: Vec<f64>,
}

impl PreparedFeatures {
    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }
}

fn widen(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| f64::from(x)).collect()
}

/// Projects (optionally) and L2-normalizes every descriptor, without centering.
pub fn normalize_features(fs: &FeatureSet, projection: Option<&ProjectionSpec>) -> Result<PreparedFeatures> {
    let descriptors = fs
        .features
        .iter()
        .map(|f| {
            let raw = widen(&f.descriptor);
            let mut v = match projection {
                Some(p) => p.project(&raw)?,
                None => HdVector::new(raw)?,
            };
            l2_normalize_in_place(&mut v);
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PreparedFeatures {
        image_id: fs.image_id.clone(),
        width: fs.width,
        height: fs.height,
        descriptors,
        positions: fs.features.iter().map(|f| (f.x, f.y)).collect(),
        scores: fs.features.iter().map(|f| f.score).collect(),
    })
}

/// Subtracts `center` from every descriptor in place.
pub fn subtract_center(prepared: &mut PreparedFeatures, center: &HdVector) -> Result<()> {
    for v in &mut prepared.descriptors {
        v.sub_assign(center)?;
    }
    Ok(())
}

/// L2-normalizes each descriptor, then subtracts the image's mean descriptor.
pub fn standardize_per_image(fs: &FeatureSet) -> Result<PreparedFeatures> {
    standardize_projected(fs, None)
}

/// [`standardize_per_image`] after an optional projection.
pub fn standardize_projected(fs: &FeatureSet, projection: Option<&ProjectionSpec>) -> Result<PreparedFeatures> {
    if fs.is_empty() {
        return Err(Error::Empty("feature set"));
    }
    let mut prepared = normalize_features(fs, projection)?;
    let center = mean(&prepared.descriptors)?;
    subtract_center(&mut prepared, &center)?;
    Ok(prepared)
}
