use crate::error::{Error, Result};

/// One local feature: a raw descriptor at an image position.
#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub descriptor: Vec<f32>,
    pub x: f64,
    pub y: f64,
    pub score: f64,
}

/// All local features of one image.
///
/// Coordinates use a top-left pixel origin with `x` in `[1, width]` and `y`
/// in `[1, height]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub image_id: String,
    pub width: f64,
    pub height: f64,
    pub features: Vec<Feature>,
}

impl FeatureSet {
    pub fn new(image_id: impl Into<String>, width: f64, height: f64) -> Self {
        FeatureSet {
            image_id: image_id.into(),
            width,
            height,
            features: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Descriptor dimensionality, or `None` for an empty set.
    pub fn descriptor_dim(&self) -> Option<usize> {
        self.features.first().map(|f| f.descriptor.len())
    }

    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<()> {
        if !(self.width.is_finite() && self.width > 0.0 && self.height.is_finite() && self.height > 0.0) {
            return Err(Error::invalid(format!(
                "image `{}` has invalid size {}x{}",
                self.image_id, self.width, self.height
            )));
        }
        let Some(dim) = self.descriptor_dim() else {
            return Ok(());
        };
        if dim == 0 {
            return Err(Error::invalid("descriptors must have at least one dimension"));
        }
        for (i, f) in self.features.iter().enumerate() {
            if f.descriptor.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: f.descriptor.len(),
                });
            }
            if !(f.x.is_finite() && f.y.is_finite() && f.score.is_finite()) || f.score < 0.0 {
                return Err(Error::invalid(format!(
                    "feature {i} of `{}` has invalid position or score",
                    self.image_id
                )));
            }
            if let Some(index) = f.descriptor.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { index });
            }
        }
        Ok(())
    }

    /// Keeps the `budget` highest-scoring features, preserving input order
    /// among the survivors. Equal scores favour earlier features.
    pub fn select_top(&self, budget: usize) -> FeatureSet {
        if self.features.len() <= budget {
            return self.clone();
        }
        let mut order: Vec<usize> = (0..self.features.len()).collect();
        // stable sort keeps input order among equal scores
        order.sort_by(|&a, &b| self.features[b].score.total_cmp(&self.features[a].score));
        let mut keep = order[..budget].to_vec();
        keep.sort_unstable();
        FeatureSet {
            image_id: self.image_id.clone(),
            width: self.width,
            height: self.height,
            features: keep.into_iter().map(|i| self.features[i].clone()).collect(),
        }
    }
}
