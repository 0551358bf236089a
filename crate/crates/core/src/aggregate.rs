//! Holistic descriptors built from many vectors.
//!
//! Three flavours:
//!
//! * [`bundle_holistic`]: the plain sum of already-preprocessed descriptors.
//! * [`typed_bundle`]: each descriptor is bound to a random type symbol before
//!   summing, so that an approximation of it can later be recovered with
//!   [`recover_typed`].
//! * [`aggregate_local`]: every local descriptor is bound to the encoding of
//!   its image position and the results are summed. Comparing two such
//!   vectors approximates an exhaustive comparison of all feature pairs in
//!   which a pair only counts when both descriptors and positions are similar.
//!
//! Holistic vectors are kept unnormalized; [`compare`] normalizes.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::hypervector::{bind, bundle, cosine, HdVector, SymbolTable};
use crate::position::{make_basis_bank, Axis, BasisBank};
use crate::preprocess::{
    mean, normalize_features, standardize_projected, subtract_center, CenteringMode, PreparedFeatures,
    ProjectionSpec,
};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescriptorKind {
    Bundled,
    Typed,
    LocalPose,
}

impl DescriptorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DescriptorKind::Bundled => "bundled",
            DescriptorKind::Typed => "typed",
            DescriptorKind::LocalPose => "local_pose",
        }
    }
}

impl fmt::Display for DescriptorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DescriptorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bundled" => Ok(DescriptorKind::Bundled),
            "typed" => Ok(DescriptorKind::Typed),
            "local_pose" => Ok(DescriptorKind::LocalPose),
            other => Err(Error::invalid(format!("unknown descriptor kind `{other}`"))),
        }
    }
}

/// Everything that must agree for two holistic vectors to be comparable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EncoderMeta {
    pub dim: usize,
    pub seed: u64,
    pub n_x: usize,
    pub n_y: usize,
    /// Maximum number of features per image; 0 means unlimited.
    pub budget: usize,
    pub centering: CenteringMode,
    /// `None` when descriptors are used without projection.
    pub projection_seed: Option<u64>,
}

impl EncoderMeta {
    pub const DEFAULT_DIM: usize = 4096;
    pub const DEFAULT_NX: usize = 4;
    pub const DEFAULT_NY: usize = 6;
    pub const DEFAULT_BUDGET: usize = 200;

    /// Default operating point for `seed`, with projection enabled.
    pub fn new(seed: u64) -> Self {
        EncoderMeta {
            dim: Self::DEFAULT_DIM,
            seed,
            n_x: Self::DEFAULT_NX,
            n_y: Self::DEFAULT_NY,
            budget: Self::DEFAULT_BUDGET,
            centering: CenteringMode::Image,
            projection_seed: Some(seed::derive(seed, "projection")),
        }
    }

    /// Canonical single-line text form, embedded in every output file.
    pub fn fingerprint(&self) -> String {
        let projection = match self.projection_seed {
            Some(s) => s.to_string(),
            None => "off".to_owned(),
        };
        format!(
            "d={};seed={};nx={};ny={};budget={};centering={};projection={}",
            self.dim, self.seed, self.n_x, self.n_y, self.budget, self.centering, projection
        )
    }

    pub fn parse_fingerprint(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("malformed fingerprint `{s}`"));
        let mut meta = EncoderMeta::new(0);
        let mut seen = 0;
        for part in s.split(';') {
            let (key, value) = part.split_once('=').ok_or_else(bad)?;
            let num = |v: &str| v.parse::<u64>().map_err(|_| bad());
            match key {
                "d" => meta.dim = num(value)? as usize,
                "seed" => meta.seed = num(value)?,
                "nx" => meta.n_x = num(value)? as usize,
                "ny" => meta.n_y = num(value)? as usize,
                "budget" => meta.budget = num(value)? as usize,
                "centering" => meta.centering = value.parse()?,
                "projection" => {
                    meta.projection_seed = if value == "off" { None } else { Some(num(value)?) }
                }
                _ => return Err(bad()),
            }
            seen += 1;
        }
        if seen != 7 {
            return Err(bad());
        }
        Ok(meta)
    }
}

impl fmt::Display for EncoderMeta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.fingerprint())
    }
}

/// One image (or one multi-descriptor entity) as a single vector.
#[derive(Debug, Clone, PartialEq)]
pub struct HolisticDescriptor {
    pub id: String,
    pub vector: HdVector,
    pub kind: DescriptorKind,
    pub meta: EncoderMeta,
    /// Set for images without features; the vector is then all zeros.
    pub degenerate: bool,
}

impl HolisticDescriptor {
    /// Kind and encoder configuration in one string.
    pub fn fingerprint(&self) -> String {
        format!("kind={};{}", self.kind, self.meta.fingerprint())
    }

    pub fn check_compatible(&self, other: &HolisticDescriptor) -> Result<()> {
        if self.kind != other.kind || self.meta != other.meta {
            return Err(Error::FingerprintMismatch {
                left: self.fingerprint(),
                right: other.fingerprint(),
            });
        }
        Ok(())
    }
}

/// Cosine between two holistic descriptors with matching fingerprints.
pub fn compare(a: &HolisticDescriptor, b: &HolisticDescriptor) -> Result<f64> {
    a.check_compatible(b)?;
    cosine(&a.vector, &b.vector)
}

fn bare_meta(dim: usize, table_seed: u64) -> EncoderMeta {
    EncoderMeta {
        dim,
        projection_seed: None,
        ..EncoderMeta::new(table_seed)
    }
}

/// Plain sum of preprocessed descriptors.
pub fn bundle_holistic(hs: &[HdVector]) -> Result<HolisticDescriptor> {
    let vector = bundle(hs)?;
    Ok(HolisticDescriptor {
        id: String::new(),
        meta: bare_meta(vector.dim(), 0),
        vector,
        kind: DescriptorKind::Bundled,
        degenerate: false,
    })
}

fn type_symbol_name(type_name: &str) -> String {
    format!("type/{type_name}")
}

/// `⊕ T_i ⊗ H_i` over named descriptor types.
pub fn typed_bundle(table: &SymbolTable, pairs: &[(&str, &HdVector)]) -> Result<HolisticDescriptor> {
    if pairs.is_empty() {
        return Err(Error::Empty("typed bundle input"));
    }
    let mut seen = HashSet::new();
    for (name, _) in pairs {
        if !seen.insert(*name) {
            return Err(Error::DuplicateType((*name).to_owned()));
        }
    }
    let bound = pairs
        .iter()
        .map(|(name, h)| bind(&*table.symbol(&type_symbol_name(name))?, h))
        .collect::<Result<Vec<_>>>()?;
    Ok(HolisticDescriptor {
        id: String::new(),
        meta: bare_meta(table.dim(), table.master_seed()),
        vector: bundle(&bound)?,
        kind: DescriptorKind::Typed,
        degenerate: false,
    })
}

/// Approximate recovery of the descriptor stored under `type_name`.
///
/// Unknown names are not an error: the result is then quasi-orthogonal to
/// every stored descriptor.
pub fn recover_typed(table: &SymbolTable, h: &HolisticDescriptor, type_name: &str) -> Result<HdVector> {
    if h.kind != DescriptorKind::Typed {
        return Err(Error::KindMismatch {
            expected: DescriptorKind::Typed.as_str(),
            found: h.kind.as_str(),
        });
    }
    bind(&*table.symbol(&type_symbol_name(type_name))?, &h.vector)
}

/// Vector-level operations performed by one aggregation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounts {
    /// Vector additions while bundling.
    pub sums: usize,
    /// Elementwise vector multiplications (pose binding plus descriptor binding).
    pub multiplications: usize,
    /// Splices of two basis vectors inside scalar encoding.
    pub concatenations: usize,
}

/// Binds every prepared descriptor to its pose and bundles the results.
///
/// Returns `None` for an empty input.
pub fn bind_and_bundle(
    prepared: &PreparedFeatures,
    bx: &BasisBank,
    by: &BasisBank,
) -> Result<(Option<HdVector>, OpCounts)> {
    let mut counts = OpCounts::default();
    let mut acc: Option<HdVector> = None;
    for (descriptor, &(x, y)) in prepared.descriptors.iter().zip(&prepared.positions) {
        let ex = bx.encode(x);
        let ey = by.encode(y);
        counts.concatenations += 2;
        let pose = bind(&ex, &ey)?;
        counts.multiplications += 1;
        let bound = bind(descriptor, &pose)?;
        counts.multiplications += 1;
        match acc.as_mut() {
            None => acc = Some(bound),
            Some(sum) => {
                sum.add_assign(&bound)?;
                counts.sums += 1;
            }
        }
    }
    Ok((acc, counts))
}

/// `L = ⊕ L_i ⊗ P_i` with per-image standardization, as a free function over
/// explicit banks. `bx` and `by` should span the image's `[1, w]` and
/// `[1, h]` ranges.
pub fn aggregate_local(
    fs: &FeatureSet,
    bx: &BasisBank,
    by: &BasisBank,
    projection: Option<&ProjectionSpec>,
) -> Result<HolisticDescriptor> {
    aggregate_local_counted(fs, bx, by, projection).map(|(h, _)| h)
}

/// [`aggregate_local`] that also reports its operation counts.
pub fn aggregate_local_counted(
    fs: &FeatureSet,
    bx: &BasisBank,
    by: &BasisBank,
    projection: Option<&ProjectionSpec>,
) -> Result<(HolisticDescriptor, OpCounts)> {
    let dim = bx.dim();
    if let Some(p) = projection {
        crate::hypervector::check_dims(dim, p.out_dim())?;
    }
    let meta = EncoderMeta {
        dim,
        seed: bx.seed(),
        n_x: bx.intervals(),
        n_y: by.intervals(),
        budget: 0,
        centering: CenteringMode::Image,
        projection_seed: projection.map(ProjectionSpec::seed),
    };
    if fs.is_empty() {
        return Ok((degenerate(&fs.image_id, meta), OpCounts::default()));
    }
    let prepared = standardize_projected(fs, projection)?;
    let (vector, counts) = bind_and_bundle(&prepared, bx, by)?;
    let vector = vector.expect("non-empty feature set");
    Ok((
        HolisticDescriptor {
            id: fs.image_id.clone(),
            vector,
            kind: DescriptorKind::LocalPose,
            meta,
            degenerate: false,
        },
        counts,
    ))
}

fn degenerate(id: &str, meta: EncoderMeta) -> HolisticDescriptor {
    HolisticDescriptor {
        id: id.to_owned(),
        vector: HdVector::zeros(meta.dim),
        kind: DescriptorKind::LocalPose,
        meta,
        degenerate: true,
    }
}

/// Shared encoder state for one run: symbol table, pose banks and projection.
///
/// All images encoded by one `LocalEncoder` are mutually comparable.
#[derive(Debug, Clone)]
pub struct LocalEncoder {
    meta: EncoderMeta,
    bank_x: BasisBank,
    bank_y: BasisBank,
    projection: Option<ProjectionSpec>,
    center: Option<HdVector>,
}

impl LocalEncoder {
    /// `in_dim` is the raw descriptor dimensionality; it is only needed when
    /// projection is enabled.
    pub fn new(meta: EncoderMeta, in_dim: usize) -> Result<Self> {
        let table = SymbolTable::new(meta.seed, meta.dim)?;
        let bank_x = make_basis_bank(&table, Axis::X, (1.0, 2.0), meta.n_x)?;
        let bank_y = make_basis_bank(&table, Axis::Y, (1.0, 2.0), meta.n_y)?;
        let projection = match meta.projection_seed {
            Some(s) => Some(ProjectionSpec::new(s, in_dim, meta.dim)?),
            None if in_dim != meta.dim => {
                return Err(Error::DimensionMismatch {
                    expected: meta.dim,
                    found: in_dim,
                })
            }
            None => None,
        };
        Ok(LocalEncoder {
            meta,
            bank_x,
            bank_y,
            projection,
            center: None,
        })
    }

    pub fn meta(&self) -> &EncoderMeta {
        &self.meta
    }

    fn select(&self, fs: &FeatureSet) -> FeatureSet {
        match self.meta.budget {
            0 => fs.clone(),
            budget => fs.select_top(budget),
        }
    }

    pub fn projection(&self) -> Option<&ProjectionSpec> {
        self.projection.as_ref()
    }

    /// Banks spanning the image `[1, w] x [1, h]`.
    pub fn banks_for(&self, width: f64, height: f64) -> Result<(BasisBank, BasisBank)> {
        // one-pixel images still need a non-degenerate range
        let bx = self.bank_x.with_range(1.0, width.max(1.0 + f64::EPSILON))?;
        let by = self.bank_y.with_range(1.0, height.max(1.0 + f64::EPSILON))?;
        Ok((bx, by))
    }

    /// Sets the population mean used in [`CenteringMode::Set`].
    pub fn set_center(&mut self, center: HdVector) -> Result<()> {
        crate::hypervector::check_dims(self.meta.dim, center.dim())?;
        self.center = Some(center);
        Ok(())
    }

    /// Mean of the projected, normalized descriptors of `sets` (budget applied),
    /// the population mean for [`CenteringMode::Set`].
    pub fn population_center<'a>(&self, sets: impl IntoIterator<Item = &'a FeatureSet>) -> Result<HdVector> {
        let mut all = Vec::new();
        for fs in sets {
            all.extend(normalize_features(&self.select(fs), self.projection())?.descriptors);
        }
        mean(&all)
    }

    /// Budget selection, projection, normalization and centering.
    pub fn prepare(&self, fs: &FeatureSet) -> Result<PreparedFeatures> {
        let fs = self.select(fs);
        match self.meta.centering {
            CenteringMode::Image => standardize_projected(&fs, self.projection()),
            CenteringMode::Set => {
                let center = self
                    .center
                    .as_ref()
                    .ok_or_else(|| Error::invalid("set centering requires a population mean"))?;
                let mut prepared = normalize_features(&fs, self.projection())?;
                subtract_center(&mut prepared, center)?;
                Ok(prepared)
            }
        }
    }

    /// Pose-bound holistic descriptor of one image.
    pub fn encode(&self, fs: &FeatureSet) -> Result<HolisticDescriptor> {
        self.encode_counted(fs).map(|(h, _)| h)
    }

    pub fn encode_counted(&self, fs: &FeatureSet) -> Result<(HolisticDescriptor, OpCounts)> {
        if fs.is_empty() {
            return Ok((degenerate(&fs.image_id, self.meta.clone()), OpCounts::default()));
        }
        let prepared = self.prepare(fs)?;
        let (bx, by) = self.banks_for(fs.width, fs.height)?;
        let (vector, counts) = bind_and_bundle(&prepared, &bx, &by)?;
        Ok((
            HolisticDescriptor {
                id: fs.image_id.clone(),
                vector: vector.expect("non-empty feature set"),
                kind: DescriptorKind::LocalPose,
                meta: self.meta.clone(),
                degenerate: false,
            },
            counts,
        ))
    }

    /// Sum of projected, L2-normalized descriptors without pose binding and
    /// without per-image centering (which would cancel the sum exactly).
    ///
    /// This is the unbound bag-of-descriptors baseline; center the resulting
    /// holistic vectors over the database and query population before
    /// comparing them.
    pub fn encode_unbound(&self, fs: &FeatureSet) -> Result<HolisticDescriptor> {
        let fs = self.select(fs);
        let mut meta = self.meta.clone();
        meta.centering = CenteringMode::Set;
        if fs.is_empty() {
            let mut h = degenerate(&fs.image_id, meta);
            h.kind = DescriptorKind::Bundled;
            return Ok(h);
        }
        let prepared = normalize_features(&fs, self.projection())?;
        Ok(HolisticDescriptor {
            id: fs.image_id.clone(),
            vector: bundle(&prepared.descriptors)?,
            kind: DescriptorKind::Bundled,
            meta,
            degenerate: false,
        })
    }
}

/// Subtracts the mean holistic vector of `hs` from each non-degenerate member.
pub fn center_holistic(hs: &mut [HolisticDescriptor]) -> Result<()> {
    let live: Vec<HdVector> = hs.iter().filter(|h| !h.degenerate).map(|h| h.vector.clone()).collect();
    if live.is_empty() {
        return Ok(());
    }
    let m = mean(&live)?;
    for h in hs.iter_mut().filter(|h| !h.degenerate) {
        h.vector.sub_assign(&m)?;
    }
    Ok(())
}
